"""Least-squares state estimation and residual-based bad data detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ObservabilityError, ValidationError
from .grid import MeasurementModel

NOISELESS_RTOL = 1e-8


@dataclass(frozen=True)
class NoiseModel:
    sigma: float = 0.0
    alpha: float = 0.05

    def __post_init__(self):
        if self.sigma < 0:
            raise ValidationError("sigma must be non-negative")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")

    @classmethod
    def from_variance(cls, variance: float, alpha: float = 0.05) -> "NoiseModel":
        return cls(sigma=float(np.sqrt(variance)), alpha=alpha)


@dataclass(frozen=True)
class EstimationResult:
    x_hat: np.ndarray
    residual_norm: float
    detected: bool


def _matrix(model) -> np.ndarray:
    return model.H if isinstance(model, MeasurementModel) else np.asarray(model, dtype=float)


def _qr(H: np.ndarray):
    Q, R = np.linalg.qr(H)
    d = np.abs(np.diag(R))
    if d.size == 0 or d.min() <= H.shape[0] * np.finfo(float).eps * max(d.max(), 1.0):
        raise ObservabilityError("normal equations are singular")
    return Q, R


def estimate_state(model, z, noise: NoiseModel | None = None) -> np.ndarray:
    """Least-squares state estimate.

    With a uniform noise level the weight matrix is a scalar multiple of the
    identity and drops out, so ``noise`` only matters for validation.
    """
    H = _matrix(model)
    z = np.asarray(z, dtype=float)
    if z.shape[0] != H.shape[0]:
        raise ValidationError(f"expected {H.shape[0]} measurements, got {z.shape[0]}")
    Q, R = _qr(H)
    return np.linalg.solve(R, Q.T @ z)


def residual_norm(model, z) -> float:
    """Norm of the part of ``z`` not explained by the measurement matrix."""
    H = _matrix(model)
    z = np.asarray(z, dtype=float)
    if z.shape[0] != H.shape[0]:
        raise ValidationError(f"expected {H.shape[0]} measurements, got {z.shape[0]}")
    Q, _ = _qr(H)
    return float(np.linalg.norm(z - Q @ (Q.T @ z)))


def bdd_threshold(noise: NoiseModel, m: int, n: int, z_norm: float = 0.0) -> float:
    """Residual threshold ``sigma * sqrt(chi2_{m-n}(1 - alpha))``.

    A noiseless model falls back to ``1e-8 * max(1, ||z||)`` so that round-off
    does not raise alarms.
    """
    if m <= n:
        raise ValidationError(f"need m > n, got m={m}, n={n}")
    if noise.sigma == 0:
        return NOISELESS_RTOL * max(1.0, z_norm)
    return float(noise.sigma * np.sqrt(chi2.ppf(1.0 - noise.alpha, m - n)))


def detect(model, z, noise: NoiseModel | None = None) -> bool:
    noise = noise or NoiseModel()
    H = _matrix(model)
    z = np.asarray(z, dtype=float)
    tau = bdd_threshold(noise, H.shape[0], H.shape[1], float(np.linalg.norm(z)))
    return residual_norm(H, z) > tau


def run_estimation(model, z, noise: NoiseModel | None = None) -> EstimationResult:
    noise = noise or NoiseModel()
    H = _matrix(model)
    z = np.asarray(z, dtype=float)
    x_hat = estimate_state(H, z)
    r = float(np.linalg.norm(z - H @ x_hat))
    tau = bdd_threshold(noise, H.shape[0], H.shape[1], float(np.linalg.norm(z)))
    return EstimationResult(x_hat=x_hat, residual_norm=r, detected=r > tau)


# ---------------------------------------------------------------------------
# Estimator API: rows of X are measurement snapshots (one z per row).


class StateEstimator(TransformerMixin, BaseEstimator):
    """Maps measurement snapshots to state estimates.

    ``fit`` takes the measurement matrix (or a MeasurementModel) as ``H``;
    ``transform`` returns one estimated state row per snapshot row.
    """

    def fit(self, H, y=None):
        H = check_array(_matrix(H))
        self.Q_, self.R_ = _qr(H)
        self.n_features_in_ = H.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, ["Q_", "R_"])
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"expected {self.n_features_in_} measurements per row")
        return np.linalg.solve(self.R_, self.Q_.T @ X.T).T


class BadDataDetector(ClassifierMixin, BaseEstimator):
    """Chi-square residual test; ``predict`` returns 1 for an alarm."""

    def __init__(self, sigma: float = 0.0, alpha: float = 0.05):
        self.sigma = sigma
        self.alpha = alpha

    def fit(self, H, y=None):
        H = check_array(_matrix(H))
        self.noise_ = NoiseModel(self.sigma, self.alpha)
        self.Q_, _ = _qr(H)
        self.m_, self.n_ = H.shape
        self.n_features_in_ = self.m_
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X):
        """Residual norm minus threshold per snapshot (positive = alarm)."""
        check_is_fitted(self, ["Q_"])
        X = check_array(X)
        if X.shape[1] != self.m_:
            raise ValidationError(f"expected {self.m_} measurements per row")
        res = X.T - self.Q_ @ (self.Q_.T @ X.T)
        r = np.linalg.norm(res, axis=0)
        if self.noise_.sigma == 0:
            tau = NOISELESS_RTOL * np.maximum(1.0, np.linalg.norm(X, axis=1))
        else:
            tau = bdd_threshold(self.noise_, self.m_, self.n_)
        return r - tau

    def residuals(self, X) -> np.ndarray:
        check_is_fitted(self, ["Q_"])
        X = check_array(X)
        return np.linalg.norm(X.T - self.Q_ @ (self.Q_.T @ X.T), axis=0)

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(int)
