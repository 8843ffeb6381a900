"""Discrete-time Kalman filtering of the per-axis [x, zeta] state.

One filter instance runs per axis at the control rate, fed with the exact
zero-order-hold discretization from the model module.  Measurements are
the full state with additive zero-mean Gaussian noise, optionally
truncated to a hard bound (rejection sampling), which reproduces a
bounded-noise sensor while keeping the Gaussian filter assumptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import AxisState, dcm_of


def _check_psd(m: np.ndarray, name: str, strict: bool = False):
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2):
        raise ValueError(f"{name} must be 2x2, got {m.shape}")
    if not np.allclose(m, m.T, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    eig = np.linalg.eigvalsh(m)
    if strict and eig.min() <= 0.0:
        raise ValueError(f"{name} must be positive definite, eigenvalues {eig}")
    if not strict and eig.min() < -1e-12:
        raise ValueError(f"{name} must be positive semi-definite, eigenvalues {eig}")
    return m


@dataclass(frozen=True)
class NoiseModel:
    """Process/measurement covariances plus an optional truncation bound.

    measurement_bound is the half-width of the hard noise bound in meters;
    zero means untruncated.  An all-zero model denotes exact measurements.
    """

    process_cov: np.ndarray = field(default_factory=lambda: np.diag([1e-6, 1e-6]))
    measurement_cov: np.ndarray = field(
        default_factory=lambda: np.diag([(0.05 / 3.0) ** 2] * 2)
    )
    measurement_bound: float = 0.0

    def __post_init__(self):
        q = _check_psd(self.process_cov, "process_cov")
        r = np.asarray(self.measurement_cov, dtype=float)
        if not np.allclose(r, np.zeros((2, 2))):
            r = _check_psd(r, "measurement_cov", strict=True)
        else:
            r = r.reshape(2, 2)
        if self.measurement_bound < 0.0:
            raise ValueError("measurement_bound must be >= 0")
        object.__setattr__(self, "process_cov", q)
        object.__setattr__(self, "measurement_cov", r)

    @property
    def is_exact(self) -> bool:
        return (
            not self.process_cov.any()
            and not self.measurement_cov.any()
        )

    @classmethod
    def bounded(cls, bound: float = 0.05, process_var: float = 1e-6) -> "NoiseModel":
        """Truncated-Gaussian sensor: sigma = bound/3 so ~0.3% of mass is clipped."""
        sigma = bound / 3.0
        return cls(
            process_cov=np.diag([process_var, process_var]),
            measurement_cov=np.diag([sigma**2, sigma**2]),
            measurement_bound=bound,
        )

    @classmethod
    def zero(cls) -> "NoiseModel":
        return cls(process_cov=np.zeros((2, 2)), measurement_cov=np.zeros((2, 2)))


@dataclass
class AxisEstimate:
    """Filter state: mean [x, zeta] and covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(2)
        self.cov = _check_psd(self.cov, "cov")
        if not np.all(np.isfinite(self.mean)):
            raise ValueError("non-finite estimate mean")


def predict(
    est: AxisEstimate, A_d: np.ndarray, B_d: np.ndarray, u: float, Q_w: np.ndarray
) -> AxisEstimate:
    """Time update under input u: mean and covariance through the plant model."""
    mean = A_d @ est.mean + B_d * u
    P = A_d @ est.cov @ A_d.T + Q_w
    P = 0.5 * (P + P.T)
    return AxisEstimate(mean=mean, cov=P)


def update(
    est: AxisEstimate, y: np.ndarray, C: np.ndarray, R_v: np.ndarray
) -> AxisEstimate:
    """Measurement update, Joseph-form covariance for numerical robustness."""
    y = np.asarray(y, dtype=float).reshape(2)
    S = C @ est.cov @ C.T + R_v
    try:
        K = np.linalg.solve(S.T, (est.cov @ C.T).T).T
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular innovation covariance") from exc
    mean = est.mean + K @ (y - C @ est.mean)
    IKC = np.eye(2) - K @ C
    P = IKC @ est.cov @ IKC.T + K @ R_v @ K.T
    P = 0.5 * (P + P.T)
    return AxisEstimate(mean=mean, cov=P)


def sample_measurement(
    truth: AxisState, omega: float, noise: NoiseModel, rng: np.random.Generator
) -> np.ndarray:
    """Noisy full-state measurement y = [x, zeta] + v.

    Components are independent zero-mean Gaussians with the diagonal of the
    measurement covariance; with a positive bound, draws outside it are
    rejected and redrawn so |v| <= bound holds for every sample.
    """
    y = np.array([truth.x, dcm_of(truth, omega)])
    for i in range(2):
        sigma = math.sqrt(float(noise.measurement_cov[i, i]))
        if sigma == 0.0:
            continue
        v = rng.normal(0.0, sigma)
        if noise.measurement_bound > 0.0:
            while abs(v) > noise.measurement_bound:
                v = rng.normal(0.0, sigma)
        y[i] += v
    return y
