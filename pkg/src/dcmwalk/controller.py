"""LQR tracking control with integral action and ZMP saturation.

The per-axis [x, zeta] system is augmented with an integrator on the DCM
tracking error and the stationary optimal gain is obtained from the
continuous-time algebraic Riccati equation.  The solver is a
Newton-Kleinman iteration: starting from any stabilizing gain (pole
placement via Ackermann's formula), each step solves the closed-loop
Lyapunov equation directly on the vectorized symmetric system, which
converges quadratically to the stabilizing Riccati solution.

The commanded ZMP is feedforward (the planned ZMP) plus gain times the
tracking error; saturation to the support polygon is a separate operation
so callers can log both the raw demand and the applied command.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimator import AxisEstimate
from .model import StateSpace, build_state_space


@dataclass(frozen=True)
class LqrWeights:
    """State weight over [x error, dcm error, integral] and scalar input weight."""

    Q: np.ndarray = field(default_factory=lambda: np.diag([10.0, 100.0, 50.0]))
    r: float = 1.0

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.shape != (3, 3):
            raise ValueError(f"Q must be 3x3, got {Q.shape}")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() < -1e-12:
            raise ValueError("Q must be positive semi-definite")
        if not (self.r > 0.0):
            raise ValueError(f"r must be positive, got {self.r}")
        object.__setattr__(self, "Q", Q)

    @classmethod
    def diagonal(cls, q_com: float, q_dcm: float, q_int: float, r: float = 1.0) -> "LqrWeights":
        return cls(Q=np.diag([q_com, q_dcm, q_int]), r=r)


def augment_with_integrator(ss: StateSpace) -> tuple[np.ndarray, np.ndarray]:
    """Append the integrator state xi_dot = (zeta - zeta_des) to the system.

    In error coordinates the desired state drops out, so the augmented
    matrices are A_aug = [[A, 0], [0 1 0]] and B_aug = [B, 0]; the
    integrator contributes the eigenvalue at 0 that the gain must move.
    """
    A_aug = np.zeros((3, 3))
    A_aug[:2, :2] = ss.A
    A_aug[2, 1] = 1.0
    B_aug = np.zeros(3)
    B_aug[:2] = ss.B
    return A_aug, B_aug


def _spectral_abscissa(A: np.ndarray) -> float:
    return float(np.max(np.real(np.linalg.eigvals(A))))


def _ackermann(A: np.ndarray, B: np.ndarray, poles: np.ndarray) -> np.ndarray:
    """Single-input pole placement K so that eig(A - B K) = poles."""
    n = A.shape[0]
    ctrb = np.column_stack([np.linalg.matrix_power(A, k) @ B for k in range(n)])
    if np.linalg.cond(ctrb) > 1e12:
        raise ValueError("pair (A, B) is not controllable: cannot place poles")
    coeffs = np.poly(poles)
    phi = np.zeros_like(A)
    for m, c in enumerate(coeffs):
        phi += c * np.linalg.matrix_power(A, n - m)
    e_last = np.zeros(n)
    e_last[-1] = 1.0
    return np.linalg.solve(ctrb.T, e_last) @ phi


def _vech_index(n: int):
    idx = {}
    for i in range(n):
        for j in range(i, n):
            idx[(i, j)] = len(idx)
    return idx


def _solve_lyapunov(Acl: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Solve Acl^T P + P Acl = -W for symmetric P by direct linear solve.

    Unknowns are the n(n+1)/2 upper-triangle entries of P (6 for the
    augmented 3-state system), assembled into one dense linear system.
    """
    n = Acl.shape[0]
    idx = _vech_index(n)
    m = len(idx)
    M = np.zeros((m, m))
    rhs = np.zeros(m)
    for (i, j), row in idx.items():
        rhs[row] = -W[i, j]
        for k in range(n):
            M[row, idx[(min(k, j), max(k, j))]] += Acl[k, i]
            M[row, idx[(min(i, k), max(i, k))]] += Acl[k, j]
    vech = np.linalg.solve(M, rhs)
    P = np.zeros((n, n))
    for (i, j), row in idx.items():
        P[i, j] = P[j, i] = vech[row]
    return P


def care_residual(A, B, Q, r, P) -> float:
    """Max-abs residual of A^T P + P A - P B r^-1 B^T P + Q."""
    B = np.asarray(B, dtype=float).reshape(-1)
    PB = P @ B
    return float(np.max(np.abs(A.T @ P + P @ A - np.outer(PB, PB) / r + Q)))


def solve_care(
    A: np.ndarray, B: np.ndarray, Q: np.ndarray, r: float, tol: float = 1e-10
) -> np.ndarray:
    """Stabilizing solution of the continuous algebraic Riccati equation.

    Newton-Kleinman iteration: seed with a stabilizing gain (zero if A is
    already stable, else Ackermann placement at spread negative poles),
    then alternate a closed-loop Lyapunov solve with the gain update
    K = r^-1 B^T P.  Raises if the pair cannot be stabilized or the
    iteration fails to reach the residual tolerance.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(-1)
    Q = np.asarray(Q, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape != (n,) or Q.shape != (n, n):
        raise ValueError("inconsistent shapes for A, B, Q")
    if not (r > 0.0):
        raise ValueError(f"r must be positive, got {r}")

    if _spectral_abscissa(A) < 0.0:
        K = np.zeros(n)
    else:
        base = 1.0 + 2.0 * max(0.0, _spectral_abscissa(A))
        try:
            K = _ackermann(A, B, -base * np.arange(1, n + 1, dtype=float))
        except ValueError as exc:
            raise ValueError("pair (A, B) is not stabilizable") from exc

    P = np.zeros((n, n))
    for _ in range(100):
        Acl = A - np.outer(B, K)
        if _spectral_abscissa(Acl) >= 0.0:
            raise RuntimeError("Riccati iteration lost stability")
        P = _solve_lyapunov(Acl, Q + r * np.outer(K, K))
        K_next = (B @ P) / r
        if np.max(np.abs(K_next - K)) <= tol * (1.0 + np.max(np.abs(K_next))):
            K = K_next
            break
        K = K_next
    P = 0.5 * (P + P.T)
    if care_residual(A, B, Q, r, P) > 1e-8:
        raise RuntimeError("Riccati iteration did not converge to tolerance")
    return P


def lqr_gain(A_aug: np.ndarray, B_aug: np.ndarray, weights: LqrWeights) -> np.ndarray:
    """Optimal state-feedback gain K = r^-1 B^T P with a verified closed loop."""
    P = solve_care(A_aug, B_aug, weights.Q, weights.r)
    K = (np.asarray(B_aug, dtype=float).reshape(-1) @ P) / weights.r
    if _spectral_abscissa(A_aug - np.outer(B_aug, K)) >= 0.0:
        raise RuntimeError("synthesized gain does not stabilize the closed loop")
    return K


@dataclass
class ControllerState:
    """Per-axis tracking controller: synthesized gain plus integrator state.

    integrator_frozen implements anti-windup: the simulation sets it
    whenever the previous command was clipped by the support polygon, and
    the next control step then skips the integrator update.
    """

    gain: np.ndarray
    integrator: float = 0.0
    integrator_frozen: bool = False

    def reset(self):
        self.integrator = 0.0
        self.integrator_frozen = False


def make_axis_controller(omega: float, weights: LqrWeights) -> ControllerState:
    """Synthesize the gain for one axis and wrap it in a controller state."""
    A_aug, B_aug = augment_with_integrator(build_state_space(omega))
    return ControllerState(gain=lqr_gain(A_aug, B_aug, weights))


def control_step(
    ctrl: ControllerState,
    est: AxisEstimate,
    ref: tuple[float, float, float],
    dt_ctrl: float,
) -> float:
    """One control cycle: returns the raw commanded ZMP (before saturation).

    ref is (x_des, dcm_des, p_ff).  The integrator accumulates the DCM
    tracking error except when frozen by anti-windup.
    """
    x_des, dcm_des, p_ff = ref
    e_dcm = est.mean[1] - dcm_des
    if not ctrl.integrator_frozen:
        ctrl.integrator += e_dcm * dt_ctrl
    g = ctrl.gain
    return p_ff - (
        g[0] * (est.mean[0] - x_des) + g[1] * e_dcm + g[2] * ctrl.integrator
    )


def saturate_zmp(u: float, support_center: float, half_extent: float) -> float:
    """Clamp the commanded ZMP into the support interval along one axis."""
    if not np.isfinite(u):
        raise ValueError(f"non-finite ZMP command {u}")
    if not (half_extent > 0.0):
        raise ValueError(f"half_extent must be positive, got {half_extent}")
    lo = support_center - half_extent
    hi = support_center + half_extent
    return min(max(u, lo), hi)
