"""Linear inverted pendulum dynamics and its divergent-component state space.

The robot is reduced to a point mass at constant height; sagittal and
frontal motion decouple into two identical 1-D pendulums

    x_ddot = omega^2 * (x - p),    omega = sqrt((g + z_ddot) / z),

where p is the zero-moment point under the stance foot.  The unstable
coordinate zeta = x + x_dot/omega splits the dynamics into a convergent
COM mode (-omega) and a divergent mode (+omega); everything downstream
(planning, estimation, control) works in the [x, zeta] coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RobotParams:
    """Physical parameters of the reduced model.

    The pendulum frequency requires g + com_vertical_accel > 0 and
    com_height > 0; foot extents bound the ZMP per axis.
    """

    mass: float = 30.0
    com_height: float = 1.0
    com_vertical_accel: float = 0.0
    gravity: float = 9.81
    foot_length: float = 0.2
    foot_width: float = 0.1

    def __post_init__(self):
        if not (self.mass > 0.0):
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not (self.com_height > 0.0):
            raise ValueError(f"com_height must be positive, got {self.com_height}")
        if not (self.gravity > 0.0):
            raise ValueError(f"gravity must be positive, got {self.gravity}")
        if not (self.gravity + self.com_vertical_accel > 0.0):
            raise ValueError(
                "gravity + com_vertical_accel must be positive, got "
                f"{self.gravity + self.com_vertical_accel}"
            )
        if not (self.foot_length > 0.0 and self.foot_width > 0.0):
            raise ValueError("foot extents must be positive")

    @property
    def omega(self) -> float:
        return natural_frequency(self)


def natural_frequency(params: RobotParams) -> float:
    """Pendulum frequency omega = sqrt((g + z_ddot) / z) in 1/s."""
    num = params.gravity + params.com_vertical_accel
    if not (num > 0.0) or not (params.com_height > 0.0):
        raise ValueError("natural frequency undefined: need g + z_ddot > 0 and z > 0")
    return math.sqrt(num / params.com_height)


@dataclass(frozen=True)
class AxisState:
    """COM position and velocity along one decoupled axis."""

    x: float
    xdot: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.xdot)):
            raise ValueError(f"non-finite state ({self.x}, {self.xdot})")

    def dcm(self, omega: float) -> float:
        return dcm_of(self, omega)


def dcm_of(state: AxisState, omega: float) -> float:
    """Divergent component zeta = x + xdot/omega."""
    if not (omega > 0.0):
        raise ValueError(f"omega must be positive, got {omega}")
    return state.x + state.xdot / omega


def state_from_dcm(x: float, zeta: float, omega: float) -> AxisState:
    """Inverse of dcm_of: recover (x, xdot) from (x, zeta)."""
    if not (omega > 0.0):
        raise ValueError(f"omega must be positive, got {omega}")
    return AxisState(x, (zeta - x) * omega)


def dynamics_rhs(
    state: AxisState, p: float, a_ext: float, omega: float
) -> tuple[float, float]:
    """Continuous-time derivatives (xdot, xddot) under ZMP p and external accel."""
    if not (omega > 0.0):
        raise ValueError(f"omega must be positive, got {omega}")
    return state.xdot, omega * omega * (state.x - p) + a_ext


def integrate(
    state: AxisState, p: float, a_ext: float, omega: float, dt: float
) -> AxisState:
    """Propagate the pendulum exactly over dt with p and a_ext held constant.

    The external acceleration shifts the equilibrium to p - a_ext/omega^2,
    so the zero-order-hold solution is the plain cosh/sinh propagation
    about that effective offset.  Exact to rounding; no stepper error.
    """
    if not (omega > 0.0):
        raise ValueError(f"omega must be positive, got {omega}")
    if not (dt > 0.0):
        raise ValueError(f"dt must be positive, got {dt}")
    c = p - a_ext / (omega * omega)
    s = omega * dt
    ch = math.cosh(s)
    sh = math.sinh(s)
    dx = state.x - c
    x_new = c + dx * ch + (state.xdot / omega) * sh
    v_new = dx * omega * sh + state.xdot * ch
    return AxisState(x_new, v_new)


@dataclass(frozen=True)
class StateSpace:
    """Continuous system d/dt [x, zeta] = A [x, zeta] + B p, y = C [x, zeta].

    A = [[-omega, omega], [0, omega]] carries one stable and one unstable
    eigenvalue at -/+ omega; B = [0, -omega]; C = I (full-state measurement).
    """

    omega: float
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)


def build_state_space(omega: float) -> StateSpace:
    """Assemble the [x, zeta] state-space system for one axis."""
    if not (omega > 0.0):
        raise ValueError(f"omega must be positive, got {omega}")
    A = np.array([[-omega, omega], [0.0, omega]])
    B = np.array([0.0, -omega])
    C = np.eye(2)
    return StateSpace(omega=omega, A=A, B=B, C=C)


def discretize(ss: StateSpace, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretization of the [x, zeta] system.

    With s = omega*dt the matrix exponential closes in e^{+-s}:

        A_d = [[e^-s, sinh s], [0, e^s]],   B_d = [1 - cosh s, 1 - e^s].
    """
    if not (dt > 0.0):
        raise ValueError(f"dt must be positive, got {dt}")
    s = ss.omega * dt
    es = math.exp(s)
    ems = math.exp(-s)
    sh = math.sinh(s)
    ch = math.cosh(s)
    A_d = np.array([[ems, sh], [0.0, es]])
    B_d = np.array([1.0 - ch, 1.0 - es])
    return A_d, B_d
