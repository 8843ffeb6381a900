"""Footstep and reference-trajectory planning.

Four chained planners produce the walk references: a footstep planner lays
out alternating stance positions, the ZMP planner turns them into a
per-axis staircase (with an optional linear double-support blend), the COM
planner solves the pendulum dynamics between step seams as a boundary
value problem, and the DCM reference follows from the COM trajectory and
its analytic velocity.  Swing-foot motion is piecewise cubic with zero
boundary velocities and a mid-swing apex.

Conventions used throughout:

* a "step" is one single-support phase; step i is supported on placement
  ``plan.steps[i]`` and covers [i*SD, (i+1)*SD),
* the first placement is the initial stance foot of the leading side
  (weight shift, no displacement), so the opening and closing strides are
  half length and the walk starts/ends at a two-foot stance,
* COM seam values chain through the per-axis midpoint of consecutive
  placements; the walk starts at the initial stance center and ends at the
  final stance center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import RobotParams, dcm_of  # noqa: F401  (dcm_of re-exported for samplewise use)

LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class StepParams:
    """Gait timing and geometry: step length/width, durations, step count."""

    step_length: float
    step_width: float
    step_duration: float
    n_steps: int
    double_support: float = 0.0

    def __post_init__(self):
        if not (self.step_width > 0.0):
            raise ValueError(f"step_width must be positive, got {self.step_width}")
        if not (self.step_duration > 0.0):
            raise ValueError(f"step_duration must be positive, got {self.step_duration}")
        if self.double_support < 0.0:
            raise ValueError(f"double_support must be >= 0, got {self.double_support}")
        if not (self.single_support > 0.0):
            raise ValueError("single_support = step_duration - double_support must be positive")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def single_support(self) -> float:
        return self.step_duration - self.double_support


@dataclass(frozen=True)
class Footstep:
    x: float
    y: float
    side: str
    t_start: float

    def __post_init__(self):
        if self.side not in (LEFT, RIGHT):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class FootstepPlan:
    """Ordered stance placements plus the start and end two-foot stances."""

    steps: tuple[Footstep, ...]
    initial_left: tuple[float, float]
    initial_right: tuple[float, float]
    final_left: tuple[float, float]
    final_right: tuple[float, float]
    step_duration: float

    def __post_init__(self):
        if not self.steps:
            raise ValueError("plan needs at least one footstep")
        for a, b in zip(self.steps, self.steps[1:]):
            if a.side == b.side:
                raise ValueError("support sides must alternate")

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def total_duration(self) -> float:
        return self.n_steps * self.step_duration

    @property
    def start_center(self) -> tuple[float, float]:
        return (
            0.5 * (self.initial_left[0] + self.initial_right[0]),
            0.5 * (self.initial_left[1] + self.initial_right[1]),
        )

    @property
    def final_center(self) -> tuple[float, float]:
        return (
            0.5 * (self.final_left[0] + self.final_right[0]),
            0.5 * (self.final_left[1] + self.final_right[1]),
        )

    def step_index_at(self, t: float) -> int:
        if not (0.0 <= t < self.total_duration):
            raise ValueError(f"t={t} outside walk duration [0, {self.total_duration})")
        return min(int(t // self.step_duration), self.n_steps - 1)

    def swing_side(self, i: int) -> str:
        return LEFT if self.steps[i].side == RIGHT else RIGHT

    def swing_start(self, i: int) -> tuple[float, float]:
        """Where the foot swinging during step i lifts off."""
        if i == 0:
            return self.initial_left if self.swing_side(0) == LEFT else self.initial_right
        return self.steps[i - 1].position

    def swing_target(self, i: int) -> tuple[float, float]:
        """Where the foot swinging during step i lands."""
        if i + 1 < self.n_steps:
            return self.steps[i + 1].position
        return self.final_left if self.swing_side(i) == LEFT else self.final_right

    def shifted(self, from_index: int, offset: tuple[float, float]) -> "FootstepPlan":
        """Displace placements from_index.. (and the final stance) by offset."""
        ox, oy = offset
        new_steps = tuple(
            replace(s, x=s.x + ox, y=s.y + oy) if j >= from_index else s
            for j, s in enumerate(self.steps)
        )
        return replace(
            self,
            steps=new_steps,
            final_left=(self.final_left[0] + ox, self.final_left[1] + oy),
            final_right=(self.final_right[0] + ox, self.final_right[1] + oy),
        )


def plan_footsteps(
    params: StepParams,
    start_pose: tuple[float, float, float] = (0.0, 0.0, 0.0),
    lateral_offset_per_step: float = 0.0,
    first_support: str = RIGHT,
) -> FootstepPlan:
    """Lay out alternating footsteps for a straight or diagonal walk.

    Placement i sits at i*SL/2 forward of the start with the support side
    alternating across the walk centerline (+-SW/2); a nonzero lateral
    offset drifts the centerline by that amount every step, which is how
    diagonal walks are produced.  A nonzero heading rotates the whole
    pattern about the start point.
    """
    if first_support not in (LEFT, RIGHT):
        raise ValueError(f"first_support must be 'left' or 'right', got {first_support!r}")
    sx, sy, heading = start_pose
    ch, sh = math.cos(heading), math.sin(heading)

    def world(dx: float, dy: float) -> tuple[float, float]:
        return (sx + ch * dx - sh * dy, sy + sh * dx + ch * dy)

    half_w = params.step_width / 2.0
    sign0 = -1.0 if first_support == RIGHT else 1.0
    steps = []
    for i in range(params.n_steps):
        sign = sign0 if i % 2 == 0 else -sign0
        dx = i * params.step_length / 2.0
        dy = i * lateral_offset_per_step + sign * half_w
        x, y = world(dx, dy)
        side = first_support if i % 2 == 0 else (LEFT if first_support == RIGHT else RIGHT)
        steps.append(Footstep(x, y, side, i * params.step_duration))

    last = steps[-1]
    last_sign = sign0 if (params.n_steps - 1) % 2 == 0 else -sign0
    n1 = params.n_steps - 1
    closing = world(n1 * params.step_length / 2.0, n1 * lateral_offset_per_step - last_sign * half_w)
    if last.side == LEFT:
        final_left, final_right = last.position, closing
    else:
        final_left, final_right = closing, last.position
    return FootstepPlan(
        steps=tuple(steps),
        initial_left=world(0.0, half_w),
        initial_right=world(0.0, -half_w),
        final_left=final_left,
        final_right=final_right,
        step_duration=params.step_duration,
    )


def zmp_reference(plan: FootstepPlan, params: StepParams, t: float) -> tuple[float, float]:
    """ZMP reference at time t: stance-foot center during single support,
    linear blend toward the next placement over the double-support window."""
    i = plan.step_index_at(t)
    f = plan.steps[i]
    tau = t - i * params.step_duration
    if params.double_support <= 0.0 or tau < params.single_support:
        return f.position
    nxt = plan.steps[i + 1].position if i + 1 < plan.n_steps else plan.final_center
    frac = (tau - params.single_support) / params.double_support
    return (f.x + (nxt[0] - f.x) * frac, f.y + (nxt[1] - f.y) * frac)


def com_bvp(p, x0, xf, t0, tf, omega, t):
    """COM position on one step from the pendulum boundary value problem.

    With the ZMP p held constant over [t0, tf] and COM positions pinned at
    both ends, the solution is the sinh interpolation

        x(t) = p + [(p - xf) sinh(w (t-t0)) + (x0 - p) sinh(w (t-tf))]
               / sinh(w (t0-tf)).

    Accepts scalar or array t within [t0, tf].
    """
    if not (tf > t0):
        raise ValueError(f"need tf > t0, got t0={t0}, tf={tf}")
    if not (omega > 0.0):
        raise ValueError(f"omega must be positive, got {omega}")
    t = np.asarray(t, dtype=float)
    span = (tf - t0) * 1e-9 + 1e-12
    if np.any(t < t0 - span) or np.any(t > tf + span):
        raise ValueError(f"t outside [{t0}, {tf}]")
    den = math.sinh(omega * (t0 - tf))
    out = p + ((p - xf) * np.sinh(omega * (t - t0)) + (x0 - p) * np.sinh(omega * (t - tf))) / den
    return float(out) if out.ndim == 0 else out


def com_vel_bvp(p, x0, xf, t0, tf, omega, t):
    """Analytic time derivative of com_bvp (cosh form)."""
    if not (tf > t0):
        raise ValueError(f"need tf > t0, got t0={t0}, tf={tf}")
    if not (omega > 0.0):
        raise ValueError(f"omega must be positive, got {omega}")
    t = np.asarray(t, dtype=float)
    span = (tf - t0) * 1e-9 + 1e-12
    if np.any(t < t0 - span) or np.any(t > tf + span):
        raise ValueError(f"t outside [{t0}, {tf}]")
    den = math.sinh(omega * (t0 - tf))
    out = omega * ((p - xf) * np.cosh(omega * (t - t0)) + (x0 - p) * np.cosh(omega * (t - tf))) / den
    return float(out) if out.ndim == 0 else out


def dcm_reference(com, com_vel, omega):
    """Samplewise DCM zeta = x + xdot/omega (scalar or array)."""
    if not (omega > 0.0):
        raise ValueError(f"omega must be positive, got {omega}")
    return com + com_vel / omega


def _hermite(ta, tb, pa, va, pb, vb, t):
    h = tb - ta
    s = (t - ta) / h
    s2 = s * s
    s3 = s2 * s
    pos = (
        (2 * s3 - 3 * s2 + 1) * pa
        + (s3 - 2 * s2 + s) * h * va
        + (-2 * s3 + 3 * s2) * pb
        + (s3 - s2) * h * vb
    )
    vel = (
        (6 * s2 - 6 * s) * pa
        + (3 * s2 - 4 * s + 1) * h * va
        + (-6 * s2 + 6 * s) * pb
        + (3 * s2 - 2 * s) * h * vb
    ) / h
    return pos, vel


@dataclass(frozen=True)
class SwingTrajectory:
    """Piecewise-cubic swing foot motion over local time [start_time, duration].

    Horizontal components are a single Hermite cubic with zero boundary
    velocities; the vertical profile passes through the apex at mid-swing.
    Re-fitting mid-swing splices new segments that match the current pose
    and velocity, so adjusted touchdowns are reached without a kink.
    """

    duration: float
    touchdown: tuple[float, float]
    segs_x: tuple[tuple, ...]
    segs_y: tuple[tuple, ...]
    segs_z: tuple[tuple, ...]
    start_time: float = 0.0

    @classmethod
    def plan(
        cls,
        lift_off: tuple[float, float],
        touchdown: tuple[float, float],
        apex_height: float,
        duration: float,
    ) -> "SwingTrajectory":
        if apex_height < 0.0:
            raise ValueError(f"apex_height must be >= 0, got {apex_height}")
        if not (duration > 0.0):
            raise ValueError(f"duration must be positive, got {duration}")
        half = duration / 2.0
        return cls(
            duration=duration,
            touchdown=touchdown,
            segs_x=((0.0, duration, lift_off[0], 0.0, touchdown[0], 0.0),),
            segs_y=((0.0, duration, lift_off[1], 0.0, touchdown[1], 0.0),),
            segs_z=(
                (0.0, half, 0.0, 0.0, apex_height, 0.0),
                (half, duration, apex_height, 0.0, 0.0, 0.0),
            ),
        )

    def _eval(self, segs, t):
        for seg in segs:
            if t <= seg[1] or seg is segs[-1]:
                return _hermite(*seg, min(max(t, seg[0]), seg[1]))
        raise AssertionError("unreachable")

    def position(self, t: float) -> tuple[float, float, float]:
        t = min(max(t, self.start_time), self.duration)
        x, _ = self._eval(self.segs_x, t)
        y, _ = self._eval(self.segs_y, t)
        z, _ = self._eval(self.segs_z, t)
        return (x, y, max(z, 0.0))

    def velocity(self, t: float) -> tuple[float, float, float]:
        t = min(max(t, self.start_time), self.duration)
        return (
            self._eval(self.segs_x, t)[1],
            self._eval(self.segs_y, t)[1],
            self._eval(self.segs_z, t)[1],
        )

    def refit(self, t_now: float, new_touchdown: tuple[float, float]) -> "SwingTrajectory":
        """Re-target the remaining swing toward a new touchdown point."""
        if not (self.start_time <= t_now < self.duration):
            raise ValueError(f"t_now={t_now} outside remaining swing window")
        px, py, pz = self.position(t_now)
        vx, vy, vz = self.velocity(t_now)
        segs_x = ((t_now, self.duration, px, vx, new_touchdown[0], 0.0),)
        segs_y = ((t_now, self.duration, py, vy, new_touchdown[1], 0.0),)
        half = self.duration / 2.0
        if t_now < half:
            apex = self.segs_z[0][4] if len(self.segs_z) > 1 else max(pz, 0.0)
            segs_z = (
                (t_now, half, pz, vz, apex, 0.0),
                (half, self.duration, apex, 0.0, 0.0, 0.0),
            )
        else:
            segs_z = ((t_now, self.duration, pz, vz, 0.0, 0.0),)
        return SwingTrajectory(
            duration=self.duration,
            touchdown=new_touchdown,
            segs_x=segs_x,
            segs_y=segs_y,
            segs_z=segs_z,
            start_time=t_now,
        )


def swing_trajectory(
    lift_off: tuple[float, float],
    touchdown: tuple[float, float],
    apex_height: float,
    t_ss: float,
    t: float,
) -> tuple[float, float, float]:
    """Swing foot pose at local time t of a nominal swing (see SwingTrajectory)."""
    if not (0.0 <= t <= t_ss):
        raise ValueError(f"t={t} outside [0, {t_ss}]")
    return SwingTrajectory.plan(lift_off, touchdown, apex_height, t_ss).position(t)


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Time-sampled walk references on a uniform control grid.

    Arrays cover [0, total_duration) half-open with spacing dt; columns of
    the 2-wide arrays are the sagittal (x) and frontal (y) axes.
    """

    dt: float
    omega: float
    t: np.ndarray = field(repr=False)
    zmp: np.ndarray = field(repr=False)
    com: np.ndarray = field(repr=False)
    com_vel: np.ndarray = field(repr=False)
    dcm: np.ndarray = field(repr=False)
    swing: np.ndarray = field(repr=False)
    support_idx: np.ndarray = field(repr=False)
    plan: FootstepPlan
    samples_per_step: int
    com_boundaries: np.ndarray = field(repr=False)
    swing_trajs: tuple[SwingTrajectory, ...] = field(repr=False)

    @property
    def n_samples(self) -> int:
        return self.t.shape[0]

    def step_of_sample(self, k: int) -> int:
        return min(k // self.samples_per_step, self.plan.n_steps - 1)


def _chain_boundaries(plan: FootstepPlan, x_start, x_end) -> np.ndarray:
    n = plan.n_steps
    bounds = np.zeros((n + 1, 2))
    bounds[0] = x_start if x_start is not None else plan.start_center
    for i in range(1, n):
        a, b = plan.steps[i - 1], plan.steps[i]
        bounds[i] = (0.5 * (a.x + b.x), 0.5 * (a.y + b.y))
    bounds[n] = x_end if x_end is not None else plan.final_center
    return bounds


def build_reference(
    plan: FootstepPlan,
    params: StepParams,
    robot: RobotParams,
    dt_ctrl: float = 0.005,
    apex_height: float = 0.05,
    x_start: tuple[float, float] | None = None,
    x_end: tuple[float, float] | None = None,
) -> ReferenceTrajectory:
    """Sample the full reference set (ZMP, COM, DCM, swing) for a plan.

    The COM chain solves one boundary value problem per step with seam
    values at the per-axis midpoints of consecutive placements, so the COM
    reference is continuous across seams by construction.  Requires zero
    double support: the constant-ZMP solution does not cover a time-varying
    ZMP within a step.
    """
    if params.double_support != 0.0:
        raise ValueError("reference chain requires double_support = 0")
    if not (dt_ctrl > 0.0):
        raise ValueError(f"dt_ctrl must be positive, got {dt_ctrl}")
    spp = round(params.step_duration / dt_ctrl)
    if spp < 2 or abs(spp * dt_ctrl - params.step_duration) > 1e-9:
        raise ValueError("step_duration must be an integer multiple (>= 2) of dt_ctrl")

    omega = robot.omega
    n = plan.n_steps
    N = n * spp
    bounds = _chain_boundaries(plan, x_start, x_end)

    t = np.arange(N) * dt_ctrl
    zmp = np.zeros((N, 2))
    com = np.zeros((N, 2))
    com_vel = np.zeros((N, 2))
    swing = np.zeros((N, 3))
    support_idx = np.zeros(N, dtype=int)
    swing_trajs = []

    for i in range(n):
        k0, k1 = i * spp, (i + 1) * spp
        t0 = (i * spp) * dt_ctrl
        tf = ((i + 1) * spp) * dt_ctrl
        tk = t[k0:k1]
        f = plan.steps[i]
        support_idx[k0:k1] = i
        zmp[k0:k1, 0] = f.x
        zmp[k0:k1, 1] = f.y
        for ax, (p, x0, xf) in enumerate(zip(f.position, bounds[i], bounds[i + 1])):
            com[k0:k1, ax] = com_bvp(p, x0, xf, t0, tf, omega, tk)
            com_vel[k0:k1, ax] = com_vel_bvp(p, x0, xf, t0, tf, omega, tk)
        traj = SwingTrajectory.plan(
            plan.swing_start(i), plan.swing_target(i), apex_height, params.step_duration
        )
        swing_trajs.append(traj)
        for k in range(k0, k1):
            swing[k] = traj.position(t[k] - t0)

    dcm = dcm_reference(com, com_vel, omega)
    return ReferenceTrajectory(
        dt=dt_ctrl,
        omega=omega,
        t=t,
        zmp=zmp,
        com=com,
        com_vel=com_vel,
        dcm=dcm,
        swing=swing,
        support_idx=support_idx,
        plan=plan,
        samples_per_step=spp,
        com_boundaries=bounds,
        swing_trajs=tuple(swing_trajs),
    )


def replan_reference(
    ref: ReferenceTrajectory,
    new_plan: FootstepPlan,
    params: StepParams,
    robot: RobotParams,
    k_now: int,
    apex_height: float = 0.05,
) -> ReferenceTrajectory:
    """Regenerate references from sample k_now onward for an adjusted plan.

    Past samples are kept verbatim.  The step in progress is re-solved from
    its current reference COM value to the new seam target (so the COM
    reference stays continuous at the splice), later steps get the standard
    chain, and the active swing is re-fit toward its new touchdown.
    """
    if not (0 <= k_now < ref.n_samples):
        raise ValueError(f"k_now={k_now} outside the reference grid")
    omega = robot.omega
    spp = ref.samples_per_step
    n = new_plan.n_steps
    i_now = ref.step_of_sample(k_now)
    t_now = k_now * ref.dt

    bounds = _chain_boundaries(new_plan, None, None)
    bounds[: i_now + 1] = ref.com_boundaries[: i_now + 1]

    t = ref.t
    zmp = ref.zmp.copy()
    com = ref.com.copy()
    com_vel = ref.com_vel.copy()
    swing = ref.swing.copy()
    support_idx = ref.support_idx.copy()
    swing_trajs = list(ref.swing_trajs)

    for i in range(i_now, n):
        k0, k1 = i * spp, (i + 1) * spp
        t0 = (i * spp) * ref.dt
        tf = ((i + 1) * spp) * ref.dt
        f = new_plan.steps[i]
        if i == i_now:
            k0 = k_now
            x_from = com[k_now].copy()
            t0 = t_now
            traj = swing_trajs[i].refit(t_now - i * spp * ref.dt, new_plan.swing_target(i))
        else:
            x_from = bounds[i]
            traj = SwingTrajectory.plan(
                new_plan.swing_start(i), new_plan.swing_target(i), apex_height, params.step_duration
            )
        if tf <= t0:
            continue
        tk = t[k0:k1]
        support_idx[k0:k1] = i
        zmp[k0:k1, 0] = f.x
        zmp[k0:k1, 1] = f.y
        for ax in range(2):
            com[k0:k1, ax] = com_bvp(f.position[ax], x_from[ax], bounds[i + 1][ax], t0, tf, omega, tk)
            com_vel[k0:k1, ax] = com_vel_bvp(
                f.position[ax], x_from[ax], bounds[i + 1][ax], t0, tf, omega, tk
            )
        swing_trajs[i] = traj
        step_start = i * spp * ref.dt
        for k in range(k0, k1):
            swing[k] = traj.position(t[k] - step_start)

    dcm = dcm_reference(com, com_vel, omega)
    return ReferenceTrajectory(
        dt=ref.dt,
        omega=omega,
        t=t,
        zmp=zmp,
        com=com,
        com_vel=com_vel,
        dcm=dcm,
        swing=swing,
        support_idx=support_idx,
        plan=new_plan,
        samples_per_step=spp,
        com_boundaries=bounds,
        swing_trajs=tuple(swing_trajs),
    )
