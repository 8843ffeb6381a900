"""Closed-loop walking scenarios: plant, estimator, controller, adjustment.

One scenario runs the full stack per decoupled axis: noisy full-state
measurements feed the Kalman filter, the LQR commands a ZMP that is
saturated to the support polygon, the plant integrates exactly at the
physics rate with any active push translated to a COM acceleration, and
the step-adjustment layer may shift upcoming footsteps and regenerate the
references mid-walk.  Runs are deterministic given the config and seed.

Falling is detected two ways: a latched threshold on the DCM tracking
error (the only observable divergence in this reduced model), and a
roll-over proxy that latches when the raw ZMP demand stays outside the
support polygon for a sustained window.  A physical foot would tip in
that situation even though the clamped point-mass model happily walks on,
so without the proxy the point mass survives pushes an order of magnitude
beyond anything a real support polygon could deliver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .controller import (
    ControllerState,
    LqrWeights,
    control_step,
    make_axis_controller,
    saturate_zmp,
)
from .estimator import AxisEstimate, NoiseModel, predict, sample_measurement, update
from .model import AxisState, RobotParams, build_state_space, dcm_of, discretize, integrate
from .planner import (
    RIGHT,
    FootstepPlan,
    ReferenceTrajectory,
    StepParams,
    build_reference,
    plan_footsteps,
    replan_reference,
)
from .step_adjust import ComplianceConfig, adjust_plan, compliance_offset, predict_next_footstep

LEFT_SIGN = {"left": 1.0, "right": -1.0}


@dataclass(frozen=True)
class DisturbanceEvent:
    """Horizontal push applied at the COM over a finite window."""

    t_start: float
    duration: float
    force: tuple[float, float]

    def __post_init__(self):
        if self.t_start < 0.0:
            raise ValueError(f"t_start must be >= 0, got {self.t_start}")
        if not (self.duration > 0.0):
            raise ValueError(f"duration must be positive, got {self.duration}")


def disturbance_accel(
    events: tuple[DisturbanceEvent, ...], mass: float, t: float
) -> tuple[float, float]:
    """Summed COM acceleration F/m of the events active at time t."""
    if not (mass > 0.0):
        raise ValueError(f"mass must be positive, got {mass}")
    ax = ay = 0.0
    for ev in events:
        if ev.t_start <= t < ev.t_start + ev.duration:
            ax += ev.force[0] / mass
            ay += ev.force[1] / mass
    return ax, ay


@dataclass(frozen=True)
class FallThresholds:
    """Fall detection settings.

    dcm_error: latched threshold on |zeta - zeta_ref| per axis.
    zmp_demand_window: how long (s) the raw ZMP demand may sit outside the
    support polygon before the run is declared a roll-over; 0 disables.
    """

    dcm_error: float = 0.5
    zmp_demand_window: float = 0.05

    def __post_init__(self):
        if not (self.dcm_error > 0.0):
            raise ValueError("dcm_error threshold must be positive")
        if self.zmp_demand_window < 0.0:
            raise ValueError("zmp_demand_window must be >= 0")


def detect_fall(
    truth: tuple[AxisState, AxisState],
    dcm_ref: tuple[float, float],
    omega: float,
    thresholds: FallThresholds,
) -> bool:
    """DCM-divergence criterion: tracking error beyond the threshold on either axis."""
    return any(
        abs(dcm_of(truth[ax], omega) - dcm_ref[ax]) > thresholds.dcm_error for ax in (0, 1)
    )


class FallMonitor:
    """Latched fall state combining DCM divergence and sustained ZMP-demand excess."""

    def __init__(self, thresholds: FallThresholds, dt_ctrl: float):
        self.thresholds = thresholds
        self.window_cycles = (
            int(round(thresholds.zmp_demand_window / dt_ctrl))
            if thresholds.zmp_demand_window > 0.0
            else 0
        )
        self.streak = 0
        self.fell = False
        self.reason = ""

    def update(self, dcm_err: tuple[float, float], demand_outside: bool) -> bool:
        if self.fell:
            return True
        if max(abs(dcm_err[0]), abs(dcm_err[1])) > self.thresholds.dcm_error:
            self.fell = True
            self.reason = "dcm_divergence"
            return True
        if self.window_cycles > 0:
            self.streak = self.streak + 1 if demand_outside else 0
            if self.streak > self.window_cycles:
                self.fell = True
                self.reason = "zmp_rollover"
                return True
        return False


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one walking run."""

    robot: RobotParams = field(default_factory=RobotParams)
    steps: StepParams = field(
        default_factory=lambda: StepParams(
            step_length=0.2, step_width=0.1, step_duration=1.0, n_steps=10
        )
    )
    weights: LqrWeights = field(default_factory=LqrWeights)
    noise: NoiseModel = field(default_factory=NoiseModel.zero)
    compliance: ComplianceConfig = field(
        default_factory=lambda: ComplianceConfig(enabled=False)
    )
    disturbances: tuple[DisturbanceEvent, ...] = ()
    fall: FallThresholds = field(default_factory=FallThresholds)
    seed: int = 0
    start_pose: tuple[float, float, float] = (0.0, 0.0, 0.0)
    lateral_offset_per_step: float = 0.0
    first_support: str = RIGHT
    apex_height: float = 0.05
    dt_phys: float = 0.001
    dt_ctrl: float = 0.005
    actual_com_height: float | None = None
    initial_cov: float = 1e-4
    name: str = "scenario"

    def __post_init__(self):
        if not (self.dt_phys > 0.0 and self.dt_ctrl > 0.0):
            raise ValueError("time steps must be positive")
        ratio = self.dt_ctrl / self.dt_phys
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("dt_ctrl must be an integer multiple of dt_phys")
        if self.actual_com_height is not None and not (self.actual_com_height > 0.0):
            raise ValueError("actual_com_height must be positive")
        if self.apex_height < 0.0:
            raise ValueError("apex_height must be >= 0")

    @property
    def substeps(self) -> int:
        return round(self.dt_ctrl / self.dt_phys)

    def plant_omega(self) -> float:
        if self.actual_com_height is None:
            return self.robot.omega
        plant = replace(self.robot, com_height=self.actual_com_height)
        return plant.omega


@dataclass
class SimulationResult:
    """Per-cycle logs plus the fall flag and summary metrics.

    All 2-column arrays carry the sagittal (x) then frontal (y) axis.
    Metrics are computed from the 9-significant-digit quantized arrays so
    that recomputing them from an emitted CSV reproduces them exactly.
    """

    config: ScenarioConfig
    t: np.ndarray
    com_true: np.ndarray
    vel_true: np.ndarray
    dcm_true: np.ndarray
    com_est: np.ndarray
    dcm_est: np.ndarray
    zmp_ref: np.ndarray
    com_ref: np.ndarray
    dcm_ref: np.ndarray
    u_raw: np.ndarray
    u_sat: np.ndarray
    dcm_pred: np.ndarray
    adj_offset: np.ndarray
    support_idx: np.ndarray
    fell: bool
    fall_time: float | None
    fall_reason: str
    plan: FootstepPlan
    reference: ReferenceTrajectory
    metrics: dict = field(default_factory=dict)

    @property
    def n_cycles(self) -> int:
        return self.t.shape[0]


def _quantize(a: np.ndarray) -> np.ndarray:
    """Round to the 9-significant-digit CSV representation."""
    return np.array([float(f"{v:.9g}") for v in np.asarray(a, dtype=float).ravel()]).reshape(
        np.asarray(a).shape
    )


def compute_metrics(
    dcm_true: np.ndarray,
    dcm_ref: np.ndarray,
    u_raw: np.ndarray,
    zmp_lo: np.ndarray,
    zmp_hi: np.ndarray,
    support_idx: np.ndarray,
    n_steps: int,
    fell: bool,
    fall_time: float | None,
) -> dict:
    """Summary metrics from logged arrays (quantized or raw)."""
    err = dcm_true - dcm_ref
    inside = np.all((u_raw >= zmp_lo) & (u_raw <= zmp_hi), axis=1)
    return {
        "fell": bool(fell),
        "fall_time": None if fall_time is None else float(fall_time),
        "max_dcm_error": float(np.max(np.abs(err))) if err.size else 0.0,
        "rms_dcm_error_x": float(np.sqrt(np.mean(err[:, 0] ** 2))) if err.size else 0.0,
        "rms_dcm_error_y": float(np.sqrt(np.mean(err[:, 1] ** 2))) if err.size else 0.0,
        "zmp_in_polygon_fraction": float(np.mean(inside)) if inside.size else 1.0,
        "steps_completed": int(support_idx[-1]) if fell else int(n_steps),
    }


def _support_bounds(
    plan: FootstepPlan, robot: RobotParams, i: int
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Per-axis (lo, hi) of the single-support polygon for step i."""
    f = plan.steps[i]
    hx, hy = robot.foot_length / 2.0, robot.foot_width / 2.0
    return (f.x - hx, f.x + hx), (f.y - hy, f.y + hy)


def run_scenario(cfg: ScenarioConfig) -> SimulationResult:
    """Run one closed-loop walk; deterministic for a given config and seed.

    Per control cycle: measure, filter, control, saturate, hold the command
    over the physics substeps (adding any active push as F/m), check the
    step-adjustment layer, log, and stop at walk end or fall.
    """
    robot = cfg.robot
    omega_d = robot.omega
    omega_plant = cfg.plant_omega()
    plan = plan_footsteps(
        cfg.steps, cfg.start_pose, cfg.lateral_offset_per_step, cfg.first_support
    )
    ref = build_reference(
        plan, cfg.steps, robot, dt_ctrl=cfg.dt_ctrl, apex_height=cfg.apex_height
    )
    N = ref.n_samples
    n_sub = cfg.substeps

    A_d, B_d = discretize(build_state_space(omega_d), cfg.dt_ctrl)
    C = np.eye(2)
    gain_proto = make_axis_controller(omega_d, cfg.weights)
    ctrls = [ControllerState(gain=gain_proto.gain.copy()) for _ in range(2)]

    exact = cfg.noise.is_exact
    rng = np.random.default_rng(cfg.seed)
    P0 = np.eye(2) * cfg.initial_cov
    truth = [AxisState(ref.com[0, ax], ref.com_vel[0, ax]) for ax in range(2)]
    ests = [
        AxisEstimate(mean=np.array([ref.com[0, ax], ref.dcm[0, ax]]), cov=P0.copy())
        for ax in range(2)
    ]
    u_prev = [float(ref.zmp[0, ax]) for ax in range(2)]

    monitor = FallMonitor(cfg.fall, cfg.dt_ctrl)
    log = {
        name: []
        for name in (
            "t com_true vel_true dcm_true com_est dcm_est zmp_ref com_ref dcm_ref "
            "u_raw u_sat dcm_pred adj_offset support_idx zmp_lo zmp_hi"
        ).split()
    }
    fell = False
    fall_time = None

    for k in range(N):
        t_k = k * cfg.dt_ctrl
        i_step = int(ref.support_idx[k])
        truth_dcm = [dcm_of(truth[ax], omega_d) for ax in range(2)]

        # measurement + filter (passthrough in the exact-measurement limit)
        for ax in range(2):
            if exact:
                ests[ax] = AxisEstimate(
                    mean=np.array([truth[ax].x, truth_dcm[ax]]), cov=np.zeros((2, 2))
                )
            else:
                y = sample_measurement(truth[ax], omega_d, cfg.noise, rng)
                ests[ax] = update(
                    predict(ests[ax], A_d, B_d, u_prev[ax], cfg.noise.process_cov),
                    y,
                    C,
                    cfg.noise.measurement_cov,
                )

        # control + saturation
        bounds = _support_bounds(plan, robot, i_step)
        u_raw = [0.0, 0.0]
        u_sat = [0.0, 0.0]
        outside = False
        for ax in range(2):
            u_raw[ax] = control_step(
                ctrls[ax],
                ests[ax],
                (float(ref.com[k, ax]), float(ref.dcm[k, ax]), float(ref.zmp[k, ax])),
                cfg.dt_ctrl,
            )
            lo, hi = bounds[ax]
            center = 0.5 * (lo + hi)
            u_sat[ax] = saturate_zmp(u_raw[ax], center, 0.5 * (hi - lo))
            clipped = u_sat[ax] != u_raw[ax]
            ctrls[ax].integrator_frozen = clipped
            outside = outside or clipped

        row_truth = [(truth[ax].x, truth[ax].xdot) for ax in range(2)]

        # plant propagation at the physics rate
        for s in range(n_sub):
            t_sub = (k * n_sub + s) * cfg.dt_phys
            a = disturbance_accel(cfg.disturbances, robot.mass, t_sub)
            for ax in range(2):
                truth[ax] = integrate(truth[ax], u_sat[ax], a[ax], omega_plant, cfg.dt_phys)

        # online step adjustment
        pred = [math.nan, math.nan]
        applied = [0.0, 0.0]
        if cfg.compliance.enabled and k + 1 < N:
            tau = t_k - i_step * cfg.steps.step_duration
            target = plan.swing_target(i_step)
            err = [0.0, 0.0]
            for ax in range(2):
                pred[ax] = predict_next_footstep(
                    plan.steps[i_step].position[ax],
                    float(ests[ax].mean[1]),
                    tau,
                    cfg.steps.step_duration,
                    omega_d,
                )
                err[ax] = pred[ax] - target[ax]
            off = [compliance_offset(err[0], cfg.compliance), compliance_offset(err[1], cfg.compliance)]
            if off[0] != 0.0 or off[1] != 0.0:
                # keep the adjusted landing on its own side of the walk centerline
                side = plan.swing_side(i_step)
                centerline = target[1] - LEFT_SIGN[side] * cfg.steps.step_width / 2.0
                if side == "left":
                    off[1] = max(off[1], centerline - target[1])
                else:
                    off[1] = min(off[1], centerline - target[1])
                new_plan = adjust_plan(
                    plan,
                    i_step + 1,
                    (off[0], off[1]),
                    remaining_swing_time=cfg.steps.step_duration - tau,
                    freeze_time=cfg.compliance.freeze_time,
                )
                if new_plan is not None:
                    plan = new_plan
                    ref = replan_reference(
                        ref, plan, cfg.steps, robot, k + 1, cfg.apex_height
                    )
                    applied = off

        # log the cycle
        log["t"].append(t_k)
        log["com_true"].append((row_truth[0][0], row_truth[1][0]))
        log["vel_true"].append((row_truth[0][1], row_truth[1][1]))
        log["dcm_true"].append(tuple(truth_dcm))
        log["com_est"].append((float(ests[0].mean[0]), float(ests[1].mean[0])))
        log["dcm_est"].append((float(ests[0].mean[1]), float(ests[1].mean[1])))
        log["zmp_ref"].append((float(ref.zmp[k, 0]), float(ref.zmp[k, 1])))
        log["com_ref"].append((float(ref.com[k, 0]), float(ref.com[k, 1])))
        log["dcm_ref"].append((float(ref.dcm[k, 0]), float(ref.dcm[k, 1])))
        log["u_raw"].append(tuple(u_raw))
        log["u_sat"].append(tuple(u_sat))
        log["dcm_pred"].append(tuple(pred))
        log["adj_offset"].append(tuple(applied))
        log["support_idx"].append(i_step)
        log["zmp_lo"].append((bounds[0][0], bounds[1][0]))
        log["zmp_hi"].append((bounds[0][1], bounds[1][1]))

        dcm_err = (truth_dcm[0] - float(ref.dcm[k, 0]), truth_dcm[1] - float(ref.dcm[k, 1]))
        if monitor.update(dcm_err, outside):
            fell = True
            fall_time = t_k
            break

        for ax in range(2):
            u_prev[ax] = u_sat[ax]

    arrays = {name: np.asarray(vals, dtype=float) for name, vals in log.items()}
    arrays["support_idx"] = np.asarray(log["support_idx"], dtype=int)

    q = {name: _quantize(arrays[name]) for name in ("dcm_true", "dcm_ref", "u_raw")}
    metrics = compute_metrics(
        q["dcm_true"],
        q["dcm_ref"],
        q["u_raw"],
        _quantize(arrays["zmp_lo"]),
        _quantize(arrays["zmp_hi"]),
        arrays["support_idx"],
        plan.n_steps,
        fell,
        fall_time,
    )

    return SimulationResult(
        config=cfg,
        t=arrays["t"],
        com_true=arrays["com_true"],
        vel_true=arrays["vel_true"],
        dcm_true=arrays["dcm_true"],
        com_est=arrays["com_est"],
        dcm_est=arrays["dcm_est"],
        zmp_ref=arrays["zmp_ref"],
        com_ref=arrays["com_ref"],
        dcm_ref=arrays["dcm_ref"],
        u_raw=arrays["u_raw"],
        u_sat=arrays["u_sat"],
        dcm_pred=arrays["dcm_pred"],
        adj_offset=arrays["adj_offset"],
        support_idx=arrays["support_idx"],
        fell=fell,
        fall_time=fall_time,
        fall_reason=monitor.reason,
        plan=plan,
        reference=ref,
        metrics=metrics,
    )


@dataclass(frozen=True)
class PushLimitResult:
    direction: str
    f_max: float
    trace: tuple[tuple[float, bool], ...]


_DIRECTIONS = {"+x": (1.0, 0.0), "-x": (-1.0, 0.0), "+y": (0.0, 1.0), "-y": (0.0, -1.0)}


def push_scenario(
    cfg_base: ScenarioConfig,
    direction: str,
    magnitude: float,
    t_push: float = 2.5,
    duration: float = 0.01,
) -> ScenarioConfig:
    """Base config with a single push event and noise disabled."""
    if direction not in _DIRECTIONS:
        raise ValueError(f"direction must be one of {sorted(_DIRECTIONS)}")
    dx, dy = _DIRECTIONS[direction]
    event = DisturbanceEvent(
        t_start=t_push, duration=duration, force=(magnitude * dx, magnitude * dy)
    )
    return replace(cfg_base, disturbances=(event,), noise=NoiseModel.zero())


def find_push_limit(
    cfg_base: ScenarioConfig,
    direction: str,
    f_low: float,
    f_high: float,
    tol_n: float = 0.5,
    t_push: float = 2.5,
    duration: float = 0.01,
) -> PushLimitResult:
    """Bisect the push magnitude between a surviving and a falling bracket.

    Noise is disabled for determinism.  Returns the largest surviving
    magnitude along with the full bisection trace.
    """
    if not (0.0 <= f_low < f_high):
        raise ValueError("need 0 <= f_low < f_high")
    if not (tol_n > 0.0):
        raise ValueError("tol_n must be positive")

    def fails(mag: float) -> bool:
        return run_scenario(push_scenario(cfg_base, direction, mag, t_push, duration)).fell

    trace = []
    if fails(f_low):
        raise ValueError(f"invalid bracket: robot falls at f_low = {f_low} N")
    trace.append((f_low, False))
    if not fails(f_high):
        raise ValueError(f"invalid bracket: robot survives f_high = {f_high} N")
    trace.append((f_high, True))

    lo, hi = f_low, f_high
    while hi - lo > tol_n:
        mid = 0.5 * (lo + hi)
        fell = fails(mid)
        trace.append((mid, fell))
        if fell:
            hi = mid
        else:
            lo = mid
    return PushLimitResult(direction=direction, f_max=lo, trace=tuple(trace))


def run_height_mismatch(cfg: ScenarioConfig) -> SimulationResult:
    """Run a scenario whose plant uses a different COM height than the design.

    Planner, estimator and controller all keep the design height; only the
    plant integrates with the actual pendulum frequency.
    """
    if cfg.actual_com_height is None:
        raise ValueError("config must set actual_com_height")
    return run_scenario(cfg)
