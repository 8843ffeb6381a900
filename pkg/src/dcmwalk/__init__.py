"""dcmwalk: LIPM/DCM biped walking simulation with LQG tracking control.

Reference planning (footsteps, ZMP, COM, DCM, swing foot), Kalman-filtered
LQR tracking with integral action and ZMP saturation, online footstep
adjustment from predicted end-of-step DCM, and a deterministic scenario
engine for noise, push and model-mismatch robustness studies.
"""

from .model import (
    AxisState,
    RobotParams,
    StateSpace,
    build_state_space,
    dcm_of,
    discretize,
    dynamics_rhs,
    integrate,
    natural_frequency,
    state_from_dcm,
)
from .planner import (
    Footstep,
    FootstepPlan,
    ReferenceTrajectory,
    StepParams,
    SwingTrajectory,
    build_reference,
    com_bvp,
    com_vel_bvp,
    dcm_reference,
    plan_footsteps,
    replan_reference,
    swing_trajectory,
    zmp_reference,
)
from .estimator import AxisEstimate, NoiseModel, predict, sample_measurement, update
from .controller import (
    ControllerState,
    LqrWeights,
    augment_with_integrator,
    control_step,
    lqr_gain,
    make_axis_controller,
    saturate_zmp,
    solve_care,
)
from .step_adjust import ComplianceConfig, adjust_plan, compliance_offset, predict_next_footstep
from .sim import (
    DisturbanceEvent,
    FallThresholds,
    PushLimitResult,
    ScenarioConfig,
    SimulationResult,
    detect_fall,
    disturbance_accel,
    find_push_limit,
    push_scenario,
    run_height_mismatch,
    run_scenario,
)

__version__ = "0.1.0"
