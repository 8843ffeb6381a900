"""Online footstep adjustment from predicted end-of-step DCM.

Because the DCM diverges at a known rate, its value at the end of the
current step follows in closed form from the current measurement.  When
the predicted landing point drifts from the planned next footstep by more
than a compliance margin, the upcoming placement (and every placement
after it, to preserve the gait geometry) is shifted by a saturated
proportional offset and the references are regenerated by the planner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .planner import FootstepPlan


@dataclass(frozen=True)
class ComplianceConfig:
    """Dead-zone margin, proportional slope and reach clamp for adjustments."""

    margin: float = 0.025
    slope: float = 1.2
    max_offset: float = 0.3
    enabled: bool = True
    freeze_time: float = 0.05

    def __post_init__(self):
        if self.margin < 0.0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")
        if self.slope < 0.0:
            raise ValueError(f"slope must be >= 0, got {self.slope}")
        if not (self.max_offset > self.margin):
            raise ValueError("max_offset must exceed margin")
        if self.freeze_time < 0.0:
            raise ValueError(f"freeze_time must be >= 0, got {self.freeze_time}")


def predict_next_footstep(p_x: float, zeta_t: float, t: float, T: float, omega: float) -> float:
    """End-of-step DCM from the initial value problem: where the swing leg
    must land to bring the motion to rest, p + (zeta - p) e^{w (T-t)}."""
    if not (omega > 0.0):
        raise ValueError(f"omega must be positive, got {omega}")
    if t < 0.0 or t > T:
        raise ValueError(f"t={t} outside the step window [0, {T}]")
    return p_x + (zeta_t - p_x) * math.exp(omega * (T - t))


def compliance_offset(e: float, cfg: ComplianceConfig) -> float:
    """Landing offset for a predicted deviation e: zero inside the margin,
    then slope times the excess, clamped to the kinematic reach."""
    mag = abs(e)
    if mag <= cfg.margin:
        return 0.0
    off = min(cfg.slope * (mag - cfg.margin), cfg.max_offset)
    return math.copysign(off, e)


def adjust_plan(
    plan: FootstepPlan,
    upcoming_index: int,
    offset: tuple[float, float],
    remaining_swing_time: float,
    freeze_time: float = 0.05,
) -> FootstepPlan | None:
    """Shift the upcoming footstep and all later ones by offset.

    Returns the adjusted plan, or None when the request falls inside the
    landing freeze window (too little swing time left to re-target).
    """
    if not (0 < upcoming_index <= plan.n_steps):
        raise ValueError(f"upcoming_index={upcoming_index} out of range")
    if remaining_swing_time <= freeze_time:
        return None
    return plan.shifted(upcoming_index, offset)
