"""Rotary dial gesture recognition from the RBI's yaw stream.

The dial is armed only while the RBI sits in its designated zone. Yaw is
integrated across samples (unwrapped over the ±pi seam) and every full
detent of accumulated rotation emits one step-navigation event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from spice.rotations import quat_norm, wrap_angle
from spice.tracking import RigidBodyPose

DEFAULT_DETENT_RAD = math.pi / 6
DEFAULT_JITTER_FLOOR_RAD = math.radians(0.5)
DETENT_EPSILON = 1e-9


class NonUnitQuaternion(ValueError):
    """Quaternion norm is too far from 1 to trust its yaw."""


@dataclass(frozen=True)
class StepNavEvent:
    """One discrete recipe-step navigation command."""

    direction: str  # "next" or "prev"
    timestamp: float
    source: str


@dataclass(frozen=True)
class DialState:
    """Immutable dial-integrator state; dial_update returns the successor.

    ``accumulated`` stays strictly below one detent between updates. While
    inactive, ``last_yaw`` is absent and nothing integrates.
    """

    active: bool = False
    last_yaw: float | None = None
    accumulated: float = 0.0
    detent_angle: float = DEFAULT_DETENT_RAD
    direction_sign: int = 1
    jitter_floor: float = DEFAULT_JITTER_FLOOR_RAD
    source: str = "spice://rbi/1"


def yaw_from_quaternion(q) -> float:
    """Rotation about the table normal (Z), ZYX Euler convention, in (-pi, pi]."""
    if abs(quat_norm(q) - 1.0) > 1e-6:
        raise NonUnitQuaternion("yaw extraction requires a unit quaternion")
    w, x, y, z = q
    return wrap_angle(math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z)))


def dial_update(state: DialState, pose: RigidBodyPose, in_zone: bool) -> tuple[DialState, list[StepNavEvent]]:
    """Advance the dial integrator by one pose sample.

    Leaving the zone disarms and clears the integrator. On entry the current
    yaw becomes the reference, so placement orientation never scrolls. Yaw
    deltas below the jitter floor leave the reference untouched, letting a
    slow rotation build up instead of being swallowed sample by sample.
    """
    if not in_zone:
        if state.active or state.last_yaw is not None or state.accumulated != 0.0:
            state = replace(state, active=False, last_yaw=None, accumulated=0.0)
        return state, []

    yaw = yaw_from_quaternion(pose.orientation)
    if not state.active:
        return replace(state, active=True, last_yaw=yaw, accumulated=0.0), []

    delta = wrap_angle(yaw - state.last_yaw)
    if abs(delta) < state.jitter_floor:
        return state, []

    accumulated = state.accumulated + delta
    events = []
    while abs(accumulated) >= state.detent_angle - DETENT_EPSILON:
        sign = 1 if accumulated > 0 else -1
        direction = "next" if sign == state.direction_sign else "prev"
        events.append(StepNavEvent(direction=direction, timestamp=pose.timestamp, source=state.source))
        accumulated -= math.copysign(state.detent_angle, accumulated)
    return replace(state, last_yaw=yaw, accumulated=accumulated), events
