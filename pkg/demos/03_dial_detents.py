"""The rotary detent integrator, sample by sample.

Feeds a slow 120 Hz rotation through the dial state machine: individual
deltas sit below the 0.5 degree jitter floor, yet the anchored reference
lets the turn integrate, clicking once per 30 degree detent.
"""

import math

from spice.dial import DialState, dial_update
from spice.rotations import yaw_quat
from spice.tracking import RigidBodyPose


def pose_at(yaw_deg: float, t: float) -> RigidBodyPose:
    return RigidBodyPose(7, t, (1.24, 0.14, 0.02), yaw_quat(math.radians(yaw_deg)))


def main():
    state = DialState()
    events = []

    # 95 degrees over 2 seconds: ~0.4 deg per sample at 120 Hz.
    steps = 240
    for k in range(steps + 1):
        yaw = 95.0 * k / steps
        state, evs = dial_update(state, pose_at(yaw, k / 120.0), in_zone=True)
        for e in evs:
            events.append(e)
            print(f"t={e.timestamp:6.3f} s  {e.direction}  (yaw {yaw:6.2f} deg)")
    print(f"total: {len(events)} events for a 95 degree turn "
          f"(floor(95/30) = {int(95 // 30)})")
    assert [e.direction for e in events] == ["next"] * 3

    # Leaving the zone clears the residue; re-entry re-anchors silently.
    state, evs = dial_update(state, pose_at(95.0, 2.1), in_zone=False)
    print(f"left zone: active={state.active}, residue cleared")
    state, evs = dial_update(state, pose_at(180.0, 2.2), in_zone=True)
    print(f"re-entered at 180 deg: {len(evs)} events (placement never scrolls)")
    assert evs == []


if __name__ == "__main__":
    main()
