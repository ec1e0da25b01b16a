"""Zone membership with exit hysteresis, and the projector mapping.

Walks a point across the dial zone's edge with a jittery trajectory and
shows that the 10 mm hysteresis band suppresses enter/exit chatter.
"""

from pathlib import Path

from spice.scene import ZoneMembership, load_workspace, projector_to_table, table_to_projector

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main():
    workspace = load_workspace(FIXTURES / "workspace.json")
    print(f"table: {workspace.table_mm} mm, zones: {sorted(workspace.zones)}")

    corner = workspace.zones["dial"][0]
    px = table_to_projector(workspace, corner)
    back = projector_to_table(workspace, px)
    print(f"zone corner {corner.tolist()} mm -> {tuple(round(v, 1) for v in px)} px -> "
          f"{tuple(round(v, 1) for v in back)} mm")

    membership = ZoneMembership()
    # Oscillate 2 mm around the x = 1140 edge: one enter, no exit chatter.
    xs = [1138.0, 1141.0, 1139.0, 1142.0, 1138.5, 1141.5]
    print("\njitter across the zone edge (2 mm amplitude):")
    for i, x in enumerate(xs):
        events = membership.update(workspace, "spice://rbi/1", (x, 140.0), float(i))
        marks = ", ".join(f"{e.transition} {e.zone}" for e in events) or "-"
        print(f"  t={i} x={x:7.1f} mm  events: {marks}")

    # Only a move clearly beyond the band exits.
    events = membership.update(workspace, "spice://rbi/1", (1125.0, 140.0), 9.0)
    print(f"  t=9 x= 1125.0 mm  events: {', '.join(e.transition for e in events) or '-'}")
    assert [e.transition for e in events] == ["exit"]


if __name__ == "__main__":
    main()
