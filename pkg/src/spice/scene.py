"""Scene model: agent registry, workspace geometry, zones, projector mapping.

Table coordinates are millimeters with the origin at the front-left corner
(x grows right, y grows away from the cook). The projector mapping is a
plane homography fitted from calibration correspondences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TABLE_MM = (1380.0, 690.0, 750.0)
ZONE_EXIT_HYSTERESIS_MM = 10.0
AGENT_KINDS = ("ingredient", "rbi", "zone", "display")


class DuplicateAddress(ValueError):
    """An explicitly supplied agent address is already registered."""


class SingularHomography(ValueError):
    """The workspace homography cannot be inverted."""


class DegenerateConfiguration(ValueError):
    """Too few or collinear correspondences for a homography fit."""


@dataclass(frozen=True)
class Agent:
    """One tracked or synthesized object in the scene."""

    address: str
    kind: str
    label: str
    state: object = None


@dataclass(frozen=True)
class ZoneEvent:
    """Boundary crossing of one agent against one named zone."""

    address: str
    zone: str
    transition: str  # "enter" or "exit"
    timestamp: float


class AgentRegistry:
    """Address-keyed agent store with per-kind monotonically counted addresses."""

    def __init__(self):
        self._agents: dict[str, Agent] = {}
        self._counters: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self._agents)

    def register(self, kind: str, label: str, state=None, address: str | None = None) -> Agent:
        if kind not in AGENT_KINDS:
            raise ValueError(f"unknown agent kind {kind!r}")
        if not label:
            raise ValueError("agent label must be non-empty")
        if address is None:
            n = self._counters.get(kind, 0) + 1
            self._counters[kind] = n
            address = f"spice://{kind}/{n}"
        elif address in self._agents:
            raise DuplicateAddress(address)
        agent = Agent(address=address, kind=kind, label=label, state=state)
        self._agents[address] = agent
        return agent

    def get(self, address: str) -> Agent:
        return self._agents[address]

    def update_state(self, address: str, state) -> Agent:
        old = self._agents[address]
        agent = Agent(address=old.address, kind=old.kind, label=old.label, state=state)
        self._agents[address] = agent
        return agent

    def by_kind(self, kind: str) -> list[Agent]:
        return [a for a in self._agents.values() if a.kind == kind]

    def snapshot(self) -> dict[str, Agent]:
        return dict(self._agents)


@dataclass(frozen=True)
class Workspace:
    """Table geometry, named convex zones (mm), table->projector homography."""

    table_mm: tuple[float, float, float] = DEFAULT_TABLE_MM
    zones: dict[str, np.ndarray] = field(default_factory=dict)
    homography: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "homography", np.asarray(self.homography, dtype=float).reshape(3, 3))
        zones = {name: np.asarray(poly, dtype=float).reshape(-1, 2) for name, poly in self.zones.items()}
        object.__setattr__(self, "zones", zones)
        w, d, _h = self.table_mm
        for name, poly in zones.items():
            if len(poly) < 3:
                raise ValueError(f"zone {name!r} needs at least 3 vertices")
            if (poly[:, 0] < 0).any() or (poly[:, 0] > w).any() or (poly[:, 1] < 0).any() or (poly[:, 1] > d).any():
                raise ValueError(f"zone {name!r} extends beyond the table")
        if abs(np.linalg.det(self.homography)) <= 1e-12:
            raise SingularHomography("workspace homography is not invertible")


def default_dial_zone(table_mm=DEFAULT_TABLE_MM) -> np.ndarray:
    """200 mm square anchored 40 mm in from the front-right table corner."""
    w = table_mm[0]
    x1, x0 = w - 40.0, w - 240.0
    y0, y1 = 40.0, 240.0
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])


def default_workspace() -> Workspace:
    return Workspace(zones={"dial": default_dial_zone()})


def load_workspace(path) -> Workspace:
    """Read a workspace config JSON (table_mm, zones, homography row-major)."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    table = tuple(float(v) for v in data.get("table_mm", DEFAULT_TABLE_MM))
    zones = {name: np.asarray(poly, dtype=float) for name, poly in data.get("zones", {}).items()}
    h = np.asarray(data.get("homography", np.eye(3).ravel().tolist()), dtype=float).reshape(3, 3)
    return Workspace(table_mm=table, zones=zones, homography=h)


def workspace_to_config(w: Workspace) -> dict:
    return {
        "table_mm": list(w.table_mm),
        "zones": {name: poly.tolist() for name, poly in w.zones.items()},
        "homography": w.homography.ravel().tolist(),
    }


# ---------------------------------------------------------------------------
# Projective mapping
# ---------------------------------------------------------------------------


def _apply_homography(h: np.ndarray, point) -> tuple[float, float]:
    v = h @ np.array([point[0], point[1], 1.0])
    if abs(v[2]) < 1e-15:
        raise SingularHomography("point maps to infinity")
    return (float(v[0] / v[2]), float(v[1] / v[2]))


def table_to_projector(w: Workspace, point_mm) -> tuple[float, float]:
    """Map a table point (mm) to projector pixels."""
    return _apply_homography(w.homography, point_mm)


def projector_to_table(w: Workspace, pixel) -> tuple[float, float]:
    """Inverse of table_to_projector."""
    return _apply_homography(np.linalg.inv(w.homography), pixel)


def fit_homography(src_points, dst_points) -> tuple[np.ndarray, float]:
    """Least-squares DLT homography from >= 4 correspondences.

    Points are Hartley-normalized before the SVD solve. Returns the matrix
    scaled so h33 = 1 and the reprojection RMS over the inputs.
    """
    src = np.asarray(src_points, dtype=float).reshape(-1, 2)
    dst = np.asarray(dst_points, dtype=float).reshape(-1, 2)
    if len(src) != len(dst):
        raise ValueError("correspondence lists must have equal length")
    if len(src) < 4:
        raise DegenerateConfiguration("homography needs at least 4 correspondences")

    def normalizer(pts):
        c = pts.mean(axis=0)
        scale = math.sqrt(2.0) / max(np.mean(np.linalg.norm(pts - c, axis=1)), 1e-12)
        return np.array([[scale, 0, -scale * c[0]], [0, scale, -scale * c[1]], [0, 0, 1]])

    ts = normalizer(src)
    td = normalizer(dst)
    sn = (src @ ts[:2, :2].T) + ts[:2, 2]
    dn = (dst @ td[:2, :2].T) + td[:2, 2]

    rows = []
    for (x, y), (u, v) in zip(sn, dn):
        rows.append([-x, -y, -1, 0, 0, 0, u * x, u * y, u])
        rows.append([0, 0, 0, -x, -y, -1, v * x, v * y, v])
    a = np.array(rows)
    _, s, vt = np.linalg.svd(a)
    # rank < 8 means the correspondences do not pin down a homography
    if s[-2] < 1e-9 * s[0]:
        raise DegenerateConfiguration("correspondences are degenerate (collinear?)")
    h = np.linalg.inv(td) @ vt[-1].reshape(3, 3) @ ts
    if abs(h[2, 2]) < 1e-12:
        raise DegenerateConfiguration("fitted homography is singular at h33")
    h /= h[2, 2]

    errs = [np.hypot(*(np.array(_apply_homography(h, p)) - q)) for p, q in zip(src, dst)]
    rms = math.sqrt(float(np.mean(np.square(errs))))
    return h, rms


# ---------------------------------------------------------------------------
# Zone membership
# ---------------------------------------------------------------------------


def point_in_convex_polygon(point, polygon: np.ndarray) -> bool:
    """Inclusion test via consistent cross-product signs; boundary counts as in."""
    p = np.asarray(point, dtype=float)
    n = len(polygon)
    sign = 0.0
    for i in range(n):
        a = polygon[i]
        b = polygon[(i + 1) % n]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if abs(cross) < 1e-12:
            continue
        if sign == 0.0:
            sign = math.copysign(1.0, cross)
        elif math.copysign(1.0, cross) != sign:
            return False
    return True


def distance_to_polygon_boundary(point, polygon: np.ndarray) -> float:
    """Minimum distance from a point to the polygon's edges."""
    p = np.asarray(point, dtype=float)
    best = math.inf
    n = len(polygon)
    for i in range(n):
        a = polygon[i]
        b = polygon[(i + 1) % n]
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
        best = min(best, float(np.linalg.norm(a + t * ab - p)))
    return best


class ZoneMembership:
    """Per-(agent, zone) in/out state with an exit hysteresis band.

    An agent enters when its point lies inside the polygon and exits only
    once it is more than ZONE_EXIT_HYSTERESIS_MM outside, so jitter on the
    boundary cannot chatter events.
    """

    def __init__(self, hysteresis_mm: float = ZONE_EXIT_HYSTERESIS_MM):
        self.hysteresis_mm = hysteresis_mm
        self._inside: dict[tuple[str, str], bool] = {}

    def is_inside(self, address: str, zone: str) -> bool:
        return self._inside.get((address, zone), False)

    def update(self, workspace: Workspace, address: str, position_mm, timestamp: float) -> list[ZoneEvent]:
        p = (float(position_mm[0]), float(position_mm[1]))
        if not all(math.isfinite(v) for v in p):
            raise ValueError("position must be finite")
        events = []
        for name, poly in workspace.zones.items():
            key = (address, name)
            was_inside = self._inside.get(key, False)
            strictly_in = point_in_convex_polygon(p, poly)
            if not was_inside and strictly_in:
                self._inside[key] = True
                events.append(ZoneEvent(address, name, "enter", timestamp))
            elif was_inside and not strictly_in:
                if distance_to_polygon_boundary(p, poly) > self.hysteresis_mm:
                    self._inside[key] = False
                    events.append(ZoneEvent(address, name, "exit", timestamp))
        return events
