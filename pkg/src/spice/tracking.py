"""Rigid-body tracking: marker templates, triangulation, pose fitting, wire codec.

A trackable object is an asymmetric constellation of at least four markers
with a fixed geometry. Poses are solved against a :class:`MarkerTemplate`
and streamed as SPICE-TRK datagrams (see ``encode_pose_frame``).
"""

from __future__ import annotations

import itertools
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from spice.rotations import Quaternion, matrix_to_quat, quat_norm, quat_to_matrix

MIN_MARKERS = 4
MIN_MARKER_SPACING_M = 0.005
SYMMETRY_TOL_M = 1e-6
NO_FIT_RMS_M = 0.010
AMBIGUITY_RMS_GAP_M = 1e-9


class DegenerateGeometry(ValueError):
    """Raised when triangulation rays cannot intersect meaningfully."""


class AmbiguousFit(ValueError):
    """Two marker correspondence assignments fit equally well."""


class NoFit(ValueError):
    """No correspondence assignment fits within the residual ceiling."""


class MalformedDatagram(ValueError):
    """A SPICE-TRK datagram failed structural or numeric validation."""


@dataclass(frozen=True)
class MarkerTemplate:
    """Marker constellation defining one trackable rigid body.

    ``markers`` is an (n, 3) array of marker centers in meters, expressed in
    the body frame.
    """

    body_id: int
    name: str
    markers: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "markers", np.asarray(self.markers, dtype=float).reshape(-1, 3))


@dataclass(frozen=True)
class CameraModel:
    """Ideal pinhole camera. ``orientation`` rotates camera frame to world.

    The camera looks along its local +Z; pixel x grows right, y grows down.
    """

    position: np.ndarray
    orientation: Quaternion
    focal_px: float
    principal_point: tuple[float, float]
    resolution: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        if abs(quat_norm(self.orientation) - 1.0) > 1e-9:
            raise ValueError("camera orientation must be a unit quaternion")
        if self.resolution[0] <= 0 or self.resolution[1] <= 0:
            raise ValueError("camera resolution must be positive")

    def project(self, point) -> tuple[float, float]:
        """Pixel coordinates of a world point; the point must be in front."""
        r = quat_to_matrix(self.orientation)
        pc = r.T @ (np.asarray(point, dtype=float) - self.position)
        if pc[2] <= 0:
            raise ValueError("point is behind the camera")
        cx, cy = self.principal_point
        return (
            self.focal_px * pc[0] / pc[2] + cx,
            self.focal_px * pc[1] / pc[2] + cy,
        )

    def ray_direction(self, pixel) -> np.ndarray:
        """Unit world-frame direction of the viewing ray through a pixel."""
        cx, cy = self.principal_point
        d = np.array([(pixel[0] - cx) / self.focal_px, (pixel[1] - cy) / self.focal_px, 1.0])
        d /= np.linalg.norm(d)
        return quat_to_matrix(self.orientation) @ d


@dataclass(frozen=True)
class RigidBodyPose:
    """Timestamped 6-DoF pose of one tracked body."""

    body_id: int
    timestamp: float
    position: tuple[float, float, float]
    orientation: Quaternion

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "orientation", tuple(float(v) for v in self.orientation))


@dataclass(frozen=True)
class PoseFrame:
    """One tracker frame: a sequence number and the poses solved in it."""

    sequence: int
    poses: tuple[RigidBodyPose, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))


# ---------------------------------------------------------------------------
# Template validation
# ---------------------------------------------------------------------------


def cube_rotations() -> list[np.ndarray]:
    """The 24 proper rotations of the cube (signed permutation matrices, det +1)."""
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            r = np.zeros((3, 3))
            for row, (col, s) in enumerate(zip(perm, signs)):
                r[row, col] = s
            if np.linalg.det(r) > 0.5:
                mats.append(r)
    return mats


def symmetry_probe_rotations(count: int = 100, seed: int = 42) -> list[np.ndarray]:
    """Deterministic pseudo-random rotations used to probe for self-mapping."""
    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(count):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        mats.append(quat_to_matrix(tuple(q)))
    return mats


_SYMMETRY_TEST_SET: list[np.ndarray] | None = None


def _symmetry_test_set() -> list[np.ndarray]:
    global _SYMMETRY_TEST_SET
    if _SYMMETRY_TEST_SET is None:
        _SYMMETRY_TEST_SET = cube_rotations() + symmetry_probe_rotations()
    return _SYMMETRY_TEST_SET


def _maps_onto_itself(centered: np.ndarray, rot: np.ndarray, tol: float) -> bool:
    rotated = centered @ rot.T
    dists = np.linalg.norm(rotated[:, None, :] - centered[None, :, :], axis=2)
    nearest = dists.argmin(axis=1)
    if len(set(nearest.tolist())) != len(centered):
        return False
    return bool((dists[np.arange(len(centered)), nearest] < tol).all())


def validate_template(template: MarkerTemplate) -> list[str]:
    """Check the marker-constellation invariants.

    Returns an empty list when the template is usable, otherwise one entry
    per violated rule. Violations are data, not faults.
    """
    violations = []
    pts = template.markers
    if not np.isfinite(pts).all():
        violations.append("markers finite")
        return violations
    if len(pts) < MIN_MARKERS:
        violations.append("marker count >= 4")
    if len(pts) >= 2:
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        iu = np.triu_indices(len(pts), k=1)
        if (d[iu] <= MIN_MARKER_SPACING_M).any():
            violations.append("pairwise marker distances > 5 mm")
    if len(pts) >= 2:
        centered = pts - pts.mean(axis=0)
        for rot in _symmetry_test_set():
            if np.abs(rot - np.eye(3)).max() < 1e-12:
                continue
            if _maps_onto_itself(centered, rot, SYMMETRY_TOL_M):
                violations.append("asymmetric")
                break
    return violations


def load_marker_template(path) -> MarkerTemplate:
    """Read a marker-template JSON fixture (body_id, name, markers)."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    return MarkerTemplate(
        body_id=int(data["body_id"]),
        name=str(data["name"]),
        markers=np.asarray(data["markers"], dtype=float),
    )


# ---------------------------------------------------------------------------
# Triangulation
# ---------------------------------------------------------------------------

PARALLEL_RAY_TOL_RAD = 1e-9


def triangulate_marker(observations) -> tuple[np.ndarray, float]:
    """Least-squares intersection of the viewing rays for one marker.

    ``observations`` is a sequence of ``(CameraModel, (u, v))`` pairs. Returns
    the 3D point and the RMS point-to-ray distance.
    """
    if len(observations) < 2:
        raise DegenerateGeometry("triangulation needs at least 2 observations")
    origins = np.array([cam.position for cam, _ in observations])
    dirs = np.array([cam.ray_direction(px) for cam, px in observations])

    max_angle = 0.0
    for i in range(len(dirs)):
        for j in range(i + 1, len(dirs)):
            sin_angle = np.linalg.norm(np.cross(dirs[i], dirs[j]))
            max_angle = max(max_angle, math.asin(min(1.0, sin_angle)))
    if max_angle < PARALLEL_RAY_TOL_RAD:
        raise DegenerateGeometry("viewing rays are parallel")

    a = np.zeros((3, 3))
    b = np.zeros(3)
    for o, d in zip(origins, dirs):
        proj = np.eye(3) - np.outer(d, d)
        a += proj
        b += proj @ o
    point = np.linalg.solve(a, b)

    residuals = []
    for o, d in zip(origins, dirs):
        v = point - o
        residuals.append(np.linalg.norm(v - (v @ d) * d))
    rms = math.sqrt(float(np.mean(np.square(residuals))))
    return point, rms


# ---------------------------------------------------------------------------
# Rigid registration
# ---------------------------------------------------------------------------


def _kabsch(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Proper rigid transform (R, t) minimizing ||R src + t - dst||^2."""
    cs = src.mean(axis=0)
    cd = dst.mean(axis=0)
    h = (src - cs).T @ (dst - cd)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = cd - r @ cs
    return r, t


def _transform_rms(r, t, src, dst) -> float:
    err = src @ r.T + t - dst
    return math.sqrt(float(np.mean(np.sum(err * err, axis=1))))


def _candidate_assignments(tpl: np.ndarray, obs: np.ndarray, dist_tol: float):
    """Yield observed->template index assignments consistent with pairwise distances.

    Distance-signature matching prunes candidates per point before the
    backtracking refinement, which keeps the search far below factorial cost.
    """
    n = len(tpl)
    dt = np.linalg.norm(tpl[:, None, :] - tpl[None, :, :], axis=2)
    do = np.linalg.norm(obs[:, None, :] - obs[None, :, :], axis=2)
    sig_t = np.sort(dt, axis=1)
    sig_o = np.sort(do, axis=1)

    candidates = []
    for j in range(n):
        cands = [i for i in range(n) if np.abs(sig_t[i] - sig_o[j]).max() < dist_tol]
        if not cands:
            return
        candidates.append(cands)

    assignment = [-1] * n
    used = [False] * n

    def backtrack(j):
        if j == n:
            yield tuple(assignment)
            return
        for i in candidates[j]:
            if used[i]:
                continue
            ok = True
            for jj in range(j):
                if abs(dt[i, assignment[jj]] - do[j, jj]) >= dist_tol:
                    ok = False
                    break
            if ok:
                assignment[j] = i
                used[i] = True
                yield from backtrack(j + 1)
                used[i] = False
        assignment[j] = -1

    yield from backtrack(0)


def fit_rigid_body(
    template: MarkerTemplate,
    observed,
    timestamp: float = 0.0,
    dist_tol: float = 0.005,
) -> tuple[RigidBodyPose, float]:
    """Solve the 6-DoF pose of a template from unlabeled observed markers.

    Correspondences are searched by pairwise-distance signature matching with
    backtracking refinement; each complete assignment is scored by its
    least-squares registration residual and the best one wins.

    Returns the pose and the RMS marker residual in meters.
    """
    obs = np.asarray(observed, dtype=float).reshape(-1, 3)
    if len(obs) != len(template.markers):
        raise ValueError("observed marker count must equal template marker count")

    best: tuple[float, tuple, np.ndarray, np.ndarray] | None = None
    second_rms: float | None = None
    for assignment in _candidate_assignments(template.markers, obs, dist_tol):
        src = template.markers[list(assignment)]
        r, t = _kabsch(src, obs)
        rms = _transform_rms(r, t, src, obs)
        if best is None or rms < best[0]:
            if best is not None and assignment != best[1]:
                second_rms = best[0]
            best = (rms, assignment, r, t)
        elif assignment != best[1]:
            second_rms = rms if second_rms is None else min(second_rms, rms)

    if best is None or best[0] > NO_FIT_RMS_M:
        raise NoFit("no correspondence assignment within the residual ceiling")
    if second_rms is not None and abs(second_rms - best[0]) < AMBIGUITY_RMS_GAP_M:
        raise AmbiguousFit("two correspondence assignments fit equally well")

    rms, _, r, t = best
    pose = RigidBodyPose(
        body_id=template.body_id,
        timestamp=timestamp,
        position=tuple(t.tolist()),
        orientation=matrix_to_quat(r),
    )
    return pose, rms


# ---------------------------------------------------------------------------
# SPICE-TRK datagram codec
# ---------------------------------------------------------------------------

TRK_MAGIC = b"SPTK"
TRK_VERSION = 1
_HEADER = struct.Struct("<4sBBHQ")
_POSE = struct.Struct("<HHd3d4d")
QUAT_WIRE_TOL = 1e-3


def encode_pose_frame(frame: PoseFrame) -> bytes:
    """Serialize a frame to one SPICE-TRK datagram.

    Rejects frames that could not round-trip: out-of-range ids, duplicate
    bodies, non-finite floats, or non-unit quaternions.
    """
    seen = set()
    parts = [_HEADER.pack(TRK_MAGIC, TRK_VERSION, 0, len(frame.poses), frame.sequence)]
    for pose in frame.poses:
        if not 0 <= pose.body_id <= 0xFFFF:
            raise MalformedDatagram("body_id out of u16 range")
        if pose.body_id in seen:
            raise MalformedDatagram("duplicate body_id in frame")
        seen.add(pose.body_id)
        values = (pose.timestamp, *pose.position, *pose.orientation)
        if not all(math.isfinite(v) for v in values):
            raise MalformedDatagram("non-finite pose value")
        if abs(quat_norm(pose.orientation) - 1.0) > QUAT_WIRE_TOL:
            raise MalformedDatagram("non-unit quaternion")
        parts.append(
            _POSE.pack(pose.body_id, 0, pose.timestamp, *pose.position, *pose.orientation)
        )
    return b"".join(parts)


def decode_pose_datagram(data: bytes) -> PoseFrame:
    """Parse one SPICE-TRK datagram; raises MalformedDatagram on any defect."""
    if len(data) < _HEADER.size:
        raise MalformedDatagram("truncated header")
    magic, version, _reserved, count, sequence = _HEADER.unpack_from(data)
    if magic != TRK_MAGIC:
        raise MalformedDatagram("bad magic")
    if version != TRK_VERSION:
        raise MalformedDatagram("bad version")
    if len(data) != _HEADER.size + count * _POSE.size:
        raise MalformedDatagram("body length does not match pose count")

    poses = []
    seen = set()
    offset = _HEADER.size
    for _ in range(count):
        fields = _POSE.unpack_from(data, offset)
        offset += _POSE.size
        body_id = fields[0]
        ts = fields[2]
        position = fields[3:6]
        quat = fields[6:10]
        if body_id in seen:
            raise MalformedDatagram("duplicate body_id in frame")
        seen.add(body_id)
        if not all(math.isfinite(v) for v in fields[2:]):
            raise MalformedDatagram("non-finite pose value")
        if abs(quat_norm(quat) - 1.0) > QUAT_WIRE_TOL:
            raise MalformedDatagram("non-unit quaternion")
        poses.append(
            RigidBodyPose(body_id=body_id, timestamp=ts, position=position, orientation=quat)
        )
    return PoseFrame(sequence=sequence, poses=tuple(poses))
