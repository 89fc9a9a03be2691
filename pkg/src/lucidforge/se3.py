"""SE(3) poses, quaternion helpers, the 6-number rotation encoding, and interpolation.

Conventions used throughout the package:

- quaternions are scalar-first ``(w, x, y, z)``, unit norm, canonicalized to
  ``w >= 0`` (a tie at ``w == 0`` is broken by making the first nonzero
  component positive), so equal rotations have equal components;
- positions are meters;
- the 6-number rotation encoding is the first two *columns* of the rotation
  matrix, concatenated, decoded with Gram-Schmidt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Skip re-normalization when the squared norm is already this close to 1.
# Keeps chained products of unit quaternions bit-stable (identity composes
# exactly) while staying far below the 1e-9 norm invariant.
_RENORM_EPS = 1e-14

# Columns of a 6d encoding closer to parallel/zero than this are rejected.
DEGENERACY_EPS = 1e-8


class DegenerateRot6DError(ValueError):
    """Raised when a 6-number rotation has (near-)parallel or zero columns."""


def _as_vec(x, n: int) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.shape != (n,):
        raise ValueError(f"expected shape ({n},), got {v.shape}")
    return v


def quat_normalize(q) -> np.ndarray:
    """Unit-norm, w >= 0 canonical form of a quaternion."""
    q = _as_vec(q, 4)
    n2 = float(q @ q)
    if n2 <= 0.0 or not math.isfinite(n2):
        raise ValueError("cannot normalize zero/non-finite quaternion")
    if abs(n2 - 1.0) > _RENORM_EPS:
        q = q / math.sqrt(n2)
    w = q[0]
    if w < 0.0:
        q = -q
    elif w == 0.0:
        for c in q[1:]:
            if c != 0.0:
                if c < 0.0:
                    q = -q
                break
    return q


def quat_mul(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conj(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion (v + w*t + q_vec x t form)."""
    qv = np.asarray(q[1:], dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    t = 2.0 * np.cross(qv, v)
    return v + q[0] * t + np.cross(qv, t)


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    if angle == 0.0:
        return np.array([1.0, 0.0, 0.0, 0.0])
    axis = _as_vec(axis, 3)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("zero rotation axis")
    half = 0.5 * angle
    return quat_normalize(np.concatenate(([math.cos(half)], math.sin(half) / n * axis)))


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(R) -> np.ndarray:
    """Rotation matrix to quaternion, branching on the largest diagonal term."""
    R = np.asarray(R, dtype=np.float64)
    t = R[0, 0] + R[1, 1] + R[2, 2]
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif R[1, 1] >= R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    return quat_normalize(np.array(q))


def rotvec_from_quat(q) -> np.ndarray:
    """Axis-angle (rotation vector) of a unit quaternion."""
    w, x, y, z = q
    s = math.sqrt(x * x + y * y + z * z)
    if s < 1e-12:
        return np.zeros(3)
    angle = 2.0 * math.atan2(s, w)
    if angle > math.pi:
        angle -= 2.0 * math.pi
    return (angle / s) * np.array([x, y, z])


def rotvec_from_matrix(R) -> np.ndarray:
    """Axis-angle (rotation vector) of a rotation matrix; robust near 0 and pi."""
    return rotvec_from_quat(quat_from_matrix(R))


def quat_angle(q) -> float:
    """Rotation angle of a unit quaternion, in [0, pi]."""
    w = min(1.0, max(-1.0, abs(float(q[0]))))
    return 2.0 * math.acos(w)


@dataclass(eq=False)
class Pose:
    """A rigid transform: rotate by ``quat`` then translate by ``position``."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quat: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self):
        self.position = _as_vec(self.position, 3)
        if not np.all(np.isfinite(self.position)):
            raise ValueError("non-finite position")
        self.quat = quat_normalize(self.quat)

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_translation(cls, x, y=None, z=None) -> "Pose":
        if y is None:
            return cls(position=np.asarray(x, dtype=np.float64))
        return cls(position=np.array([x, y, z], dtype=np.float64))

    @classmethod
    def from_axis_angle(cls, axis, angle: float, position=(0.0, 0.0, 0.0)) -> "Pose":
        return cls(position=np.asarray(position, dtype=np.float64), quat=quat_from_axis_angle(axis, angle))

    @classmethod
    def from_matrix(cls, M) -> "Pose":
        M = np.asarray(M, dtype=np.float64)
        return cls(position=M[:3, 3].copy(), quat=quat_from_matrix(M[:3, :3]))

    def to_matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = quat_to_matrix(self.quat)
        M[:3, 3] = self.position
        return M

    def compose(self, other: "Pose") -> "Pose":
        """Group product: self applied after ... i.e. (self o other)(x) = self(other(x))."""
        return Pose(
            position=self.position + quat_rotate(self.quat, other.position),
            quat=quat_mul(self.quat, other.quat),
        )

    def inverse(self) -> "Pose":
        qi = quat_conj(self.quat)
        return Pose(position=-quat_rotate(qi, self.position), quat=qi)

    def transform_point(self, p) -> np.ndarray:
        return self.position + quat_rotate(self.quat, p)

    def copy(self) -> "Pose":
        return Pose(position=self.position.copy(), quat=self.quat.copy())

    def approx_equal(self, other: "Pose", tol: float = 1e-9) -> bool:
        return bool(
            np.max(np.abs(self.position - other.position)) <= tol
            and min(np.max(np.abs(self.quat - other.quat)), np.max(np.abs(self.quat + other.quat))) <= tol
        )

    def __repr__(self):
        p = ", ".join(f"{v:.6g}" for v in self.position)
        q = ", ".join(f"{v:.6g}" for v in self.quat)
        return f"Pose(p=[{p}], q=[{q}])"


@dataclass(eq=False)
class Twist:
    """Instantaneous displacement: linear (m) and angular (rad, axis-angle)."""

    linear: np.ndarray
    angular: np.ndarray

    def __post_init__(self):
        self.linear = _as_vec(self.linear, 3)
        self.angular = _as_vec(self.angular, 3)
        if not (np.all(np.isfinite(self.linear)) and np.all(np.isfinite(self.angular))):
            raise ValueError("non-finite twist")

    def norm(self) -> float:
        return float(np.sqrt(self.linear @ self.linear + self.angular @ self.angular))


def rot_to_6d(q) -> np.ndarray:
    """First two columns of the rotation matrix, concatenated: (a1, a2)."""
    R = quat_to_matrix(q)
    return np.concatenate([R[:, 0], R[:, 1]])


def rot_from_6d(r) -> np.ndarray:
    """Decode two (possibly noisy) matrix columns into a unit quaternion.

    Gram-Schmidt: b1 = a1/|a1|, b2 = normalize(a2 - (b1.a2) b1), b3 = b1 x b2.
    Raises DegenerateRot6DError when the columns are near-zero or parallel.
    """
    r = _as_vec(r, 6)
    a1, a2 = r[:3], r[3:]
    n1 = np.linalg.norm(a1)
    if n1 <= DEGENERACY_EPS:
        raise DegenerateRot6DError("first column is (near-)zero")
    b1 = a1 / n1
    a2_orth = a2 - (b1 @ a2) * b1
    n2 = np.linalg.norm(a2_orth)
    if n2 <= DEGENERACY_EPS:
        raise DegenerateRot6DError("columns are (near-)parallel")
    b2 = a2_orth / n2
    b3 = np.cross(b1, b2)
    return quat_from_matrix(np.column_stack([b1, b2, b3]))


def slerp(q0, q1, t: float) -> np.ndarray:
    """Shortest-path spherical interpolation between unit quaternions."""
    q0 = _as_vec(q0, 4)
    q1 = _as_vec(q1, 4)
    if t == 0.0 or np.array_equal(q0, q1):
        return q0.copy()
    if t == 1.0:
        return q1.copy()
    dot = float(q0 @ q1)
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    dot = min(1.0, dot)
    angle = math.acos(dot)
    if angle < 1e-6:
        return quat_normalize((1.0 - t) * q0 + t * q1)
    s = math.sin(angle)
    return quat_normalize((math.sin((1.0 - t) * angle) / s) * q0 + (math.sin(t * angle) / s) * q1)


def lerp_pose(p0: Pose, p1: Pose, t: float) -> Pose:
    """Linear interpolation of position, spherical interpolation of orientation."""
    if np.array_equal(p0.position, p1.position) and np.array_equal(p0.quat, p1.quat):
        return p0.copy()
    return Pose(
        position=(1.0 - t) * p0.position + t * p1.position,
        quat=slerp(p0.quat, p1.quat, t),
    )
