"""Rotation algebra for baton tracking.

Quaternion/matrix conversion, SO(3) projection and averaging, matrix left
division and the forward-kinematic step from palm position plus baton
orientation to the baton tip.

Conventions: rotation matrices are plain ``(3, 3)`` float ndarrays acting on
column vectors, body frame to world frame. The world frame is the optical
tracker's: Y up, right-handed, meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateMatrix,
    EmptyInput,
    ExcessiveSpread,
    NonUnitQuaternion,
    SingularSystem,
)

# Norm handling for incoming quaternions: below the soft tolerance the value
# counts as unit; up to the hard limit it is renormalized; beyond that it is
# rejected as corrupt.
UNIT_NORM_SOFT_TOL = 1e-6
UNIT_NORM_HARD_TOL = 0.1

CONDITION_LIMIT = 1e12


def as_vec3(value, name: str = "vector") -> np.ndarray:
    """Validate and return a finite (3,) float vector."""
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have shape (3,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components: {arr!r}")
    return arr


def check_rotation(m, tol: float = 1e-8, name: str = "rotation matrix") -> np.ndarray:
    """Validate that ``m`` is a proper rotation; returns it as a float array."""
    arr = np.asarray(m, dtype=float)
    if arr.shape != (3, 3):
        raise ValueError(f"{name} must have shape (3, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    if np.linalg.norm(arr.T @ arr - np.eye(3)) > tol:
        raise ValueError(f"{name} is not orthonormal within {tol}")
    if abs(np.linalg.det(arr) - 1.0) > tol:
        raise ValueError(f"{name} does not have determinant +1")
    return arr


@dataclass(frozen=True)
class Quaternion:
    """Orientation quaternion Q = w + i*x + j*y + k*z (scalar first)."""

    w: float
    x: float
    y: float
    z: float

    @classmethod
    def identity(cls) -> "Quaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_rotation_vector(cls, rotvec) -> "Quaternion":
        """Exponential map: axis-angle vector (angle = magnitude) to quaternion."""
        v = as_vec3(rotvec, "rotation vector")
        angle = float(np.linalg.norm(v))
        if angle < 1e-12:
            # first-order map keeps the small-angle branch smooth
            q = cls(1.0, 0.5 * v[0], 0.5 * v[1], 0.5 * v[2])
            return q.normalized()
        half = 0.5 * angle
        s = math.sin(half) / angle
        return cls(math.cos(half), v[0] * s, v[1] * s, v[2] * s)

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> "Quaternion":
        a = as_vec3(axis, "axis")
        n = float(np.linalg.norm(a))
        if n == 0.0:
            raise ValueError("axis must be non-zero")
        return cls.from_rotation_vector(a * (angle / n))

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> "Quaternion":
        n = self.norm()
        if abs(n - 1.0) > UNIT_NORM_HARD_TOL:
            raise NonUnitQuaternion(f"quaternion norm {n:.6g} deviates beyond {UNIT_NORM_HARD_TOL}")
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        """Hamilton product: ``R(q1 * q2) == R(q1) @ R(q2)``."""
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def to_rotation_vector(self) -> np.ndarray:
        """Logarithm map: rotation vector whose magnitude is the rotation angle."""
        q = self.normalized()
        w = max(-1.0, min(1.0, q.w))
        vec = np.array([q.x, q.y, q.z])
        s = float(np.linalg.norm(vec))
        if s < 1e-12:
            return 2.0 * vec  # first-order for tiny angles
        angle = 2.0 * math.atan2(s, w)
        if angle > math.pi:
            angle -= 2.0 * math.pi
        return vec * (angle / s)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])


@dataclass(frozen=True)
class ControlFrame:
    """Calibration result relating the IMU frame to the tracker frame."""

    r0: np.ndarray
    sample_count: int

    def __post_init__(self):
        object.__setattr__(self, "r0", check_rotation(self.r0, name="control rotation"))
        if int(self.sample_count) < 1:
            raise ValueError("sample_count must be >= 1")
        object.__setattr__(self, "sample_count", int(self.sample_count))


@dataclass(frozen=True)
class BatonSpec:
    """Physical baton: tip sits length_m along the handle's internal Y axis."""

    length_m: float = 0.35

    def __post_init__(self):
        if not (0.05 <= self.length_m <= 1.0):
            raise ValueError(f"baton length {self.length_m} m outside sane range [0.05, 1.0]")


def quat_to_rotation(q: Quaternion) -> np.ndarray:
    """Convert a (near-)unit quaternion to its body->world rotation matrix."""
    n = q.norm()
    if abs(n - 1.0) > UNIT_NORM_HARD_TOL:
        raise NonUnitQuaternion(f"quaternion norm {n:.6g} deviates beyond {UNIT_NORM_HARD_TOL}")
    w, x, y, z = q.w / n, q.x / n, q.y / n, q.z / n
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ]
    )


def project_to_so3(m) -> np.ndarray:
    """Nearest proper rotation (Frobenius sense) to an arbitrary 3x3 matrix."""
    arr = np.asarray(m, dtype=float)
    if arr.shape != (3, 3):
        raise ValueError(f"expected (3, 3) matrix, got {arr.shape}")
    u, s, vt = np.linalg.svd(arr)
    if s[-1] < 1e-12:
        raise DegenerateMatrix(f"smallest singular value {s[-1]:.3g} below 1e-12")
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def left_divide(a, b) -> np.ndarray:
    """Matrix left division a \\ b: least-error X with a @ X = b.

    ``b`` may be a (3, 3) matrix or a (3,) vector; the result matches.
    """
    a_arr = np.asarray(a, dtype=float)
    if a_arr.shape != (3, 3):
        raise ValueError(f"left operand must be (3, 3), got {a_arr.shape}")
    b_arr = np.asarray(b, dtype=float)
    if b_arr.shape not in ((3, 3), (3,)):
        raise ValueError(f"right operand must be (3, 3) or (3,), got {b_arr.shape}")
    if not np.all(np.isfinite(a_arr)):
        raise SingularSystem("left operand has non-finite entries")
    cond = np.linalg.cond(a_arr)
    if not np.isfinite(cond) or cond >= CONDITION_LIMIT:
        raise SingularSystem(f"condition number {cond:.3g} exceeds {CONDITION_LIMIT:.0g}")
    return np.linalg.solve(a_arr, b_arr)


def average_rotations(samples) -> np.ndarray:
    """Chordal mean of rotation matrices: entrywise mean projected back to SO(3).

    Intended for tightly clustered calibration readings; raises
    ExcessiveSpread when any pair is more than 90 degrees apart.
    """
    mats = [check_rotation(s, name=f"sample {i}") for i, s in enumerate(samples)]
    if not mats:
        raise EmptyInput("average_rotations requires at least one sample")
    flat = np.stack([m.ravel() for m in mats])
    # trace(Ri^T Rj) is the elementwise dot product of the two matrices
    gram = flat @ flat.T
    cos_angle = np.clip((gram - 1.0) / 2.0, -1.0, 1.0)
    max_angle = float(np.max(np.arccos(cos_angle)))
    if max_angle > math.pi / 2:
        raise ExcessiveSpread(
            f"pairwise spread {math.degrees(max_angle):.1f} deg exceeds 90 deg; "
            "calibration session looks corrupt"
        )
    return project_to_so3(np.mean(np.stack(mats), axis=0))


def relative_rotation(r_r, control: ControlFrame) -> np.ndarray:
    """Rotation away from the calibrated control pose: R_a = r0 \\ R_r.

    Left division does not guarantee an SO(3) result under floating point,
    so the quotient is re-projected.
    """
    r_r = check_rotation(r_r, name="relative rotation input")
    return project_to_so3(left_divide(control.r0, r_r))


def baton_tip_position(r_a, palm, baton: BatonSpec) -> np.ndarray:
    """Tip = palm + R_a applied to a baton-length translation along internal Y."""
    r = np.asarray(r_a, dtype=float)
    if r.shape != (3, 3):
        raise ValueError(f"rotation must be (3, 3), got {r.shape}")
    p = as_vec3(palm, "palm position")
    return p + r @ np.array([0.0, baton.length_m, 0.0])
