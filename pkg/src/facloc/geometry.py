"""Vectors, norms and rotations, including Haar-uniform sampling on SO(d)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ORTHO_TOL = 1e-10
DET_TOL = 1e-8


class DimensionError(ValueError):
    """Raised when a rotation and a vector (or instance) disagree on dimension."""


def as_vec(v, dim: int | None = None) -> np.ndarray:
    """Coerce ``v`` to a finite 1-D float array, optionally checking its length."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite coordinates")
    if dim is not None and arr.size != dim:
        raise DimensionError(f"expected length {dim}, got {arr.size}")
    return arr


def norm(v, q: float = 2.0) -> float:
    """l_q norm of ``v``; ``q=math.inf`` gives the max-abs coordinate."""
    if not q >= 1:
        raise ValueError(f"norm order must satisfy q >= 1, got {q}")
    arr = as_vec(v)
    if math.isinf(q):
        return float(np.max(np.abs(arr)))
    return float(np.linalg.norm(arr, ord=q))


@dataclass(frozen=True)
class Rotation:
    """Element of SO(d).

    In the plane the angle is kept alongside the matrix so that callers can
    rotate analytically instead of through the matrix product.
    """

    matrix: np.ndarray
    angle: float | None = field(default=None, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"rotation matrix must be square, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def checked(cls, matrix, angle: float | None = None) -> "Rotation":
        """Construct and verify orthogonality and unit determinant."""
        R = cls(matrix, angle)
        if not R.is_valid():
            raise ValueError("matrix is not a rotation (orthogonal with determinant +1)")
        return R

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def T(self) -> "Rotation":
        angle = None if self.angle is None else -self.angle
        return Rotation(self.matrix.T.copy(), angle)

    def is_valid(self) -> bool:
        m = self.matrix
        err = np.max(np.abs(m.T @ m - np.eye(self.dim)))
        return bool(err <= ORTHO_TOL and abs(np.linalg.det(m) - 1.0) <= DET_TOL)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Rotate a single vector or the rows of an ``(m, d)`` array."""
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.dim:
            raise DimensionError(f"rotation has dim {self.dim}, points have {pts.shape[-1]}")
        if self.angle is not None:
            c, s = math.cos(self.angle), math.sin(self.angle)
            x, y = pts[..., 0], pts[..., 1]
            return np.stack([c * x - s * y, s * x + c * y], axis=-1)
        return pts @ self.matrix.T


def identity(d: int) -> Rotation:
    return Rotation(np.eye(d), 0.0 if d == 2 else None)


def rotate(R: Rotation, v) -> np.ndarray:
    return R.apply(as_vec(v, R.dim))


def rotation_from_angle(theta: float) -> Rotation:
    """Counter-clockwise planar rotation by ``theta``."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError("angle must be finite")
    c, s = math.cos(theta), math.sin(theta)
    return Rotation(np.array([[c, -s], [s, c]]), theta)


def sample_haar_rotation(d: int, rng: np.random.Generator) -> Rotation:
    """Haar-uniform draw from SO(d) via sign-corrected QR of a Gaussian matrix."""
    if d < 1:
        raise ValueError("dimension must be positive")
    if d == 1:
        return Rotation(np.ones((1, 1)))
    z = rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    angle = math.atan2(q[1, 0], q[0, 0]) if d == 2 else None
    return Rotation(q, angle)


def sample_unit_sphere(d: int, rng: np.random.Generator) -> np.ndarray:
    if d < 1:
        raise ValueError("dimension must be positive")
    while True:
        g = rng.standard_normal(d)
        r = np.linalg.norm(g)
        if r > 0:
            return g / r


def sample_unit_sphere_many(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. uniform points on the unit sphere as rows of an ``(n, d)`` array."""
    g = rng.standard_normal((n, d))
    r = np.linalg.norm(g, axis=1)
    bad = r == 0
    while np.any(bad):
        g[bad] = rng.standard_normal((int(bad.sum()), d))
        r = np.linalg.norm(g, axis=1)
        bad = r == 0
    return g / r[:, None]


def substream(seed: int, *index: int) -> np.random.Generator:
    """Independent generator derived from a master seed and a task index path."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in index)))
