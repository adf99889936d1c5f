"""Instances and the median family: 1-D, coordinate-wise, geometric, l_q and projection medians."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .geometry import DimensionError, Rotation, as_vec, sample_haar_rotation
from .quadrature import simpson_rule

WEISZFELD_TOL = 1e-10
WEISZFELD_MAX_ITERS = 100_000


@dataclass(frozen=True)
class Instance:
    """Weighted multiset of reported locations.

    ``points`` is an ``(m, d)`` array of distinct atoms and ``mults`` their
    integer multiplicities; the number of agents is ``mults.sum()``.
    """

    points: np.ndarray
    mults: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValueError(f"instance needs an (m, d) array with m, d >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("instance has non-finite coordinates")
        mults = np.array(self.mults, dtype=np.int64).reshape(-1)
        if mults.shape[0] != pts.shape[0]:
            raise ValueError("one multiplicity per atom is required")
        if np.any(mults < 1):
            raise ValueError("multiplicities must be >= 1")
        pts.setflags(write=False)
        mults.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "mults", mults)

    @classmethod
    def from_points(cls, points, meta=None) -> "Instance":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls(pts, np.ones(len(pts), dtype=np.int64), meta or {})

    @classmethod
    def from_atoms(cls, atoms, meta=None) -> "Instance":
        """Build from ``[(point, mult), ...]``."""
        pts = [list(p) for p, _ in atoms]
        return cls(np.asarray(pts, dtype=float), [int(m) for _, m in atoms], meta or {})

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return int(self.mults.sum())

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return self.mults.astype(float)

    def agents(self) -> np.ndarray:
        """One row per agent, atoms repeated by multiplicity."""
        return np.repeat(self.points, self.mults, axis=0)

    def agent_atom(self, index: int) -> int:
        """Atom holding agent ``index`` (agents are numbered atom by atom)."""
        if not 0 <= index < self.n:
            raise IndexError(f"agent index {index} out of range for n={self.n}")
        return int(np.searchsorted(np.cumsum(self.mults), index, side="right"))

    def grouped(self) -> "Instance":
        """Merge coincident atoms."""
        uniq, inv = np.unique(self.points, axis=0, return_inverse=True)
        mults = np.bincount(inv.reshape(-1), weights=self.mults).astype(np.int64)
        return Instance(uniq, mults, self.meta)

    def with_atom(self, point, mult: int) -> "Instance":
        p = as_vec(point, self.dim)
        return Instance(np.vstack([self.points, p]), np.append(self.mults, int(mult)), self.meta)

    def replace_agent(self, index: int, point) -> "Instance":
        """Instance with agent ``index`` moved to ``point`` (everybody else unchanged)."""
        p = as_vec(point, self.dim)
        j = self.agent_atom(index)
        mults = self.mults.copy()
        mults[j] -= 1
        pts = np.vstack([self.points, p])
        mults = np.append(mults, 1)
        keep = mults > 0
        return Instance(pts[keep], mults[keep], self.meta)

    def transformed(self, scale: float = 1.0, shift=None) -> "Instance":
        shift = np.zeros(self.dim) if shift is None else as_vec(shift, self.dim)
        return Instance(scale * self.points + shift, self.mults, self.meta)

    def rotated(self, R: Rotation) -> "Instance":
        if R.dim != self.dim:
            raise DimensionError(f"rotation dim {R.dim} != instance dim {self.dim}")
        return Instance(R.apply(self.points), self.mults, self.meta)

    def spread(self) -> float:
        """Largest coordinate range; a length scale for the instance."""
        return float(np.max(np.ptp(self.points, axis=0)))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": [
                {"point": [repr(float(x)) for x in p], "mult": int(m)}
                for p, m in zip(self.points, self.mults)
            ],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        dim = int(data["dim"])
        atoms = data["atoms"]
        if not atoms:
            raise ValueError("instance has no atoms")
        pts = np.array([[float(x) for x in a["point"]] for a in atoms], dtype=float)
        if pts.shape[1] != dim:
            raise ValueError(f"declared dim {dim} does not match point length {pts.shape[1]}")
        return cls(pts, [int(a["mult"]) for a in atoms], data.get("meta", {}))


@dataclass(frozen=True)
class MedianResult:
    point: np.ndarray
    iterations: int
    converged: bool
    residual: float


def _rank(total: int) -> int:
    # lower median: the ceil(n/2)-th order statistic
    return (total + 1) // 2


def median_1d(values, mults=None) -> float:
    """Lower median of a weighted list of reals."""
    vals = np.ascontiguousarray(values, dtype=float).reshape(-1)
    if vals.size == 0:
        raise ValueError("median of an empty list")
    w = np.ones(vals.size) if mults is None else np.ascontiguousarray(mults, dtype=float).reshape(-1)
    if w.size != vals.size:
        raise ValueError("values and multiplicities differ in length")
    return float(kernels.weighted_lower_median(vals, w))


def coordinatewise_lower_median(points: np.ndarray, mults: np.ndarray) -> np.ndarray:
    """Column-wise lower median of an ``(m, d)`` weighted point array."""
    order = np.argsort(points, axis=0, kind="stable")
    cum = np.cumsum(np.asarray(mults)[order], axis=0)
    idx = np.argmax(cum >= _rank(int(np.sum(mults))), axis=0)
    cols = np.arange(points.shape[1])
    return points[order[idx, cols], cols]


def cwmed(P: Instance) -> np.ndarray:
    return coordinatewise_lower_median(P.points, P.mults)


def rcwmed(P: Instance, R: Rotation) -> np.ndarray:
    """Coordinate-wise median taken in the frame rotated by ``R``, mapped back."""
    if R.dim != P.dim:
        raise DimensionError(f"rotation dim {R.dim} != instance dim {P.dim}")
    h = coordinatewise_lower_median(R.apply(P.points), P.mults)
    return R.T.apply(h)


def weiszfeld_stationarity(P: Instance, m) -> float:
    """Norm of the weighted sum of unit vectors from the data to ``m``."""
    diff = np.asarray(m) - P.points
    dist = np.linalg.norm(diff, axis=1)
    keep = dist > 0
    return float(np.linalg.norm((P.weights[keep] / dist[keep]) @ diff[keep]))


def geometric_median(P: Instance, tol: float = WEISZFELD_TOL, max_iters: int = WEISZFELD_MAX_ITERS,
                     init=None) -> MedianResult:
    """Weiszfeld iteration with the Vardi-Zhang step at coincident iterates."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    pts, w = P.points, P.weights
    if P.m == 1:
        return MedianResult(pts[0].copy(), 0, True, 0.0)
    y = (w @ pts) / w.sum() if init is None else as_vec(init, P.dim).copy()
    step = math.inf
    for it in range(1, max_iters + 1):
        diff = pts - y
        dist = np.linalg.norm(diff, axis=1)
        near = dist <= tol
        eta = 0.0
        if near.any():
            y = pts[int(np.argmin(dist))].copy()
            diff = pts - y
            dist = np.linalg.norm(diff, axis=1)
            near = dist <= tol
            eta = float(w[near].sum())
            if near.all():
                return MedianResult(y, it, True, 0.0)
        far = ~near
        inv = w[far] / dist[far]
        T = (inv @ pts[far]) / inv.sum()
        if eta > 0:
            r = float(np.linalg.norm(inv @ diff[far]))
            if r <= eta:
                return MedianResult(y, it, True, 0.0)
            gamma = eta / r
            y_new = (1.0 - gamma) * T + gamma * y
        else:
            y_new = T
        step = float(np.linalg.norm(y_new - y))
        y = y_new
        if step <= tol:
            return MedianResult(y, it, True, step)
    return MedianResult(y, max_iters, False, step)


def _lq_cost_and_subgradient(pts, w, y, q):
    v = y - pts
    a = np.abs(v)
    if math.isinf(q):
        dist = a.max(axis=1)
        g = np.zeros_like(v)
        j = np.argmax(a, axis=1)
        rows = np.arange(len(v))
        g[rows, j] = np.sign(v[rows, j])
    elif q == 1:
        dist = a.sum(axis=1)
        g = np.sign(v)
    else:
        dist = (a ** q).sum(axis=1) ** (1.0 / q)
        safe = np.where(dist > 0, dist, 1.0)
        g = np.sign(v) * (a / safe[:, None]) ** (q - 1)
    return float(w @ dist), w @ g


def scost_q(P: Instance, m, q: float = 2.0) -> float:
    return _lq_cost_and_subgradient(P.points, P.weights, as_vec(m, P.dim), q)[0]


def q_median(P: Instance, q: float, tol: float = 1e-8, max_iters: int = 200_000,
             rounds_iters: int = 400) -> MedianResult:
    """Minimizer of the l_q social cost by restarted normalized subgradient descent.

    Starts at the Euclidean geometric median. Each round runs steps of length
    a/sqrt(t) from the best point so far, and ``a`` (initially the spread of
    the instance) shrinks tenfold per round until it falls below ``tol``.
    """
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    base = geometric_median(P)
    if q == 2:
        return base
    pts, w = P.points, P.weights
    best = base.point.copy()
    best_f, _ = _lq_cost_and_subgradient(pts, w, best, q)
    a = max(P.spread(), tol)
    it = 0
    while a >= tol and it < max_iters:
        y = best.copy()
        for t in range(1, rounds_iters + 1):
            f, g = _lq_cost_and_subgradient(pts, w, y, q)
            it += 1
            if f < best_f:
                best_f, best = f, y.copy()
            gn = float(np.linalg.norm(g))
            if gn == 0:
                return MedianResult(y, it, True, 0.0)
            y = y - (a / math.sqrt(t)) * g / gn
        a /= 10.0
    return MedianResult(best, it, bool(a < tol), a * 10.0)


def projection_median_estimate(P: Instance, n_samples: int = 4096, panels: int = 20_000,
                               rng: np.random.Generator | None = None) -> np.ndarray:
    """Rotation average of rcwmed: Simpson over the angle in the plane, Haar Monte Carlo otherwise."""
    if P.dim == 1 or P.grouped().m == 1:
        return cwmed(P)
    if P.dim == 2:
        thetas, qw = simpson_rule(panels)
        hx, hy = kernels.rotated_medians_2d(
            np.ascontiguousarray(P.points[:, 0]), np.ascontiguousarray(P.points[:, 1]),
            np.ascontiguousarray(P.weights), thetas)
        scale = qw.sum()
        return np.array([qw @ hx, qw @ hy]) / scale
    if rng is None:
        raise ValueError("a random generator is required above two dimensions")
    acc = np.zeros(P.dim)
    for _ in range(n_samples):
        acc += rcwmed(P, sample_haar_rotation(P.dim, rng))
    return acc / n_samples
