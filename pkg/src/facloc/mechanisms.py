"""Facility-location mechanisms and their derandomized arms."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .geometry import Rotation, as_vec, identity, rotation_from_angle, sample_haar_rotation
from .medians import Instance, cwmed, rcwmed
from .quadrature import QUARTER_TURN

FOUR_OVER_PI = 4.0 / math.pi


class Kind(str, enum.Enum):
    CWM = "cwm"
    RRCWM = "rrcwm"
    CMP = "cmp"
    RRCMP = "rrcmp"
    GRD_UNIFORM = "grd-uniform"
    GRD_PROPORTIONAL = "grd-proportional"


ROTATION_KINDS = (Kind.RRCWM, Kind.RRCMP)
PREDICTION_KINDS = (Kind.CMP, Kind.RRCMP)
GRD_KINDS = (Kind.GRD_UNIFORM, Kind.GRD_PROPORTIONAL)


@dataclass(frozen=True)
class MechanismSpec:
    kind: Kind
    c: float | None = None
    prediction: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in PREDICTION_KINDS:
            if self.c is None or self.prediction is None:
                raise ValueError(f"{kind.value} needs both a confidence c and a prediction")
            check_confidence(self.c)
            object.__setattr__(self, "prediction", as_vec(self.prediction))
        elif self.c is not None or self.prediction is not None:
            raise ValueError(f"{kind.value} takes no prediction parameters")

    @property
    def randomized(self) -> bool:
        return self.kind not in (Kind.CWM, Kind.CMP)

    @property
    def rotation_based(self) -> bool:
        return self.kind in ROTATION_KINDS

    def label(self) -> str:
        if self.kind in PREDICTION_KINDS:
            return f"{self.kind.value}(c={self.c:g})"
        return self.kind.value


@dataclass(frozen=True)
class Outcome:
    facility: np.ndarray
    realized_randomness: dict = field(default_factory=dict)


def check_confidence(c: float) -> float:
    c = float(c)
    if not 0.0 <= c < 1.0:
        raise ValueError(f"confidence must lie in [0, 1), got {c}")
    return c


def prediction_copies(n: int, c: float) -> int:
    # decimal reading of c so that e.g. 0.29 * 100 gives 29 copies, not 28
    return math.floor(Fraction(repr(float(c))) * n)


def augment(P: Instance, prediction, c: float) -> Instance:
    """``P`` plus floor(c n) copies of the predicted point (unchanged if none)."""
    check_confidence(c)
    k = prediction_copies(P.n, c)
    p = as_vec(prediction, P.dim)
    return P if k == 0 else P.with_atom(p, k)


def _require(P: Instance):
    if P.n < 1:
        raise ValueError("empty instance")


def run_cwm(P: Instance) -> Outcome:
    _require(P)
    return Outcome(cwmed(P), {})


def sample_rotation(d: int, rng: np.random.Generator) -> Rotation:
    """Uniform rotation; in the plane only the angle modulo a quarter turn matters."""
    if d == 1:
        return identity(1)
    if d == 2:
        return rotation_from_angle(rng.uniform(0.0, QUARTER_TURN))
    return sample_haar_rotation(d, rng)


def _record(R: Rotation) -> dict:
    if R.angle is not None:
        return {"angle": float(R.angle)}
    return {"rotation": R.matrix.tolist()}


def rotation_from_record(record: dict) -> Rotation:
    if "angle" in record:
        return rotation_from_angle(record["angle"])
    return Rotation.checked(np.asarray(record["rotation"], dtype=float))


def run_rrcwm_fixed(P: Instance, R: Rotation) -> Outcome:
    return Outcome(rcwmed(P, R), _record(R))


def run_rrcwm(P: Instance, rng: np.random.Generator) -> Outcome:
    _require(P)
    return run_rrcwm_fixed(P, sample_rotation(P.dim, rng))


def run_cmp(P: Instance, prediction, c: float) -> Outcome:
    _require(P)
    return Outcome(cwmed(augment(P, prediction, c)), {})


def run_rrcmp_fixed(P: Instance, prediction, c: float, R: Rotation) -> Outcome:
    return run_rrcwm_fixed(augment(P, prediction, c), R)


def run_rrcmp(P: Instance, prediction, c: float, rng: np.random.Generator) -> Outcome:
    _require(P)
    return run_rrcwm(augment(P, prediction, c), rng)


def atom_distances(P: Instance, q: float = 2.0, block: int = 1024) -> np.ndarray:
    """``(m, m)`` matrix of l_q distances between atoms."""
    pts = P.points
    out = np.empty((P.m, P.m))
    for lo in range(0, P.m, block):
        diff = pts[lo:lo + block, None, :] - pts[None, :, :]
        out[lo:lo + block] = np.linalg.norm(diff, ord=q, axis=2) if q != 2 else np.sqrt(
            np.einsum("ijk,ijk->ij", diff, diff))
    return out


def dictator_costs(P: Instance, q: float = 2.0) -> np.ndarray:
    """Social cost of placing the facility on each atom."""
    if q == 2 and P.m > 2048:
        return _dictator_costs_gram(P)
    return atom_distances(P, q) @ P.weights


def _dictator_costs_gram(P: Instance, block: int = 1024) -> np.ndarray:
    # blockwise |x - y|^2 = |x|^2 + |y|^2 - 2<x, y>; keeps memory at block * m
    pts = P.points
    sq = np.einsum("ij,ij->i", pts, pts)
    w = P.weights
    out = np.empty(P.m)
    for lo in range(0, P.m, block):
        g = pts[lo:lo + block] @ pts.T
        d2 = sq[lo:lo + block, None] + sq[None, :] - 2.0 * g
        np.maximum(d2, 0.0, out=d2)
        out[lo:lo + block] = np.sqrt(d2) @ w
    return out


def grd_atom_weights(P: Instance, kind: Kind | str) -> np.ndarray:
    """Probability that a GRD mechanism outputs each atom."""
    kind = grd_kind(kind)
    w = P.weights
    if kind is Kind.GRD_UNIFORM:
        return w / w.sum()
    D = atom_distances(P)
    row = D @ w
    probs = np.zeros(P.m)
    for a in range(P.m):
        if row[a] > 0:
            probs += (w[a] / w.sum()) * (D[a] * w) / row[a]
        else:
            probs[a] += w[a] / w.sum()
    return probs


def grd_agent_weights(P: Instance, kind: Kind | str) -> np.ndarray:
    """Per-agent version of :func:`grd_atom_weights` (atom mass split evenly)."""
    return np.repeat(grd_atom_weights(P, kind) / P.weights, P.mults)


def grd_expected_cost(P: Instance, weights, q: float = 2.0) -> float:
    """Exact expected cost of outputting agent j with probability ``weights[j]``."""
    wts = np.asarray(weights, dtype=float).reshape(-1)
    if wts.size != P.n:
        raise ValueError(f"need one weight per agent ({P.n}), got {wts.size}")
    if abs(wts.sum() - 1.0) > 1e-9 or np.any(wts < 0):
        raise ValueError("weights must be a probability vector")
    starts = np.concatenate([[0], np.cumsum(P.mults)[:-1]])
    per_atom = np.add.reduceat(wts, starts)
    return float(per_atom @ dictator_costs(P, q))


def run_grd_fixed(P: Instance, index: int) -> Outcome:
    _require(P)
    return Outcome(P.points[P.agent_atom(index)].copy(), {"dictator": int(index)})


def grd_kind(variant) -> Kind:
    """Accept ``"uniform"``/``"proportional"`` as well as the full kind names."""
    v = getattr(variant, "value", variant)
    kind = Kind(v if v.startswith("grd") else f"grd-{v}")
    if kind not in GRD_KINDS:
        raise ValueError(f"{v} is not a dictator variant")
    return kind


def run_grd(P: Instance, variant: Kind | str, rng: np.random.Generator) -> Outcome:
    _require(P)
    kind = grd_kind(variant)
    i = int(rng.integers(P.n))
    if kind is Kind.GRD_UNIFORM:
        return run_grd_fixed(P, i)
    a = P.agent_atom(i)
    dist = np.repeat(np.linalg.norm(P.points - P.points[a], axis=1), P.mults)
    total = dist.sum()
    j = i if total == 0 else int(rng.choice(P.n, p=dist / total))
    return run_grd_fixed(P, j)


def mac_bound(delta: float) -> float:
    if not 0.0 <= delta < 0.5:
        raise ValueError(f"delta must lie in [0, 0.5), got {delta}")
    return min(1.0 + 4.0 * delta / (1.0 - 2.0 * delta), FOUR_OVER_PI)


def rrcmp_bound(c: float, eta: float) -> float:
    """Four-way minimum bounding the RR-CMP ratio at confidence ``c`` and error ``eta``."""
    r = math.sqrt(2.0 * c * c + 2.0)
    return min(r / (1.0 + c) + eta, FOUR_OVER_PI * (1.0 + c * eta), r / (1.0 - c),
               FOUR_OVER_PI * (1.0 + c) / (1.0 - c))


def run(P: Instance, spec: MechanismSpec, rng: np.random.Generator) -> Outcome:
    k = spec.kind
    if k is Kind.CWM:
        return run_cwm(P)
    if k is Kind.RRCWM:
        return run_rrcwm(P, rng)
    if k is Kind.CMP:
        return run_cmp(P, spec.prediction, spec.c)
    if k is Kind.RRCMP:
        return run_rrcmp(P, spec.prediction, spec.c, rng)
    return run_grd(P, k, rng)


def facility_at(P: Instance, spec: MechanismSpec, R: Rotation | None = None,
                dictator: int | None = None) -> np.ndarray:
    """Facility for a fixed realization of the mechanism's randomness."""
    k = spec.kind
    if k is Kind.CWM:
        return cwmed(P)
    if k is Kind.CMP:
        return cwmed(augment(P, spec.prediction, spec.c))
    if k is Kind.RRCWM:
        return rcwmed(P, R)
    if k is Kind.RRCMP:
        return rcwmed(augment(P, spec.prediction, spec.c), R)
    return P.points[P.agent_atom(dictator)].copy()


def replay(P: Instance, spec: MechanismSpec, outcome: Outcome) -> np.ndarray:
    rec = outcome.realized_randomness
    R = rotation_from_record(rec) if ("angle" in rec or "rotation" in rec) else None
    return facility_at(P, spec, R=R, dictator=rec.get("dictator"))


@dataclass
class ProbeResult:
    checked: int = 0
    violations: int = 0
    worst_gain: float = -math.inf
    witness: dict | None = None

    def merge(self, other: "ProbeResult") -> None:
        self.checked += other.checked
        self.violations += other.violations
        if other.worst_gain > self.worst_gain:
            self.worst_gain = other.worst_gain
            self.witness = other.witness


def deviation_candidates(agents: np.ndarray, i: int, facility: np.ndarray,
                         rng: np.random.Generator, n_dev: int = 64) -> np.ndarray:
    """Half uniform in a box three times the instance spread, half along the line to the facility."""
    d = agents.shape[1]
    lo, hi = agents.min(axis=0), agents.max(axis=0)
    centre = (lo + hi) / 2.0
    half = 1.5 * np.maximum(hi - lo, 1.0)
    n_box = n_dev // 2
    box = centre + rng.uniform(-1.0, 1.0, size=(n_box, d)) * half
    p = agents[i]
    direction = facility - p
    if not np.any(direction):
        direction = rng.standard_normal(d)
    t = rng.uniform(-3.0, 3.0, size=n_dev - n_box)
    line = p + t[:, None] * direction
    return np.vstack([box, line])


def probe_strategyproofness(agents, arm, rng: np.random.Generator, n_dev: int = 64,
                            tol: float = 1e-9, label: str = "") -> ProbeResult:
    """Search for profitable unilateral misreports against a deterministic arm.

    ``arm`` maps an agent-level :class:`Instance` to a facility. A violation is a
    report that brings the facility more than ``tol`` closer to the deviator.
    """
    agents = np.array(agents, dtype=float)
    res = ProbeResult()
    truth = arm(Instance.from_points(agents))
    for i in range(len(agents)):
        honest = float(np.linalg.norm(agents[i] - truth))
        for y in deviation_candidates(agents, i, truth, rng, n_dev):
            lied = agents.copy()
            lied[i] = y
            f = arm(Instance.from_points(lied))
            gain = honest - float(np.linalg.norm(agents[i] - f))
            res.checked += 1
            if gain > res.worst_gain:
                res.worst_gain = gain
                res.witness = {"arm": label, "agents": agents.tolist(), "agent": i, "report": y.tolist(),
                               "gain": gain}
            if gain > tol:
                res.violations += 1
    return res


def batched_rcwmed(profiles: np.ndarray, R: Rotation | None = None) -> np.ndarray:
    """Lower coordinate-wise median of every unit-weight profile in a ``(B, n, d)`` stack."""
    X = profiles if R is None else R.apply(profiles)
    n = X.shape[1]
    h = np.sort(X, axis=1)[:, (n + 1) // 2 - 1, :]
    return h if R is None else R.T.apply(h)


@dataclass(frozen=True)
class SPArm:
    """A deterministic arm of a mechanism: fixed rotation, prediction or dictator index."""

    label: str
    R: Rotation | None = None
    prediction: np.ndarray | None = None
    copies: int = 0
    dictator: int | None = None

    def __call__(self, profiles: np.ndarray) -> np.ndarray:
        if self.dictator is not None:
            return profiles[:, self.dictator, :]
        if self.copies:
            extra = np.broadcast_to(self.prediction, (profiles.shape[0], self.copies, profiles.shape[2]))
            profiles = np.concatenate([profiles, extra], axis=1)
        return batched_rcwmed(profiles, self.R)


def sp_arms(n: int, d: int, rng: np.random.Generator, c: float = 0.3, rotations: int = 10,
            prediction=None) -> list[SPArm]:
    """CWM, CMP and GRD-fixed-index arms plus ``rotations`` fixed rotations of RR-CWM and RR-CMP."""
    pred = rng.standard_normal(d) if prediction is None else as_vec(prediction, d)
    k = prediction_copies(n, c)
    arms = [SPArm("cwm"), SPArm(f"cmp(c={c:g})", prediction=pred, copies=k)]
    for r in range(rotations):
        R = sample_rotation(d, rng)
        arms.append(SPArm(f"rrcwm[{r}]", R=R))
        arms.append(SPArm(f"rrcmp(c={c:g})[{r}]", R=R, prediction=pred, copies=k))
    arms.append(SPArm("grd-fixed", dictator=int(rng.integers(n))))
    return arms


def probe_arms_batched(agents: np.ndarray, arms, rng: np.random.Generator, n_dev: int = 64,
                       tol: float = 1e-9) -> ProbeResult:
    """Same search as :func:`probe_strategyproofness`, vectorised over the deviation candidates."""
    agents = np.asarray(agents, dtype=float)
    res = ProbeResult()
    for arm in arms:
        truth = arm(agents[None])[0]
        for i in range(len(agents)):
            devs = deviation_candidates(agents, i, truth, rng, n_dev)
            stack = np.repeat(agents[None], len(devs), axis=0)
            stack[:, i, :] = devs
            f = arm(stack)
            gain = float(np.linalg.norm(agents[i] - truth)) - np.linalg.norm(f - agents[i], axis=1)
            res.checked += len(devs)
            res.violations += int(np.count_nonzero(gain > tol))
            j = int(np.argmax(gain))
            if gain[j] > res.worst_gain:
                res.worst_gain = float(gain[j])
                res.witness = {"arm": arm.label, "agents": agents.tolist(), "agent": i,
                               "report": devs[j].tolist(), "gain": float(gain[j])}
    return res


def strategyproofness_suite(instances: int, rng: np.random.Generator, n_dev: int = 64, c: float = 0.3,
                            rotations: int = 10, max_n: int = 9, tol: float = 1e-9) -> ProbeResult:
    """Random small instances in 2 and 3 dimensions, each probed against every arm of :func:`sp_arms`."""
    total = ProbeResult()
    for _ in range(instances):
        n = int(rng.integers(2, max_n + 1))
        d = int(rng.integers(2, 4))
        agents = rng.standard_normal((n, d))
        if rng.random() < 0.25:
            # ties exercise the lower-median convention
            agents[rng.integers(n)] = agents[0]
        total.merge(probe_arms_batched(agents, sp_arms(n, d, rng, c, rotations), rng, n_dev, tol))
    return total
