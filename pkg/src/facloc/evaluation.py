"""Social cost, optimal baselines and expected-cost engines for the mechanisms."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .geometry import as_vec, sample_haar_rotation, substream
from .instances import certificates as analytic_certificates
from .instances import gen_unit_circle
from .mechanisms import (
    FOUR_OVER_PI,
    GRD_KINDS,
    Kind,
    MechanismSpec,
    augment,
    dictator_costs,
    facility_at,
    grd_atom_weights,
    rrcmp_bound,
)
from .medians import Instance, geometric_median, q_median, scost_q
from .quadrature import QUARTER_TURN, simpson_rule

MC_CHUNK = 256
Z95 = 1.959963984540054
DEGENERATE_COST = 1e-12


class EvaluationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    seed: int = 0
    mc_samples: int = 2000
    quad_panels: int = 20_000
    opt_tol: float = 1e-10
    q: float = 2.0
    workers: int = 1
    method: str = "auto"

    def __post_init__(self):
        if self.quad_panels < 2 or self.quad_panels % 2:
            raise ValueError("quad_panels must be a positive even integer")
        if self.mc_samples < 2:
            raise ValueError("mc_samples must be >= 2")
        if not self.opt_tol > 0:
            raise ValueError("opt_tol must be positive")
        if not self.q >= 1:
            raise ValueError("q must be >= 1")
        if self.method not in ("auto", "quadrature", "monte_carlo", "exact"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class RatioEstimate:
    mean: float
    std_error: float
    ci95: tuple
    method: str
    n_samples_or_panels: int
    opt_value: float
    opt_certificate: np.ndarray = field(compare=False)
    expected_cost: float = 0.0
    opt_converged: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["opt_certificate"] = [float(x) for x in self.opt_certificate]
        d["ci95"] = [float(x) for x in self.ci95]
        return d


@dataclass(frozen=True)
class TradeoffPoint:
    c: float
    eta: float
    measured_ratio: RatioEstimate
    paper_bound: float

    @property
    def slack(self) -> float:
        return 3.0 * self.measured_ratio.std_error + 0.01

    @property
    def within_bound(self) -> bool:
        return self.measured_ratio.mean <= self.paper_bound + self.slack


class OptValue(NamedTuple):
    value: float
    point: np.ndarray
    converged: bool
    solver_point: np.ndarray


def scost(P: Instance, m, q: float = 2.0) -> float:
    """Sum over agents of the l_q distance to ``m``."""
    return scost_q(P, as_vec(m, P.dim), q)


def opt_value(P: Instance, q: float = 2.0, cfg: EvalConfig | None = None, extra_points=()) -> OptValue:
    """Optimal social cost: solver value, lowered by any analytic certificate points."""
    cfg = cfg or EvalConfig()
    if q == 2:
        res = geometric_median(P, tol=cfg.opt_tol)
    else:
        res = q_median(P, q)
    best_point, best = res.point, scost(P, res.point, q)
    for pt in list(analytic_certificates(P)) + list(extra_points):
        v = scost(P, pt, q)
        if v < best:
            best_point, best = np.asarray(pt, dtype=float), v
    return OptValue(best, best_point, res.converged, res.point)


def _columns(P: Instance):
    pts = P.points
    return np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]), np.ascontiguousarray(P.weights)


def _mechanism_instance(P: Instance, mech: MechanismSpec) -> Instance:
    if mech.kind is Kind.RRCMP:
        return augment(P, mech.prediction, mech.c)
    return P


def angle_costs_2d(P: Instance, mech: MechanismSpec, thetas: np.ndarray, q: float = 2.0) -> np.ndarray:
    """Social cost (over the real agents) of the rotated mechanism at each angle."""
    if P.dim != 2 or not mech.rotation_based:
        raise ValueError("angle costs need a planar instance and a rotation-based mechanism")
    Q = _mechanism_instance(P, mech)
    qx, qy, qw = _columns(Q)
    hx, hy = kernels.rotated_medians_2d(qx, qy, qw, np.ascontiguousarray(thetas, dtype=float))
    px, py, pw = _columns(P)
    return kernels.costs_2d(px, py, pw, hx, hy, float(q))


def expected_cost_quadrature_2d(P: Instance, mech: MechanismSpec, cfg: EvalConfig | None = None) -> float:
    """Composite Simpson average over the angle in [0, pi/2] of the social cost."""
    cfg = cfg or EvalConfig()
    if P.dim != 2 or not mech.rotation_based:
        raise ValueError(f"{mech.label()} on a {P.dim}-D instance is not angle-parameterizable")
    thetas, w = simpson_rule(cfg.quad_panels)
    return float(w @ angle_costs_2d(P, mech, thetas, cfg.q)) / QUARTER_TURN


def _mc_chunk(args) -> np.ndarray:
    P, mech, q, seed, chunk, size = args
    rng = substream(seed, chunk)
    k = mech.kind
    if mech.rotation_based and P.dim == 2:
        return angle_costs_2d(P, mech, rng.uniform(0.0, QUARTER_TURN, size), q)
    if k in GRD_KINDS:
        probs = grd_atom_weights(P, k)
        costs = dictator_costs(P, q)
        return costs[rng.choice(P.m, size=size, p=probs)]
    if mech.rotation_based:
        Q = _mechanism_instance(P, mech)
        out = np.empty(size)
        for s in range(size):
            R = sample_haar_rotation(P.dim, rng) if P.dim > 1 else None
            f = facility_at(Q, MechanismSpec(Kind.RRCWM), R=R) if R is not None else facility_at(
                Q, MechanismSpec(Kind.CWM))
            out[s] = scost(P, f, q)
        return out
    return np.full(size, scost(P, facility_at(P, mech), q))


def mc_costs(P: Instance, mech: MechanismSpec, cfg: EvalConfig) -> np.ndarray:
    """Per-sample costs in sample order; chunk ``j`` always draws from substream (seed, j)."""
    n = cfg.mc_samples
    tasks = [(P, mech, cfg.q, cfg.seed, j, min(MC_CHUNK, n - lo)) for j, lo in enumerate(range(0, n, MC_CHUNK))]
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_mc_chunk, tasks))
    else:
        parts = [_mc_chunk(t) for t in tasks]
    return np.concatenate(parts)


def expected_cost_mc(P: Instance, mech: MechanismSpec, cfg: EvalConfig | None = None) -> tuple[float, float]:
    """Monte Carlo mean cost and its standard error."""
    cfg = cfg or EvalConfig()
    costs = mc_costs(P, mech, cfg)
    return float(np.mean(costs)), float(np.std(costs, ddof=1) / math.sqrt(costs.size))


def exact_expected_cost(P: Instance, mech: MechanismSpec, q: float = 2.0) -> float:
    if mech.kind in GRD_KINDS:
        return float(grd_atom_weights(P, mech.kind) @ dictator_costs(P, q))
    if mech.randomized:
        raise ValueError(f"{mech.label()} has no exact expected-cost evaluator")
    return scost(P, facility_at(P, mech), q)


def choose_method(P: Instance, mech: MechanismSpec, requested: str = "auto") -> str:
    if requested != "auto":
        if requested == "quadrature" and not (P.dim == 2 and mech.rotation_based):
            raise ValueError("quadrature applies to rotation-based mechanisms in the plane")
        if requested == "exact" and mech.rotation_based and P.dim > 1:
            raise ValueError("rotation-based mechanisms have no exact evaluator; use quadrature or monte_carlo")
        return requested
    if mech.rotation_based:
        return "quadrature" if P.dim == 2 else "monte_carlo"
    return "exact"


def ratio(P: Instance, mech: MechanismSpec, cfg: EvalConfig | None = None, opt: OptValue | None = None) -> RatioEstimate:
    """Expected mechanism cost over optimal cost, with a normal 95% interval for Monte Carlo."""
    cfg = cfg or EvalConfig()
    method = choose_method(P, mech, cfg.method)
    if method == "quadrature":
        cost, se, count = expected_cost_quadrature_2d(P, mech, cfg), 0.0, cfg.quad_panels
    elif method == "monte_carlo":
        cost, se = expected_cost_mc(P, mech, cfg)
        count = cfg.mc_samples
    else:
        cost, se, count = exact_expected_cost(P, mech, cfg.q), 0.0, 1
    opt = opt or opt_value(P, cfg.q, cfg)
    if opt.value <= DEGENERATE_COST * max(1, P.n):
        if cost <= DEGENERATE_COST * max(1, P.n):
            r, rse = 1.0, 0.0
        else:
            raise EvaluationError("optimal cost is zero but the mechanism pays a positive cost")
    else:
        r, rse = cost / opt.value, se / opt.value
    half = Z95 * rse
    return RatioEstimate(r, rse, (r - half, r + half), method, count, opt.value, np.asarray(opt.point),
                         cost, opt.converged)


def prediction_for(g, eta: float, opt: float, n: int, direction=None) -> np.ndarray:
    """Point at normalized error ``eta`` from ``g`` along ``direction`` (first axis by default)."""
    g = np.asarray(g, dtype=float)
    u = np.zeros(g.size) if direction is None else as_vec(direction, g.size)
    if direction is None:
        u[0] = 1.0
    u = u / np.linalg.norm(u)
    return g + eta * (opt / n) * u


def consistency_robustness_sweep(base: Instance, c_grid, eta_grid, cfg: EvalConfig | None = None,
                                 direction=None) -> list[TradeoffPoint]:
    cfg = cfg or EvalConfig()
    opt = opt_value(base, cfg.q, cfg)
    g = opt.solver_point
    points = []
    for c in c_grid:
        for eta in eta_grid:
            if not 0 <= c < 1 or eta < 0:
                raise ValueError("need c in [0, 1) and eta >= 0")
            ghat = prediction_for(g, eta, opt.value, base.n, direction)
            mech = MechanismSpec(Kind.RRCMP, c=float(c), prediction=ghat)
            est = ratio(base, mech, cfg, opt=opt)
            points.append(TradeoffPoint(float(c), float(eta), est, rrcmp_bound(float(c), float(eta))))
    return points


@dataclass(frozen=True)
class FloorRow:
    n: int
    ratio: float
    uniform_ratio: float
    opt: float
    floor: float

    @property
    def passed(self) -> bool:
        return self.ratio >= self.floor


def grd_floor_check(n_grid, cfg: EvalConfig | None = None) -> list[FloorRow]:
    """Best-dictator cost over OPT on evenly spaced unit-circle instances."""
    cfg = cfg or EvalConfig()
    rows = []
    for n in n_grid:
        if n < 2:
            raise ValueError("need n >= 2")
        P = gen_unit_circle(int(n))
        opt = opt_value(P, 2.0, cfg)
        costs = dictator_costs(P)
        uniform = float(costs @ (P.weights / P.n))
        rows.append(FloorRow(int(n), float(costs.min()) / opt.value, uniform / opt.value, opt.value,
                             FOUR_OVER_PI - 3.0 / n))
    return rows


CSV_COLUMNS = ("instance_id", "mechanism", "q", "method", "mean", "std_error", "ci_lo", "ci_hi", "opt", "ratio")


def result_row(instance_id: str, mech: MechanismSpec, q: float, est: RatioEstimate) -> dict:
    """CSV row: mean, std_error and the interval are in cost units, ``ratio`` is mean / opt."""
    scale = est.opt_value if est.opt_value > 0 else 1.0
    return {
        "instance_id": instance_id,
        "mechanism": mech.label(),
        "q": repr(float(q)),
        "method": est.method,
        "mean": repr(float(est.expected_cost)),
        "std_error": repr(float(est.std_error * scale)),
        "ci_lo": repr(float(est.ci95[0] * scale)),
        "ci_hi": repr(float(est.ci95[1] * scale)),
        "opt": repr(float(est.opt_value)),
        "ratio": repr(float(est.mean)),
    }


def rows_to_csv(rows, columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: r[k] for k in columns})
    return buf.getvalue()


def rotated_l1_average(v, panels: int = 20_000) -> float:
    """Angle average of the rotated l_1 norm of a fixed planar vector."""
    v = as_vec(v, 2)
    thetas, w = simpson_rule(panels)
    c, s = np.cos(thetas), np.sin(thetas)
    vals = np.abs(c * v[0] - s * v[1]) + np.abs(s * v[0] + c * v[1])
    return float(w @ vals) / QUARTER_TURN

