"""Numerical checks of the standalone lemmas, identities and worked examples."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .evaluation import EvalConfig, angle_costs_2d, opt_value, ratio, rotated_l1_average, scost
from .geometry import sample_unit_sphere_many, substream
from .instances import gen_clusters_outlier_hd, gen_random_sphere
from .mechanisms import FOUR_OVER_PI, Kind, MechanismSpec, dictator_costs, strategyproofness_suite
from .medians import Instance, geometric_median, median_1d, projection_median_estimate
from .quadrature import QUARTER_TURN, simpson_rule

SQRT2 = math.sqrt(2.0)
CWM_RD_UPPER = math.sqrt(6.0 * math.sqrt(3.0) - 8.0)


@dataclass
class CheckReport:
    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float
    detail: str = ""
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _two_sided(name, measured, expected, tol, detail="", witness=None) -> CheckReport:
    ok = abs(measured - expected) <= tol
    return CheckReport(name, bool(ok), float(measured), float(expected), float(tol), detail, witness or {})


def _at_least(name, measured, floor, slack, detail="", witness=None) -> CheckReport:
    ok = measured >= floor - slack
    return CheckReport(name, bool(ok), float(measured), float(floor), float(slack), detail, witness or {})


def _at_most(name, measured, ceiling, slack, detail="", witness=None) -> CheckReport:
    ok = measured <= ceiling + slack
    return CheckReport(name, bool(ok), float(measured), float(ceiling), float(slack), detail, witness or {})


def check_rotated_l1(v, panels: int = 200_000, tol: float = 1e-8) -> CheckReport:
    """Angle average of |R v|_1 against (4/pi)|v|_2."""
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        raise ValueError("v must be non-zero")
    return _two_sided("rotated_l1", rotated_l1_average(v, panels), FOUR_OVER_PI * np.linalg.norm(v), tol,
                      f"v={v.tolist()} panels={panels}", {"v": v.tolist()})


def check_trig_identity(n: int) -> CheckReport:
    if n < 2:
        raise ValueError("need n >= 2")
    total = math.fsum(np.sin(math.pi * np.arange(1, n) / n))
    return _two_sided("trig_identity", total, 1.0 / math.tan(math.pi / (2 * n)), 1e-10 * n, f"n={n}", {"n": n})


def sphere_even_moment(d: int, k: int) -> float:
    """E[X_1^(2k)] for X uniform on the unit sphere in R^d."""
    out = 1.0
    for j in range(1, k + 1):
        out *= (2 * j - 1) / (d + 2 * j - 2)
    return out


def sqrt_series_coefficients(count: int) -> np.ndarray:
    """|c_j| for j = 0..count-1 in sqrt(1 - t) = 1 - sum_{j>=1} |c_j| t^j."""
    c = np.empty(count)
    c[0] = 1.0
    if count > 1:
        c[1] = 0.5
    for j in range(2, count):
        c[j] = c[j - 1] * (2 * j - 3) / (2 * j)
    return c


def sphere_distance_series(d: int, terms: int = 3) -> float:
    """The sphere-to-e1 mean distance series truncated after ``terms`` even moments."""
    c = sqrt_series_coefficients(2 * terms + 1)
    return SQRT2 * (1.0 - sum(c[2 * k] * sphere_even_moment(d, k) for k in range(1, terms + 1)))


def sphere_distance_truncation_bound(d: int, terms: int = 3, extra: int = 20_000) -> float:
    """Upper bound on the omitted part of :func:`sphere_distance_series`.

    Sums the next ``extra`` even terms exactly and bounds the remainder by the
    leftover coefficient mass times the next (smaller) moment.
    """
    count = 2 * (terms + extra) + 3
    c = sqrt_series_coefficients(count)
    acc = 0.0
    m = sphere_even_moment(d, terms)
    for k in range(terms + 1, terms + extra + 1):
        m *= (2 * k - 1) / (d + 2 * k - 2)
        acc += c[2 * k] * m
    m_next = m * (2 * (terms + extra + 1) - 1) / (d + 2 * (terms + extra + 1) - 2)
    leftover = max(0.0, 1.0 - float(np.sum(c[1:2 * (terms + extra) + 1])))
    return SQRT2 * (acc + leftover * m_next)


def check_sphere_moments(d: int, k_max: int = 4, rng: np.random.Generator | None = None,
                         samples: int = 1_000_000) -> CheckReport:
    """Monte Carlo moments of a sphere coordinate: even ones against the product formula, odd ones against 0."""
    if d < 2:
        raise ValueError("need d >= 2")
    rng = rng or substream(0)
    x = sample_unit_sphere_many(samples, d, rng)[:, 0]
    rows = []
    worst = None
    for p in range(1, 2 * k_max + 1):
        vals = x ** p
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(samples))
        expected = sphere_even_moment(d, p // 2) if p % 2 == 0 else 0.0
        z = abs(mean - expected) / (4.0 * se)
        rows.append(f"E[X^{p}]={mean:.6g} vs {expected:.6g} (4se={4 * se:.2g})")
        if worst is None or z > worst[0]:
            worst = (z, mean, expected, 4.0 * se, p)
    _, mean, expected, tol, p = worst
    return _two_sided("sphere_moments", mean, expected, tol, f"d={d}; worst power {p}; " + "; ".join(rows),
                      {"d": d, "samples": samples})


def check_sphere_distance(d: int, rng: np.random.Generator | None = None, samples: int = 1_000_000) -> CheckReport:
    """MC mean of |X - e1| against the three-moment series, with a rigorous truncation budget."""
    if d < 2:
        raise ValueError("need d >= 2")
    rng = rng or substream(0)
    x = sample_unit_sphere_many(samples, d, rng)[:, 0]
    dist = np.sqrt(np.maximum(2.0 - 2.0 * x, 0.0))
    mean = float(dist.mean())
    se = float(dist.std(ddof=1) / math.sqrt(samples))
    series = sphere_distance_series(d)
    budget = sphere_distance_truncation_bound(d)
    return _two_sided("sphere_distance", mean, series, 4.0 * se + budget,
                      f"d={d}; 4se={4 * se:.3g}; truncation<={budget:.3g}; "
                      f"asymptotic sqrt2(1-1/8d)={SQRT2 * (1 - 1 / (8 * d)):.6f}",
                      {"d": d, "samples": samples})


def check_insertion_robustness(trials: int, c_grid, rng: np.random.Generator, max_n: int = 200,
                               opt_tol: float = 1e-10) -> CheckReport:
    """Cost and distance robustness of the geometric median under c-fraction insertions.

    The inserted points form one far cluster, at 100 times the spread in a
    random direction. Trials where Weiszfeld does not converge are skipped.
    """
    violations, flagged, total = 0, 0, 0
    worst_ratio, worst = -math.inf, {}
    for c in c_grid:
        if not 0 < c < 1:
            raise ValueError("c must lie in (0, 1)")
        for t in range(trials):
            # at least one inserted point per trial
            n = int(rng.integers(max(2, math.ceil(1.0 / c)), max_n + 1))
            k = math.floor(c * n)
            pts = rng.standard_normal((n, 2))
            P = Instance.from_points(pts)
            spread = max(P.spread(), 1e-9)
            u = rng.standard_normal(2)
            far = pts.mean(axis=0) + 100.0 * spread * u / np.linalg.norm(u)
            both = P.with_atom(far, k)
            m = geometric_median(P, tol=opt_tol)
            m2 = geometric_median(both, tol=opt_tol)
            if not (m.converged and m2.converged):
                flagged += 1
                continue
            total += 1
            c_eff = k / n
            base = scost(P, m.point)
            slack = 10.0 * opt_tol * n
            cost_ub = (1.0 + 2.0 * c_eff / (1.0 - c_eff)) * base + slack
            dist_ub = 2.0 / ((1.0 - c_eff) * n) * base + slack
            got_cost = scost(P, m2.point)
            got_dist = float(np.linalg.norm(m.point - m2.point))
            r = max(got_cost / cost_ub, got_dist / dist_ub)
            if r > worst_ratio:
                worst_ratio = r
                worst = {"c": c, "trial": t, "n": n, "far": far.tolist(), "cost": got_cost, "cost_bound": cost_ub,
                         "dist": got_dist, "dist_bound": dist_ub}
            if got_cost > cost_ub or got_dist > dist_ub:
                violations += 1
    return CheckReport("insertion_robustness", violations == 0, float(violations), 0.0, 0.0,
                       f"{total} trials, {flagged} flagged for non-convergence, worst LHS/RHS={worst_ratio:.4f}",
                       worst)


def check_median_lipschitz(trials: int, rng: np.random.Generator, max_len: int = 51) -> CheckReport:
    """|med(x) - med(y)| <= |x - y|_inf for odd-length lists, exactly."""
    violations = 0
    worst, witness = -math.inf, {}
    for t in range(trials):
        n = 2 * int(rng.integers(0, max_len // 2 + 1)) + 1
        x = rng.standard_normal(n)
        y = x + rng.uniform(-1.0, 1.0, n) * rng.uniform(0.0, 2.0)
        gap = abs(median_1d(x) - median_1d(y)) - float(np.max(np.abs(x - y)))
        if gap > worst:
            worst, witness = gap, {"trial": t, "x": x.tolist(), "y": y.tolist()}
        if gap > 0:
            violations += 1
    return CheckReport("median_lipschitz", violations == 0, float(violations), 0.0, 0.0,
                       f"{trials} trials, max(|dmed| - |dx|_inf)={worst:.3g}", witness)


PROJMED_EXAMPLE = ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0))


def check_projmed_example(panels: int = 20_000) -> list[CheckReport]:
    """The three-point example where the projection median beats RR-CWM in expectation."""
    P = Instance.from_points(PROJMED_EXAMPLE)
    est = projection_median_estimate(P, panels=panels)
    pm_cost = scost(P, est)
    thetas, w = simpson_rule(panels)
    rr_cost = float(w @ angle_costs_2d(P, MechanismSpec(Kind.RRCWM), thetas)) / QUARTER_TURN
    err = float(np.max(np.abs(est - np.array([0.0, 0.5]))))
    return [
        _two_sided("projmed_point", err, 0.0, 1e-3, f"estimate={est.tolist()}"),
        _two_sided("projmed_cost", pm_cost, math.sqrt(5.0) + 0.5, 1e-3),
        _two_sided("projmed_rrcwm_cost", rr_cost, 2.83, 0.01, "expected RR-CWM cost must lie in [2.82, 2.84]"),
        CheckReport("projmed_ordering", rr_cost > pm_cost, rr_cost - pm_cost, 0.0, 0.0,
                    "RR-CWM expected cost strictly above the projection-median cost"),
    ]


def check_hd_lower_bound(d_grid, mc_samples: int, seed: int, workers: int = 1, floor: float = 1.2,
                         floor_from_d: int = 100) -> tuple[list[CheckReport], list]:
    """Monte Carlo RR-CWM ratio on the two-clusters-and-outlier construction across dimensions."""
    ests = []
    reports = []
    for i, d in enumerate(d_grid):
        if d <= 2:
            raise ValueError("each d must exceed 2")
        P = gen_clusters_outlier_hd(int(d))
        cfg = EvalConfig(seed=seed + i, mc_samples=mc_samples, workers=workers)
        est = ratio(P, MechanismSpec(Kind.RRCWM), cfg)
        ests.append((int(d), est))
        w = {"d": int(d), "seed": seed + i, "mc_samples": mc_samples}
        reports.append(_at_least(f"hd_ratio_above_one[d={d}]", est.ci95[0], 1.0, 0.0,
                                 f"ratio={est.mean:.5f} se={est.std_error:.2g}", w))
        reports.append(_at_most(f"hd_ratio_below_cwm_bound[d={d}]", est.mean, CWM_RD_UPPER, 3 * est.std_error,
                                f"ratio={est.mean:.5f}", w))
        if d >= floor_from_d:
            reports.append(_at_least(f"hd_ratio_floor[d={d}]", est.ci95[0], floor, 0.0,
                                     f"CI lower edge vs {floor}", w))
    for (d0, a), (d1, b) in zip(ests, ests[1:]):
        # nondecreasing up to interval overlap
        ok = b.ci95[1] >= a.ci95[0]
        reports.append(CheckReport(f"hd_ratio_trend[{d0}->{d1}]", bool(ok), b.mean - a.mean, 0.0, 0.0,
                                   f"{a.mean:.5f} -> {b.mean:.5f}"))
    return reports, ests


def sphere_floor(d: int, n: int) -> float:
    mu = SQRT2 * (1.0 - 1.0 / (8.0 * d))
    return mu * n / (n + 1) - 4.0 * math.sqrt(2.0 / n) * math.log(n + 1)


def check_grd_sphere_floor(d: int, n: int, rng: np.random.Generator) -> CheckReport:
    """Best single reported point on a random sphere instance, over OPT <= n + 1."""
    if d <= 2:
        raise ValueError("need d > 2")
    P = gen_random_sphere(n, d, rng)
    costs = dictator_costs(P)
    opt = min(float(n + 1), opt_value(P).value)
    r = float(costs.min()) / opt
    rep = _at_least("grd_sphere_floor", r, sphere_floor(d, n), 0.0,
                    f"d={d} n={n} min dictator cost={costs.min():.3f} mean={costs.mean():.3f} opt={opt:.3f}",
                    {"d": d, "n": n})
    rep.passed = rep.passed and bool(costs.min() <= costs.mean())
    return rep


def check_strategyproofness(instances: int, rng: np.random.Generator, n_dev: int = 64,
                            tol: float = 1e-9) -> CheckReport:
    """No profitable unilateral misreport against any deterministic arm of CWM, RR-CWM, CMP, RR-CMP or GRD."""
    res = strategyproofness_suite(instances, rng, n_dev=n_dev, tol=tol)
    return CheckReport("strategyproofness", res.violations == 0, float(res.violations), 0.0, tol,
                       f"{res.checked} deviations checked, worst gain={res.worst_gain:.3g}", res.witness or {})


def run_suite(suite: str = "all", seed: int = 0, workers: int = 1, quick: bool = False) -> list[CheckReport]:
    """Every check in ``suite`` ('all', 'lemmas', 'sp' or 'robustness'), each with its own substream."""
    if suite not in ("all", "lemmas", "sp", "robustness"):
        raise ValueError(f"unknown suite {suite!r}")
    reports: list[CheckReport] = []
    scale = 10 if quick else 1
    if suite in ("all", "lemmas"):
        rng = substream(seed, 1)
        for i in range(20):
            reports.append(check_rotated_l1(rng.standard_normal(2) * rng.uniform(0.1, 10.0)))
        for n in (2, 4, 1000, 10 ** 6):
            reports.append(check_trig_identity(n))
        reports.append(check_sphere_moments(10, 4, substream(seed, 2), 1_000_000 // scale))
        reports.append(check_sphere_moments(3, 4, substream(seed, 3), 1_000_000 // scale))
        for j, d in enumerate((2, 10, 50)):
            reports.append(check_sphere_distance(d, substream(seed, 4, j), 1_000_000 // scale))
        reports.append(check_median_lipschitz(100_000 // scale, substream(seed, 5)))
        reports.extend(check_projmed_example())
        hd, _ = check_hd_lower_bound((16, 64, 256), 2000 // scale, seed=seed * 1000 + 6, workers=workers)
        reports.extend(hd)
        reports.append(check_grd_sphere_floor(50, 10_000 // scale, substream(seed, 7)))
    if suite in ("all", "sp"):
        reports.append(check_strategyproofness(200 // scale, substream(seed, 8)))
    if suite in ("all", "robustness"):
        reports.append(check_insertion_robustness(1000 // scale, (0.1, 0.3, 0.5), substream(seed, 9)))
    return reports


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)


def reports_table(reports) -> str:
    width = max(len(r.name) for r in reports) if reports else 10
    lines = [f"{'check':<{width}}  status  measured        expected        tolerance"]
    for r in reports:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.measured:<14.8g}  "
                     f"{r.expected:<14.8g}  {r.tolerance:.3g}")
    return "\n".join(lines)
