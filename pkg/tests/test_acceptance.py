"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test records one PASS/FAIL line; ``conftest.py`` prints them in the
terminal summary and ``python tests/test_acceptance.py`` prints them directly.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from facloc.evaluation import (
    EvalConfig,
    consistency_robustness_sweep,
    exact_expected_cost,
    expected_cost_quadrature_2d,
    opt_value,
    ratio,
)
from facloc.geometry import substream
from facloc.instances import build, gen_fig1_2d, gen_two_clusters_outlier_2d, gen_unit_circle, random_corpus_2d
from facloc.mechanisms import FOUR_OVER_PI, Kind, MechanismSpec
from facloc.verification import (
    CWM_RD_UPPER,
    check_grd_sphere_floor,
    check_hd_lower_bound,
    check_insertion_robustness,
    check_projmed_example,
    check_rotated_l1,
    check_sphere_distance,
    check_sphere_moments,
    check_strategyproofness,
    check_trig_identity,
)

RESULTS: dict[int, tuple[bool, str]] = {}

RRCWM = MechanismSpec(Kind.RRCWM)
CORPUS_SEED = 11


def record(num: int, ok: bool, detail: str) -> None:
    RESULTS[num] = (bool(ok), detail)
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def corpus():
    return random_corpus_2d(50, CORPUS_SEED)


def test_01_rotated_l1_lemma():
    rng = substream(2024, 1)
    vs = rng.standard_normal((100, 2)) * rng.uniform(0.01, 10.0, (100, 1))
    reports, secs = timed(lambda: [check_rotated_l1(v) for v in vs])
    worst = max(abs(r.measured - r.expected) for r in reports)
    ok = all(r.passed for r in reports) and secs < 1.0
    record(1, ok, f"100 vectors, max |avg ||Rv||_1 - (4/pi)||v||_2| = {worst:.2e} (tol 1e-8), {secs:.2f}s")
    assert ok


def test_02_four_over_pi_upper(corpus):
    def run():
        excess = []
        for P in corpus:
            cost = expected_cost_quadrature_2d(P, RRCWM)
            opt = opt_value(P).value
            excess.append(cost - (FOUR_OVER_PI * opt + 1e-6 * P.n))
        return np.array(excess)

    excess, secs = timed(run)
    ok = bool(np.all(excess <= 0)) and secs < 60
    record(2, ok, f"50 instances, max E[cost] - (4/pi OPT + 1e-6 n) = {excess.max():.3e}, {secs:.1f}s")
    assert ok


def test_03_four_over_pi_lower():
    def run():
        out = []
        for M in (20, 50, 100):
            P = gen_two_clusters_outlier_2d(M * M, float(M))
            out.append((M, ratio(P, RRCWM, EvalConfig(method="quadrature")).mean))
        return out

    rows, secs = timed(run)
    inside = all(FOUR_OVER_PI - 2.5 / M <= r <= FOUR_OVER_PI + 1e-3 for M, r in rows)
    monotone = all(b > a for (_, a), (_, b) in zip(rows, rows[1:]))
    ok = inside and monotone and secs < 120
    txt = ", ".join(f"M={M}: {r:.6f} (4/pi - r = {FOUR_OVER_PI - r:.2e}, x M = {(FOUR_OVER_PI - r) * M:.3f})"
                    for M, r in rows)
    record(3, ok, f"{txt}; monotone={monotone}, {secs:.1f}s")
    assert ok


def test_04_deterministic_barrier():
    P = gen_fig1_2d(10_000)
    est, secs = timed(lambda: ratio(P, MechanismSpec(Kind.CWM)))
    ok = est.mean >= 1.414 - 2e-4 and secs < 1.0
    record(4, ok, f"CWM ratio on the k=10^4 instance = {est.mean:.6f} (floor {1.414 - 2e-4:.4f}), {secs:.2f}s")
    assert ok


def test_05_lq_generalization(corpus):
    def run():
        worst = {}
        for q in (3.0, 4.0):
            cfg = EvalConfig(q=q)
            factor = FOUR_OVER_PI * 2.0 ** (0.5 - 1.0 / q)
            ex = []
            for P in corpus:
                cost = expected_cost_quadrature_2d(P, RRCWM, cfg)
                opt = opt_value(P, q, cfg).value
                ex.append(cost - (factor * opt + 1e-5 * P.n))
            worst[q] = max(ex)
        return worst

    worst, secs = timed(run)
    ok = all(v <= 0 for v in worst.values()) and secs < 300
    record(5, ok, "max E[cost_q] - bound: " + ", ".join(f"q={q:g}: {v:.3e}" for q, v in worst.items())
           + f", {secs:.1f}s")
    assert ok


def test_06_grd_circle_floor():
    def run():
        rows = []
        for n in (10, 100, 1000):
            P = gen_unit_circle(n)
            opt = opt_value(P).value
            r = exact_expected_cost(P, MechanismSpec(Kind.GRD_UNIFORM)) / opt
            closed = 2.0 / math.tan(math.pi / (2 * n)) / opt
            rows.append((n, r, closed, check_trig_identity(n)))
        return rows

    rows, secs = timed(run)
    equal = all(abs(r - closed) <= 1e-10 * closed for _, r, closed, _ in rows)
    floor = all(r >= FOUR_OVER_PI - 3.0 / n for n, r, _, _ in rows)
    increasing = all(b[1] > a[1] for a, b in zip(rows, rows[1:]))
    trig = all(rep.passed for *_, rep in rows)
    ok = equal and floor and increasing and trig and secs < 10
    txt = ", ".join(f"n={n}: {r:.9f}" for n, r, _, _ in rows)
    record(6, ok, f"{txt}; closed form={equal}, floor={floor}, increasing={increasing}, trig={trig}, {secs:.2f}s")
    assert ok


def test_07_grd_sphere_floor():
    def run():
        return (check_grd_sphere_floor(50, 10_000, substream(7, 70)),
                check_sphere_distance(50, substream(7, 71)),
                check_sphere_moments(50, 4, substream(7, 72)))

    (floor, dist, moments), secs = timed(run)
    ok = floor.passed and dist.passed and moments.passed and secs < 60
    record(7, ok, f"min-report ratio {floor.measured:.5f} >= {floor.expected:.5f}; "
                  f"mean distance {dist.measured:.6f} vs series {dist.expected:.6f} (tol {dist.tolerance:.2e}); "
                  f"moments={moments.passed}, {secs:.1f}s")
    assert ok


def test_08_hd_lower_bound_trend():
    (reports, ests), secs = timed(lambda: check_hd_lower_bound((16, 64, 256), 2000, seed=7))
    d256 = dict(ests)[256]
    means = [e.mean for _, e in ests]
    ok = (d256.ci95[0] >= 1.2 and all(b >= a for a, b in zip(means, means[1:]))
          and all(e.mean <= CWM_RD_UPPER + 3 * e.std_error for _, e in ests)
          and all(r.passed for r in reports) and secs < 600)
    txt = ", ".join(f"d={d}: {e.mean:.5f}+-{e.std_error:.1e}" for d, e in ests)
    record(8, ok, f"{txt}; d=256 CI lower edge {d256.ci95[0]:.5f} (floor 1.2), {secs:.1f}s")
    assert ok


def test_09_rrcmp_tradeoff():
    families = {
        "lb-2d": build("paper-lb-2d", M=20),
        "fig1": build("fig1", k=100),
        "random": build("random-gaussian", n=51, seed=3),
    }

    def run():
        return {name: consistency_robustness_sweep(P, (0.1, 0.3, 0.5, 0.7), (0.0, 0.25, 1.0, 10.0),
                                                   EvalConfig(seed=9))
                for name, P in families.items()}

    sweeps, secs = timed(run)
    pts = [p for pts in sweeps.values() for p in pts]
    worst = max(p.measured_ratio.mean - p.paper_bound - p.slack for p in pts)
    consistent = [p.measured_ratio.mean for p in pts if p.c == 0.5 and p.eta == 0.0]
    ok = all(p.within_bound for p in pts) and all(r <= 1.0641 for r in consistent) and secs < 600
    record(9, ok, f"{len(pts)} grid points, max measured - (bound + slack) = {worst:.4f}; "
                  f"(c=0.5, eta=0) ratios {[round(r, 6) for r in consistent]} <= 1.0641, {secs:.1f}s")
    assert ok


def test_10_insertion_robustness():
    rep, secs = timed(lambda: check_insertion_robustness(1000, (0.1, 0.3, 0.5), substream(7, 100)))
    ok = rep.passed and secs < 120
    record(10, ok, f"{int(rep.measured)} violations; {rep.detail}, {secs:.1f}s")
    assert ok


def test_11_strategyproofness():
    rep, secs = timed(lambda: check_strategyproofness(200, substream(7, 110)))
    ok = rep.passed and secs < 300
    record(11, ok, f"{int(rep.measured)} profitable deviations; {rep.detail}, {secs:.1f}s")
    assert ok


def test_12_projection_median_example():
    reports, secs = timed(check_projmed_example)
    ok = all(r.passed for r in reports) and len(reports) == 4 and secs < 10
    txt = ", ".join(f"{r.name}={r.measured:.6g}" for r in reports)
    record(12, ok, f"{txt}, {secs:.2f}s")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
