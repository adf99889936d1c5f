import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facloc.geometry import rotation_from_angle, substream
from facloc.mechanisms import (
    FOUR_OVER_PI,
    Kind,
    MechanismSpec,
    SPArm,
    augment,
    batched_rcwmed,
    dictator_costs,
    facility_at,
    grd_agent_weights,
    grd_atom_weights,
    grd_expected_cost,
    mac_bound,
    prediction_copies,
    probe_arms_batched,
    probe_strategyproofness,
    replay,
    rrcmp_bound,
    run,
    run_cmp,
    run_grd,
    sp_arms,
    strategyproofness_suite,
)
from facloc.medians import Instance, cwmed, rcwmed

coords = st.floats(-50, 50, allow_nan=False)


def test_spec_validation():
    with pytest.raises(ValueError):
        MechanismSpec(Kind.CMP)
    with pytest.raises(ValueError):
        MechanismSpec(Kind.CMP, c=1.0, prediction=[0.0, 0.0])
    with pytest.raises(ValueError):
        MechanismSpec(Kind.CWM, c=0.2)
    assert MechanismSpec("rrcmp", c=0.3, prediction=[0, 0]).label() == "rrcmp(c=0.3)"
    assert MechanismSpec(Kind.RRCWM).randomized and not MechanismSpec(Kind.CWM).randomized


def test_prediction_copies_floor():
    assert prediction_copies(100, 0.29) == 29
    assert prediction_copies(10, 0.0) == 0
    assert prediction_copies(801, 0.5) == 400


def test_augment_appends_copies():
    P = Instance.from_points([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])
    Q = augment(P, [9.0, 9.0], 0.7)
    assert Q.n == 5 and Q.mults[-1] == 2
    assert augment(P, [9.0, 9.0], 0.1) is P


def test_cmp_keeps_median_prediction_and_moves_toward_others():
    rng = substream(1)
    for n in (4, 11, 30):
        P = Instance.from_points(rng.standard_normal((n, 2)))
        m = cwmed(P)
        for c in (0.1, 0.5, 0.9):
            assert np.array_equal(run_cmp(P, m, c).facility, m)
            pred = np.array([5.0, -5.0])
            f = run_cmp(P, pred, c).facility
            assert f[0] >= m[0] and f[1] <= m[1]


def test_run_dispatch_and_replay():
    rng = substream(2)
    P = Instance.from_points(rng.standard_normal((9, 3)))
    specs = [MechanismSpec(k) for k in (Kind.CWM, Kind.RRCWM, Kind.GRD_UNIFORM, Kind.GRD_PROPORTIONAL)]
    specs += [MechanismSpec(k, c=0.3, prediction=np.zeros(3)) for k in (Kind.CMP, Kind.RRCMP)]
    for spec in specs:
        out = run(P, spec, rng)
        assert np.allclose(replay(P, spec, out), out.facility)


def test_planar_rotation_recorded_as_angle():
    out = run(Instance.from_points(substream(3).standard_normal((5, 2))), MechanismSpec(Kind.RRCWM), substream(4))
    assert 0.0 <= out.realized_randomness["angle"] < math.pi / 2


def test_facility_periodic_in_quarter_turn():
    P = Instance.from_points(substream(5).standard_normal((7, 2)))
    for t in (0.1, 0.7, 1.3):
        a = rcwmed(P, rotation_from_angle(t))
        b = rcwmed(P, rotation_from_angle(t + math.pi / 2))
        assert np.allclose(a, b, atol=1e-12)


def test_grd_output_is_a_report():
    rng = substream(6)
    P = Instance.from_points(rng.standard_normal((6, 2)))
    for variant in ("uniform", "proportional", Kind.GRD_PROPORTIONAL):
        f = run_grd(P, variant, rng).facility
        assert any(np.array_equal(f, p) for p in P.points)


def test_grd_weights_are_distributions_and_exact():
    P = Instance.from_atoms([((0.0, 0.0), 2), ((3.0, 0.0), 1), ((0.0, 4.0), 1)])
    for kind in (Kind.GRD_UNIFORM, Kind.GRD_PROPORTIONAL):
        w = grd_atom_weights(P, kind)
        assert w.sum() == pytest.approx(1.0) and np.all(w >= 0)
        assert grd_expected_cost(P, grd_agent_weights(P, kind)) == pytest.approx(w @ dictator_costs(P))
    # hand computation for the proportional rule
    D = np.array([[0, 3, 4], [3, 0, 5], [4, 5, 0]], dtype=float)
    m = np.array([2.0, 1.0, 1.0])
    expect = sum((m[a] / 4) * D[a] * m / (D[a] @ m) for a in range(3))
    assert np.allclose(grd_atom_weights(P, "proportional"), expect)


def test_grd_proportional_sampling_matches_exact_weights():
    rng = substream(7)
    P = Instance.from_atoms([((0.0, 0.0), 2), ((3.0, 0.0), 1), ((0.0, 4.0), 1)])
    draws = np.array([run_grd(P, "proportional", rng).facility for _ in range(20000)])
    freq = [np.mean(np.all(draws == p, axis=1)) for p in P.points]
    assert np.allclose(freq, grd_atom_weights(P, "proportional"), atol=0.015)


def test_grd_expected_cost_validates():
    P = Instance.from_points([[0.0], [1.0]])
    with pytest.raises(ValueError):
        grd_expected_cost(P, [0.5, 0.6])
    with pytest.raises(ValueError):
        grd_expected_cost(P, [1.0])


def test_dictator_cost_paths_agree():
    P = Instance.from_points(substream(8).standard_normal((2100, 2)))
    from facloc.mechanisms import _dictator_costs_gram, atom_distances

    assert np.allclose(_dictator_costs_gram(P), atom_distances(P) @ P.weights, rtol=1e-9)


def test_bounds():
    assert mac_bound(0.0) == 1.0
    assert mac_bound(0.49) == pytest.approx(FOUR_OVER_PI)
    with pytest.raises(ValueError):
        mac_bound(0.5)
    assert rrcmp_bound(0.0, 3.0) == pytest.approx(FOUR_OVER_PI)
    assert rrcmp_bound(0.5, 0.0) == pytest.approx(math.sqrt(2.5) / 1.5)
    assert rrcmp_bound(0.5, 0.0) < 1.0641


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=1, max_size=12), st.floats(0, 2 * math.pi))
def test_batched_median_matches_scalar(pts, theta):
    arr = np.array(pts)
    R = rotation_from_angle(theta)
    got = batched_rcwmed(arr[None], R)[0]
    assert np.allclose(got, rcwmed(Instance.from_points(arr), R), atol=1e-9)
    assert np.array_equal(batched_rcwmed(arr[None])[0], cwmed(Instance.from_points(arr)))


def test_batched_probe_agrees_with_generic_probe():
    rng = substream(9)
    agents = rng.standard_normal((5, 2))
    arms = sp_arms(5, 2, rng, rotations=2)
    for arm in arms:
        a = probe_arms_batched(agents, [arm], substream(10))

        def generic(P, arm=arm):
            return arm(P.agents()[None])[0]

        b = probe_strategyproofness(agents, generic, substream(10))
        assert a.checked == b.checked and a.violations == b.violations == 0
        assert a.worst_gain == pytest.approx(b.worst_gain, abs=1e-12)


def test_probe_detects_manipulable_mechanism():
    # the mean is not strategyproof: pulling the report away drags the facility along
    res = probe_strategyproofness(substream(11).standard_normal((5, 2)),
                                  lambda P: P.agents().mean(axis=0), substream(12))
    assert res.violations > 0 and res.witness["gain"] > 1e-3


def test_generic_probe_on_instance_arm():
    spec = MechanismSpec(Kind.RRCMP, c=0.3, prediction=[0.5, 0.5])
    R = rotation_from_angle(0.4)
    res = probe_strategyproofness(substream(13).standard_normal((6, 2)),
                                  lambda P: facility_at(P, spec, R=R), substream(14), n_dev=16)
    assert res.violations == 0 and res.checked == 6 * 16


def test_small_strategyproofness_suite():
    res = strategyproofness_suite(5, substream(15), n_dev=16, rotations=2)
    assert res.violations == 0 and res.checked > 0


def test_grd_fixed_arm():
    arm = SPArm("grd", dictator=1)
    stack = np.arange(12.0).reshape(2, 3, 2)
    assert np.array_equal(arm(stack), stack[:, 1, :])
