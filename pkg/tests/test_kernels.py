import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facloc import _fallback, kernels
from facloc.geometry import substream
from facloc.quadrature import QUARTER_TURN, angle_average, simpson_rule

compiled = pytest.mark.skipif(not kernels.compiled_available(), reason="compiled extension not built")


def _backends():
    out = [_fallback]
    if kernels.compiled_available():
        from facloc import _kernels

        out.append(_kernels)
    return out


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "numpy")


@pytest.mark.parametrize("impl", _backends(), ids=lambda m: m.BACKEND)
def test_weighted_lower_median(impl):
    v = np.array([5.0, 1.0, 3.0, 3.0, 2.0])
    w = np.ones(5)
    assert impl.weighted_lower_median(v, w) == 3.0
    assert impl.weighted_lower_median(np.array([0.0, 1.0]), np.array([2.0, 2.0])) == 0.0
    assert impl.weighted_lower_median(np.array([0.0, 1.0]), np.array([1.0, 3.0])) == 1.0


@compiled
@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.integers(1, 5)), min_size=1, max_size=50))
def test_median_backends_agree(items):
    from facloc import _kernels

    v = np.array([x for x, _ in items])
    w = np.array([float(m) for _, m in items])
    assert _kernels.weighted_lower_median(v, w) == _fallback.weighted_lower_median(v, w)


@compiled
@pytest.mark.parametrize("q", [1.0, 2.0, 3.0, np.inf])
def test_rotated_kernels_agree(q):
    from facloc import _kernels

    rng = substream(1)
    for m in (1, 2, 7, 64):
        px, py = rng.standard_normal(m), rng.standard_normal(m)
        w = rng.integers(1, 4, m).astype(float)
        th = rng.uniform(0, QUARTER_TURN, 500)
        a = _kernels.rotated_medians_2d(px, py, w, th)
        b = _fallback.rotated_medians_2d(px, py, w, th)
        assert np.allclose(a[0], b[0], atol=1e-13) and np.allclose(a[1], b[1], atol=1e-13)
        ca = _kernels.costs_2d(px, py, w, a[0], a[1], q)
        cb = _fallback.costs_2d(px, py, w, a[0], a[1], q)
        assert np.allclose(ca, cb, rtol=1e-12, atol=1e-12)


def test_zero_angle_is_plain_median():
    px = np.array([3.0, 1.0, 2.0])
    py = np.array([0.0, 5.0, -1.0])
    hx, hy = kernels.rotated_medians_2d(px, py, np.ones(3), np.array([0.0]))
    assert (hx[0], hy[0]) == (2.0, 0.0)


def test_simpson_exact_for_cubics():
    x, w = simpson_rule(10, 0.0, 2.0)
    assert w @ (x ** 3 - x + 1) == pytest.approx(4.0 - 2.0 + 2.0, rel=1e-14)
    assert angle_average(np.ones_like(x), w, 0.0, 2.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        simpson_rule(3)
