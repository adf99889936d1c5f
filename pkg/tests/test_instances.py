import math

import numpy as np
import pytest

from facloc.evaluation import scost
from facloc.instances import (
    RECIPES,
    InstanceRecipe,
    build,
    certificates,
    gen_clusters_outlier_hd,
    gen_fig1_2d,
    gen_random,
    gen_random_sphere,
    gen_two_clusters_outlier_2d,
    gen_unit_circle,
    hd_parameters,
    random_corpus_2d,
)
from facloc.geometry import substream
from facloc.medians import cwmed


def test_lower_bound_2d_recipe():
    P = build("paper-lb-2d", M=20)
    assert P.n == 801 and P.m == 3
    (cert,) = certificates(P)
    assert scost(P, cert) == pytest.approx(400 * math.sqrt(2) + 29)


def test_fig1_cwm_cost():
    P = gen_fig1_2d(10_000)
    assert P.n == 20_001
    assert np.array_equal(cwmed(P), [0.0, 0.0])
    assert scost(P, cwmed(P)) == 20_000


def test_hd_construction():
    assert hd_parameters(256) == (16, 4.0)
    P = gen_clusters_outlier_hd(256)
    assert P.dim == 256 and P.n == 33
    assert np.allclose(P.points[2, :2], [-4.0, -4.0]) and not P.points[2, 2:].any()
    with pytest.raises(ValueError):
        gen_clusters_outlier_hd(2)


def test_unit_circle():
    P = gen_unit_circle(1000)
    assert P.n == 1000
    assert np.allclose(np.linalg.norm(P.points, axis=1), 1.0)


def test_random_generators_seeded():
    a = build("random-gaussian", n=20, seed=4)
    b = build("random-gaussian", n=20, seed=4)
    assert np.array_equal(a.points, b.points)
    assert build("random-box", n=10, d=3, seed=1).points.max() <= 1.0
    with pytest.raises(ValueError):
        build("random-gaussian", n=5)
    assert gen_random_sphere(10, 4, substream(1)).n == 11
    with pytest.raises(ValueError):
        gen_random("cauchy", 3, 2, substream(1))


def test_invalid_parameters():
    with pytest.raises(ValueError):
        gen_two_clusters_outlier_2d(0, 1.0)
    with pytest.raises(ValueError):
        build("nope")
    with pytest.raises(KeyError):
        build("fig1")


def test_recipe_object_and_meta():
    P = InstanceRecipe("unit-circle", {"n": 8}).build()
    assert P.meta == {"recipe": "unit-circle", "params": {"n": 8}}
    assert set(RECIPES) >= {"paper-lb-2d", "fig1", "unit-circle"}


def test_corpus_reproducible():
    a = random_corpus_2d(6, 3)
    b = random_corpus_2d(6, 3)
    assert all(np.array_equal(x.points, y.points) for x, y in zip(a, b))
    assert all(3 <= P.n <= 201 and P.dim == 2 for P in a)
