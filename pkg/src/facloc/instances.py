"""Generators for the adversarial constructions and for random test corpora."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import sample_unit_sphere_many, substream
from .medians import Instance


@dataclass(frozen=True)
class InstanceRecipe:
    kind: str
    params: dict = field(default_factory=dict)

    def build(self) -> Instance:
        return build(self.kind, **self.params)


def gen_two_clusters_outlier_2d(k: int, M: float) -> Instance:
    """k agents at (1, 0), k at (0, 1) and a single outlier at (-M, -M)."""
    if k < 1 or not M > 0:
        raise ValueError("need k >= 1 and M > 0")
    return Instance.from_atoms([((1.0, 0.0), k), ((0.0, 1.0), k), ((-M, -M), 1)],
                               meta={"recipe": "two-clusters-outlier-2d", "params": {"k": k, "M": M}})


def gen_fig1_2d(k: int) -> Instance:
    if k < 1:
        raise ValueError("need k >= 1")
    return Instance.from_atoms([((1.0, 0.0), k), ((0.0, 1.0), k), ((0.0, 0.0), 1)],
                               meta={"recipe": "fig1", "params": {"k": k}})


def hd_parameters(d: int) -> tuple[int, float]:
    k = math.isqrt(d)
    return k, math.sqrt(k)


def gen_clusters_outlier_hd(d: int) -> Instance:
    """k copies of e1 and of e2 plus one copy of -M(e1 + e2), with k = floor(sqrt d), M = sqrt k."""
    if d <= 2:
        raise ValueError("the high-dimensional construction needs d > 2")
    k, M = hd_parameters(d)
    pts = np.zeros((3, d))
    pts[0, 0] = 1.0
    pts[1, 1] = 1.0
    pts[2, 0] = pts[2, 1] = -M
    return Instance(pts, [k, k, 1], {"recipe": "clusters-outlier-hd", "params": {"d": d}})


def gen_unit_circle(n: int) -> Instance:
    if n < 2:
        raise ValueError("need n >= 2")
    ang = 2.0 * math.pi * np.arange(n) / n
    return Instance.from_points(np.column_stack([np.cos(ang), np.sin(ang)]),
                                meta={"recipe": "unit-circle", "params": {"n": n}})


def gen_random_sphere(n: int, d: int, rng: np.random.Generator) -> Instance:
    """n + 1 i.i.d. uniform points on the unit sphere."""
    if n < 1 or d < 2:
        raise ValueError("need n >= 1 and d >= 2")
    return Instance.from_points(sample_unit_sphere_many(n + 1, d, rng))


def gen_random(kind: str, n: int, d: int, rng: np.random.Generator) -> Instance:
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    if kind == "gaussian":
        pts = rng.standard_normal((n, d))
    elif kind in ("uniform_box", "box"):
        pts = rng.uniform(-1.0, 1.0, size=(n, d))
    else:
        raise ValueError(f"unknown random instance kind {kind!r}")
    return Instance.from_points(pts)


def _seeded(params: dict) -> np.random.Generator:
    if "seed" not in params:
        raise ValueError("random recipes need a seed")
    return substream(int(params["seed"]))


def build(recipe: str, **params) -> Instance:
    """Instance from a named recipe; the ``paper-lb-*`` recipes tie k and M to a single size parameter."""
    if recipe == "paper-lb-2d":
        M = int(params["M"])
        P = gen_two_clusters_outlier_2d(M * M, float(M))
    elif recipe == "two-clusters-outlier-2d":
        P = gen_two_clusters_outlier_2d(int(params["k"]), float(params["M"]))
    elif recipe == "fig1":
        P = gen_fig1_2d(int(params["k"]))
    elif recipe in ("paper-lb-hd", "clusters-outlier-hd"):
        P = gen_clusters_outlier_hd(int(params["d"]))
    elif recipe == "unit-circle":
        P = gen_unit_circle(int(params["n"]))
    elif recipe == "random-sphere":
        P = gen_random_sphere(int(params["n"]), int(params["d"]), _seeded(params))
    elif recipe in ("random-gaussian", "random-box"):
        kind = "gaussian" if recipe == "random-gaussian" else "uniform_box"
        P = gen_random(kind, int(params["n"]), int(params.get("d", 2)), _seeded(params))
    else:
        raise ValueError(f"unknown recipe {recipe!r}")
    return Instance(P.points, P.mults, {"recipe": recipe, "params": dict(params)})


RECIPES = ("paper-lb-2d", "two-clusters-outlier-2d", "fig1", "paper-lb-hd", "clusters-outlier-hd",
           "unit-circle", "random-sphere", "random-gaussian", "random-box")


def certificates(P: Instance) -> list[np.ndarray]:
    """Analytic upper-bound points for OPT on the named constructions (empty otherwise)."""
    recipe = P.meta.get("recipe", "")
    if recipe in ("paper-lb-2d", "two-clusters-outlier-2d"):
        return [np.array([1.0, 0.0])]
    if recipe == "fig1":
        return [np.array([0.5, 0.5])]
    if recipe in ("paper-lb-hd", "clusters-outlier-hd"):
        c = np.zeros(P.dim)
        c[0] = c[1] = 0.5
        return [c]
    if recipe in ("unit-circle", "random-sphere"):
        return [np.zeros(P.dim)]
    return []


def random_corpus_2d(count: int, seed: int, max_n: int = 201) -> list[Instance]:
    """Alternating Gaussian / box 2-D instances with odd and even sizes up to ``max_n``."""
    out = []
    for i in range(count):
        rng = substream(seed, i)
        n = int(rng.integers(3, max_n + 1))
        kind = "gaussian" if i % 2 == 0 else "uniform_box"
        P = gen_random(kind, n, 2, rng)
        out.append(Instance(P.points, P.mults, {"recipe": f"corpus-{kind}", "params": {"seed": seed, "index": i}}))
    return out
