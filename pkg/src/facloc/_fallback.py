"""Pure numpy versions of the compiled kernels, with identical signatures."""

import math

import numpy as np

BACKEND = "numpy"

_CHUNK = 2048


def _rank(weights) -> float:
    return float(int((float(np.sum(weights)) + 1.0) // 2))


def weighted_lower_median(values, weights):
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.size == 0:
        raise ValueError("empty input")
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    idx = int(np.searchsorted(cum, _rank(weights), side="left"))
    return float(values[order[min(idx, values.size - 1)]])


def _row_medians(vals, w, rank):
    order = np.argsort(vals, axis=1, kind="stable")
    cum = np.cumsum(w[order], axis=1)
    idx = np.argmax(cum >= rank, axis=1)
    return np.take_along_axis(vals, order[np.arange(len(vals)), idx][:, None], axis=1)[:, 0]


def rotated_medians_2d(px, py, w, thetas):
    px, py, w, thetas = (np.asarray(a, dtype=float) for a in (px, py, w, thetas))
    rank = _rank(w)
    hx = np.empty(thetas.size)
    hy = np.empty(thetas.size)
    for lo in range(0, thetas.size, _CHUNK):
        th = thetas[lo:lo + _CHUNK]
        c = np.cos(th)[:, None]
        s = np.sin(th)[:, None]
        mx = _row_medians(c * px - s * py, w, rank)
        my = _row_medians(s * px + c * py, w, rank)
        c, s = c[:, 0], s[:, 0]
        hx[lo:lo + _CHUNK] = c * mx + s * my
        hy[lo:lo + _CHUNK] = -s * mx + c * my
    return hx, hy


def costs_2d(px, py, w, hx, hy, q):
    px, py, w, hx, hy = (np.asarray(a, dtype=float) for a in (px, py, w, hx, hy))
    out = np.empty(hx.size)
    for lo in range(0, hx.size, _CHUNK):
        dx = np.abs(px - hx[lo:lo + _CHUNK, None])
        dy = np.abs(py - hy[lo:lo + _CHUNK, None])
        if q == 2.0:
            d = np.hypot(dx, dy)
        elif q == 1.0:
            d = dx + dy
        elif math.isinf(q):
            d = np.maximum(dx, dy)
        else:
            d = (dx ** q + dy ** q) ** (1.0 / q)
        out[lo:lo + _CHUNK] = d @ w
    return out
