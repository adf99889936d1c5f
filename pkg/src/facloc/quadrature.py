import math

import numpy as np

QUARTER_TURN = math.pi / 2


def simpson_rule(panels: int, a: float = 0.0, b: float = QUARTER_TURN):
    """Nodes and weights of the composite Simpson rule with ``panels`` (even) panels."""
    if panels < 2 or panels % 2:
        raise ValueError(f"Simpson quadrature needs a positive even panel count, got {panels}")
    x = np.linspace(a, b, panels + 1)
    w = np.full(panels + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * ((b - a) / panels / 3.0)


def angle_average(values: np.ndarray, weights: np.ndarray, a: float = 0.0, b: float = QUARTER_TURN):
    """Average of sampled integrand values under the uniform law on ``[a, b]``."""
    return float(values @ weights) / (b - a)
