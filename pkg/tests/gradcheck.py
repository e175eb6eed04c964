"""Central finite-difference helpers shared by the gradient tests."""
import numpy as np


def numeric_gradient(f, params, eps=1e-5):
    g = np.zeros_like(params)
    for i in range(len(params)):
        p = params.copy()
        p[i] += eps
        up = f(p)
        p[i] -= 2 * eps
        g[i] = (up - f(p)) / (2 * eps)
    return g


def max_relative_error(analytic, numeric, floor=1e-6):
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))
