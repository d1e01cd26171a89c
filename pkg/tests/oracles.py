"""Independent reference formulas used by several test modules."""

import math

import numpy as np


def polygon_element_offsets(n, kappa):
    """Offsets r0 (cos (j-1)phi, sin (j-1)phi), phi = 2 pi / n."""
    r0 = kappa / (2 * math.sin(math.pi / n))
    phi = 2 * math.pi / n
    return np.array([[r0 * math.cos(j * phi), r0 * math.sin(j * phi)] for j in range(n)])


def gain_rhs_closed_form(d0, d, b):
    """Monomial approximation of sum_j d_j^-(b+2) around d0."""
    d0 = np.asarray(d0, dtype=float)
    d = np.asarray(d, dtype=float)
    s = np.sum(d0 ** -(b + 2))
    beta = -(b + 2) * d0 ** -(b + 2) / s
    return s * np.prod((d / d0) ** beta)


def distance_rhs_closed_form(g0, g, d0, d, qhat):
    """Monomial approximation of 1 + 2 d^-2 <g, qhat> around (g0, d0).

    ``g0``/``g`` hold the two free horizontal coordinates; the third
    coordinate of both the center and ``qhat`` is folded in as a constant.
    """
    g0 = np.asarray(g0, dtype=float)
    g = np.asarray(g, dtype=float)
    qhat = np.asarray(qhat, dtype=float)
    inner0 = g0[0] * qhat[0] + g0[1] * qhat[1] + qhat[2]  # qhat[2] = h_c * q_3
    denom = 1 + 2 * d0 ** -2 * inner0
    beta_d = -4 * d0 ** -2 * inner0 / denom
    beta_g = 2 * g0 * d0 ** -2 * qhat[:2] / denom
    return denom * (d / d0) ** beta_d * np.prod((g / g0) ** beta_g)


def maxmin_objective(gains, densities, budget):
    return budget / np.sum(np.asarray(densities) / np.asarray(gains))
