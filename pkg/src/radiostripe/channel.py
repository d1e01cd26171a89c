"""Near-field line-of-sight channel between ceiling elements and receive points."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .scene import Deployment

C_LIGHT = 299_792_458.0


class SingularityError(ValueError):
    """Receive point coincides with a transmit element."""


@dataclass(frozen=True)
class NearFieldBounds:
    fresnel: float
    fraunhofer: float


def wavelength(frequency: float, c_light: float = C_LIGHT) -> float:
    if not frequency > 0:
        raise ValueError(f"frequency must be > 0, got {frequency}")
    return c_light / frequency


def near_field_bounds(diameter: float, lam: float) -> NearFieldBounds:
    if not (diameter > 0 and lam > 0):
        raise ValueError("diameter and wavelength must be > 0")
    return NearFieldBounds(
        fresnel=(diameter**4 / (8 * lam)) ** (1 / 3),
        fraunhofer=2 * diameter**2 / lam,
    )


def radiation_gain(theta, b: float):
    """cos^b element pattern, zero outside the lower hemisphere [0, pi/2]."""
    theta = np.asarray(theta, dtype=float)
    inside = (theta >= 0) & (theta <= math.pi / 2)
    cos = np.where(inside, np.cos(np.clip(theta, 0, math.pi / 2)), 0.0)
    # cos(pi/2) is 6e-17 in floating point; pin the horizon to an exact zero
    cos = np.where(np.isclose(theta, math.pi / 2, rtol=0, atol=1e-15), 0.0, cos)
    gain = np.where(inside, 2 * (b + 1) * cos**b, 0.0)
    return float(gain) if gain.ndim == 0 else gain


def _pattern_from_cos(cos: np.ndarray, b: float) -> np.ndarray:
    return np.where(cos >= 0, 2 * (b + 1) * np.clip(cos, 0, 1) ** b, 0.0)


def _distances(elements: np.ndarray, q) -> np.ndarray:
    d = np.linalg.norm(np.asarray(elements, dtype=float) - np.asarray(q, dtype=float), axis=-1)
    if np.any(d <= 0):
        raise SingularityError("receive point coincides with an antenna element")
    return d


def channel_coefficient(g, q, lam: float, b: float, h_c: float) -> complex:
    d = float(_distances(np.atleast_2d(g), q)[0])
    cos = (h_c - q[2]) / d
    amp = math.sqrt(float(_pattern_from_cos(np.array(cos), b))) * lam / (4 * math.pi * d)
    return amp * np.exp(-2j * math.pi * d / lam)


def channel_vector(deployment: Deployment | np.ndarray, q, lam: float, b: float,
                   h_c: float | None = None) -> np.ndarray:
    """Per-element coefficients, in deployment order, for one receive point."""
    el = deployment.elements if isinstance(deployment, Deployment) else np.atleast_2d(deployment)
    if h_c is None:
        h_c = float(el[0, 2])
    d = _distances(el, q)
    amp = np.sqrt(_pattern_from_cos((h_c - q[2]) / d, b)) * lam / (4 * math.pi * d)
    return amp * np.exp(-2j * math.pi * d / lam)


def channel_matrix(deployment: Deployment | np.ndarray, points, lam: float, b: float,
                   h_c: float | None = None) -> np.ndarray:
    """Stack of channel vectors, shape ``(len(points), N)``."""
    return np.array([channel_vector(deployment, q, lam, b, h_c) for q in np.atleast_2d(points)])


def gain_prefactor(b: float, lam: float) -> float:
    """Constant 2(b+1)(lam/4pi)^2 dropped by the deployment optimizer."""
    return 2 * (b + 1) * (lam / (4 * math.pi)) ** 2


def channel_gain(deployment: Deployment | np.ndarray, q, b: float, lam: float,
                 h_c: float | None = None) -> float:
    """Closed-form squared channel norm for a receive point below the ceiling."""
    el = deployment.elements if isinstance(deployment, Deployment) else np.atleast_2d(deployment)
    if h_c is None:
        h_c = float(el[0, 2])
    d = _distances(el, q)
    return gain_prefactor(b, lam) * (h_c - q[2]) ** b * float(np.sum(d ** -(b + 2)))


def channel_gains(deployment: Deployment | np.ndarray, points, b: float, lam: float,
                  h_c: float | None = None) -> np.ndarray:
    el = deployment.elements if isinstance(deployment, Deployment) else np.atleast_2d(deployment)
    pts = np.atleast_2d(points)
    if h_c is None:
        h_c = float(el[0, 2])
    d = np.linalg.norm(el[None, :, :] - pts[:, None, :], axis=-1)
    if np.any(d <= 0):
        raise SingularityError("receive point coincides with an antenna element")
    e = h_c - pts[:, 2]
    return gain_prefactor(b, lam) * e**b * np.sum(d ** -(b + 2), axis=1)


def aperture_diameter(deployment: Deployment | np.ndarray) -> float:
    el = deployment.elements if isinstance(deployment, Deployment) else np.atleast_2d(deployment)
    if len(el) < 2:
        raise ValueError("aperture needs at least two elements")
    return float(pdist(el).max())
