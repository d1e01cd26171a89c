"""Rooms, hotspots and radio-stripe geometries.

Coordinates are meters with the origin at a floor corner of the room; the
stripe elements always hang on the ceiling (third coordinate ``h_c``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SHAPES = ("polygon", "line", "center_square_stripe", "center_fd_array")

# Slack used by every geometric check in this module.
GEOM_TOL = 1e-9


class InvalidShapeError(ValueError):
    pass


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Hotspot:
    position: tuple[float, float, float]
    density: float = 1.0
    user_radius: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        if len(self.position) != 3:
            raise ScenarioError("hotspot position must have three coordinates")
        if not self.density > 0:
            raise ScenarioError(f"hotspot density must be > 0, got {self.density}")
        if not self.user_radius >= 0:
            raise ScenarioError(f"hotspot user_radius must be >= 0, got {self.user_radius}")


@dataclass(frozen=True)
class Scenario:
    room_width: float
    room_depth: float
    ceiling_height: float
    hotspots: tuple[Hotspot, ...]
    frequency: float = 10e9
    boresight_gain: float = 2.0
    power_budget: float = 1.0
    inter_element_spacing: float | None = None  # None means lambda/2
    c_light: float = 299_792_458.0

    def __post_init__(self):
        object.__setattr__(self, "hotspots", tuple(self.hotspots))
        for name in ("room_width", "room_depth", "ceiling_height", "frequency",
                     "power_budget", "c_light"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.inter_element_spacing is not None and not self.inter_element_spacing > 0:
            raise ScenarioError("inter_element_spacing must be > 0")
        if not self.boresight_gain >= 0:
            raise ScenarioError("boresight_gain must be >= 0")
        if not self.hotspots:
            raise ScenarioError("scenario needs at least one hotspot")
        for idx, hs in enumerate(self.hotspots):
            x, y, z = hs.position
            if not (0 <= x <= self.room_width and 0 <= y <= self.room_depth):
                raise ScenarioError(f"hotspot {idx} at ({x}, {y}) lies outside the room footprint")
            # the GP uses 2*h_c*q_z as a posynomial coefficient, so the floor bounds z
            if not 0 <= z < self.ceiling_height:
                raise ScenarioError(f"hotspot {idx} height {z} must satisfy 0 <= z < h_c")

    @property
    def wavelength(self) -> float:
        return self.c_light / self.frequency

    @property
    def kappa(self) -> float:
        if self.inter_element_spacing is None:
            return self.wavelength / 2
        return self.inter_element_spacing

    @property
    def center(self) -> tuple[float, float]:
        return (self.room_width / 2, self.room_depth / 2)

    @property
    def hotspot_positions(self) -> np.ndarray:
        return np.array([hs.position for hs in self.hotspots])

    @property
    def densities(self) -> np.ndarray:
        return np.array([hs.density for hs in self.hotspots])

    def contains(self, points: np.ndarray, tol: float = GEOM_TOL) -> bool:
        pts = np.atleast_2d(points)
        return bool(np.all((pts[:, 0] >= -tol) & (pts[:, 0] <= self.room_width + tol)
                           & (pts[:, 1] >= -tol) & (pts[:, 1] <= self.room_depth + tol)))


@dataclass(frozen=True)
class Deployment:
    elements: np.ndarray
    shape_tag: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.array(self.elements, dtype=float).reshape(-1, 3)
        arr.setflags(write=False)
        object.__setattr__(self, "elements", arr)
        if self.shape_tag not in SHAPES:
            raise InvalidShapeError(f"unknown shape tag {self.shape_tag!r}")

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def __eq__(self, other):
        if not isinstance(other, Deployment):
            return NotImplemented
        return (self.shape_tag == other.shape_tag
                and np.array_equal(self.elements, other.elements))

    __hash__ = None


@dataclass
class ValidationReport:
    path_length: float
    path_limit: float
    path_ok: bool
    min_distance: float
    spacing_ok: bool
    violating_pairs: list[tuple[int, int]]

    @property
    def ok(self) -> bool:
        return self.path_ok and self.spacing_ok


def polygon_radius(n: int, kappa: float) -> float:
    """Circumradius of a regular ``n``-gon whose side equals ``kappa``."""
    if n < 3:
        raise InvalidShapeError(f"a polygon needs at least 3 elements, got {n}")
    if not kappa > 0:
        raise InvalidShapeError("kappa must be > 0")
    return kappa / (2 * math.sin(math.pi / n))


def polygon_offsets(n: int, kappa: float) -> np.ndarray:
    """Horizontal element offsets from the polygon center, rotation fixed to 0.

    A single element sits on the center itself and two elements are a
    diameter ``kappa`` apart; both are handy degenerate cases for the
    optimizer.
    """
    if n == 1:
        return np.zeros((1, 2))
    r0 = kappa / (2 * math.sin(math.pi / n))
    ang = 2 * math.pi / n * np.arange(n)
    return np.column_stack([r0 * np.cos(ang), r0 * np.sin(ang)])


def line_offsets(n: int, kappa: float, angle: float) -> np.ndarray:
    """Horizontal offsets of the line elements from the line center.

    Element ``j`` (1-based) is ``(j - floor(n/2)) * kappa`` along the line,
    so the center coincides with element ``floor(n/2)`` (or sits one step
    before the first element when ``n == 1``).
    """
    steps = (np.arange(1, n + 1) - n // 2) * kappa
    return np.column_stack([steps * math.cos(angle), steps * math.sin(angle)])


def _on_ceiling(xy: np.ndarray, h_c: float) -> np.ndarray:
    return np.column_stack([xy, np.full(len(xy), float(h_c))])


def place_polygon(center: Sequence[float], n: int, kappa: float, h_c: float) -> Deployment:
    polygon_radius(n, kappa)
    xy = np.asarray(center, dtype=float)[:2] + polygon_offsets(n, kappa)
    return Deployment(_on_ceiling(xy, h_c), "polygon",
                      {"center": tuple(map(float, center[:2])), "radius": polygon_radius(n, kappa)})


def place_line(center: Sequence[float], angle: float, n: int, kappa: float,
               h_c: float) -> Deployment:
    if n < 1:
        raise InvalidShapeError("a line needs at least one element")
    xy = np.asarray(center, dtype=float)[:2] + line_offsets(n, kappa, angle)
    return Deployment(_on_ceiling(xy, h_c), "line",
                      {"center": tuple(map(float, center[:2])), "angle": float(angle)})


def place_center_square_stripe(scenario: Scenario, n: int, kappa: float | None = None) -> Deployment:
    """Square-shaped stripe at the room center with uniform perimeter spacing.

    Slots are spaced ``kappa`` along the perimeter starting at a corner, with
    ``ceil(n/4)`` slots per side; when ``n`` is not a multiple of four the
    trailing slots stay empty so that no element cuts a corner.
    """
    if n < 4:
        raise InvalidShapeError(f"center square stripe needs N >= 4, got {n}")
    kappa = scenario.kappa if kappa is None else kappa
    per_side = -(-n // 4)
    side = per_side * kappa
    cx, cy = scenario.center
    if side > scenario.room_width + GEOM_TOL or side > scenario.room_depth + GEOM_TOL:
        raise InvalidShapeError(f"square of side {side:.3f} m does not fit in the room")
    corners = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]]) * side / 2
    dirs = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)
    slots = [corners[s] + dirs[s] * k * kappa for s in range(4) for k in range(per_side)]
    xy = np.array(slots[:n]) + np.array([cx, cy])
    return Deployment(_on_ceiling(xy, scenario.ceiling_height), "center_square_stripe",
                      {"side": side})


def nearest_square(n_target: int) -> int:
    """Side ``n`` of the square number ``n**2`` closest to ``n_target`` (ties go down)."""
    if n_target < 1:
        raise InvalidShapeError("target element count must be >= 1")
    lo = math.isqrt(n_target)
    hi = lo + 1
    if lo * lo == n_target or n_target - lo * lo <= hi * hi - n_target:
        return max(lo, 1)
    return hi


def place_center_fd_array(scenario: Scenario, n_target: int) -> Deployment:
    side = nearest_square(n_target)
    spacing = scenario.wavelength / 2
    ticks = (np.arange(side) - (side - 1) / 2) * spacing
    xx, yy = np.meshgrid(ticks, ticks, indexing="ij")
    xy = np.column_stack([xx.ravel(), yy.ravel()]) + np.array(scenario.center)
    return Deployment(_on_ceiling(xy, scenario.ceiling_height), "center_fd_array",
                      {"side": side, "spacing": spacing})


def validate_deployment(deployment: Deployment, kappa: float) -> ValidationReport:
    el = deployment.elements
    if len(el) < 2:
        raise InvalidShapeError("validation needs at least two elements")
    n = len(el)
    path = float(np.sum(np.linalg.norm(np.diff(el, axis=0), axis=1)))
    limit = (n - 1) * kappa
    dist = np.linalg.norm(el[:, None, :] - el[None, :, :], axis=-1)
    iu = np.triu_indices(n, k=1)
    pair_d = dist[iu]
    bad = pair_d < kappa - GEOM_TOL
    pairs = [(int(a), int(b)) for a, b in zip(iu[0][bad], iu[1][bad])]
    return ValidationReport(
        path_length=path,
        path_limit=limit,
        path_ok=path <= limit + GEOM_TOL * max(1.0, limit),
        min_distance=float(pair_d.min()),
        spacing_ok=not pairs,
        violating_pairs=pairs,
    )


def elements_from_length(length: float, kappa: float) -> int:
    if length < 0 or not kappa > 0:
        raise ValueError("length must be >= 0 and kappa > 0")
    # guard against L/kappa landing a hair below an integer
    return int(math.floor(length / kappa + 1e-9)) + 1


def warn_if_outside(scenario: Scenario, deployment: Deployment) -> bool:
    """Warn (do not raise) when a deployment leaves the room footprint."""
    inside = scenario.contains(deployment.elements)
    if not inside:
        warnings.warn(f"{deployment.shape_tag} deployment extends outside the room",
                      stacklevel=2)
    return inside
