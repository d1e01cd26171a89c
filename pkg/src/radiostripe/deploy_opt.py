"""Polygon and line stripe deployment by successive geometric programming.

For a predefined shape every element sits at a fixed horizontal offset from
the shape center ``g``, so the distance from element ``j`` to hotspot ``i``
equals ``||g - q_ji||`` with a shifted hotspot ``q_ji = q_i - offset_j``.
The signomial problem over ``(t, g, P, d)`` is::

    maximize t
    s.t.  k_i e_i^-b P_i^-1 t <= sum_j d_ji^-(b+2)
          d_ji^-2 (|g|^2 + |q_ji|^2) <= 1 + 2 d_ji^-2 <g, q_ji>
          sum_i P_i <= P_total

(the second line is ``d_ji >= ||g - q_ji||`` squared and expanded). The
third coordinate of ``g`` is the ceiling height, a constant. All horizontal
coordinates are translated by a positive margin so that every GP variable
and every cross product ``g_u q_jiu`` stays strictly positive.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import channel_gains, gain_prefactor
from .gp import Monomial, Posynomial, SignomialProblem, SolveResult, sgp_solve
from .precoding import maxmin_power_allocation
from .scene import (Deployment, Scenario, line_offsets, place_line, place_polygon,
                    polygon_offsets, polygon_radius, validate_deployment)

logger = logging.getLogger(__name__)


class ShiftError(RuntimeError):
    """A translated coordinate is not strictly positive."""


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerSettings:
    omega: float = 1.1
    epsilon: float = 1e-6
    max_iter: int = 100
    zeta: int = 10
    initial_center: tuple[float, float] | None = None  # None means room center
    weighted_selection: bool = False

    def __post_init__(self):
        if not self.omega > 1:
            raise ValueError("omega must exceed 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.max_iter < 1 or self.zeta < 1:
            raise ValueError("max_iter and zeta must be >= 1")


@dataclass
class DeploymentSolution:
    deployment: Deployment
    powers: np.ndarray
    objective: float  # GP epigraph value, without the 2(b+1)(lam/4pi)^2 factor
    objective_watts: float
    trace: list[dict]
    status: str
    center: tuple[float, float]
    angle: float | None = None
    inside_room: bool = True
    distances: np.ndarray | None = None  # GP distance variables, shape (N, M)
    angle_runs: list[dict] = field(default_factory=list)


@dataclass
class ShapeProblem:
    """Signomial problem for one shape plus the bookkeeping to map back."""

    problem: SignomialProblem
    offsets: np.ndarray  # (N, 2) element offsets from the center
    shift: float
    n_elements: int
    n_hotspots: int

    def shifted_hotspots(self, scenario: Scenario) -> np.ndarray:
        """``q_ji`` in shifted coordinates, shape (N, M, 2)."""
        q = scenario.hotspot_positions[:, :2] + self.shift
        return q[None, :, :] - self.offsets[:, None, :]

    def point(self, scenario: Scenario, center) -> dict:
        """GP point for a given (unshifted) center with exact distances."""
        g = np.asarray(center, dtype=float) + self.shift
        qh = self.shifted_hotspots(scenario)
        e = scenario.ceiling_height - scenario.hotspot_positions[:, 2]
        d = np.sqrt(np.sum((g - qh) ** 2, axis=-1) + e[None, :] ** 2)
        x = {"g1": float(g[0]), "g2": float(g[1])}
        for j in range(self.n_elements):
            for i in range(self.n_hotspots):
                x[dvar(j, i)] = float(d[j, i])
        return x

    def center_of(self, values: dict) -> tuple[float, float]:
        return (values["g1"] - self.shift, values["g2"] - self.shift)

    def distances_of(self, values: dict) -> np.ndarray:
        return np.array([[values[dvar(j, i)] for i in range(self.n_hotspots)]
                         for j in range(self.n_elements)])

    def powers_of(self, values: dict) -> np.ndarray:
        return np.array([values[pvar(i)] for i in range(self.n_hotspots)])


def dvar(j: int, i: int) -> str:
    return f"d[{j},{i}]"


def pvar(i: int) -> str:
    return f"P[{i}]"


def coordinate_shift(n: int, kappa: float) -> float:
    r0 = polygon_radius(n, kappa) if n >= 3 else 0.0
    return r0 + (n / 2) * kappa + 1.0


def _build(scenario: Scenario, offsets: np.ndarray, kappa: float) -> ShapeProblem:
    n = len(offsets)
    m = len(scenario.hotspots)
    b = scenario.boresight_gain
    h_c = scenario.ceiling_height
    shift = coordinate_shift(n, kappa)
    shape = ShapeProblem(SignomialProblem(Monomial.var("t")), offsets, shift, n, m)
    qh = shape.shifted_hotspots(scenario)
    if np.any(qh <= 0):
        raise ShiftError("shifted hotspot coordinate is not positive")

    sgp = shape.problem
    t = Monomial.var("t")
    g1, g2 = Monomial.var("g1"), Monomial.var("g2")
    P = [Monomial.var(pvar(i)) for i in range(m)]
    for i, hs in enumerate(scenario.hotspots):
        e = h_c - hs.position[2]
        lhs = hs.density * e ** (-b) * P[i] ** -1 * t
        rhs = Posynomial(Monomial.var(dvar(j, i)) ** -(b + 2) for j in range(n))
        sgp.add(lhs, rhs, f"gain[{i}]")
    for j in range(n):
        for i, hs in enumerate(scenario.hotspots):
            q1, q2 = qh[j, i]
            q3 = hs.position[2]
            dinv2 = Monomial.var(dvar(j, i)) ** -2
            lhs = Posynomial([dinv2 * g1**2, dinv2 * g2**2,
                              dinv2 * (h_c**2 + q1**2 + q2**2 + q3**2)])
            rhs_terms = [Monomial(1.0), dinv2 * g1 * (2 * q1), dinv2 * g2 * (2 * q2)]
            if q3 > 0:
                rhs_terms.append(dinv2 * (2 * h_c * q3))
            sgp.add(lhs, Posynomial(rhs_terms), f"dist[{j},{i}]")
    sgp.add(Posynomial(P), scenario.power_budget, "budget")
    sgp.trust_vars = ("g1", "g2") + tuple(dvar(j, i) for j in range(n) for i in range(m))
    return shape


def build_polygon_problem(scenario: Scenario, n: int, kappa: float) -> ShapeProblem:
    return _build(scenario, polygon_offsets(n, kappa), kappa)


def build_line_problem(scenario: Scenario, n: int, kappa: float, angle: float) -> ShapeProblem:
    return _build(scenario, line_offsets(n, kappa, angle), kappa)


def build_polygon_gp(scenario: Scenario, n: int, kappa: float, point: dict,
                     omega: float = 1.1):
    """Condensed GP of the polygon problem around ``point`` (shifted coordinates)."""
    return build_polygon_problem(scenario, n, kappa).problem.condense(point, omega)


def build_line_gp(scenario: Scenario, n: int, kappa: float, angle: float, point: dict,
                  omega: float = 1.1):
    return build_line_problem(scenario, n, kappa, angle).problem.condense(point, omega)


def _run(scenario: Scenario, shape: ShapeProblem, settings: OptimizerSettings,
         solver_options=None) -> tuple[SolveResult, list[dict]]:
    center = settings.initial_center or scenario.center
    x0 = shape.point(scenario, center)
    return sgp_solve(shape.problem, x0, settings.omega, settings.epsilon, settings.max_iter,
                     solver_options, record=lambda v: {"center": shape.center_of(v)})


def _solution(scenario: Scenario, shape: ShapeProblem, res: SolveResult, trace: list[dict],
              deployment: Deployment, kappa: float, angle=None) -> DeploymentSolution:
    center = shape.center_of(res.values)
    inside = scenario.contains(deployment.elements)
    if not inside:
        warnings.warn(f"optimized {deployment.shape_tag} leaves the room footprint",
                      stacklevel=3)
    report = validate_deployment(deployment, kappa) if deployment.n_elements >= 2 else None
    if report is not None and not report.ok:
        raise OptimizationError(f"materialized deployment violates spacing: {report}")
    lam = scenario.wavelength
    return DeploymentSolution(
        deployment=deployment,
        powers=shape.powers_of(res.values),
        objective=res.objective,
        objective_watts=res.objective * gain_prefactor(scenario.boresight_gain, lam),
        trace=trace,
        status=res.status,
        center=center,
        angle=angle,
        inside_room=inside,
        distances=shape.distances_of(res.values),
    )


def optimize_polygon(scenario: Scenario, n: int, kappa: float | None = None,
                     settings: OptimizerSettings | None = None,
                     solver_options=None) -> DeploymentSolution:
    """Successive-GP placement of a regular-polygon stripe (rotation fixed to 0)."""
    settings = settings or OptimizerSettings()
    kappa = scenario.kappa if kappa is None else kappa
    shape = build_polygon_problem(scenario, n, kappa)
    res, trace = _run(scenario, shape, settings, solver_options)
    if not res.values:
        raise OptimizationError(f"polygon optimization failed: {res.status} {res.diagnostics}")
    center = shape.center_of(res.values)
    if n >= 3:
        dep = place_polygon(center, n, kappa, scenario.ceiling_height)
    else:
        xy = np.asarray(center) + shape.offsets
        dep = Deployment(np.column_stack([xy, np.full(n, scenario.ceiling_height)]), "polygon",
                         {"center": center})
    return _solution(scenario, shape, res, trace, dep, kappa)


def line_angles(zeta: int) -> list[float]:
    return [k * math.pi / zeta for k in range(1, zeta + 1)]


def optimize_line(scenario: Scenario, n: int, kappa: float | None = None,
                  settings: OptimizerSettings | None = None,
                  solver_options=None) -> DeploymentSolution:
    """Angle sweep over ``k*pi/zeta``; each angle runs the successive GP for the center.

    The angle is selected by the smallest hotspot channel gain of the
    materialized line (density-weighted when ``weighted_selection``); a later
    angle replaces the incumbent on ties.
    """
    settings = settings or OptimizerSettings()
    kappa = scenario.kappa if kappa is None else kappa
    best: DeploymentSolution | None = None
    best_score = 0.0
    runs: list[dict] = []
    lam = scenario.wavelength
    for k, angle in enumerate(line_angles(settings.zeta), start=1):
        shape = build_line_problem(scenario, n, kappa, angle)
        res, trace = _run(scenario, shape, settings, solver_options)
        if not res.values:
            runs.append({"k": k, "angle": angle, "status": res.status, "score": None,
                         "objective": None, "trace": trace})
            continue
        center = shape.center_of(res.values)
        dep = place_line(center, angle, n, kappa, scenario.ceiling_height)
        gains = channel_gains(dep, scenario.hotspot_positions, scenario.boresight_gain, lam,
                              scenario.ceiling_height)
        if settings.weighted_selection:
            gains = gains / scenario.densities
        score = float(gains.min())
        runs.append({"k": k, "angle": angle, "status": res.status, "score": score,
                     "objective": res.objective, "center": center,
                     "iterations": len(trace), "trace": trace})
        if score >= best_score:
            best_score = score
            best = _solution(scenario, shape, res, trace, dep, kappa, angle)
    if best is None:
        raise OptimizationError(f"line optimization failed for every angle: {runs}")
    best.angle_runs = runs
    return best


def deployment_objective(scenario: Scenario, deployment: Deployment) -> tuple[np.ndarray, float]:
    """Closed-form max-min allocation on the hotspot centers, in watts."""
    gains = channel_gains(deployment, scenario.hotspot_positions, scenario.boresight_gain,
                          scenario.wavelength, scenario.ceiling_height)
    return maxmin_power_allocation(gains, scenario.densities, scenario.power_budget)
