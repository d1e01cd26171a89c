"""Monte Carlo evaluation, benchmark comparisons, sweeps and oracles."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .channel import (SingularityError, aperture_diameter, channel_matrix, gain_prefactor,
                      near_field_bounds, wavelength)
from .deploy_opt import (OptimizationError, OptimizerSettings, deployment_objective,
                         optimize_line, optimize_polygon)
from .precoding import maxmin_power_allocation, mrt_precoders, received_powers
from .scene import (Deployment, InvalidShapeError, Scenario, elements_from_length,
                    line_offsets, nearest_square, place_center_fd_array,
                    place_center_square_stripe, polygon_offsets)

logger = logging.getLogger(__name__)

ALLOCATIONS = ("per-trial", "deployment-time")
DEPLOYMENT_KINDS = ("polygon", "line", "center_square", "center_fd")


@dataclass(frozen=True)
class MonteCarloSpec:
    trials: int = 100
    user_radius: float | None = None  # None: use each hotspot's own radius
    base_seed: int = 0
    users_per_hotspot: int = 1
    allocation: str = "per-trial"
    weighted: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.users_per_hotspot < 1:
            raise ValueError("users_per_hotspot must be >= 1")
        if self.user_radius is not None and self.user_radius < 0:
            raise ValueError("user_radius must be >= 0")
        if self.allocation not in ALLOCATIONS:
            raise ValueError(f"allocation must be one of {ALLOCATIONS}")


@dataclass
class EvalResult:
    label: str
    shape_tag: str
    n_elements: int
    minima: np.ndarray
    allocation: str
    seed: int
    failed_trials: list[int] = field(default_factory=list)

    @property
    def average(self) -> float:
        return float(np.mean(self.minima)) if len(self.minima) else float("nan")

    @property
    def trials(self) -> int:
        return len(self.minima)


def to_dbm(watts: float) -> float:
    return 10 * math.log10(watts / 1e-3) if watts > 0 else float("-inf")


def trial_rng(base_seed: int, trial_index: int) -> np.random.Generator:
    """Independent, reproducible stream per (seed, trial) pair."""
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(trial_index,)))


def sample_users(scenario: Scenario, spec: MonteCarloSpec, trial_index: int):
    """Uniform-over-area user drops around every hotspot center.

    Returns ``(positions, hotspot_index)``; users keep the hotspot height.
    """
    rng = trial_rng(spec.base_seed, trial_index)
    pos, owner = [], []
    for i, hs in enumerate(scenario.hotspots):
        radius = hs.user_radius if spec.user_radius is None else spec.user_radius
        for _ in range(spec.users_per_hotspot):
            r = radius * math.sqrt(rng.random())
            a = 2 * math.pi * rng.random()
            x, y, z = hs.position
            pos.append((x + r * math.cos(a), y + r * math.sin(a), z))
            owner.append(i)
    return np.array(pos), np.array(owner)


def evaluate_deployment(deployment: Deployment, users: np.ndarray, scenario: Scenario,
                        allocation: str = "per-trial", powers=None, owner=None,
                        weighted: bool = False) -> float:
    """Minimum exact MRT received power over ``users`` (watts).

    ``per-trial`` re-runs the max-min allocation on the realized user
    channels; ``deployment-time`` reuses per-hotspot ``powers`` (split evenly
    between users of the same hotspot).
    """
    users = np.atleast_2d(users)
    if len(users) == 0:
        raise ValueError("no users to evaluate")
    owner = np.arange(len(users)) if owner is None else np.asarray(owner)
    H = channel_matrix(deployment, users, scenario.wavelength, scenario.boresight_gain,
                       scenario.ceiling_height)
    gains = np.sum(np.abs(H) ** 2, axis=1)
    k = scenario.densities[owner] if weighted else np.ones(len(users))
    if allocation == "per-trial":
        p, _ = maxmin_power_allocation(gains, k, scenario.power_budget)
    elif allocation == "deployment-time":
        if powers is None:
            raise ValueError("deployment-time allocation needs per-hotspot powers")
        counts = np.bincount(owner, minlength=len(scenario.hotspots))
        p = np.asarray(powers, dtype=float)[owner] / counts[owner]
    else:
        raise ValueError(f"unknown allocation policy {allocation!r}")
    rx = received_powers(H, mrt_precoders(H, p))
    return float(np.min(rx / k))


def monte_carlo(deployments: Mapping[str, Deployment], scenario: Scenario,
                spec: MonteCarloSpec, powers: Mapping[str, np.ndarray] | None = None
                ) -> list[EvalResult]:
    """Paired Monte Carlo: every deployment sees the same user drops per trial."""
    powers = dict(powers or {})
    if spec.allocation == "deployment-time":
        for label, dep in deployments.items():
            if label not in powers:
                powers[label] = deployment_objective(scenario, dep)[0]
    minima = {label: [] for label in deployments}
    failed = []
    for trial in range(spec.trials):
        users, owner = sample_users(scenario, spec, trial)
        row = {}
        try:
            for label, dep in deployments.items():
                row[label] = evaluate_deployment(dep, users, scenario, spec.allocation,
                                                 powers.get(label), owner, spec.weighted)
        except SingularityError as exc:
            logger.warning("trial %d dropped for all deployments: %s", trial, exc)
            failed.append(trial)
            continue
        for label, v in row.items():
            minima[label].append(v)
    return [EvalResult(label, dep.shape_tag, dep.n_elements, np.array(minima[label]),
                       spec.allocation, spec.base_seed, failed)
            for label, dep in deployments.items()]


def build_deployments(scenario: Scenario, n: int, kinds: Iterable[str] = DEPLOYMENT_KINDS,
                      settings: OptimizerSettings | None = None, kappa: float | None = None):
    """Optimized stripes plus benchmarks for one element count.

    Returns ``(deployments, powers, failures)``; a kind that cannot be built
    is reported in ``failures`` instead of raising.
    """
    kappa = scenario.kappa if kappa is None else kappa
    deps, powers, failures = {}, {}, {}
    for kind in kinds:
        try:
            if kind == "polygon":
                sol = optimize_polygon(scenario, n, kappa, settings)
                deps[kind], powers[kind] = sol.deployment, sol.powers
            elif kind == "line":
                sol = optimize_line(scenario, n, kappa, settings)
                deps[kind], powers[kind] = sol.deployment, sol.powers
            elif kind == "center_square":
                deps[kind] = place_center_square_stripe(scenario, n, kappa)
            elif kind == "center_fd":
                deps[kind] = place_center_fd_array(scenario, n)
            else:
                raise ValueError(f"unknown deployment kind {kind!r}")
        except (OptimizationError, InvalidShapeError) as exc:
            logger.warning("%s with N=%d failed: %s", kind, n, exc)
            failures[kind] = str(exc)
    return deps, powers, failures


def _sweep_rows(value, n, scenario, spec, kinds, settings, kappa):
    deps, powers, failures = build_deployments(scenario, n, kinds, settings, kappa)
    results = {r.label: r for r in monte_carlo(deps, scenario, spec, powers)} if deps else {}
    rows = []
    for kind in kinds:
        if kind in results:
            avg = results[kind].average
            trials = results[kind].trials
            status = "ok"
        else:
            avg, trials, status = float("nan"), 0, "failed"
        rows.append({
            "sweep_value": value,
            "N": n,
            "deployment": kind,
            "avg_min_power_w": avg,
            "avg_min_power_dbm": to_dbm(avg) if avg == avg else float("nan"),
            "trials": trials,
            "seed": spec.base_seed,
            "status": status,
            "error": failures.get(kind, ""),
        })
    return rows


def sweep_length(scenario: Scenario, lengths: Sequence[float], spec: MonteCarloSpec,
                 settings: OptimizerSettings | None = None,
                 kinds: Sequence[str] = DEPLOYMENT_KINDS) -> list[dict]:
    rows = []
    for length in lengths:
        if not length > 0:
            raise ValueError("stripe lengths must be > 0")
        n = elements_from_length(length, scenario.kappa)
        rows += _sweep_rows(length, n, scenario, spec, kinds, settings, scenario.kappa)
    return rows


def sweep_frequency(scenario: Scenario, freqs: Sequence[float], length: float,
                    spec: MonteCarloSpec, settings: OptimizerSettings | None = None,
                    kinds: Sequence[str] = DEPLOYMENT_KINDS) -> list[dict]:
    """Per frequency the spacing is half a wavelength and N follows from ``length``."""
    rows = []
    for f in freqs:
        if not f > 0:
            raise ValueError("frequencies must be > 0")
        sc = dataclasses.replace(scenario, frequency=float(f), inter_element_spacing=None)
        n = elements_from_length(length, sc.kappa)
        rows += _sweep_rows(f, n, sc, spec, kinds, settings, sc.kappa)
    return rows


def near_field_report(values: Sequence[float], mode: str = "length", *, frequency: float = 10e9,
                      length: float = 1.0, kinds: Sequence[str] = ("line", "square_fd"),
                      c_light: float = 299_792_458.0) -> list[dict]:
    """Fresnel/Fraunhofer distances for stripe lengths (fixed f) or frequencies (fixed L)."""
    if mode not in ("length", "frequency"):
        raise ValueError("mode must be 'length' or 'frequency'")
    rows = []
    for x in values:
        if not x > 0:
            raise ValueError("sweep values must be > 0")
        f, L = (frequency, x) if mode == "length" else (x, length)
        lam = wavelength(f, c_light)
        kappa = lam / 2
        n = elements_from_length(L, kappa)
        for kind in kinds:
            if kind == "line":
                n_el, diameter = n, (n - 1) * kappa
            elif kind == "square_fd":
                side = nearest_square(n)
                n_el, diameter = side * side, (side - 1) * kappa * math.sqrt(2)
            elif kind == "polygon":
                n_el = n
                diameter = aperture_diameter(np.column_stack(
                    [polygon_offsets(n, kappa), np.zeros(n)])) if n >= 2 else 0.0
            else:
                raise ValueError(f"unknown array kind {kind!r}")
            if diameter > 0:
                nb = near_field_bounds(diameter, lam)
                fres, frau = nb.fresnel, nb.fraunhofer
            else:
                fres = frau = 0.0
            rows.append({"x_value": x, "array_kind": kind, "N": n_el, "D_m": diameter,
                         "fresnel_m": fres, "fraunhofer_m": frau})
    return rows


@dataclass
class OracleResult:
    center: tuple[float, float]
    angle: float | None
    objective: float  # same units as the optimizer's epigraph value
    objective_watts: float
    evaluated: int


def grid_search_oracle(scenario: Scenario, n: int, kappa: float | None = None,
                       shape: str = "polygon", grid_step: float = 0.1,
                       n_angles: int | None = None, zeta: int = 10,
                       chunk: int = 512) -> OracleResult:
    """Exhaustive search of the shape center (and line angle) on a grid.

    Scores every in-room placement by the closed-form max-min objective
    ``P / sum_i k_i / gain_i``. Line angles are ``k*pi/n_angles`` with
    ``n_angles = 4*zeta`` by default.
    """
    if not grid_step > 0:
        raise ValueError("grid_step must be > 0")
    kappa = scenario.kappa if kappa is None else kappa
    if shape == "polygon":
        candidates = [(None, polygon_offsets(n, kappa))]
    elif shape == "line":
        n_angles = 4 * zeta if n_angles is None else n_angles
        candidates = [(k * math.pi / n_angles, line_offsets(n, kappa, k * math.pi / n_angles))
                      for k in range(1, n_angles + 1)]
    else:
        raise ValueError(f"oracle supports polygon and line, not {shape!r}")

    xs = np.arange(0.0, scenario.room_width + 1e-9, grid_step)
    ys = np.arange(0.0, scenario.room_depth + 1e-9, grid_step)
    cx, cy = np.meshgrid(xs, ys, indexing="ij")
    centers = np.column_stack([cx.ravel(), cy.ravel()])
    q = scenario.hotspot_positions
    e = scenario.ceiling_height - q[:, 2]
    b = scenario.boresight_gain
    k = scenario.densities
    best = (-math.inf, None, None)
    evaluated = 0
    for angle, off in candidates:
        lo = -off.min(axis=0)
        hi = np.array([scenario.room_width, scenario.room_depth]) - off.max(axis=0)
        ok = np.all((centers >= lo - 1e-9) & (centers <= hi + 1e-9), axis=1)
        feasible = centers[ok]
        evaluated += len(feasible)
        for s in range(0, len(feasible), chunk):
            c = feasible[s:s + chunk]
            el = c[:, None, :] + off[None, :, :]  # (C, N, 2)
            d2 = np.sum((el[:, :, None, :] - q[None, None, :, :2]) ** 2, axis=-1) + e**2
            gain = e**b * np.sum(d2 ** (-(b + 2) / 2), axis=1)  # (C, M)
            t = scenario.power_budget / np.sum(k / gain, axis=1)
            idx = int(np.argmax(t))
            if t[idx] > best[0]:
                best = (float(t[idx]), tuple(map(float, c[idx])), angle)
    if best[1] is None:
        raise ValueError("no feasible grid point: the shape does not fit in the room")
    t, center, angle = best
    return OracleResult(center, angle, t, t * gain_prefactor(b, scenario.wavelength), evaluated)
