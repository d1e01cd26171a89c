"""Scenario files, deployment JSON and CSV tables."""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml

from .scene import Deployment, Hotspot, Scenario, ScenarioError

SWEEP_COLUMNS = ("sweep_value", "N", "deployment", "avg_min_power_w", "avg_min_power_dbm",
                 "trials", "seed")
NEARFIELD_COLUMNS = ("x_value", "array_kind", "N", "D_m", "fresnel_m", "fraunhofer_m")
EVAL_COLUMNS = ("deployment", "shape_tag", "N", "avg_min_power_w", "avg_min_power_dbm",
                "trials", "seed", "allocation")
TRIAL_COLUMNS = ("trial", "deployment", "min_power_w")
TRACE_COLUMNS = ("angle_index", "angle", "iteration", "t", "center_x", "center_y", "status")
ORACLE_COLUMNS = ("shape", "N", "grid_step", "center_x", "center_y", "angle", "objective",
                  "objective_watts", "evaluated", "optimizer_objective_watts", "ratio")


class ConfigError(ValueError):
    pass


def default_scenario_path() -> Path:
    return Path(str(resources.files("radiostripe") / "data" / "default_scenario.yaml"))


def _line(node, path: Sequence) -> int | None:
    """1-based source line of the YAML node at ``path`` (keys / list indices)."""
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    break
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
    return node.start_mark.line + 1 if node is not None else None


def _fmt_path(path: Sequence) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def scenario_from_dict(data: dict, source: str = "<scenario>", root=None) -> Scenario:
    def fail(path, msg):
        line = _line(root, path) if root is not None else None
        where = f"{source}:{line}" if line else source
        raise ConfigError(f"{where}: {_fmt_path(path)}: {msg}")

    def number(path, lo=None, lo_strict=True, required=True, default=None):
        cur = data
        for p in path:
            if isinstance(cur, dict) and p in cur:
                cur = cur[p]
            elif isinstance(cur, list) and isinstance(p, int) and p < len(cur):
                cur = cur[p]
            else:
                if required:
                    fail(path, "missing field")
                return default
        if isinstance(cur, bool) or not isinstance(cur, (int, float)):
            fail(path, f"expected a number, got {cur!r}")
        val = float(cur)
        if not math.isfinite(val):
            fail(path, "must be finite")
        if lo is not None and (val <= lo if lo_strict else val < lo):
            fail(path, f"must be {'>' if lo_strict else '>='} {lo}, got {val}")
        return val

    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    if not isinstance(data.get("room"), dict):
        fail(("room",), "missing mapping with width, depth, height")
    width = number(("room", "width"), 0)
    depth = number(("room", "depth"), 0)
    height = number(("room", "height"), 0)
    freq = number(("frequency",), 0)
    b = number(("b",), 0, lo_strict=False, required=False, default=2.0)
    budget = number(("power_budget",), 0)
    c_light = number(("c_light",), 0, required=False, default=299_792_458.0)
    kappa_raw = data.get("kappa", "auto")
    if kappa_raw == "auto" or kappa_raw is None:
        kappa = None
    else:
        kappa = number(("kappa",), 0)
    hs_raw = data.get("hotspots")
    if not isinstance(hs_raw, list) or not hs_raw:
        fail(("hotspots",), "need a non-empty list of hotspots")
    hotspots = []
    for i, item in enumerate(hs_raw):
        if not isinstance(item, dict):
            fail(("hotspots", i), "hotspot must be a mapping with x, y, z")
        x = number(("hotspots", i, "x"))
        y = number(("hotspots", i, "y"))
        z = number(("hotspots", i, "z"), required=False, default=1.0)
        k = number(("hotspots", i, "k"), 0, required=False, default=1.0)
        radius = number(("hotspots", i, "radius"), 0, lo_strict=False, required=False,
                        default=0.5)
        if not (0 <= x <= width and 0 <= y <= depth):
            fail(("hotspots", i), f"hotspot ({x}, {y}) lies outside the {width} x {depth} room")
        if not 0 <= z < height:
            fail(("hotspots", i, "z"), f"must satisfy 0 <= z < ceiling height {height}")
        hotspots.append(Hotspot((x, y, z), k, radius))
    try:
        return Scenario(width, depth, height, tuple(hotspots), freq, b, budget, kappa, c_light)
    except ScenarioError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def parse_scenario(path: str | Path | None = None) -> Scenario:
    path = Path(path) if path is not None else default_scenario_path()
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed YAML: {exc}") from exc
    return scenario_from_dict(data, str(path), root)


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "room": {"width": sc.room_width, "depth": sc.room_depth, "height": sc.ceiling_height},
        "frequency": sc.frequency,
        "b": sc.boresight_gain,
        "power_budget": sc.power_budget,
        "kappa": "auto" if sc.inter_element_spacing is None else sc.inter_element_spacing,
        "c_light": sc.c_light,
        "hotspots": [{"x": h.position[0], "y": h.position[1], "z": h.position[2],
                      "k": h.density, "radius": h.user_radius} for h in sc.hotspots],
    }


def deployment_to_dict(dep: Deployment, kappa: float, powers=None,
                       objective_watts: float | None = None, **extra) -> dict:
    out = {
        "shape_tag": dep.shape_tag,
        "N": dep.n_elements,
        "kappa": float(kappa),
        "elements": [[float(v) for v in row] for row in dep.elements],
        "powers": None if powers is None else [float(p) for p in powers],
        "objective_watts": None if objective_watts is None else float(objective_watts),
    }
    out.update(extra)
    return out


def load_deployment(path: str | Path) -> tuple[Deployment, dict]:
    try:
        data = json.loads(Path(path).read_text())
        dep = Deployment(np.array(data["elements"], dtype=float), data["shape_tag"])
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: not a deployment file: {exc}") from exc
    if dep.n_elements != data.get("N", dep.n_elements):
        raise ConfigError(f"{path}: N={data['N']} but {dep.n_elements} elements listed")
    return dep, data


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=False, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return v


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
