"""Command-line entry point.

Every subcommand writes its artifacts into ``--out`` under a ``.partial``
suffix and renames them only when the whole run succeeded, plus a
``manifest.json`` that is sufficient to replay the run with ``replay``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import platform
import sys
from pathlib import Path
from typing import Sequence

import cvxopt
import matplotlib
import numpy as np
import scipy
import yaml

from . import __version__
from .channel import SingularityError
from .deploy_opt import (OptimizationError, OptimizerSettings, ShiftError, build_line_problem,
                         build_polygon_problem, optimize_line, optimize_polygon)
from .evaluate import (DEPLOYMENT_KINDS, MonteCarloSpec, grid_search_oracle, monte_carlo,
                       near_field_report, sweep_frequency, sweep_length, to_dbm)
from .formats import (EVAL_COLUMNS, NEARFIELD_COLUMNS, ORACLE_COLUMNS, SWEEP_COLUMNS,
                      TRACE_COLUMNS, TRIAL_COLUMNS, ConfigError, deployment_to_dict,
                      load_deployment, parse_scenario, scenario_from_dict, scenario_to_dict,
                      write_csv, write_json)
from .gp import GPDomainError, dump_gp
from .scene import InvalidShapeError, Scenario, elements_from_length

logger = logging.getLogger("radiostripe")

EXIT_OK, EXIT_CONFIG, EXIT_OPTIMIZER, EXIT_EVALUATION = 0, 2, 3, 4


class OptimizerFailure(RuntimeError):
    pass


class EvaluationFailure(RuntimeError):
    pass


class Artifacts:
    """Collects output files as ``name.partial`` and commits them by renaming."""

    def __init__(self, out: Path):
        self.out = out
        self.names: list[str] = []

    def path(self, name: str) -> Path:
        self.names.append(name)
        return self.out / f"{name}.partial"

    def commit(self) -> None:
        for name in self.names:
            (self.out / f"{name}.partial").replace(self.out / name)


def _floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _names(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario YAML (default: bundled 8x8 m room)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=_positive_int, default=100)
    common.add_argument("--omega", type=float, default=1.1, help="trust-region factor (> 1)")
    common.add_argument("--epsilon", type=float, default=1e-6, help="convergence tolerance")
    common.add_argument("--imax", type=_positive_int, default=100, help="max GP solves")
    common.add_argument("--zeta", type=_positive_int, default=10, help="line angle count")
    common.add_argument("--c-light", type=float, default=None, help="speed of light override")
    common.add_argument("--weighted-selection", action="store_true",
                        help="weight line-angle selection and user minima by density")
    common.add_argument("--alloc", choices=("per-trial", "deployment-time"),
                        default="per-trial")
    common.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="radiostripe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", parents=[common], help="optimize a polygon or line stripe")
    p.add_argument("--shape", choices=("polygon", "line"), required=True)
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--n", type=_positive_int)
    size.add_argument("--length", type=float)
    p.add_argument("--dump-gp", action="store_true",
                   help="also write the first condensed GP as text")

    p = sub.add_parser("evaluate", parents=[common], help="Monte Carlo evaluation")
    p.add_argument("deployments", nargs="+", help="deployment JSON files")

    p = sub.add_parser("sweep-length", parents=[common], help="sweep the stripe length")
    p.add_argument("--lengths", type=_floats, required=True)
    p.add_argument("--kinds", type=_names, default=list(DEPLOYMENT_KINDS))

    p = sub.add_parser("sweep-frequency", parents=[common], help="sweep the carrier frequency")
    p.add_argument("--freqs", type=_floats, required=True)
    p.add_argument("--length", type=float, default=1.5)
    p.add_argument("--kinds", type=_names, default=list(DEPLOYMENT_KINDS))

    p = sub.add_parser("nearfield", parents=[common], help="Fresnel / Fraunhofer distances")
    axis = p.add_mutually_exclusive_group(required=True)
    axis.add_argument("--lengths", type=_floats)
    axis.add_argument("--freqs", type=_floats)
    p.add_argument("--freq", type=float, default=10e9, help="frequency for --lengths")
    p.add_argument("--length", type=float, default=1.0, help="length for --freqs")
    p.add_argument("--kinds", type=_names, default=["line", "square_fd"])

    p = sub.add_parser("oracle", parents=[common], help="grid-search the shape center")
    p.add_argument("--shape", choices=("polygon", "line"), required=True)
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--n", type=_positive_int)
    size.add_argument("--length", type=float)
    p.add_argument("--grid-step", type=float, default=0.1)
    p.add_argument("--compare", action="store_true",
                   help="also run the optimizer and report its objective ratio")

    p = sub.add_parser("replay", help="re-run a recorded manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default="out")
    return parser


# Keys that never enter the manifest config: they do not affect results.
_VOLATILE = ("out", "verbose", "command", "manifest")


def _settings(args) -> OptimizerSettings:
    try:
        return OptimizerSettings(args.omega, args.epsilon, args.imax, args.zeta,
                                 weighted_selection=args.weighted_selection)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _mc_spec(args) -> MonteCarloSpec:
    return MonteCarloSpec(trials=args.trials, base_seed=args.seed, allocation=args.alloc,
                          weighted=args.weighted_selection)


def _element_count(args, scenario: Scenario) -> int:
    if args.n is not None:
        return args.n
    if not args.length > 0:
        raise ConfigError(f"--length must be > 0, got {args.length}")
    return elements_from_length(args.length, scenario.kappa)


def _check_kinds(kinds, allowed):
    bad = [k for k in kinds if k not in allowed]
    if bad:
        raise ConfigError(f"unknown kinds {bad}; choose from {list(allowed)}")


def _trace_rows(trace, angle_index=0, angle=None):
    for e in trace:
        cx, cy = e.get("center", (None, None))
        yield {"angle_index": angle_index, "angle": angle, "iteration": e["iteration"],
               "t": e["t"], "center_x": cx, "center_y": cy, "status": e["status"]}


def cmd_optimize(args, scenario: Scenario, art: Artifacts, report: dict) -> None:
    settings = _settings(args)
    n = _element_count(args, scenario)
    report["N"] = n
    kappa = scenario.kappa
    if args.dump_gp:
        if args.shape == "polygon":
            shape = build_polygon_problem(scenario, n, kappa)
        else:
            shape = build_line_problem(scenario, n, kappa, np.pi / args.zeta)
        gp = shape.problem.condense(shape.point(scenario, scenario.center), args.omega)
        art.path("gp.txt").write_text(dump_gp(gp))
    run = optimize_polygon if args.shape == "polygon" else optimize_line
    sol = run(scenario, n, kappa, settings)
    extra = {"center": list(sol.center), "angle": sol.angle, "status": sol.status,
             "iterations": len(sol.trace)}
    write_json(art.path("deployment.json"),
               deployment_to_dict(sol.deployment, kappa, sol.powers, sol.objective_watts,
                                  **extra))
    if args.shape == "line":
        rows = [r for run_ in sol.angle_runs
                for r in _trace_rows(run_.get("trace", []), run_["k"], run_["angle"])]
    else:
        rows = list(_trace_rows(sol.trace))
    write_csv(art.path("trace.csv"), TRACE_COLUMNS, rows)
    if not args.no_plots:
        from .plotting import plot_layout
        plot_layout(scenario, {args.shape: sol.deployment}, art.path("layout.png"))
    report.update(status=sol.status, objective_watts=sol.objective_watts)
    if sol.status not in ("optimal", "max-iter"):
        raise OptimizerFailure(f"successive GP ended with status {sol.status}")
    if not sol.inside_room:
        raise OptimizerFailure("optimized deployment leaves the room footprint")


def cmd_evaluate(args, scenario: Scenario, art: Artifacts, report: dict) -> None:
    deps, powers = {}, {}
    report["inputs"] = {}
    for i, path in enumerate(args.deployments):
        dep, data = load_deployment(path)
        report["inputs"][Path(path).name] = data
        label = f"{i}:{Path(path).stem}:{dep.shape_tag}"
        deps[label] = dep
        if data.get("powers") is not None:
            if len(data["powers"]) != len(scenario.hotspots):
                raise ConfigError(f"{path}: {len(data['powers'])} powers for "
                                  f"{len(scenario.hotspots)} hotspots")
            powers[label] = np.array(data["powers"])
    results = monte_carlo(deps, scenario, _mc_spec(args), powers)
    rows, trials = [], []
    for r in results:
        rows.append({"deployment": r.label, "shape_tag": r.shape_tag, "N": r.n_elements,
                     "avg_min_power_w": r.average, "avg_min_power_dbm": to_dbm(r.average),
                     "trials": r.trials, "seed": r.seed, "allocation": r.allocation})
    kept = [t for t in range(args.trials) if t not in set(results[0].failed_trials)]
    for r in results:
        trials += [{"trial": t, "deployment": r.label, "min_power_w": v}
                   for t, v in zip(kept, r.minima)]
    write_csv(art.path("eval.csv"), EVAL_COLUMNS, rows)
    write_csv(art.path("trials.csv"), TRIAL_COLUMNS, trials)
    if not args.no_plots:
        from .plotting import plot_layout
        plot_layout(scenario, deps, art.path("layout.png"))
    report["failed_trials"] = results[0].failed_trials
    if results[0].trials == 0:
        raise EvaluationFailure("every Monte Carlo trial failed")


def _sweep_finish(rows, art, name, xlabel, xscale, args, report):
    write_csv(art.path(f"{name}.csv"), SWEEP_COLUMNS, rows)
    if not args.no_plots:
        from .plotting import plot_sweep
        plot_sweep([r for r in rows if r["status"] == "ok"], art.path(f"{name}.png"),
                   xlabel, xscale)
    failed = [{k: r[k] for k in ("sweep_value", "deployment", "error")}
              for r in rows if r["status"] != "ok"]
    report["failures"] = failed
    if failed:
        raise OptimizerFailure(f"{len(failed)} sweep points failed to build")


def cmd_sweep_length(args, scenario, art, report):
    _check_kinds(args.kinds, DEPLOYMENT_KINDS)
    if any(v <= 0 for v in args.lengths):
        raise ConfigError("--lengths must all be > 0")
    rows = sweep_length(scenario, args.lengths, _mc_spec(args), _settings(args), args.kinds)
    _sweep_finish(rows, art, "sweep_length", "stripe length [m]", 1.0, args, report)


def cmd_sweep_frequency(args, scenario, art, report):
    _check_kinds(args.kinds, DEPLOYMENT_KINDS)
    if any(v <= 0 for v in args.freqs) or not args.length > 0:
        raise ConfigError("--freqs and --length must be > 0")
    rows = sweep_frequency(scenario, args.freqs, args.length, _mc_spec(args), _settings(args),
                           args.kinds)
    _sweep_finish(rows, art, "sweep_frequency", "frequency [GHz]", 1e9, args, report)


def cmd_nearfield(args, scenario, art, report):
    _check_kinds(args.kinds, ("line", "square_fd", "polygon"))
    mode = "length" if args.lengths is not None else "frequency"
    values = args.lengths if mode == "length" else args.freqs
    try:
        rows = near_field_report(values, mode, frequency=args.freq, length=args.length,
                                 kinds=args.kinds, c_light=scenario.c_light)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_csv(art.path("nearfield.csv"), NEARFIELD_COLUMNS, rows)
    if not args.no_plots:
        from .plotting import plot_nearfield
        if mode == "length":
            plot_nearfield(rows, art.path("nearfield.png"), "stripe length [m]")
        else:
            plot_nearfield(rows, art.path("nearfield.png"), "frequency [GHz]", 1e9)


def cmd_oracle(args, scenario, art, report):
    n = _element_count(args, scenario)
    if not args.grid_step > 0:
        raise ConfigError("--grid-step must be > 0")
    try:
        res = grid_search_oracle(scenario, n, shape=args.shape, grid_step=args.grid_step,
                                 zeta=args.zeta)
    except ValueError as exc:
        raise OptimizerFailure(str(exc)) from exc
    row = {"shape": args.shape, "N": n, "grid_step": args.grid_step,
           "center_x": res.center[0], "center_y": res.center[1], "angle": res.angle,
           "objective": res.objective, "objective_watts": res.objective_watts,
           "evaluated": res.evaluated}
    if args.compare:
        run = optimize_polygon if args.shape == "polygon" else optimize_line
        sol = run(scenario, n, None, _settings(args))
        row["optimizer_objective_watts"] = sol.objective_watts
        row["ratio"] = sol.objective_watts / res.objective_watts
    write_csv(art.path("oracle.csv"), ORACLE_COLUMNS, [row])


COMMANDS = {
    "optimize": cmd_optimize,
    "evaluate": cmd_evaluate,
    "sweep-length": cmd_sweep_length,
    "sweep-frequency": cmd_sweep_frequency,
    "nearfield": cmd_nearfield,
    "oracle": cmd_oracle,
}


def _versions() -> dict:
    return {"radiostripe": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "cvxopt": cvxopt.__version__, "matplotlib": matplotlib.__version__,
            "pyyaml": yaml.__version__}


def _load_scenario(args) -> Scenario:
    scenario = parse_scenario(args.scenario)
    if args.c_light is not None:
        if not args.c_light > 0:
            raise ConfigError(f"--c-light must be > 0, got {args.c_light}")
        scenario = dataclasses.replace(scenario, c_light=args.c_light)
    return scenario


def execute(command: str, args: argparse.Namespace, scenario: Scenario) -> int:
    """Run one subcommand against an already-loaded scenario."""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    art = Artifacts(out)
    config = {k: v for k, v in sorted(vars(args).items()) if k not in _VOLATILE}
    report: dict = {}
    code, error = EXIT_OK, None
    try:
        COMMANDS[command](args, scenario, art, report)
    except (ConfigError, GPDomainError, InvalidShapeError) as exc:
        code, error = EXIT_CONFIG, exc
    except (OptimizerFailure, OptimizationError, ShiftError) as exc:
        code, error = EXIT_OPTIMIZER, exc
    except (EvaluationFailure, SingularityError) as exc:
        code, error = EXIT_EVALUATION, exc
    manifest = {
        "command": command,
        "config": config,
        "scenario": scenario_to_dict(scenario),
        "seed": args.seed,
        "versions": _versions(),
        "outputs": list(art.names),
        "status": "ok" if code == EXIT_OK else "failed",
        "error": None if error is None else f"{type(error).__name__}: {error}",
        "report": report,
    }
    write_json(art.path("manifest.json"), manifest)
    if code == EXIT_OK:
        art.commit()
    else:
        print(f"radiostripe {command}: {manifest['error']}", file=sys.stderr)
    return code


def replay(manifest_path: str, out: str) -> int:
    try:
        manifest = json.loads(Path(manifest_path).read_text())
        command = manifest["command"]
        config = dict(manifest["config"])
        scenario = scenario_from_dict(manifest["scenario"], f"{manifest_path}:scenario")
    except (OSError, ValueError, KeyError) as exc:
        print(f"radiostripe replay: cannot read manifest: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if command not in COMMANDS:
        print(f"radiostripe replay: unknown command {command!r}", file=sys.stderr)
        return EXIT_CONFIG
    if command == "evaluate":
        # Inputs are embedded in the manifest; restore them under the same names.
        inputs = manifest.get("report", {}).get("inputs", {})
        paths = []
        for i, name in enumerate(Path(p).name for p in config["deployments"]):
            if name not in inputs:
                print(f"radiostripe replay: manifest lacks input {name}", file=sys.stderr)
                return EXIT_CONFIG
            target = Path(out) / "inputs" / str(i) / name
            target.parent.mkdir(parents=True, exist_ok=True)
            write_json(target, inputs[name])
            paths.append(str(target))
        config["deployments"] = paths
    args = argparse.Namespace(**config, out=out, verbose=False)
    return execute(command, args, scenario)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else
                        logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "replay":
        return replay(args.manifest, args.out)
    try:
        scenario = _load_scenario(args)
    except ConfigError as exc:
        print(f"radiostripe: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return execute(args.command, args, scenario)


if __name__ == "__main__":
    sys.exit(main())
