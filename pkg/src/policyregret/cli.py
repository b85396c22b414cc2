"""Command-line entry points and stable output schemas.

Commands: ``run``, ``sweep``, ``probe-lower-bound``, ``validate-sampler``,
``validate-bounds``, ``fit-rate``.  Every command accepts ``--config FILE``
(a JSON document; an emitted ``manifest.json`` works directly) with flags
overriding individual fields.  All randomness flows from the single ``seed``
field; nothing reads the clock or OS entropy.

Outputs: ``results.csv`` with columns
``T,rep,seed,policy_regret,standard_regret,switches,pseudo_regret`` (missing
metrics left empty, floats with 17 significant digits, '.' decimal, LF line
endings), a ``summary.json`` for sweeps, and a ``manifest.json`` holding the
fully resolved config so any run can be reproduced byte for byte.

Exit codes: 0 success, 1 validation/configuration error, 2 contract
violation during play.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from . import adversaries as adversaries_mod
from .game import ConfigurationError, ContractViolation
from .harness import (ADVERSARY_DEFAULTS, METRICS, PLAYER_DEFAULTS,
                      ExperimentSpec, adversary_action_count, adversary_memory,
                      build_adversary, fit_rate, lower_bound_probe,
                      normalize_spec, run_single, run_sweep, select_fit_points)
from .reductions import exploration_geometry, sampler_uniformity_report

ARTIFACT_VERSION = "0.1.0"

CSV_COLUMNS = ("T", "rep", "seed", "policy_regret", "standard_regret",
               "switches", "pseudo_regret")

_COMMON_DEFAULTS = {"seed": 0, "output_dir": None}

# Per-command schema: key -> default (None marks "required unless noted").
COMMAND_SCHEMAS = {
    "run": {"adversary": None, "player": None, "T": None, "feedback": None,
            "metrics": None, **_COMMON_DEFAULTS},
    "sweep": {"adversary": None, "player": None, "horizon_grid": None,
              "repetitions": 1, "feedback": None, "metrics": None,
              "fit_metric": None, "full_grid_fit": False, **_COMMON_DEFAULTS},
    "probe-lower-bound": {"players": None, "horizon_grid": None,
                          "repetitions": 1, **_COMMON_DEFAULTS},
    "validate-sampler": {"epoch_length": None, "k": None, "m": None,
                         "draws": 100_000, **_COMMON_DEFAULTS},
    "validate-bounds": {"adversary": None, "T": None, "sample_budget": 100_000,
                        **_COMMON_DEFAULTS},
    "fit-rate": {"csv": None, "metric": "policy_regret", "full_grid_fit": False,
                 **_COMMON_DEFAULTS},
}

_REQUIRED = {
    "run": ("adversary", "player", "T"),
    "sweep": ("adversary", "player", "horizon_grid"),
    "probe-lower-bound": ("players", "horizon_grid"),
    "validate-sampler": ("epoch_length", "k", "m"),
    "validate-bounds": ("adversary", "T"),
    "fit-rate": ("csv",),
}


@dataclasses.dataclass
class RunConfig:
    command: str
    options: dict

    def to_dict(self):
        return {"command": self.command, **self.options}


def _require_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigurationError(f"{name} >= {minimum} required, got {value}")
    return value


def _validate_feasibility(options):
    """Cross-field checks that would otherwise only fail mid-run."""
    player = options.get("player")
    adversary = options.get("adversary")
    horizons = []
    if options.get("T") is not None:
        horizons = [options["T"]]
    elif options.get("horizon_grid"):
        horizons = options["horizon_grid"]
    if not (player and adversary and horizons):
        return
    k = adversary_action_count(adversary)
    if player["kind"] == "minibatch-hedge":
        m = player["m"] if player["m"] is not None else adversary_memory(adversary)
        for T in horizons:
            J = player["epochs"]
            if J is None:
                J = int(math.ceil(T ** (2.0 / 3.0) - 1e-9))
            L = T // J
            if L < 2 * k * (m + 1):
                raise ConfigurationError(
                    f"epoch length {L} < 2K(m+1) = {2 * k * (m + 1)} at T={T}")
            exploration_geometry(L, k, m)
    if player["kind"] == "elimination":
        for T in horizons:
            if T < k:
                raise ConfigurationError(f"elimination needs T >= K, got T={T}, K={k}")


def parse_config_dict(doc):
    """Validate a config document (already decoded) into a RunConfig."""
    if not isinstance(doc, dict):
        raise ConfigurationError("config document must be a JSON object")
    if "command" not in doc and "config" in doc:
        doc = doc["config"]  # accept an emitted manifest directly
        if not isinstance(doc, dict):
            raise ConfigurationError("manifest 'config' entry must be an object")
    command = doc.get("command")
    if command not in COMMAND_SCHEMAS:
        raise ConfigurationError(
            f"unknown command {command!r}; expected one of {sorted(COMMAND_SCHEMAS)}")
    schema = COMMAND_SCHEMAS[command]
    options = dict(schema)
    for key, value in doc.items():
        if key == "command":
            continue
        if key not in schema:
            raise ConfigurationError(f"unknown key: {key}")
        options[key] = value
    for key in _REQUIRED[command]:
        if options[key] is None:
            raise ConfigurationError(f"missing required key: {key}")

    if "adversary" in options and options["adversary"] is not None:
        options["adversary"] = normalize_spec(options["adversary"],
                                              ADVERSARY_DEFAULTS, "adversary")
    if "player" in options and options["player"] is not None:
        options["player"] = normalize_spec(options["player"], PLAYER_DEFAULTS, "player")
    if "players" in options and options["players"] is not None:
        if not isinstance(options["players"], list) or not options["players"]:
            raise ConfigurationError("players must be a non-empty list")
        options["players"] = [normalize_spec(p, PLAYER_DEFAULTS, "players")
                              for p in options["players"]]
    if options.get("T") is not None:
        options["T"] = _require_int(options["T"], "T", minimum=1)
    if options.get("horizon_grid") is not None:
        grid = options["horizon_grid"]
        if not isinstance(grid, list) or not grid:
            raise ConfigurationError("horizon_grid must be a non-empty list")
        grid = [_require_int(T, "horizon_grid entry", minimum=1) for T in grid]
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("horizon_grid must be strictly increasing")
        options["horizon_grid"] = grid
    if "repetitions" in options:
        options["repetitions"] = _require_int(options["repetitions"],
                                              "repetitions", minimum=1)
    options["seed"] = _require_int(options["seed"], "seed")
    if options.get("metrics") is not None:
        for metric in options["metrics"]:
            if metric not in METRICS:
                raise ConfigurationError(f"unknown metric {metric!r}")
        options["metrics"] = list(options["metrics"])
    if command == "validate-sampler":
        options["epoch_length"] = _require_int(options["epoch_length"],
                                               "epoch_length", minimum=1)
        options["k"] = _require_int(options["k"], "k", minimum=1)
        options["m"] = _require_int(options["m"], "m", minimum=0)
        options["draws"] = _require_int(options["draws"], "draws", minimum=1)
        exploration_geometry(options["epoch_length"], options["k"], options["m"])
    _validate_feasibility(options)
    return RunConfig(command=command, options=options)


def parse_config(text):
    """Parse and validate a JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from None
    return parse_config_dict(doc)


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------

def _fmt_cell(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_records_csv(records, path):
    lines = [",".join(CSV_COLUMNS)]
    for rec in records:
        lines.append(",".join(_fmt_cell(rec.get(col)) for col in CSV_COLUMNS))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_records_csv(path):
    with open(path, newline="") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    if tuple(header) != CSV_COLUMNS:
        raise ConfigurationError(f"unexpected CSV header in {path}: {header}")
    records = []
    for line in lines[1:]:
        cells = line.split(",")
        rec = {}
        for col, cell in zip(CSV_COLUMNS, cells):
            if cell == "":
                continue
            rec[col] = int(cell) if col in ("T", "rep", "seed", "switches") else float(cell)
        records.append(rec)
    return records


def _write_json(payload, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit_results(records, config, output_dir, summary=None):
    """Write results.csv, manifest.json, and (if given) summary.json."""
    os.makedirs(output_dir, exist_ok=True)
    write_records_csv(records, os.path.join(output_dir, "results.csv"))
    _write_json({"artifact_version": ARTIFACT_VERSION, "config": config.to_dict()},
                os.path.join(output_dir, "manifest.json"))
    if summary is not None:
        _write_json(summary, os.path.join(output_dir, "summary.json"))


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------

def _default_metrics(options):
    metrics = options.get("metrics")
    if metrics:
        return tuple(metrics)
    metrics = ["policy_regret", "standard_regret", "switches"]
    if options["adversary"]["kind"] in ("iid", "iid-uniform"):
        metrics.append("pseudo_regret")
    return tuple(metrics)


def _cmd_run(config):
    opts = config.options
    record = run_single(opts["adversary"], opts["player"], opts["T"], 0,
                        opts["seed"], _default_metrics(opts), opts.get("feedback"))
    out = opts.get("output_dir")
    if out:
        emit_results([record], config, out)
    return record


def _cmd_sweep(config):
    opts = config.options
    spec = ExperimentSpec(adversary=opts["adversary"], player=opts["player"],
                          horizon_grid=opts["horizon_grid"],
                          repetitions=opts["repetitions"],
                          master_seed=opts["seed"], feedback=opts.get("feedback"),
                          metrics=_default_metrics(opts))
    result = run_sweep(spec, fit_metric=opts.get("fit_metric"),
                       use_top_half=not opts.get("full_grid_fit", False))
    summary = result.summary_dict()
    out = opts.get("output_dir")
    if out:
        emit_results(result.records, config, out, summary=summary)
    return summary


def _cmd_probe(config):
    opts = config.options
    table = lower_bound_probe(opts["players"], opts["horizon_grid"],
                              opts["repetitions"], opts["seed"])
    payload = {"adversary": "random-walk (switching cost, epsilon = T^(-1/3))",
               "normalizer": "T^(2/3)", "repetitions": opts["repetitions"],
               "per_player": table}
    out = opts.get("output_dir")
    if out:
        os.makedirs(out, exist_ok=True)
        _write_json({"artifact_version": ARTIFACT_VERSION,
                     "config": config.to_dict()}, os.path.join(out, "manifest.json"))
        _write_json(payload, os.path.join(out, "probe.json"))
    return payload


def _cmd_validate_sampler(config):
    opts = config.options
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(opts["seed"])))
    report = sampler_uniformity_report(opts["epoch_length"], opts["k"], opts["m"],
                                       draws=opts["draws"], rng=rng)
    out = opts.get("output_dir")
    if out:
        os.makedirs(out, exist_ok=True)
        _write_json(report, os.path.join(out, "sampler_report.json"))
    return report


def _cmd_validate_bounds(config):
    opts = config.options
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(opts["seed"], spawn_key=(opts["T"], 0, 0))))
    realization = build_adversary(opts["adversary"], opts["T"], rng)
    check_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(opts["seed"], spawn_key=(opts["T"], 0, 2))))
    report = adversaries_mod.validate_bounds(realization,
                                             sample_budget=opts["sample_budget"],
                                             rng=check_rng)
    payload = {"kind": realization.kind, "range_bound": realization.range_bound,
               "max_drift_bound": realization.max_drift(),
               "range_ok": report.range_ok, "drift_ok": report.drift_ok,
               "worst_gap": report.worst_gap, "worst_drift": report.worst_drift,
               "checked_exhaustively": report.checked_exhaustively}
    out = opts.get("output_dir")
    if out:
        os.makedirs(out, exist_ok=True)
        _write_json(payload, os.path.join(out, "bounds_report.json"))
    return payload


def _cmd_fit_rate(config):
    opts = config.options
    records = read_records_csv(opts["csv"])
    metric = opts["metric"]
    horizons = sorted({rec["T"] for rec in records})
    points = []
    for T in horizons:
        vals = [rec[metric] for rec in records if rec["T"] == T and metric in rec]
        if vals:
            points.append((T, float(np.mean(vals))))
    fit = fit_rate(select_fit_points(points, not opts.get("full_grid_fit", False)))
    payload = {"metric": metric, "alpha": fit.alpha, "beta": fit.beta,
               "alpha_ci": list(fit.ci),
               "points": [{"T": T, "mean": m} for T, m in points]}
    out = opts.get("output_dir")
    if out:
        os.makedirs(out, exist_ok=True)
        _write_json(payload, os.path.join(out, "fit.json"))
    return payload


_DISPATCH = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "probe-lower-bound": _cmd_probe,
    "validate-sampler": _cmd_validate_sampler,
    "validate-bounds": _cmd_validate_bounds,
    "fit-rate": _cmd_fit_rate,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _spec_arg(value):
    """A tagged spec flag: either a bare kind string or inline JSON."""
    value = value.strip()
    if value.startswith("{") or value.startswith("["):
        return json.loads(value)
    return value


def _int_list(value):
    return [int(v) for v in value.split(",") if v.strip()]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="policyregret",
        description="Simulate adaptive-adversary prediction games and measure policy regret.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file (a manifest.json also works)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", dest="output_dir", default=None)

    p = sub.add_parser("run", help="play a single game and report its metrics")
    add_common(p)
    p.add_argument("--adversary", type=_spec_arg, default=None)
    p.add_argument("--player", type=_spec_arg, default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--feedback", choices=["full", "bandit"], default=None)
    p.add_argument("--metrics", type=lambda s: s.split(","), default=None)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over a horizon grid")
    add_common(p)
    p.add_argument("--adversary", type=_spec_arg, default=None)
    p.add_argument("--player", type=_spec_arg, default=None)
    p.add_argument("--grid", dest="horizon_grid", type=_int_list, default=None)
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--feedback", choices=["full", "bandit"], default=None)
    p.add_argument("--metrics", type=lambda s: s.split(","), default=None)
    p.add_argument("--fit-metric", dest="fit_metric", default=None)
    p.add_argument("--full-grid-fit", dest="full_grid_fit", action="store_true",
                   default=None)

    p = sub.add_parser("probe-lower-bound",
                       help="normalized regret of bandit players vs the paired walk")
    add_common(p)
    p.add_argument("--players", type=_spec_arg, default=None,
                   help="JSON list of player specs or comma-separated kinds")
    p.add_argument("--grid", dest="horizon_grid", type=_int_list, default=None)
    p.add_argument("--T", type=int, default=None,
                   help="shorthand for a single-horizon grid")
    p.add_argument("--repetitions", type=int, default=None)

    p = sub.add_parser("validate-sampler",
                       help="check exploration-start marginals for uniformity")
    add_common(p)
    p.add_argument("--epoch-length", dest="epoch_length", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--draws", type=int, default=None)

    p = sub.add_parser("validate-bounds",
                       help="check a realization against its declared range/drift")
    add_common(p)
    p.add_argument("--adversary", type=_spec_arg, default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--sample-budget", dest="sample_budget", type=int, default=None)

    p = sub.add_parser("fit-rate", help="fit a scaling exponent to an emitted CSV")
    add_common(p)
    p.add_argument("--csv", default=None)
    p.add_argument("--metric", default=None)
    p.add_argument("--full-grid-fit", dest="full_grid_fit", action="store_true",
                   default=None)

    return parser


def _assemble_doc(args):
    doc = {}
    if args.config:
        with open(args.config) as fh:
            try:
                loaded = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"config is not valid JSON: {exc}") from None
        if "command" not in loaded and "config" in loaded:
            loaded = loaded["config"]
        doc.update(loaded)
    doc["command"] = args.command
    skip = {"command", "config"}
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        doc[key] = value
    if args.command == "probe-lower-bound":
        if isinstance(doc.get("players"), str):
            doc["players"] = [p.strip() for p in doc["players"].split(",")]
        if doc.get("T") is not None and "horizon_grid" not in doc:
            doc["horizon_grid"] = [doc.pop("T")]
        doc.pop("T", None)
    if "seed" not in doc:
        doc["seed"] = 0
    return doc


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = parse_config_dict(_assemble_doc(args))
        payload = _DISPATCH[config.command](config)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 2
    json.dump(payload, sys.stdout, indent=2, sort_keys=True, default=float)
    print()
    return 0


def console_main():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
