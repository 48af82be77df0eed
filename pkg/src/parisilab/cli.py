"""Config-driven command line: ``parisilab <command> config.json``.

Every run writes ``resolved_config.json`` (with the tool version) next to
its JSON and CSV results and prints one ``name STATUS margin`` line per
check. Exit status: 0 when every check passes, 1 when one fails, 2 when the
input is invalid.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .control_lab import (BatchParams, ControlSpec, evaluate_controls, random_controls,
                          write_reports_csv)
from .errors import ParisiLabError
from .finite_n_oracle import annealed_value, exact_free_energy
from .functional import free_energy, solution
from .measure import AtomicMeasure
from .mixture import MixtureSpec
from .optimizer import convexity_scan, minimize, uniqueness_check
from .pde import GridParams

log = logging.getLogger("parisilab")

THREADS_ENV = "PARISILAB_THREADS"
COMMANDS = ("evaluate", "minimize", "convexity-scan", "verify-representation", "verify-bounds", "oracle")

_num = {"type": "number"}
_pair = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_measure = {"type": "array", "items": _pair, "minItems": 1}

SCHEMA = {
    "type": "object",
    "required": ["model"],
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "required": ["betas"],
            "additionalProperties": False,
            "properties": {
                "betas": {"type": "array", "minItems": 1,
                          "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                    "prefixItems": [{"type": "integer"}, _num]}},
                "h": _num,
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dx": _num, "x_max": {"type": ["number", "null"]}, "quad_density": _num},
        },
        "measures": {"type": "array", "items": _measure},
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"K": {"type": "integer"}, "restarts": {"type": "integer"},
                           "seed": {"type": "integer"}},
        },
        "convexity": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"lambdas": {"type": "array", "items": _num}, "s": _num,
                           "x0": {"type": ["number", "null"]}, "x1": {"type": ["number", "null"]}},
        },
        "control_lab": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "s": _num, "t": _num, "x": {"type": ["number", "null"]},
                "controls": {"type": "array", "items": {
                    "type": "object", "required": ["kind"], "additionalProperties": False,
                    "properties": {"kind": {"enum": ["optimal", "constant", "markov"]}, "value": _num,
                                   "times": {"type": "array", "items": _num},
                                   "states": {"type": "array", "items": _num},
                                   "table": {"type": "array", "items": {"type": "array", "items": _num}},
                                   "label": {"type": "string"}}}},
                "random_controls": {"type": "integer", "minimum": 0},
                "n_paths": {"type": "integer"}, "dr": _num, "seed": {"type": "integer"},
                "richardson": {"type": "boolean"},
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"N": {"type": "integer"}, "seeds": {"type": "array", "items": {"type": "integer"}}},
        },
        "output": {"type": "string"},
    },
}

DEFAULTS = {
    "model": {"h": 0.0},
    "grid": {"dx": 0.005, "x_max": None, "quad_density": 1.0},
    "measures": [[[0.0, 1.0]]],
    "optimizer": {"K": 2, "restarts": 4, "seed": 0},
    "convexity": {"lambdas": [0.25, 0.5, 0.75], "s": 0.0, "x0": None, "x1": None},
    "control_lab": {"s": 0.0, "t": 1.0, "x": None,
                    "controls": [{"kind": "optimal"}, {"kind": "constant", "value": 0.0}],
                    "random_controls": 0, "n_paths": 100_000, "dr": 1e-3, "seed": 0, "richardson": True},
    "oracle": {"N": 10, "seeds": list(range(8))},
    "output": "parisilab_out",
}


class ConfigError(ParisiLabError, ValueError):
    """Malformed configuration or override."""


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def apply_override(cfg: dict, assignment: str) -> None:
    """Set a dotted key from ``key.path=value``; the value is parsed as JSON
    when possible and kept as a string otherwise."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {key!r} descends into a non-table value")
    node[parts[-1]] = value


def resolve_config(raw: dict, overrides=(), out: str | None = None) -> dict:
    """Defaults, then the file, then ``--set`` overrides; schema-checked."""
    cfg = _merge(DEFAULTS, raw)
    for a in overrides:
        apply_override(cfg, a)
    if out is not None:
        cfg["output"] = out
    try:
        jsonschema.Draft202012Validator(SCHEMA).validate(cfg)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    return cfg


class Experiment:
    """Domain objects built from a resolved config (validates everything)."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        m = cfg["model"]
        self.mixture = MixtureSpec.from_pairs(m["betas"], m.get("h", 0.0))
        g = cfg["grid"]
        self.grid = GridParams(g["dx"], g["x_max"], g["quad_density"])
        self.grid.resolve_x_max(self.mixture)
        self.measures = [AtomicMeasure.from_pairs(pairs) for pairs in cfg["measures"]]

    def controls(self) -> list[ControlSpec]:
        lab = self.cfg["control_lab"]
        out = []
        for c in lab["controls"]:
            if c["kind"] == "optimal":
                out.append(ControlSpec.optimal())
            elif c["kind"] == "constant":
                out.append(ControlSpec.constant(c.get("value", 0.0)))
            else:
                out.append(ControlSpec.from_table(c.get("times", []), c.get("states", []),
                                                  c.get("table", []), c.get("label", "markov")))
        if lab["random_controls"]:
            rng = np.random.default_rng(lab["seed"])
            out += random_controls(lab["random_controls"], rng, lab["s"], lab["t"])
        return out


class Summary:
    def __init__(self):
        self.lines: list[tuple[str, str, float]] = []

    def add(self, name: str, status: str | bool, margin: float) -> None:
        if isinstance(status, bool):
            status = "PASS" if status else "FAIL"
        self.lines.append((name, status, float(margin)))
        print(f"{name} {status} {margin:.6g}")

    @property
    def failed(self) -> bool:
        return any(s == "FAIL" for _, s, _ in self.lines)


def _fmt(v) -> str:
    return f"{v:.17g}" if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(v) for v in row])


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, default=float) + "\n")


# --- commands -------------------------------------------------------------------


def cmd_evaluate(exp: Experiment, out: Path, summary: Summary, threads: int) -> dict:
    rows, reports = [], []
    for i, mu in enumerate(exp.measures):
        rep = free_energy(exp.mixture, mu, exp.grid)
        reports.append({"measure": mu.pairs(), **rep.to_dict(), "error_budget": rep.error_budget})
        rows.append([i, rep.parisi_value, rep.linear_term, rep.free_energy, rep.grid_error_estimate])
    _write_csv(out / "evaluate.csv",
               ["index", "parisi_value", "linear_term", "free_energy", "grid_error_estimate"], rows)
    return {"reports": reports}


def cmd_minimize(exp: Experiment, out: Path, summary: Summary, threads: int) -> dict:
    opt = exp.cfg["optimizer"]
    res = minimize(exp.mixture, opt["K"], opt["restarts"], opt["seed"], workers=threads)
    table = res.restart_table()
    _write_csv(out / "restarts.csv", ["restart_id", "value", "d_to_best"], table)
    uniq = uniqueness_check(res.restarts)
    if uniq.status == "SKIPPED":
        log.warning("uniqueness check skipped: fewer than 2 near-optimal restarts")
    summary.add("uniqueness", uniq.status, uniq.d_tol - uniq.max_pairwise_d)
    summary.add("search_converged", "PASS" if res.status == "converged" else "WARN", 0.0)
    return {"minimizer": res.measure.pairs(), "report": res.report.to_dict(), "status": res.status,
            "error_budget": res.error_budget,
            "uniqueness": {"status": uniq.status, "max_pairwise_d": uniq.max_pairwise_d,
                           "compared": uniq.n_compared, "excluded": uniq.excluded}}


def cmd_convexity(exp: Experiment, out: Path, summary: Summary, threads: int) -> dict:
    if len(exp.measures) < 2:
        raise ConfigError("convexity-scan needs two measures")
    c = exp.cfg["convexity"]
    rep = convexity_scan(exp.mixture, exp.measures[0], exp.measures[1], c["lambdas"], c["s"],
                         c["x0"], c["x1"], exp.grid)
    _write_csv(out / "convexity.csv", ["lambda", "value", "gap"],
               zip(rep.lambdas, rep.values, rep.gaps))
    summary.add("convexity", rep.convex, min(rep.gaps) + rep.error_budget)
    if rep.d >= 0.05 and rep.s < rep.tau:
        summary.add("strict_convexity", rep.strict, min(rep.gaps) - 3 * rep.error_budget)
    return {"lambdas": rep.lambdas, "values": rep.values, "gaps": rep.gaps, "tau": rep.tau,
            "d": rep.d, "error_budget": rep.error_budget, "endpoint_values": list(rep.endpoint_values)}


def cmd_representation(exp: Experiment, out: Path, summary: Summary, threads: int) -> dict:
    lab = exp.cfg["control_lab"]
    mu = exp.measures[0]
    sol = solution(exp.mixture, mu, exp.grid)
    x = exp.mixture.h if lab["x"] is None else lab["x"]
    batch = BatchParams(lab["n_paths"], lab["dr"], lab["seed"], lab["richardson"])
    controls = exp.controls()
    reports = evaluate_controls(sol, controls, lab["s"], lab["t"], x, batch)
    opt_allow = max((r.allowance for r, c in zip(reports, controls) if c.kind == "optimal"), default=0.0)
    write_reports_csv(out / "representation.csv", reports)
    for r, c in zip(reports, controls):
        if c.kind == "optimal":
            summary.add(f"representation[{r.label}]", r.equality_holds(),
                        3 * r.se + r.allowance - abs(r.gap))
        else:
            slack = 3 * r.se + max(r.allowance, opt_allow)
            summary.add(f"dominance[{r.label}]", r.gap <= slack, slack - r.gap)
    return {"reports": [r.__dict__ for r in reports]}


def cmd_bounds(exp: Experiment, out: Path, summary: Summary, threads: int) -> dict:
    results = []
    for i, mu in enumerate(exp.measures):
        sol = solution(exp.mixture, mu, exp.grid)
        reg = sol.regularity()
        for name, (ok, margin) in reg.checks().items():
            summary.add(f"{name}[{i}]", ok, margin)
        sol.dump_csv(out / f"solution_{i}.csv")
        results.append(reg.__dict__)
    return {"regularity": results}


def cmd_oracle(exp: Experiment, out: Path, summary: Summary, threads: int) -> dict:
    o = exp.cfg["oracle"]
    res = exact_free_energy(exp.mixture, o["N"], o["seeds"])
    res.write_csv(out / "oracle.csv")
    bound = annealed_value(exp.mixture)
    summary.add("annealed_bound", res.mean <= bound + 3 * res.se, bound + 3 * res.se - res.mean)
    return {"N": res.N, "mean": res.mean, "se": res.se, "annealed": bound}


HANDLERS = {
    "evaluate": cmd_evaluate,
    "minimize": cmd_minimize,
    "convexity-scan": cmd_convexity,
    "verify-representation": cmd_representation,
    "verify-bounds": cmd_bounds,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parisilab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"parisilab {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("config", nargs="?", help="JSON experiment file (defaults apply when omitted)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field, e.g. --set model.h=0.5")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker processes (default: ${THREADS_ENV} or 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads if args.threads is not None else int(os.environ.get(THREADS_ENV, "1"))
    try:
        raw = {}
        if args.config:
            try:
                raw = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg = resolve_config(raw, args.overrides, args.out)
        if threads < 1:
            raise ConfigError(f"threads must be >= 1, got {threads}")
        exp = Experiment(cfg)
    except (ParisiLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "resolved_config.json", {"version": __version__, "command": args.command, **cfg})
    summary = Summary()
    try:
        result = HANDLERS[args.command](exp, out, summary, threads)
    except (ParisiLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result["version"] = __version__
    result["checks"] = [{"name": n, "status": s, "margin": m if math.isfinite(m) else None}
                        for n, s, m in summary.lines]
    _write_json(out / f"{args.command.replace('-', '_')}.json", result)
    return 1 if summary.failed else 0


if __name__ == "__main__":
    sys.exit(main())
