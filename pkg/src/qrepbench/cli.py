"""Command-line front end.

Exit codes: 0 success, 1 computation failure, 2 configuration failure.
Parameters come from built-in defaults, then an optional ``--config`` JSON
file, then explicit flags.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import analytic, gridsim, network, statevec
from .analytic import ECC_REPETITION, PURIFICATION, DegradedRegimeWarning, Scheme
from .errors import GraphFormatError, NoRepeaterPath, QRepBenchError, InstanceTooLarge, ResourceOverflow

EXIT_OK, EXIT_COMPUTE, EXIT_CONFIG = 0, 1, 2
VERIFY_TOLERANCE = 1e-12

COMMANDS = ("fidelity", "iterations", "resources", "verify", "gridsim", "capacity")
COMMON = {"out": None, "format": "csv", "seed": None}
DEFAULTS: dict[str, dict[str, Any]] = {
    "fidelity": {"f0": [0.51, 0.53, 0.55, 0.57, 0.59], "n": 10, "scheme": "both"},
    "iterations": {
        "f0": [0.51, 0.75, 0.9],
        "targets": [0.9, 0.99, 0.999, 0.9999, 0.99999, 0.999999],
        "scheme": "both",
    },
    "resources": {"f0": 0.51, "target": 0.99, "ell": [4, 6, 8], "scheme": "both"},
    "verify": {"points": 21},
    "gridsim": {
        "k_min": 10,
        "k_max": 20,
        "runs": 50,
        "p": 0.5,
        "f0": 0.51,
        "target": 0.99,
        "scheme": "both",
        "out": "gridsim-output",
    },
    "capacity": {"graph": None, "effort": 20, "max_paths": 8, "seed": 0},
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    parameters: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.parameters[key]


def fmt(x) -> str:
    """Twelve significant digits for floats, plain ints otherwise."""
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _json_value(x):
    if isinstance(x, float) and math.isfinite(x):
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    return x


def render(rows: list[dict], columns: list[str], fmt_name: str) -> str:
    if fmt_name == "json":
        return json.dumps([_json_value({c: r[c] for c in columns}) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# --------------------------------------------------------------- validation


def _schemes(value: str) -> list[Scheme]:
    if value == "both":
        return [PURIFICATION, ECC_REPETITION]
    try:
        return [Scheme.parse(value)]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _as_list(value, conv, name):
    if isinstance(value, (int, float, str)):
        value = [value]
    try:
        return [conv(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot parse {value!r}") from None


def _unit_open(name, x, lo=0.0, hi=1.0, lo_incl=False, hi_incl=True):
    ok_lo = x >= lo if lo_incl else x > lo
    ok_hi = x <= hi if hi_incl else x < hi
    if not (ok_lo and ok_hi):
        raise ConfigError(f"{name}={x} out of range")


def _check_f0(values, schemes):
    for f in values:
        _unit_open("f0", f, 0.0, 1.0, lo_incl=False, hi_incl=True)
        if f <= 0.5 and any(s.is_purification for s in schemes):
            raise ConfigError(
                f"f0={f}: purification needs an initial fidelity above the 0.5 threshold"
            )


def _positive_int(name, v, minimum=1):
    try:
        iv = int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected an integer, got {v!r}") from None
    if iv != v and not isinstance(v, str):
        raise ConfigError(f"{name}: expected an integer, got {v!r}")
    if iv < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {iv}")
    return iv


def validate(cfg: RunConfig) -> RunConfig:
    p = cfg.parameters
    allowed = set(DEFAULTS[cfg.command]) | set(COMMON)
    unknown = set(p) - allowed
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {cfg.command}: {', '.join(sorted(unknown))}")
    if p.get("format") not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {p.get('format')!r}")
    if p.get("seed") is not None:
        p["seed"] = _positive_int("seed", p["seed"], 0)
        if p["seed"] >= 2**64:
            raise ConfigError("seed must fit in 64 bits")
    cmd = cfg.command
    if "scheme" in p:
        p["schemes"] = _schemes(p.pop("scheme"))
    if cmd == "fidelity":
        p["f0"] = _as_list(p["f0"], float, "f0")
        _check_f0(p["f0"], p["schemes"])
        p["n"] = _positive_int("n", p["n"], 0)
    elif cmd == "iterations":
        p["f0"] = _as_list(p["f0"], float, "f0")
        _check_f0(p["f0"], p["schemes"])
        p["targets"] = _as_list(p["targets"], float, "targets")
        for t in p["targets"]:
            _unit_open("target", t, 0.0, 1.0, hi_incl=False)
    elif cmd == "resources":
        p["f0"] = float(p["f0"])
        _check_f0([p["f0"]], p["schemes"])
        p["target"] = float(p["target"])
        _unit_open("target", p["target"], 0.0, 1.0, hi_incl=False)
        p["ell"] = [_positive_int("ell", v) for v in _as_list(p["ell"], lambda v: v, "ell")]
    elif cmd == "verify":
        p["points"] = _positive_int("points", p["points"], 2)
    elif cmd == "gridsim":
        if p.get("seed") is None:
            raise ConfigError("gridsim requires --seed")
        p["k_min"] = _positive_int("k_min", p["k_min"], 2)
        p["k_max"] = _positive_int("k_max", p["k_max"], 2)
        if p["k_max"] < p["k_min"]:
            raise ConfigError("k_max must be >= k_min")
        p["runs"] = _positive_int("runs", p["runs"])
        p["p"] = float(p["p"])
        _unit_open("p", p["p"], 0.0, 1.0, lo_incl=True)
        p["f0"] = float(p["f0"])
        _check_f0([p["f0"]], p["schemes"])
        p["target"] = float(p["target"])
        _unit_open("target", p["target"], 0.0, 1.0, hi_incl=False)
    elif cmd == "capacity":
        if not p.get("graph"):
            raise ConfigError("capacity needs a graph file")
        p["effort"] = _positive_int("effort", p["effort"], 0)
        p["max_paths"] = _positive_int("max_paths", p["max_paths"])
    return cfg


# ----------------------------------------------------------------- commands


def cmd_fidelity(cfg: RunConfig) -> int:
    rows = []
    for s in cfg["schemes"]:
        for f0 in cfg["f0"]:
            traj = analytic.fidelity_trajectory(s, f0, cfg["n"])
            rows += [{"scheme": s.name, "F0": f0, "n": n, "fidelity": F} for n, F in enumerate(traj)]
    emit(render(rows, ["scheme", "F0", "n", "fidelity"], cfg["format"]), cfg["out"])
    return EXIT_OK


def cmd_iterations(cfg: RunConfig) -> int:
    rows = []
    for s in cfg["schemes"]:
        for f0 in cfg["f0"]:
            for t in cfg["targets"]:
                n = analytic.iterations_to_target(s, f0, t)
                F = analytic.fidelity_trajectory(s, f0, n).values[-1]
                rows.append({"scheme": s.name, "F0": f0, "target": t, "n": n, "achieved_fidelity": F})
    emit(render(rows, ["scheme", "F0", "target", "n", "achieved_fidelity"], cfg["format"]), cfg["out"])
    return EXIT_OK


def cmd_resources(cfg: RunConfig) -> int:
    rows = []
    for s in cfg["schemes"]:
        n_final = max(1, analytic.iterations_to_target(s, cfg["f0"], cfg["target"]))
        traj = analytic.fidelity_trajectory(s, cfg["f0"], n_final)
        for ell in cfg["ell"]:
            for n in range(1, n_final + 1):
                try:
                    qubits = analytic.memory_required(s, n, ell)
                except ResourceOverflow as exc:
                    raise ResourceOverflow(f"{s.name} at n={n}, ell={ell}: {exc}") from exc
                rows.append(
                    {
                        "scheme": s.name,
                        "ell": ell,
                        "n": n,
                        "achieved_fidelity": traj.values[n],
                        "qubits": qubits,
                        "operations": analytic.operations_required(s, n, ell),
                    }
                )
    cols = ["scheme", "ell", "n", "achieved_fidelity", "qubits", "operations"]
    emit(render(rows, cols, cfg["format"]), cfg["out"])
    return EXIT_OK


def _concat_reference(levels: int, p: float) -> float:
    s = 1.0 - p
    for _ in range(levels):
        s = analytic.ecc_bell_fidelity(1.0 - s)
    return s


def verification_checks() -> list[tuple[str, Callable[[float], float]]]:
    """Each check maps ``p`` to the absolute oracle-vs-formula deviation."""

    def pur_fid(p):
        return abs(statevec.purification_experiment(p).conditional_bell_fidelity - analytic.purified_pair_fidelity(p))

    def pur_accept(p):
        q = 1.0 - p
        return abs(statevec.purification_experiment(p).accept_probability - (q * q + p * p))

    def pair_bridge(p):
        return abs(statevec.qubit_level_pair_error(p) - 2.0 * p * (1.0 - p))

    def rep_code(p):
        return abs(statevec.repetition_code_experiment(p).root_success - analytic.ecc_bell_fidelity(p))

    def ecc_swap(p):
        return abs(statevec.ecc_swap_experiment(p).root_success - analytic.ecc_bell_fidelity(p))

    def concat(levels):
        return lambda p: abs(
            statevec.concatenated_success_probability(levels, p, brute_force=True)
            - _concat_reference(levels, p)
        )

    return [
        ("purification_fidelity", pur_fid),
        ("purification_acceptance", pur_accept),
        ("qubit_level_pair_error", pair_bridge),
        ("repetition_code", rep_code),
        ("ecc_swap", ecc_swap),
        ("concatenation_level1", concat(1)),
        ("concatenation_level2", concat(2)),
    ]


def run_verification(points: int = 21) -> list[dict]:
    grid = statevec.p_grid(points)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegradedRegimeWarning)
        for name, check in verification_checks():
            dev = max(check(p) for p in grid)
            rows.append({"check": name, "max_deviation": dev, "passed": dev < VERIFY_TOLERANCE})
    return rows


def cmd_verify(cfg: RunConfig) -> int:
    rows = run_verification(cfg["points"])
    emit(render(rows, ["check", "max_deviation", "passed"], cfg["format"]), cfg["out"])
    failed = [r["check"] for r in rows if not r["passed"]]
    if failed:
        print(f"verification failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


def cmd_gridsim(cfg: RunConfig) -> int:
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    summaries = []
    for s in cfg["schemes"]:
        reports = []
        for k in range(cfg["k_min"], cfg["k_max"] + 1):
            sc = gridsim.GridScenario(
                k=k,
                p_activation=cfg["p"],
                runs=cfg["runs"],
                seed=cfg["seed"],
                scheme=s,
                F0=cfg["f0"],
                target=cfg["target"],
            )
            rs = gridsim.run_scenario(sc)
            reports += rs
            summaries.append(gridsim.summary_record(sc, rs))
        if cfg["format"] == "json":
            rows = [dict(zip(gridsim.CSV_COLUMNS, r.csv_row())) for r in reports]
            (outdir / f"runs_{s.name}.json").write_text(json.dumps(rows, indent=2) + "\n")
        else:
            (outdir / f"runs_{s.name}.csv").write_text(gridsim.reports_to_csv(reports))
    (outdir / "summary.json").write_text(json.dumps(_json_value(summaries), indent=2) + "\n")
    return EXIT_OK


def cmd_capacity(cfg: RunConfig) -> int:
    try:
        G, demands = network.read_graph(cfg["graph"])
    except OSError as exc:
        raise ConfigError(f"cannot read graph file: {exc}") from None
    report = network.validate_graph(G)
    if not report.ok:
        raise ConfigError("invalid graph: " + "; ".join(map(str, report.violations)))
    shortest = network.induced_capacity(network.complete_path_set(G, demands))
    heur_paths = network.minimize_induced_capacity(
        G, effort=cfg["effort"], pairs=demands, seed=cfg["seed"] or 0
    )
    heuristic = network.induced_capacity(heur_paths)
    try:
        _, exact = network.brute_force_min_capacity(G, demands, max_paths_per_pair=cfg["max_paths"])
    except InstanceTooLarge:
        exact = None
    rows = [
        {"method": "shortest_path", "capacity": shortest},
        {"method": "heuristic", "capacity": heuristic},
        {"method": "brute_force", "capacity": exact if exact is not None else ""},
    ]
    if cfg["format"] == "json":
        text = json.dumps({"shortest_path": shortest, "heuristic": heuristic, "brute_force": exact}, indent=2) + "\n"
    else:
        text = render(rows, ["method", "capacity"], "csv")
    emit(text, cfg["out"])
    return EXIT_OK


HANDLERS = {
    "fidelity": cmd_fidelity,
    "iterations": cmd_iterations,
    "resources": cmd_resources,
    "verify": cmd_verify,
    "gridsim": cmd_gridsim,
    "capacity": cmd_capacity,
}


# -------------------------------------------------------------------- parser


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrepbench",
        description="Fidelity, resource and congestion bench for repeated purification "
        "and concatenated (3,1) repetition codes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def common(p):
        p.add_argument("--out", default=S, help="output file (directory for gridsim)")
        p.add_argument("--format", choices=("csv", "json"), default=S)
        p.add_argument("--seed", type=int, default=S)
        p.add_argument("--config", default=None, help="JSON file with parameters")
        return p

    scheme_help = "purification, ecc or both"
    p = common(sub.add_parser("fidelity", help="fidelity trajectories"))
    p.add_argument("--f0", type=_floats, default=S, help="comma-separated initial fidelities")
    p.add_argument("--n", type=int, default=S, help="number of iterations")
    p.add_argument("--scheme", default=S, help=scheme_help)

    p = common(sub.add_parser("iterations", help="iterations needed to reach targets"))
    p.add_argument("--f0", type=_floats, default=S)
    p.add_argument("--targets", type=_floats, default=S)
    p.add_argument("--scheme", default=S, help=scheme_help)

    p = common(sub.add_parser("resources", help="qubit and operation counts"))
    p.add_argument("--f0", type=float, default=S)
    p.add_argument("--target", type=float, default=S)
    p.add_argument("--ell", type=_ints, default=S, help="comma-separated path lengths")
    p.add_argument("--scheme", default=S, help=scheme_help)

    p = common(sub.add_parser("verify", help="circuit oracle vs closed forms"))
    p.add_argument("--points", type=int, default=S, help="p-grid size")

    p = common(sub.add_parser("gridsim", help="grid congestion Monte Carlo"))
    p.add_argument("--k-min", dest="k_min", type=int, default=S)
    p.add_argument("--k-max", dest="k_max", type=int, default=S)
    p.add_argument("--runs", type=int, default=S)
    p.add_argument("--p", type=float, default=S, help="activation probability")
    p.add_argument("--f0", type=float, default=S)
    p.add_argument("--target", type=float, default=S)
    p.add_argument("--scheme", default=S, help=scheme_help)

    p = common(sub.add_parser("capacity", help="induced capacity of a graph file"))
    p.add_argument("graph", nargs="?", default=S)
    p.add_argument("--effort", type=int, default=S, help="heuristic restarts")
    p.add_argument("--max-paths", dest="max_paths", type=int, default=S)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    params = dict(COMMON)
    params.update(DEFAULTS[args.command])
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load config file: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data.pop("command", None)
        params.update({k.replace("-", "_"): v for k, v in data.items()})
    params.update(flags)
    return validate(RunConfig(args.command, params))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
        return HANDLERS[cfg.command](cfg)
    except (ConfigError, GraphFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoRepeaterPath as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (QRepBenchError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
