"""Command-line interface.

Subcommands::

    qassay analyze     propose placeholders for a circuit
    qassay mine        mine an assertion catalog
    qassay instrument  insert catalog assertions into a circuit (QASM out)
    qassay experiment  mining-curve | coverage | tradeoff reports

Every option may also come from a flat JSON object given with ``--config``;
flags given on the command line win over the file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analyzer import static_analysis
from .benchmarks import Benchmark, builtin
from .catalog import read_catalog, write_catalog
from .circuit import emit_qasm, load_qasm
from .errors import QassayError, UndetectableBug
from .faults import (
    draw_bugs,
    experiment_error_coverage,
    experiment_mining_curve,
    experiment_tradeoff,
    sensitive_units,
)
from .instrument import Strategy, instrument
from .miner import InputMode, MiningConfig, count_by_kind, mine
from .report import write_report
from .rng import RngSeed
from .stats import PRECEDENCE

DEFAULTS = {
    "seed": 0,
    "shots": 8192,
    "iterations": 128,
    "alpha": 0.05,
    "budget": 1,
    "exhaustive": False,
    "jobs": 1,
    "strategy": None,
    "prep": "basis",
    "select": None,
    "ids": None,
    "assertions": 5,
    "bugs": 10,
    "vectors": 64,
    "k": "1,3,7,15",
    "repetitions": 10,
    "grid": None,
    "bug_attempts": 20,
    "no_figure": False,
}


class CliError(Exception):
    def __init__(self, message: str, status: int = 1):
        super().__init__(message)
        self.status = status


def _add_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("qasm", nargs="?", help="OpenQASM 2.0 file")
    p.add_argument("--builtin", help="benchmark name (adder4, shor5, simon6, grover5, qft7, teleport3, ghz<n>)")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker processes (results do not depend on it)")


def _add_mining(p: argparse.ArgumentParser) -> None:
    p.add_argument("--shots", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--budget", type=int, help="placeholder budget (1 = heuristics only)")
    p.add_argument("--exhaustive", action="store_const", const=True, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qassay", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qassay {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="list candidate placeholders")
    _add_source(p)
    _add_common(p)
    p.add_argument("--budget", type=int)
    p.add_argument("--out", help="write placeholders as JSON")

    p = sub.add_parser("mine", help="mine an assertion catalog")
    _add_source(p)
    _add_common(p)
    _add_mining(p)
    p.add_argument("--out", default="catalog.json")

    p = sub.add_parser("instrument", help="insert assertions and emit QASM")
    _add_source(p)
    _add_common(p)
    p.add_argument("--catalog", required=True)
    p.add_argument("--ids", help="comma-separated record ids")
    p.add_argument("--select", type=int, help="pick this many compatible records with --seed")
    p.add_argument("--strategy", choices=[s.value for s in Strategy])
    p.add_argument("--prep", help="input preparation the records were mined under")
    p.add_argument("--out", default="instrumented.qasm")

    p = sub.add_parser("experiment", help="run an experiment and write a report")
    p.add_argument("kind", choices=["mining-curve", "coverage", "tradeoff"])
    _add_source(p)
    _add_common(p)
    _add_mining(p)
    p.add_argument("--grid", help="mining-curve iteration grid, e.g. 1,2,4,8")
    p.add_argument("--assertions", type=int, help="coverage: assertions per experiment")
    p.add_argument("--bugs", type=int, help="coverage: injected bugs")
    p.add_argument("--vectors", type=int, help="coverage: largest test-vector budget")
    p.add_argument("--k", help="tradeoff: assertion counts, e.g. 1,3,7,15")
    p.add_argument("--repetitions", type=int, help="tradeoff: repetitions per k")
    p.add_argument("--bug-attempts", type=int, dest="bug_attempts")
    p.add_argument("--no-figure", action="store_const", const=True, default=None, dest="no_figure")
    p.add_argument("--out", default="reports")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over built-in defaults."""
    cfg: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise CliError(f"config file not found: {path}", 2)
        try:
            cfg = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CliError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise CliError(f"config file {path} must hold a JSON object")
    out = dict(DEFAULTS)
    out.update({k.replace("-", "_"): v for k, v in cfg.items()})
    for k, v in vars(args).items():
        if v is not None and k != "config":
            out[k] = v
    return out


def load_source(opts: dict) -> Benchmark:
    if opts.get("builtin") and opts.get("qasm"):
        raise CliError("give either a QASM file or --builtin, not both")
    if opts.get("builtin"):
        return builtin(opts["builtin"])
    if not opts.get("qasm"):
        raise CliError("a QASM file or --builtin is required")
    path = Path(opts["qasm"])
    if not path.exists():
        raise CliError(f"no such file: {path}", 2)
    c = load_qasm(path)
    return Benchmark(path.stem, c)


def _mining_config(opts: dict) -> MiningConfig:
    return MiningConfig(
        iterations=int(opts["iterations"]), shots=int(opts["shots"]), alpha=float(opts["alpha"]),
        seed=RngSeed(int(opts["seed"])),
        input_mode=InputMode.EXHAUSTIVE if opts["exhaustive"] else InputMode.RANDOM,
        jobs=int(opts["jobs"]),
    )


def _preps(b: Benchmark) -> dict:
    return {name: b.prep(name) for name in b.prep_names}


def _echo(opts: dict) -> dict:
    return {k: v for k, v in sorted(opts.items()) if k not in ("jobs", "config", "command", "out")}


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise CliError(f"expected comma-separated integers, got {text!r}") from None


def _mine_catalog(b: Benchmark, opts: dict):
    c = b.circuit
    placeholders = static_analysis(c, int(opts["budget"]), RngSeed(int(opts["seed"])))
    return placeholders, mine(c, placeholders, _mining_config(opts), _preps(b))


def cmd_analyze(opts: dict) -> int:
    b = load_source(opts)
    ps = static_analysis(b.circuit, int(opts["budget"]), RngSeed(int(opts["seed"])))
    for p in ps:
        print(f"{p.id}\tposition={p.position}\tqubits={list(p.qubits)}\t{p.hint.value}\t{p.provenance}")
    if opts.get("out"):
        Path(opts["out"]).write_text(json.dumps([p.to_dict() for p in ps], indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_mine(opts: dict) -> int:
    b = load_source(opts)
    _, records = _mine_catalog(b, opts)
    write_catalog(opts["out"], records, {"circuit": b.name, "options": _echo(opts)})
    counts = count_by_kind(records)
    for kind in PRECEDENCE:
        print(f"{kind.value}: {counts[kind]} assertions")
    print(f"{len(records)} records written to {opts['out']}")
    return 0


def cmd_instrument(opts: dict) -> int:
    b = load_source(opts)
    cat_path = Path(opts["catalog"])
    if not cat_path.exists():
        raise CliError(f"no such file: {cat_path}", 2)
    records = [r for r in read_catalog(cat_path) if r.prep == opts["prep"]]
    if opts.get("ids"):
        wanted = [s.strip() for s in str(opts["ids"]).split(",") if s.strip()]
        known = {r.id: r for r in records}
        missing = [i for i in wanted if i not in known]
        if missing:
            raise CliError(f"unknown record ids {missing}")
        records = [known[i] for i in wanted]
    elif opts.get("select"):
        order = RngSeed(int(opts["seed"])).child("instrument-select").generator().permutation(len(records))
        picked = []
        for i in order:
            r = records[int(i)]
            if not any(r.position == o.position and set(r.qubits) & set(o.qubits) for o in picked):
                picked.append(r)
            if len(picked) == int(opts["select"]):
                break
        records = sorted(picked, key=lambda r: r.id)
    ic = instrument(b.circuit, records, opts.get("strategy"), prep_hook=b.prep(opts["prep"]))
    out = Path(opts["out"])
    out.write_text(emit_qasm(ic.circuit), encoding="utf-8")
    map_path = out.with_suffix(".map.json")
    map_path.write_text(json.dumps(ic.clbit_map(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"{len(records)} assertions, {len(ic.circuit)} ops ({ic.overhead} added), "
          f"{ic.n_ancillas} ancillas, {ic.circuit.n_clbits - ic.original_clbits} assertion clbits")
    for aid in sorted(ic.strategy_used):
        print(f"{aid}\t{ic.strategy_used[aid].value}\tclbits={list(ic.assertion_clbits[aid])}")
    print(f"wrote {out} and {map_path}")
    return 0


def cmd_experiment(opts: dict) -> int:
    b = load_source(opts)
    c = b.circuit
    seed = RngSeed(int(opts["seed"]))
    kind = opts["kind"]
    jobs = int(opts["jobs"])
    if kind == "mining-curve":
        cfg = _mining_config(opts)
        grid = _ints(opts["grid"]) if opts.get("grid") else [
            1 << i for i in range(int(opts["iterations"]).bit_length()) if 1 << i <= int(opts["iterations"])]
        placeholders = static_analysis(c, int(opts["budget"]), seed)
        report = experiment_mining_curve(c, placeholders, cfg, grid, _preps(b))
    elif kind == "coverage":
        _, records = _mine_catalog(b, opts)
        grid = list(range(0, int(opts["vectors"]) + 1))
        report = experiment_error_coverage(c, records, int(opts["assertions"]), int(opts["bugs"]), grid,
                                           seed, int(opts["shots"]), _preps(b), jobs)
    else:
        _, records = _mine_catalog(b, opts)
        report = None
        for attempt in range(int(opts["bug_attempts"])):
            bug = draw_bugs(c, 1, seed.child("attempt", attempt), _preps(b))[0]
            pool = sensitive_units(c, records, bug, int(opts["shots"]), seed, _preps(b), jobs)
            if pool:
                report = experiment_tradeoff(c, records, bug, _ints(opts["k"]), seed, int(opts["repetitions"]),
                                             int(opts["shots"]), _preps(b), jobs, pool=pool)
                report.config["bug_attempt"] = attempt
                break
            print(f"bug attempt {attempt} ({bug.describe()}) is not detected by any assertion; redrawing")
        if report is None:
            raise UndetectableBug(f"no detectable bug in {opts['bug_attempts']} attempts")
    report.config["options"] = _echo(opts)
    paths = write_report(report, opts["out"], figure=not opts["no_figure"])
    for exp, x, y, _, _ in report.rows():
        print(f"{exp}\tx={x}\ty={y}")
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return 0


COMMANDS = {"analyze": cmd_analyze, "mine": cmd_mine, "instrument": cmd_instrument, "experiment": cmd_experiment}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args)
        return COMMANDS[args.command](opts)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.status
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return 2
    except (QassayError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
