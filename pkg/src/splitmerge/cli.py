"""Command-line entry point: validate, obfuscate, run, diff, stats, gen."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus_gen, diffeval
from .analysis import dominator_tree, loop_info
from .config import MODES, FissionConfig, ObfuscationConfig
from .fission import function_regions
from .interp import Limits, run
from .ir import is_float, is_int
from .pipeline import StatsReport, obfuscate, separate_pass_stats
from .provenance import ProvenanceMap
from .text import IrSyntaxError, IrValidationError, parse_module, print_module
from .validate import validate

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_SYNTAX = 4
EXIT_INVALID = 5
EXIT_TRAP = 6
EXIT_PASS = 7

EPILOG = """\
exit codes:
  0  success
  1  internal error (a bug; please report the input)
  2  usage error
  3  file could not be read or written
  4  IR syntax error
  5  IR validation error
  6  the program trapped (run)
  7  an obfuscation pass rejected the input
"""

FEATURES = ("loops", "icalls", "setjmp", "may_throw", "globals", "branches")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, f"{self.prog}: {message}")


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except (OSError, UnicodeDecodeError) as e:
        raise CliError(EXIT_IO, f"cannot read {path}: {e}") from e


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot write {path}: {e}") from e


def _load(path: str):
    text = _read(path)
    try:
        return parse_module(text)
    except IrSyntaxError as e:
        raise CliError(EXIT_SYNTAX, f"{path}:{e}") from e
    except IrValidationError as e:
        raise CliError(EXIT_INVALID, f"{path}: {e}") from e
    except RecursionError as e:
        raise CliError(EXIT_SYNTAX, f"{path}: input nests too deeply") from e


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- subcommands ------------------------------------------------------------------------


def cmd_validate(a) -> int:
    for p in a.files:
        _load(p)
        print(f"{p}: ok")
    return EXIT_OK


def _config(a) -> ObfuscationConfig:
    base = {}
    if a.config:
        try:
            base = json.loads(_read(a.config))
        except json.JSONDecodeError as e:
            raise CliError(EXIT_USAGE, f"bad config {a.config}: {e}") from e
    base["mode"] = a.mode or base.get("mode", "fufi_all")
    base["seed"] = a.seed
    try:
        return ObfuscationConfig.from_dict(base)
    except (TypeError, ValueError) as e:
        raise CliError(EXIT_USAGE, f"bad config: {e}") from e


def cmd_obfuscate(a) -> int:
    m = _load(a.input)
    cfg = _config(a)
    try:
        out, prov, report = obfuscate(m, cfg)
    except (ValueError, KeyError, AssertionError) as e:
        raise CliError(EXIT_PASS, f"obfuscation failed: {e}") from e
    problems = validate(out)
    if problems:
        raise CliError(EXIT_PASS, "obfuscated module does not validate:\n  " + "\n  ".join(map(str, problems[:10])))
    text = print_module(out)
    if a.output:
        _write(a.output, text)
    else:
        sys.stdout.write(text)
    if a.provenance:
        _write(a.provenance, prov.to_json(cfg.seed, cfg.mode))
    if a.stats:
        _write(a.stats, _dump(report.to_dict()))
    return EXIT_OK


def _arg_value(text: str, ty: str):
    try:
        if is_int(ty):
            return int(text, 0)
        if is_float(ty):
            return float(text)
    except ValueError as e:
        raise CliError(EXIT_USAGE, f"argument {text!r} is not a valid {ty}") from e
    if text != "null":
        raise CliError(EXIT_USAGE, f"only null can be passed for {ty}")
    return None


def cmd_run(a) -> int:
    m = _load(a.input)
    if not m.has_function(a.entry) or m.function(a.entry).external:
        raise CliError(EXIT_USAGE, f"no defined function @{a.entry}")
    f = m.function(a.entry)
    if len(a.args) != len(f.params):
        raise CliError(EXIT_USAGE, f"@{a.entry} takes {len(f.params)} argument(s), got {len(a.args)}")
    args = [_arg_value(v, ty) for v, (_, ty) in zip(a.args, f.params)]
    res = run(m, a.entry, args, Limits(max_steps=a.max_steps))
    for line in res.output_trace:
        print(line)
    if res.trap:
        kind, where = res.trap
        print(f"trap: {kind} at {where}")
        return EXIT_TRAP
    print(f"exit: {res.exit_value}")
    return EXIT_OK


def cmd_diff(a) -> int:
    orig, obf = _load(a.original), _load(a.obfuscated)
    if a.provenance:
        try:
            prov = ProvenanceMap.from_json(_read(a.provenance))
        except (ValueError, KeyError, TypeError) as e:
            raise CliError(EXIT_USAGE, f"bad provenance {a.provenance}: {e}") from e
    else:
        prov = ProvenanceMap.identity([f.name for f in obf.defined_functions()])
    rep = diffeval.diff_modules(orig, obf, prov)
    dist = diffeval.opcode_distance(orig, [obf])
    print(diffeval.report_table(rep, dist))
    if a.json:
        _write(a.json, diffeval.report_json(rep, dist) + "\n")
    return EXIT_OK


def _ir_files(paths: list) -> list:
    out = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            out += sorted(str(q) for q in path.glob("*.ir"))
        else:
            out.append(p)
    if not out:
        raise CliError(EXIT_USAGE, "no .ir files given")
    return out


def _analyses(m, cfg: FissionConfig) -> dict:
    out = {}
    for f in m.defined_functions():
        dt = dominator_tree(f)
        li = loop_info(f, dt, cfg.default_trip_count)
        out[f.name] = {
            "blocks": len(f.blocks),
            "idom": {b: dt.parent.get(b) for b in dt.order},
            "loops": [{"header": lp.header, "body": sorted(lp.body), "trip_count": lp.trip_count}
                      for lp in li.loops],
            "regions": [{"head": r.head, "members": r.members, "value": float(r.value)}
                        for r in function_regions(f, cfg)],
        }
    return out


def cmd_stats(a) -> int:
    files = _ir_files(a.inputs)
    cfg = ObfuscationConfig(seed=a.seed)
    reports, per_file = [], {}
    for p in files:
        m = _load(p)
        try:
            reports.append(separate_pass_stats(m, a.seed, cfg))
        except (ValueError, KeyError, AssertionError) as e:
            raise CliError(EXIT_PASS, f"{p}: obfuscation failed: {e}") from e
        if not a.summary:
            per_file[p] = {"functions": _analyses(m, cfg.fission), "metrics": reports[-1].metrics()}
    total = StatsReport.merge(reports, "separate")
    doc = {"files": per_file, "seed": a.seed, "metrics": total.metrics(), "counts": total.to_dict()["fusion"]}
    text = _dump(doc)
    if a.json:
        _write(a.json, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _features(text: str) -> dict:
    if text == "all":
        return {k: True for k in FEATURES}
    chosen = set() if text == "none" else set(text.split(","))
    bad = chosen - set(FEATURES)
    if bad:
        raise CliError(EXIT_USAGE, f"unknown feature(s): {', '.join(sorted(bad))}")
    return {k: k in chosen for k in FEATURES}


def cmd_gen(a) -> int:
    if a.count < 1:
        raise CliError(EXIT_USAGE, "--count must be positive")
    feats = _features(a.features)
    out = Path(a.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot create {out}: {e}") from e
    manifest = {"seed": a.seed, "count": a.count, "features": sorted(k for k, v in feats.items() if v),
                "entry": "main", "input_seed": a.input_seed, "inputs_per_program": a.inputs, "programs": []}
    for i, spec in enumerate(corpus_gen.corpus_specs(a.seed, a.count, **feats)):
        m = corpus_gen.generate(spec)
        name = f"prog_{i:03d}.ir"
        _write(str(out / name), print_module(m))
        manifest["programs"].append({
            "file": name, "seed": spec.seed, "n_functions": spec.n_functions,
            "inputs": corpus_gen.generate_inputs(m, "main", a.inputs, a.input_seed),
        })
    _write(str(out / "manifest.json"), json.dumps(manifest, sort_keys=True) + "\n")
    print(f"wrote {a.count} programs to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="splitmerge", description="Function fission/fusion obfuscator over a small IR.",
                epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)

    v = sub.add_parser("validate", help="parse and validate IR files")
    v.add_argument("files", nargs="+")
    v.set_defaults(fn=cmd_validate)

    o = sub.add_parser("obfuscate", help="run the obfuscation pipeline")
    o.add_argument("input")
    o.add_argument("--mode", choices=MODES)
    o.add_argument("--seed", type=int, required=True)
    o.add_argument("--config", help="JSON file with fission/fusion settings")
    o.add_argument("-o", "--output")
    o.add_argument("--provenance")
    o.add_argument("--stats")
    o.set_defaults(fn=cmd_obfuscate)

    r = sub.add_parser("run", help="interpret a function")
    r.add_argument("input")
    r.add_argument("--entry", default="main")
    r.add_argument("--args", nargs="*", default=[])
    r.add_argument("--max-steps", type=int, default=Limits().max_steps)
    r.set_defaults(fn=cmd_run)

    d = sub.add_parser("diff", help="match functions of two modules")
    d.add_argument("original")
    d.add_argument("obfuscated")
    d.add_argument("--provenance")
    d.add_argument("--json")
    d.set_defaults(fn=cmd_diff)

    s = sub.add_parser("stats", help="analyses and fission/fusion statistics")
    s.add_argument("inputs", nargs="+", help=".ir files or directories")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--summary", action="store_true", help="only the pooled table")
    s.add_argument("--json")
    s.set_defaults(fn=cmd_stats)

    g = sub.add_parser("gen", help="generate a random program corpus")
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--count", type=int, default=200)
    g.add_argument("--features", default="all", help="comma list of %s, or all/none" % ",".join(FEATURES))
    g.add_argument("--inputs", type=int, default=100, help="input vectors per program")
    g.add_argument("--input-seed", type=int, default=7)
    g.add_argument("-o", "--output", default="corpus")
    g.set_defaults(fn=cmd_gen)
    return p


def main(argv=None) -> int:
    try:
        a = build_parser().parse_args(argv)
        if not getattr(a, "fn", None):
            raise CliError(EXIT_USAGE, "splitmerge: a subcommand is required (see --help)")
        return a.fn(a)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except SystemExit as e:  # --help
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except Exception as e:  # noqa: BLE001 - last line of defence, never a traceback
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
