"""Command-line front end.

Exit codes: 0 pass, 1 property failure, 2 parse error, 3 semantic error,
4 inapplicable (for example a mapping that is not total on the pool).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .chase import chase
from .compose import compose_sotgds, to_plain
from .core import Instance, MapkitError, SchemaMismatch, SemanticError
from .evaluation import certain_answers_st
from .generate import corpus
from .invert import maximum_recovery
from .lang import (
    ParseError,
    parse_instance,
    parse_mapping,
    parse_query,
    print_instance,
    print_mapping,
    print_query,
    print_value,
    validate,
)
from .lang.syntax import MappingSpec
from .oracle import (
    FAIL,
    INAPPLICABLE,
    PASS,
    Verdict,
    check_cq_recovery,
    check_fagin_inverse,
    check_max_extended_recovery,
    check_max_recovery,
    check_quasi_inverse,
    check_recovery,
    cq_equivalent,
)

EXIT_PASS, EXIT_FAIL, EXIT_PARSE, EXIT_SEMANTIC, EXIT_INAPPLICABLE = 0, 1, 2, 3, 4

PROPERTIES = (
    "fagin-inverse",
    "quasi-inverse",
    "recovery",
    "max-recovery",
    "max-extended-recovery",
    "cq-recovery",
    "cq-equivalent",
)


class InputError(MapkitError):
    """A parse error tied to a file."""

    def __init__(self, path: str, err: ParseError):
        super().__init__(f"{path}:{err}")
        self.path = path
        self.line = err.line
        self.col = err.col


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_paths: tuple[str, ...]
    pool_constants: int = 2
    pool_nulls: int = 2
    source_nulls: int = 1
    query_budget: int = 3
    output_format: str = "text"
    seed: int = 0
    jobs: int = 1
    properties: tuple[str, ...] = ()
    plain: bool = False
    random: int = 0
    output: Optional[str] = None

    def __post_init__(self):
        for name in ("pool_constants", "pool_nulls", "source_nulls", "query_budget", "random"):
            if getattr(self, name) < 0:
                raise SemanticError(f"{name.replace('_', '-')} must be non-negative")
        if self.jobs < 1:
            raise SemanticError("jobs must be at least 1")
        for p in self.input_paths:
            if not Path(p).is_file():
                raise SemanticError(f"no such file: {p}")

    @property
    def pool_args(self) -> dict:
        return {"constants": self.pool_constants, "nulls": self.pool_nulls}


# -- loading -------------------------------------------------------------------

def _read(path: str, parse, *args):
    try:
        return parse(Path(path).read_text(), *args)
    except ParseError as err:
        raise InputError(path, err) from None


def load_mapping(path: str) -> MappingSpec:
    spec = _read(path, parse_mapping)
    problems = validate(spec)
    if problems:
        raise SemanticError(f"{path}: {problems[0]}", problems[0].symbol)
    return spec


def load_instance(path: str, spec: MappingSpec) -> Instance:
    return _read(path, parse_instance, (spec.source, spec.target))


# -- rendering -------------------------------------------------------------------

def _rows(rows) -> list[list[str]]:
    return [[print_value(v) for v in r] for r in sorted(rows)]


def render_chase(spec: MappingSpec, I: Instance) -> tuple[str, dict]:
    res = chase(spec, I)
    lines = [print_instance(res.result, "J").rstrip("\n")]
    provenance = []
    for n, (idx, trigger, var) in sorted(res.null_origin.items()):
        binding = ", ".join(f"{k}={print_value(v)}" for k, v in trigger)
        lines.append(f"# {print_value(n)} <- dependency {idx + 1} ({binding}), variable {var}")
        provenance.append(
            {"null": print_value(n), "dependency": idx + 1, "variable": var,
             "trigger": {k: print_value(v) for k, v in trigger}}
        )
    facts = [{"relation": f.rel, "args": [print_value(v) for v in f.args]} for f in res.result]
    text = "\n".join(lines) + "\n"
    return text, {"facts": facts, "nulls": provenance, "text": print_instance(res.result, "J")}


def verdict_json(v: Verdict) -> dict:
    out = {"property": v.property, "status": v.status, "detail": v.detail, "exact": v.exact}
    if v.counterexample is not None:
        left, right = v.counterexample
        out["counterexample"] = {"left": print_instance(left, "I1"), "right": print_instance(right, "I2")}
    if v.query is not None:
        out["query"] = str(v.query)
        out["answer"] = [print_value(x) for x in v.answer]
    return out


def verdict_text(v: Verdict, label: str = "") -> str:
    head = f"{v.property}: {v.status.upper()}"
    if label:
        head = f"{label} {head}"
    if not v.exact:
        head += " (pool-bounded)"
    lines = [head]
    if v.detail:
        lines.append(f"  {v.detail}")
    if v.query is not None:
        lines.append(f"  query: {v.query}")
    if v.counterexample is not None and v.status != PASS:
        left, right = v.counterexample
        lines.append(print_instance(left, "I1").rstrip("\n"))
        lines.append(print_instance(right, "I2").rstrip("\n"))
    return "\n".join(lines) + "\n"


def exit_for(verdicts: Sequence[Verdict]) -> int:
    statuses = {v.status for v in verdicts}
    if FAIL in statuses:
        return EXIT_FAIL
    if INAPPLICABLE in statuses:
        return EXIT_INAPPLICABLE
    return EXIT_PASS


# -- verification jobs ----------------------------------------------------------------

def run_property(prop: str, m: MappingSpec, m2: Optional[MappingSpec], cfg: RunConfig) -> Verdict:
    if prop == "cq-equivalent":
        if m2 is None:
            raise SemanticError("cq-equivalent needs two mappings")
        return cq_equivalent(m, m2, cfg.query_budget, cfg.pool_constants, cfg.pool_nulls)
    if m2 is None:
        m2 = maximum_recovery(m)
    if prop == "max-extended-recovery":
        return check_max_extended_recovery(m, m2, cfg.pool_constants, cfg.pool_nulls, cfg.source_nulls)
    checker = {
        "fagin-inverse": check_fagin_inverse,
        "quasi-inverse": check_quasi_inverse,
        "recovery": check_recovery,
        "max-recovery": check_max_recovery,
    }.get(prop)
    if checker is not None:
        return checker(m, m2, **cfg.pool_args)
    return check_cq_recovery(m, m2, cfg.query_budget, **cfg.pool_args)


def _job(args):
    prop, m, m2, cfg = args
    try:
        return run_property(prop, m, m2, cfg), None
    except MapkitError as err:
        return None, str(err)


def _run_jobs(jobs: list, n: int) -> list:
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            return list(pool.map(_job, jobs))
    return [_job(j) for j in jobs]


# -- commands -------------------------------------------------------------------

@dataclass
class Output:
    text: str = ""
    data: dict = field(default_factory=dict)
    code: int = EXIT_PASS


def cmd_parse(cfg: RunConfig) -> Output:
    path = cfg.input_paths[0]
    text = Path(path).read_text()
    head = text.lstrip()
    if head.startswith("query"):
        q = _read(path, parse_query)
        out = print_query(q)
        return Output(out, {"kind": "query", "text": out})
    if head.startswith("instance"):
        if len(cfg.input_paths) < 2:
            raise SemanticError("an instance file needs a mapping file for its schema")
        spec = load_mapping(cfg.input_paths[1])
        inst = load_instance(path, spec)
        out = print_instance(inst, "I")
        return Output(out, {"kind": "instance", "text": out})
    spec = _read(path, parse_mapping)
    problems = validate(spec, plain=cfg.plain)
    out = print_mapping(spec)
    data = {"kind": "mapping", "text": out, "violations": [str(p) for p in problems]}
    if problems:
        return Output(out + "".join(f"# violation: {p}\n" for p in problems), data, EXIT_SEMANTIC)
    return Output(out, data)


def cmd_chase(cfg: RunConfig) -> Output:
    spec = load_mapping(cfg.input_paths[0])
    inst = load_instance(cfg.input_paths[1], spec)
    if inst.schema.name != spec.source.name:
        raise SchemaMismatch(f"instance is over {inst.schema.name}, not the source schema {spec.source.name}")
    text, data = render_chase(spec, inst)
    return Output(text, data)


def cmd_compose(cfg: RunConfig) -> Output:
    a, b = (load_mapping(p) for p in cfg.input_paths[:2])
    out = compose_sotgds(a, b)
    if cfg.plain:
        out = to_plain(out)
    text = print_mapping(out)
    return Output(text, {"mapping": text, "plain": cfg.plain})


def cmd_invert(cfg: RunConfig) -> Output:
    spec = load_mapping(cfg.input_paths[0])
    text = print_mapping(maximum_recovery(spec))
    return Output(text, {"mapping": text})


def cmd_certain(cfg: RunConfig) -> Output:
    spec = load_mapping(cfg.input_paths[0])
    inst = load_instance(cfg.input_paths[1], spec)
    q = _read(cfg.input_paths[2], parse_query, spec.target)
    rows = _rows(certain_answers_st(spec, q, inst))
    text = "".join(f"({', '.join(r)})\n" for r in rows)
    return Output(text, {"answers": rows})


def cmd_verify(cfg: RunConfig) -> Output:
    props = cfg.properties or ("max-recovery",)
    if cfg.random:
        targets = [(m, None, m.name) for m in corpus(cfg.seed, cfg.random)]
    else:
        if not cfg.input_paths:
            raise SemanticError("verify needs a mapping file or --random")
        m = load_mapping(cfg.input_paths[0])
        m2 = load_mapping(cfg.input_paths[1]) if len(cfg.input_paths) > 1 else None
        targets = [(m, m2, "")]
    jobs = [(p, m, m2, cfg) for m, m2, _ in targets for p in props]
    labels = [label for _, _, label in targets for _ in props]
    results = _run_jobs(jobs, cfg.jobs)
    for verdict, error in results:
        if error is not None:
            raise SemanticError(error)
    verdicts = [v for v, _ in results]
    text = "".join(verdict_text(v, label) for v, label in zip(verdicts, labels))
    data = {"results": [dict(verdict_json(v), mapping=label) if label else verdict_json(v)
                        for v, label in zip(verdicts, labels)]}
    if cfg.random:
        data["corpus"] = [print_mapping(m) for m, _, _ in targets]
    return Output(text, data, exit_for(verdicts))


COMMANDS = {
    "parse": cmd_parse,
    "chase": cmd_chase,
    "compose": cmd_compose,
    "invert": cmd_invert,
    "certain": cmd_certain,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mapkit", description="Schema mapping composition, inversion and checking.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text", help="output format")
    common.add_argument("-o", "--output", help="write output to this file instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("parse", parents=[common], help="parse, validate and pretty-print a file")
    s.add_argument("file")
    s.add_argument("mapping", nargs="?", help="mapping that declares the schemas of an instance file")
    s.add_argument("--plain", action="store_true", help="also require a plain SO-tgd")

    s = sub.add_parser("chase", parents=[common], help="chase a source instance")
    s.add_argument("mapping")
    s.add_argument("instance")

    s = sub.add_parser("compose", parents=[common], help="compose two mappings into an SO-tgd")
    s.add_argument("first")
    s.add_argument("second")
    s.add_argument("--plain", action="store_true", help="rewrite the result into a plain SO-tgd")

    s = sub.add_parser("invert", parents=[common], help="compute a maximum recovery")
    s.add_argument("mapping")

    s = sub.add_parser("certain", parents=[common], help="certain answers of a query")
    s.add_argument("mapping")
    s.add_argument("instance")
    s.add_argument("query")

    s = sub.add_parser("verify", parents=[common], help="check a property on finite pools")
    s.add_argument("mappings", nargs="*", help="M, then optionally the candidate M' (default: maximum recovery of M)")
    s.add_argument("--property", action="append", choices=PROPERTIES, dest="properties")
    s.add_argument("--pool-constants", type=int, default=2)
    s.add_argument("--pool-nulls", type=int, default=2)
    s.add_argument("--source-nulls", type=int, default=1, help="nulls in source pools for max-extended-recovery")
    s.add_argument("--query-budget", type=int, default=3)
    s.add_argument("--random", type=int, default=0, metavar="N", help="sweep N random st-tgd mappings instead of files")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=int(os.environ.get("MAPKIT_JOBS", "1")))
    return p


def config_from(ns: argparse.Namespace) -> RunConfig:
    paths = {
        "parse": lambda: (ns.file,) + ((ns.mapping,) if ns.mapping else ()),
        "chase": lambda: (ns.mapping, ns.instance),
        "compose": lambda: (ns.first, ns.second),
        "invert": lambda: (ns.mapping,),
        "certain": lambda: (ns.mapping, ns.instance, ns.query),
        "verify": lambda: tuple(ns.mappings),
    }[ns.command]()
    extra = {}
    if ns.command == "verify":
        extra = dict(
            pool_constants=ns.pool_constants,
            pool_nulls=ns.pool_nulls,
            source_nulls=ns.source_nulls,
            query_budget=ns.query_budget,
            seed=ns.seed,
            jobs=ns.jobs,
            properties=tuple(ns.properties or ()),
            random=ns.random,
        )
    return RunConfig(
        ns.command, paths, output_format=ns.format, plain=getattr(ns, "plain", False), output=ns.output, **extra
    )


def run(cfg: RunConfig) -> Output:
    return COMMANDS[cfg.command](cfg)


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    fmt = ns.format
    try:
        cfg = config_from(ns)
        out = run(cfg)
    except InputError as err:
        return _fail(fmt, "parse", str(err), EXIT_PARSE)
    except MapkitError as err:
        return _fail(fmt, "semantic", str(err), EXIT_SEMANTIC)
    body = json.dumps(dict(out.data, exit=out.code), indent=2, sort_keys=True) + "\n" if fmt == "json" else out.text
    if cfg.output:
        Path(cfg.output).write_text(body)
    else:
        sys.stdout.write(body)
    return out.code


def _fail(fmt: str, kind: str, message: str, code: int) -> int:
    if fmt == "json":
        sys.stdout.write(json.dumps({"error": kind, "message": message, "exit": code}, sort_keys=True) + "\n")
    else:
        sys.stderr.write(f"mapkit: {kind} error: {message}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
