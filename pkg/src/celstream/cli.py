"""``cep`` command line: compile, run and bench."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import formula as F
from .analysis import analyze, binary_atoms
from .automata import to_dot
from .bench import QUERY_IDS, BenchConfig, BenchConfigError, abcde_schema, query_text, run_bench
from .events import SchemaError, StreamError, load_schema, load_stream
from .oracle import NotWellFormedError
from .parser import CelSyntaxError, SchemaMismatchError, parse_formula
from .pipeline import ENGINES, NotUnaryError, compile_query, evaluate
from .predicates import to_text
from .rewrite import RewriteError, split_selection, to_lp_normal_form, to_safe, wrap_selection
from .runtime.engines import normalize_strategy

EXIT_PARSE = 1
EXIT_NOT_WELL_FORMED = 2
EXIT_NOT_UNARY = 3
EXIT_INPUT = 4

STRATEGY_CHOICE = click.Choice(["none", "strict", "nxt", "last", "max"], case_sensitive=False)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_schema(path: str | None, query: str):
    if path is not None:
        try:
            return load_schema(Path(path).read_text())
        except (OSError, SchemaError) as exc:
            _fail(EXIT_INPUT, f"cannot read schema: {exc}")
    if query.upper() in QUERY_IDS:
        return abcde_schema()
    return None


def _load_formula(query: str, schema, strategy: str | None) -> F.Formula:
    try:
        text = query_text(query)
    except (BenchConfigError, OSError) as exc:
        _fail(EXIT_PARSE, str(exc))
    try:
        f = parse_formula(text, schema)
    except (CelSyntaxError, SchemaMismatchError) as exc:
        _fail(EXIT_PARSE, str(exc))
    s = normalize_strategy(strategy)
    return F.Select(s, f) if s is not None else f


def _compile(f: F.Formula):
    try:
        return compile_query(f)
    except NotWellFormedError as exc:
        _fail(EXIT_NOT_WELL_FORMED, str(exc))
    except NotUnaryError as exc:
        _fail(EXIT_NOT_UNARY, str(exc))
    except RewriteError as exc:
        _fail(EXIT_PARSE, str(exc))


def _report_text(f: F.Formula) -> str:
    rep = analyze(f)
    names = lambda vs: ", ".join(sorted(vs)) or "-"
    lines = [
        f"formula: {F.pretty(f)}",
        f"size: {F.formula_size(f)}",
        f"variables: {names(rep.var_all)}",
        f"defined: {names(rep.vdef)}",
        f"defined in every output: {names(rep.vdef_plus)}",
        f"bound: {names(rep.bound)}",
        f"well-formed: {'yes' if rep.well_formed else 'no'}",
        f"safe: {'yes' if rep.safe else 'no'}",
        f"unary: {'yes' if rep.unary else 'no'}",
    ]
    bad = binary_atoms(f)
    if bad:
        lines.append("binary predicates: " + ", ".join(to_text(a) for a in bad))
    return "\n".join(lines)


@click.group()
def main():
    """Complex event queries over streams."""


@main.command("compile")
@click.option("--query", required=True, help="Query file, or Q1..Q6.")
@click.option("--schema", default=None, help="Schema file.")
@click.option("--strategy", type=STRATEGY_CHOICE, default="none")
@click.option("--emit", type=click.Choice(["report", "rewritten", "dot", "stats"]), default="report")
@click.option("--determinize", is_flag=True, help="Determinize the automaton before emitting it.")
def cmd_compile(query, schema, strategy, emit, determinize):
    """Analyze, rewrite and compile a query."""
    sch = _load_schema(schema, query)
    f = _load_formula(query, sch, strategy)
    if emit == "report":
        click.echo(_report_text(f))
        rep = analyze(f)
        if not rep.well_formed:
            sys.exit(EXIT_NOT_WELL_FORMED)
        return
    if not analyze(f).well_formed:
        _fail(EXIT_NOT_WELL_FORMED, "formula is not well-formed: a filtered variable is not bound")
    if emit == "rewritten":
        try:
            chain, core = split_selection(f)
            click.echo(F.pretty(wrap_selection(chain, to_lp_normal_form(to_safe(core)))))
        except RewriteError as exc:
            _fail(EXIT_PARSE, str(exc))
        return
    cq = _compile(f)
    if emit == "stats":
        click.echo(json.dumps(cq.stats(), indent=2))
        return
    a = cq.compiled(determinize=determinize)
    click.echo(to_dot(a), nl=False)


def _format_positions(ce) -> str:
    return "{" + ",".join(map(str, sorted(ce))) + "}"


@main.command("run")
@click.option("--query", required=True, help="Query file, or Q1..Q6.")
@click.option("--schema", default=None, help="Schema file.")
@click.option("--stream", "stream_path", required=True, help="JSONL or CSV stream file, or - for stdin.")
@click.option("--format", "fmt", type=click.Choice(["auto", "jsonl", "csv"]), default="auto")
@click.option("--strategy", type=STRATEGY_CHOICE, default="none")
@click.option("--engine", type=click.Choice(ENGINES), default="auto")
@click.option("--consumption-policy", is_flag=True, help="Drop all partial matches after each output.")
@click.option("--trace", is_flag=True, help="Print the raw #-framed enumeration symbols.")
def cmd_run(query, schema, stream_path, fmt, strategy, engine, consumption_policy, trace):
    """Evaluate a query and print `position: {indices}` lines."""
    sch = _load_schema(schema, query)
    f = _load_formula(query, sch, strategy)
    if sch is None:
        _fail(EXIT_INPUT, "a schema is required to read the stream")
    if fmt == "auto":
        fmt = "csv" if str(stream_path).endswith(".csv") else "jsonl"
    try:
        s = load_stream(stream_path, sch, fmt)
    except (OSError, StreamError, SchemaError) as exc:
        _fail(EXIT_INPUT, f"cannot read stream: {exc}")
    if engine == "oracle":
        if consumption_policy or trace:
            _fail(EXIT_INPUT, "the oracle engine supports neither --consumption-policy nor --trace")
        if not analyze(f).well_formed:
            _fail(EXIT_NOT_WELL_FORMED, "formula is not well-formed: a filtered variable is not bound")
        log = evaluate(f, s, engine="oracle")
        for n in sorted(log):
            for ce in sorted(log[n], key=lambda c: c.ordered()):
                click.echo(f"{n}: {_format_positions(ce)}")
        return
    cq = _compile(f)
    eng = cq.engine(engine)
    for t in s:
        eng.step(t)
        n = eng.position
        if trace:
            if eng.algorithm == "naive":
                _fail(EXIT_INPUT, "--trace needs a node-based engine")
            symbols = list(eng.trace())
            if symbols:
                click.echo(f"{n}: " + " ".join(map(str, symbols)))
            got = bool(symbols)
        else:
            outs = sorted((tuple(sorted(p)) for p in eng.enumerate_raw()))
            for ce in outs:
                click.echo(f"{n}: {_format_positions(ce)}")
            got = bool(outs)
        if consumption_policy and got:
            eng.reset()


@main.command("bench")
@click.option("--query", default="Q1", help="Q1..Q6 or a query file over relations A..E.")
@click.option("--len", "length", type=int, default=2000)
@click.option("--dist", default="uniform", help="uniform, S2, or A=0.4,B=0.6,...")
@click.option("--mode", type=click.Choice(["stress", "throughput", "consumption"]), default="stress")
@click.option("--strategy", type=STRATEGY_CHOICE, default="none")
@click.option("--engine", type=click.Choice(["auto", "det", "ndet", "naive", "compiled"]), default="auto")
@click.option("--seed", type=int, default=0)
@click.option("--consumption-policy", is_flag=True, help="Same as --mode consumption.")
@click.option("--no-enumerate", is_flag=True, help="Skip output enumeration.")
def cmd_bench(query, length, dist, mode, strategy, engine, seed, consumption_policy, no_enumerate):
    """Run a synthetic benchmark and print a JSON report."""
    if consumption_policy:
        mode = "consumption"
    try:
        cfg = BenchConfig(
            query=query,
            length=length,
            dist=dist,
            mode=mode,
            strategy=normalize_strategy(strategy),
            seed=seed,
            engine=engine,
            enumerate=not no_enumerate,
        )
        cfg.probabilities()
    except BenchConfigError as exc:
        _fail(EXIT_INPUT, str(exc))
    except CelSyntaxError as exc:
        _fail(EXIT_PARSE, str(exc))
    try:
        report = run_bench(cfg)
    except NotWellFormedError as exc:
        _fail(EXIT_NOT_WELL_FORMED, str(exc))
    except NotUnaryError as exc:
        _fail(EXIT_NOT_UNARY, str(exc))
    except BenchConfigError as exc:
        _fail(EXIT_INPUT, str(exc))
    click.echo(report.to_json())


if __name__ == "__main__":
    main()
