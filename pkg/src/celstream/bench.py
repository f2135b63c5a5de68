"""Synthetic streams and the benchmark harness."""

from __future__ import annotations

import json
import random
import statistics
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from . import formula as F
from .events import EventTuple, StreamPrefix, load_schema
from .parser import parse_formula
from .pipeline import compile_query

QUERY_IDS = ("Q1", "Q2", "Q3", "Q4", "Q5", "Q6")
TYPES = ("A", "B", "C", "D", "E")
MODES = ("stress", "throughput", "consumption")

# Weights as published; they add up to 1.2 and are normalized before use.
S2_WEIGHTS = {"A": 4, "B": 3, "C": 2, "D": 1, "E": 2}


class BenchConfigError(ValueError):
    pass


def _data_text(name: str) -> str:
    return resources.files("celstream").joinpath("data").joinpath(name).read_text()


def abcde_schema():
    return load_schema(_data_text("abcde.schema"))


def query_text(query: str) -> str:
    """Text of a bundled query id, or the contents of a query file."""
    if query.upper() in QUERY_IDS:
        return _data_text(f"{query.lower()}.cel")
    path = Path(query)
    if not path.exists():
        raise BenchConfigError(f"unknown query {query!r}")
    return path.read_text()


def query_formula(query: str) -> F.Formula:
    return parse_formula(query_text(query))


def query_types(f: F.Formula) -> list[str]:
    """Relations the query mentions, in order of first appearance."""
    out: list[str] = []
    for g in F.walk(f):
        if isinstance(g, F.Assign) and g.relation not in out:
            out.append(g.relation)
    return out


def trigger_type(f: F.Formula) -> str:
    """Relation of the last definition in the outer sequence."""
    while True:
        if isinstance(f, (F.Seq,)):
            f = f.rhs
        elif isinstance(f, (F.Filter, F.Select)):
            f = f.body
        elif isinstance(f, F.Assign):
            return f.relation
        else:
            raise BenchConfigError("query does not end in a single definition")


def parse_dist(dist: str | Mapping[str, float], types: list[str] | tuple[str, ...] = TYPES) -> dict[str, float]:
    """``uniform``, ``S2``, ``A=0.5,B=0.5`` or a mapping; result sums to 1."""
    if isinstance(dist, Mapping):
        weights = dict(dist)
    elif dist == "uniform":
        weights = {t: 1.0 for t in types}
    elif dist.upper() == "S2":
        weights = dict(S2_WEIGHTS)
    else:
        weights = {}
        for part in dist.split(","):
            k, _, v = part.partition("=")
            try:
                weights[k.strip()] = float(v)
            except ValueError:
                raise BenchConfigError(f"bad distribution entry {part!r}") from None
    if not weights or any(w < 0 for w in weights.values()) or sum(weights.values()) <= 0:
        raise BenchConfigError("distribution weights must be nonnegative with a positive sum")
    total = sum(weights.values())
    return {k: w / total for k, w in weights.items()}


@dataclass
class BenchConfig:
    query: str = "Q1"
    length: int = 2000
    dist: str | dict = "uniform"
    mode: str = "stress"
    strategy: str | None = None
    seed: int = 0
    engine: str = "auto"
    enumerate: bool = True

    def __post_init__(self):
        if self.length < 1:
            raise BenchConfigError("stream length must be at least 1")
        if self.mode not in MODES:
            raise BenchConfigError(f"mode must be one of {', '.join(MODES)}")
        if self.engine not in ("auto", "det", "ndet", "naive", "compiled"):
            raise BenchConfigError(f"unsupported bench engine {self.engine!r}")

    def probabilities(self) -> dict[str, float]:
        types = query_types(query_formula(self.query)) if self.mode == "stress" else list(TYPES)
        return parse_dist(self.dist, types)


def gen_stream(config: BenchConfig) -> StreamPrefix:
    """Seeded random stream.

    In stress mode types are drawn over the query's relations, the trigger
    relation is replaced by ``E`` everywhere but the last event, and the
    last event is the trigger.
    """
    rng = random.Random(config.seed)
    probs = config.probabilities()
    names = list(probs)
    weights = [probs[k] for k in names]
    n = config.length
    if config.mode == "stress":
        trig = trigger_type(query_formula(config.query))
        draws = rng.choices(names, weights, k=n - 1)
        types = ["E" if t == trig else t for t in draws] + [trig]
    else:
        types = rng.choices(names, weights, k=n)
    cache = {t: EventTuple(t) for t in set(types)}
    return StreamPrefix([cache[t] for t in types])


def count_pattern(types: list[str], pattern: list[str], end: int | None = None) -> int:
    """Occurrences of ``pattern`` as a subsequence of ``types[:end]`` ending at ``end``.

    The last pattern symbol must sit exactly at index ``end`` (default: last index).
    """
    if end is None:
        end = len(types) - 1
    if not pattern or types[end] != pattern[-1]:
        return 0
    k = len(pattern) - 1
    ways = [1] + [0] * k
    for t in types[:end]:
        for j in range(k, 0, -1):
            if pattern[j - 1] == t:
                ways[j] += ways[j - 1]
    return ways[k]


def sequence_pattern(f: F.Formula) -> list[str] | None:
    """Relations of a plain sequence of definitions, else None."""
    out: list[str] = []

    def go(g) -> bool:
        if isinstance(g, F.Seq):
            return go(g.lhs) and go(g.rhs)
        if isinstance(g, F.Assign):
            out.append(g.relation)
            return True
        return False

    return out if go(f) else None


@dataclass
class BenchReport:
    query: str
    mode: str
    strategy: str | None
    engine: str
    seed: int
    events: int
    processing_time: float
    enumeration_time: float
    peak_memory_bytes: int
    nodes: int
    throughput: float
    output_count: int
    step_latency_deciles: list[float] = field(default_factory=list)
    resets: int = 0
    expected_count: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def decile_medians(latencies: list[float]) -> list[float]:
    """Median of each tenth of the latency series, in stream order."""
    n = len(latencies)
    if n == 0:
        return []
    out = []
    for d in range(10):
        chunk = latencies[d * n // 10 : (d + 1) * n // 10]
        out.append(statistics.median(chunk) if chunk else 0.0)
    return out


def run_bench(config: BenchConfig, stream: StreamPrefix | None = None) -> BenchReport:
    f = query_formula(config.query)
    if config.strategy is not None:
        f = F.Select(config.strategy.upper(), f)
    cq = compile_query(f)
    eng = cq.engine(config.engine)
    s = stream if stream is not None else gen_stream(config)
    clock = time.perf_counter
    step = eng.step
    latencies: list[float] = []
    proc = enum_t = 0.0
    outputs = resets = 0
    consume = config.mode == "consumption"
    for t in s:
        t0 = clock()
        step(t)
        dt = clock() - t0
        latencies.append(dt)
        proc += dt
        if config.enumerate or consume:
            t0 = clock()
            got = 0
            for _ in eng.enumerate_raw():
                got += 1
            enum_t += clock() - t0
            outputs += got
            if consume and got:
                eng.reset()
                resets += 1
    expected = None
    pattern = sequence_pattern(query_formula(config.query))
    if config.mode == "stress" and config.strategy is None and pattern is not None:
        expected = count_pattern([t.type_name for t in s], pattern)
    return BenchReport(
        query=config.query,
        mode=config.mode,
        strategy=config.strategy,
        engine=eng.algorithm,
        seed=config.seed,
        events=len(s),
        processing_time=proc,
        enumeration_time=enum_t,
        peak_memory_bytes=eng.memory_bytes,
        nodes=eng.nodes_created,
        throughput=len(s) / proc if proc > 0 else float("inf"),
        output_count=outputs,
        step_latency_deciles=decile_medians(latencies),
        resets=resets,
        expected_count=expected,
    )
