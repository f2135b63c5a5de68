"""Acceptance gate: one test per criterion, each reporting a pass/fail line."""

import random
import time

import pytest

from celstream import formula as F
from celstream.analysis import analyze
from celstream.automata import enumerate_runs, io_determinize, is_io_deterministic
from celstream.bench import BenchConfig, count_pattern, gen_stream, query_formula, run_bench, sequence_pattern
from celstream.events import StreamPrefix
from celstream.oracle import apply_selection, leq_last, leq_next, oracle_eval, oracle_eval_at
from celstream.pipeline import compile_query, evaluate
from celstream.rewrite import is_lp_normal_form, to_dnf, to_lp_normal_form, to_safe
from celstream.runtime import EnumTrace

from conftest import ces
from generators import random_cea, random_instance, random_stream

STRATEGY_PATHS = {
    None: ("auto", "det", "ndet", "compiled", "naive"),
    "STRICT": ("auto", "compiled", "naive"),
    "NXT": ("auto", "compiled", "naive"),
    "LAST": ("auto", "compiled", "naive"),
    "MAX": ("auto", "compiled", "naive"),
}


def test_running_example(queries, fig1, report_criterion):
    t0 = time.perf_counter()

    def outs(f, strategy=None, engine="auto"):
        log = evaluate(f, fig1, strategy=strategy, engine=engine)
        return set().union(*log.values()) if log else set(), log

    fire = ces({1, 2}, {1, 8}, {5, 8})
    checks = []
    for engine in ("auto", "det", "ndet", "compiled", "naive"):
        checks += [
            outs(queries["fire"], engine=engine)[0] == fire,
            outs(queries["fire_any_order"], engine=engine)[0] == fire | ces({2, 5}),
            outs(queries["humidity_rise"], engine=engine)[0] == ces({3, 4, 6, 7}, {3, 6, 7}, {3, 4, 7}),
            outs(queries["fire"], "STRICT", engine)[0] == ces({1, 2}),
            outs(queries["fire"], "NXT", engine)[1][8] == ces({1, 8}),
            outs(queries["fire"], "LAST", engine)[1][8] == ces({5, 8}),
            outs(queries["humidity_rise"], "MAX", engine)[0] == ces({3, 4, 6, 7}),
        ]
    elapsed = time.perf_counter() - t0
    ok = all(checks) and elapsed < 1.0
    report_criterion(1, ok, f"{sum(checks)}/{len(checks)} running-example checks, {elapsed:.2f}s")
    assert ok


def test_oracle_equivalence(report_criterion):
    t0 = time.perf_counter()
    mismatches = []
    runs = 0
    for seed in range(1000):
        f, s = random_instance(seed)
        cq = compile_query(f)
        assert cq.report.unary and analyze(cq.safe).safe
        raw = oracle_eval_at(f, s)
        for strategy, modes in STRATEGY_PATHS.items():
            want = {}
            for n, group in raw.items():
                kept = group if strategy is None else apply_selection(strategy, group)
                if kept:
                    want[n] = kept
            target = cq if strategy is None else compile_query(F.Select(strategy, f))
            for mode in modes:
                runs += 1
                if target.engine(mode).run(s) != want:
                    mismatches.append((seed, strategy, mode))
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 300
    report_criterion(2, ok, f"1000 instances, {runs} engine runs, {len(mismatches)} mismatches, {elapsed:.1f}s")
    assert ok, mismatches[:10]


def test_rewriting_soundness(report_criterion):
    bad = []
    for seed in range(10_000, 10_500):
        f, s = random_instance(seed)
        want = oracle_eval(f, s)
        dnf, safe, lp = to_dnf(f), to_safe(f), to_lp_normal_form(f)
        if oracle_eval(dnf, s) != want or oracle_eval(safe, s) != want or oracle_eval(lp, s) != want:
            bad.append((seed, "semantics"))
        if not analyze(safe).safe or not is_lp_normal_form(lp) or not analyze(lp).safe:
            bad.append((seed, "shape"))
    report_criterion(3, not bad, f"500 instances, {len(bad)} mismatches")
    assert not bad, bad[:10]


def test_order_axioms(report_criterion):
    rng = random.Random(2024)

    def ce():
        return frozenset(rng.sample(range(16), rng.randint(1, 6)))

    violations = 0
    for _ in range(100_000):
        a, b, c = ce(), ce(), ce()
        for leq in (leq_next, leq_last):
            if not leq(a, a):
                violations += 1
            ab, ba = leq(a, b), leq(b, a)
            if not (ab or ba) or (ab and ba and a != b):
                violations += 1
            if ab and leq(b, c) and not leq(a, c):
                violations += 1
    report_criterion(4, violations == 0, f"100000 triples, {violations} violations")
    assert violations == 0


def test_constant_update_time(report_criterion):
    cfg = BenchConfig(query="Q2", length=100_001, seed=11, enumerate=False)
    s = gen_stream(cfg)
    held = StreamPrefix(list(s)[:-1])
    det = run_bench(cfg, stream=held)
    first, last = det.step_latency_deciles[0], det.step_latency_deciles[-1]
    naive_cfg = BenchConfig(query="Q2", length=600, seed=11, engine="naive", enumerate=False)
    naive = run_bench(naive_cfg, stream=StreamPrefix(list(held)[:600]))
    n_first, n_last = naive.step_latency_deciles[0], naive.step_latency_deciles[-1]
    flat = last <= 2 * first
    grows = n_last >= 5 * n_first and n_last > 10 * last
    report_criterion(
        5,
        flat and grows,
        f"det median step {first * 1e6:.2f}us -> {last * 1e6:.2f}us (ratio {last / first:.2f}); "
        f"naive {n_first * 1e6:.2f}us -> {n_last * 1e6:.2f}us (ratio {n_last / n_first:.0f})",
    )
    assert flat and grows


NODE_BOUND = 1.0


def test_memory_linearity(report_criterion):
    worst = 0.0
    details = []
    ok = True
    n = 100_000
    for qid in ("Q1", "Q2", "Q3", "Q4", "Q5", "Q6"):
        cfg = BenchConfig(query=qid, length=n + 1, seed=11, enumerate=False)
        held = StreamPrefix(list(gen_stream(cfg))[:-1])
        rep = run_bench(cfg, stream=held)
        states = compile_query(query_formula(qid)).automaton.n_states
        c = rep.nodes / (n * states)
        worst = max(worst, c)
        ok = ok and rep.nodes <= NODE_BOUND * n * states
        details.append(f"{qid}={c:.3f}")
    report_criterion(6, ok, f"nodes/(n*|A|) at n=1e5: {' '.join(details)}; bound c={NODE_BOUND}")
    assert ok


def test_constant_delay_enumeration(report_criterion):
    cfg = BenchConfig(query="Q2", length=800, seed=7)
    eng = compile_query(query_formula("Q2")).engine("auto")
    s = gen_stream(cfg)
    for t in s:
        eng.step(t)
    rec = EnumTrace()
    symbols = 0
    for _ in eng.trace(rec):
        symbols += 1
    ok = rec.events >= 1_000_000 and rec.max_gap <= 8
    report_criterion(
        7, ok, f"{rec.events} complex events, {symbols} symbols, max ops between symbols {rec.max_gap} (bound 8)"
    )
    assert ok


def test_stress_output_counts(report_criterion):
    results = []
    ok = True
    for qid, lo, hi in (("Q1", 10**5, 10**6), ("Q2", 10**7, 10**8)):
        cfg = BenchConfig(query=qid, length=2000, seed=1)
        s = gen_stream(cfg)
        expected = count_pattern([t.type_name for t in s], sequence_pattern(query_formula(qid)))
        t0 = time.perf_counter()
        rep = run_bench(cfg, stream=s)
        elapsed = time.perf_counter() - t0
        good = rep.output_count == expected and lo <= expected < hi and (qid != "Q2" or rep.enumeration_time < 60)
        ok = ok and good
        results.append(f"{qid}: {rep.output_count} (counter {expected}, enumeration {rep.enumeration_time:.1f}s)")
    report_criterion(8, ok, "; ".join(results))
    assert ok


def test_io_determinization(report_criterion):
    bad = 0
    for seed in range(200):
        rng = random.Random(seed)
        a = random_cea(rng, 5, 3)
        d = io_determinize(a)
        if not is_io_deterministic(d):
            bad += 1
            continue
        for _ in range(3):
            s = random_stream(rng, 6, 1)
            if any(enumerate_runs(a, s, n) != enumerate_runs(d, s, n) for n in range(len(s))):
                bad += 1
                break
    report_criterion(9, bad == 0, f"200 automata, {bad} mismatches")
    assert bad == 0
