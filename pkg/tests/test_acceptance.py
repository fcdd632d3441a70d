"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The corpus meshes are built once per session and deep-copied per run.
"""

import copy
import hashlib
import math
import random
import time
from collections import Counter
from decimal import Decimal, getcontext
from fractions import Fraction

import pytest

from batchmesh.baseline import ruppert_sequential
from batchmesh.cdt import build_cdt, build_delaunay
from batchmesh.cli import format_table
from batchmesh.corpus import corpus, small_angle_cluster, small_angle_fixture
from batchmesh.expandlist import (
    CompactionPolicy, ExpandHooks, TupleList, expand, sequential_worklist,
)
from batchmesh.meshio import write_metrics, write_node_ele
from batchmesh.parallel import ClaimTable, SequentialExecutor, ShuffledExecutor, ThreadExecutor
from batchmesh.predicates import incircle_sign
from batchmesh.pslg import Pslg, input_angles
from batchmesh.refine import (
    EngineConfig, QualityCriteria, circumcenter_priority, cavity_filter, claim_filter,
    compute_splitting_points, is_bad_triangle, locate_all, make_candidates, collect, refine,
    triangle_angles,
)
from batchmesh.rules import (
    RuleFlags, rule2_filter_beneficial, rule3_early_stop_beneficial, rule4_merge_beneficial,
    slowdown_percent,
)
from batchmesh.verify import check_all, check_cdt_brute

THETA = 20.0
STEINER_FACTOR = 1.3
TIME_LIMIT = 60.0
BRUTE_PER_BATCH_LIMIT = 1000
BRUTE_FINAL_LIMIT = 2000
SMALL_ANGLES = (10, 20, 30, 40, 50)


# ----------------------------------------------------------------- helpers

@pytest.fixture
def verdict(capsys):
    def say(n, ok, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    return say


def _cos_deg(deg, digits=50):
    """cos(deg) as a Decimal via its Taylor series."""
    getcontext().prec = digits + 10
    pi = Decimal("3.14159265358979323846264338327950288419716939937510582097494459")
    x = Decimal(deg) * pi / 180
    term, total, k = Decimal(1), Decimal(1), 0
    while True:
        k += 2
        term *= -x * x / (k * (k - 1))
        if abs(term) < Decimal(10) ** -(digits + 5):
            return total
        total += term


COS2_THETA = Fraction(_cos_deg(THETA)) ** 2


def angles_at_least(a, b, c, cos2=COS2_THETA):
    """True when every angle of (a, b, c) is >= theta, decided in rationals."""
    pts = [(Fraction(x), Fraction(y)) for x, y in (a, b, c)]
    sq = []
    for i in range(3):
        (px, py), (qx, qy) = pts[(i + 1) % 3], pts[(i + 2) % 3]
        sq.append((px - qx) ** 2 + (py - qy) ** 2)     # side opposite vertex i
    for i in range(3):
        opp, s1, s2 = sq[i], sq[(i + 1) % 3], sq[(i + 2) % 3]
        num = s1 + s2 - opp
        if num > 0 and num * num > 4 * cos2 * s1 * s2:
            return False
    return True


def count_below_theta(m, theta=THETA):
    """Triangles with an angle below theta.  Float angles decide clear
    cases and rationals decide the close ones."""
    failures = 0
    for t in m.triangles():
        if min(triangle_angles(m, t)) > theta + 1e-6:
            continue
        if not angles_at_least(*(m.xy[v] for v in m.tv[t])):
            failures += 1
    return failures


def batch_oracle(brute: bool):
    """on_batch hook collecting conformity/CDT violations after each batch."""
    errors = []

    def hook(m, outcome):
        errs = check_all(m)
        if brute:
            errs = errs + check_cdt_brute(m)
        errors.extend(errs)

    return hook, errors


def digest(m, report):
    node, ele = write_node_ele(m)
    h = hashlib.sha256((node + ele).encode())
    h.update(repr([(b.attempted, b.useful, b.extra) for b in report.batches]).encode())
    return h.hexdigest()


@pytest.fixture(scope="session")
def built():
    """name -> (pslg, CDT, build seconds)."""
    out = {}
    for e in corpus():
        t0 = time.perf_counter()
        m = build_cdt(e.pslg)
        out[e.name] = (e, m, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="session")
def baseline_steiner(built):
    q = QualityCriteria(THETA)
    return {name: ruppert_sequential(copy.deepcopy(m), q)[1].steiner for name, (_, m, _) in built.items()}


def run_checked(m, execution="sequential", threads=1, rules=None, brute=False):
    hook, errors = batch_oracle(brute)
    cfg = EngineConfig(quality=QualityCriteria(THETA), execution=execution, threads=threads,
                       rules=rules or RuleFlags(), on_batch=hook)
    t0 = time.perf_counter()
    m, report = refine(m, cfg.quality, cfg)
    return m, report, errors, time.perf_counter() - t0


def criteria_1_to_4(name, m, report, errors, baseline):
    """Failure messages for the quality, bad-area, oracle and Steiner checks."""
    bad = []
    if report.quality.bad_triangles or count_below_theta(m):
        bad.append(f"{name}: {report.quality.bad_triangles} bad triangles, min angle {report.quality.min_angle:.3f}")
    if report.quality.bad_area_percent != 0:
        bad.append(f"{name}: bad area {report.quality.bad_area_percent}%")
    errors = errors + check_all(m)
    if errors:
        bad.append(f"{name}: {len(errors)} oracle violations, e.g. {errors[0]}")
    if report.quality.steiner > STEINER_FACTOR * max(1, baseline):
        bad.append(f"{name}: {report.quality.steiner} Steiner vs baseline {baseline}")
    return bad


# ---------------------------------------------------------------- criteria

def test_corpus_shape(built):
    assert len(built) >= 10
    sizes = [len(e.pslg.points) for e, _, _ in built.values()]
    assert min(sizes) <= 200 and 5000 <= max(sizes) <= 10_000
    assert any(e.convex for e, _, _ in built.values()) and any(not e.convex for e, _, _ in built.values())
    for e, _, _ in built.values():
        assert all(ang >= 60 - 1e-9 for _, _, _, ang in input_angles(e.pslg)), e.name


def test_quality_bound(built, verdict):
    problems, worst_time, min_angle = [], 0.0, 90.0
    for name, (e, m0, build_s) in built.items():
        m, report, _, refine_s = run_checked(copy.deepcopy(m0))
        worst_time = max(worst_time, build_s + refine_s)
        min_angle = min(min_angle, report.quality.min_angle)
        if report.quality.bad_triangles:
            problems.append(f"{name}: {report.quality.bad_triangles} bad")
        if count_below_theta(m):
            problems.append(f"{name}: exact scan found angles below {THETA}")
        if build_s + refine_s >= TIME_LIMIT:
            problems.append(f"{name}: {build_s + refine_s:.1f} s")
    verdict(1, not problems, f"{len(built)} inputs, min angle {min_angle:.3f} deg, "
                             f"slowest {worst_time:.2f} s {problems[:3]}")
    assert not problems


def test_bad_area_and_small_angle_localisation(built, verdict):
    problems = []
    for name, (e, m0, _) in built.items():
        _, report, _, _ = run_checked(copy.deepcopy(m0))
        if report.quality.bad_area_percent != 0:
            problems.append(f"{name}: {report.quality.bad_area_percent}%")
    q = QualityCriteria(THETA)
    leftover = {}
    for angle in SMALL_ANGLES:
        for seed in range(3):
            pslg = small_angle_fixture(angle, n=40, seed=seed)
            m, report = refine(build_cdt(pslg), q, EngineConfig(iteration_cap=3000))
            cluster = small_angle_cluster(m, pslg)
            bad = [t for t in m.triangles() if is_bad_triangle(m, t, q)]
            leftover[angle] = leftover.get(angle, 0) + len(bad)
            stray = [t for t in bad if not set(m.tv[t]) & cluster]
            if stray:
                problems.append(f"{angle} deg seed {seed}: {len(stray)} bad triangles away from the apex")
    verdict(2, not problems, f"corpus bad area 0%; bad triangles left per apex angle {leftover} {problems[:3]}")
    assert not problems


def test_oracles_after_every_batch(built, verdict):
    problems, batches = [], 0
    for name, (e, m0, _) in built.items():
        brute = len(e.pslg.points) <= BRUTE_PER_BATCH_LIMIT
        m, report, errors, _ = run_checked(copy.deepcopy(m0), brute=brute)
        batches += report.n_batches
        if len(e.pslg.points) <= BRUTE_FINAL_LIMIT:
            errors = errors + check_cdt_brute(m)
        if errors:
            problems.append(f"{name}: {errors[:2]}")
    verdict(3, not problems, f"{batches} batches checked {problems[:3]}")
    assert not problems


def test_steiner_parity(built, baseline_steiner, verdict):
    ratios, problems = {}, []
    for name, (e, m0, _) in built.items():
        _, report, _, _ = run_checked(copy.deepcopy(m0))
        base = baseline_steiner[name]
        ratios[name] = report.quality.steiner / max(1, base)
        if report.quality.steiner > STEINER_FACTOR * max(1, base):
            problems.append(f"{name}: {report.quality.steiner} vs {base}")
    worst = max(ratios.values())
    verdict(4, not problems, f"worst Steiner ratio {worst:.3f} (limit {STEINER_FACTOR}) {problems[:3]}")
    assert not problems


def test_rules_and_ablation(built, baseline_steiner, verdict, tmp_path):
    # decision functions at their boundaries
    decisions_ok = (
        rule2_filter_beneficial(0.5, 0.9, 10, 2) and not rule2_filter_beneficial(0.5, 0.6, 10, 3)
        and rule3_early_stop_beneficial(0.2, 10, 3) and not rule3_early_stop_beneficial(0.2, 10, 2)
        and rule4_merge_beneficial(100, 100, 5, 4, 200, 5) and not rule4_merge_beneficial(100, 100, 5, 4, 200, 20)
        and all(rule2_filter_beneficial(0.5, 0.9, 10, ell) >= rule2_filter_beneficial(0.5, 0.9, 10, ell + 1)
                for ell in range(0, 20))
        and all(rule3_early_stop_beneficial(g / 10, 10, 5) >= rule3_early_stop_beneficial(g / 10 + 0.05, 10, 5)
                for g in range(1, 9))
    )
    problems = [] if decisions_ok else ["decision functions"]
    rows = []
    configs = {"all": RuleFlags()} | {f"no-rule{k}": RuleFlags.without(k) for k in range(1, 6)}
    for name, (e, m0, _) in built.items():
        base_time = None
        for cname, flags in configs.items():
            m, report, errors, secs = run_checked(copy.deepcopy(m0), rules=flags)
            problems += criteria_1_to_4(f"{name}/{cname}", m, report, errors, baseline_steiner[name])
            (tmp_path / f"{name}-{cname}.ndjson").write_text(write_metrics(report, flags))
            if cname == "all":
                base_time = secs
            rows.append({"input": name, "config": cname, "execution": "sequential", "time_s": secs,
                         "batches": report.n_batches, "steiner": report.quality.steiner,
                         "bad_area_percent": report.quality.bad_area_percent,
                         "valid": "yes" if not errors else "no",
                         "slowdown_percent": slowdown_percent(base_time, secs)})
    table = format_table(rows)
    (tmp_path / "slowdown.txt").write_text(table)
    assert "slowdown_percent" in table.splitlines()[0]
    verdict(5, not problems, f"{len(rows)} ablation runs {problems[:3]}")
    print(table)
    assert not problems


def _closure_instance(rng):
    n = rng.randint(5, 60)
    graph = {v: rng.sample(range(n), rng.randint(0, 3)) for v in range(n)}
    seen = set()

    def predicate(v):
        return v not in seen

    def op_true(v):
        seen.add(v)
        return list(graph[v]), True

    def reset():
        seen.clear()

    return [rng.randrange(n)], (predicate, op_true, lambda v: ([], False)), reset


def _claim_instance(rng):
    n = rng.randint(5, 40)
    graph = {v: rng.sample(range(v + 1, n), min(rng.randint(0, 3), n - v - 1)) for v in range(n)}
    cap = rng.randint(1, 5)
    marks = ClaimTable(concurrent=True)

    def predicate(item):
        return item[1] < cap

    def op_true(item):
        v, d = item
        for w in graph[v]:
            marks.claim(w, (d, v))
        return [(w, d + 1) for w in graph[v]], True

    return [(v, 0) for v in rng.sample(range(n), min(3, n))], (predicate, op_true, lambda x: ([], x[0] % 2 == 0)), \
        marks.clear


def _cavity_instance(rng):
    m = build_delaunay([(rng.random(), rng.random()) for _ in range(rng.randint(50, 250))])
    p = (rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9))
    visited = set()

    def predicate(t):
        return t not in visited and incircle_sign(*(m.xy[v] for v in m.tv[t]), p) > 0

    def op_true(t):
        visited.add(t)
        return [u for u in m.tn[t] if u >= 0 and u not in visited], True

    return [m.locate(p, m.triangles()[0]).tri], (predicate, op_true, lambda t: ([], False)), visited.clear


def test_expand_equivalence(verdict):
    rng = random.Random(2024)
    makers = [_closure_instance] * 40 + [_claim_instance] * 30 + [_cavity_instance] * 30
    failures = 0
    for k, make in enumerate(makers):
        seeds, hooks, reset = make(rng)
        reset()
        oracle = Counter(sequential_worklist(seeds, *hooks))
        assert sum(oracle.values()) <= 1000
        runs = [(SequentialExecutor(), CompactionPolicy(0)), (SequentialExecutor(), CompactionPolicy(enabled=False))]
        if make is _claim_instance:
            runs += [(ShuffledExecutor(k), CompactionPolicy(3)), (ThreadExecutor(4, min_chunk=1), CompactionPolicy(0))]
        for executor, policy in runs:
            reset()
            tl = expand(TupleList.of(seeds), ExpandHooks(*hooks), policy, executor)
            if Counter(tl.valid_items()) != oracle:
                failures += 1
    verdict(6, failures == 0, f"{len(makers)} hook instantiations, {failures} mismatches")
    assert failures == 0


def _claim_stress(rng):
    """Claim and cavity filtering on random candidates; survivors must not
    depend on execution order."""
    m = build_delaunay([(rng.random(), rng.random()) for _ in range(400)])
    segs, tris = collect(m, QualityCriteria(25), RuleFlags())
    # few distinct measures so that many keys differ only in the tiebreak
    measure = [rng.choice((1.0, 2.0, 3.0)) for _ in range(len(segs) + len(tris))]
    outcomes = []
    for executor in [SequentialExecutor()] + [ShuffledExecutor(s) for s in range(10)] + [ThreadExecutor(8, 1)]:
        cands = locate_all(m, compute_splitting_points(m, make_candidates(m, segs, tris)))
        for c in cands:
            if c.kind == "tri":
                c.priority = circumcenter_priority(measure[c.cid], c.cid)
        claim_filter(m, cands, executor)
        cavity_filter(m, cands, 8, executor)
        outcomes.append(sorted(c.cid for c in cands if c.alive))
    return all(o == outcomes[0] for o in outcomes)


def test_determinism_and_parallel_soundness(built, baseline_steiner, verdict):
    problems = []
    for name, (e, _, _) in built.items():
        digests = set()
        for _ in range(5):
            m, report = refine(build_cdt(e.pslg), QualityCriteria(THETA))
            digests.add(digest(m, report))
        if len(digests) != 1:
            problems.append(f"{name}: {len(digests)} distinct sequential outputs")
    runs = 0
    for name, (e, m0, _) in built.items():
        for threads in (2, 4, 8):
            m, report, errors, _ = run_checked(copy.deepcopy(m0), execution="parallel", threads=threads)
            problems += criteria_1_to_4(f"{name}/parallel-{threads}", m, report, errors, baseline_steiner[name])
            runs += 1
    rng = random.Random(7)
    stress_ok = all(_claim_stress(rng) for _ in range(5))
    if not stress_ok:
        problems.append("claim resolution depends on interleaving")
    verdict(7, not problems, f"5 sequential runs per input identical; {runs} parallel runs; "
                             f"interleaving stress {'ok' if stress_ok else 'failed'} {problems[:3]}")
    assert not problems


def dense_workload():
    """Unit square with a few interior points and an edge-length bound, so
    almost every triangle is bad for most of the run."""
    rng = random.Random(0)
    pts = [(0, 0), (1, 0), (1, 1), (0, 1)] + [(rng.random(), rng.random()) for _ in range(200)]
    return Pslg(pts, [(0, 1), (1, 2), (2, 3), (3, 0)]), QualityCriteria(THETA, 0.0028)


@pytest.mark.slow
def test_parallel_speedup_report(verdict):
    import os

    pslg, q = dense_workload()
    base = build_cdt(pslg)
    times, sizes = {}, {}
    for execution, threads in (("sequential", 1), ("parallel", 8)):
        m = copy.deepcopy(base)
        t0 = time.perf_counter()
        m, report = refine(m, q, EngineConfig(quality=q, execution=execution, threads=threads))
        times[execution] = time.perf_counter() - t0
        sizes[execution] = m.n_vertices
        assert report.quality.bad_triangles == 0
    speedup = times["sequential"] / times["parallel"]
    ok = speedup >= 2.0 and min(sizes.values()) >= 3 * 10 ** 5
    # report-only: a miss is logged, not fatal
    verdict(8, ok, f"(report-only) {sizes['sequential']} vertices, sequential {times['sequential']:.1f} s, "
                   f"8 executors {times['parallel']:.1f} s, speedup {speedup:.2f}x on {os.cpu_count()} CPU(s)")
    assert min(sizes.values()) >= 3 * 10 ** 5
