"""Acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL summary that is printed at the end
of the pytest run (see ``conftest.py``).  Running this file directly prints
the same lines without pytest.
"""

import functools
import os
import shutil
import subprocess
import sys
import time

import numpy as np

from wep.epcheck import full_report, generate_instance, random_pd
from wep.factor import (
    ep_block_decomposition,
    factor_parts_wmp,
    full_rank_factorize,
    reverse_order_wmp,
)
from wep.hermitian import NormContext, Weight, exp_deviation, is_hermitian_weighted
from wep.matcore import DEFAULT_TOL, op_norm
from wep.wmp import (
    GroupInverseError,
    IdempotentWitness,
    double_dagger_residual,
    group_inverse,
    wmp_from_idempotents,
    wmp_inverse,
)

RESULTS = {}


def record(num, title, ok, detail):
    line = f"criterion {num} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    RESULTS[num] = line
    return line


def _crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _rel(x, y, scale):
    return op_norm(x - y) / (1.0 + op_norm(scale))


# ---------------------------------------------------------------------------
# corpora

@functools.lru_cache(maxsize=None)
def wmp_corpus(count=500, seed=101):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        m, n = (int(x) for x in rng.integers(1, 9, size=2))
        r = int(rng.integers(0, min(m, n) + 1))
        a = _crandn(rng, m, r) @ _crandn(rng, r, n) if r else np.zeros((m, n), complex)
        e = Weight.from_matrix(random_pd(m, rng))
        f = Weight.from_matrix(random_pd(n, rng))
        out.append((a, e, f))
    return tuple(out)


def ep_plan(i):
    n = 2 + i % 7
    ep = i % 2 == 0
    r = (i // 2) % (n + 1) if ep else 1 + (i // 2) % (n - 1)
    return n, r, ep, (i // 2) % 2 == 1


@functools.lru_cache(maxsize=None)
def ep_corpus(count=320, seed=2024):
    out = []
    for i in range(count):
        n, r, ep, general = ep_plan(i)
        inst = generate_instance(n, r, ep, [seed, i], general=general)
        out.append((inst, r, ep))
    return tuple(out)


# ---------------------------------------------------------------------------
# criteria

def criterion_1():
    corpus = wmp_corpus()
    t0 = time.perf_counter()
    worst_cond, worst_unique = 0.0, 0.0
    for a, e, f in corpus:
        res = wmp_inverse(a, e, f)
        worst_cond = max(worst_cond, res.max_residual if res.valid else np.inf)
        s = res.pinv
        again = wmp_from_idempotents(a, IdempotentWitness(a @ s, s @ a, e, f))
        worst_unique = max(worst_unique, _rel(again.pinv, s, s))
    elapsed = time.perf_counter() - t0
    ok = worst_cond <= 1e-10 and worst_unique <= 1e-9 and elapsed <= 10.0
    return record(1, "weighted MP validity", ok,
                  f"{len(corpus)} instances, max condition residual {worst_cond:.2e} (<= 1e-10), "
                  f"max uniqueness gap {worst_unique:.2e} (<= 1e-9), {elapsed:.2f}s (<= 10s)"), ok


def criterion_2():
    worst = max(double_dagger_residual(a, e, f) for a, e, f in wmp_corpus())
    ok = worst <= 1e-9
    return record(2, "involution with swapped weights", ok,
                  f"max relative residual {worst:.2e} (<= 1e-9)"), ok


def criterion_3(count=300, seed=303):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(1, 9))
        r = int(rng.integers(1, n + 1))
        a = _crandn(rng, n, r) @ _crandn(rng, r, n)
        fr = full_rank_factorize(a)
        e = Weight.from_matrix(random_pd(n, rng))
        f = Weight.from_matrix(random_pd(fr.r, rng))
        h = Weight.from_matrix(random_pd(n, rng))
        a_dag = wmp_inverse(a, e, h).require_valid()
        # factor inverses computed on their own, not through a_dag
        b_dag = wmp_inverse(fr.b, e, f).require_valid()
        c_dag = wmp_inverse(fr.c, f, h).require_valid()
        worst = max(worst, _rel(reverse_order_wmp(fr, b_dag, c_dag), a_dag, a_dag))
        parts = factor_parts_wmp(a, fr, e, f, h, a_dag=a_dag)
        worst = max(worst, _rel(parts.b_dag, b_dag, b_dag), _rel(parts.c_dag, c_dag, c_dag))
    ok = worst <= 1e-9
    return record(3, "reverse-order law", ok,
                  f"{count} instances, max relative residual {worst:.2e} (<= 1e-9)"), ok


def criterion_4():
    t0 = time.perf_counter()
    corpus = ep_corpus()
    disagreements, misclassified, statements = 0, 0, 0
    for i, (inst, r, ep) in enumerate(corpus):
        rng = np.random.default_rng([2024, i, 1])
        inner = Weight.from_matrix(random_pd(r, rng)) if r else None
        rep = full_report(inst.a, inst.e, inst.f, inner=inner)
        disagreements += len(rep.disagreements)
        misclassified += rep.direct != ep
        statements += len(rep.statements)
    elapsed = time.perf_counter() - t0
    n_ep = sum(ep for _, _, ep in corpus)
    ok = (len(corpus) >= 300 and disagreements == 0 and misclassified == 0 and elapsed <= 60.0
          and n_ep * 2 == len(corpus))
    return record(4, "equivalence master property", ok,
                  f"{len(corpus)} instances ({n_ep} EP), {statements} verdicts, "
                  f"{disagreements} disagreements, {misclassified} misclassified, "
                  f"{elapsed:.2f}s (<= 60s)"), ok


def criterion_5():
    worst, failures, count = 0.0, 0, 0
    for inst, _, ep in ep_corpus():
        if not ep:
            continue
        count += 1
        blk = ep_block_decomposition(inst.a, inst.e, inst.f)
        n, k = inst.a.shape[0], blk.t1.shape[0]
        mid = np.zeros((n, n), dtype=complex)
        mid[:k, :k] = blk.t1
        worst = max(worst, _rel(blk.j @ mid @ np.linalg.inv(blk.j), inst.a, inst.a))
        good = (blk.checks["t1 invertible"][0] and blk.checks["Q1 hermitian in A^e"][0]
                and blk.checks["Q2 hermitian in A^f"][0])
        failures += not good
    ok = worst <= 1e-9 and failures == 0
    return record(5, "block decomposition", ok,
                  f"{count} EP instances, max reconstruction residual {worst:.2e} (<= 1e-9), "
                  f"{failures} with a failed invertibility/hermitian condition"), ok


def criterion_6(extra_index2=60):
    worst, count = 0.0, 0
    for inst, _, ep in ep_corpus():
        if not ep:
            continue
        count += 1
        s = wmp_inverse(inst.a, inst.e, inst.f).require_valid()
        worst = max(worst, _rel(group_inverse(inst.a), s, s))
    index2 = [inst for inst, _, ep in ep_corpus()
              if not ep and np.linalg.matrix_rank(inst.a @ inst.a) < np.linalg.matrix_rank(inst.a)]
    for i in range(extra_index2):
        n = 2 + i % 7
        index2.append(generate_instance(n, 1 + i % (n - 1), False, [606, i], general=i % 2 == 1,
                                        kind="index2"))
    true_verdicts, group_exists = 0, 0
    for inst in index2:
        try:
            group_inverse(inst.a)
            group_exists += 1
        except GroupInverseError:
            pass
        rep = full_report(inst.a, inst.e, inst.f)
        true_verdicts += sum(s.verdict for s in rep.statements) + rep.direct
    ok = worst <= 1e-9 and true_verdicts == 0 and group_exists == 0
    return record(6, "group-inverse coincidence", ok,
                  f"{count} EP instances, max |a# - a+| {worst:.2e} (<= 1e-9); "
                  f"{len(index2)} index-2 instances, {true_verdicts} true verdicts, "
                  f"{group_exists} group inverses found"), ok


def criterion_7(count=400, seed=707):
    rng = np.random.default_rng(seed)
    ctx = NormContext("l2")
    herm_worst, nonherm_best, disagree = 0.0, np.inf, 0
    for i in range(count):
        n = 1 + i % 6
        w = Weight.from_matrix(random_pd(n, rng))
        m = _crandn(rng, n, n)
        y = (m + m.conj().T) / 2
        label = i % 2 == 0
        if not label:
            y = y + rng.uniform(0.05, 1.0) * op_norm(y) * _crandn(rng, n, n) / np.sqrt(n)
        x = w.u_half_inv @ y @ w.u_half
        # sampled exp criterion on the weighted element
        dev = exp_deviation(w.transform(x), ctx)
        sampled = dev <= DEFAULT_TOL.herm_abs
        # exact congruence criterion u^{-1} x* u = x
        exact = is_hermitian_weighted(x, w, ctx).congruence_residual <= DEFAULT_TOL.residual_rel
        disagree += sampled != exact or exact != label
        if label:
            herm_worst = max(herm_worst, dev)
        else:
            nonherm_best = min(nonherm_best, dev)
    ok = disagree == 0 and herm_worst <= 1e-7 and nonherm_best >= 1e-3
    return record(7, "hermitian detector concordance (l2)", ok,
                  f"{count} labeled instances, {disagree} disagreements, "
                  f"max hermitian deviation {herm_worst:.2e} (<= 1e-7), "
                  f"min non-hermitian deviation {nonherm_best:.2e} (>= 1e-3)"), ok


def _fuzz_cmd():
    exe = shutil.which("wep")
    base = [exe] if exe else [sys.executable, "-m", "wep.cli"]
    return base + ["fuzz", "--seed", "42", "--trials", "100", "--dim", "6"]


def criterion_8():
    env = {k: v for k, v in os.environ.items() if k != "WEP_TOL"}
    runs = [subprocess.run(_fuzz_cmd(), capture_output=True, env=env, timeout=600) for _ in range(2)]
    same = runs[0].stdout == runs[1].stdout
    codes = [r.returncode for r in runs]
    ok = same and codes == [0, 0] and len(runs[0].stdout) > 0
    return record(8, "fuzz determinism", ok,
                  f"`wep fuzz --seed 42 --trials 100 --dim 6` twice: "
                  f"{'byte-identical' if same else 'DIFFERENT'} ({len(runs[0].stdout)} bytes), "
                  f"exit codes {codes}"), ok


# ---------------------------------------------------------------------------
# pytest entry points

def _check(fn):
    line, ok = fn()
    assert ok, line


def test_criterion_1_weighted_mp_validity():
    _check(criterion_1)


def test_criterion_2_swapped_weight_involution():
    _check(criterion_2)


def test_criterion_3_reverse_order_law():
    _check(criterion_3)


def test_criterion_4_equivalence_master_property():
    _check(criterion_4)


def test_criterion_5_block_decomposition():
    _check(criterion_5)


def test_criterion_6_group_inverse_coincidence():
    _check(criterion_6)


def test_criterion_7_hermitian_detector_concordance():
    _check(criterion_7)


def test_criterion_8_fuzz_determinism():
    _check(criterion_8)


if __name__ == "__main__":
    fns = [criterion_1, criterion_2, criterion_3, criterion_4,
           criterion_5, criterion_6, criterion_7, criterion_8]
    results = [fn() for fn in fns]
    for line, _ in results:
        print(line)
    sys.exit(0 if all(ok for _, ok in results) else 1)
