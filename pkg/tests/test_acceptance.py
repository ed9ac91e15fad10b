"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import random
import sys
import time

import pytest

from weylore.errors import NotStabilized, ResourceCap
from weylore.hilbert import ModulePresentation, bezout_bound, bezout_check, hilbert_values
from weylore.matops import (UNSOLVABLE, LinearSystem, OpMatrix, left_quasi_inverse, mat_mul,
                            quasi_inverse_bound, skew_rank, trapezoid_reduce)
from weylore.ore import (FractionContext, OreFraction, ansatz_budget, frac_add, frac_eq, frac_mul,
                         syzygy, syzygy_bound)
from weylore.solver import (SOLVED, UNDECIDED_AT_CAP, MAX_ANSATZ, ansatz_solve, decide_solve,
                            degree_bounds, eliminate_gamma, verify_solution)
from weylore.weyl import WeylAlgebra, apply_to_polynomial

_printer = None


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    global _printer
    _printer = capsys
    yield
    _printer = None


def report(n, ok, detail, started):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} ({detail}; {time.time() - started:.1f}s)"
    if _printer is not None:
        with _printer.disabled():
            print("\n" + line)
    else:
        print(line)
    assert ok, line


def _subsets(m):
    return [frozenset(k for k in range(1, m + 1) if mask >> (k - 1) & 1) for mask in range(2**m)]


# 1 ------------------------------------------------------------------------------------------------

def _random_poly(rng, m):
    return {tuple(rng.randint(0, 5) for _ in range(m)): rng.randint(-9, 9) or 1
            for _ in range(rng.randint(1, 4))}


def test_criterion_1_multiplication_oracle():
    t0 = time.time()
    rng = random.Random(1)
    bad = 0
    for _ in range(500):
        m = rng.randint(1, 3)
        A = WeylAlgebra(m)
        a = A.random_element(rng, max_degree=4, nterms=4, coeff_bound=5)
        b = A.random_element(rng, max_degree=4, nterms=4, coeff_bound=5)
        ab = a * b
        for _ in range(5):
            f = _random_poly(rng, m)
            if apply_to_polynomial(ab, f) != apply_to_polynomial(a, apply_to_polynomial(b, f)):
                bad += 1
    report(1, bad == 0 and time.time() - t0 < 120, f"500 pairs x 5 polynomials, {bad} mismatches", t0)


# 2 ------------------------------------------------------------------------------------------------

def test_criterion_2_syzygy_degree_bound():
    t0 = time.time()
    rng = random.Random(2)
    cases = [(m, K, p) for m in (1, 2) for K in _subsets(m) for p in (2, 3)]
    bad, worst = [], 0
    for it in range(100):
        m, K, p = cases[it % len(cases)]
        A = WeylAlgebra(m)
        B = [[A.random_element(rng, max_degree=rng.randint(1, 2), K=K, nterms=2)
              for _ in range(p)] for _ in range(p - 1)]
        d = max(OpMatrix(B).degree(), 0)
        c, D = syzygy(B, "right", K, return_degree=True)
        bound = syzygy_bound(m, K, p, d)
        worst = max(worst, D)
        zero = all(sum((row[i] * c[i] for i in range(p)), A.zero).is_zero() for row in B)
        if not (any(c) and zero and D <= bound and all(e.in_subalgebra(K) for e in c)):
            bad.append(it)
    ok = not bad and time.time() - t0 < 600
    report(2, ok, f"100 instances, max ansatz degree {worst}, failures {bad}", t0)


# 3 ------------------------------------------------------------------------------------------------

def test_criterion_3_fraction_laws():
    t0 = time.time()
    rng = random.Random(3)
    contexts = [(1, ()), (1, (1,)), (2, ()), (2, (1,)), (2, (2,)), (2, (1, 2))]

    def frac(ctx, A):
        den = A.zero
        while not den:
            den = A.random_element(rng, 1, K=ctx.Kd, nterms=2)
        return OreFraction(ctx, A.random_element(rng, 1, nterms=2), den)

    failures = 0
    for it in range(200):
        m, K = contexts[it % len(contexts)]
        A = WeylAlgebra(m)
        ctx = FractionContext.Q(m, K)
        u, v = frac(ctx, A), frac(ctx, A)
        c = A.zero
        while not c:
            c = A.random_element(rng, 1, K=ctx.Kd, nterms=2)
        u2 = OreFraction(ctx, u.num * c, u.den * c)
        checks = [
            frac_eq(u, u),
            frac_eq(u, v) == frac_eq(v, u),
            frac_eq(u, u2),
            frac_eq(u2, u),
            frac_eq(frac_add(u, v), frac_add(u2, v)),
            frac_eq(frac_mul(u, v), frac_mul(u2, v)),
            frac_eq(frac_mul(v, u), frac_mul(v, u2)),
        ]
        failures += not all(checks)
    report(3, failures == 0 and time.time() - t0 < 600,
           f"200 fractions, {failures} law violations", t0)


# 4 ------------------------------------------------------------------------------------------------

def test_criterion_4_quasi_inverse():
    t0 = time.time()
    rng = random.Random(4)
    done, bad, tried = 0, 0, 0
    cases = [(1, frozenset()), (1, frozenset({1})), (2, frozenset({1})), (2, frozenset({1, 2}))]
    while done < 50:
        m, K = cases[tried % len(cases)]
        tried += 1
        A = WeylAlgebra(m)
        p = rng.randint(1, 3)
        deg = 2 if p < 3 else 1
        B = [[A.random_element(rng, max_degree=deg, K=K, nterms=2) for _ in range(p)]
             for _ in range(p)]
        if skew_rank(B) < p:
            continue
        done += 1
        C = left_quasi_inverse(B, K)
        CB = mat_mul(C, B)
        diag = all(CB[i][i] for i in range(p))
        off = all(not CB[i][j] for i in range(p) for j in range(p) if i != j)
        within = OpMatrix(C).degree() <= quasi_inverse_bound(m, K, p, OpMatrix(B).degree())
        bad += not (diag and off and within)
    report(4, bad == 0 and time.time() - t0 < 600,
           f"50 non-singular matrices ({tried} drawn), {bad} failures", t0)


# 5 ------------------------------------------------------------------------------------------------

def _corpus(seed, count):
    rng = random.Random(seed)
    for _ in range(count):
        m = rng.choice([1, 2])
        A = WeylAlgebra(m)
        K = frozenset(k for k in range(1, m + 1) if rng.random() < 0.5)
        p, q = rng.randint(1, 3), rng.randint(1, 3)
        M = [[A.random_element(rng, max_degree=rng.randint(0, 2), nterms=2) for _ in range(p)]
             for _ in range(q)]
        if rng.random() < 0.5:
            V = [A.random_element(rng, max_degree=1, nterms=2) for _ in range(p)]
            rhs = [sum((M[j][i] * V[i] for i in range(p)), A.zero) for j in range(q)]
        else:
            rhs = [A.random_element(rng, max_degree=1, nterms=2) for _ in range(q)]
        yield LinearSystem(M, rhs, FractionContext.Q(m, K))


def _elimination_verdict(sys_, seed):
    """Verdict of decide_solve on the system produced by one elimination step."""
    tr = trapezoid_reduce(sys_)
    if tr == UNSOLVABLE:
        return UNSOLVABLE
    ctx = sys_.ctx
    if ctx.is_skew_field:
        return SOLVED
    try:
        with ansatz_budget(MAX_ANSATZ):
            step = eliminate_gamma(tr, min(ctx.Ka - ctx.Kd), seed)
    except ResourceCap:
        return UNDECIDED_AT_CAP
    if not step.A or not step.A[0]:
        return UNSOLVABLE if any(step.rhs) else SOLVED
    return decide_solve(step, seed=seed + 1).status


def test_criterion_5_solver_cross_validation():
    t0 = time.time()
    A = WeylAlgebra(1)
    x, d, one = A.x(1), A.d(1), A.one
    Q0, Q1 = FractionContext.Q(1, ()), FractionContext.Q(1, {1})
    fixtures = [
        decide_solve(LinearSystem([[d]], [one], Q0)).status == UNSOLVABLE,
        frac_eq(decide_solve(LinearSystem([[x]], [one], Q0)).solution[0], OreFraction(Q0, one, x)),
        decide_solve(LinearSystem([[d]], [one], Q1)).status == SOLVED,
    ]
    tally = {}
    contradictions, unverified, verdict_changes, elim_checked = 0, 0, 0, 0
    for i, sys_ in enumerate(_corpus(5, 60)):
        exact = decide_solve(sys_, seed=i)
        guess = ansatz_solve(sys_, degree_schedule=range(4))
        tally[exact.status] = tally.get(exact.status, 0) + 1
        if {exact.status, guess.status} == {SOLVED, UNSOLVABLE}:
            contradictions += 1
        for out in (exact, guess):
            if out.solved and not verify_solution(sys_, out.solution):
                unverified += 1
        if exact.status != UNDECIDED_AT_CAP:
            step = _elimination_verdict(sys_, i)
            if step != UNDECIDED_AT_CAP:
                elim_checked += 1
                verdict_changes += step != exact.status
    ok = (all(fixtures) and contradictions == 0 and unverified == 0 and verdict_changes == 0
          and time.time() - t0 < 1200)
    report(5, ok, f"fixtures {sum(fixtures)}/3, 60 systems {tally}, contradictions {contradictions}, "
                  f"unverified {unverified}, elimination verdict changes {verdict_changes}"
                  f"/{elim_checked}", t0)


# 6 ------------------------------------------------------------------------------------------------

def test_criterion_6_hilbert_kolchin_fixtures():
    t0 = time.time()
    results = []
    for m in (1, 2, 3):
        A = WeylAlgebra(m)
        rep = bezout_check(ModulePresentation(m, [[A.d(i)] for i in range(1, m + 1)]), 8)
        results.append((rep.t, rep.l) == (0, 1))
    A1 = WeylAlgebra(1)
    for k in (1, 2, 3, 4):
        rep = bezout_check(ModulePresentation(1, [[A1.d(1) ** k]]), 8)
        results.append((rep.t, rep.l) == (0, k))
    A2 = WeylAlgebra(2)
    L = ModulePresentation(2, [[A2.d(1)]])
    rep = bezout_check(L, 8)
    results.append((rep.t, rep.l) == (1, 1))
    results.append(hilbert_values(L, 6) == [z + 1 for z in range(7)])
    report(6, all(results) and time.time() - t0 < 300,
           f"{sum(results)}/{len(results)} fixtures exact", t0)


# 7 ------------------------------------------------------------------------------------------------

def test_criterion_7_weak_bezout():
    t0 = time.time()
    rng = random.Random(7)
    stabilized, nonzero, kolchin, violations, skipped = 0, 0, 0, [], 0
    for it in range(60):
        m, n, s = rng.randint(1, 3), rng.randint(1, 2), rng.randint(1, 3)
        A = WeylAlgebra(m)
        K = frozenset(k for k in range(1, m + 1) if rng.random() < 0.6) or frozenset({1})
        gens = []
        for _ in range(s):
            row = [A.random_element(rng, max_degree=rng.randint(1, 2), K=K, nterms=rng.randint(1, 3))
                   for _ in range(n)]
            if not any(row):
                row[0] = A.d(min(K))
            gens.append(row)
        L = ModulePresentation(m, gens)
        assert L.d <= 2
        try:
            rep = bezout_check(L, 8, seed=it)
        except NotStabilized:
            skipped += 1
            continue
        stabilized += 1
        if rep.bounds.get("bezout") is not None:
            nonzero += 1
            kolchin += "kolchin_sum" in rep.bounds
        if not rep.bounds["satisfied"]:
            violations.append(it)
    ok = stabilized >= 30 and not violations and time.time() - t0 < 1800
    report(7, ok, f"{stabilized} stabilized ({nonzero} nonzero quotients, {kolchin} with m-t=1), "
                  f"{skipped} not stabilized, violations {violations}", t0)


# 8 ------------------------------------------------------------------------------------------------

def test_criterion_8_bound_spot_values():
    t0 = time.time()
    values = (
        degree_bounds("theorem_solution", m=1, K=frozenset(), d=1, p=1, q=1),
        degree_bounds("lemma_vector", m=1, K=frozenset({1}), p=2, d=1),
        bezout_bound(1, 1, 2, 1, 1),
    )
    report(8, values == (65536, 4, 256), f"values {values}", t0)


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for test in tests:
        try:
            test()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
