import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylore.errors import RetryLimitExceeded, ZeroDenominator
from weylore.matops import LinearSystem, trapezoid_reduce
from weylore.ore import FractionContext, OreFraction, frac_add, frac_eq
from weylore.solver import (SOLVED, UNDECIDED_AT_CAP, UNSOLVABLE, ansatz_solve, base_solve_skew,
                            decide_solve, degree_bounds, eliminate_gamma, gamma_div_rem,
                            normalize_family, verify_solution)
from weylore.weyl import WeylAlgebra, gamma_degree, gamma_lc

A = WeylAlgebra(1)
x, d, one, zero = A.x(1), A.d(1), A.one, A.zero
Q0 = FractionContext.Q(1, ())
Q1 = FractionContext.Q(1, {1})


def test_decide_solve_fixtures():
    out = decide_solve(LinearSystem([[d]], [one], Q0))
    assert out.status == UNSOLVABLE and out.solution is None
    out = decide_solve(LinearSystem([[x]], [one], Q0))
    assert out.solved and [str(v) for v in out.solution] == ["1 * (x1)^-1"]
    out = decide_solve(LinearSystem([[d]], [one], Q1))
    assert out.solved and frac_eq(out.solution[0], OreFraction(Q1, one, d))


def test_decide_solve_small_systems():
    out = decide_solve(LinearSystem([[zero]], [one], Q0))
    assert out.status == UNSOLVABLE
    sys_ = LinearSystem([[one, one], [zero, x]], [zero, one], Q0)
    out = decide_solve(sys_)
    assert out.solved and verify_solution(sys_, out.solution)
    assert frac_eq(out.solution[1], OreFraction(Q0, one, x))
    # the left side keeps d-order >= 1 whatever V is
    b = x * d + 3 * one
    assert decide_solve(LinearSystem([[b]], [x], Q0)).status == UNSOLVABLE
    out = decide_solve(LinearSystem([[b]], [x], Q1))
    assert out.solved
    assert b * out.solution[0].num == x * out.solution[0].den


def test_unsolvable_two_rows():
    sys_ = LinearSystem([[x], [x]], [one, d], Q0)
    assert decide_solve(sys_).status == UNSOLVABLE


def test_two_variable_systems():
    B = WeylAlgebra(2)
    x1, d1, d2 = B.x(1), B.d(1), B.d(2)
    Q21 = FractionContext.Q(2, {1})
    assert decide_solve(LinearSystem([[d1 * B.x(2) + d2]], [x1], Q21)).status == UNSOLVABLE
    sys_ = LinearSystem([[B.x(2) * d1 + x1]], [d2], Q21)
    out = decide_solve(sys_)
    assert out.solved and verify_solution(sys_, out.solution)
    assert decide_solve(LinearSystem([[d1 + d2]], [B.one], FractionContext.Q(2, ()))).status \
        == UNSOLVABLE


def test_ansatz_fixtures():
    out = ansatz_solve(LinearSystem([[x]], [one], Q0), degree_schedule=[0, 1])
    assert out.solved and out.certificates["degree"] == 1
    assert out.solution[0].num == one and out.solution[0].den == x
    a = x * d + one
    out = ansatz_solve(LinearSystem([[a]], [a], Q0), degree_schedule=[0])
    assert out.solved and frac_eq(out.solution[0], OreFraction.from_op(Q0, one))
    out = ansatz_solve(LinearSystem([[d]], [one], Q0), degree_schedule=range(6))
    assert out.status == UNDECIDED_AT_CAP


def test_verify_solution():
    sys_ = LinearSystem([[x]], [one], Q0)
    assert verify_solution(sys_, decide_solve(sys_).solution)
    assert not verify_solution(sys_, [(2 * one, x)])
    with pytest.raises(ZeroDenominator):
        verify_solution(sys_, [(one, zero)])


def test_degree_bound_values():
    assert degree_bounds("theorem_solution", m=1, K=frozenset(), d=1, p=1, q=1) == 65536
    assert degree_bounds("lemma_vector", m=1, K={1}, p=2, d=1) == 4
    assert degree_bounds("elimination", m=1, r=1, d=1) == 16
    with pytest.raises(ValueError):
        degree_bounds("nonsense")


def test_normalize_examples():
    B = WeylAlgebra(2)
    rec, H = normalize_family([B.d(1), B.x(1) * B.d(1) ** 2], 1, frozenset())
    assert rec.attempts == 1
    rec, H = normalize_family([B.d(2)], 1, frozenset())
    assert rec.attempts > 1
    assert gamma_degree(H[0], 1) == 1 and gamma_lc(H[0], 1).in_subalgebra(())
    rec, H = normalize_family([B.x(1)], 1, frozenset())
    assert rec.attempts == 1
    with pytest.raises(RetryLimitExceeded):
        normalize_family([B.d(2)], 1, frozenset(), retries=0)


def test_gamma_div_rem_examples():
    phi, psi = gamma_div_rem(OreFraction.from_op(Q0, d * d), d, 1)
    assert phi.num == d and psi.is_zero()
    phi, psi = gamma_div_rem(OreFraction.from_op(Q0, x * d), d, 1)
    assert phi.num == x and frac_eq(psi, OreFraction.from_op(Q0, -one))
    phi, psi = gamma_div_rem(OreFraction.from_op(Q0, x), d * d, 1)
    assert phi.is_zero() and psi.num == x


def test_eliminate_gamma_fixtures():
    step = eliminate_gamma(trapezoid_reduce(LinearSystem([[d]], [one], Q0)), 1)
    assert step.rhs == [one] and not any(step.A[0])
    step = eliminate_gamma(trapezoid_reduce(LinearSystem([[x]], [one], Q0)), 1)
    out = decide_solve(step)
    assert out.solved and frac_eq(out.solution[0], OreFraction(step.ctx, one, x))
    step = eliminate_gamma(trapezoid_reduce(LinearSystem([[one]], [x * d], Q0)), 1)
    assert decide_solve(step).solved


def test_base_solve_skew():
    out = base_solve_skew(LinearSystem([[d]], [x], Q1))
    assert out.solved and verify_solution(LinearSystem([[d]], [x], Q1), out.solution)
    with pytest.raises(ValueError):
        base_solve_skew(LinearSystem([[d]], [x], Q0))


@given(st.integers(1, 2), st.integers(1, 3), st.integers(0, 2**32))
def test_gamma_div_rem_property(m, dh, seed):
    rng = random.Random(seed)
    B = WeylAlgebra(m)
    ctx = FractionContext.Q(m, ())
    h = B.d(1) ** dh + B.random_element(rng, max_degree=dh - 1, K=frozenset({1}), nterms=2)
    v = OreFraction.from_op(ctx, B.random_element(rng, max_degree=3, nterms=3))
    phi, psi = gamma_div_rem(v, h, 1)
    assert gamma_degree(psi.num, 1) < dh
    recombined = frac_add(OreFraction(ctx, h * phi.num, phi.den), psi)
    assert frac_eq(recombined, v)


@settings(max_examples=15)
@given(st.sampled_from([(1, ()), (1, (1,)), (2, ()), (2, (1,)), (2, (1, 2))]),
       st.integers(1, 2), st.integers(1, 2), st.booleans(), st.integers(0, 2**32))
def test_solvers_agree(ctx_case, p, q, planted, seed):
    m, K = ctx_case
    rng = random.Random(seed)
    B = WeylAlgebra(m)
    M = [[B.random_element(rng, 1, nterms=2) for _ in range(p)] for _ in range(q)]
    if planted:
        V = [B.random_element(rng, 1, nterms=2) for _ in range(p)]
        rhs = [sum((M[j][i] * V[i] for i in range(p)), B.zero) for j in range(q)]
    else:
        rhs = [B.random_element(rng, 1, nterms=2) for _ in range(q)]
    sys_ = LinearSystem(M, rhs, FractionContext.Q(m, K))
    exact = decide_solve(sys_, seed=seed)
    guess = ansatz_solve(sys_, degree_schedule=range(3))
    if guess.solved:
        assert verify_solution(sys_, guess.solution)
        assert exact.status != UNSOLVABLE
    if exact.solved:
        assert verify_solution(sys_, exact.solution)
    if planted:
        assert exact.status in (SOLVED, UNDECIDED_AT_CAP)
