import itertools
import random
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylore.errors import NotStabilized
from weylore.hilbert import (ZERO, ModulePresentation, bezout_bound, bezout_check,
                             default_K_sequence, hilbert_function, hilbert_values, hk_fit,
                             kolchin_sum, principal_element)
from weylore.weyl import WeylAlgebra, WeylOp


def test_hf_examples():
    A1, A2 = WeylAlgebra(1), WeylAlgebra(2)
    assert hilbert_values(ModulePresentation(1, [[A1.d(1)]]), 6) == [1] * 7
    assert hilbert_values(ModulePresentation(2, [[A2.d(1)]]), 6) == [z + 1 for z in range(7)]
    assert hilbert_values(ModulePresentation(1, [[A1.d(1) ** 2]]), 6)[1:] == [2] * 6
    assert hilbert_function(ModulePresentation(2, [[A2.d(1)]]), 4) == 5


def test_hk_fit_examples():
    assert hk_fit([1, 1, 1, 1])[:2] == (0, 1)
    t, l, poly = hk_fit([1, 2, 3, 4, 5])
    assert (t, l, poly) == (1, 1, [1, 1])
    t, l, poly = hk_fit([1, 3, 6, 10, 15])
    assert (t, l) == (2, 1) and poly == [1, Fraction(3, 2), Fraction(1, 2)]
    assert hk_fit([3, 1, 0, 0, 0]) == (ZERO, 0, [0])
    with pytest.raises(NotStabilized):
        hk_fit([1, 2])


@pytest.mark.parametrize("m", [1, 2, 3])
def test_all_derivations(m):
    A = WeylAlgebra(m)
    rep = bezout_check(ModulePresentation(m, [[A.d(i)] for i in range(1, m + 1)]), 6)
    assert (rep.t, rep.l) == (0, 1)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_single_power(k):
    A = WeylAlgebra(1)
    rep = bezout_check(ModulePresentation(1, [[A.d(1) ** k]]), 8)
    assert (rep.t, rep.l) == (0, k)
    assert rep.bounds["kolchin_sum"] == k and rep.bounds["satisfied"]


def test_free_module_and_unit():
    A = WeylAlgebra(2)
    rep = bezout_check(ModulePresentation(2, [[A.one, A.zero]]), 6)
    # quotient of L_2^2 by the first coordinate is a free module of rank 1
    assert (rep.t, rep.l) == (2, 1)
    rep = bezout_check(ModulePresentation(2, [[A.x(1) * A.d(2) + A.one]]), 6)
    assert rep.t == 1


def test_bezout_bound_values():
    assert bezout_bound(1, 1, 2, 1, 1) == 256
    assert bezout_bound(2, 5, 3, 1, 3) == 2
    assert bezout_bound(1, 1, 1, 1, 0) == 16
    with pytest.raises(ValueError):
        bezout_bound(1, 1, 1, 1, 2)


def test_kolchin_sum():
    A = WeylAlgebra(2)
    L = ModulePresentation(2, [[A.d(1) ** 2, A.d(2)], [A.one, A.d(1) * A.d(2) ** 2]])
    assert kolchin_sum(L) == 2 + 3


def test_presentation_validation():
    A = WeylAlgebra(1)
    with pytest.raises(ValueError):
        ModulePresentation(1, [[A.zero]])
    with pytest.raises(ValueError):
        ModulePresentation(1, [[A.d(1)], [A.d(1), A.one]])


def test_principal_element_examples():
    A1, A2 = WeylAlgebra(1), WeylAlgebra(2)
    assert principal_element(ModulePresentation(1, [[A1.one]]), 1, ()) == A1.one
    b = principal_element(ModulePresentation(2, [[A2.d(1)], [A2.d(2)]]), 1, {1})
    assert b == A2.d(1)
    L = ModulePresentation(2, [[A2.d(1), A2.zero], [A2.zero, A2.x(1)]])
    b, coeffs = principal_element(L, 1, {1}, return_combination=True)
    assert b == A2.d(1)
    assert coeffs[0] * A2.d(1) == b and not (coeffs[1] * A2.x(1))


def test_principal_element_none():
    A = WeylAlgebra(2)
    # <d1> contains no nonzero element of F[x1, x2]
    assert principal_element(ModulePresentation(2, [[A.d(1)]]), 1, ()) is None


def test_default_K_sequence():
    assert default_K_sequence(3, 0) == [frozenset({1}), frozenset({2}), frozenset({3})]
    assert default_K_sequence(3, 2) == [frozenset({1, 2, 3})]


def _standard_count(m, gens, z):
    """Monomials d^b with |b| <= z not divisible by any generator exponent."""
    total = 0
    for b in itertools.product(range(z + 1), repeat=m):
        if sum(b) <= z and not any(all(bi >= gi for bi, gi in zip(b, g)) for g in gens):
            total += 1
    return total


@settings(max_examples=25)
@given(st.integers(1, 3), st.integers(0, 2**32))
def test_monomial_quotient_matches_count(m, seed):
    rng = random.Random(seed)
    gens = [tuple(rng.randint(0, 2) for _ in range(m)) for _ in range(rng.randint(1, 3))]
    gens = [g for g in gens if any(g)] or [(1,) + (0,) * (m - 1)]
    ops = [[WeylAlgebra(m).x(1) ** rng.randint(0, 1) * WeylOp.monomial(m, (0,) * m, g)]
           for g in gens]
    hf = hilbert_values(ModulePresentation(m, ops), 5, seed=seed)
    assert hf == [_standard_count(m, gens, z) for z in range(6)]


@settings(max_examples=20)
@given(st.integers(1, 2), st.integers(1, 2), st.integers(0, 2**32))
def test_hf_bounded_by_free_module(m, n, seed):
    rng = random.Random(seed)
    A = WeylAlgebra(m)
    gens = []
    for _ in range(rng.randint(1, 3)):
        row = [A.random_element(rng, 2, nterms=2) for _ in range(n)]
        if any(row):
            gens.append(row)
    if not gens:
        return
    hf = hilbert_values(ModulePresentation(m, gens), 6, seed=seed)
    assert all(0 <= v <= n * comb(z + m, m) for z, v in enumerate(hf))
    assert hf == sorted(hf)
