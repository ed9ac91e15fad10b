"""Hilbert-Kolchin analysis of left submodules of ``L_m^n``.

``L_m = F(X)[D_1..D_m]`` is filtered by order in the D's.  For a submodule
``L`` generated by rows ``w_j`` the Hilbert function is

    HF(z) = n * C(z+m, m) - dim_{F(X)} (L  intersected with  (L_m^n)_{<= z}).

The intersection is computed from Macaulay matrices: the F(X)-span of all
``D^alpha w_j`` of order at most ``Z`` is put in echelon form with high-order
columns first, and the rows whose leading column has order ``<= z`` are
counted.  Raising ``Z`` can only add such rows, so ``Z`` is increased until the
counts stop changing.  Ranks over F(X) come from evaluating the polynomial
coefficients at a random point modulo a large prime (Monte Carlo).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from math import comb, factorial
from typing import Sequence

from .errors import NotStabilized
from .kernel import LARGE_PRIME, QQ, _echelon, poly_eval
from .matops import LinearSystem
from .ore import FractionContext, common_multiple
from .solver import SOLVED, UNSOLVABLE, decide_solve
from .weyl import WeylOp, adjoint, filtration_degree

__all__ = [
    "ModulePresentation",
    "HKReport",
    "ZERO",
    "hilbert_values",
    "hilbert_function",
    "hk_fit",
    "principal_element",
    "default_K_sequence",
    "bezout_bound",
    "kolchin_sum",
    "bezout_check",
]

ZERO = -1  # differential type reported for the zero quotient module


@dataclass
class ModulePresentation:
    """Submodule of ``L_m^n`` generated by ``s`` rows of ``n`` operators."""

    m: int
    generators: list
    field: object = QQ

    def __post_init__(self):
        self.generators = [list(w) for w in self.generators]
        if not self.generators:
            raise ValueError("at least one generator is needed")
        n = len(self.generators[0])
        if any(len(w) != n for w in self.generators):
            raise ValueError("generators have different lengths")
        if any(not any(w) for w in self.generators):
            raise ValueError("zero generator")

    @property
    def n(self) -> int:
        return len(self.generators[0])

    @property
    def s(self) -> int:
        return len(self.generators)

    @property
    def d(self) -> int:
        return max(filtration_degree(e, "ordD") for w in self.generators for e in w)

    def order(self, j: int) -> int:
        return max(filtration_degree(e, "ordD") for e in self.generators[j])


@dataclass
class HKReport:
    hf: list
    t: int
    l: Fraction
    poly: list
    bounds: dict = dc_field(default_factory=dict)
    notes: dict = dc_field(default_factory=dict)


# --- Macaulay rows ------------------------------------------------------------------------

def _to_module_row(w: Sequence[WeylOp]) -> dict:
    """``{(i, dexp): {xexp: coeff}}`` with polynomial coefficients on the left."""
    row: dict = {}
    for i, e in enumerate(w):
        for (xe, de), c in e.terms.items():
            row.setdefault((i, de), {})[xe] = c
    return row


def _apply_d(row: dict, k: int, m: int) -> dict:
    """``D_k * sum p D^beta = sum (p D_k D^beta + dp/dX_k D^beta)``."""
    out: dict = {}

    def add(key, xe, c):
        poly = out.setdefault(key, {})
        v = poly.get(xe, 0) + c
        if v:
            poly[xe] = v
        else:
            poly.pop(xe, None)
            if not poly:
                del out[key]

    for (i, de), poly in row.items():
        nd = list(de)
        nd[k] += 1
        up = (i, tuple(nd))
        for xe, c in poly.items():
            add(up, xe, c)
            if xe[k]:
                nx = list(xe)
                nx[k] -= 1
                add((i, de), tuple(nx), c * xe[k])
    return out


def _alphas(m: int, order: int):
    """Exponent vectors of total degree exactly ``order`` (with parent direction)."""
    if order == 0:
        return [(0,) * m]
    out = []

    def rec(prefix, left, slots):
        if slots == 1:
            out.append(prefix + (left,))
            return
        for a in range(left, -1, -1):
            rec(prefix + (a,), left - a, slots - 1)

    rec((), order, m)
    return out


class _Macaulay:
    """Incremental echelon of the specialized rows ``D^alpha w_j``."""

    def __init__(self, L: ModulePresentation, point, modulus):
        self.L = L
        self.m = L.m
        self.point = point
        self.p = modulus
        self.orders = [L.order(j) for j in range(L.s)]
        self.symbolic = [{(0,) * L.m: _to_module_row(w)} for w in L.generators]
        self.pivots: dict = {}
        self.level = -1

    def _col(self, key):
        i, de = key
        return (-sum(de), i, tuple(-e for e in de))

    def _specialize(self, row: dict) -> dict:
        out = {}
        for key, poly in row.items():
            v = poly_eval(poly, self.point, self.p)
            if v:
                out[self._col(key)] = v
        return out

    def extend_to(self, Z: int):
        while self.level < Z:
            self.level += 1
            new_rows = []
            for j, o in enumerate(self.orders):
                k = self.level - o
                if k < 0:
                    continue
                cache = self.symbolic[j]
                for alpha in _alphas(self.m, k):
                    if alpha not in cache:
                        t = next(i for i, a in enumerate(alpha) if a)
                        parent = list(alpha)
                        parent[t] -= 1
                        cache[alpha] = _apply_d(cache[tuple(parent)], t, self.m)
                    r = self._specialize(cache[alpha])
                    if r:
                        new_rows.append(r)
            self.pivots = _echelon(new_rows, self.p, pivots=self.pivots)

    def counts(self, zmax: int) -> list[int]:
        """``dim(span ∩ order<=z)`` for z = 0..zmax."""
        hist = [0] * (zmax + 1)
        for col in self.pivots:
            o = -col[0]
            if o <= zmax:
                hist[o] += 1
        out, acc = [], 0
        for z in range(zmax + 1):
            acc += hist[z]
            out.append(acc)
        return out


def _random_point(m, field, rng):
    p = field.p or LARGE_PRIME
    return [rng.randrange(1, p) for _ in range(m)], p


def hilbert_values(L: ModulePresentation, zmax: int, k_stab: int = 2, seed=0,
                   trials: int = 3, cap: int | None = None, return_info: bool = False):
    """``[HF(0), ..., HF(zmax)]``.

    The truncation level ``Z`` starts at ``zmax`` and grows until the
    intersection counts are unchanged for ``k_stab`` consecutive levels, or
    until ``zmax + 4*d*s`` (``cap``).  Each trial uses a fresh random point;
    the largest counts win (specialization can only lose rank).
    """
    m, n = L.m, L.n
    if cap is None:
        cap = zmax + 4 * max(L.d, 1) * L.s
    rng = random.Random(seed)
    best = None
    stable_all = True
    level_used = zmax
    for _ in range(max(trials, 1)):
        pt, p = _random_point(m, L.field, rng)
        mac = _Macaulay(L, pt, p)
        mac.extend_to(zmax)
        prev = mac.counts(zmax)
        same = 0
        Z = zmax
        while same < k_stab and Z < cap:
            Z += 1
            mac.extend_to(Z)
            cur = mac.counts(zmax)
            if any(c < q for c, q in zip(cur, prev)):
                raise AssertionError("intersection dimension decreased with Z")
            same = same + 1 if cur == prev else 0
            prev = cur
        stable_all = stable_all and same >= k_stab
        level_used = max(level_used, Z)
        best = prev if best is None else [max(a, b) for a, b in zip(best, prev)]
    hf = [n * comb(z + m, m) - best[z] for z in range(zmax + 1)]
    if return_info:
        return hf, {"stabilized": stable_all, "level": level_used, "trials": trials,
                    "monte_carlo": True}
    return hf


def hilbert_function(L: ModulePresentation, z: int, k_stab: int = 2, seed=0) -> int:
    if z < 0:
        raise ValueError("z must be >= 0")
    return hilbert_values(L, z, k_stab, seed)[z]


# --- polynomial fit --------------------------------------------------------------------------

def _interpolate(points):
    """Coefficients (ascending) of the polynomial through ``(z, y)`` points."""
    zs = [Fraction(z) for z, _ in points]
    coef = [Fraction(y) for _, y in points]
    k = len(points)
    for j in range(1, k):
        for i in range(k - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (zs[i] - zs[i - j])
    # Newton form -> monomial basis
    poly = [Fraction(0)] * k
    for i in range(k - 1, -1, -1):
        # poly = poly * (z - zs[i]) + coef[i]
        nxt = [Fraction(0)] * k
        for e, c in enumerate(poly):
            if c:
                if e + 1 < k:
                    nxt[e + 1] += c
                nxt[e] -= c * zs[i]
        nxt[0] += coef[i]
        poly = nxt
    while len(poly) > 1 and poly[-1] == 0:
        poly.pop()
    return poly


def _eval(poly, z):
    acc = Fraction(0)
    for c in reversed(poly):
        acc = acc * z + c
    return acc


def hk_fit(hf):
    """Fit the Hilbert-Kolchin polynomial to the tail of ``hf``.

    ``hf`` is a list of values (at z = 0, 1, ...) or of ``(z, value)`` pairs.
    Returns ``(t, l, poly)`` with ``poly`` ascending coefficients; the zero
    module gives ``(ZERO, 0, [0])``.
    """
    pts = [tuple(p) for p in hf] if hf and isinstance(hf[0], (tuple, list)) else list(enumerate(hf))
    pts.sort()
    N = len(pts)
    for t in range(0, N - 2):
        tail = pts[N - (t + 3):]
        poly = _interpolate(tail[: t + 1])
        if all(_eval(poly, z) == y for z, y in tail):
            if all(c == 0 for c in poly):
                return ZERO, Fraction(0), [Fraction(0)]
            deg = len(poly) - 1
            if deg != t and deg < t:
                continue
            return t, factorial(t) * poly[t], poly
    raise NotStabilized(f"no polynomial tail with t+3 points among {N} values")


# --- principal elements -------------------------------------------------------------------------

def default_K_sequence(m: int, t: int):
    """``{1..t+1}, {2..t+2}, ...`` (subsets of derivation indices)."""
    size = t + 1
    return [frozenset(range(a, a + size)) for a in range(1, m - size + 2)]


def principal_element(L: ModulePresentation, i0: int, K, seed=0, return_combination=False):
    """Nonzero ``b`` in ``A^(K)`` with ``(0,..,b,..,0)`` (b at ``i0``, 1-based) in ``L``.

    Solves ``sum_j C_j w_{i,j} = delta_{i,i0}`` for left fractions ``C_j`` by
    applying the adjoint anti-automorphism and :func:`decide_solve`; the
    denominators are cleared and membership is re-checked.  Returns None when
    the system is unsolvable for this ``K``.
    """
    m, n, s = L.m, L.n, L.s
    field = L.field
    K = frozenset(K)
    ctx = FractionContext.Q(m, K)
    A = [[adjoint(L.generators[j][i]) for j in range(s)] for i in range(n)]
    rhs = [WeylOp.constant(m, 1 if i == i0 - 1 else 0, field) for i in range(n)]
    out = decide_solve(LinearSystem(A, rhs, ctx), seed=seed)
    if out.status == UNSOLVABLE:
        return (None, None) if return_combination else None
    if out.status != SOLVED:
        from .errors import ResourceCap
        raise ResourceCap(out.certificates.get("cap", "solver gave up"))
    sol = out.solution
    dens = []
    for v in sol:
        if not any(v.den == e for e in dens):
            dens.append(v.den)
    if len(dens) == 1:
        cs, b = [v.num for v in sol], dens[0]
    else:
        mult, b = common_multiple(dens, "left", K)
        cs = [v.num * mult[next(k for k, e in enumerate(dens) if e == v.den)] for v in sol]
    coeffs = [adjoint(c) for c in cs]
    b_i0 = adjoint(b)
    combo = [WeylOp.zero(m, field) for _ in range(n)]
    for j in range(s):
        for i in range(n):
            if coeffs[j] and L.generators[j][i]:
                combo[i] = combo[i] + coeffs[j] * L.generators[j][i]
    target = [b_i0 if i == i0 - 1 else WeylOp.zero(m, field) for i in range(n)]
    if combo != target or not b_i0 or not b_i0.in_subalgebra(K):
        raise AssertionError("principal element failed the membership check")
    lead = b_i0.leading_coeff()
    if lead != 1:
        inv = field.one / lead
        b_i0 = b_i0.scale(inv)
        coeffs = [c.scale(inv) for c in coeffs]
    b_i0 = b_i0.with_Ka(K)
    return (b_i0, coeffs) if return_combination else b_i0


# --- bounds ----------------------------------------------------------------------------------------

def bezout_bound(n: int, s: int, m: int, d: int, t: int) -> int:
    """``n (4 m^2 d min(n,s))^(4^(m-t-1) * 2(m-t))``; ``n`` when ``t = m``."""
    if not 0 <= t <= m:
        raise ValueError("t must lie in 0..m")
    if t == m:
        return n
    return n * (4 * m * m * d * min(n, s)) ** (4 ** (m - t - 1) * 2 * (m - t))


def kolchin_sum(L: ModulePresentation) -> int:
    """``sum_i max_j ord(w_{i,j})``."""
    return sum(max(filtration_degree(L.generators[j][i], "ordD") for j in range(L.s))
               for i in range(L.n))


def bezout_check(L: ModulePresentation, zmax: int = 8, seed=0, k_stab: int = 2) -> HKReport:
    hf, info = hilbert_values(L, zmax, k_stab, seed, return_info=True)
    t, l, poly = hk_fit(hf)
    bounds: dict = {}
    if t == ZERO:
        bounds.update(bezout=None, satisfied=True)
    else:
        b = bezout_bound(L.n, L.s, L.m, L.d, t)
        ok = l <= b
        bounds.update(bezout=b, bezout_ok=ok)
        if L.m - t == 1:
            ks = kolchin_sum(L)
            bounds.update(kolchin_sum=ks, kolchin_ok=l <= ks)
            ok = ok and l <= ks
        bounds["satisfied"] = ok
    return HKReport(list(enumerate(hf)), t, l, poly, bounds, info)
