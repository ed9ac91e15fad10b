"""Ore fractions ``a * b^{-1}`` over D-subalgebras of the Weyl algebra.

A :class:`FractionContext` fixes the numerator algebra ``A^(Ka)`` and the
denominator algebra ``A^(Kd)`` (``Kd <= Ka``).  With ``Ka = {1..m}`` and
``Kd = K`` this is the algebra ``Q_m^(K)``; with ``Ka = Kd`` it is a skew field.

Every existence statement here (syzygies, common multiples, swapped
denominators) is realised the same way: posit unknown operators with
undetermined coefficients up to some degree, turn the operator identity into an
F-linear system, and read a solution off its nullspace.  Degrees are tried in
increasing order up to the guaranteed bound.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from math import comb
from typing import Sequence

import gmpy2

from .errors import NotFoundWithinBound, ResourceCap, UndecidedAtCap, ZeroDenominator
from .kernel import LARGE_PRIME, QQ, ModP, _echelon, nullspace_engine
from .weyl import WeylOp, _mono_mul, filtration_degree, monomials_up_to

__all__ = [
    "FractionContext",
    "OreFraction",
    "ansatz_kernel",
    "ansatz_budget",
    "syzygy",
    "syzygy_bound",
    "common_multiple",
    "swap_denominator",
    "frac_add",
    "frac_sub",
    "frac_neg",
    "frac_mul",
    "frac_eq",
    "frac_eq_witness",
]


@dataclass(frozen=True)
class FractionContext:
    """Numerators in ``A^(Ka)``, denominators in ``A^(Kd)``."""

    m: int
    Ka: frozenset
    Kd: frozenset

    def __post_init__(self):
        object.__setattr__(self, "Ka", frozenset(self.Ka))
        object.__setattr__(self, "Kd", frozenset(self.Kd))
        full = frozenset(range(1, self.m + 1))
        if not self.Ka <= full:
            raise ValueError(f"Ka={sorted(self.Ka)} not inside 1..{self.m}")
        if not self.Kd <= self.Ka:
            raise ValueError(f"Kd={sorted(self.Kd)} not inside Ka={sorted(self.Ka)}")

    @classmethod
    def Q(cls, m: int, K=()) -> "FractionContext":
        """The algebra ``A_m (A_m^(K))^{-1}``."""
        return cls(m, frozenset(range(1, m + 1)), frozenset(K))

    @classmethod
    def skew(cls, m: int, K=None) -> "FractionContext":
        """Skew field of fractions of ``A^(K)`` (all of ``A_m`` by default)."""
        K = frozenset(range(1, m + 1)) if K is None else frozenset(K)
        return cls(m, K, K)

    @property
    def is_skew_field(self) -> bool:
        return self.Ka == self.Kd

    def __repr__(self):
        return f"FractionContext(m={self.m}, Ka={sorted(self.Ka)}, Kd={sorted(self.Kd)})"


@dataclass(frozen=True, eq=False)
class OreFraction:
    """``num * den^{-1}``; no canonical form, compare with :func:`frac_eq`."""

    ctx: FractionContext
    num: WeylOp
    den: WeylOp
    meta: dict = dc_field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.den:
            raise ZeroDenominator("fraction with zero denominator")
        if not self.den.in_subalgebra(self.ctx.Kd):
            raise ValueError(f"denominator {self.den} not in A^({sorted(self.ctx.Kd)})")
        if not self.num.in_subalgebra(self.ctx.Ka):
            raise ValueError(f"numerator {self.num} not in A^({sorted(self.ctx.Ka)})")
        if not self.num:
            # canonical zero
            object.__setattr__(self, "den", WeylOp.constant(self.num.m, 1, self.num.field))

    @classmethod
    def from_op(cls, ctx: FractionContext, a: WeylOp) -> "OreFraction":
        return cls(ctx, a, WeylOp.constant(a.m, 1, a.field))

    @property
    def field(self):
        return self.num.field

    @property
    def deg_num(self) -> int:
        return filtration_degree(self.num)

    @property
    def deg_den(self) -> int:
        return filtration_degree(self.den)

    def is_zero(self) -> bool:
        return not self.num

    def __add__(self, other):
        return frac_add(self, other)

    def __sub__(self, other):
        return frac_sub(self, other)

    def __neg__(self):
        return frac_neg(self)

    def __mul__(self, other):
        return frac_mul(self, other)

    def __str__(self):
        from .parse import format_fraction
        return format_fraction(self.num, self.den)

    def __repr__(self):
        return f"OreFraction({self})"


# --- the ansatz engine --------------------------------------------------------------------

_BUDGET = contextvars.ContextVar("ansatz_budget", default=None)


@contextlib.contextmanager
def ansatz_budget(max_unknowns: int | None):
    """Cap the number of scalar unknowns of any ansatz run inside the block.

    Exceeding it raises :class:`ResourceCap`.
    """
    token = _BUDGET.set(max_unknowns)
    try:
        yield
    finally:
        _BUDGET.reset(token)


def _engine_coeff(c, mod: int):
    if mod:
        if isinstance(c, ModP):
            return int(c) % mod
        c = Fraction(c)
        return c.numerator * pow(c.denominator, -1, mod) % mod
    return gmpy2.mpq(c.numerator, c.denominator)


def _build_rows(equations, unknowns, cols, mod: int):
    """Coefficient-matching rows in engine form (ints mod ``mod``, or mpq)."""
    row_index: dict = {}
    rows: list[dict] = []
    for e, eq in enumerate(equations):
        for k, op, side in eq:
            coeffs = [((ox, od), _engine_coeff(c, mod)) for (ox, od), c in op.terms.items()]
            for mono in unknowns[k]:
                col = cols[(k, mono)]
                mx, md = mono
                for (ox, od), c in coeffs:
                    prods = _mono_mul(ox, od, mx, md) if side == "left" else _mono_mul(mx, md, ox, od)
                    for res, w in prods:
                        key = (e, res)
                        r = row_index.get(key)
                        if r is None:
                            r = row_index[key] = len(rows)
                            rows.append({})
                        row = rows[r]
                        v = row.get(col, 0) + c * w
                        if mod:
                            v %= mod
                        if v:
                            row[col] = v
                        else:
                            row.pop(col, None)
    return rows


def _sparse_kernel(rows, ech, ncols: int, limit: int):
    """Kernel vectors over QQ guided by the echelon form ``ech`` mod ``LARGE_PRIME``.

    For each of the first free columns ``f`` the kernel vector with ``v[f] = 1``
    and every other free entry 0 is found mod p by back-substitution; it only
    involves columns before ``f``.  Its support holds one free column plus
    pivot columns, which are independent mod p and hence over QQ, so the
    rational system restricted to the support has a kernel of dimension at
    most one.  Returns None when that kernel is empty (an unlucky prime).
    """
    free = [c for c in range(ncols) if c not in ech]
    piv_desc = sorted(ech, reverse=True)
    out = []
    for f in free[:limit]:
        v = {f: 1}
        for c in piv_desc:
            if c > f:
                continue
            acc = 0
            for cc, w in ech[c].items():
                x = v.get(cc)
                if x is not None:
                    acc += w * x
            acc %= LARGE_PRIME
            if acc:
                v[c] = LARGE_PRIME - acc
        support = sorted(v)
        idx = {c: k for k, c in enumerate(support)}
        sub = []
        for r in rows:
            rr = {idx[c]: x for c, x in r.items() if c in idx}
            if rr:
                sub.append(rr)
        ker = nullspace_engine(sub, len(support), QQ)
        if len(ker) != 1 or not ker[0][idx[f]]:
            return None
        scale = 1 / ker[0][idx[f]]
        vec = [QQ.zero] * ncols
        for c, k in idx.items():
            vec[c] = ker[0][k] * scale
        out.append(vec)
    return out


def ansatz_kernel(m: int, field, unknowns: Sequence[Sequence], equations, limit: int = 1,
                  Kas=None, prefilter: bool = True):
    """Solve a homogeneous operator system by undetermined coefficients.

    ``unknowns[k]`` lists the monomials spanning unknown ``u_k``.  Each
    equation is a list of ``(k, op, side)`` meaning ``op*u_k`` (side ``'left'``)
    or ``u_k*op`` (side ``'right'``); the equation asserts the sum vanishes.
    Returns up to ``limit`` kernel vectors, each a list of WeylOps.

    Over QQ the system is first reduced modulo a large prime: full column rank
    there proves the kernel trivial without any rational arithmetic.
    """
    budget = _BUDGET.get()
    if budget is not None and sum(len(u) for u in unknowns) > budget:
        raise ResourceCap(f"ansatz with {sum(len(u) for u in unknowns)} unknowns "
                          f"exceeds the budget of {budget}")
    # low degree, then low derivative order first, unknowns interleaved: keeps
    # fill-in down and makes the first free columns give the lowest kernel vectors
    col_list = sorted(((k, mono) for k, monos in enumerate(unknowns) for mono in monos),
                      key=lambda km: (sum(km[1][0]) + sum(km[1][1]), sum(km[1][1]),
                                      km[1][1], km[1][0], km[0]))
    cols = {km: c for c, km in enumerate(col_list)}
    ncols = len(col_list)
    if ncols == 0:
        return []
    basis = None
    if prefilter and field.p == 0:
        red = _build_rows(equations, unknowns, cols, LARGE_PRIME)
        ech = _echelon(red, LARGE_PRIME)
        if len(ech) == ncols:
            return []
        rows = _build_rows(equations, unknowns, cols, 0)
        if limit is not None:
            basis = _sparse_kernel(rows, ech, ncols, limit)
    else:
        rows = _build_rows(equations, unknowns, cols, field.p)
    if basis is None:
        basis = nullspace_engine(rows, ncols, field, limit=limit)
    out = []
    for vec in basis:
        parts = [dict() for _ in unknowns]
        for c, v in enumerate(vec):
            if v:
                k, mono = col_list[c]
                parts[k][mono] = v
        ops = []
        for k, t in enumerate(parts):
            Ka = None if Kas is None else Kas[k]
            ops.append(WeylOp(m, t, field, Ka, check=False))
        out.append(ops)
    return out


def _normalize(vec: list[WeylOp], which: int | None = None) -> list[WeylOp]:
    """Scale so the leading coefficient of the chosen (first nonzero) entry is 1."""
    if which is None:
        which = next(i for i, v in enumerate(vec) if v)
    lc = vec[which].leading_coeff()
    inv = vec[which].field.one / lc
    return [v.scale(inv) if v else v for v in vec]


def _matrix_degree(B) -> int:
    return max((filtration_degree(e) for row in B for e in row), default=-1)


def syzygy_bound(m: int, K, p: int, d: int) -> int:
    """``2(m+|K|)(p-1)d``: degree within which a syzygy of p unknowns must exist."""
    return 2 * (m + len(K)) * (p - 1) * max(d, 0)


def syzygy(B: Sequence[Sequence[WeylOp]], side: str = "right", K=None,
           max_degree: int | None = None, return_degree: bool = False):
    """Nonzero ``c`` with ``B c = 0`` (right) or ``c B = 0`` (left), entries in A^(K).

    ``K`` defaults to the derivations occurring in ``B``.  Degrees are tried
    upward from 0; the bound of :func:`syzygy_bound` applies when ``B`` has fewer
    equations than unknowns.
    """
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    B = [list(r) for r in B]
    first = next(e for row in B for e in row)
    m, field = first.m, first.field
    if side == "right":
        neq, p = len(B), len(B[0])
        entry = lambda e, k: B[e][k]
    else:
        p, neq = len(B), len(B[0])
        entry = lambda e, k: B[k][e]
    if K is None:
        K = frozenset()
        for row in B:
            for e in row:
                K |= e.derivations()
    K = frozenset(K)
    for k in range(p):
        if all(not entry(e, k) for e in range(neq)):
            vec = [WeylOp.zero(m, field, Ka=K) for _ in range(p)]
            vec[k] = WeylOp.constant(m, 1, field, Ka=K)
            return (vec, 0) if return_degree else vec
    d = _matrix_degree(B)
    bound = syzygy_bound(m, K, p, d) if neq <= p - 1 else None
    top = max_degree if max_degree is not None else bound
    if top is None:
        raise ValueError("no degree bound applies; pass max_degree")
    opside = "left" if side == "right" else "right"
    equations = [[(k, entry(e, k), opside) for k in range(p) if entry(e, k)]
                 for e in range(neq)]
    for D in range(top + 1):
        monos = monomials_up_to(m, D, K)
        ker = ansatz_kernel(m, field, [monos] * p, equations, limit=1, Kas=[K] * p)
        if ker:
            vec = _normalize(ker[0])
            return (vec, D) if return_degree else vec
    if max_degree is not None and (bound is None or max_degree < bound):
        return (None, top) if return_degree else None
    raise NotFoundWithinBound(f"no syzygy up to degree {top}")


def common_multiple(bs: Sequence[WeylOp], side: str = "left", K=None, return_degree=False):
    """Common multiple of nonzero ``b_1..b_p`` in A^(K).

    ``side='left'`` gives ``b_i * c_i`` all equal, ``side='right'`` gives
    ``c_i * b_i`` all equal.  Returns ``(cs, common_value)``.
    """
    bs = list(bs)
    if any(not b for b in bs):
        raise ValueError("common multiple of a zero element")
    m, field = bs[0].m, bs[0].field
    p = len(bs)
    if K is None:
        K = frozenset()
        for b in bs:
            K |= b.derivations()
    K = frozenset(K)
    one = WeylOp.constant(m, 1, field, Ka=K)
    if p == 1 or all(b == bs[0] for b in bs):
        res = ([one] * p, bs[0])
        return res + (0,) if return_degree else res
    if p == 2 and bs[0] * bs[1] == bs[1] * bs[0]:
        cs = [bs[1].with_Ka(K), bs[0].with_Ka(K)]
        value = bs[0] * bs[1]
        return (cs, value, 0) if return_degree else (cs, value)
    zero = WeylOp.zero(m, field, Ka=K)
    if side == "left":
        B = []
        for i in range(1, p):
            row = [zero] * p
            row[0] = bs[0]
            row[i] = -bs[i]
            B.append(row)
        cs, D = syzygy(B, "right", K, return_degree=True)
        value = bs[0] * cs[0]
    elif side == "right":
        B = [[zero] * (p - 1) for _ in range(p)]
        for i in range(1, p):
            B[0][i - 1] = bs[0]
            B[i][i - 1] = -bs[i]
        cs, D = syzygy(B, "left", K, return_degree=True)
        value = cs[0] * bs[0]
    else:
        raise ValueError("side must be 'left' or 'right'")
    cs = [c.with_Ka(K) for c in cs]
    return (cs, value, D) if return_degree else (cs, value)


def _swap_monomials(m, D, e, Ka, Kd):
    """Monomials of A^(Ka) with deg^(Kd) <= D and order <= e in the d's of Ka - Kd."""
    extra = sorted(Ka - Kd)
    base = monomials_up_to(m, D, Kd)
    if not extra or e <= 0:
        return list(base)
    out = []
    for total in range(e + 1):
        for ord_part in monomials_up_to(len(extra), total, frozenset(range(1, len(extra) + 1)),
                                        kind="ordD"):
            dex = ord_part[1]
            if sum(dex) != total:
                continue
            for xe, de in base:
                nd = list(de)
                for j, k in enumerate(extra):
                    nd[k - 1] = dex[j]
                out.append((xe, tuple(nd)))
    return out


def swap_bound(m: int, Ka, Kd, e: int, d: int) -> int:
    n_out = len(frozenset(Ka) - frozenset(Kd))
    return 2 * (m + len(Kd)) * comb(e + n_out, e) * max(d, 0)


def swap_denominator(b: WeylOp, a: WeylOp, ctx: FractionContext | None = None,
                     return_degree=False):
    """``(alpha, beta)`` with ``b*alpha == a*beta``, ``beta != 0`` in A^(Kd).

    In fraction terms ``b^{-1} a = alpha beta^{-1}``.  The order of ``alpha`` in
    the derivations outside ``Kd`` does not exceed that of ``a``.
    """
    if not b:
        raise ZeroDenominator("cannot swap a zero denominator")
    m, field = b.m, b.field
    if ctx is None:
        ctx = FractionContext.Q(m, b.derivations())
    Ka, Kd = ctx.Ka, ctx.Kd
    one = WeylOp.constant(m, 1, field, Ka=Kd)
    if not a:
        res = (WeylOp.zero(m, field, Ka=Ka), one)
        return res + (0,) if return_degree else res
    if b.is_constant():
        res = (a.scale(field.one / b.constant_coeff()).with_Ka(Ka), one)
        return res + (0,) if return_degree else res
    if b == a:
        res = (WeylOp.constant(m, 1, field, Ka=Ka), one)
        return res + (0,) if return_degree else res
    if b * a == a * b:
        res = (a.with_Ka(Ka), b.with_Ka(Kd))
        return res + (0,) if return_degree else res
    e = filtration_degree(a, "ordK", Kd)
    d = max(filtration_degree(a, "degK", Kd), filtration_degree(b, "degK", Kd))
    bound = swap_bound(m, Ka, Kd, e, d)
    eq = [[(0, b, "left"), (1, -a, "left")]]
    for D in range(bound + 1):
        alpha_monos = _swap_monomials(m, D, e, Ka, Kd)
        beta_monos = monomials_up_to(m, D, Kd)
        ker = ansatz_kernel(m, field, [alpha_monos, beta_monos], eq, limit=1, Kas=[Ka, Kd])
        if ker:
            alpha, beta = _normalize(ker[0], which=1)
            return (alpha, beta, D) if return_degree else (alpha, beta)
    raise NotFoundWithinBound(f"denominator swap not found up to degree {bound}")


# --- fraction arithmetic -----------------------------------------------------------------

def _check_same(u: OreFraction, v: OreFraction):
    if u.ctx != v.ctx:
        raise ValueError(f"contexts differ: {u.ctx} vs {v.ctx}")
    u.num._check_compat(v.num)


def frac_add(u: OreFraction, v: OreFraction) -> OreFraction:
    _check_same(u, v)
    if u.is_zero():
        return v
    if v.is_zero():
        return u
    if u.den == v.den:
        return OreFraction(u.ctx, u.num + v.num, u.den)
    (c1, c2), b = common_multiple([u.den, v.den], "left", u.ctx.Kd)
    return OreFraction(u.ctx, u.num * c1 + v.num * c2, b.with_Ka(u.ctx.Kd))


def frac_neg(u: OreFraction) -> OreFraction:
    return OreFraction(u.ctx, -u.num, u.den)


def frac_sub(u: OreFraction, v: OreFraction) -> OreFraction:
    return frac_add(u, frac_neg(v))


def frac_mul(u: OreFraction, v: OreFraction) -> OreFraction:
    """``a1 b1^{-1} a2 b2^{-1} = a1 a4 (b2 b4)^{-1}`` where ``b1^{-1} a2 = a4 b4^{-1}``."""
    _check_same(u, v)
    if u.is_zero() or v.is_zero():
        return OreFraction.from_op(u.ctx, WeylOp.zero(u.ctx.m, u.field))
    a4, b4 = swap_denominator(u.den, v.num, u.ctx)
    return OreFraction(u.ctx, u.num * a4, (v.den * b4).with_Ka(u.ctx.Kd))


def frac_eq(u: OreFraction, v: OreFraction, method: str = "multiple", cap: int | None = None) -> bool:
    """Equality in the fraction algebra.

    ``method='multiple'`` brings both to a common denominator
    ``b1 c1 = b2 c2`` and compares numerators; it always terminates.
    ``method='witness'`` searches for a left fraction ``beta^{-1} alpha`` equal to
    both (see :func:`frac_eq_witness`).
    """
    _check_same(u, v)
    if method == "witness":
        return frac_eq_witness(u, v, cap)
    if method != "multiple":
        raise ValueError(f"unknown method {method!r}")
    if u.den == v.den:
        return u.num == v.num
    if u.is_zero() or v.is_zero():
        return u.is_zero() and v.is_zero()
    (c1, c2), _ = common_multiple([u.den, v.den], "left", u.ctx.Kd)
    return u.num * c1 == v.num * c2


def witness_bound(u: OreFraction, v: OreFraction) -> int:
    ctx = u.ctx
    d = max(u.deg_num, u.deg_den, v.deg_num, v.deg_den, 1)
    return 4 * (ctx.m + len(ctx.Kd)) ** 2 * d * d


def frac_eq_witness(u: OreFraction, v: OreFraction, cap: int | None = None,
                    return_witness: bool = False):
    """Decide ``u == v`` by searching ``beta*a_i = alpha*b_i`` (i = 1, 2).

    The search runs up to :func:`witness_bound`; when ``cap`` is below that
    bound and nothing is found by ``cap``, :class:`UndecidedAtCap` is raised.
    """
    _check_same(u, v)
    ctx = u.ctx
    m, field = ctx.m, u.field
    bound = witness_bound(u, v)
    top = bound if cap is None else min(cap, bound)
    eqs = [[(0, u.num, "right"), (1, -u.den, "right")],
           [(0, v.num, "right"), (1, -v.den, "right")]]
    for D in range(top + 1):
        beta_m = monomials_up_to(m, D, ctx.Kd)
        alpha_m = monomials_up_to(m, D, ctx.Ka)
        ker = ansatz_kernel(m, field, [beta_m, alpha_m], eqs, limit=1, Kas=[ctx.Kd, ctx.Ka])
        if ker:
            beta, alpha = _normalize(ker[0], which=0)
            return (True, (alpha, beta)) if return_witness else True
    if top < bound:
        raise UndecidedAtCap(f"no witness up to degree {top} (bound {bound})")
    return (False, None) if return_witness else False
