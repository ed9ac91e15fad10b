"""Matrices over Weyl subalgebras: quasi-inverses, rank, block and trapezoid reduction."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

from .errors import RankViolation, SingularInput
from .ore import (
    FractionContext,
    OreFraction,
    frac_add,
    frac_mul,
    syzygy,
    syzygy_bound,
)
from .weyl import WeylOp, filtration_degree

__all__ = [
    "OpMatrix",
    "LinearSystem",
    "TrapezoidSystem",
    "UNSOLVABLE",
    "derivations_of",
    "mat_mul",
    "left_quasi_inverse",
    "block_reduce",
    "skew_rank",
    "rank_profile",
    "trapezoid_reduce",
]

UNSOLVABLE = "UNSOLVABLE"


class OpMatrix(list):
    """Row-major list of rows of WeylOps (or OreFractions) with a context."""

    def __init__(self, rows=(), ctx: FractionContext | None = None):
        super().__init__([list(r) for r in rows])
        self.ctx = ctx

    @property
    def shape(self):
        return (len(self), len(self[0]) if self else 0)

    def degree(self) -> int:
        return max((filtration_degree(e) for row in self for e in row
                    if isinstance(e, WeylOp)), default=-1)


def derivations_of(*mats) -> frozenset:
    S = frozenset()
    for M in mats:
        for row in M:
            for e in row:
                if isinstance(e, OreFraction):
                    S |= e.num.derivations() | e.den.derivations()
                elif isinstance(e, WeylOp):
                    S |= e.derivations()
    return S


def mat_mul(A, B):
    """Product of two matrices of WeylOps."""
    n, k = len(A), len(B)
    p = len(B[0]) if B else 0
    first = next(e for row in A for e in row)
    out = []
    for i in range(n):
        row = []
        for j in range(p):
            acc = WeylOp.zero(first.m, first.field)
            for t in range(k):
                if A[i][t] and B[t][j]:
                    acc = acc + A[i][t] * B[t][j]
            row.append(acc)
        out.append(row)
    return out


@dataclass
class LinearSystem:
    """``sum_i A[j][i] V_i = rhs[j]`` over the fraction algebra ``ctx``."""

    A: list
    rhs: list
    ctx: FractionContext
    meta: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.A = [list(r) for r in self.A]
        self.rhs = list(self.rhs)
        if len(self.A) != len(self.rhs):
            raise ValueError("rhs length differs from number of equations")
        widths = {len(r) for r in self.A}
        if len(widths) > 1:
            raise ValueError("ragged coefficient matrix")

    @property
    def q(self) -> int:
        return len(self.A)

    @property
    def p(self) -> int:
        if self.A:
            return len(self.A[0])
        return 0

    @property
    def m(self) -> int:
        return self.ctx.m

    @property
    def field(self):
        for r in self.A:
            for e in r:
                return e.field
        return self.rhs[0].field if self.rhs else None

    @property
    def d(self) -> int:
        degs = [filtration_degree(e) for r in self.A for e in r]
        degs += [filtration_degree(e) for e in self.rhs]
        return max(degs, default=-1)


@dataclass
class TrapezoidSystem:
    """Diagonal-trapezium system ``g_j V_j + sum_{i>r} g_{j,i} V_i = f_j``.

    ``rows`` are in permuted column order: original column ``col_perm[c]`` sits
    at position ``c``; the first ``rank`` positions are pivot columns.
    """

    rows: list
    rhs: list
    rank: int
    col_perm: list
    row_perm: list
    ctx: FractionContext
    C1: list = None
    C2: list = None
    certificates: dict = dc_field(default_factory=dict)

    @property
    def p(self) -> int:
        return len(self.col_perm)

    @property
    def pivots(self):
        return [self.rows[j][j] for j in range(self.rank)]

    def as_system(self) -> LinearSystem:
        return LinearSystem(self.rows, self.rhs, self.ctx)


# --- rank by fraction-free elimination ------------------------------------------------

def _left_annihilating_pair(piv: WeylOp, g: WeylOp, K):
    """Nonzero ``(u, v)`` with ``u*piv + v*g == 0`` and ``v != 0``."""
    m, field = piv.m, piv.field
    if piv.is_constant():
        return (-g).scale(field.one / piv.constant_coeff()), WeylOp.constant(m, 1, field)
    if g.is_constant():
        return WeylOp.constant(m, 1, field), (-piv).scale(field.one / g.constant_coeff())
    if piv == g:
        return WeylOp.constant(m, -1, field), WeylOp.constant(m, 1, field)
    if piv * g == g * piv:
        return g, -piv
    u, v = syzygy([[piv], [g]], "left", K)
    return u, v


def _to_polynomial_rows(G):
    """Clear column denominators of a fraction matrix by right multiplication."""
    from .ore import common_multiple

    if not any(isinstance(e, OreFraction) for row in G for e in row):
        return [list(r) for r in G]
    rows = [list(r) for r in G]
    ncols = len(rows[0])
    for j in range(ncols):
        ents = [rows[i][j] for i in range(len(rows))]
        fr = [e for e in ents if isinstance(e, OreFraction) and not e.is_zero()]
        dens = []
        for e in fr:
            if not any(e.den == d for d in dens):
                dens.append(e.den)
        if len(dens) > 1:
            cs, b = common_multiple(dens, "left", fr[0].ctx.Kd)
        elif dens:
            cs, b = [WeylOp.constant(dens[0].m, 1, dens[0].field)], dens[0]
        for i, e in enumerate(ents):
            if isinstance(e, OreFraction):
                if e.is_zero():
                    rows[i][j] = e.num
                else:
                    k = next(t for t, d in enumerate(dens) if d == e.den)
                    rows[i][j] = e.num * cs[k]
            elif dens:
                rows[i][j] = e * b
    return rows


def _monic_row(row):
    lead = next((e for e in row if e), None)
    if lead is None:
        return row
    c = lead.leading_coeff()
    if c == 1:
        return row
    inv = lead.field.one / c
    return [e.scale(inv) if e else e for e in row]


def rank_profile(G, extra_cols: Sequence | None = None, jordan: bool = False):
    """Fraction-free elimination over the skew field of fractions.

    Rows are only ever replaced by ``v*row_k + u*row_piv`` with ``v != 0``, which
    keeps the row space.  Pivots are chosen among the remaining entries by
    minimal Bernstein degree.  Returns ``(pivot_rows, pivot_cols, reduced_rows)``
    in pivot order; ``extra_cols`` are carried along (never pivoted on).  With
    ``jordan`` the pivot columns are also cleared in earlier pivot rows, which
    leaves the pivot rows in diagonal-trapezium shape.
    """
    rows = _to_polynomial_rows(G)
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    if extra_cols is not None:
        for i in range(nrows):
            rows[i] = rows[i] + [extra_cols[i]]
    K = derivations_of(rows)
    active_rows = list(range(nrows))
    active_cols = list(range(ncols))
    prows, pcols = [], []
    while True:
        best = None
        for i in active_rows:
            for j in active_cols:
                e = rows[i][j]
                if e:
                    key = (filtration_degree(e), len(e.terms), i, j)
                    if best is None or key < best[0]:
                        best = (key, i, j)
        if best is None:
            break
        _, i, j = best
        piv = rows[i][j]
        targets = active_rows + prows if jordan else active_rows
        for k in targets:
            if k == i or not rows[k][j]:
                continue
            u, v = _left_annihilating_pair(piv, rows[k][j], K)
            rows[k] = _monic_row([v * a + u * b if (a or b) else a
                                  for a, b in zip(rows[k], rows[i])])
            assert not rows[k][j]
        prows.append(i)
        pcols.append(j)
        active_rows.remove(i)
        active_cols.remove(j)
    return prows, pcols, rows


def skew_rank(G) -> int:
    """Rank over the skew field of fractions (size of a maximal non-singular minor)."""
    if not G or not G[0]:
        return 0
    return len(rank_profile(G)[0])


# --- quasi-inverses and block reduction ----------------------------------------------------

def left_quasi_inverse(B, K=None, check: bool = True):
    """``C`` with ``C*B`` diagonal and nonzero on the diagonal.

    Row ``i`` of ``C`` is a left syzygy of ``B`` with column ``i`` removed.
    """
    B = [list(r) for r in B]
    p = len(B)
    if any(len(r) != p for r in B):
        raise SingularInput("left quasi-inverse needs a square matrix")
    if K is None:
        K = derivations_of(B)
    first = B[0][0]
    m, field = first.m, first.field
    if check and skew_rank(B) != p:
        raise SingularInput("matrix is singular over the skew field")
    if p == 1:
        return [[WeylOp.constant(m, 1, field, Ka=K)]]
    C = []
    for i in range(p):
        Bi = [[B[r][c] for c in range(p) if c != i] for r in range(p)]
        C.append(syzygy(Bi, "left", K))
    return C


def quasi_inverse_bound(m: int, K, p: int, d: int) -> int:
    return syzygy_bound(m, K, p, d)


def block_reduce(G, r: int, C1, ctx: FractionContext | None = None):
    """Kill the rows below a non-singular leading ``r x r`` block.

    Returns ``(C2, reduced)`` where ``[[C1, 0], [C2, E]] * G`` equals ``reduced``:
    the top ``r`` rows are ``C1 * G[:r]`` (diagonal on the leading block) and the
    bottom rows vanish.  ``C2`` holds fractions.
    """
    G = [list(row) for row in G]
    p1 = len(G)
    p2 = len(G[0]) if G else 0
    first = next(e for row in G for e in row)
    m, field = first.m, first.field
    if ctx is None:
        ctx = FractionContext.skew(m, derivations_of(G, C1))
    top = mat_mul(C1, G[:r])
    g = [top[i][i] for i in range(r)]
    if any(not gi for gi in g):
        raise SingularInput("C1 is not a left quasi-inverse of the leading block")
    for i in range(r):
        for j in range(r):
            if i != j and top[i][j]:
                raise SingularInput("C1*G1 is not diagonal")
    C2 = []
    one = WeylOp.constant(m, 1, field)
    zero = OreFraction.from_op(ctx, WeylOp.zero(m, field))
    for k in range(r, p1):
        row = []
        for j in range(r):
            acc = zero
            for i in range(r):
                if G[k][i] and C1[i][j]:
                    t = frac_mul(OreFraction(ctx, -G[k][i], g[i]),
                                 OreFraction(ctx, C1[i][j], one))
                    acc = frac_add(acc, t)
            row.append(acc)
        C2.append(row)
    reduced = [list(rw) for rw in top]
    for idx, k in enumerate(range(r, p1)):
        out_row = []
        for c in range(p2):
            acc = OreFraction.from_op(ctx, G[k][c])
            for j in range(r):
                if G[j][c] and not C2[idx][j].is_zero():
                    acc = frac_add(acc, frac_mul(C2[idx][j], OreFraction.from_op(ctx, G[j][c])))
            if not acc.is_zero():
                raise RankViolation(f"entry ({k},{c}) survives; rank exceeds {r}")
            out_row.append(WeylOp.zero(m, field))
        reduced.append(out_row)
    return C2, reduced


def _apply_C2(C2, rhs_top, rhs_bottom, ctx):
    """``C2 * rhs_top + rhs_bottom`` as fractions."""
    out = []
    for idx, row in enumerate(C2):
        acc = OreFraction.from_op(ctx, rhs_bottom[idx])
        for j, c in enumerate(row):
            if rhs_top[j] and not c.is_zero():
                acc = frac_add(acc, frac_mul(c, OreFraction.from_op(ctx, rhs_top[j])))
        out.append(acc)
    return out


def trapezoid_reduce(sys: LinearSystem, method: str = "quasi-inverse"):
    """Reduce a system to diagonal-trapezium form, or report it unsolvable.

    Returns :data:`UNSOLVABLE` or a :class:`TrapezoidSystem` with the same
    solutions (after undoing ``col_perm``).  ``method='quasi-inverse'``
    multiplies by a left quasi-inverse of a maximal non-singular block and
    tests consistency with the complementary block (the default);
    ``method='gauss'`` reaches the same shape by fraction-free Gauss-Jordan
    steps.
    """
    if method == "gauss":
        return _trapezoid_gauss(sys)
    if method != "quasi-inverse":
        raise ValueError(f"unknown method {method!r}")
    A, rhs = sys.A, sys.rhs
    q, p = sys.q, sys.p
    field = sys.field
    m = sys.m
    certs = {"q": q, "p": p, "d_in": sys.d}
    if q == 0:
        return TrapezoidSystem([], [], 0, list(range(p)), [], sys.ctx, certificates=certs)
    if p == 0:
        if any(rhs):
            return UNSOLVABLE
        return TrapezoidSystem([], [], 0, [], list(range(q)), sys.ctx, certificates=certs)
    prows, pcols, _ = rank_profile(A)
    r = len(prows)
    certs["rank"] = r
    row_perm = prows + [i for i in range(q) if i not in prows]
    col_perm = pcols + [j for j in range(p) if j not in pcols]
    PA = [[A[i][j] for j in col_perm] for i in row_perm]
    Prhs = [rhs[i] for i in row_perm]
    if r == 0:
        if any(Prhs):
            return UNSOLVABLE
        return TrapezoidSystem([], [], 0, col_perm, row_perm, sys.ctx, certificates=certs)
    K = derivations_of(PA)
    G1 = [row[:r] for row in PA[:r]]
    C1 = left_quasi_inverse(G1, K, check=False)
    certs["deg_C1"] = max(filtration_degree(e) for row in C1 for e in row)
    certs["bound_C1"] = quasi_inverse_bound(m, K, r, max(filtration_degree(e)
                                                          for row in G1 for e in row))
    C2 = None
    if q > r:
        skew = FractionContext.skew(m, derivations_of(PA, C1, [Prhs]))
        C2, _ = block_reduce(PA, r, C1, skew)
        residual = _apply_C2(C2, Prhs[:r], Prhs[r:], skew)
        if any(not x.is_zero() for x in residual):
            return UNSOLVABLE
    top = mat_mul(C1, PA[:r])
    f = [WeylOp.zero(m, field)] * r
    for j in range(r):
        acc = WeylOp.zero(m, field)
        for i in range(r):
            if C1[j][i] and Prhs[i]:
                acc = acc + C1[j][i] * Prhs[i]
        f[j] = acc
    certs["d_out"] = max([filtration_degree(e) for row in top for e in row]
                         + [filtration_degree(e) for e in f])
    d = max(sys.d, 0)
    certs["bound_out"] = (4 * m * (r - 1) + 1) * d
    ka = sys.ctx.Ka
    top = [[e.with_Ka(ka) if e else WeylOp.zero(m, field, Ka=ka) for e in row] for row in top]
    f = [e.with_Ka(ka) if e else WeylOp.zero(m, field, Ka=ka) for e in f]
    return TrapezoidSystem(top, f, r, col_perm, row_perm, sys.ctx, C1=C1, C2=C2,
                           certificates=certs)


def _trapezoid_gauss(sys: LinearSystem):
    A, rhs = sys.A, sys.rhs
    q, p = sys.q, sys.p
    certs = {"q": q, "p": p, "d_in": sys.d, "method": "gauss"}
    if p == 0 or q == 0:
        if any(rhs):
            return UNSOLVABLE
        return TrapezoidSystem([], [], 0, list(range(p)), list(range(q)), sys.ctx,
                               certificates=certs)
    prows, pcols, rows = rank_profile(A, rhs, jordan=True)
    r = len(prows)
    certs["rank"] = r
    rest = [i for i in range(q) if i not in prows]
    if any(rows[i][p] for i in rest):
        return UNSOLVABLE
    col_perm = pcols + [j for j in range(p) if j not in pcols]
    ka = sys.ctx.Ka
    top = [[rows[i][c].with_Ka(ka) for c in col_perm] for i in prows]
    f = [rows[i][p].with_Ka(ka) for i in prows]
    certs["d_out"] = max([filtration_degree(e) for row in top for e in row]
                         + [filtration_degree(e) for e in f])
    certs["bound_out"] = (4 * sys.m * (r - 1) + 1) * max(sys.d, 0)
    return TrapezoidSystem(top, f, r, col_perm, prows + rest, sys.ctx, certificates=certs)
