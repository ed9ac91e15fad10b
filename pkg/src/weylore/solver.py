"""Solving linear systems over the fraction algebras ``A_m (A_m^(K))^{-1}``.

Two independent solvers live here:

* :func:`decide_solve` eliminates the derivations outside ``K`` one at a time.
  Each step turns a diagonal-trapezium system into a system whose coefficients
  no longer involve ``d_gamma``, by bounding the ``d_gamma``-degree of a
  solution and equating powers of ``d_gamma``.  Solvability is preserved in both
  directions, so an inconsistent final system certifies unsolvability.
* :func:`ansatz_solve` posits ``v_i = c_i b^{-1}`` with undetermined
  coefficients up to a degree and solves an F-linear system.  It cannot prove
  unsolvability at practical degrees but serves as a cross-check.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field
from typing import Sequence

from .errors import (
    NotNormalized,
    ResourceCap,
    RetryLimitExceeded,
    ZeroDenominator,
)
from .kernel import ScalarMatrix, matrix_inverse, nullspace
from .matops import UNSOLVABLE, LinearSystem, TrapezoidSystem, trapezoid_reduce
from .ore import (
    FractionContext,
    OreFraction,
    ansatz_budget,
    ansatz_kernel,
    common_multiple,
    frac_add,
    frac_sub,
    swap_denominator,
    syzygy,
)
from .weyl import (
    WeylOp,
    d_power,
    filtration_degree,
    gamma_decompose,
    gamma_degree,
    gamma_lc,
    monomials_up_to,
    omega_transform,
)

__all__ = [
    "SOLVED",
    "UNSOLVABLE",
    "UNDECIDED_AT_CAP",
    "SolveOutcome",
    "NormalizationRecord",
    "normalize_family",
    "gamma_div_rem",
    "eliminate_gamma",
    "base_solve_skew",
    "decide_solve",
    "ansatz_solve",
    "verify_solution",
    "degree_bounds",
]

SOLVED = "SOLVED"
UNDECIDED_AT_CAP = "UNDECIDED_AT_CAP"

OMEGA_WIDTH = 8
OMEGA_RETRIES = 32
DEFAULT_SCHEDULE = tuple(range(9))
MAX_UNKNOWNS = 200
MAX_ANSATZ = 1500
BASE_SCHEDULE = range(4)


@dataclass
class SolveOutcome:
    status: str
    solution: list | None = None
    certificates: dict = dc_field(default_factory=dict)

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


@dataclass(frozen=True)
class NormalizationRecord:
    Omega: ScalarMatrix
    gamma: int
    attempts: int
    K: frozenset = frozenset()


# --- degree bounds ---------------------------------------------------------------------------

def _n4(m, K, d, r):
    e = m - len(K)
    return (2 * m) ** (4 ** e) * (d * r) ** (3 ** e)


def degree_bounds(query: str, **kw) -> int:
    """Closed-form degree bounds, evaluated exactly.

    ``lemma_vector(m, K, p, d)``, ``theorem_solution(m, K, d, p, q)``,
    ``elimination(m, r, d)``, ``final_ansatz(m, K, p, N5)``, ``N4(m, K, d, r)``,
    ``N5(m, K, d, r)``.
    """
    if query == "lemma_vector":
        return 2 * (kw["m"] + len(kw["K"])) * (kw["p"] - 1) * kw["d"]
    if query == "theorem_solution":
        m, K = kw["m"], kw["K"]
        mn = min(kw["p"], kw["q"])
        return (16 * m ** 4 * kw["d"] ** 2 * mn ** 2) ** (4 ** (m - len(K)))
    if query == "elimination":
        return 16 * kw["m"] ** 2 * kw["r"] ** 2 * kw["d"]
    if query == "final_ansatz":
        return (2 * (kw["m"] + len(kw["K"])) * kw["p"] + 1) * kw["N5"]
    if query == "N4":
        return _n4(kw["m"], kw["K"], kw["d"], kw["r"])
    if query == "N5":
        return 4 * (kw["m"] + len(kw["K"])) * _n4(kw["m"], kw["K"], kw["d"], kw["r"]) ** 2
    raise ValueError(f"unknown bound {query!r}")


# --- normalization ------------------------------------------------------------------------------

def _is_normalized(h: WeylOp, gamma: int, K) -> bool:
    if not h:
        return True
    return (gamma_lc(h, gamma).in_subalgebra(K)
            and gamma_degree(h, gamma) == filtration_degree(h, "ordK", K))


def normalize_family(H: Sequence[WeylOp], gamma: int, K, seed=0, retries: int = OMEGA_RETRIES):
    """Find ``Omega`` making every member of ``H`` normalized w.r.t. ``d_gamma``.

    ``Omega`` acts on the derivations outside ``K`` (sorted).  The identity is
    tried first, then random integer matrices with widening entries.
    """
    K = frozenset(K)
    if gamma in K:
        raise ValueError("gamma must lie outside K")
    m = H[0].m if H else gamma
    field = H[0].field if H else None
    idx = [i for i in range(1, m + 1) if i not in K]
    n = len(idx)
    rng = random.Random(seed)
    width = OMEGA_WIDTH
    for attempt in range(retries + 1):
        if attempt == 0:
            Om = ScalarMatrix.identity(n, field) if field else ScalarMatrix.identity(n)
        else:
            dense = [[rng.randint(-width, width) for _ in range(n)] for _ in range(n)]
            Om = ScalarMatrix.from_dense(dense, field)
            width *= 2
            if matrix_inverse(Om) is None:
                continue
        if attempt == 0:
            Hbar = list(H)
        else:
            Hbar = [omega_transform(h, Om, K) for h in H]
        if all(_is_normalized(h, gamma, K) for h in Hbar):
            return NormalizationRecord(Om, gamma, attempt + 1, K), Hbar
    raise RetryLimitExceeded(f"no normalizing Omega in {retries} random attempts")


def _inverse_record(rec: NormalizationRecord) -> ScalarMatrix:
    return matrix_inverse(rec.Omega)


# --- division with remainder ---------------------------------------------------------------------

def gamma_div_rem(v: OreFraction, h: WeylOp, gamma: int):
    """``v = h*phi + psi`` with ``deg_gamma(psi) < deg_gamma(h)``.

    ``h`` must be normalized: its leading ``d_gamma``-coefficient has to be an
    admissible denominator.
    """
    ctx = v.ctx
    m, field = ctx.m, v.field
    if not h:
        raise ZeroDivisionError("division by zero operator")
    t = gamma_degree(h, gamma)
    lch = gamma_lc(h, gamma)
    if not lch.in_subalgebra(ctx.Kd):
        raise NotNormalized(f"leading d{gamma}-coefficient {lch} is not a valid denominator")
    inner = FractionContext(m, ctx.Ka - {gamma}, ctx.Kd)
    zero = OreFraction.from_op(ctx, WeylOp.zero(m, field))
    phi = zero
    cur = v
    while not cur.is_zero() and gamma_degree(cur.num, gamma) >= t:
        t1 = gamma_degree(cur.num, gamma)
        lcv = gamma_lc(cur.num, gamma)
        alpha, beta = swap_denominator(lch, lcv, inner)
        num = (d_power(m, gamma, t1 - t, field) * alpha).with_Ka(ctx.Ka)
        term = OreFraction(ctx, num, (cur.den * beta).with_Ka(ctx.Kd))
        phi = frac_add(phi, term)
        prod = OreFraction(ctx, (h * term.num).with_Ka(ctx.Ka), term.den)
        nxt = frac_sub(cur, prod)
        if not nxt.is_zero() and gamma_degree(nxt.num, gamma) >= t1:
            raise NotNormalized("division step did not lower the d_gamma-degree")
        cur = nxt
    return phi, cur


# --- one elimination step --------------------------------------------------------------------------

def _check_budget(n_unknowns, max_unknowns):
    if n_unknowns > max_unknowns:
        raise ResourceCap(f"{n_unknowns} unknowns exceed the budget of {max_unknowns}")


def eliminate_gamma(sys2: TrapezoidSystem, gamma: int, seed=0,
                    max_unknowns: int = MAX_UNKNOWNS) -> LinearSystem:
    """Replace a trapezium system by an equisolvable one free of ``d_gamma``.

    The returned system lives over ``Ka - {gamma}``; ``system.meta`` carries
    what :func:`_lift_elimination` needs to rebuild a solution of ``sys2``.
    """
    ctx = sys2.ctx
    m = ctx.m
    if gamma not in ctx.Ka or gamma in ctx.Kd:
        raise ValueError(f"gamma={gamma} must lie in Ka - Kd")
    r, p = sys2.rank, sys2.p
    rows, rhs = sys2.rows, sys2.rhs
    field = next((e.field for row in rows for e in row), None)
    if field is None:
        field = rhs[0].field if rhs else None
    new_ctx = FractionContext(m, ctx.Ka - {gamma}, ctx.Kd)
    certs = {"gamma": gamma, "rank": r, "p": p}
    # a syzygy of [diag(g) | column i] for every free column
    hs = {}
    for i in range(r, p):
        B = [[rows[j][c] if c == j else WeylOp.zero(m, field) for c in range(r)] + [rows[j][i]]
             for j in range(r)]
        vec = syzygy(B, "right", ctx.Ka)
        hs[i] = vec[r]
    # Normalize the h^(i) together with the pivots when more than one derivation
    # is still to be eliminated; otherwise every lc is already a denominator.
    fixed = frozenset(range(1, m + 1)) - (ctx.Ka - ctx.Kd)
    rec = None
    family = [hs[i] for i in range(r, p)] + [rows[j][j] for j in range(r)]
    if len(ctx.Ka - ctx.Kd) >= 2 and family:
        rec, _ = normalize_family(family, gamma, fixed, seed)
        if rec.attempts > 1:
            T = lambda a: omega_transform(a, rec.Omega, fixed) if a else a
            rows = [[T(e) for e in row] for row in rows]
            rhs = [T(e) for e in rhs]
            hs = {i: T(h) for i, h in hs.items()}
        certs["omega_attempts"] = rec.attempts
    t = {i: gamma_degree(hs[i], gamma) for i in range(r, p)}
    # d_gamma-degree bounds for each unknown: free ones below t_i, pivots by degree count.
    top = {}
    for i in range(r, p):
        top[i] = t[i] - 1
    for j in range(r):
        cand = [gamma_degree(rhs[j], gamma)]
        cand += [gamma_degree(rows[j][i], gamma) + top[i] for i in range(r, p)
                 if rows[j][i] and top[i] >= 0]
        top[j] = max(cand) - gamma_degree(rows[j][j], gamma)
    certs["t"] = [t[i] for i in range(r, p)]
    certs["N1"] = [top[j] for j in range(r)]
    unknowns = [(col, s) for col in range(p) for s in range(top[col] + 1)]
    _check_budget(len(unknowns), max_unknowns)
    # expand g * d_gamma^s and equate the d_gamma^l parts
    eqs: dict = {}
    for j in range(r):
        for u, (col, s) in enumerate(unknowns):
            g = rows[j][col]
            if not g:
                continue
            for l, piece in gamma_decompose(g * d_power(m, gamma, s, field), gamma):
                eqs.setdefault((j, l), {})[u] = piece
        for l, piece in gamma_decompose(rhs[j], gamma):
            eqs.setdefault((j, l), {})
    keys = sorted(eqs)
    rhs_parts = [{l: piece for l, piece in gamma_decompose(rhs[j], gamma)} for j in range(r)]
    zero = WeylOp.zero(m, field, Ka=new_ctx.Ka)
    A = [[eqs[k].get(u, zero).with_Ka(new_ctx.Ka) if eqs[k].get(u) else zero
          for u in range(len(unknowns))] for k in keys]
    b = [rhs_parts[j].get(l, zero).with_Ka(new_ctx.Ka) if rhs_parts[j].get(l) else zero
         for (j, l) in keys]
    certs["equations"] = len(keys)
    certs["unknowns"] = len(unknowns)
    certs["deg_out"] = max([filtration_degree(e) for row in A for e in row]
                           + [filtration_degree(e) for e in b], default=-1)
    out = LinearSystem(A, b, new_ctx)
    out.meta = {"unknowns": unknowns, "p": p, "gamma": gamma, "norm": rec,
                "fixed": fixed, "certificates": certs}
    return out


def _lift_elimination(step: LinearSystem, sol, ctx: FractionContext, field):
    """Reassemble ``psi_col = sum_s d_gamma^s psi_{col,s}`` and undo ``Omega``."""
    meta = step.meta
    m, gamma, p = ctx.m, meta["gamma"], meta["p"]
    acc = [OreFraction.from_op(ctx, WeylOp.zero(m, field)) for _ in range(p)]
    for (col, s), v in zip(meta["unknowns"], sol):
        if v.is_zero():
            continue
        num = (d_power(m, gamma, s, field) * v.num).with_Ka(ctx.Ka)
        acc[col] = frac_add(acc[col], OreFraction(ctx, num, v.den.with_Ka(ctx.Kd)))
    rec = meta["norm"]
    if rec is not None and rec.attempts > 1:
        inv = _inverse_record(rec)
        fixed = meta["fixed"]
        acc = [OreFraction(ctx, omega_transform(v.num, inv, fixed).with_Ka(ctx.Ka),
                           omega_transform(v.den, inv, fixed).with_Ka(ctx.Kd))
               if not v.is_zero() else v for v in acc]
    return acc


# --- base case and driver ------------------------------------------------------------------------

def _unpermute(tr: TrapezoidSystem, vals, ctx, field):
    out = [None] * tr.p
    for c, orig in enumerate(tr.col_perm):
        out[orig] = vals[c]
    zero = OreFraction.from_op(ctx, WeylOp.zero(ctx.m, field))
    return [zero if v is None else v for v in out]


def _solve_trapezoid_skew(tr: TrapezoidSystem, ctx, field):
    vals = []
    for j in range(tr.rank):
        alpha, beta = swap_denominator(tr.rows[j][j], tr.rhs[j], ctx)
        vals.append(OreFraction(ctx, alpha.with_Ka(ctx.Ka), beta.with_Ka(ctx.Kd)))
    zero = OreFraction.from_op(ctx, WeylOp.zero(ctx.m, field))
    vals += [zero] * (tr.p - tr.rank)
    return _unpermute(tr, vals, ctx, field)


def base_solve_skew(sys: LinearSystem) -> SolveOutcome:
    """Solve a system whose coefficients and denominators share one subalgebra."""
    ctx = sys.ctx
    if not ctx.is_skew_field:
        raise ValueError("base case needs Ka == Kd")
    tr = trapezoid_reduce(sys)
    if tr == UNSOLVABLE:
        return SolveOutcome(UNSOLVABLE, None, {"stage": "base"})
    sol = _solve_trapezoid_skew(tr, ctx, sys.field)
    return SolveOutcome(SOLVED, sol, {"stage": "base", "rank": tr.rank})


def _solve_rec(sys: LinearSystem, seed, ledger, max_unknowns):
    ctx = sys.ctx
    field = sys.field
    tr = trapezoid_reduce(sys)
    if tr == UNSOLVABLE:
        ledger.append({"Ka": sorted(ctx.Ka), "status": UNSOLVABLE})
        return None
    ledger.append({"Ka": sorted(ctx.Ka), "rank": tr.rank,
                   **{k: v for k, v in tr.certificates.items() if k != "q"}})
    if ctx.is_skew_field:
        # solvable; a low-degree shared-denominator solution of the unreduced
        # system is usually far cheaper than inverting the reduced pivots
        try:
            with ansatz_budget(MAX_ANSATZ // 3):
                quick = ansatz_solve(sys, degree_schedule=BASE_SCHEDULE)
        except ResourceCap:
            quick = None
        if quick is not None and quick.solved:
            ledger[-1]["base"] = "ansatz"
            return quick.solution
        ledger[-1]["base"] = "swap"
        return _solve_trapezoid_skew(tr, ctx, field)
    gamma = min(ctx.Ka - ctx.Kd)
    step = eliminate_gamma(tr, gamma, seed, max_unknowns)
    ledger[-1]["elimination"] = step.meta["certificates"]
    if not step.A or not step.A[0]:
        # no unknowns survive: solvable iff every equation is 0 = 0
        if any(step.rhs):
            ledger.append({"Ka": sorted(step.ctx.Ka), "status": UNSOLVABLE})
            return None
        inner = []
    else:
        inner = _solve_rec(step, seed + 1, ledger, max_unknowns)
        if inner is None:
            return None
    vals = _lift_elimination(step, inner, ctx, field)
    return _unpermute(tr, vals, ctx, field)


def decide_solve(sys: LinearSystem, ctx: FractionContext | None = None, seed=0,
                 max_unknowns: int = MAX_UNKNOWNS, verify: bool = True,
                 max_ansatz: int | None = MAX_ANSATZ) -> SolveOutcome:
    """Decide solvability of ``sys`` over ``ctx`` and return a solution if any.

    ``max_unknowns`` caps the unknowns of each eliminated system and
    ``max_ansatz`` the scalar unknowns of every internal ansatz (syzygies,
    common multiples); exceeding either gives ``UNDECIDED_AT_CAP``.
    """
    if ctx is not None and ctx != sys.ctx:
        sys = LinearSystem(sys.A, sys.rhs, ctx)
    ctx = sys.ctx
    ledger: list = []
    certs = {"stages": ledger, "m": ctx.m, "K": sorted(ctx.Kd), "p": sys.p, "q": sys.q,
             "d": sys.d}
    try:
        with ansatz_budget(max_ansatz):
            sol = _solve_rec(sys, seed, ledger, max_unknowns)
            if sol is not None and verify and not verify_solution(sys, sol):
                raise AssertionError("decide_solve produced a solution that fails verification")
    except ResourceCap as exc:
        certs["cap"] = str(exc)
        return SolveOutcome(UNDECIDED_AT_CAP, None, certs)
    if sol is None:
        return SolveOutcome(UNSOLVABLE, None, certs)
    certs["solution_degree"] = max((max(v.deg_num, v.deg_den) for v in sol), default=-1)
    if sys.d >= 0 and sys.p and sys.q:
        certs["theorem_bound_exponent"] = 4 ** (ctx.m - len(ctx.Kd))
    return SolveOutcome(SOLVED, sol, certs)


# --- the ansatz solver ------------------------------------------------------------------------------

def ansatz_solve(sys: LinearSystem, ctx: FractionContext | None = None,
                 degree_schedule: Sequence[int] = DEFAULT_SCHEDULE) -> SolveOutcome:
    """Look for ``v_i = c_i b^{-1}`` with ``deg(c_i), deg(b) <= D`` for D in the schedule."""
    if ctx is not None and ctx != sys.ctx:
        sys = LinearSystem(sys.A, sys.rhs, ctx)
    ctx = sys.ctx
    m, field, p = ctx.m, sys.field, sys.p
    certs = {"schedule": list(degree_schedule)}
    eqs = []
    for j in range(sys.q):
        eq = [(i, sys.A[j][i], "left") for i in range(p) if sys.A[j][i]]
        if sys.rhs[j]:
            eq.append((p, -sys.rhs[j], "left"))
        eqs.append(eq)
    for D in degree_schedule:
        cm = monomials_up_to(m, D, ctx.Ka)
        bm = monomials_up_to(m, D, ctx.Kd)
        ker = ansatz_kernel(m, field, [cm] * p + [bm], eqs, limit=None,
                            Kas=[ctx.Ka] * p + [ctx.Kd], prefilter=False)
        for vec in ker:
            b = vec[p]
            if b:
                sol = [OreFraction(ctx, c, b) for c in vec[:p]]
                certs["degree"] = D
                return SolveOutcome(SOLVED, sol, certs)
    top = max(degree_schedule, default=-1)
    bound = degree_bounds("theorem_solution", m=m, K=ctx.Kd, d=max(sys.d, 1),
                          p=max(p, 1), q=max(sys.q, 1))
    certs["theorem_bound"] = bound
    if top >= bound:
        return SolveOutcome(UNSOLVABLE, None, certs)
    return SolveOutcome(UNDECIDED_AT_CAP, None, certs)


# --- verification -----------------------------------------------------------------------------------

def _as_pair(v):
    if isinstance(v, OreFraction):
        return v.num, v.den
    num, den = v
    if not den:
        raise ZeroDenominator("solution entry has a zero denominator")
    return num, den


def verify_solution(sys: LinearSystem, sol) -> bool:
    """Exact check of ``sum_i a_ji v_i = a_j`` after clearing denominators."""
    if len(sol) != sys.p:
        raise ValueError("solution length differs from number of unknowns")
    pairs = [_as_pair(v) for v in sol]
    m = sys.m
    field = sys.field
    if not pairs:
        return all(not a for a in sys.rhs)
    dens = []
    for _, den in pairs:
        if not any(den == e for e in dens):
            dens.append(den)
    if len(dens) == 1:
        nums, b = [n for n, _ in pairs], dens[0]
    else:
        cs, b = common_multiple(dens, "left", sys.ctx.Kd)
        nums = [n * cs[next(k for k, e in enumerate(dens) if e == den)] for n, den in pairs]
    for j in range(sys.q):
        acc = WeylOp.zero(m, field)
        for i in range(sys.p):
            if sys.A[j][i] and nums[i]:
                acc = acc + sys.A[j][i] * nums[i]
        if acc != (sys.rhs[j] * b if sys.rhs[j] else WeylOp.zero(m, field)):
            return False
    return True
