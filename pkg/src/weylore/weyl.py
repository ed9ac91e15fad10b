"""Normal-ordered arithmetic in Weyl algebras and their D-subalgebras.

An element of ``A_m = F[x1..xm, d1..dm]`` is stored as a sparse map from
monomials ``x^a d^b`` (all x's to the left of all d's) to nonzero field
coefficients.  Variable indices are 1-based in the public API and 0-based
inside exponent tuples.
"""

from __future__ import annotations

import random
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb, factorial, perm
from typing import Iterable, Sequence

from .errors import CharPUnsupported, FieldMismatch, IndexOutOfRange, MissingK, SingularOmega
from .kernel import QQ, Field, ScalarMatrix, matrix_inverse

__all__ = [
    "VarIndexSet",
    "Monomial",
    "WeylOp",
    "WeylAlgebra",
    "normal_order_product",
    "linear_combine",
    "filtration_degree",
    "gamma_degree",
    "gamma_decompose",
    "gamma_compose",
    "omega_transform",
    "apply_to_polynomial",
    "adjoint",
]


def VarIndexSet(m: int, members: Iterable[int] = ()) -> frozenset:
    """Validated subset of ``{1..m}``."""
    members = list(members)
    if len(set(members)) != len(members):
        raise ValueError(f"duplicate indices in {members}")
    for k in members:
        if not 1 <= k <= m:
            raise ValueError(f"index {k} outside 1..{m}")
    return frozenset(members)


class Monomial(tuple):
    """``(xexp, dexp)`` pair of exponent tuples."""

    __slots__ = ()

    def __new__(cls, xexp: Sequence[int], dexp: Sequence[int]):
        return super().__new__(cls, (tuple(xexp), tuple(dexp)))

    @property
    def xexp(self):
        return self[0]

    @property
    def dexp(self):
        return self[1]


@lru_cache(maxsize=1 << 21)
def _mono_mul(a, b, c, e):
    """``x^a d^b * x^c d^e`` as a tuple of ``((xexp, dexp), int coeff)``."""
    per_var = []
    for bi, ci in zip(b, c):
        opts = []
        for k in range(min(bi, ci) + 1):
            opts.append((k, comb(bi, k) * perm(ci, k)))
        per_var.append(opts)
    out = []
    for choice in product(*per_var):
        coeff = 1
        xs = []
        ds = []
        for i, (k, w) in enumerate(choice):
            coeff *= w
            xs.append(a[i] + c[i] - k)
            ds.append(b[i] + e[i] - k)
        out.append(((tuple(xs), tuple(ds)), coeff))
    return tuple(out)


def _sort_key(mono):
    xe, de = mono
    return (sum(xe) + sum(de), xe, de)


class WeylOp:
    """Immutable element of ``A_m^(Ka)`` over an exact field.

    ``terms`` maps ``(xexp, dexp)`` exponent tuples to nonzero coefficients.
    ``Ka`` is the set of derivations that may occur (default: all).
    """

    __slots__ = ("m", "field", "terms", "Ka", "_hash")

    def __init__(self, m: int, terms=None, field: Field = QQ, Ka=None, check=True):
        self.m = m
        self.field = field
        if terms is None:
            terms = {}
        if check:
            clean = {}
            for mono, c in terms.items():
                c = field(c)
                if c:
                    xe, de = mono
                    if len(xe) != m or len(de) != m:
                        raise ValueError("exponent tuple length differs from m")
                    clean[(tuple(xe), tuple(de))] = c
            terms = clean
        self.terms = terms
        if Ka is None:
            Ka = frozenset(range(1, m + 1))
        else:
            Ka = frozenset(Ka)
            if check:
                for _, de in terms:
                    for i, e in enumerate(de):
                        if e and (i + 1) not in Ka:
                            raise ValueError(f"d{i + 1} not allowed in A^({sorted(Ka)})")
        self.Ka = Ka
        self._hash = None

    # construction helpers -----------------------------------------------------
    def _new(self, terms, Ka=None):
        return WeylOp(self.m, terms, self.field, self.Ka if Ka is None else Ka, check=False)

    def with_Ka(self, Ka) -> "WeylOp":
        """Same element, viewed in ``A^(Ka)`` (raises if it does not fit)."""
        return WeylOp(self.m, self.terms, self.field, Ka, check=True)

    # queries ------------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def derivations(self) -> frozenset:
        used = set()
        for _, de in self.terms:
            for i, e in enumerate(de):
                if e:
                    used.add(i + 1)
        return frozenset(used)

    def in_subalgebra(self, K) -> bool:
        return self.derivations() <= frozenset(K)

    def is_constant(self) -> bool:
        z = (0,) * self.m
        return all(mono == (z, z) for mono in self.terms)

    def constant_coeff(self):
        z = (0,) * self.m
        return self.terms.get((z, z), self.field.zero)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: _sort_key(t[0]), reverse=True)

    def leading_coeff(self):
        """Coefficient of the largest monomial in the printing order."""
        if not self.terms:
            return self.field.zero
        return self.sorted_terms()[0][1]

    # arithmetic ---------------------------------------------------------------
    def _check_compat(self, other):
        if not isinstance(other, WeylOp):
            raise TypeError(f"expected WeylOp, got {type(other).__name__}")
        if other.field != self.field:
            raise FieldMismatch(f"{self.field!r} vs {other.field!r}")
        if other.m != self.m:
            raise ValueError(f"m={self.m} vs m={other.m}")

    def _lift(self, other):
        if isinstance(other, WeylOp):
            self._check_compat(other)
            return other
        return WeylOp.constant(self.m, other, self.field, Ka=self.Ka)

    def __add__(self, other):
        other = self._lift(other)
        t = dict(self.terms)
        for mono, c in other.terms.items():
            v = t.get(mono)
            if v is None:
                t[mono] = c
            else:
                v = v + c
                if v:
                    t[mono] = v
                else:
                    del t[mono]
        return self._new(t, self.Ka | other.Ka)

    __radd__ = __add__

    def __neg__(self):
        return self._new({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def scale(self, c) -> "WeylOp":
        c = self.field(c)
        if not c:
            return self._new({})
        return self._new({k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, WeylOp):
            return normal_order_product(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        if isinstance(other, WeylOp):
            return normal_order_product(other, self)
        return self.scale(other)

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative power of an operator")
        result = WeylOp.constant(self.m, 1, self.field, Ka=self.Ka)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, WeylOp):
            return self.m == other.m and self.field == other.field and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == WeylOp.constant(self.m, other, self.field).terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.m, self.field, frozenset(self.terms.items())))
        return self._hash

    # factories ----------------------------------------------------------------
    @staticmethod
    def constant(m: int, c, field: Field = QQ, Ka=None) -> "WeylOp":
        c = field(c)
        z = (0,) * m
        return WeylOp(m, {(z, z): c} if c else {}, field, Ka, check=False)

    @staticmethod
    def zero(m: int, field: Field = QQ, Ka=None) -> "WeylOp":
        return WeylOp(m, {}, field, Ka, check=False)

    @staticmethod
    def monomial(m: int, xexp, dexp, coeff=1, field: Field = QQ, Ka=None) -> "WeylOp":
        return WeylOp(m, {(tuple(xexp), tuple(dexp)): coeff}, field, Ka)

    # printing -----------------------------------------------------------------
    def __str__(self):
        return format_op(self)

    def __repr__(self):
        return f"WeylOp({format_op(self)!r}, m={self.m})"


def _format_coeff(c, field: Field) -> str:
    if field.p:
        return str(int(c))
    return str(c)


def format_monomial(xexp, dexp) -> str:
    parts = []
    for i, e in enumerate(xexp):
        if e == 1:
            parts.append(f"x{i + 1}")
        elif e:
            parts.append(f"x{i + 1}^{e}")
    for i, e in enumerate(dexp):
        if e == 1:
            parts.append(f"d{i + 1}")
        elif e:
            parts.append(f"d{i + 1}^{e}")
    return "*".join(parts)


def format_op(op: WeylOp) -> str:
    """Normal order, graded-lex descending, explicit ``*``."""
    if not op.terms:
        return "0"
    out = []
    for k, ((xe, de), c) in enumerate(op.sorted_terms()):
        mono = format_monomial(xe, de)
        neg = False
        if not op.field.p and c < 0:
            neg = True
            c = -c
        cs = _format_coeff(c, op.field)
        if not mono:
            body = cs
        elif c == 1:
            body = mono
        else:
            body = f"{cs}*{mono}"
        if k == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


class WeylAlgebra:
    """Parent object: ``A = WeylAlgebra(2); x1, x2 = A.xs; d1, d2 = A.ds``."""

    def __init__(self, m: int, field: Field = QQ):
        if m < 1:
            raise ValueError("m must be positive")
        self.m = m
        self.field = field

    def x(self, i: int) -> WeylOp:
        if not 1 <= i <= self.m:
            raise IndexOutOfRange(f"x{i} outside 1..{self.m}")
        xe = [0] * self.m
        xe[i - 1] = 1
        return WeylOp.monomial(self.m, xe, [0] * self.m, 1, self.field)

    def d(self, i: int) -> WeylOp:
        if not 1 <= i <= self.m:
            raise IndexOutOfRange(f"d{i} outside 1..{self.m}")
        de = [0] * self.m
        de[i - 1] = 1
        return WeylOp.monomial(self.m, [0] * self.m, de, 1, self.field)

    @property
    def xs(self):
        return [self.x(i) for i in range(1, self.m + 1)]

    @property
    def ds(self):
        return [self.d(i) for i in range(1, self.m + 1)]

    def __call__(self, c=0) -> WeylOp:
        if isinstance(c, WeylOp):
            return c
        if isinstance(c, str):
            from .parse import parse_operator
            return parse_operator(c, self.m, self.field)
        return WeylOp.constant(self.m, c, self.field)

    @property
    def zero(self):
        return WeylOp.zero(self.m, self.field)

    @property
    def one(self):
        return WeylOp.constant(self.m, 1, self.field)

    def monomials(self, max_degree: int, K=None, kind="bernstein"):
        """All monomials of A^(K) with the given filtration degree at most ``max_degree``."""
        return list(monomials_up_to(self.m, max_degree, K, kind))

    def random_element(self, rng: random.Random, max_degree=2, K=None, nterms=3,
                       coeff_bound=3) -> WeylOp:
        monos = self.monomials(max_degree, K)
        t = {}
        for _ in range(nterms):
            mono = rng.choice(monos)
            c = rng.randint(-coeff_bound, coeff_bound)
            if c:
                t[mono] = self.field(c)
        return WeylOp(self.m, t, self.field, Ka=K)

    def __repr__(self):
        return f"WeylAlgebra({self.m}, {self.field!r})"


def _compositions(n: int, k: int):
    """Exponent tuples of length ``k`` with sum exactly ``n``."""
    if k == 0:
        if n == 0:
            yield ()
        return
    if k == 1:
        yield (n,)
        return
    for i in range(n, -1, -1):
        for rest in _compositions(n - i, k - 1):
            yield (i,) + rest


@lru_cache(maxsize=4096)
def _monomials_cached(m, max_degree, K, kind):
    K = frozenset(range(1, m + 1)) if K is None else K
    dvars = sorted(K)
    out = []
    if kind == "bernstein":
        nv = m + len(dvars)
        for total in range(max_degree + 1):
            for exps in _compositions(total, nv):
                xe = exps[:m]
                de = [0] * m
                for k, e in zip(dvars, exps[m:]):
                    de[k - 1] = e
                out.append((tuple(xe), tuple(de)))
    elif kind == "ordD":
        # x-degree unrestricted is infinite; callers pass max_degree for d only
        for total in range(max_degree + 1):
            for exps in _compositions(total, len(dvars)):
                de = [0] * m
                for k, e in zip(dvars, exps):
                    de[k - 1] = e
                out.append(((0,) * m, tuple(de)))
    else:
        raise ValueError(kind)
    return tuple(out)


def monomials_up_to(m: int, max_degree: int, K=None, kind="bernstein"):
    if max_degree < 0:
        return ()
    K = None if K is None else frozenset(K)
    return _monomials_cached(m, max_degree, K, kind)


# --- operations ------------------------------------------------------------------------

def normal_order_product(a: WeylOp, b: WeylOp) -> WeylOp:
    """Product ``a*b`` rewritten in normal order (x's left of d's)."""
    a._check_compat(b)
    if not a.terms or not b.terms:
        return WeylOp(a.m, {}, a.field, a.Ka | b.Ka, check=False)
    out: dict = {}
    field = a.field
    for (ax, ad), ca in a.terms.items():
        for (bx, bd), cb in b.terms.items():
            cab = ca * cb
            for mono, w in _mono_mul(ax, ad, bx, bd):
                v = out.get(mono)
                inc = cab * w if w != 1 else cab
                if v is None:
                    out[mono] = inc
                else:
                    out[mono] = v + inc
    out = {k: v for k, v in out.items() if v}
    return WeylOp(a.m, out, field, a.Ka | b.Ka, check=False)


def linear_combine(coeffs: Sequence, ops: Sequence[WeylOp]) -> WeylOp:
    """``sum(c_i * a_i)`` with cancellation."""
    if len(coeffs) != len(ops):
        raise ValueError("coefficient and operator counts differ")
    if not ops:
        raise ValueError("empty combination")
    acc = WeylOp.zero(ops[0].m, ops[0].field, Ka=frozenset())
    for c, op in zip(coeffs, ops):
        acc = acc + op.scale(c)
    return acc


def _mono_degree(xe, de, kind, K):
    if kind == "bernstein":
        return sum(xe) + sum(de)
    if kind == "ordD":
        return sum(de)
    if kind == "ordK":
        return sum(e for i, e in enumerate(de) if (i + 1) not in K)
    if kind == "degK":
        return sum(xe) + sum(e for i, e in enumerate(de) if (i + 1) in K)
    if kind == "xdeg":
        return sum(xe)
    raise ValueError(f"unknown filtration kind {kind!r}")


def filtration_degree(a: WeylOp, kind: str = "bernstein", K=None) -> int:
    """Filtration degree; -1 for the zero operator.

    ``bernstein``: total degree; ``ordD``: total d-degree; ``ordK``: d-degree in
    the derivations outside ``K``; ``degK``: degree in the x's and the d_k with
    k in ``K``.
    """
    if kind in ("ordK", "degK"):
        if K is None:
            raise MissingK(f"{kind} needs an index set K")
        K = frozenset(K)
    if not a.terms:
        return -1
    return max(_mono_degree(xe, de, kind, K) for xe, de in a.terms)


def deg(a: WeylOp) -> int:
    return filtration_degree(a, "bernstein")


def gamma_degree(a: WeylOp, gamma: int) -> int:
    """Degree in d_gamma (-1 for zero)."""
    if not a.terms:
        return -1
    g = gamma - 1
    return max(de[g] for _, de in a.terms)


def gamma_decompose(h: WeylOp, gamma: int):
    """Right-coefficient expansion ``h = sum_s d_gamma^s * h_s``.

    Returns ``[(s, h_s), ...]`` with nonzero ``h_s`` free of ``d_gamma``,
    sorted by decreasing ``s`` (so the first entry carries ``lc_gamma(h)``).
    """
    if not 1 <= gamma <= h.m:
        raise ValueError(f"gamma={gamma} outside 1..{h.m}")
    g = gamma - 1
    pieces: dict[int, dict] = {}
    for (xe, de), c in h.terms.items():
        A, B = xe[g], de[g]
        for k in range(min(A, B) + 1):
            w = (-1) ** k * factorial(k) * comb(A, k) * comb(B, k)
            nx = list(xe)
            nx[g] = A - k
            nd = list(de)
            nd[g] = 0
            mono = (tuple(nx), tuple(nd))
            s = B - k
            bucket = pieces.setdefault(s, {})
            v = bucket.get(mono, h.field.zero) + c * w
            if v:
                bucket[mono] = v
            else:
                bucket.pop(mono, None)
    Ka = h.Ka - {gamma}
    out = [(s, WeylOp(h.m, t, h.field, Ka, check=False))
           for s, t in pieces.items() if t]
    out.sort(key=lambda p: -p[0])
    return out


def gamma_lc(h: WeylOp, gamma: int) -> WeylOp:
    dec = gamma_decompose(h, gamma)
    if not dec:
        return WeylOp.zero(h.m, h.field)
    return dec[0][1]


def d_power(m: int, gamma: int, s: int, field: Field = QQ) -> WeylOp:
    de = [0] * m
    de[gamma - 1] = s
    return WeylOp.monomial(m, [0] * m, de, 1, field)


def gamma_compose(pieces, gamma: int, m: int, field: Field = QQ) -> WeylOp:
    """Inverse of :func:`gamma_decompose`."""
    acc = WeylOp.zero(m, field)
    for s, hs in pieces:
        acc = acc + d_power(m, gamma, s, field) * hs
    return acc


def _poly_mul(p, q, field):
    out = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            v = out.get(e, field.zero) + c1 * c2
            if v:
                out[e] = v
            else:
                out.pop(e, None)
    return out


def _poly_pow(p, e, m, field, cache):
    key = (id(p), e)
    if key in cache:
        return cache[key]
    if e == 0:
        r = {(0,) * m: field.one}
    else:
        r = _poly_mul(_poly_pow(p, e - 1, m, field, cache), p, field)
    cache[key] = r
    return r


def omega_transform(h: WeylOp, Omega: ScalarMatrix, K) -> WeylOp:
    """Apply the linear change of variables fixing x_k, d_k for k in ``K``.

    With ``idx`` the sorted complement of ``K``: ``d_idx -> Omega d_idx`` and
    ``x_idx -> (Omega^T)^{-1} x_idx``.  This preserves the Weyl relations, so it
    extends to an algebra automorphism.
    """
    m = h.m
    K = frozenset(K)
    idx = [i for i in range(1, m + 1) if i not in K]
    n = len(idx)
    if Omega.nrows != n or Omega.ncols != n:
        raise SingularOmega(f"Omega must be {n}x{n}")
    field = h.field
    Om = ScalarMatrix(n, n, [{j: field(v) for j, v in r.items()} for r in Omega.data], field)
    inv = matrix_inverse(Om)
    if inv is None:
        raise SingularOmega("Omega is singular")
    M = inv.transpose()  # (Omega^T)^{-1}
    xform = {}
    dform = {}
    for a, i in enumerate(idx):
        px, pd = {}, {}
        for b, j in enumerate(idx):
            mv = M[a, b]
            if mv:
                e = [0] * m
                e[j - 1] = 1
                px[tuple(e)] = mv
            ov = Om[a, b]
            if ov:
                e = [0] * m
                e[j - 1] = 1
                pd[tuple(e)] = ov
        xform[i] = px
        dform[i] = pd
    cache: dict = {}
    out: dict = {}
    for (xe, de), c in h.terms.items():
        xp = {(0,) * m: field.one}
        dp = {(0,) * m: field.one}
        fx = [0] * m
        fd = [0] * m
        for i in range(1, m + 1):
            if i in xform:
                if xe[i - 1]:
                    xp = _poly_mul(xp, _poly_pow(xform[i], xe[i - 1], m, field, cache), field)
                if de[i - 1]:
                    dp = _poly_mul(dp, _poly_pow(dform[i], de[i - 1], m, field, cache), field)
            else:
                fx[i - 1] = xe[i - 1]
                fd[i - 1] = de[i - 1]
        for ex, cx in xp.items():
            for ed, cd in dp.items():
                mono = (tuple(a + b for a, b in zip(ex, fx)), tuple(a + b for a, b in zip(ed, fd)))
                v = out.get(mono, field.zero) + c * cx * cd
                if v:
                    out[mono] = v
                else:
                    out.pop(mono, None)
    return WeylOp(m, out, field, h.Ka, check=False)


def apply_to_polynomial(a: WeylOp, f: dict) -> dict:
    """Act on a polynomial ``{xexp: coeff}``: x_i multiplies, d_i differentiates."""
    if a.field.p:
        raise CharPUnsupported("the polynomial action is only faithful over QQ")
    out: dict = {}
    for (xe, de), c in a.terms.items():
        for fe, fc in f.items():
            w = 1
            ne = []
            for i in range(a.m):
                if de[i] > fe[i]:
                    w = 0
                    break
                w *= perm(fe[i], de[i])
                ne.append(fe[i] - de[i] + xe[i])
            if not w:
                continue
            ne = tuple(ne)
            v = out.get(ne, 0) + c * fc * w
            if v:
                out[ne] = v
            else:
                out.pop(ne, None)
    return out


def adjoint(a: WeylOp) -> WeylOp:
    """Anti-automorphism fixing x_i and sending d_i to -d_i.

    ``adjoint(a*b) == adjoint(b)*adjoint(a)``; it maps each A^(K) onto itself.
    """
    acc = WeylOp.zero(a.m, a.field, Ka=a.Ka)
    for (xe, de), c in a.terms.items():
        # (x^a d^b)^* = (-d)^b x^a
        sign = -1 if sum(de) % 2 else 1
        dpart = WeylOp.monomial(a.m, (0,) * a.m, de, 1, a.field)
        xpart = WeylOp.monomial(a.m, xe, (0,) * a.m, 1, a.field)
        acc = acc + (dpart * xpart).scale(c * sign)
    return acc.with_Ka(a.Ka) if acc.terms else acc
