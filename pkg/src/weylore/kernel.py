"""Exact scalars and exact linear algebra.

Two ground fields are supported: the rationals (``QQ``, elements are
:class:`fractions.Fraction`) and prime fields (``GF(p)``, elements are
:class:`ModP`).  Everything above this module only uses ``+ - * /``, unary
minus, ``==`` and truthiness on field elements, so the two kinds are
interchangeable.

Elimination is sparse (rows are ``{column: value}`` dicts).  Over ``QQ`` the
inner loops run on :mod:`gmpy2` rationals and convert back at the boundary.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2

from .errors import DivisionByZero, FieldMismatch

__all__ = [
    "ModP",
    "Field",
    "QQ",
    "GF",
    "field_from_tag",
    "scalar_arith",
    "ScalarMatrix",
    "nullspace",
    "solve_linear",
    "rank",
    "INCONSISTENT",
    "kernel_is_trivial_mod_p",
    "rank_specialized",
    "poly_eval",
    "echelon_pivots_mod_p",
    "LARGE_PRIME",
    "matrix_inverse",
]

# 2**61 - 1, a Mersenne prime; used for modular shortcuts only.
LARGE_PRIME = (1 << 61) - 1


class ModP:
    """Residue class modulo a prime ``p``, stored in ``[0, p)``."""

    __slots__ = ("v", "p")

    def __init__(self, v, p: int):
        if isinstance(v, Fraction):
            if v.denominator % p == 0:
                raise DivisionByZero(f"denominator of {v} vanishes mod {p}")
            v = v.numerator * pow(v.denominator, -1, p)
        self.v = int(v) % p
        self.p = p

    def _coerce(self, other):
        if isinstance(other, ModP):
            if other.p != self.p:
                raise FieldMismatch(f"GF({self.p}) vs GF({other.p})")
            return other.v
        if isinstance(other, int):
            return other % self.p
        if isinstance(other, Fraction):
            return ModP(other, self.p).v
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return ModP(self.v + o, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return ModP(self.v - o, self.p)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return ModP(o - self.v, self.p)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return ModP(self.v * o, self.p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o == 0:
            raise DivisionByZero("division by zero in GF(%d)" % self.p)
        return ModP(self.v * pow(o, -1, self.p), self.p)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.v == 0:
            raise DivisionByZero("division by zero in GF(%d)" % self.p)
        return ModP(o * pow(self.v, -1, self.p), self.p)

    def __neg__(self):
        return ModP(-self.v, self.p)

    def __pos__(self):
        return self

    def __pow__(self, e: int):
        if e < 0:
            if self.v == 0:
                raise DivisionByZero("zero to a negative power")
            return ModP(pow(pow(self.v, -1, self.p), -e, self.p), self.p)
        return ModP(pow(self.v, e, self.p), self.p)

    def __bool__(self):
        return self.v != 0

    def __eq__(self, other):
        if isinstance(other, ModP):
            return self.p == other.p and self.v == other.v
        if isinstance(other, (int, Fraction)):
            try:
                return self.v == self._coerce(other)
            except DivisionByZero:
                return False
        return NotImplemented

    def __hash__(self):
        return hash((self.v, self.p))

    def __int__(self):
        return self.v

    def __repr__(self):
        return f"ModP({self.v}, {self.p})"

    def __str__(self):
        return str(self.v)


class Field:
    """A ground field.  ``QQ`` and ``GF(p)`` are the only instances."""

    def __init__(self, p: int = 0):
        if p:
            if p < 2 or not gmpy2.is_prime(p):
                raise ValueError(f"{p} is not a prime")
        self.p = p

    @property
    def tag(self) -> str:
        return "q" if self.p == 0 else f"fp:{self.p}"

    @property
    def characteristic(self) -> int:
        return self.p

    def __call__(self, x):
        if self.p == 0:
            if isinstance(x, ModP):
                raise FieldMismatch("cannot convert a GF(p) residue to QQ")
            return Fraction(x)
        if isinstance(x, ModP):
            if x.p != self.p:
                raise FieldMismatch(f"GF({x.p}) element used in GF({self.p})")
            return x
        if isinstance(x, str):
            x = Fraction(x)
        return ModP(x, self.p)

    @property
    def zero(self):
        return self(0)

    @property
    def one(self):
        return self(1)

    def check(self, x):
        """Raise FieldMismatch unless ``x`` is an element of this field."""
        if self.p == 0:
            if isinstance(x, ModP):
                raise FieldMismatch("GF(p) element in a QQ computation")
        elif not isinstance(x, ModP) or x.p != self.p:
            raise FieldMismatch(f"expected an element of GF({self.p}), got {x!r}")
        return x

    def random_element(self, rng: random.Random, bound: int = 5):
        return self(rng.randint(-bound, bound))

    def __eq__(self, other):
        return isinstance(other, Field) and other.p == self.p

    def __hash__(self):
        return hash(("Field", self.p))

    def __repr__(self):
        return "QQ" if self.p == 0 else f"GF({self.p})"


QQ = Field(0)


def GF(p: int) -> Field:
    return Field(p)


def field_from_tag(tag: str) -> Field:
    """Parse ``"q"`` or ``"fp:<prime>"``."""
    tag = tag.strip().lower()
    if tag in ("q", "qq"):
        return QQ
    if tag.startswith("fp:"):
        return GF(int(tag[3:]))
    raise ValueError(f"unknown field tag {tag!r}")


def _field_of(x) -> Field:
    if isinstance(x, ModP):
        return Field(x.p)
    return QQ


def scalar_arith(op: str, a, b=None):
    """Field arithmetic with explicit field checking.

    ``op`` is one of ``add``, ``sub``, ``mul``, ``inv`` (unary) and ``eq``.
    """
    fa = _field_of(a)
    if b is not None and _field_of(b) != fa:
        raise FieldMismatch(f"{fa!r} vs {_field_of(b)!r}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "eq":
        return a == b
    if op == "inv":
        if not a:
            raise DivisionByZero("inverse of zero")
        return fa.one / a
    raise ValueError(f"unknown operation {op!r}")


class ScalarMatrix:
    """Sparse matrix over a field; row ``i`` is a ``{col: value}`` dict."""

    __slots__ = ("nrows", "ncols", "data", "field")

    def __init__(self, nrows: int, ncols: int, data=None, field: Field = QQ):
        self.nrows = nrows
        self.ncols = ncols
        self.field = field
        if data is None:
            data = [{} for _ in range(nrows)]
        if len(data) != nrows:
            raise ValueError("row count does not match data")
        self.data = [{c: v for c, v in row.items() if v} for row in data]

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence], field: Field = QQ, ncols=None):
        rows = [list(r) for r in rows]
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        data = []
        for r in rows:
            if len(r) != ncols:
                raise ValueError("ragged matrix")
            data.append({j: field(v) for j, v in enumerate(r) if v})
        return cls(len(rows), ncols, data, field)

    @classmethod
    def identity(cls, n: int, field: Field = QQ):
        return cls(n, n, [{i: field.one} for i in range(n)], field)

    def to_dense(self):
        z = self.field.zero
        return [[row.get(j, z) for j in range(self.ncols)] for row in self.data]

    def __getitem__(self, ij):
        i, j = ij
        return self.data[i].get(j, self.field.zero)

    def apply(self, vec: Sequence):
        z = self.field.zero
        out = []
        for row in self.data:
            acc = z
            for j, v in row.items():
                if vec[j]:
                    acc = acc + v * vec[j]
            out.append(acc)
        return out

    def transpose(self):
        data = [{} for _ in range(self.ncols)]
        for i, row in enumerate(self.data):
            for j, v in row.items():
                data[j][i] = v
        return ScalarMatrix(self.ncols, self.nrows, data, self.field)

    def density(self) -> float:
        if not self.nrows or not self.ncols:
            return 0.0
        return sum(len(r) for r in self.data) / (self.nrows * self.ncols)

    def __eq__(self, other):
        return (
            isinstance(other, ScalarMatrix)
            and (self.nrows, self.ncols) == (other.nrows, other.ncols)
            and self.data == other.data
        )

    def __repr__(self):
        return f"ScalarMatrix({self.to_dense()!r})"


INCONSISTENT = None


# --- elimination engines --------------------------------------------------------------

def _to_engine(rows: Iterable[dict], field: Field):
    """Convert rows to the engine's element type (mpq over QQ, int mod p otherwise)."""
    if field.p == 0:
        return [{c: gmpy2.mpq(v.numerator, v.denominator) for c, v in r.items() if v}
                for r in rows]
    p = field.p
    return [{c: int(v) % p for c, v in r.items() if int(v) % p} for r in rows]


def _from_engine(v, field: Field):
    if field.p == 0:
        return Fraction(int(v.numerator), int(v.denominator))
    return ModP(v, field.p)


def _echelon(rows: list[dict], p: int = 0, order=None, pivots=None):
    """Sparse row echelon form.

    Returns ``{pivot_col: row}`` where each row has pivot coefficient 1 and only
    entries in columns that come after the pivot in ``order`` (identity order
    when ``order`` is None).  ``p == 0`` means exact rationals (mpq entries),
    otherwise entries are ints reduced mod ``p``.  Passing the result back as
    ``pivots`` (with ``order=None``) extends an echelon form by more rows.
    """
    import heapq

    if order is not None:
        pos = {c: k for k, c in enumerate(order)}
        rows = [{pos[c]: v for c, v in r.items()} for r in rows]
    if pivots is None or order is not None:
        pivots = {}
    for row in sorted(rows, key=len):
        row = dict(row)
        heap = [c for c in row if c in pivots]
        heapq.heapify(heap)
        while heap:
            c = heapq.heappop(heap)
            f = row.get(c)
            if f is None:
                continue
            for cc, v in pivots[c].items():
                old = row.get(cc)
                if old is None:
                    nv = -f * v
                    if p:
                        nv %= p
                    row[cc] = nv
                    if cc in pivots:
                        heapq.heappush(heap, cc)
                else:
                    nv = old - f * v
                    if p:
                        nv %= p
                    if nv:
                        row[cc] = nv
                    else:
                        del row[cc]
        if not row:
            continue
        c0 = min(row)
        inv = (pow(row[c0], -1, p) if p else 1 / row[c0])
        if p:
            pivots[c0] = {c: (v * inv) % p for c, v in row.items()}
        else:
            pivots[c0] = {c: v * inv for c, v in row.items()}
    if order is not None:
        pivots = {order[c]: {order[cc]: v for cc, v in r.items()}
                  for c, r in pivots.items()}
    return pivots


def _rref(pivots: dict[int, dict], p: int = 0):
    """Turn echelon output of :func:`_echelon` (natural order) into reduced form."""
    done: dict[int, dict] = {}
    for c in sorted(pivots, reverse=True):
        row = dict(pivots[c])
        for cc in [k for k in row if k != c and k in done]:
            f = row.get(cc)
            if not f:
                continue
            for k, v in done[cc].items():
                nv = row.get(k, 0) - f * v
                if p:
                    nv %= p
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
        done[c] = row
    return done


def _as_rows(M) -> tuple[list[dict], int, Field]:
    if isinstance(M, ScalarMatrix):
        return M.data, M.ncols, M.field
    dense = [list(r) for r in M]
    ncols = len(dense[0]) if dense else 0
    sm = ScalarMatrix.from_dense(dense, QQ, ncols)
    return sm.data, ncols, QQ


def nullspace(M, limit: int | None = None) -> list[list]:
    """Basis of ``{v : M v = 0}`` as dense vectors (empty when M is injective).

    ``limit`` caps the number of basis vectors returned.
    """
    rows, ncols, field = _as_rows(M)
    return nullspace_engine(_to_engine(rows, field), ncols, field, limit)


def nullspace_engine(rows: list[dict], ncols: int, field: Field, limit: int | None = None):
    """:func:`nullspace` for rows already in engine form (see ``_to_engine``)."""
    p = field.p
    red = _rref(_echelon(rows, p), p)
    free = [c for c in range(ncols) if c not in red]
    if limit is not None:
        free = free[:limit]
    basis = []
    one = field.one
    zero = field.zero
    for f in free:
        v = [zero] * ncols
        v[f] = one
        for c, row in red.items():
            x = row.get(f)
            if x:
                v[c] = -_from_engine(x, field)
        basis.append(v)
    return basis


def solve_linear(M, rhs: Sequence):
    """One exact solution of ``M v = rhs`` (free variables set to 0), or INCONSISTENT."""
    rows, ncols, field = _as_rows(M)
    if len(rhs) != len(rows):
        raise ValueError("rhs length does not match row count")
    aug = []
    for r, b in zip(rows, rhs):
        r = dict(r)
        if b:
            r[ncols] = field(b)
        aug.append(r)
    p = field.p
    red = _rref(_echelon(_to_engine(aug, field), p), p)
    if ncols in red:
        return INCONSISTENT
    v = [field.zero] * ncols
    for c, row in red.items():
        x = row.get(ncols)
        if x:
            v[c] = _from_engine(x, field)
    return v


def rank(M) -> int:
    rows, _, field = _as_rows(M)
    return len(_echelon(_to_engine(rows, field), field.p))


def kernel_is_trivial_mod_p(rows: list[dict], ncols: int, p: int = LARGE_PRIME) -> bool:
    """Cheap sufficient test that a rational matrix is injective.

    Reduction mod ``p`` can only lower the rank, so full column rank mod ``p``
    proves full column rank over QQ.  Returns False when undecided.
    """
    red = []
    for r in rows:
        rr = {}
        for c, v in r.items():
            v = Fraction(v)
            if v.denominator % p == 0:
                return False
            x = (v.numerator * pow(v.denominator, -1, p)) % p
            if x:
                rr[c] = x
        red.append(rr)
    return len(_echelon(red, p)) == ncols


# --- polynomial specialization --------------------------------------------------------

def poly_eval(poly: dict, point: Sequence, p: int = 0):
    """Evaluate ``{exponent_tuple: coeff}`` at ``point`` (mod ``p`` when nonzero)."""
    acc = 0
    for exps, c in poly.items():
        t = Fraction(c) if not p else int(Fraction(c).numerator) * pow(
            Fraction(c).denominator, -1, p)
        for x, e in zip(point, exps):
            if e:
                t = t * (pow(x, e, p) if p else x ** e)
        acc = acc + t
    return acc % p if p else acc


def rank_specialized(P: Sequence[Sequence[dict]], trials: int = 3, seed: int = 0,
                     bound: int = 1 << 16, modulus: int | None = None) -> int:
    """Monte Carlo generic rank of a matrix of polynomials over QQ.

    Entries are ``{exponent_tuple: coeff}`` dicts (``{}`` is zero).  Each
    trial substitutes a uniform integer point from ``[-bound, bound]`` and
    computes the exact scalar rank; the maximum over trials is returned.  With
    ``modulus`` set, scalar ranks are taken modulo that prime instead (faster,
    still a lower bound).
    """
    rng = random.Random(seed)
    nvars = 0
    for row in P:
        for e in row:
            for exps in e:
                nvars = max(nvars, len(exps))
    nrows = len(P)
    ncols = len(P[0]) if P else 0
    best = 0
    for _ in range(max(trials, 1)):
        pt = [rng.randint(-bound, bound) for _ in range(nvars)]
        rows = []
        for row in P:
            r = {}
            for j, e in enumerate(row):
                if e:
                    v = poly_eval(e, pt, modulus or 0)
                    if v:
                        r[j] = v
            rows.append(r)
        if modulus:
            rk = len(_echelon(rows, modulus))
        else:
            rk = len(_echelon(_to_engine(rows, QQ), 0))
        best = max(best, rk)
        if best == min(nrows, ncols):
            break
    return best


def echelon_pivots_mod_p(rows: list[dict], order: Sequence[int], p: int = LARGE_PRIME):
    """Pivot columns of the echelon form under the column priority ``order``.

    ``rows`` hold ints already reduced mod ``p``.
    """
    return set(_echelon([dict(r) for r in rows], p, order=list(order)))


def matrix_inverse(M: ScalarMatrix) -> ScalarMatrix | None:
    """Exact inverse of a square matrix, or None when singular."""
    n = M.nrows
    if M.ncols != n:
        raise ValueError("matrix is not square")
    field = M.field
    aug = []
    for i, row in enumerate(M.data):
        r = dict(row)
        r[n + i] = field.one
        aug.append(r)
    p = field.p
    red = _rref(_echelon(_to_engine(aug, field), p), p)
    if any(c not in red for c in range(n)):
        return None
    data = []
    for c in range(n):
        data.append({k - n: _from_engine(v, field) for k, v in red[c].items() if k >= n})
    return ScalarMatrix(n, n, data, field)
