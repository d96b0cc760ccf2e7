"""Exact arithmetic in supercommutative (Grassmann) algebras and supermatrices.

Scalars are Gaussian rationals (:class:`QComplex`), so every algebraic
identity below holds bit-exactly.  Generators are numbered ``1..q`` and an
element is stored as a map from strictly increasing multi-indices to
coefficients; ``()`` is the body (the soul-free part).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

#: Upper bound on the number of odd generators (storage is 2**q).
MAX_GENERATORS = 8


class DimensionError(ValueError):
    """Operands live in incompatible algebras or have mismatched shapes."""


class ParityError(ValueError):
    """A block or element does not have the parity its role requires."""


class Parity(enum.IntEnum):
    EVEN = 0
    ODD = 1

    def __add__(self, other):
        return Parity((int(self) + int(other)) % 2)

    __radd__ = __add__


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # floats are exact binary rationals; accept them verbatim
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


@dataclass(frozen=True)
class QComplex:
    """Exact complex number ``re + i*im`` with rational parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", _to_fraction(self.re))
        object.__setattr__(self, "im", _to_fraction(self.im))

    @classmethod
    def _raw(cls, re: Fraction, im: Fraction) -> "QComplex":
        out = object.__new__(cls)
        object.__setattr__(out, "re", re)
        object.__setattr__(out, "im", im)
        return out

    @classmethod
    def of(cls, x) -> "QComplex":
        if isinstance(x, QComplex):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, tuple) and len(x) == 2:
            return cls(x[0], x[1])
        return cls(x, 0)

    def __add__(self, other):
        o = QComplex.of(other)
        return QComplex._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QComplex._raw(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-QComplex.of(other))

    def __rsub__(self, other):
        return QComplex.of(other) - self

    def __mul__(self, other):
        o = QComplex.of(other)
        return QComplex._raw(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conjugate(self) -> "QComplex":
        return QComplex(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def inverse(self) -> "QComplex":
        n = self.abs2()
        if n == 0:
            raise ZeroDivisionError("QComplex division by zero")
        return QComplex(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * QComplex.of(other).inverse()

    def __rtruediv__(self, other):
        return QComplex.of(other) * self.inverse()

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        try:
            o = QComplex.of(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"QComplex({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


ZERO = QComplex(0, 0)
ONE = QComplex(1, 0)


def _merge_sign(a: Sequence[int], b: Sequence[int]):
    """Sorted concatenation of two increasing index lists and its Koszul sign.

    Returns ``None`` when an index repeats (the product vanishes).
    """
    if set(a) & set(b):
        return None
    # each pair (i in a, j in b) with i > j costs one transposition
    swaps = sum(1 for i in a for j in b if i > j)
    return tuple(sorted(a + b)), (-1) ** swaps


class GrassmannElement:
    """Element of the Grassmann algebra C[theta_1, ..., theta_q] with exact coefficients."""

    __slots__ = ("q", "_coeffs")

    def __init__(self, q: int, coefficients: Mapping[Iterable[int], object] | None = None):
        if not 0 <= q <= MAX_GENERATORS:
            raise DimensionError(f"generator count {q} outside [0, {MAX_GENERATORS}]")
        coeffs: dict[tuple[int, ...], QComplex] = {}
        for idx, c in (coefficients or {}).items():
            idx = tuple(idx)
            if any(not 1 <= i <= q for i in idx):
                raise DimensionError(f"multi-index {idx} out of range for q={q}")
            if len(set(idx)) != len(idx):
                continue
            # normalize to increasing order, picking up the permutation sign
            order = sorted(range(len(idx)), key=idx.__getitem__)
            inv = sum(1 for x, y in itertools.combinations(order, 2) if x > y)
            key = tuple(sorted(idx))
            val = QComplex.of(c) * (-1) ** inv
            coeffs[key] = coeffs.get(key, ZERO) + val
        self.q = q
        self._coeffs = {k: v for k, v in sorted(coeffs.items(), key=lambda kv: (len(kv[0]), kv[0])) if v}

    @classmethod
    def _normalized(cls, q: int, coeffs: dict) -> "GrassmannElement":
        # keys already sorted tuples and values QComplex; skips re-normalization
        out = cls.__new__(cls)
        out.q = q
        out._coeffs = {k: v for k, v in sorted(coeffs.items(), key=lambda kv: (len(kv[0]), kv[0])) if v}
        return out

    # constructors

    @classmethod
    def scalar(cls, c, q: int) -> "GrassmannElement":
        if not 0 <= q <= MAX_GENERATORS:
            raise DimensionError(f"generator count {q} outside [0, {MAX_GENERATORS}]")
        return cls._normalized(q, {(): QComplex.of(c)})

    @classmethod
    def generator(cls, i: int, q: int) -> "GrassmannElement":
        return cls(q, {(i,): 1})

    @classmethod
    def zero(cls, q: int) -> "GrassmannElement":
        return cls.scalar(0, q)

    # accessors

    @property
    def coefficients(self) -> dict[tuple[int, ...], QComplex]:
        return dict(self._coeffs)

    def __getitem__(self, idx) -> QComplex:
        return self._coeffs.get(tuple(idx), ZERO)

    def body(self) -> QComplex:
        return self._coeffs.get((), ZERO)

    def soul(self) -> "GrassmannElement":
        return GrassmannElement._normalized(self.q, {k: v for k, v in self._coeffs.items() if k})

    def parity(self) -> Parity | None:
        """Parity of a homogeneous element, ``None`` if mixed.  Zero counts as even."""
        ps = {len(k) % 2 for k in self._coeffs}
        if len(ps) > 1:
            return None
        return Parity(ps.pop()) if ps else Parity.EVEN

    def is_homogeneous(self) -> bool:
        return self.parity() is not None

    def part(self, p: Parity) -> "GrassmannElement":
        return GrassmannElement._normalized(self.q, {k: v for k, v in self._coeffs.items() if len(k) % 2 == p})

    def is_zero(self) -> bool:
        return not self._coeffs

    # arithmetic

    def _check(self, other: "GrassmannElement"):
        if self.q != other.q:
            raise DimensionError(f"generator counts differ: {self.q} vs {other.q}")

    def _lift(self, other) -> "GrassmannElement":
        if isinstance(other, GrassmannElement):
            self._check(other)
            return other
        return GrassmannElement.scalar(other, self.q)

    def __add__(self, other):
        o = self._lift(other)
        out = dict(self._coeffs)
        for k, v in o._coeffs.items():
            out[k] = out.get(k, ZERO) + v
        return GrassmannElement._normalized(self.q, out)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannElement._normalized(self.q, {k: -v for k, v in self._coeffs.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        return grassmann_mul(self, o)

    def __rmul__(self, other):
        return grassmann_mul(self._lift(other), self)

    def __pow__(self, k: int):
        out = GrassmannElement.scalar(1, self.q)
        for _ in range(k):
            out = out * self
        return out

    def inverse(self) -> "GrassmannElement":
        """Two-sided inverse; exists iff the body is nonzero."""
        b = self.body()
        if not b:
            raise ZeroDivisionError("Grassmann element with zero body is not invertible")
        binv = b.inverse()
        n = self.soul() * binv
        # (b(1+n))^-1 = b^-1 * sum (-n)^k, n nilpotent of order <= q+1
        out = GrassmannElement.scalar(1, self.q)
        term = GrassmannElement.scalar(1, self.q)
        for _ in range(self.q):
            term = term * (-n)
            if term.is_zero():
                break
            out = out + term
        return out * binv

    def __eq__(self, other):
        if isinstance(other, GrassmannElement):
            return self.q == other.q and self._coeffs == other._coeffs
        try:
            return self == GrassmannElement.scalar(other, self.q)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.q, tuple(self._coeffs.items())))

    def __repr__(self):
        return f"GrassmannElement({self.q}, {render(self)!r})"

    def __str__(self):
        return render(self)


def grassmann_mul(a: GrassmannElement, b: GrassmannElement) -> GrassmannElement:
    if a.q != b.q:
        raise DimensionError(f"generator counts differ: {a.q} vs {b.q}")
    out: dict[tuple[int, ...], QComplex] = {}
    for ka, va in a._coeffs.items():
        for kb, vb in b._coeffs.items():
            merged = _merge_sign(ka, kb)
            if merged is None:
                continue
            key, sign = merged
            prod = va * vb
            out[key] = out.get(key, ZERO) + (prod if sign > 0 else -prod)
    return GrassmannElement._normalized(a.q, out)


def body(a: GrassmannElement) -> QComplex:
    return a.body()


def render(a: GrassmannElement) -> str:
    """Debug rendering, e.g. ``3 + 2*t1^t2``."""
    if a.is_zero():
        return "0"
    parts = []
    for k, v in a._coeffs.items():
        mono = "^".join(f"t{i}" for i in k)
        if not k:
            parts.append(str(v))
        elif v == ONE:
            parts.append(mono)
        elif v == -ONE:
            parts.append(f"-{mono}")
        else:
            parts.append(f"{v}*{mono}")
    text = " + ".join(parts)
    return text.replace("+ -", "- ")


def parse(text: str, q: int) -> GrassmannElement:
    """Inverse of :func:`render` for real rational coefficients."""
    text = text.replace(" ", "").replace("-", "+-")
    out = GrassmannElement.zero(q)
    for term in filter(None, text.split("+")):
        sign = 1
        if term.startswith("-"):
            sign, term = -1, term[1:]
        if "t" not in term:
            out = out + GrassmannElement.scalar(sign * Fraction(term), q)
            continue
        coef, _, mono = term.rpartition("*")
        c = Fraction(coef) if coef else Fraction(1)
        idx = tuple(int(g[1:]) for g in mono.split("^"))
        out = out + GrassmannElement(q, {idx: sign * c})
    return out


class SuperMatrix:
    """Matrix over a Grassmann algebra with row format ``r|s`` and column format ``r'|s'``.

    Entry ``(i, j)`` lies in an even-even/odd-odd block when its row and
    column have the same block parity.  ``validated`` records whether the
    even block-parity pattern (even diagonal blocks, odd off-diagonal blocks)
    was enforced at construction.
    """

    __slots__ = ("row_dim", "col_dim", "q", "entries", "validated")

    def __init__(
        self,
        row_dim: tuple[int, int],
        col_dim: tuple[int, int] | None,
        entries: Sequence[Sequence[GrassmannElement]],
        validate_even: bool = False,
    ):
        col_dim = tuple(col_dim) if col_dim is not None else tuple(row_dim)
        row_dim = tuple(row_dim)
        rows = tuple(tuple(row) for row in entries)
        if len(rows) != sum(row_dim) or any(len(row) != sum(col_dim) for row in rows):
            raise DimensionError(f"entries do not match shape {row_dim}x{col_dim}")
        qs = {e.q for row in rows for e in row}
        if len(qs) > 1:
            raise DimensionError("entries from different Grassmann algebras")
        self.row_dim = row_dim
        self.col_dim = col_dim
        self.q = qs.pop() if qs else 0
        self.entries = rows
        self.validated = False
        if validate_even:
            if self.parity() is not Parity.EVEN:
                raise ParityError("block parity pattern of an even supermatrix violated")
            self.validated = True

    @classmethod
    def from_scalars(cls, r: int, s: int, rows, q: int = 0, validate_even: bool = False) -> "SuperMatrix":
        return cls(
            (r, s), (r, s), [[GrassmannElement.scalar(x, q) for x in row] for row in rows], validate_even
        )

    @classmethod
    def identity(cls, r: int, s: int, q: int = 0) -> "SuperMatrix":
        m = r + s
        return cls.from_scalars(r, s, [[int(i == j) for j in range(m)] for i in range(m)], q)

    @property
    def shape(self) -> tuple[int, int]:
        return sum(self.row_dim), sum(self.col_dim)

    def is_square(self) -> bool:
        return self.row_dim == self.col_dim

    def _row_parity(self, i: int) -> int:
        return int(i >= self.row_dim[0])

    def _col_parity(self, j: int) -> int:
        return int(j >= self.col_dim[0])

    def block(self, k: int) -> list[list[GrassmannElement]]:
        """Blocks numbered 1..4 as X1 X2 / X3 X4."""
        r, s = self.row_dim
        rc, sc = self.col_dim
        rows = range(r) if k in (1, 2) else range(r, r + s)
        cols = range(rc) if k in (1, 3) else range(rc, rc + sc)
        return [[self.entries[i][j] for j in cols] for i in rows]

    def part(self, p: Parity) -> "SuperMatrix":
        """Homogeneous component of total parity ``p``."""
        ents = [
            [e.part((p + self._row_parity(i) + self._col_parity(j)) % 2) for j, e in enumerate(row)]
            for i, row in enumerate(self.entries)
        ]
        return SuperMatrix(self.row_dim, self.col_dim, ents)

    def parity(self) -> Parity | None:
        for p in (Parity.EVEN, Parity.ODD):
            if self.part(p) == self:
                return p
        return None

    def body_matrix(self) -> list[list[QComplex]]:
        return [[e.body() for e in row] for row in self.entries]

    def __add__(self, other: "SuperMatrix") -> "SuperMatrix":
        if (self.row_dim, self.col_dim) != (other.row_dim, other.col_dim):
            raise DimensionError("supermatrix shapes differ")
        ents = [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)]
        return SuperMatrix(self.row_dim, self.col_dim, ents)

    def __neg__(self):
        return SuperMatrix(self.row_dim, self.col_dim, [[-e for e in row] for row in self.entries])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "SuperMatrix":
        return SuperMatrix(self.row_dim, self.col_dim, [[e * c for e in row] for row in self.entries])

    def __matmul__(self, other: "SuperMatrix") -> "SuperMatrix":
        return supermatrix_mul(self, other)

    def __eq__(self, other):
        if not isinstance(other, SuperMatrix):
            return NotImplemented
        return (self.row_dim, self.col_dim, self.entries) == (other.row_dim, other.col_dim, other.entries)

    def __hash__(self):
        return hash((self.row_dim, self.col_dim, self.entries))

    def __repr__(self):
        rows = "; ".join(", ".join(render(e) for e in row) for row in self.entries)
        return f"SuperMatrix({self.row_dim[0]}|{self.row_dim[1]}, [{rows}])"

    def inverse(self) -> "SuperMatrix":
        """Gauss-Jordan inverse over the Grassmann algebra.

        Pivots must be invertible ring elements (nonzero body); raises
        ``ZeroDivisionError`` when no such pivot exists in a column.
        """
        if not self.is_square():
            raise DimensionError("inverse of a non-square supermatrix")
        m = self.shape[0]
        q = self.q
        a = [list(row) for row in self.entries]
        inv = [[GrassmannElement.scalar(int(i == j), q) for j in range(m)] for i in range(m)]
        for col in range(m):
            piv = next((i for i in range(col, m) if a[i][col].body()), None)
            if piv is None:
                raise ZeroDivisionError("supermatrix is singular over the Grassmann algebra")
            a[col], a[piv] = a[piv], a[col]
            inv[col], inv[piv] = inv[piv], inv[col]
            p_inv = a[col][col].inverse()
            a[col] = [p_inv * e for e in a[col]]
            inv[col] = [p_inv * e for e in inv[col]]
            for i in range(m):
                if i == col or a[i][col].is_zero():
                    continue
                f = a[i][col]
                a[i] = [x - f * y for x, y in zip(a[i], a[col])]
                inv[i] = [x - f * y for x, y in zip(inv[i], inv[col])]
        return SuperMatrix(self.row_dim, self.col_dim, inv)


def supermatrix_mul(x: SuperMatrix, y: SuperMatrix) -> SuperMatrix:
    if x.col_dim != y.row_dim:
        raise DimensionError(f"inner formats differ: {x.col_dim} vs {y.row_dim}")
    if x.q != y.q and x.entries and y.entries:
        raise DimensionError(f"generator counts differ: {x.q} vs {y.q}")
    k = sum(x.col_dim)
    q = x.q
    ents = []
    for row in x.entries:
        out_row = []
        for j in range(sum(y.col_dim)):
            acc = GrassmannElement.zero(q)
            for t in range(k):
                acc = acc + grassmann_mul(row[t], y.entries[t][j])
            out_row.append(acc)
        ents.append(out_row)
    return SuperMatrix(x.row_dim, y.col_dim, ents)


def _homogeneous_supertrace(x: SuperMatrix, p: Parity) -> GrassmannElement:
    r = x.row_dim[0]
    acc = GrassmannElement.zero(x.q)
    for i in range(x.shape[0]):
        # even matrices: tr X1 - tr X4;  odd matrices: tr X1 + tr X4
        sign = -1 if (i >= r and p is Parity.EVEN) else 1
        acc = acc + x.entries[i][i] * sign
    return acc


def supertrace(x: SuperMatrix) -> GrassmannElement:
    """Supertrace, extended linearly over the even and odd parts of ``x``.

    On even supermatrices (and on any matrix of scalars) this is
    ``tr X1 - tr X4``; on odd supermatrices the sign of the lower block flips,
    which is what makes ``str(XY) = (-1)^{|X||Y|} str(YX)`` hold for every
    pair of homogeneous matrices.
    """
    if not x.is_square():
        raise DimensionError("supertrace of a non-square supermatrix")
    return _homogeneous_supertrace(x.part(Parity.EVEN), Parity.EVEN) + _homogeneous_supertrace(
        x.part(Parity.ODD), Parity.ODD
    )


def supercommutator(x: SuperMatrix, y: SuperMatrix) -> SuperMatrix:
    px, py = x.parity(), y.parity()
    if px is None or py is None:
        raise ParityError("supercommutator needs homogeneous operands")
    return x @ y - (y @ x).scale((-1) ** (px * py))


def _exact_det(m: list[list[QComplex]]) -> QComplex:
    a = [list(row) for row in m]
    n = len(a)
    det = ONE
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c]), None)
        if piv is None:
            return ZERO
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det = det * a[c][c]
        inv = a[c][c].inverse()
        for i in range(c + 1, n):
            if a[i][c]:
                f = a[i][c] * inv
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return det


def is_gl_rs(x: SuperMatrix) -> bool:
    """Membership in GL(r,s): even block-parity pattern and invertible body."""
    if not x.is_square():
        raise DimensionError("GL(r,s) membership needs a square supermatrix")
    if x.parity() is not Parity.EVEN:
        return False
    r = x.row_dim[0]
    b = x.body_matrix()
    x1 = [row[:r] for row in b[:r]]
    x4 = [row[r:] for row in b[r:]]
    # odd entries have zero body, so the body is block diagonal
    return bool(_exact_det(x1)) and bool(_exact_det(x4))
