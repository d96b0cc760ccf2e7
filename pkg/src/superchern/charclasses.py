"""Characteristic-class arithmetic over the torus model ``H*(T^n)``.

Cohomology of ``T^n`` is the exterior algebra on ``e_0, ..., e_{n-1}``.
Flat characters are odd-degree classes with C/Z coefficients: the real part
of every coefficient is kept in ``[0, 1)``.  A total class ``1 + c_1 + ...``
lives either at the form level (``c_k`` of degree ``2k``) or at the character
level (``c_k`` a flat character of degree ``2k - 1``).

The torus model is torsion-free, so the integral Chern classes of flat
bundles vanish and every product of two flat characters is zero.  Products
are nonetheless routed through :func:`character_product` with the integral
class carried explicitly, so a model with torsion only has to supply those
classes.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number
from typing import Mapping, Sequence

import numpy as np

MODZ_TOL = 1e-9


class NonDiagonalizableError(ValueError):
    """Holonomy does not split into flat line bundles."""


def _frac_part(x):
    if isinstance(x, (int, Fraction)):
        return x - math.floor(x)
    r = float(x) % 1.0
    # (-tiny) % 1.0 rounds up to 1.0
    return 0.0 if r >= 1.0 else r


def reduce_mod_z(z):
    """Representative of ``z`` in C/Z with real part in ``[0, 1)``."""
    if isinstance(z, (int, Fraction)):
        return _frac_part(z)
    z = complex(z)
    return complex(_frac_part(z.real), z.imag)


def distance_mod_z(a, b) -> float:
    """Distance between ``a`` and ``b`` in C/Z."""
    d = complex(a) - complex(b)
    re = d.real - round(d.real)
    return math.hypot(re, d.imag)


def _merge(I, J):
    if set(I) & set(J):
        return None
    swaps = sum(1 for i in I for j in J if i > j)
    return tuple(sorted(I + J)), -1 if swaps % 2 else 1


def _is_zero(c) -> bool:
    return c == 0


class CohomologyClass:
    """Element of the exterior algebra ``H*(T^n)`` with arbitrary numeric coefficients.

    Coefficients may be ints, Fractions, floats or complex numbers; exact
    inputs stay exact.
    """

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: Mapping[Sequence[int], Number] | None = None):
        out: dict[tuple[int, ...], Number] = {}
        for I, c in (coeffs or {}).items():
            I = tuple(I)
            if list(I) != sorted(set(I)) or any(not 0 <= i < n for i in I):
                raise ValueError(f"bad monomial {I} for n={n}")
            out[I] = out.get(I, 0) + c
        self.n = n
        self.coeffs = {I: c for I, c in sorted(out.items(), key=lambda kv: (len(kv[0]), kv[0])) if not _is_zero(c)}

    @classmethod
    def zero(cls, n: int) -> "CohomologyClass":
        return cls(n)

    @classmethod
    def one(cls, n: int) -> "CohomologyClass":
        return cls(n, {(): 1})

    @classmethod
    def generator(cls, n: int, *axes: int) -> "CohomologyClass":
        return cls(n, {tuple(sorted(axes)): 1})

    def degrees(self) -> set[int]:
        return {len(I) for I in self.coeffs}

    def part(self, degree: int) -> "CohomologyClass":
        return CohomologyClass(self.n, {I: c for I, c in self.coeffs.items() if len(I) == degree})

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.coeffs.values())

    def is_integral(self, tol: float = MODZ_TOL) -> bool:
        """Lattice membership: every coefficient within ``tol`` of an integer."""
        for c in self.coeffs.values():
            z = complex(c)
            if abs(z.imag) > tol or abs(z.real - round(z.real)) > tol:
                return False
        return True

    def _check(self, other: "CohomologyClass"):
        if self.n != other.n:
            raise ValueError(f"classes on T^{self.n} and T^{other.n}")

    def __add__(self, other: "CohomologyClass") -> "CohomologyClass":
        self._check(other)
        out = dict(self.coeffs)
        for I, c in other.coeffs.items():
            out[I] = out.get(I, 0) + c
        return CohomologyClass(self.n, out)

    def __neg__(self):
        return CohomologyClass(self.n, {I: -c for I, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, k) -> "CohomologyClass":
        return CohomologyClass(self.n, {I: k * c for I, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, CohomologyClass):
            return ring_mul(self, other)
        return self.scale(other)

    def __rmul__(self, k):
        return self.scale(k)

    def __pow__(self, k: int) -> "CohomologyClass":
        out = CohomologyClass.one(self.n)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, CohomologyClass):
            return NotImplemented
        return self.n == other.n and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.n, tuple(self.coeffs.items())))

    def __repr__(self):
        if not self.coeffs:
            return f"CohomologyClass({self.n}, 0)"
        terms = " + ".join(f"{c}*e{''.join(map(str, I))}" if I else str(c) for I, c in self.coeffs.items())
        return f"CohomologyClass({self.n}, {terms})"


def ring_mul(a: CohomologyClass, b: CohomologyClass) -> CohomologyClass:
    a._check(b)
    out: dict[tuple[int, ...], Number] = {}
    for I, x in a.coeffs.items():
        for J, y in b.coeffs.items():
            merged = _merge(I, J)
            if merged is None:
                continue
            K, sign = merged
            out[K] = out.get(K, 0) + sign * x * y
    return CohomologyClass(a.n, out)


@dataclass(frozen=True)
class FlatCharacter:
    """Odd-degree class in ``H^{odd}(T^n, C/Z)``, i.e. a differential character with zero curvature.

    ``integral`` is the Bockstein image (the integral class it lifts); in the
    torus model it is always zero.
    """

    degree: int
    value: CohomologyClass
    integral: CohomologyClass | None = None

    def __post_init__(self):
        if self.degree % 2 != 1:
            raise ValueError(f"flat characters have odd degree, got {self.degree}")
        if self.value.degrees() - {self.degree}:
            raise ValueError(f"value has degrees {sorted(self.value.degrees())}, expected {self.degree}")
        reduced = CohomologyClass(self.value.n, {I: reduce_mod_z(c) for I, c in self.value.coeffs.items()})
        object.__setattr__(self, "value", reduced)
        integral = self.integral if self.integral is not None else CohomologyClass.zero(self.value.n)
        object.__setattr__(self, "integral", integral)

    @classmethod
    def zero(cls, n: int, degree: int) -> "FlatCharacter":
        return cls(degree, CohomologyClass.zero(n))

    @property
    def n(self) -> int:
        return self.value.n

    def __add__(self, other: "FlatCharacter") -> "FlatCharacter":
        if self.degree != other.degree:
            raise ValueError("sum of characters of different degree")
        return FlatCharacter(self.degree, self.value + other.value, self.integral + other.integral)

    def __neg__(self):
        return FlatCharacter(self.degree, -self.value, -self.integral)

    def __sub__(self, other):
        return self + (-other)

    def equal_mod_z(self, other: "FlatCharacter", tol: float = MODZ_TOL) -> bool:
        if self.degree != other.degree:
            return False
        keys = set(self.value.coeffs) | set(other.value.coeffs)
        return all(
            distance_mod_z(self.value.coeffs.get(I, 0), other.value.coeffs.get(I, 0)) <= tol for I in keys
        )

    def is_zero(self, tol: float = MODZ_TOL) -> bool:
        return self.equal_mod_z(FlatCharacter.zero(self.n, self.degree), tol)

    def coefficient(self, I) -> complex:
        return self.value.coeffs.get(tuple(I), 0)


def character_product(x: FlatCharacter, y: FlatCharacter, c_y: CohomologyClass | None = None) -> FlatCharacter:
    """Flat-by-flat product ``x . y = x cup c(y)`` reduced mod Z.

    ``c_y`` is the integral class of ``y`` (default: the one ``y`` carries).
    """
    c_y = y.integral if c_y is None else c_y
    value = ring_mul(x.value, c_y)
    degree = x.degree + y.degree + 1
    if value.degrees() - {degree}:
        raise ValueError("integral class has the wrong degree for this product")
    return FlatCharacter(degree, value, ring_mul(x.integral, c_y))


def bockstein(x: FlatCharacter) -> CohomologyClass:
    """Integral class a flat character lifts."""
    return x.integral


# total classes

FORM = "form"
CHARACTER = "character"


class TotalClass:
    """Truncated series ``1 + c_1 + ... + c_N``.

    At the form level ``c_k`` is a :class:`CohomologyClass` of degree ``2k``;
    at the character level it is a :class:`FlatCharacter` of degree ``2k-1``.
    ``terms[0]`` is always the unit.
    """

    __slots__ = ("n", "level", "terms")

    def __init__(self, n: int, level: str, terms: Sequence):
        if level not in (FORM, CHARACTER):
            raise ValueError(f"unknown level {level!r}")
        self.n = n
        self.level = level
        terms = list(terms)
        if not terms:
            terms = [1]
        if not (isinstance(terms[0], int) and terms[0] == 1) and terms[0] != CohomologyClass.one(n):
            raise ValueError("degree-0 term of a total class must be 1")
        out = [1]
        for k, t in enumerate(terms[1:], start=1):
            out.append(self._coerce(k, t))
        self.terms = tuple(out)

    def _coerce(self, k: int, t):
        if self.level == FORM:
            t = CohomologyClass.zero(self.n) if t is None or (isinstance(t, int) and t == 0) else t
            if not isinstance(t, CohomologyClass) or t.degrees() - {2 * k}:
                raise ValueError(f"c_{k} must be a degree-{2 * k} class")
            return t
        t = FlatCharacter.zero(self.n, 2 * k - 1) if t is None or (isinstance(t, int) and t == 0) else t
        if not isinstance(t, FlatCharacter) or t.degree != 2 * k - 1:
            raise ValueError(f"c_{k} must be a degree-{2 * k - 1} flat character")
        return t

    @classmethod
    def one(cls, n: int, level: str, N: int = 0) -> "TotalClass":
        return cls(n, level, [1] + [None] * N)

    @property
    def N(self) -> int:
        return len(self.terms) - 1

    def __getitem__(self, k: int):
        if k < len(self.terms):
            return self.terms[k]
        return self._zero_term(k)

    def _zero_term(self, k: int):
        if k == 0:
            return 1
        if self.level == FORM:
            return CohomologyClass.zero(self.n)
        return FlatCharacter.zero(self.n, 2 * k - 1)

    def _mul_terms(self, i: int, a, j: int, b):
        if i == 0:
            return b
        if j == 0:
            return a
        if self.level == FORM:
            return ring_mul(a, b)
        return character_product(a, b)

    def truncate(self, N: int) -> "TotalClass":
        return TotalClass(self.n, self.level, [self[k] for k in range(N + 1)])

    def _check(self, other: "TotalClass"):
        if (self.n, self.level) != (other.n, other.level):
            raise ValueError("total classes of different tori or levels")

    def __mul__(self, other: "TotalClass") -> "TotalClass":
        return self.product(other)

    def product(self, other: "TotalClass", N: int | None = None) -> "TotalClass":
        """Graded product, truncated at ``N`` (default: the larger truncation)."""
        self._check(other)
        N = max(self.N, other.N) if N is None else N
        terms = [1]
        for k in range(1, N + 1):
            acc = self._zero_term(k)
            for i in range(k + 1):
                acc = acc + self._mul_terms(i, self[i], k - i, other[k - i])
            terms.append(acc)
        return TotalClass(self.n, self.level, terms)

    def is_one(self, tol: float | None = None) -> bool:
        for t in self.terms[1:]:
            if self.level == FORM:
                if not t.is_zero(tol or 0.0):
                    return False
            elif not t.is_zero(MODZ_TOL if tol is None else tol):
                return False
        return True

    def equal(self, other: "TotalClass", tol: float = MODZ_TOL) -> bool:
        self._check(other)
        for k in range(1, max(self.N, other.N) + 1):
            a, b = self[k], other[k]
            if self.level == FORM:
                if not (a - b).is_zero(tol):
                    return False
            elif not a.equal_mod_z(b, tol):
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, TotalClass):
            return NotImplemented
        N = max(self.N, other.N)
        return (self.n, self.level) == (other.n, other.level) and all(self[k] == other[k] for k in range(N + 1))

    def __repr__(self):
        return f"TotalClass(n={self.n}, level={self.level}, terms={list(self.terms)})"


def segre_inverse(c: TotalClass) -> TotalClass:
    """Unique ``s`` with ``c . s = 1`` through the truncation degree."""
    if c.terms[0] != 1:
        raise ValueError("total class must start with 1")
    s = [1]
    for k in range(1, c.N + 1):
        acc = c._zero_term(k)
        for i in range(1, k + 1):
            acc = acc + c._mul_terms(i, c[i], k - i, s[k - i])
        s.append(-acc)
    return TotalClass(c.n, c.level, s)


def difference_class(cF: TotalClass, cG: TotalClass) -> TotalClass:
    """``c(F - G) = c(F) . s(G)``."""
    return cF.product(segre_inverse(cG))


# flat bundles


@dataclass(frozen=True)
class FlatBundleClassData:
    """A flat bundle on ``T^n`` given by commuting holonomies ``(H_0, ..., H_{n-1})``.

    ``alpha[j, k]`` satisfies ``exp(2 pi i alpha[j, k]) = eigenvalue_j(H_k)`` on
    a common eigenbasis.
    """

    rank: int
    holonomy: tuple[np.ndarray, ...]
    alpha: np.ndarray = field(init=False, repr=False)
    diag_tol: float = 1e-9

    def __post_init__(self):
        hol = tuple(np.asarray(h, dtype=complex) for h in self.holonomy)
        if any(h.shape != (self.rank, self.rank) for h in hol):
            raise ValueError(f"holonomy matrices must be {self.rank}x{self.rank}")
        object.__setattr__(self, "holonomy", hol)
        object.__setattr__(self, "alpha", _character_vector(hol, self.rank, self.diag_tol))

    @property
    def n(self) -> int:
        return len(self.holonomy)

    @classmethod
    def from_holonomy(cls, rep, block: int) -> "FlatBundleClassData":
        mats = rep.block(block)
        rank = mats[0].shape[0] if mats else 0
        return cls(rank, tuple(mats))

    def direct_sum(self, other: "FlatBundleClassData") -> "FlatBundleClassData":
        r, s = self.rank, other.rank
        mats = []
        for a, b in zip(self.holonomy, other.holonomy):
            h = np.zeros((r + s, r + s), dtype=complex)
            h[:r, :r], h[r:, r:] = a, b
            mats.append(h)
        return FlatBundleClassData(r + s, tuple(mats))


def _character_vector(hol: Sequence[np.ndarray], rank: int, tol: float) -> np.ndarray:
    n = len(hol)
    if rank == 0:
        return np.zeros((0, n), dtype=complex)
    for h in hol:
        if abs(np.linalg.det(h)) < 1e-300:
            raise ValueError("holonomy must be invertible")
    # a generic combination separates the joint eigenspaces; fixed weights keep output deterministic
    weights = [math.sqrt(2 + k) + 0.5j * math.sqrt(3 + 2 * k) for k in range(n)]
    combo = sum((w * h for w, h in zip(weights, hol)), np.zeros((rank, rank), dtype=complex))
    _, V = np.linalg.eig(combo)
    if np.linalg.cond(V) > 1e8:
        raise NonDiagonalizableError("holonomy is not simultaneously diagonalizable")
    Vinv = np.linalg.inv(V)
    alpha = np.zeros((rank, n), dtype=complex)
    for k, h in enumerate(hol):
        D = Vinv @ h @ V
        off = D - np.diag(np.diag(D))
        if np.max(np.abs(off), initial=0.0) > tol * max(1.0, np.max(np.abs(D))) * 1e3:
            raise NonDiagonalizableError("holonomy is not simultaneously diagonalizable")
        for j, lam in enumerate(np.diag(D)):
            alpha[j, k] = reduce_mod_z(cmath.log(lam) / (2j * math.pi))
    return alpha


def line_characters(b: FlatBundleClassData) -> list[FlatCharacter]:
    """First CS class of each flat line bundle in the splitting of ``b``.

    Sign convention matches parallel transport ``dV = -theta V``: holonomy
    ``exp(2 pi i a)`` has first class ``-a``.
    """
    return [
        FlatCharacter(1, CohomologyClass(b.n, {(k,): -b.alpha[j, k] for k in range(b.n)}))
        for j in range(b.rank)
    ]


def cs_classes_of_flat(b: FlatBundleClassData, N: int | None = None) -> TotalClass:
    """Character-level total class, Whitney product of ``1 + c1(L_j)`` over the line factors."""
    N = (b.n + 1) // 2 if N is None else N
    total = TotalClass.one(b.n, CHARACTER, N)
    for ell in line_characters(b):
        total = total.product(TotalClass(b.n, CHARACTER, [1, ell]), N)
    return total


def cs_product_formula(c0: TotalClass, c1: TotalClass, N: int | None = None) -> TotalClass:
    """``c_n(E, D0 + L) = sum_{p+q=n} c_p(E0) s_q(E1)``."""
    N = max(c0.N, c1.N) if N is None else N
    return c0.truncate(N).product(segre_inverse(c1.truncate(N)), N)


def cs_of_morphism(m, b0: FlatBundleClassData, b1: FlatBundleClassData, N: int | None = None) -> TotalClass:
    """CS classes of ``u: E0 -> E1``; ``u`` and the metrics do not enter the class."""
    if b0.n != b1.n:
        raise ValueError("bundles live on different tori")
    if m is not None:
        r, s = m.ranks
        if (r, s) != (b0.rank, b1.rank):
            raise ValueError(f"morphism is {r}->{s}, bundles have ranks {b0.rank} and {b1.rank}")
    N = (b0.n + 1) // 2 if N is None else N
    return cs_product_formula(cs_classes_of_flat(b0, N), cs_classes_of_flat(b1, N), N)


@dataclass
class LiftReport:
    exists: bool
    reason: str
    degree: int
    lift: FlatCharacter | None = None
    ambiguity: list[tuple[int, ...]] = field(default_factory=list)


def bockstein_lift_check(
    integral_class: CohomologyClass, real_image_zero: bool, degree: int | None = None
) -> LiftReport:
    """Existence and ambiguity of a C/Z lift of an integral class of degree ``2k``.

    H*(T^n, Z) is torsion-free, so a lift exists iff the class is 0, and it is
    unique up to the integral classes of degree ``2k - 1``.  A zero class
    carries no degree of its own, so pass ``degree`` for it.
    """
    if not integral_class.is_integral():
        raise ValueError("class is not integral")
    degs = integral_class.degrees()
    if len(degs) > 1:
        raise ValueError("class must be homogeneous")
    if degs:
        found = degs.pop()
        if degree is not None and degree != found:
            raise ValueError(f"class has degree {found}, not {degree}")
        degree = found
    elif degree is None:
        degree = 0
    n = integral_class.n
    lift_degree = max(degree - 1, 0)
    lattice = [I for I in itertools.combinations(range(n), lift_degree)]
    if integral_class.is_zero(MODZ_TOL):
        lift = FlatCharacter.zero(n, lift_degree) if lift_degree % 2 == 1 else None
        return LiftReport(True, "lift exists", degree, lift, lattice)
    if real_image_zero:
        return LiftReport(False, "requires torsion", degree)
    return LiftReport(False, "real image nonzero", degree)
