"""Matrix-valued differential forms on flat tori sampled on periodic grids.

A :class:`MatrixFormField` stores, for each increasing multi-index of axes
``I``, an array of shape ``grid.shape + (m, m)`` with ``m = r + s``.  Forms
and matrices combine with the super tensor-product sign rule

    (w (x) A) ^ (v (x) B) = (-1)^{|A| deg v} (w ^ v) (x) AB,

where ``|A|`` is 0 on the diagonal blocks of ``A`` and 1 on the off-diagonal
blocks.  Axis indices are 0-based throughout.

Exterior derivatives are spectral (FFT along each periodic axis), so on
band-limited data ``d`` is exact up to rounding.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from .superalgebra import DimensionError, Parity, ParityError

#: Defaults for the pointwise exponential.
EXP_TOL = 1e-12
EXP_MAX_TERMS = 200


class AliasingError(ValueError):
    """Input frequencies exceed the band limit of the grid."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on the unit torus ``[0, 1)^n``."""

    points_per_axis: tuple[int, ...]

    def __post_init__(self):
        pts = tuple(int(p) for p in self.points_per_axis)
        if not pts:
            raise DimensionError("torus dimension must be >= 1")
        if any(p < 4 for p in pts):
            raise DimensionError(f"need at least 4 points per axis, got {pts}")
        object.__setattr__(self, "points_per_axis", pts)

    @classmethod
    def uniform(cls, n: int, points: int) -> "TorusGrid":
        return cls((points,) * n)

    @property
    def dim(self) -> int:
        return len(self.points_per_axis)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points_per_axis

    @property
    def size(self) -> int:
        return math.prod(self.points_per_axis)

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for k, npts in enumerate(self.points_per_axis):
            shape = [1] * self.dim
            shape[k] = npts
            out.append((np.arange(npts) / npts).reshape(shape))
        return out

    def band_limit(self, axis: int) -> int:
        """Largest admissible input frequency on ``axis``.

        Products of two admissible fields must stay strictly below the
        Nyquist frequency, whose sine part is invisible on the grid.
        """
        return (self.points_per_axis[axis] - 1) // 4


def form_indices(n: int, degree: int | None = None) -> list[tuple[int, ...]]:
    degrees = range(n + 1) if degree is None else [degree]
    return [I for d in degrees for I in itertools.combinations(range(n), d)]


def _merge(I: tuple[int, ...], J: tuple[int, ...]):
    """Sorted union of disjoint index sets and the sign of the shuffle; ``None`` if they meet."""
    if set(I) & set(J):
        return None
    swaps = sum(1 for i in I for j in J if i > j)
    return tuple(sorted(I + J)), -1 if swaps % 2 else 1


def block_masks(ranks: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks of the diagonal (even) and off-diagonal (odd) blocks."""
    r, s = ranks
    side = np.array([False] * r + [True] * s)
    odd = side[:, None] ^ side[None, :]
    return ~odd, odd


class MatrixFormField:
    """Homogeneous element of Omega(T^n, End(C^{r|s})) sampled on a grid."""

    __slots__ = ("grid", "ranks", "components", "parity")

    def __init__(
        self,
        grid: TorusGrid,
        ranks: tuple[int, int],
        components: Mapping[tuple[int, ...], np.ndarray],
        parity: Parity | int | None = None,
        check: bool = True,
    ):
        ranks = (int(ranks[0]), int(ranks[1]))
        m = sum(ranks)
        comps: dict[tuple[int, ...], np.ndarray] = {}
        for I, arr in components.items():
            I = tuple(I)
            if list(I) != sorted(set(I)) or any(not 0 <= i < grid.dim for i in I):
                raise DimensionError(f"bad form multi-index {I} for n={grid.dim}")
            a = np.asarray(arr, dtype=complex)
            if a.shape == (m, m):
                a = np.broadcast_to(a, grid.shape + (m, m)).copy()
            if a.shape != grid.shape + (m, m):
                raise DimensionError(f"component {I} has shape {a.shape}, expected {grid.shape + (m, m)}")
            a.setflags(write=False)
            comps[I] = a
        self.grid = grid
        self.ranks = ranks
        self.components = dict(sorted(comps.items(), key=lambda kv: (len(kv[0]), kv[0])))
        if parity is None:
            parity = self._infer_parity()
        self.parity = Parity(int(parity))
        if check:
            self.check_parity()

    # construction helpers

    @classmethod
    def zero(cls, grid: TorusGrid, ranks, parity=Parity.EVEN) -> "MatrixFormField":
        return cls(grid, ranks, {}, parity)

    @classmethod
    def constant(cls, grid: TorusGrid, ranks, comps: Mapping, parity=None) -> "MatrixFormField":
        return cls(grid, ranks, {I: np.asarray(A, dtype=complex) for I, A in comps.items()}, parity)

    @classmethod
    def identity(cls, grid: TorusGrid, ranks) -> "MatrixFormField":
        return cls.constant(grid, ranks, {(): np.eye(sum(ranks))}, Parity.EVEN)

    @classmethod
    def scalar(cls, grid: TorusGrid, comps: Mapping, parity=None) -> "MatrixFormField":
        """Scalar-valued form (ranks 1|0) from arrays of shape ``grid.shape``."""
        return cls(grid, (1, 0), {I: np.asarray(f, dtype=complex)[..., None, None] for I, f in comps.items()}, parity)

    @property
    def m(self) -> int:
        return sum(self.ranks)

    @property
    def n(self) -> int:
        return self.grid.dim

    def _infer_parity(self) -> Parity:
        even, odd = block_masks(self.ranks)
        for I, a in self.components.items():
            if np.any(a[..., even]):
                return Parity(len(I) % 2)
            if np.any(a[..., odd]):
                return Parity((len(I) + 1) % 2)
        return Parity.EVEN

    def check_parity(self, atol: float = 0.0):
        even, odd = block_masks(self.ranks)
        for I, a in self.components.items():
            bad = odd if len(I) % 2 == self.parity else even
            if a.size and np.max(np.abs(a[..., bad]), initial=0.0) > atol:
                raise ParityError(
                    f"component {I} breaks declared {self.parity.name.lower()} total parity"
                )

    def component(self, I) -> np.ndarray:
        I = tuple(I)
        if I in self.components:
            return self.components[I]
        return np.zeros(self.grid.shape + (self.m, self.m), dtype=complex)

    def degrees(self) -> set[int]:
        return {len(I) for I in self.components}

    def scalar_component(self, I) -> np.ndarray:
        if self.m != 1:
            raise DimensionError("scalar_component needs a ranks 1|0 field")
        return self.component(I)[..., 0, 0]

    def restrict_degree(self, degrees) -> "MatrixFormField":
        degrees = set(degrees)
        return MatrixFormField(
            self.grid, self.ranks, {I: a for I, a in self.components.items() if len(I) in degrees}, self.parity
        )

    def map_blocks(self, fn) -> "MatrixFormField":
        return MatrixFormField(self.grid, self.ranks, {I: fn(a) for I, a in self.components.items()}, self.parity)

    # linear structure

    def _compatible(self, other: "MatrixFormField"):
        if self.grid != other.grid or self.ranks != other.ranks:
            raise DimensionError("fields live on different grids or bundles")

    def __add__(self, other: "MatrixFormField") -> "MatrixFormField":
        self._compatible(other)
        if other.parity != self.parity and other.components and self.components:
            raise ParityError("sum of fields with different total parity")
        parity = self.parity if self.components else other.parity
        out = dict(self.components)
        for I, a in other.components.items():
            out[I] = out[I] + a if I in out else a
        return MatrixFormField(self.grid, self.ranks, out, parity)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "MatrixFormField":
        return MatrixFormField(self.grid, self.ranks, {I: c * a for I, a in self.components.items()}, self.parity)

    __mul__ = scale

    def __rmul__(self, c):
        return self.scale(c)

    def __repr__(self):
        return (
            f"MatrixFormField(grid={self.grid.shape}, ranks={self.ranks[0]}|{self.ranks[1]}, "
            f"parity={self.parity.name}, components={list(self.components)})"
        )

    # dense pointwise algebra representation

    def to_dense(self) -> np.ndarray:
        """Array of shape ``grid.shape + (2**n, m, m)`` indexed by form bitmask."""
        out = np.zeros(self.grid.shape + (2 ** self.n, self.m, self.m), dtype=complex)
        for I, a in self.components.items():
            out[..., _bitmask(I), :, :] = a
        return out

    @classmethod
    def from_dense(cls, grid: TorusGrid, ranks, dense: np.ndarray, parity, drop_zero: bool = True):
        comps = {}
        for I in form_indices(grid.dim):
            a = dense[..., _bitmask(I), :, :]
            if drop_zero and not np.any(a):
                continue
            comps[I] = a
        return cls(grid, ranks, comps, parity)


def _bitmask(I) -> int:
    return sum(1 << i for i in I)


def _indices_of(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


@lru_cache(maxsize=None)
def _product_table(n: int) -> tuple[tuple[int, int, int, int, bool], ...]:
    """(mask_a, mask_b, mask_out, shuffle sign, deg b odd) over disjoint pairs."""
    table = []
    for a in range(2 ** n):
        for b in range(2 ** n):
            if a & b:
                continue
            _, sign = _merge(_indices_of(a), _indices_of(b))
            table.append((a, b, a | b, sign, bin(b).count("1") % 2 == 1))
    return tuple(table)


def _twisted(a: np.ndarray, ranks) -> np.ndarray:
    _, odd = block_masks(ranks)
    return np.where(odd, -a, a)


def _mul_cf(a: np.ndarray, b: np.ndarray, ranks, n: int) -> np.ndarray:
    """Product on component-first arrays of shape ``(2**n, ..., m, m)``."""
    at = _twisted(a, ranks)
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    for ia, ib, io, sign, odd_b in _product_table(n):
        prod = np.matmul(at[ia] if odd_b else a[ia], b[ib])
        if sign < 0:
            out[io] -= prod
        else:
            out[io] += prod
    return out


def _to_cf(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.moveaxis(a, -3, 0))


def _from_cf(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.moveaxis(a, 0, -3))


def algebra_mul(a: np.ndarray, b: np.ndarray, ranks, n: int) -> np.ndarray:
    """Product in End(C^{r|s}) (x) Lambda(C^n), batched over leading axes.

    Operands have shape ``batch + (2**n, m, m)`` indexed by form bitmask.
    """
    return _from_cf(_mul_cf(_to_cf(a), _to_cf(b), ranks, n))


def _cf_norm(a: np.ndarray) -> float:
    # submultiplicative for the product: sum over components of Frobenius norms
    per = np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1))).sum(axis=0)
    return float(np.max(per, initial=0.0))


def algebra_exp(a: np.ndarray, ranks, n: int, tol: float = EXP_TOL, max_terms: int = EXP_MAX_TERMS) -> np.ndarray:
    """Scaling-and-squaring exponential with an adaptive Taylor series."""
    m = sum(ranks)
    x = _to_cf(a)
    nrm = _cf_norm(x)
    squarings = max(0, math.ceil(math.log2(nrm / 0.5))) if nrm > 0.5 else 0
    x = x / 2.0 ** squarings
    ident = np.zeros(x.shape, dtype=complex)
    ident[0] = np.eye(m)
    result = ident.copy()
    term = ident
    for k in range(1, max_terms + 1):
        term = _mul_cf(term, x, ranks, n) / k
        result += term
        # truncate well below tol so the squarings keep the error there
        if _cf_norm(term) <= tol * 1e-4:
            break
    else:
        raise ConvergenceError(f"exponential series did not converge in {max_terms} terms")
    for _ in range(squarings):
        result = _mul_cf(result, result, ranks, n)
    return _from_cf(result)


@dataclass(frozen=True)
class AlgebraElement:
    """One value of the pointwise algebra End(C^{r|s}) (x) Lambda(C^n)."""

    n: int
    ranks: tuple[int, int]
    components: Mapping[tuple[int, ...], np.ndarray] = field(default_factory=dict)

    def to_dense(self) -> np.ndarray:
        m = sum(self.ranks)
        out = np.zeros((2 ** self.n, m, m), dtype=complex)
        for I, A in self.components.items():
            out[_bitmask(I)] = A
        return out

    @classmethod
    def from_dense(cls, n: int, ranks, dense: np.ndarray) -> "AlgebraElement":
        comps = {I: dense[_bitmask(I)].copy() for I in form_indices(n) if np.any(dense[_bitmask(I)])}
        return cls(n, tuple(ranks), comps)

    def __mul__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement.from_dense(self.n, self.ranks, algebra_mul(self.to_dense(), other.to_dense(), self.ranks, self.n))

    def exp(self, tol: float = EXP_TOL, max_terms: int = EXP_MAX_TERMS) -> "AlgebraElement":
        return AlgebraElement.from_dense(self.n, self.ranks, algebra_exp(self.to_dense(), self.ranks, self.n, tol, max_terms))

    def component(self, I) -> np.ndarray:
        m = sum(self.ranks)
        return np.asarray(self.components.get(tuple(I), np.zeros((m, m), dtype=complex)))


def at_point(a: MatrixFormField, index: tuple[int, ...]) -> AlgebraElement:
    return AlgebraElement(a.n, a.ranks, {I: np.array(c[index]) for I, c in a.components.items()})


# operations


def wedge(a: MatrixFormField, b: MatrixFormField) -> MatrixFormField:
    a._compatible(b)
    ranks = a.ranks
    at = {I: _twisted(x, ranks) for I, x in a.components.items()}
    out: dict[tuple[int, ...], np.ndarray] = {}
    for I, x in a.components.items():
        for J, y in b.components.items():
            merged = _merge(I, J)
            if merged is None:
                continue
            K, sign = merged
            left = at[I] if len(J) % 2 else x
            prod = sign * (left @ y)
            out[K] = out[K] + prod if K in out else prod
    return MatrixFormField(a.grid, ranks, out, a.parity + b.parity)


def supercommutator(a: MatrixFormField, b: MatrixFormField) -> MatrixFormField:
    """``a^b - (-1)^{|a||b|} b^a`` in total parity."""
    sign = -1 if (a.parity * b.parity) % 2 == 0 else 1
    return wedge(a, b) + wedge(b, a).scale(sign)


def partial_derivative(values: np.ndarray, axis: int) -> np.ndarray:
    """Fourier-collocation derivative along one periodic axis of unit length."""
    npts = values.shape[axis]
    k = np.fft.fftfreq(npts, d=1.0 / npts)
    if npts % 2 == 0:
        k[npts // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = npts
    mult = (2j * np.pi * k).reshape(shape)
    return np.fft.ifft(np.fft.fft(values, axis=axis) * mult, axis=axis)


def ext_deriv(a: MatrixFormField) -> MatrixFormField:
    n = a.n
    out: dict[tuple[int, ...], np.ndarray] = {}
    for I, x in a.components.items():
        for k in range(n):
            if k in I:
                continue
            K, sign = _merge((k,), I)
            dx = partial_derivative(x, k)
            term = dx if sign > 0 else -dx
            out[K] = out[K] + term if K in out else term
    return MatrixFormField(a.grid, a.ranks, out, a.parity + 1)


def ptwise_exp(F: MatrixFormField, tol: float = EXP_TOL, max_terms: int = EXP_MAX_TERMS) -> MatrixFormField:
    if F.parity != Parity.EVEN:
        raise ParityError("exponential needs an even field")
    dense = algebra_exp(F.to_dense(), F.ranks, F.n, tol, max_terms)
    return MatrixFormField.from_dense(F.grid, F.ranks, dense, Parity.EVEN)


def supertrace_form(a: MatrixFormField) -> MatrixFormField:
    """Scalar form ``tr(block1) - tr(block4)`` componentwise.

    Odd matrix parts have vanishing diagonal blocks and drop out.
    """
    r = a.ranks[0]
    comps = {}
    for I, x in a.components.items():
        d = np.diagonal(x, axis1=-2, axis2=-1)
        comps[I] = (d[..., :r].sum(axis=-1) - d[..., r:].sum(axis=-1))[..., None, None]
    return MatrixFormField(a.grid, (1, 0), comps, a.parity, check=False)


def integrate_over_subtorus(a: MatrixFormField, I, offset: tuple[int, ...] | None = None) -> complex:
    """Integral of the ``I`` component over the coordinate subtorus spanned by axes ``I``.

    The remaining axes are fixed at grid index ``offset`` (default 0).  The
    trapezoidal sum is exact for trigonometric polynomials below the grid
    frequency.
    """
    if a.m != 1:
        raise DimensionError("integration needs a scalar-valued form")
    I = tuple(I)
    if list(I) != sorted(set(I)) or any(not 0 <= i < a.n for i in I):
        raise DimensionError(f"bad multi-index {I}")
    offset = tuple(offset) if offset is not None else (0,) * a.n
    f = a.scalar_component(I)
    sl = tuple(slice(None) if k in I else offset[k] for k in range(a.n))
    return complex(np.mean(f[sl])) if I else complex(f[sl])


def norm(a: MatrixFormField) -> float:
    """Max over grid points and components of the Frobenius norm."""
    best = 0.0
    for x in a.components.values():
        if x.size:
            best = max(best, float(np.max(np.sqrt(np.sum(np.abs(x) ** 2, axis=(-2, -1))))))
    return best


# Fourier-mode serialization


def _index_key(I: tuple[int, ...]) -> str:
    return ",".join(str(i) for i in I)


def _parse_key(key: str) -> tuple[int, ...]:
    return tuple(int(x) for x in key.split(",")) if key else ()


def _cplx_out(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _cplx_in(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    return complex(float(v[0]), float(v[1]))


@dataclass
class ModeSeries:
    """Matrix-valued form given by Fourier modes ``sum_k M_k exp(2 pi i k.x)`` per component.

    This is the on-disk representation of input fields; text round-trips are
    bit-exact because floats are written with ``repr`` precision.
    """

    n: int
    ranks: tuple[int, int]
    components: dict[tuple[int, ...], list[tuple[tuple[int, ...], np.ndarray]]]
    parity: Parity | None = None

    def max_frequency(self) -> list[int]:
        top = [0] * self.n
        for modes in self.components.values():
            for freq, _ in modes:
                top = [max(t, abs(f)) for t, f in zip(top, freq)]
        return top

    def check_band_limit(self, grid: TorusGrid):
        for axis, f in enumerate(self.max_frequency()):
            if f > grid.band_limit(axis):
                raise AliasingError(
                    f"frequency {f} on axis {axis} exceeds band limit {grid.band_limit(axis)} "
                    f"for {grid.points_per_axis[axis]} points"
                )

    def synthesize(
        self, grid: TorusGrid, check_band: bool = True, parity: Parity | None = None, check_parity: bool = True
    ) -> MatrixFormField:
        if grid.dim != self.n:
            raise DimensionError(f"mode series is on T^{self.n}, grid on T^{grid.dim}")
        if check_band:
            self.check_band_limit(grid)
        xs = grid.coords()
        m = sum(self.ranks)
        comps = {}
        for I, modes in self.components.items():
            acc = np.zeros(grid.shape + (m, m), dtype=complex)
            for freq, M in modes:
                phase = np.exp(2j * np.pi * sum(k * x for k, x in zip(freq, xs)))
                acc = acc + np.asarray(phase)[..., None, None] * M
            comps[I] = acc
        parity = self.parity if parity is None else parity
        return MatrixFormField(grid, self.ranks, comps, parity, check=check_parity)

    @classmethod
    def from_field(cls, a: MatrixFormField, cutoff: float = 1e-13) -> "ModeSeries":
        comps = {}
        shape = a.grid.shape
        for I, x in a.components.items():
            coeffs = np.fft.fftn(x, axes=range(a.n)) / a.grid.size
            modes = []
            for idx in np.ndindex(*shape):
                M = coeffs[idx]
                if np.max(np.abs(M)) > cutoff:
                    freq = tuple(int(i if i <= npts // 2 else i - npts) for i, npts in zip(idx, shape))
                    modes.append((freq, M))
            modes.sort(key=lambda fm: fm[0])
            comps[I] = modes
        return cls(a.n, a.ranks, comps, a.parity)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "ranks": list(self.ranks),
            "parity": None if self.parity is None else self.parity.name.lower(),
            "components": {
                _index_key(I): [
                    {"freq": list(freq), "matrix": [[_cplx_out(z) for z in row] for row in np.asarray(M)]}
                    for freq, M in modes
                ]
                for I, modes in self.components.items()
            },
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ModeSeries":
        n = int(obj["n"])
        ranks = tuple(int(x) for x in obj["ranks"])
        parity = obj.get("parity")
        comps = {}
        for key, modes in obj.get("components", {}).items():
            I = _parse_key(key)
            parsed = []
            for mode in modes:
                freq = tuple(int(f) for f in mode["freq"])
                if len(freq) != n:
                    raise DimensionError(f"frequency {freq} has wrong length for n={n}")
                M = np.array([[_cplx_in(z) for z in row] for row in mode["matrix"]], dtype=complex)
                if M.shape != (sum(ranks), sum(ranks)):
                    raise DimensionError(f"mode matrix shape {M.shape} does not match ranks {ranks}")
                parsed.append((freq, M))
            comps[I] = parsed
        return cls(n, ranks, comps, None if parity is None else Parity[parity.upper()])

    def to_text(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_text(cls, text: str) -> "ModeSeries":
        return cls.from_json(json.loads(text))
