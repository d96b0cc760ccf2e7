"""Superconnections ``D_t = d + theta + t L`` on ``E = E0 (+) E1`` over a flat torus.

``theta`` is a block-diagonal matrix-valued 1-form (a connection on each of
``E0`` and ``E1``); ``L`` is a block off-diagonal 0-form.  The curvature is

    F_t = (d theta + theta^theta) + t (dL + [theta, L]) + t^2 L^2

and the Chern character form is ``str exp(F_t)`` with the 2k-form part
scaled by ``(i/2pi)^k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .charclasses import reduce_mod_z
from .formcalc import (
    EXP_MAX_TERMS,
    EXP_TOL,
    MatrixFormField,
    TorusGrid,
    block_masks,
    ext_deriv,
    form_indices,
    integrate_over_subtorus,
    norm,
    ptwise_exp,
    supercommutator,
    supertrace_form,
    wedge,
)
from .superalgebra import DimensionError, Parity, ParityError

FLAT_TOL = 1e-8


class FlatnessError(ValueError):
    """An operation that needs a flat pair of connections got a curved one."""


@dataclass(frozen=True)
class SuperConnection:
    grid: TorusGrid
    ranks: tuple[int, int]
    theta: MatrixFormField
    L: MatrixFormField
    t: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ranks", (int(self.ranks[0]), int(self.ranks[1])))
        object.__setattr__(self, "t", float(self.t))
        for name, f in (("theta", self.theta), ("L", self.L)):
            if f.grid != self.grid or f.ranks != self.ranks:
                raise DimensionError(f"{name} is not a field on this grid and bundle")
        even, odd = block_masks(self.ranks)
        for I, a in self.theta.components.items():
            if len(I) != 1 and np.any(a):
                raise ParityError("theta must be a 1-form")
            if np.any(a[..., odd]):
                raise ParityError("theta must preserve grading (block-diagonal transition structure)")
        for I, a in self.L.components.items():
            if len(I) != 0 and np.any(a):
                raise ParityError("L must be a 0-form")
            if np.any(a[..., even]):
                raise ParityError("L must be an odd endomorphism (off-diagonal blocks only)")
        if self.theta.parity != Parity.ODD:
            object.__setattr__(self, "theta", MatrixFormField(self.grid, self.ranks, self.theta.components, Parity.ODD))
        if self.L.parity != Parity.ODD:
            object.__setattr__(self, "L", MatrixFormField(self.grid, self.ranks, self.L.components, Parity.ODD))

    @classmethod
    def trivial(cls, grid: TorusGrid, ranks, t: float = 1.0) -> "SuperConnection":
        z = MatrixFormField.zero(grid, ranks, Parity.ODD)
        return cls(grid, ranks, z, z, t)

    def with_t(self, t: float) -> "SuperConnection":
        return replace(self, t=t)

    def connection_curvature(self) -> MatrixFormField:
        """``d theta + theta ^ theta``, the curvature of ``D0``."""
        return ext_deriv(self.theta) + wedge(self.theta, self.theta)

    def is_flat_pair(self, tol: float = FLAT_TOL) -> bool:
        return norm(self.connection_curvature()) <= tol

    def block(self, a: np.ndarray, k: int) -> np.ndarray:
        r = self.ranks[0]
        return a[..., :r, :r] if k == 0 else a[..., r:, r:]


@dataclass(frozen=True)
class HolonomyRep:
    """Commuting holonomy matrices of a flat pair, one list per block and axis."""

    blocks: tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]
    commutation_tolerance: float = 1e-8

    def __post_init__(self):
        for mats in self.blocks:
            for i, a in enumerate(mats):
                for b in mats[i + 1:]:
                    if np.max(np.abs(a @ b - b @ a), initial=0.0) > self.commutation_tolerance:
                        raise FlatnessError("holonomy matrices do not commute")

    @property
    def n(self) -> int:
        return len(self.blocks[0])

    def block(self, k: int) -> tuple[np.ndarray, ...]:
        return self.blocks[k]


@dataclass(frozen=True)
class Morphism:
    """Bundle map ``u: E0 -> E1`` with constant Hermitian metrics on both sides.

    ``u`` is an ``(s, r)`` matrix or a grid array of them.
    """

    u: np.ndarray
    metric0: np.ndarray | None = None
    metric1: np.ndarray | None = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.ndim < 2:
            raise DimensionError("u must be an (s, r) matrix or a grid of them")
        object.__setattr__(self, "u", u)
        s, r = u.shape[-2:]
        for name, g, k in (("metric0", self.metric0, r), ("metric1", self.metric1, s)):
            g = np.eye(k, dtype=complex) if g is None else np.asarray(g, dtype=complex)
            if g.shape != (k, k):
                raise DimensionError(f"{name} must be {k}x{k}")
            if not np.allclose(g, g.conj().T, atol=1e-12):
                raise ValueError(f"{name} must be Hermitian")
            if k:
                try:
                    np.linalg.cholesky(g)
                except np.linalg.LinAlgError:
                    raise ValueError(f"{name} must be positive-definite") from None
            object.__setattr__(self, name, g)

    @property
    def ranks(self) -> tuple[int, int]:
        s, r = self.u.shape[-2:]
        return r, s

    def adjoint(self) -> np.ndarray:
        """``u* = G0^{-1} u^dagger G1``, adjoint of ``u`` for the two metrics."""
        udag = np.swapaxes(self.u.conj(), -2, -1)
        return np.linalg.solve(self.metric0, udag @ self.metric1)


def build_L_from_morphism(m: Morphism, grid: TorusGrid) -> MatrixFormField:
    """Odd 0-form ``L = i [[0, u*], [u, 0]]``."""
    r, s = m.ranks
    u = m.u
    if u.ndim == 2:
        u = np.broadcast_to(u, grid.shape + u.shape)
    elif u.shape[:-2] != grid.shape:
        raise DimensionError(f"u sampled on {u.shape[:-2]}, grid is {grid.shape}")
    ustar = np.broadcast_to(m.adjoint(), grid.shape + (r, s))
    L = np.zeros(grid.shape + (r + s, r + s), dtype=complex)
    L[..., :r, r:] = 1j * ustar
    L[..., r:, :r] = 1j * u
    return MatrixFormField(grid, (r, s), {(): L}, Parity.ODD)


def curvature(c: SuperConnection) -> MatrixFormField:
    F = c.connection_curvature()
    if c.t != 0.0:
        cov = ext_deriv(c.L) + supercommutator(c.theta, c.L)
        F = F + cov.scale(c.t) + wedge(c.L, c.L).scale(c.t * c.t)
    return F


def normalize_chern(a: MatrixFormField) -> MatrixFormField:
    """Scale the 2k-form part by ``(i/2pi)^k``."""
    fac = 1j / (2 * math.pi)
    return MatrixFormField(
        a.grid, a.ranks, {I: x * fac ** (len(I) // 2) for I, x in a.components.items()}, a.parity, check=False
    )


def chern_character_form(
    c: SuperConnection, normalized: bool = True, tol: float = EXP_TOL, max_terms: int = EXP_MAX_TERMS
) -> MatrixFormField:
    form = supertrace_form(ptwise_exp(curvature(c), tol, max_terms))
    return normalize_chern(form) if normalized else form


def check_closed(c: SuperConnection, **kw) -> float:
    return norm(ext_deriv(chern_character_form(c, **kw)))


def class_pairing(c: SuperConnection, offset: tuple[int, ...] | None = None, **kw) -> dict[tuple[int, ...], complex]:
    """Integrals of the Chern character form over every even-dimensional coordinate subtorus."""
    ch = chern_character_form(c, **kw)
    n = c.grid.dim
    return {
        I: integrate_over_subtorus(ch, I, offset)
        for d in range(0, n + 1, 2)
        for I in form_indices(n, d)
    }


@dataclass
class FamilyReport:
    t_values: list[float]
    pairings: list[dict[tuple[int, ...], complex]]
    deviation: dict[tuple[int, ...], float] = field(default_factory=dict)

    @property
    def max_deviation(self) -> float:
        return max(self.deviation.values(), default=0.0)


def family_connection_check(c: SuperConnection, t_values, **kw) -> FamilyReport:
    """Pairings along the family ``D0 + tL``; the class must not move with ``t``."""
    t_values = [float(t) for t in t_values]
    pairings = [class_pairing(c.with_t(t), **kw) for t in t_values]
    deviation = {}
    for I in pairings[0] if pairings else {}:
        vals = [p[I] for p in pairings]
        deviation[I] = max(abs(a - b) for a in vals for b in vals)
    return FamilyReport(t_values, pairings, deviation)


def _line_interpolant(samples: np.ndarray):
    """Trigonometric interpolant ``tau -> matrix`` of periodic samples on [0, 1)."""
    npts = samples.shape[0]
    coeffs = np.fft.fft(samples, axis=0) / npts
    freqs = np.fft.fftfreq(npts, d=1.0 / npts)
    nyq = npts // 2 if npts % 2 == 0 else None

    def value(tau: float) -> np.ndarray:
        ph = np.exp(2j * np.pi * freqs * tau)
        if nyq is not None:
            ph[nyq] = math.cos(2 * math.pi * nyq * tau)
        return np.tensordot(ph, coeffs, axes=(0, 0))

    return value


def _require_flat(c: SuperConnection, tol: float):
    res = norm(c.connection_curvature())
    if res > tol:
        raise FlatnessError(f"connection is not flat (curvature norm {res:.3e} > {tol:.1e})")


def _line(a: np.ndarray, axis: int, offset) -> np.ndarray:
    sl = tuple(slice(None) if k == axis else offset[k] for k in range(len(offset)))
    return a[sl]


def holonomy_of_flat(
    c: SuperConnection,
    axis: int,
    offset: tuple[int, ...] | None = None,
    flat_tol: float = FLAT_TOL,
    rtol: float = 1e-12,
    atol: float = 1e-13,
) -> tuple[np.ndarray, np.ndarray]:
    """Parallel transport ``dV/dtau = -theta_k V`` around the ``axis``-th loop.

    Integrated with an adaptive Runge-Kutta scheme on the trigonometric
    interpolant of ``theta_k`` along the loop.  Returns one matrix per block.
    """
    _require_flat(c, flat_tol)
    n = c.grid.dim
    if not 0 <= axis < n:
        raise DimensionError(f"axis {axis} out of range for T^{n}")
    offset = tuple(offset) if offset is not None else (0,) * n
    m = sum(c.ranks)
    samples = _line(c.theta.component((axis,)), axis, offset)
    theta_at = _line_interpolant(samples)

    def rhs(_tau, y):
        return -(theta_at(_tau) @ y.reshape(m, m)).ravel()

    if not np.any(samples):
        V = np.eye(m, dtype=complex)
    else:
        sol = solve_ivp(rhs, (0.0, 1.0), np.eye(m, dtype=complex).ravel(), method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"parallel transport failed: {sol.message}")
        V = sol.y[:, -1].reshape(m, m)
    return c.block(V, 0).copy(), c.block(V, 1).copy()


def holonomy_rep(c: SuperConnection, **kw) -> HolonomyRep:
    hols = [holonomy_of_flat(c, k, **kw) for k in range(c.grid.dim)]
    return HolonomyRep((tuple(h[0] for h in hols), tuple(h[1] for h in hols)))


def transgress_c1(
    c: SuperConnection, axis: int, offset: tuple[int, ...] | None = None, flat_tol: float = FLAT_TOL
) -> tuple[complex, complex]:
    """``(1/2 pi i) * loop integral of tr(theta_block)`` mod Z, for both blocks.

    With ``dV/dtau = -theta V`` this equals ``-(1/2 pi i) log det(holonomy)`` mod Z.
    """
    _require_flat(c, flat_tol)
    n = c.grid.dim
    offset = tuple(offset) if offset is not None else (0,) * n
    line = _line(c.theta.component((axis,)), axis, offset)
    out = []
    for k in (0, 1):
        tr = np.trace(c.block(line, k), axis1=-2, axis2=-1)
        out.append(reduce_mod_z(complex(np.mean(tr)) / (2j * math.pi)))
    return out[0], out[1]


def c1_from_holonomy(hol: np.ndarray) -> complex:
    """``-(1/2 pi i) log det(hol)`` mod Z."""
    return reduce_mod_z(-complex(np.log(complex(np.linalg.det(hol)))) / (2j * math.pi))
