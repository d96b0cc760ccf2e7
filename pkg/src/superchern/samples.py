"""Seeded random instances: band-limited fields, flat pairs, morphisms, holonomies."""

from __future__ import annotations

import numpy as np

from .formcalc import MatrixFormField, ModeSeries, TorusGrid, block_masks, form_indices, partial_derivative
from .superalgebra import Parity
from .superconnection import Morphism, SuperConnection, build_L_from_morphism


def _freqs(rng, grid: TorusGrid, kmax: int | None):
    lim = [grid.band_limit(k) if kmax is None else min(kmax, grid.band_limit(k)) for k in range(grid.dim)]
    return tuple(int(rng.integers(-b, b + 1)) for b in lim)


def _cgauss(rng, shape, amp=1.0):
    return amp * (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2)


def random_modes(
    rng,
    grid: TorusGrid,
    ranks,
    degrees,
    blocks: str,
    kmax: int | None = None,
    amp: float = 0.3,
    nmodes: int = 3,
) -> ModeSeries:
    """Random trigonometric polynomial supported on the ``blocks`` ('even', 'odd' or 'all')."""
    m = sum(ranks)
    even, odd = block_masks(ranks)
    mask = {"even": even, "odd": odd, "all": np.ones((m, m), bool)}[blocks]
    comps = {}
    for d in degrees:
        for I in form_indices(grid.dim, d):
            comps[I] = [(_freqs(rng, grid, kmax), _cgauss(rng, (m, m), amp) * mask) for _ in range(nmodes)]
    return ModeSeries(grid.dim, tuple(ranks), comps)


def random_field(rng, grid, ranks, degrees, blocks, parity=None, **kw) -> MatrixFormField:
    return random_modes(rng, grid, ranks, degrees, blocks, **kw).synthesize(grid, parity=parity)


def trig_scalar(rng, grid: TorusGrid, kmax: int | None = None, amp: float = 0.3, nmodes: int = 3) -> np.ndarray:
    xs = grid.coords()
    out = np.zeros(grid.shape, dtype=complex)
    for _ in range(nmodes):
        f = _freqs(rng, grid, kmax)
        out = out + _cgauss(rng, (), amp) * np.exp(2j * np.pi * sum(k * x for k, x in zip(f, xs)))
    return out


def _commuting_family(rng, size: int, count: int, scale: float = 1.0) -> list[np.ndarray]:
    """``count`` matrices sharing a random, well-conditioned eigenbasis."""
    if size == 0:
        return [np.zeros((0, 0), dtype=complex) for _ in range(count)]
    V = np.eye(size) + 0.3 * _cgauss(rng, (size, size))
    Vinv = np.linalg.inv(V)
    return [V @ np.diag(_cgauss(rng, size, scale)) @ Vinv for _ in range(count)]


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    r, s = a.shape[-1], b.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape[:-2], b.shape[:-2]) + (r + s, r + s), dtype=complex)
    out[..., :r, :r] = a
    out[..., r:, r:] = b
    return out


def constant_commuting_theta(rng, grid: TorusGrid, ranks, scale: float = 1.0) -> MatrixFormField:
    """Constant flat connection: per block, commuting matrices ``C_k`` on ``dx_k``."""
    r, s = ranks
    c0 = _commuting_family(rng, r, grid.dim, scale)
    c1 = _commuting_family(rng, s, grid.dim, scale)
    comps = {(k,): _block_diag(c0[k], c1[k]) for k in range(grid.dim)}
    return MatrixFormField(grid, ranks, comps, Parity.ODD)


def flat_theta(rng, grid: TorusGrid, ranks, kmax: int | None = None, nfuncs: int = 2, amp: float = 0.3) -> MatrixFormField:
    """Non-constant flat connection ``sum_j df_j P_j + sum_k C_k dx_k`` with all ``P_j, C_k`` commuting.

    Flat because ``d(df) = 0`` and wedge products of commuting coefficients cancel.
    """
    r, s = ranks
    mats0 = _commuting_family(rng, r, nfuncs + grid.dim, amp)
    mats1 = _commuting_family(rng, s, nfuncs + grid.dim, amp)
    funcs = [trig_scalar(rng, grid, kmax, amp=amp / (2 * np.pi)) for _ in range(nfuncs)]
    comps = {}
    for k in range(grid.dim):
        acc = np.broadcast_to(_block_diag(mats0[nfuncs + k], mats1[nfuncs + k]), grid.shape + (r + s, r + s)).copy()
        for j, f in enumerate(funcs):
            acc = acc + partial_derivative(f, k)[..., None, None] * _block_diag(mats0[j], mats1[j])
        comps[(k,)] = acc
    return MatrixFormField(grid, ranks, comps, Parity.ODD)


def curved_theta(rng, grid: TorusGrid, ranks, kmax: int | None = None, amp: float = 0.3) -> MatrixFormField:
    return random_modes(rng, grid, ranks, [1], "even", kmax=kmax, amp=amp).synthesize(grid, parity=Parity.ODD)


def constant_curved_theta(rng, grid: TorusGrid, ranks, amp: float = 0.5) -> MatrixFormField:
    """Constant but non-commuting coefficients, so ``theta ^ theta != 0``."""
    even, _ = block_masks(ranks)
    m = sum(ranks)
    comps = {(k,): _cgauss(rng, (m, m), amp) * even for k in range(grid.dim)}
    return MatrixFormField(grid, ranks, comps, Parity.ODD)


def random_metric(rng, k: int) -> np.ndarray:
    A = _cgauss(rng, (k, k))
    return A @ A.conj().T + k * np.eye(k)


def random_morphism(rng, grid: TorusGrid, ranks, kind: str = "constant", kmax: int | None = None,
                    amp: float = 0.8, metrics: bool = False) -> Morphism:
    """Morphism ``u: E0 -> E1`` of shape ``(s, r)``.

    kinds: ``constant``; ``isometric`` (``c * A diag(phases) B`` with unitary
    ``A, B``, so ``u*u`` is constant while ``u`` varies); ``generic``
    (arbitrary band-limited entries).
    """
    r, s = ranks
    g0 = random_metric(rng, r) if metrics else None
    g1 = random_metric(rng, s) if metrics else None
    if kind == "constant":
        return Morphism(_cgauss(rng, (s, r), amp), g0, g1)
    if kind == "generic":
        u = np.stack([np.stack([trig_scalar(rng, grid, kmax, amp) for _ in range(r)], -1) for _ in range(s)], -2)
        return Morphism(u, g0, g1)
    if kind == "isometric":
        A, _ = np.linalg.qr(_cgauss(rng, (s, s)))
        B, _ = np.linalg.qr(_cgauss(rng, (r, r)))
        xs = grid.coords()
        D = np.zeros(grid.shape + (s, r), dtype=complex)
        for j in range(min(r, s)):
            f = _freqs(rng, grid, kmax)
            D[..., j, j] = np.exp(2j * np.pi * sum(k * x for k, x in zip(f, xs)))
        # standard metrics keep u*u constant
        return Morphism(amp * (A @ D @ B))
    raise ValueError(f"unknown morphism kind {kind!r}")


def random_superconnection(rng, grid: TorusGrid, ranks, theta_kind: str, morphism_kind: str,
                           t: float | None = None, kmax: int | None = None) -> SuperConnection:
    maker = {
        "flat": lambda: flat_theta(rng, grid, ranks, kmax),
        "constant-flat": lambda: constant_commuting_theta(rng, grid, ranks, 0.5),
        "curved": lambda: curved_theta(rng, grid, ranks, kmax),
        "constant-curved": lambda: constant_curved_theta(rng, grid, ranks),
    }[theta_kind]
    theta = maker()
    m = random_morphism(rng, grid, ranks, morphism_kind, kmax)
    L = build_L_from_morphism(m, grid)
    if t is None:
        t = float(rng.uniform(0.3, 1.5))
    return SuperConnection(grid, ranks, theta, L, t)


def random_diagonal_holonomy(rng, n: int, rank: int) -> tuple[np.ndarray, ...]:
    """Diagonal unitary holonomies ``diag(exp(2 pi i a_jk))`` with uniform random angles."""
    return tuple(np.diag(np.exp(2j * np.pi * rng.uniform(0, 1, rank))) for _ in range(n))


def random_diagonalizable_holonomy(rng, n: int, rank: int) -> tuple[np.ndarray, ...]:
    V = np.eye(rank) + 0.3 * _cgauss(rng, (rank, rank))
    Vinv = np.linalg.inv(V)
    return tuple(
        V @ np.diag(np.exp(2j * np.pi * _cgauss(rng, rank, 0.5))) @ Vinv for _ in range(n)
    )


def random_homogeneous_field(rng, grid: TorusGrid, ranks, parity: int, kmax: int | None = None,
                             amp: float = 0.3, nmodes: int = 2) -> MatrixFormField:
    """Field with components in every degree, blocks chosen so the total parity is ``parity``."""
    m = sum(ranks)
    even, odd = block_masks(ranks)
    xs = grid.coords()
    comps = {}
    for I in form_indices(grid.dim):
        mask = even if len(I) % 2 == parity else odd
        acc = np.zeros(grid.shape + (m, m), dtype=complex)
        for _ in range(nmodes):
            f = _freqs(rng, grid, kmax)
            acc = acc + np.exp(2j * np.pi * sum(k * x for k, x in zip(f, xs)))[..., None, None] * (
                _cgauss(rng, (m, m), amp) * mask
            )
        comps[I] = acc
    return MatrixFormField(grid, ranks, comps, Parity(parity))
