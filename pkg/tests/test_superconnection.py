import numpy as np
import pytest
from scipy.linalg import expm

from superchern import samples
from superchern.charclasses import distance_mod_z
from superchern.formcalc import MatrixFormField, TorusGrid, norm
from superchern.superalgebra import Parity, ParityError
from superchern.superconnection import (
    FlatnessError,
    HolonomyRep,
    Morphism,
    SuperConnection,
    build_L_from_morphism,
    c1_from_holonomy,
    check_closed,
    chern_character_form,
    class_pairing,
    curvature,
    family_connection_check,
    holonomy_of_flat,
    holonomy_rep,
    transgress_c1,
)


def odd_field(grid, ranks, comps):
    return MatrixFormField(grid, ranks, comps, Parity.ODD, check=False)


def test_theta_off_diagonal_rejected():
    grid = TorusGrid((8, 8))
    A = np.zeros(grid.shape + (2, 2), dtype=complex)
    A[..., 0, 1] = 0.5
    theta = odd_field(grid, (1, 1), {(0,): A})
    with pytest.raises(ParityError, match="theta must preserve grading"):
        SuperConnection(grid, (1, 1), theta, SuperConnection.trivial(grid, (1, 1)).L)


def test_L_must_be_odd_zero_form():
    grid = TorusGrid((8, 8))
    diag = np.zeros(grid.shape + (2, 2), dtype=complex)
    diag[..., 0, 0] = 1.0
    base = SuperConnection.trivial(grid, (1, 1))
    with pytest.raises(ParityError, match="odd endomorphism"):
        SuperConnection(grid, (1, 1), base.theta, odd_field(grid, (1, 1), {(): diag}))
    off = np.zeros(grid.shape + (2, 2), dtype=complex)
    off[..., 0, 1] = 1.0
    with pytest.raises(ValueError, match="0-form"):
        SuperConnection(grid, (1, 1), base.theta, odd_field(grid, (1, 1), {(0,): off}))


def test_morphism_metrics_validated():
    with pytest.raises(ValueError):
        Morphism(np.ones((1, 1)), metric0=np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        Morphism(np.ones((1, 1)), metric0=np.array([[-1.0]]))


def test_adjoint_is_metric_adjoint():
    rng = np.random.default_rng(0)
    G0, G1 = samples.random_metric(rng, 3), samples.random_metric(rng, 2)
    u = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    ustar = Morphism(u, G0, G1).adjoint()
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    w = rng.normal(size=2) + 1j * rng.normal(size=2)
    # <u v, w>_G1 == <v, u* w>_G0
    assert np.vdot(w, G1 @ (u @ v)) == pytest.approx(np.vdot(ustar @ w, G0 @ v))


def test_L_is_odd_and_L_squared_is_block_negative():
    grid = TorusGrid((8,))
    L = build_L_from_morphism(Morphism(np.array([[2.0 + 1j]])), grid)
    assert L.parity == Parity.ODD
    Lm = L.component(())[0]
    np.testing.assert_allclose(Lm @ Lm, -5.0 * np.eye(2))


def test_degree_zero_is_rank_difference_for_all_t():
    # str exp(-t^2 [[u*u, 0], [0, u u*]]) = r - s since u*u and u u* share nonzero spectra
    rng = np.random.default_rng(1)
    grid = TorusGrid((8, 8))
    for ranks in [(2, 1), (1, 3), (2, 2)]:
        m = samples.random_morphism(rng, grid, ranks, "generic", metrics=True)
        c = SuperConnection(grid, ranks, SuperConnection.trivial(grid, ranks).theta, build_L_from_morphism(m, grid))
        for t in (0.0, 0.7, 1.9):
            ch = chern_character_form(c.with_t(t))
            np.testing.assert_allclose(ch.scalar_component(()), ranks[0] - ranks[1], atol=1e-10)


def test_degree_two_normalization_for_line_bundle():
    # rank (1|0), L = 0: ch_1 = (i / 2 pi) F with F = d theta
    grid = TorusGrid((16, 16))
    x, y = grid.coords()
    a = 0.3 * np.sin(2 * np.pi * (x + 2 * y)) + 0 * x
    theta = MatrixFormField(grid, (1, 0), {(1,): (1j * a)[..., None, None]}, Parity.ODD)
    c = SuperConnection(grid, (1, 0), theta, SuperConnection.trivial(grid, (1, 0)).L)
    ch = chern_character_form(c)
    dadx = 0.3 * 2 * np.pi * np.cos(2 * np.pi * (x + 2 * y))
    np.testing.assert_allclose(ch.scalar_component((0, 1)), (1j / (2 * np.pi)) * 1j * dadx, atol=1e-12)


def test_curvature_of_constant_L_is_t_squared_L_squared():
    grid = TorusGrid((8, 8))
    m = Morphism(np.array([[0.5, -1j]]))
    L = build_L_from_morphism(m, grid)
    c = SuperConnection(grid, (2, 1), SuperConnection.trivial(grid, (2, 1)).theta, L, 1.5)
    F = curvature(c)
    Lm = L.component(())
    np.testing.assert_allclose(F.component(()), 2.25 * Lm @ Lm, atol=1e-14)
    assert norm(F.restrict_degree([1, 2])) == 0.0


@pytest.mark.parametrize(
    "seed,theta_kind,morphism_kind,shape",
    [
        (20, "curved", "constant", (8, 8, 8, 8)),
        (21, "constant-curved", "isometric", (8, 8, 8, 8)),
        (22, "flat", "isometric", (8, 8, 8)),
        (23, "curved", "constant", (8, 8, 8)),
    ],
)
def test_closed_in_polynomial_regime(seed, theta_kind, morphism_kind, shape):
    rng = np.random.default_rng(seed)
    c = samples.random_superconnection(rng, TorusGrid(shape), (2, 1), theta_kind, morphism_kind)
    assert check_closed(c) < 1e-10


def test_generic_morphism_closedness_converges_spectrally():
    residuals = []
    for npts in (16, 24, 32):
        rng = np.random.default_rng(11)
        grid = TorusGrid((npts,) * 3)
        c = samples.random_superconnection(rng, grid, (1, 1), "curved", "generic", t=1.0, kmax=1)
        residuals.append(check_closed(c))
    assert residuals[0] > residuals[1] > residuals[2]
    assert residuals[2] < 1e-2 * residuals[0]


def test_family_check_on_flat_pair():
    rng = np.random.default_rng(2)
    grid = TorusGrid((16, 16))
    c = samples.random_superconnection(rng, grid, (2, 1), "flat", "constant")
    assert c.is_flat_pair()
    rep = family_connection_check(c, [0.0, 0.5, 1.0, 2.0])
    assert rep.max_deviation < 1e-10
    assert rep.pairings[0][()] == 1.0
    assert abs(rep.pairings[2][(0, 1)]) < 1e-10


def test_pairings_cover_even_subtori():
    grid = TorusGrid((8, 8, 8, 8))
    p = class_pairing(SuperConnection.trivial(grid, (1, 1)))
    assert sorted(p, key=lambda I: (len(I), I))[:2] == [(), (0, 1)]
    assert len(p) == 1 + 6 + 1


def test_holonomy_of_constant_connection_is_matrix_exponential():
    rng = np.random.default_rng(3)
    grid = TorusGrid((8, 8, 8))
    ranks = (2, 2)
    theta = samples.constant_commuting_theta(rng, grid, ranks)
    c = SuperConnection(grid, ranks, theta, SuperConnection.trivial(grid, ranks).L)
    for axis in range(3):
        H0, H1 = holonomy_of_flat(c, axis)
        T = theta.component((axis,))[0, 0, 0]
        np.testing.assert_allclose(H0, expm(-T[:2, :2]), atol=1e-10)
        np.testing.assert_allclose(H1, expm(-T[2:, 2:]), atol=1e-10)
    rep = holonomy_rep(c)
    assert isinstance(rep, HolonomyRep) and rep.n == 3


def test_transgression_matches_holonomy_for_nonconstant_flat_connection():
    rng = np.random.default_rng(4)
    grid = TorusGrid((16, 16, 16))
    theta = samples.flat_theta(rng, grid, (2, 1), kmax=2)
    c = SuperConnection(grid, (2, 1), theta, SuperConnection.trivial(grid, (2, 1)).L)
    for axis in range(3):
        tr = transgress_c1(c, axis, offset=(3, 5, 7))
        hol = holonomy_of_flat(c, axis, offset=(3, 5, 7))
        for k in (0, 1):
            assert distance_mod_z(tr[k], c1_from_holonomy(hol[k])) < 1e-8


def test_holonomy_needs_flat_connection():
    rng = np.random.default_rng(5)
    grid = TorusGrid((8, 8))
    c = samples.random_superconnection(rng, grid, (1, 1), "curved", "constant")
    with pytest.raises(FlatnessError):
        holonomy_of_flat(c, 0)
    with pytest.raises(FlatnessError):
        transgress_c1(c, 0)


def test_non_commuting_holonomies_rejected():
    a = np.array([[0, 1], [1, 0]], dtype=complex)
    b = np.diag([1, -1]).astype(complex)
    with pytest.raises(ValueError):
        HolonomyRep(((a, b), (np.eye(0), np.eye(0))))


def test_curvature_norm_reflects_flatness():
    rng = np.random.default_rng(6)
    grid = TorusGrid((8, 8))
    flat = samples.random_superconnection(rng, grid, (2, 1), "flat", "constant")
    # 1x1 blocks always commute, so curvature needs a rank-2 block
    curved = samples.random_superconnection(rng, grid, (2, 1), "constant-curved", "constant")
    assert norm(flat.connection_curvature()) < 1e-12
    assert norm(curved.connection_curvature()) > 1e-3


def test_pairings_do_not_depend_on_subtorus_offset():
    rng = np.random.default_rng(7)
    grid = TorusGrid((8, 8, 8))
    c = samples.random_superconnection(rng, grid, (2, 1), "curved", "constant")
    base = class_pairing(c)
    for offset in [(3, 0, 5), (7, 2, 1)]:
        moved = class_pairing(c, offset=offset)
        for I in base:
            if I:
                assert abs(moved[I] - base[I]) < 1e-8


def test_iL_hermitian_for_metric():
    rng = np.random.default_rng(8)
    grid = TorusGrid((8, 8))
    m = samples.random_morphism(rng, grid, (2, 3), "generic", metrics=True)
    L = build_L_from_morphism(m, grid).component(())
    G = np.zeros((5, 5), dtype=complex)
    G[:2, :2], G[2:, 2:] = m.metric0, m.metric1
    GiL = G @ (1j * L)
    assert np.max(np.abs(GiL - np.conj(np.swapaxes(GiL, -1, -2)))) < 1e-12


def test_curved_family_is_t_independent():
    rng = np.random.default_rng(9)
    grid = TorusGrid((8, 8, 8, 8))
    c = samples.random_superconnection(rng, grid, (2, 1), "constant-curved", "isometric")
    assert not c.is_flat_pair()
    rep = family_connection_check(c, [0.0, 1.0])
    assert rep.max_deviation < 1e-6


def test_bianchi_identity_and_supertrace_derivative():
    from superchern.formcalc import ext_deriv, supercommutator, supertrace_form, wedge

    rng = np.random.default_rng(10)
    grid = TorusGrid((8, 8, 8))
    c = samples.random_superconnection(rng, grid, (2, 1), "curved", "constant", t=0.8)
    A = c.theta + c.L.scale(c.t)
    F = curvature(c)
    assert norm(ext_deriv(F) + supercommutator(A, F)) < 1e-10
    F2 = wedge(F, F)
    direct = ext_deriv(supertrace_form(F2))
    via_bracket = supertrace_form(ext_deriv(F2) + supercommutator(A, F2))
    assert norm(direct - via_bracket) < 1e-10


def test_class_level_c1_matches_transgression():
    from superchern.charclasses import FlatBundleClassData, cs_classes_of_flat

    rng = np.random.default_rng(11)
    grid = TorusGrid((8, 8, 8))
    ranks = (2, 2)
    c = SuperConnection(grid, ranks, samples.constant_commuting_theta(rng, grid, ranks), SuperConnection.trivial(grid, ranks).L)
    rep = holonomy_rep(c)
    for block in (0, 1):
        b = FlatBundleClassData.from_holonomy(rep, block)
        c1 = cs_classes_of_flat(b)[1]
        # eigenvalues are reproduced by exp(2 pi i alpha)
        for k, h in enumerate(b.holonomy):
            got = np.sort_complex(np.exp(2j * np.pi * b.alpha[:, k]))
            want = np.sort_complex(np.linalg.eigvals(h))
            assert np.max(np.abs(got - want)) < 1e-9
        for axis in range(3):
            assert distance_mod_z(c1.coefficient((axis,)), transgress_c1(c, axis)[block]) < 1e-8
