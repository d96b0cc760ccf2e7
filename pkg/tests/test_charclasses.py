import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superchern import samples
from superchern.acceptance import geometric_inverse
from superchern.charclasses import (
    CHARACTER,
    FORM,
    CohomologyClass,
    FlatBundleClassData,
    FlatCharacter,
    NonDiagonalizableError,
    TotalClass,
    bockstein,
    bockstein_lift_check,
    character_product,
    cs_classes_of_flat,
    cs_of_morphism,
    cs_product_formula,
    difference_class,
    distance_mod_z,
    line_characters,
    reduce_mod_z,
    ring_mul,
    segre_inverse,
)
from superchern.superconnection import Morphism

coef = st.fractions(min_value=-4, max_value=4, max_denominator=5)


@st.composite
def form_total(draw, n=6):
    terms = [1]
    for k in range(1, n // 2 + 1):
        coeffs = {}
        for I in itertools.combinations(range(n), 2 * k):
            if draw(st.booleans()):
                coeffs[I] = draw(coef)
        terms.append(CohomologyClass(n, coeffs))
    return TotalClass(n, FORM, terms)


def test_reduce_mod_z_edge_cases():
    assert reduce_mod_z(-1e-17) == 0.0
    assert reduce_mod_z(Fraction(-1, 3)) == Fraction(2, 3)
    assert reduce_mod_z(2.25 - 1j) == complex(0.25, -1)
    assert distance_mod_z(0.999999, 0.0) == pytest.approx(1e-6)


def test_cup_product_signs():
    n = 3
    e0, e1 = CohomologyClass.generator(n, 0), CohomologyClass.generator(n, 1)
    assert ring_mul(e0, e1) == CohomologyClass(n, {(0, 1): 1})
    assert ring_mul(e1, e0) == CohomologyClass(n, {(0, 1): -1})
    assert ring_mul(e0, e0).is_zero()


@settings(max_examples=30, deadline=None)
@given(form_total())
def test_segre_inverts(c):
    s = segre_inverse(c)
    assert c.product(s).is_one(0)
    assert s.product(c).is_one(0)
    assert segre_inverse(s) == c
    assert s == geometric_inverse(c)


@settings(max_examples=30, deadline=None)
@given(form_total(4))
def test_segre_low_degrees(c):
    s = segre_inverse(c)
    assert s[1] == -c[1]
    assert s[2] == ring_mul(c[1], c[1]) - c[2]


@settings(max_examples=20, deadline=None)
@given(form_total(), form_total())
def test_difference_class_cancels(a, b):
    assert difference_class(a.product(b), b) == a
    assert difference_class(a, a).is_one(0)
    assert segre_inverse(a.product(b)) == segre_inverse(a).product(segre_inverse(b))


def test_total_class_validates_degrees():
    n = 4
    with pytest.raises(ValueError):
        TotalClass(n, FORM, [1, CohomologyClass.generator(n, 0)])
    with pytest.raises(ValueError):
        TotalClass(n, FORM, [2])


def test_flat_character_reduces_and_checks_degree():
    x = FlatCharacter(1, CohomologyClass(2, {(0,): 1.25, (1,): -0.5}))
    assert x.coefficient((0,)) == pytest.approx(0.25)
    assert x.coefficient((1,)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        FlatCharacter(2, CohomologyClass(2, {(0, 1): 1}))
    assert (x - x).is_zero()


def test_character_product_is_cup_with_integral_class():
    n = 4
    x = FlatCharacter(1, CohomologyClass(n, {(0,): 0.3}))
    y = FlatCharacter(1, CohomologyClass(n, {(1,): 0.7}))
    # flat y has zero integral class on the torus
    assert character_product(x, y).is_zero()
    c_y = CohomologyClass(n, {(1, 2): 2})
    prod = character_product(x, y, c_y)
    assert prod.degree == 3
    assert prod.coefficient((0, 1, 2)) == pytest.approx(0.6)
    assert bockstein(prod).is_zero()


def test_bockstein_lift_cases():
    n = 3
    zero = CohomologyClass.zero(n)
    rep = bockstein_lift_check(CohomologyClass(n, {(0, 1): 0}), True)
    assert rep.exists and rep.reason == "lift exists"
    two = CohomologyClass(n, {(0, 1): 2})
    assert bockstein_lift_check(two, True).reason == "requires torsion"
    assert bockstein_lift_check(two, False).reason == "real image nonzero"
    assert bockstein_lift_check(zero, False).exists
    with pytest.raises(ValueError):
        bockstein_lift_check(two, True, degree=4)
    with pytest.raises(ValueError):
        bockstein_lift_check(CohomologyClass(n, {(0, 1): 0.5}), True)
    lifted = bockstein_lift_check(zero, True, degree=2)
    assert lifted.ambiguity == [(0,), (1,), (2,)]
    assert lifted.lift.degree == 1 and lifted.lift.is_zero()


def test_line_bundle_characters_sign():
    a = 0.2
    b = FlatBundleClassData(1, (np.array([[np.exp(2j * math.pi * a)]]),))
    (ell,) = line_characters(b)
    assert distance_mod_z(ell.coefficient((0,)), -a) < 1e-12


def test_flat_classes_of_diagonal_bundle_are_elementary_symmetric():
    rng = np.random.default_rng(0)
    hol = samples.random_diagonal_holonomy(rng, 3, 2)
    b = FlatBundleClassData(2, hol)
    total = cs_classes_of_flat(b)
    assert total.level == CHARACTER and total.N == 2
    # c1 is the sum of line characters; c2 is a product of flat characters, zero on the torus
    alpha = np.array([[np.angle(h[j, j]) / (2 * math.pi) for h in hol] for j in range(2)])
    for k in range(3):
        assert distance_mod_z(total[1].coefficient((k,)), -alpha[:, k].sum()) < 1e-12
    assert total[2].is_zero()


def test_conjugated_holonomy_gives_same_classes():
    rng = np.random.default_rng(1)
    hol = samples.random_diagonal_holonomy(rng, 3, 3)
    P = np.eye(3) + 0.4 * rng.normal(size=(3, 3))
    conj = tuple(P @ h @ np.linalg.inv(P) for h in hol)
    a = cs_classes_of_flat(FlatBundleClassData(3, hol))
    b = cs_classes_of_flat(FlatBundleClassData(3, conj))
    assert a.equal(b, 1e-9)


def test_jordan_block_rejected():
    J = np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex)
    with pytest.raises(NonDiagonalizableError):
        FlatBundleClassData(2, (J, np.eye(2, dtype=complex)))


def test_whitney_product_against_direct_sum():
    rng = np.random.default_rng(2)
    b = FlatBundleClassData(2, samples.random_diagonalizable_holonomy(rng, 3, 2))
    bp = FlatBundleClassData(1, samples.random_diagonal_holonomy(rng, 3, 1))
    lhs = cs_classes_of_flat(b.direct_sum(bp))
    rhs = cs_classes_of_flat(b).product(cs_classes_of_flat(bp))
    assert lhs.equal(rhs)


def test_morphism_classes_product_formula():
    rng = np.random.default_rng(3)
    b0 = FlatBundleClassData(2, samples.random_diagonal_holonomy(rng, 3, 2))
    b1 = FlatBundleClassData(1, samples.random_diagonal_holonomy(rng, 3, 1))
    cu = cs_of_morphism(Morphism(np.ones((1, 2), dtype=complex)), b0, b1)
    want = cs_product_formula(cs_classes_of_flat(b0), cs_classes_of_flat(b1))
    assert cu.equal(want)
    # c1(u) = c1(E0) - c1(E1)
    diff = cs_classes_of_flat(b0)[1] - cs_classes_of_flat(b1)[1]
    assert cu[1].equal_mod_z(diff)
    with pytest.raises(ValueError):
        cs_of_morphism(Morphism(np.ones((2, 2), dtype=complex)), b0, b1)


def test_morphism_between_isomorphic_bundles_is_trivial():
    rng = np.random.default_rng(4)
    b = FlatBundleClassData(2, samples.random_diagonalizable_holonomy(rng, 3, 2))
    assert cs_of_morphism(Morphism(np.eye(2, dtype=complex)), b, b).is_one()
