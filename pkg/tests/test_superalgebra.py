import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superchern.superalgebra import (
    DimensionError,
    GrassmannElement,
    Parity,
    ParityError,
    QComplex,
    SuperMatrix,
    grassmann_mul,
    is_gl_rs,
    parse,
    render,
    supercommutator,
    supertrace,
)

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=6)
qcomplex = st.builds(QComplex, fractions, fractions)


@st.composite
def grassmann(draw, q=3, parity=None):
    coeffs = {}
    for d in range(q + 1):
        if parity is not None and d % 2 != parity:
            continue
        for I in itertools.combinations(range(1, q + 1), d):
            if draw(st.booleans()):
                coeffs[I] = draw(qcomplex)
    return GrassmannElement(q, coeffs)


@st.composite
def supermatrix(draw, q=2, r=1, s=1, parity=0):
    m = r + s
    rows = [
        [draw(grassmann(q, (parity + (i >= r) + (j >= r)) % 2)) for j in range(m)]
        for i in range(m)
    ]
    return SuperMatrix((r, s), (r, s), rows)


def test_generators_anticommute_and_square_to_zero():
    t1, t2 = GrassmannElement.generator(1, 2), GrassmannElement.generator(2, 2)
    assert t1 * t2 == -(t2 * t1)
    assert (t1 * t1).is_zero()
    assert t1 * t2 == GrassmannElement(2, {(1, 2): 1})


def test_multi_index_normalization():
    assert GrassmannElement(3, {(3, 1, 2): 1}) == GrassmannElement(3, {(1, 2, 3): 1})
    assert GrassmannElement(3, {(2, 1): 1}) == GrassmannElement(3, {(1, 2): -1})
    assert GrassmannElement(3, {(1, 1): 5}).is_zero()


def test_generator_bounds():
    with pytest.raises(DimensionError):
        GrassmannElement(9)
    with pytest.raises(DimensionError):
        GrassmannElement(2, {(3,): 1})


def test_parity_and_parts():
    a = GrassmannElement(3, {(): 2, (1,): 1, (1, 2): 3})
    assert a.parity() is None
    assert a.part(Parity.EVEN).parity() == Parity.EVEN
    assert a.part(Parity.ODD) == GrassmannElement(3, {(1,): 1})
    assert a.body() == QComplex.of(2)
    assert a.soul() == a - 2


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_supercommutativity(data):
    pa, pb = data.draw(st.integers(0, 1)), data.draw(st.integers(0, 1))
    a, b = data.draw(grassmann(3, pa)), data.draw(grassmann(3, pb))
    assert a * b == b * a * (-1) ** (pa * pb)


@settings(max_examples=40, deadline=None)
@given(grassmann(3), grassmann(3), grassmann(3))
def test_associative_and_distributive(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@settings(max_examples=40, deadline=None)
@given(grassmann(3), qcomplex.filter(bool))
def test_inverse_when_body_invertible(a, body):
    x = a.soul() + GrassmannElement.scalar(body, 3)
    assert x * x.inverse() == GrassmannElement.scalar(1, 3)


def test_inverse_of_nilpotent_fails():
    with pytest.raises(ZeroDivisionError):
        GrassmannElement.generator(1, 2).inverse()


@settings(max_examples=40, deadline=None)
@given(grassmann(3))
def test_render_parse_roundtrip_real(a):
    real = GrassmannElement(3, {I: QComplex(c.re, 0) for I, c in a.coefficients.items()})
    assert parse(render(real), 3) == real


def test_render_examples():
    assert render(GrassmannElement(2, {(): 3, (1, 2): 2})) == "3 + 2*t1^t2"
    assert parse("3 + 2*t1^t2", 2) == GrassmannElement(2, {(): 3, (1, 2): 2})
    assert render(GrassmannElement.zero(1)) == "0"


def test_supertrace_sign_convention():
    X = SuperMatrix.from_scalars(1, 2, [[5, 0, 0], [0, 2, 0], [0, 0, 1]])
    assert supertrace(X) == GrassmannElement.scalar(2, 0)
    assert supertrace(SuperMatrix.identity(2, 3)) == GrassmannElement.scalar(-1, 0)


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_supertrace_graded_cyclicity(data):
    r, s = data.draw(st.integers(0, 2)), data.draw(st.integers(1, 2))
    px, py = data.draw(st.integers(0, 1)), data.draw(st.integers(0, 1))
    X = data.draw(supermatrix(2, r, s, px))
    Y = data.draw(supermatrix(2, r, s, py))
    assert supertrace(X @ Y) == supertrace(Y @ X) * (-1) ** (px * py)
    assert supertrace(supercommutator(X, Y)).is_zero()


def test_supermatrix_parity_detection():
    q = 2
    t1 = GrassmannElement.generator(1, q)
    one = GrassmannElement.scalar(1, q)
    zero = GrassmannElement.zero(q)
    even = SuperMatrix((1, 1), (1, 1), [[one, t1], [t1, one]])
    odd = SuperMatrix((1, 1), (1, 1), [[t1, one], [one, t1]])
    assert even.parity() == Parity.EVEN
    assert odd.parity() == Parity.ODD
    assert SuperMatrix((1, 1), (1, 1), [[one, one], [zero, one]]).parity() is None
    with pytest.raises(ParityError):
        SuperMatrix((1, 1), (1, 1), [[one, one], [zero, one]], validate_even=True)


def test_gl_rs_membership():
    q = 2
    t1, t2 = GrassmannElement.generator(1, q), GrassmannElement.generator(2, q)
    one = GrassmannElement.scalar(1, q)
    X = SuperMatrix((1, 1), (1, 1), [[one + t1 * t2, t1], [t2, one * 3]])
    assert is_gl_rs(X)
    Xinv = X.inverse()
    assert X @ Xinv == SuperMatrix.identity(1, 1, q)
    # body of the odd-odd block is singular
    Y = SuperMatrix((1, 1), (1, 1), [[one, t1], [t2, t1 * t2]])
    assert not is_gl_rs(Y)
    # body invertible as a whole, but not blockwise: the super sense fails
    Z = SuperMatrix.from_scalars(1, 1, [[0, 1], [1, 0]])
    assert not is_gl_rs(Z)


def test_grassmann_mul_needs_same_algebra():
    with pytest.raises(DimensionError):
        grassmann_mul(GrassmannElement.generator(1, 1), GrassmannElement.generator(1, 2))


def test_qcomplex_exact():
    z = QComplex(Fraction(1, 3), Fraction(-2, 5))
    assert z * z.inverse() == QComplex.of(1)
    assert complex(z) == pytest.approx(1 / 3 - 0.4j)
