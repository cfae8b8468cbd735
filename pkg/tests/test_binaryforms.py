import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from k3e.binaryforms import (
    BinaryForm,
    DegreeError,
    P1Point,
    discriminant_form,
    eval_form,
    multiply,
    power,
    roots,
)

cplx = st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False)


def random_form(rng, d):
    return BinaryForm(d, rng.normal(size=d + 1) + 1j * rng.normal(size=d + 1))


class TestP1Point:
    def test_origin_rejected(self):
        with pytest.raises(ValueError):
            P1Point(0, 0)

    def test_projective_equality(self):
        assert P1Point(2, 4) == P1Point(1, 2)
        assert P1Point(0, 3j) == P1Point.infinity()
        assert P1Point(1, 2) != P1Point(1, 2.1)

    def test_parse(self):
        assert P1Point.parse("inf").is_infinity
        assert P1Point.parse("1+2j") == P1Point.affine(1 + 2j)
        assert P1Point.parse("2:1") == P1Point(1, 0.5)

    def test_canonical_has_unit_coordinate(self):
        c = P1Point(3j, 1).canonical()
        assert c.s == 1 and c.chart == "s"
        c = P1Point(0.25, 1).canonical()
        assert c.t == 1 and c.chart == "t"

    def test_chordal_distance(self):
        assert P1Point.affine(0).chordal_distance(P1Point.infinity()) == pytest.approx(1.0)
        assert P1Point.affine(1).chordal_distance(P1Point.affine(-1)) == pytest.approx(1.0)
        a, b = P1Point.affine(0.3), P1Point(2, 5j)
        assert a.chordal_distance(b) == pytest.approx(b.chordal_distance(a))


class TestBinaryForm:
    def test_length_invariant(self):
        with pytest.raises(DegreeError):
            BinaryForm(3, [1, 2])
        z = BinaryForm.zero(5)
        assert z.coeffs.shape == (6,) and z.is_zero()

    def test_coeffs_read_only(self):
        f = BinaryForm(2, [1, 2, 3])
        with pytest.raises(ValueError):
            f.coeffs[0] = 5

    def test_monomial_evaluation(self):
        # coeffs[k] multiplies s^(d-k) t^k
        f = BinaryForm.monomial(5, 2, 3.0)
        assert f(P1Point(2, 3)) == pytest.approx(3 * 2 ** 3 * 3 ** 2)

    def test_affine_chart(self):
        f = BinaryForm(3, [1, -2, 0, 5])
        assert f.eval_affine(2.0) == pytest.approx(1 - 4 + 40)
        # chart t = 1 with coordinate s
        assert f.eval_affine(0.5, chart="t") == pytest.approx(f(P1Point(0.5, 1)))

    def test_json_round_trip_and_order(self):
        f = BinaryForm(2, [1 + 1j, 2, 3])
        obj = f.to_json()
        # lowest power of s first: the first pair is the t^2 coefficient
        assert obj["coeffs"][0] == [3.0, 0.0]
        g = BinaryForm.from_json(obj)
        assert np.array_equal(g.coeffs, f.coeffs)

    def test_json_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            BinaryForm.from_json({"degree": 2, "coeffs": [[1, 0]]})

    def test_arithmetic(self):
        rng = np.random.default_rng(1)
        f, g = random_form(rng, 3), random_form(rng, 4)
        p = P1Point(0.7 - 0.2j, 1.3j)
        assert (f * g)(p) == pytest.approx(f(p) * g(p))
        assert multiply(f, g).degree == 7
        assert power(f, 3)(p) == pytest.approx(f(p) ** 3)
        assert (f - f).is_zero()
        with pytest.raises(DegreeError):
            f + g

    def test_discriminant_degrees(self):
        rng = np.random.default_rng(2)
        delta = discriminant_form(random_form(rng, 8), random_form(rng, 12))
        assert delta.degree == 24
        with pytest.raises(DegreeError):
            discriminant_form(random_form(rng, 4), random_form(rng, 6))

    def test_discriminant_example(self):
        # g2 = 0, g3 = t^12 - s^12
        g3 = BinaryForm(12, [-1] + [0] * 11 + [1])
        delta = discriminant_form(BinaryForm.zero(8), g3)
        expected = -27 * multiply(g3, g3)
        assert delta.allclose(expected)


@settings(max_examples=60, deadline=None)
@given(s=cplx, t=cplx, lam=cplx, seed=st.integers(0, 2 ** 16))
def test_homogeneity(s, t, lam, seed):
    f = random_form(np.random.default_rng(seed), 7)
    lhs = eval_form(f, P1Point(lam * s, lam * t))
    rhs = lam ** 7 * eval_form(f, P1Point(s, t))
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))


class TestRoots:
    def test_roots_of_unity_double(self):
        g3 = BinaryForm(12, [-1] + [0] * 11 + [1])
        delta = discriminant_form(BinaryForm.zero(8), g3)
        r = roots(delta)
        assert len(r) == 12
        assert all(m == 2 for _, m in r)
        for p, _ in r:
            u = p.coordinate("s")
            assert abs(u ** 12 - 1) < 1e-9

    def test_infinity_multiplicity(self):
        # affine degree 2 in a degree-5 form leaves a triple root at infinity
        f = BinaryForm.from_affine(5, [2, -3, 1])  # (t-1)(t-2)
        r = roots(f)
        inf = [m for p, m in r if p.is_infinity]
        assert inf == [3]
        assert sum(m for _, m in r) == 5

    def test_matches_companion_matrix(self):
        rng = np.random.default_rng(7)
        f = random_form(rng, 9)
        ours = sorted((p.coordinate("s") for p, _ in roots(f)), key=lambda z: (z.real, z.imag))
        # oracle: eigenvalues of the companion matrix of the monic affine polynomial
        c = f.coeffs[::-1] / f.coeffs[-1]
        comp = np.zeros((9, 9), dtype=complex)
        comp[1:, :-1] = np.eye(8)
        comp[:, -1] = -c[1:][::-1]
        eig = sorted(np.linalg.eigvals(comp), key=lambda z: (z.real, z.imag))
        assert_allclose(ours, eig, rtol=1e-8, atol=1e-10)

    def test_multiplicities(self):
        lin = BinaryForm(1, [-0.5, 1])
        f = power(lin, 3) * BinaryForm.from_affine(3, [1, 0, 1, 1])
        r = roots(f)
        ms = {round(p.coordinate("s").real, 6): m for p, m in r if abs(p.coordinate("s") - 0.5) < 1e-4}
        assert ms == {0.5: 3}
        assert sum(m for _, m in r) == 6

    def test_zero_form_has_no_roots(self):
        with pytest.raises(ValueError):
            roots(BinaryForm.zero(3))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2 ** 16), d=st.integers(1, 24))
    def test_multiplicity_sum_equals_degree(self, seed, d):
        f = random_form(np.random.default_rng(seed), d)
        r = roots(f)
        assert sum(m for _, m in r) == d
        for p, _ in r:
            assert abs(f(p.canonical())) <= 1e-6 * np.abs(f.coeffs).sum()

    def test_rotation_invariance(self):
        # g(s, t) = f(s, a t): roots of g are those of f divided by a
        rng = np.random.default_rng(3)
        f = random_form(rng, 6)
        a = cmath.exp(0.7j)
        g = BinaryForm(6, f.coeffs * a ** np.arange(7))
        rf = [p.coordinate("s") * a for p, _ in roots(g)]
        rf0 = [p.coordinate("s") for p, _ in roots(f)]
        for z in rf:
            assert min(abs(z - w) for w in rf0) < 1e-9
