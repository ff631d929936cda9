"""Stencil construction, derivative application and order probing."""

from fractions import Fraction
import math

import numpy as np
import pytest

from bsde_multistep.stencil import (
    StencilParams,
    approximate_derivative,
    make_stencil,
    truncation_order_probe,
)

from oracles import moment_system_weights


def random_offset_sets(count, rng, max_offset=30, max_k=8):
    out = []
    while len(out) < count:
        k = int(rng.integers(1, max_k + 1))
        offsets = sorted(rng.choice(np.arange(1, max_offset + 1), size=k, replace=False))
        out.append(tuple(int(a) for a in offsets))
    return out


class TestMakeStencil:
    @pytest.mark.parametrize(
        "offsets, expected",
        [
            ((1,), (Fraction(-1), Fraction(1))),
            ((1, 2), (Fraction(-3, 2), Fraction(2), Fraction(-1, 2))),
            ((1, 4), (Fraction(-5, 4), Fraction(4, 3), Fraction(-1, 12))),
            ((1, 4, 9), (Fraction(-49, 36), Fraction(3, 2), Fraction(-3, 20), Fraction(1, 90))),
        ],
    )
    def test_known_weights(self, offsets, expected):
        stencil = make_stencil(offsets)
        assert stencil.weights_exact == expected
        assert moment_system_weights(offsets) == list(expected)

    @pytest.mark.parametrize(
        "offsets, expected",
        [
            ((1,), (-1.0, 1.0)),
            ((1, 2), (-1.5, 2.0, -0.5)),
            ((1, 2, 3, 4), (-25 / 12, 4.0, -3.0, 4 / 3, -0.25)),
        ],
    )
    def test_equidistant_matches_classical_one_sided_weights(self, offsets, expected):
        stencil = make_stencil(offsets)
        np.testing.assert_allclose(stencil.weights, expected, rtol=1e-14)
        oracle = [float(w) for w in moment_system_weights(offsets)]
        np.testing.assert_allclose(stencil.weights, oracle, rtol=1e-14)

    @pytest.mark.parametrize(
        "offsets",
        [(), (0,), (-1,), (2, 1), (1, 1), (1, 2, 2), (0, 1, 2)],
    )
    def test_rejects_invalid_offsets(self, offsets):
        with pytest.raises(ValueError):
            make_stencil(offsets)

    def test_rejects_non_integer_offsets(self):
        with pytest.raises(ValueError):
            make_stencil((1.5, 2.5))
        with pytest.raises(ValueError):
            make_stencil((True, 2))

    def test_rejects_offsets_beyond_cap(self):
        with pytest.raises(ValueError):
            make_stencil((1, 65))
        make_stencil((1, 65), max_offset=70)  # cap is configurable

    def test_weights_are_read_only(self):
        stencil = make_stencil((1, 2))
        with pytest.raises(ValueError):
            stencil.weights[0] = 0.0


class TestWeightInvariants:
    def collect_stencils(self):
        sets = [tuple(range(1, k + 1)) for k in range(1, 9)]
        sets += [tuple(i * i for i in range(1, k + 1)) for k in range(1, 6)]
        rng = np.random.default_rng(1234)
        sets += random_offset_sets(50, rng)
        return sets

    def test_exact_identities(self):
        for offsets in self.collect_stencils():
            stencil = make_stencil(offsets)
            w = stencil.weights_exact
            assert abs(float(sum(w))) <= 1e-12
            assert abs(float(w[0] + sum(Fraction(1, a) for a in offsets))) <= 1e-12
            first_moment = sum(wi * a for wi, a in zip(w[1:], offsets))
            assert abs(float(first_moment - 1)) <= 1e-12
            k = len(offsets)
            scale = max(abs(float(wi)) for wi in w)
            for p in range(2, k + 1):
                moment = sum(wi * Fraction(a) ** p for wi, a in zip(w[1:], offsets))
                assert abs(float(moment)) <= 1e-10 * max(1.0, scale * offsets[-1] ** p)

    def test_float_view_matches_exact(self):
        for offsets in self.collect_stencils():
            stencil = make_stencil(offsets)
            for wf, we in zip(stencil.weights, stencil.weights_exact):
                assert wf == pytest.approx(float(we), rel=1e-15, abs=0.0)

    def test_matches_moment_system_oracle(self):
        for offsets in self.collect_stencils():
            stencil = make_stencil(offsets)
            oracle = moment_system_weights(offsets)
            assert stencil.weights_exact == tuple(oracle)


class TestApproximateDerivative:
    def test_exact_on_identity(self):
        stencil = make_stencil((1, 2))
        assert approximate_derivative(stencil, [0.0, 0.1, 0.2], 0.1) == pytest.approx(1.0, abs=1e-14)

    def test_exact_on_square_at_origin(self):
        stencil = make_stencil((1, 2))
        assert approximate_derivative(stencil, [0.0, 0.01, 0.04], 0.1) == pytest.approx(0.0, abs=1e-14)

    def test_exponential_value(self):
        stencil = make_stencil((1, 2))
        values = [1.0, math.exp(0.1), math.exp(0.2)]
        # direct evaluation of the weighted sum:
        # (-1.5 + 2 e^0.1 - 0.5 e^0.2) / 0.1 = 0.99640...
        assert approximate_derivative(stencil, values, 0.1) == pytest.approx(0.99641, abs=1e-5)

    def test_length_mismatch(self):
        stencil = make_stencil((1, 2))
        with pytest.raises(ValueError):
            approximate_derivative(stencil, [0.0, 1.0], 0.1)

    def test_nonpositive_h(self):
        stencil = make_stencil((1,))
        with pytest.raises(ValueError):
            approximate_derivative(stencil, [0.0, 1.0], 0.0)

    @pytest.mark.parametrize("offsets", [(1,), (1, 2), (1, 4), (1, 2, 3), (1, 4, 9)])
    def test_exact_on_polynomials_up_to_k(self, offsets):
        stencil = make_stencil(offsets)
        rng = np.random.default_rng(99)
        t0 = 0.3
        for h in (1.0, 0.1, 0.01):
            for _ in range(5):
                coeffs = rng.uniform(-1.0, 1.0, stencil.k + 1)
                poly = np.polynomial.Polynomial(coeffs)
                values = [poly(t0 + a * h) for a in (0, *offsets)]
                exact = poly.deriv()(t0)
                got = approximate_derivative(stencil, values, h)
                assert got == pytest.approx(exact, rel=1e-12, abs=1e-12)

    def test_linear_in_values(self):
        stencil = make_stencil((1, 4, 9))
        rng = np.random.default_rng(7)
        u = rng.normal(size=stencil.k + 1)
        v = rng.normal(size=stencil.k + 1)
        alpha, beta = 0.7, -2.3
        combined = approximate_derivative(stencil, alpha * u + beta * v, 0.25)
        split = alpha * approximate_derivative(stencil, u, 0.25) + beta * approximate_derivative(
            stencil, v, 0.25
        )
        assert combined == pytest.approx(split, rel=1e-13, abs=1e-13)


class TestTruncationOrderProbe:
    H_LIST = tuple(0.1 * 0.5**i for i in range(6))

    def test_forward_difference_is_first_order(self):
        probe = truncation_order_probe(make_stencil((1,)), math.exp, 0.0, self.H_LIST)
        assert not probe.exact
        assert probe.slope == pytest.approx(1.0, abs=0.2)

    def test_two_point_stencil_is_second_order(self):
        probe = truncation_order_probe(
            make_stencil((1, 2)), math.exp, 0.0, self.H_LIST, derivative=1.0
        )
        assert not probe.exact
        assert probe.slope == pytest.approx(2.0, abs=0.2)

    def test_quadratic_offsets_third_order(self):
        probe = truncation_order_probe(make_stencil((1, 4, 9)), math.exp, 0.0, self.H_LIST)
        assert probe.slope == pytest.approx(3.0, abs=0.25)

    def test_polynomial_reports_exact(self):
        for t0 in (0.0, 0.37, -1.2):
            probe = truncation_order_probe(
                make_stencil((1, 2)), lambda t: t * t, t0, self.H_LIST
            )
            assert probe.exact
            assert probe.slope is None

    def test_requires_three_decreasing_steps(self):
        stencil = make_stencil((1,))
        with pytest.raises(ValueError):
            truncation_order_probe(stencil, math.exp, 0.0, (0.1, 0.05))
        with pytest.raises(ValueError):
            truncation_order_probe(stencil, math.exp, 0.0, (0.1, 0.1, 0.05))
        with pytest.raises(ValueError):
            truncation_order_probe(stencil, math.exp, 0.0, (0.05, 0.1, 0.2))


class TestStencilParams:
    def test_properties(self):
        params = StencilParams((1, 4, 9))
        assert params.k == 3
        assert params.max_offset == 9

    def test_amplification_measure(self):
        stencil = make_stencil((1, 2, 3))
        # (3 + 3/2 + 1/3) / (11/6)
        assert stencil.weight_amplification == pytest.approx(29 / 11, rel=1e-12)
