"""Convergence ratio, characteristic polynomial, roots and verdicts."""

from fractions import Fraction
import math

import numpy as np
import pytest

from bsde_multistep.diagnostics import (
    FAMILIES,
    RootFindingError,
    TABLE_CSV_HEADER,
    characteristic_polynomial,
    convergence_ratio,
    diagnose,
    diagnostics_table,
    lag_coefficients,
    polynomial_roots,
    render_table_csv,
    render_table_text,
)
from bsde_multistep.stencil import make_stencil


class TestLagCoefficients:
    def test_one_step(self):
        lags = lag_coefficients(make_stencil((1,)))
        assert lags.per_lag_exact == (Fraction(-1), Fraction(1))
        assert lags.tail_sums_exact == (Fraction(1),)

    def test_two_step(self):
        lags = lag_coefficients(make_stencil((1, 2)))
        assert lags.per_lag_exact == (Fraction(-3, 2), Fraction(2), Fraction(-1, 2))
        assert lags.tail_sums_exact == (Fraction(3, 2), Fraction(-1, 2))

    def test_gapped_offsets_spread_with_zeros(self):
        lags = lag_coefficients(make_stencil((1, 4)))
        assert lags.per_lag_exact == (
            Fraction(-5, 4),
            Fraction(4, 3),
            Fraction(0),
            Fraction(0),
            Fraction(-1, 12),
        )
        assert lags.tail_sums_exact == (
            Fraction(5, 4),
            Fraction(-1, 12),
            Fraction(-1, 12),
            Fraction(-1, 12),
        )

    @pytest.mark.parametrize(
        "offsets", [(1,), (1, 2), (1, 4), (1, 2, 3), (1, 4, 9), (2, 5, 11), (1, 2, 3, 4)]
    )
    def test_structural_identities(self, offsets):
        stencil = make_stencil(offsets)
        lags = lag_coefficients(stencil)
        assert sum(lags.per_lag_exact) == 0
        assert lags.tail_sums_exact[0] == -stencil.weights_exact[0]
        assert lags.tail_sums_exact[-1] == stencil.weights_exact[-1]
        assert abs(float(sum(lags.per_lag_exact))) <= 1e-12


class TestConvergenceRatio:
    @pytest.mark.parametrize(
        "offsets, expected",
        [
            ((1,), Fraction(0)),
            ((1, 2), Fraction(1, 3)),
            ((1, 2, 3), Fraction(9, 11)),
            ((1, 2, 3, 4), Fraction(39, 25)),
            ((1, 4), Fraction(1, 5)),
        ],
    )
    def test_known_ratios(self, offsets, expected):
        ratio = convergence_ratio(lag_coefficients(make_stencil(offsets)))
        assert ratio == pytest.approx(float(expected), rel=1e-14, abs=1e-15)


class TestCharacteristicPolynomial:
    def test_one_step(self):
        poly = characteristic_polynomial(make_stencil((1,)))
        np.testing.assert_allclose(poly.coeffs, [-1.0, 1.0], atol=0)
        assert poly.degree == 1

    def test_two_step(self):
        poly = characteristic_polynomial(make_stencil((1, 2)))
        np.testing.assert_allclose(poly.coeffs, [-1.5, 2.0, -0.5], atol=0)

    def test_gapped(self):
        poly = characteristic_polynomial(make_stencil((1, 4)))
        np.testing.assert_allclose(poly.coeffs, [-1.25, 4.0 / 3.0, 0.0, 0.0, -1.0 / 12.0], atol=0)
        assert poly.degree == 4

    @pytest.mark.parametrize("offsets", [(1, 2), (1, 4, 9), (1, 2, 3, 4), (2, 7)])
    def test_one_is_always_a_root(self, offsets):
        poly = characteristic_polynomial(make_stencil(offsets))
        assert abs(poly(1.0)) <= 1e-10
        assert sum(poly.coeffs_exact) == 0


class TestPolynomialRoots:
    def test_two_step_roots(self):
        poly = characteristic_polynomial(make_stencil((1, 2)))
        roots = polynomial_roots(poly)
        np.testing.assert_allclose(sorted(r.real for r in roots), [1 / 3, 1.0], rtol=1e-10)
        assert np.all(np.abs(roots.imag) < 1e-12)

    def test_three_step_complex_pair(self):
        # after removing the unit root: 11 x^2 - 7 x + 2 = 0 (scaled), so the
        # remaining pair has modulus sqrt(2/11)
        poly = characteristic_polynomial(make_stencil((1, 2, 3)))
        roots = polynomial_roots(poly)
        mags = sorted(abs(r) for r in roots)
        assert mags[-1] == pytest.approx(1.0, abs=1e-12)
        assert mags[0] == pytest.approx(math.sqrt(2 / 11), rel=1e-10)
        assert mags[1] == pytest.approx(math.sqrt(2 / 11), rel=1e-10)

    def test_gapped_max_modulus(self):
        poly = characteristic_polynomial(make_stencil((1, 4)))
        roots = polynomial_roots(poly)
        nonunit = [abs(r) for r in roots if abs(r - 1.0) > 1e-9]
        assert max(nonunit) == pytest.approx(0.486038, abs=1e-5)

    @pytest.mark.parametrize("family", ["equidistant", "quadratic"])
    @pytest.mark.parametrize("k", range(1, 8))
    def test_residual_bound_and_vieta(self, family, k):
        stencil = make_stencil(FAMILIES[family](k))
        poly = characteristic_polynomial(stencil)
        roots = polynomial_roots(poly)
        assert len(roots) == poly.degree
        scale = float(np.abs(poly.coeffs).max())
        for r in roots:
            assert abs(poly(r)) <= 1e-9 * scale
        # product of all roots = (-1)^degree * constant / leading
        product = complex(np.prod(roots))
        expected = (-1.0) ** poly.degree * float(
            poly.coeffs_exact[-1] / poly.coeffs_exact[0]
        )
        assert product.imag == pytest.approx(0.0, abs=1e-8)
        assert product.real == pytest.approx(expected, rel=1e-8, abs=1e-8)


class TestDiagnose:
    def test_two_step(self):
        d = diagnose(make_stencil((1, 2)))
        assert d.ratio == pytest.approx(1 / 3, rel=1e-14)
        assert d.max_nonunit_root_mag == pytest.approx(1 / 3, rel=1e-10)
        assert d.convergence_condition_ok and d.root_condition_ok

    def test_equidistant_four_fails_convergence(self):
        d = diagnose(make_stencil((1, 2, 3, 4)))
        assert d.ratio == pytest.approx(1.56, abs=1e-12)
        assert not d.convergence_condition_ok
        assert d.root_condition_ok

    def test_equidistant_root_condition_breaks_at_seven(self):
        verdicts = {}
        for k in range(1, 8):
            d = diagnose(make_stencil(tuple(range(1, k + 1))))
            verdicts[k] = (d.root_condition_ok, d.max_nonunit_root_mag)
        for k in range(1, 7):
            ok, mag = verdicts[k]
            assert ok, f"k={k} should satisfy the root condition"
            if k >= 2:
                assert mag < 1.0
        ok7, mag7 = verdicts[7]
        assert not ok7
        assert mag7 > 1.0

    def test_quadratic_root_condition_holds_through_seven(self):
        for k in range(1, 8):
            d = diagnose(make_stencil(tuple(i * i for i in range(1, k + 1))))
            assert d.root_condition_ok, f"quadratic k={k}"

    def test_one_step_ratio_is_zero(self):
        d = diagnose(make_stencil((1,)))
        assert d.ratio == 0.0
        assert d.convergence_condition_ok
        assert d.max_nonunit_root_mag == 0.0


class TestDiagnosticsTable:
    def test_equidistant_ratios(self):
        rows = diagnostics_table(["equidistant"], range(2, 5))
        ratios = [row.diagnostics.ratio for row in rows]
        np.testing.assert_allclose(ratios, [1 / 3, 9 / 11, 39 / 25], rtol=1e-13)

    def test_quadratic_k2_root(self):
        rows = diagnostics_table(["quadratic"], [2])
        assert rows[0].diagnostics.max_nonunit_root_mag == pytest.approx(0.49, abs=0.005)

    def test_matches_diagnose_exactly(self):
        rows = diagnostics_table(["equidistant"], [2])
        d = diagnose(make_stencil((1, 2)))
        assert rows[0].diagnostics.ratio == d.ratio
        assert rows[0].diagnostics.max_nonunit_root_mag == d.max_nonunit_root_mag

    def test_csv_rendering(self):
        rows = diagnostics_table(["equidistant", "quadratic"], [2, 3])
        text = render_table_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == TABLE_CSV_HEADER
        assert len(lines) == 5
        first = lines[1].split(",")
        assert first[0] == "equidistant"
        assert first[1] == "2"
        assert first[2] == "1 2"
        assert float(first[3]) == pytest.approx(1 / 3, rel=1e-15)
        assert first[5] == "true" and first[6] == "true"

    def test_empty_k_range(self):
        rows = diagnostics_table(["equidistant"], range(3, 2))
        assert rows == []
        assert render_table_csv(rows) == TABLE_CSV_HEADER.replace(",", ",").strip() + "\n"

    def test_text_rendering(self):
        rows = diagnostics_table(["quadratic"], [2])
        text = render_table_text(rows)
        assert "quadratic" in text and "1,4" in text and "ok" in text

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            diagnostics_table(["cubic"], [2])

    def test_callable_family(self):
        rows = diagnostics_table([lambda k: tuple(2**i for i in range(k))], [3])
        assert rows[0].offsets == (1, 2, 4)
