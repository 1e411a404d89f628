"""Tests for sfbank/beamdesign.py: Bessel evaluation, ideal patterns, filter design."""
import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from sfbank.beamdesign import (
    PATTERN_PRESETS,
    IdealPattern,
    bessel_jn,
    design_filter,
    design_filters,
    ideal_beampattern,
    resolve_pattern,
    supercardioid_preset,
)
from sfbank.errors import BesselDomainError, DegenerateFrequencyError, InvalidArgumentError
from sfbank.geometry import make_uca, normalized_freq, steering_vector


def response(filt, geom, freq, theta):
    """Realized h^H d(omega, theta)."""
    return complex(np.vdot(filt.weights, steering_vector(geom, freq, theta).entries))


def freq_for(geom, wbar):
    return wbar * geom.sound_speed / (2 * np.pi * geom.radius)


def sympy_jn(n, x):
    return float(sympy.besselj(n, sympy.Float(x, 30)).evalf(30))


# ── bessel_jn ───────────────────────────────────────────────────────────────────

class TestBesselJn:
    def test_j0_at_zero(self):
        assert bessel_jn(0, 0.0) == 1.0

    def test_higher_orders_vanish_at_zero(self):
        assert bessel_jn(2, 0.0) == 0.0
        assert bessel_jn(-3, 0.0) == 0.0

    @pytest.mark.parametrize("x", [5e-324, 1e-310, 1e-300])
    def test_tiny_and_subnormal_arguments(self, x):
        """x/2 may underflow to zero; J_n(x) is still defined there."""
        assert bessel_jn(0, x) == 1.0
        assert bessel_jn(1, x) == pytest.approx(x / 2, abs=1e-320)
        assert bessel_jn(30, x) == 0.0
        assert bessel_jn(-64, x) == 0.0

    def test_series_and_recurrence_meet_at_the_switch_point(self):
        for n in (0, 1, 30, 64):
            below, at = bessel_jn(n, 11.999999), bessel_jn(n, 12.0)
            assert below == pytest.approx(sympy_jn(n, 11.999999), abs=1e-10)
            assert at == pytest.approx(sympy_jn(n, 12.0), abs=1e-10)

    def test_first_zero_of_j0(self):
        assert abs(bessel_jn(0, 2.404826)) < 1e-5

    @pytest.mark.parametrize("n", range(0, 11))
    def test_matches_high_precision_oracle_on_small_arguments(self, n):
        for x in np.linspace(0.0, 10.0, 41):
            assert bessel_jn(n, x) == pytest.approx(sympy_jn(n, x), abs=1e-10)

    @pytest.mark.parametrize("n,x", [
        (0, 12.0), (1, 15.5), (5, 20.0), (10, 33.3), (20, 50.0),
        (0, 99.0), (3, 100.0), (40, 60.0), (64, 80.0), (64, 11.0),
    ])
    def test_matches_oracle_in_recurrence_region(self, n, x):
        assert bessel_jn(n, x) == pytest.approx(sympy_jn(n, x), abs=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 3, 7, 10])
    def test_negative_order_reflection(self, n):
        """J_{-n}(x) = (-1)^n J_n(x)."""
        for x in (0.3, 2.0, 8.5, 25.0):
            assert bessel_jn(-n, x) == pytest.approx((-1) ** n * bessel_jn(n, x), abs=1e-15)

    @pytest.mark.parametrize("n,x", [
        (65, 1.0), (-65, 1.0), (2, -0.1), (2, 100.5), (1.5, 1.0), (0, float('nan')),
    ])
    def test_domain_errors(self, n, x):
        with pytest.raises(BesselDomainError):
            bessel_jn(n, x)


# ── Ideal patterns ──────────────────────────────────────────────────────────────

class TestPatterns:
    def test_supercardioid_preset(self):
        p = supercardioid_preset()
        assert p.order == 2
        np.testing.assert_array_equal(p.coefficients, [0.1035, 0.242, 0.309, 0.242, 0.1035])
        assert p.coefficients.sum() == pytest.approx(1.0, abs=1e-12)
        assert p.is_symmetric()

    def test_steer_direction_is_unity(self, supercardioid):
        assert ideal_beampattern(supercardioid, 0.7, 0.7) == pytest.approx(1.0, abs=1e-12)

    def test_rear_value(self, supercardioid):
        value = ideal_beampattern(supercardioid, np.pi, 0.0)
        assert value == pytest.approx(0.032, abs=1e-12)

    def test_omni(self):
        p = IdealPattern(order=0, coefficients=[1.0])
        for theta in (0.0, 1.0, 4.0):
            assert ideal_beampattern(p, theta, 2.0) == pytest.approx(1.0)

    def test_array_azimuths(self, supercardioid):
        out = ideal_beampattern(supercardioid, np.array([0.0, np.pi]))
        np.testing.assert_allclose(out, [1.0, 0.032], atol=1e-12)

    def test_coefficient_count_must_be_2n_plus_1(self):
        with pytest.raises(ValidationError, match="2N\\+1=5"):
            IdealPattern(order=2, coefficients=[0.2, 0.6, 0.2])

    def test_rejects_complex_coefficients(self):
        with pytest.raises(ValidationError, match="real"):
            IdealPattern(order=0, coefficients=[1 + 1j])

    def test_asymmetric_pattern_allowed(self):
        p = IdealPattern(order=1, coefficients=[0.1, 0.5, 0.4])
        assert not p.is_symmetric()


class TestResolvePattern:
    @pytest.mark.parametrize("name", sorted(PATTERN_PRESETS))
    def test_presets_by_name(self, name):
        p = resolve_pattern(name)
        assert p.name == name
        assert p.coefficients.sum() == pytest.approx(1.0)

    def test_mapping(self):
        p = resolve_pattern({"order": 1, "coeffs": [0.25, 0.5, 0.25]})
        assert p.order == 1

    def test_unknown_name(self):
        with pytest.raises(InvalidArgumentError, match="unknown pattern"):
            resolve_pattern("hypercardioid7")

    def test_mapping_with_bad_length(self):
        with pytest.raises(ValidationError):
            resolve_pattern({"order": 2, "coeffs": [1.0]})


# ── design_filter ───────────────────────────────────────────────────────────────

class TestDesignFilter:
    def test_too_few_mics(self, supercardioid):
        """An order-N pattern needs M >= 2N+1 sensors to resolve harmonics -N..N."""
        with pytest.raises(InvalidArgumentError, match="M >= 2N\\+1"):
            design_filter(make_uca(4, 0.01), supercardioid, 0.0, 1000.0)

    def test_negative_frequency(self, uca5, supercardioid):
        with pytest.raises(InvalidArgumentError):
            design_filter(uca5, supercardioid, 0.0, -1.0)

    def test_omni_near_dc_is_uniform_average(self, uca5):
        omni = IdealPattern(order=0, coefficients=[1.0])
        h = design_filter(uca5, omni, 0.3, 1e-3)
        np.testing.assert_allclose(h.weights, np.full(5, 0.2), atol=1e-12)

    def test_order_zero_scales_by_inverse_j0(self):
        geom = make_uca(7, 0.015)
        omni = IdealPattern(order=0, coefficients=[1.0])
        h = design_filter(geom, omni, 1.0, 6000.0)
        j0 = bessel_jn(0, normalized_freq(geom, 6000.0))
        np.testing.assert_allclose(h.weights, np.full(7, 1.0 / (7 * j0)), rtol=1e-13)

    def test_dc_uses_averaging_filter(self, uca5, supercardioid):
        """At f = 0 every steering vector is all ones, so the 1/M average is used."""
        h = design_filter(uca5, supercardioid, 0.0, 0.0)
        assert h.dc_fallback
        np.testing.assert_array_equal(h.weights, np.full(5, 0.2))

    def test_steer_direction_at_1khz(self, uca5, supercardioid):
        h = design_filter(uca5, supercardioid, 0.0, 1000.0)
        assert abs(response(h, uca5, 1000.0, 0.0) - 1.0) < 1e-2

    def test_rear_direction_at_4khz(self, uca5, supercardioid):
        """Ideal rear value of the supercardioid is b0 - 2 b1 + 2 b2 = 0.032."""
        h = design_filter(uca5, supercardioid, 0.0, 4000.0)
        assert abs(response(h, uca5, 4000.0, np.pi) - 0.032) < 2e-2

    def test_regularization_off_rejects_vanishing_denominator(self, uca5, supercardioid):
        """Without regularization a near-zero J_n(wbar) is an error naming the orders."""
        # wbar ~ 0.009 at 100 Hz: J_2 ~ 1e-5, below the 1e-4 floor.
        with pytest.raises(DegenerateFrequencyError, match="n=\\[-2, 2\\]"):
            design_filter(uca5, supercardioid, 0.0, 100.0, regularize=False)

    def test_regularization_on_clamps_and_stays_finite(self, uca5, supercardioid):
        """With regularization |J_n| < 1e-4 is clamped to +/-1e-4 and recorded."""
        h = design_filter(uca5, supercardioid, 0.0, 100.0)
        assert h.regularized_orders == (-2, 2)
        assert np.all(np.isfinite(h.weights))

    def test_operating_band_is_untouched_by_regularization(self, uca5, supercardioid):
        """Clamping only touches bins where a denominator falls under the floor."""
        on = design_filter(uca5, supercardioid, 0.4, 2000.0, regularize=True)
        off = design_filter(uca5, supercardioid, 0.4, 2000.0, regularize=False)
        np.testing.assert_array_equal(on.weights, off.weights)
        assert on.regularized_orders == ()

    def test_design_filters_stacks_frequencies(self, uca5, supercardioid):
        freqs = [0.0, 1000.0, 4000.0]
        w = design_filters(uca5, supercardioid, 0.0, freqs)
        assert w.shape == (3, 5)
        np.testing.assert_array_equal(w[2], design_filter(uca5, supercardioid, 0.0, 4000.0).weights)


@given(
    num_mics=st.sampled_from([7, 9, 11]),
    wbar=st.floats(min_value=0.05, max_value=1.2),
    steer=st.floats(min_value=0.0, max_value=2 * np.pi),
)
@settings(max_examples=60, deadline=None)
def test_distortionless_for_dense_arrays(num_mics, wbar, steer):
    geom = make_uca(num_mics, 0.015)
    freq = freq_for(geom, wbar)
    h = design_filter(geom, supercardioid_preset(), steer, freq)
    assert abs(response(h, geom, freq, steer) - 1.0) <= 0.02


@given(
    wbar=st.floats(min_value=0.05, max_value=0.4),
    steer=st.floats(min_value=0.0, max_value=2 * np.pi),
)
@settings(max_examples=60, deadline=None)
def test_distortionless_for_five_mics_at_small_wbar(wbar, steer):
    geom = make_uca(5, 0.005)
    freq = freq_for(geom, wbar)
    h = design_filter(geom, supercardioid_preset(), steer, freq)
    assert abs(response(h, geom, freq, steer) - 1.0) <= 0.02


@given(
    num_mics=st.sampled_from([5, 7, 9]),
    shift=st.integers(min_value=-4, max_value=4),
    wbar=st.floats(min_value=0.1, max_value=2.0),
    steer=st.floats(min_value=0.0, max_value=2 * np.pi),
    theta=st.floats(min_value=0.0, max_value=2 * np.pi),
)
@settings(max_examples=80, deadline=None)
def test_steering_equivariance_on_sensor_lattice(num_mics, shift, wbar, steer, theta):
    geom = make_uca(num_mics, 0.01)
    freq = freq_for(geom, wbar)
    delta = 2 * np.pi * shift / num_mics
    pattern = supercardioid_preset()
    base = response(design_filter(geom, pattern, steer, freq), geom, freq, theta)
    moved = response(design_filter(geom, pattern, steer + delta, freq), geom, freq, theta + delta)
    assert abs(moved - base) < 1e-10


@given(
    alpha=st.floats(min_value=-5.0, max_value=5.0),
    wbar=st.floats(min_value=0.1, max_value=2.0),
)
@settings(max_examples=50, deadline=None)
def test_linear_in_coefficients(alpha, wbar):
    geom = make_uca(5, 0.01)
    freq = freq_for(geom, wbar)
    pattern = supercardioid_preset()
    base = design_filter(geom, pattern, 0.3, freq).weights
    scaled = design_filter(geom, pattern.scaled(alpha), 0.3, freq).weights
    np.testing.assert_allclose(scaled, alpha * base, atol=1e-12 * max(1.0, np.max(np.abs(base))))
