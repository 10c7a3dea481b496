import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from squeezeclock.analytic import HALF_PI, build_phase_error_curve
from squeezeclock.core import EnsembleSpec
from squeezeclock.quadrature import gk15
from squeezeclock.stability import (Axis, FlatObjectiveWarning, classify_regime,
                                    clock_phase_variance, compare_to_css, css_reference,
                                    expected_phase_error, optimize_ramsey_time, optimize_spec,
                                    optimum_along, reference_clock, regime_alpha, stability_map)

from conftest import ensemble_specs


def dense_expected_error(curve, sigma, pts=200_001):
    """Trapezoid rule on a fine grid with nodes at every kink, to 14 sigma beyond pi/2."""
    top = max(14 * sigma, HALF_PI + 14 * sigma)
    edges = sorted({0.0, top, *[b for b in curve.breakpoints if b < top]})
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        x = np.linspace(a, b, pts)
        # evaluate strictly inside each segment so one-sided limits are used
        xi = x.copy()
        xi[0] = np.nextafter(a, b) if a > 0 else a
        xi[-1] = np.nextafter(b, a)
        y = np.exp(-0.5 * (xi / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi)) * curve(xi)
        total += np.trapezoid(y, x)
    return 2 * total


def test_pdf_normalized_even_and_peak():
    from squeezeclock.stability import lo_phase_pdf
    val, _ = gk15(lambda x: lo_phase_pdf(2.0, 0.3, x), -20.0, 20.0, rtol=1e-13)
    assert val == pytest.approx(1.0, abs=1e-10)
    assert lo_phase_pdf(2.0, 0.3, 0.0) == pytest.approx(1 / (0.6 * math.sqrt(2 * math.pi)))
    assert lo_phase_pdf(2.0, 0.3, 0.4) == lo_phase_pdf(2.0, 0.3, -0.4)


@pytest.mark.parametrize("gt", [1e-3, 0.01, 0.1, 0.5, 1.0, 3.0])
@pytest.mark.parametrize("xi_db, area_db", [(-15.0, 25.0), (-15.0, 0.0), (0.0, 0.0), (-25.0, 5.0)])
def test_structured_quadrature_matches_dense_trapezoid(gt, xi_db, area_db):
    spec = EnsembleSpec.from_db(1e4, xi_db, area_db, prep_contrast=0.9)
    curve = build_phase_error_curve(spec)
    fast = expected_phase_error(curve, gt)[0]
    assert fast == pytest.approx(dense_expected_error(curve, gt), rel=1e-7)


def test_generic_path_matches_structured():
    curve = build_phase_error_curve(EnsembleSpec.from_db(1e4, -15.0, 25.0))
    taus = np.array([0.003, 0.03, 0.3, 1.0])
    fast = clock_phase_variance(curve, 1.0, taus, 1.0)
    slow = clock_phase_variance(lambda p: curve(p), 1.0, taus, 1.0)
    np.testing.assert_allclose(fast, slow, rtol=1e-8)


@given(st.floats(1e-8, 10.0), st.floats(1e-3, 5.0), st.floats(0.01, 1.0))
@settings(max_examples=50)
def test_constant_curve_identity(c, gamma, frac):
    T = 2.0
    tau = frac * T
    got = clock_phase_variance(lambda p: np.full(np.shape(p), c), gamma, tau, T)
    assert got == pytest.approx(T / tau * c, rel=1e-8)


def test_css_short_time_limit():
    curve = build_phase_error_curve(EnsembleSpec(10_000))
    assert clock_phase_variance(curve, 1.0, 1e-3, 1.0) == pytest.approx(1e-4 / 1e-3, rel=1e-12)


def test_linear_in_total_time():
    curve = build_phase_error_curve(EnsembleSpec.from_db(1e4, -10, 10))
    a = clock_phase_variance(curve, 1.0, 0.2, 1.0)
    b = clock_phase_variance(curve, 1.0, 0.2, 2.0)
    assert b == pytest.approx(2 * a, rel=1e-14)


def test_rejects_tau_beyond_total_time():
    curve = build_phase_error_curve(EnsembleSpec(100))
    with pytest.raises(ValueError):
        clock_phase_variance(curve, 1.0, 1.5, 1.0)
    with pytest.raises(ValueError):
        clock_phase_variance(curve, 1.0, 0.0, 1.0)


def test_antisqueezing_saturates_at_short_ramsey_time():
    plain = build_phase_error_curve(EnsembleSpec.from_db(1e4, -15, 0))
    noisy = build_phase_error_curve(EnsembleSpec.from_db(1e4, -15, 25))
    # at gamma*tau = 1e-4 the excess area barely matters, at 0.1 it dominates
    short = clock_phase_variance(noisy, 1, 1e-4, 1) / clock_phase_variance(plain, 1, 1e-4, 1)
    longer = clock_phase_variance(noisy, 1, 0.1, 1) / clock_phase_variance(plain, 1, 0.1, 1)
    assert short < 1.01 < 1000 < longer
    assert optimize_ramsey_time(noisy).tau < 0.1 * optimize_ramsey_time(plain).tau


def test_css_optimum_against_exhaustive_scan():
    curve = build_phase_error_curve(EnsembleSpec(10_000))
    res = optimize_ramsey_time(curve, css=False)
    taus = np.geomspace(1e-4, 1.0, 10_000)
    vals = clock_phase_variance(curve, 1.0, taus, 1.0)
    i = int(np.argmin(vals))
    assert 0.3 <= res.tau <= 0.6
    assert res.tau == pytest.approx(taus[i], rel=2e-3)
    assert res.sigma2_phi <= vals[i] * (1 + 1e-9)
    assert res.sql_ratio_db == 0.0


@given(ensemble_specs(n_min=100, n_max=1e6, contrast=False, theta=False))
@settings(max_examples=25)
def test_optimum_is_local_minimum(spec):
    curve = build_phase_error_curve(spec)
    res = optimize_ramsey_time(curve, css=False)
    for f in (1 - 1e-3, 1 + 1e-3):
        t = min(res.tau * f, 1.0)
        if t != res.tau:
            assert clock_phase_variance(curve, 1.0, t, 1.0) >= res.sigma2_phi * (1 - 1e-12)


def test_frequency_variance_consistency():
    res = optimize_ramsey_time(build_phase_error_curve(EnsembleSpec(1000)), 2.0, T=3.0, css=False)
    assert res.sigma2_omega * 9.0 == pytest.approx(res.sigma2_phi, rel=1e-15)
    assert res.sigma2_phi > 0 and res.regime_alpha > 0


def test_flat_objective_warns():
    # E|phi| is proportional to tau, so (T / tau) E|phi| does not depend on tau
    with pytest.warns(FlatObjectiveWarning):
        res = optimize_ramsey_time(np.abs, css=False)
    assert res.sigma2_phi == pytest.approx(math.sqrt(2 / math.pi), rel=1e-8)
    assert math.isnan(res.regime_alpha)


def test_monotone_in_excess_area():
    vals = [optimize_spec(EnsembleSpec.from_db(1e4, -15, a), css=False).sigma2_phi
            for a in np.linspace(0, 30, 10)]
    assert all(b >= a * (1 - 1e-9) for a, b in zip(vals, vals[1:]))


def test_regime_one_insensitive_to_area():
    s1 = EnsembleSpec.from_db(1e4, -8.0, 1.0)
    s2 = EnsembleSpec.from_db(1e4, -8.0, 1.0 + 10 * math.log10(2))
    assert regime_alpha(s2) < 0.5
    a = optimize_spec(s1, css=False).sigma2_phi
    b = optimize_spec(s2, css=False).sigma2_phi
    assert abs(b / a - 1) < 0.05


def test_regime_alpha_examples():
    a = regime_alpha(EnsembleSpec.from_db(1e4, -15, 0))
    assert a == pytest.approx(10**4.5 / 1e4, rel=1e-12) and classify_regime(a) == "I"
    b = regime_alpha(EnsembleSpec.from_db(1e4, -15, 15))
    # A^2 = 15 dB means A^4 = 10^3
    assert b == pytest.approx(10**3 * 10**4.5 / 1e4, rel=1e-12) and classify_regime(b) == "II"
    # unitary squeezing at xi^2 = N^(-1/3) gives alpha = 1
    assert regime_alpha(EnsembleSpec(1e6, 1e-2, 1e2)) == pytest.approx(1.0)


def test_compare_identical_is_zero():
    r = css_reference(1e4)
    assert compare_to_css(r, r) == 0.0


def test_matched_reference_shares_ramsey_contrast_only():
    s = EnsembleSpec.from_db(1e4, -10, 0, prep_contrast=0.8, ramsey_contrast=0.9)
    ref = reference_clock(s, reference="matched")
    assert ref == css_reference(1e4, 1.0, 1.0, 1.0, 0.9)
    with pytest.raises(ValueError):
        reference_clock(s, reference="other")


def test_map_shape_errors_and_determinism():
    axes = [Axis("xi2", (2.0, 0.5, 0.1)),
            Axis.span("area", 0.0, 20.0, 3, "dB")]
    g1 = stability_map(EnsembleSpec(1e4), axes, jobs=1)
    g2 = stability_map(EnsembleSpec(1e4), axes, jobs=2)
    assert g1.shape == (3, 3) == g1.results.shape
    assert all(e is not None for e in g1.errors[0])  # xi2 = 2 violates xi2 <= 1
    assert all(e is None for e in g1.errors[1:].ravel())
    np.testing.assert_array_equal(g1.field_array("sigma2_phi"), g2.field_array("sigma2_phi"))
    np.testing.assert_array_equal(g1.field_array("tau"), g2.field_array("tau"))


def test_map_holds_area_when_sweeping_squeezing():
    g = stability_map(EnsembleSpec.from_db(1e4, 0, 10), [Axis.span("xi2", -5, -20, 4, "dB")])
    for _, _, spec, _, _ in g.cells():
        assert spec.area_db == pytest.approx(10.0)


def test_axis_validation():
    with pytest.raises(ValueError):
        Axis("xi2", (0.1, 0.3, 0.2))
    with pytest.raises(ValueError):
        Axis("nope", (1.0,))
    with pytest.raises(ValueError):
        Axis("xi2", ())


def test_optimum_along_parabola():
    x = np.linspace(-3, 3, 13)
    assert optimum_along((x - 0.37) ** 2, x) == pytest.approx(0.37, abs=1e-12)
    assert optimum_along(x, x) == -3.0
