import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from squeezeclock.quadrature import QuadratureError, gk15, gk15_batch
from squeezeclock.search import golden_section


def test_gk15_smooth_integrals():
    val, err = gk15(np.sin, 0.0, math.pi)
    assert val == pytest.approx(2.0, rel=1e-14)
    assert err < 1e-10
    val, _ = gk15(lambda x: 1.0 / (1.0 + x * x), 0.0, 50.0)
    assert val == pytest.approx(math.atan(50.0), rel=1e-11)


def test_gk15_endpoint_singularity():
    val, _ = gk15(lambda x: 1.0 / np.sqrt(x), 0.0, 1.0, rtol=1e-10)
    assert val == pytest.approx(2.0, rel=1e-8)


def test_batch_matches_individual():
    a = np.array([0.0, 0.5, 1.0])
    b = np.array([1.0, 2.0, 5.0])
    k = np.array([1.0, 2.0, 3.0])
    vals, _ = gk15_batch(lambda x, o: np.exp(-k[o][:, None] * x), a, b)
    exact = (np.exp(-k * a) - np.exp(-k * b)) / k
    np.testing.assert_allclose(vals, exact, rtol=1e-12)


def test_budget_exhaustion_reports_error():
    with pytest.raises(QuadratureError) as info:
        gk15_batch(lambda x, o: np.sign(np.sin(200 * x)) + 0 * x, [0.0], [10.0], max_panels=20)
    assert info.value.values.shape == (1,)


@given(st.floats(-5, 5), st.floats(0.1, 3.0))
def test_golden_section_parabola(x0, width):
    x, fx = golden_section(lambda x: (x - x0) ** 2 + 1.0, x0 - width, x0 + 1.7 * width, 1e-9)
    assert abs(x - x0) < 1e-7  # f is flat to rounding within ~sqrt(eps)
    assert fx == pytest.approx(1.0)
