import math

import pytest
from hypothesis import given, strategies as st

from squeezeclock.core import (DecibelValue, EnsembleSpec, LoModel, SpecError, SqueezingMethod,
                               db_to_linear, linear_to_db, ramsey_squeezing_parameter,
                               require_integer_atoms, validate_spec)

from conftest import ensemble_specs


def test_db_examples():
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(-20.1) == pytest.approx(9.7724e-3, rel=1e-5)
    assert db_to_linear(19.0) == pytest.approx(79.433, abs=1e-3)


@given(st.floats(-60.0, 60.0))
def test_db_round_trip(x):
    assert linear_to_db(db_to_linear(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)
    v = DecibelValue(x)
    assert DecibelValue.from_linear(v.linear).linear == pytest.approx(v.linear, rel=1e-12)


def test_linear_to_db_rejects_nonpositive():
    with pytest.raises(SpecError):
        linear_to_db(0.0)


def test_css_spec_valid():
    s = validate_spec(EnsembleSpec(10_000))
    assert s.area == 1.0 and s.contrast == 1.0 and s.spin == 5000


def test_rejects_heisenberg_violation():
    with pytest.raises(SpecError, match="A\\^2"):
        validate_spec(EnsembleSpec(10_000, 0.1, 5.0))


@pytest.mark.parametrize("kw", [dict(prep_contrast=0.0), dict(ramsey_contrast=1.1),
                                dict(prep_contrast=-0.2), dict(xi2=1.5, chi2=1.0)])
def test_rejects_bad_fields(kw):
    with pytest.raises(SpecError):
        validate_spec(EnsembleSpec(100, **kw))


@pytest.mark.parametrize("n", [1, 0, -4, 10.5, float("nan"), True])
def test_rejects_bad_atom_count(n):
    with pytest.raises(SpecError):
        validate_spec(EnsembleSpec(n))


def test_continuous_atom_count_allowed_on_request():
    assert validate_spec(EnsembleSpec(10.5), continuous_n=True).spin == 5.25
    with pytest.raises(SpecError):
        require_integer_atoms(EnsembleSpec(10.5))
    with pytest.raises(SpecError):
        require_integer_atoms(EnsembleSpec(11))


def test_large_measured_state_valid():
    s = EnsembleSpec.from_db(500_000, -20.1, 19.0, prep_contrast=0.962)
    assert s.area == pytest.approx(10 ** 1.9)
    assert s.xi2 == pytest.approx(10 ** -2.01)
    assert s.contrast == pytest.approx(0.962)


def test_from_db_unitary_round_off():
    # chi2 = 1/xi2 built from dB values must not trip the area check
    s = EnsembleSpec.from_db(10_000, -17.3, 0.0)
    assert s.area == 1.0


def test_squeeze_angle_conventions():
    s = EnsembleSpec.from_db(1000, -10, 10)
    assert s.squeeze_angle == 0.0
    f = s.with_(method=SqueezingMethod.FEEDBACK)
    assert f.squeeze_angle == pytest.approx(math.asin(1 / math.sqrt(f.chi2)))
    c = s.with_(theta=0.3)
    assert c.method is SqueezingMethod.CUSTOM and c.squeeze_angle == 0.3
    with pytest.raises(SpecError):
        s.with_(theta=2.0)


@pytest.mark.parametrize("xi2, c1, expected", [(0.1, 1.0, 0.1), (0.1, 0.5, 0.4), (1.0, 1.0, 1.0)])
def test_ramsey_squeezing_parameter(xi2, c1, expected):
    spec = EnsembleSpec(100, xi2, 1 / xi2, prep_contrast=c1)
    assert ramsey_squeezing_parameter(spec) == pytest.approx(expected, rel=1e-12)


@given(ensemble_specs())
def test_validated_invariants_and_idempotence(spec):
    assert spec.xi2 * spec.chi2 >= 1 - 1e-12
    assert 0 < spec.contrast <= 1
    again = validate_spec(spec, continuous_n=True)
    assert again == spec and again.area == spec.area and again.contrast == spec.contrast


def test_spec_is_immutable():
    s = validate_spec(EnsembleSpec(100))
    with pytest.raises(AttributeError):
        s.xi2 = 0.5


def test_lo_model():
    lo = LoModel(2.0)
    assert lo.phase_std(0.25) == 0.5
    with pytest.raises(SpecError):
        LoModel(0.0)
    with pytest.raises(SpecError):
        LoModel(1.0, "lorentzian")
