import math

from hypothesis import HealthCheck, settings, strategies as st

from squeezeclock.core import EnsembleSpec, validate_spec

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def ensemble_specs(draw, n_min=2.0, n_max=1e7, max_area_db=40.0, contrast=True, theta=True):
    """Random valid specs: squeezing, excess area, contrasts and tilt."""
    n = draw(st.floats(n_min, n_max))
    xi2_db = draw(st.floats(-40.0, 0.0))
    area_db = draw(st.floats(0.0, max_area_db))
    c1 = draw(st.floats(0.05, 1.0)) if contrast else 1.0
    c2 = draw(st.floats(0.05, 1.0)) if contrast else 1.0
    th = draw(st.one_of(st.none(), st.floats(0.0, math.pi / 2))) if theta else None
    xi2 = 10 ** (xi2_db / 10)
    chi2 = 10 ** ((area_db - xi2_db) / 10)
    return validate_spec(EnsembleSpec(n, xi2, chi2, c1, c2, theta=th), continuous_n=True)


# one verdict line per acceptance criterion, printed after the test summary
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
