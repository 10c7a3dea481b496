"""Clock stability from a phase-error curve and Gaussian LO phase diffusion.

The long-term phase variance after a total time T is

    sigma2_phi(T) = (T / tau) * E[ dphi^2(phi) ],   phi ~ N(0, (gamma tau)^2)

and the Allan-type frequency variance is sigma2_phi / T^2.
"""

from __future__ import annotations

import functools
import math
import threading
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .analytic import HALF_PI, PhaseErrorCurve, build_phase_error_curve
from .core import EnsembleSpec, db_to_linear, linear_to_db, validate_spec
from .quadrature import gk15_batch
from .search import golden_section

REGIME_BOUNDARY = 5.0

# gamma*tau scan used before golden-section refinement
SCAN_POINTS = 200
SCAN_RANGE = (1e-4, 3.0)
TAU_RTOL = 1e-3
FLAT_RTOL = 1e-6
MIN_GAMMA_TAU = 1e-12

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
# beyond this many standard deviations the Gaussian weight is < 1e-40
_TAIL_SIGMAS = 14.0


class FlatObjectiveWarning(UserWarning):
    pass


def lo_phase_pdf(gamma, tau, phi):
    """Gaussian density of the LO phase deviation after Ramsey time tau."""
    s = gamma * tau
    phi = np.asarray(phi, dtype=float)
    out = np.exp(-(phi * phi) / (2.0 * s * s)) / (s * _SQRT2PI)
    return float(out) if out.ndim == 0 else out


def _upper_tail(z):
    return 0.5 * special.erfc(np.asarray(z) / _SQRT2)


def _quadratic_tail(z):
    """E[(Z - z)^2; Z > z] for standard normal Z, without cancellation."""
    z = np.asarray(z, dtype=float)
    mills = math.sqrt(math.pi / 2.0) * special.erfcx(z / _SQRT2)
    dens = np.exp(-0.5 * z * z) / _SQRT2PI
    return np.maximum(dens * ((1.0 + z * z) * mills - z), 0.0)


def _tan2_moment(curve: PhaseErrorCurve, sigma, rtol):
    """Integral of pdf(phi) * tan(phi)^2 over [0, phi_star] for each sigma."""
    sigma = np.atleast_1d(sigma)
    upper = np.minimum(curve.phi_star, _TAIL_SIGMAS * sigma)
    out = np.zeros(sigma.size)
    live = (upper > 0) & (curve.tan2_coef > 0)
    if not live.any():
        return out
    s = sigma[live]

    def integrand(x, owner):
        sv = s[owner][:, None]
        return np.exp(-0.5 * (x / sv) ** 2) / (sv * _SQRT2PI) * np.tan(x) ** 2

    vals, _ = gk15_batch(integrand, np.zeros(s.size), upper[live], rtol=rtol)
    out[live] = vals
    return out


def expected_phase_error(curve: PhaseErrorCurve, sigma, rtol=1e-10):
    """E[dphi^2] under N(0, sigma^2), vectorized over sigma.

    The inner branch is integrated numerically; the capped and wrap-around
    branches use closed-form Gaussian moments.
    """
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    star = curve.phi_star
    z_star = star / sigma
    z_half = HALF_PI / sigma
    # inner: base is non-negative for every valid spec, so max(.,0) is inactive
    inner = curve.base * 0.5 * special.erf(z_star / _SQRT2)
    if curve.tan2_coef > 0 and star > 0:
        inner = inner + curve.tan2_coef * _tan2_moment(curve, sigma, rtol)
    capped = curve.cap * np.maximum(_upper_tail(z_star) - _upper_tail(z_half), 0.0)
    outer = 4.0 * sigma**2 * _quadratic_tail(z_half) + curve.outer_offset * _upper_tail(z_half)
    return 2.0 * (inner + capped + outer)


def expected_phase_error_generic(curve_fn: Callable, sigma: float,
                                 breakpoints: Sequence[float] = (), rtol=1e-10):
    """E[dphi^2] for an arbitrary even curve by piecewise adaptive quadrature.

    Panels are split at the supplied non-negative breakpoints; the domain is
    truncated where the Gaussian weight is negligible.
    """
    upper = max(_TAIL_SIGMAS * sigma, (HALF_PI + _TAIL_SIGMAS * sigma) if breakpoints else 0.0)
    edges = sorted({0.0, upper, *[b for b in breakpoints if 0.0 < b < upper]})
    a, b = np.array(edges[:-1]), np.array(edges[1:])

    def integrand(x, owner):
        return np.exp(-0.5 * (x / sigma) ** 2) / (sigma * _SQRT2PI) * np.asarray(curve_fn(x))

    vals, _ = gk15_batch(integrand, a, b, rtol=rtol)
    return 2.0 * float(vals.sum())


def clock_phase_variance(curve, gamma: float, tau, T: float, rtol=1e-10):
    """Long-term phase variance sigma2_phi(T) for one or many Ramsey times.

    ``curve`` may be a :class:`PhaseErrorCurve` or any even callable of phi.
    """
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau_arr <= 0) or np.any(tau_arr > T * (1 + 1e-12)):
        raise ValueError("Ramsey time must satisfy 0 < tau <= T")
    sigma = gamma * tau_arr
    if isinstance(curve, PhaseErrorCurve):
        mean = expected_phase_error(curve, sigma, rtol)
    else:
        bps = getattr(curve, "breakpoints", ())
        mean = np.array([expected_phase_error_generic(curve, s, bps, rtol) for s in sigma])
    out = (T / tau_arr) * mean
    return float(out[0]) if np.ndim(tau) == 0 else out


@dataclass(frozen=True)
class StabilityResult:
    tau: float
    total_time: float
    sigma2_phi: float
    regime_alpha: float
    sql_ratio_db: float = float("nan")

    @property
    def sigma2_omega(self) -> float:
        return self.sigma2_phi / self.total_time**2

    @property
    def regime(self) -> str:
        return classify_regime(self.regime_alpha)


def regime_alpha(spec: EnsembleSpec) -> float:
    """A^4 xi^-6 / N; antisqueezing limits the Ramsey time when this is large."""
    area = spec.xi2 * spec.chi2
    return area * area / (spec.xi2**3 * spec.atom_count)


def classify_regime(alpha: float) -> str:
    return "I" if alpha < REGIME_BOUNDARY else "II"


def _scan_grid(gamma, T):
    lo, hi = SCAN_RANGE
    hi = min(hi, gamma * T)
    lo = min(lo, hi)
    if hi <= lo:
        return np.array([hi]) / gamma
    return np.geomspace(lo, hi, SCAN_POINTS) / gamma


def optimize_ramsey_time(curve: PhaseErrorCurve, gamma: float = 1.0, T: float | None = None,
                         css: StabilityResult | None = None) -> StabilityResult:
    """Ramsey time minimizing sigma2_phi(T), found by log-grid scan plus golden section.

    ``curve`` is usually a PhaseErrorCurve; any even callable works, in which
    case alpha and the dB ratio are NaN unless ``css`` is given.
    ``T`` defaults to 1/gamma.  ``css`` is the reference clock for
    ``sql_ratio_db``; by default the perfect-contrast coherent clock with the
    same N, gamma and T.
    """
    if T is None:
        T = 1.0 / gamma
    taus = _scan_grid(gamma, T)
    vals = clock_phase_variance(curve, gamma, taus, T)
    i = int(np.argmin(vals))
    # the optimum may lie below the default scan; extend it a decade at a time
    while i == 0 and taus.size > 1 and gamma * taus[0] > MIN_GAMMA_TAU:
        lower = np.geomspace(taus[0] / 10.0, taus[0], 21)[:-1]
        taus = np.concatenate([lower, taus])
        vals = np.concatenate([clock_phase_variance(curve, gamma, lower, T), vals])
        i = int(np.argmin(vals))
    if vals.max() - vals.min() <= FLAT_RTOL * vals.min():
        warnings.warn("clock variance is flat over the Ramsey-time search range",
                      FlatObjectiveWarning, stacklevel=2)
    best_tau, best_val = taus[i], vals[i]
    if taus.size > 1:
        lo = math.log(taus[max(i - 1, 0)])
        hi = math.log(taus[min(i + 1, taus.size - 1)])

        def f(log_tau):
            return clock_phase_variance(curve, gamma, min(math.exp(log_tau), T), T)

        x, fx = golden_section(f, lo, hi, tol=0.5 * TAU_RTOL)
        if fx < best_val:
            best_tau, best_val = min(math.exp(x), T), fx
    spec = getattr(curve, "spec", None)
    alpha = regime_alpha(spec) if spec is not None else math.nan
    if css is False:
        ratio = 0.0
    elif css is None and spec is None:
        ratio = math.nan
    else:
        ratio = compare_to_css(best_val, css if css is not None else css_reference(spec.atom_count, gamma, T))
    return StabilityResult(float(best_tau), float(T), float(best_val), float(alpha), float(ratio))


def compare_to_css(result, css_result) -> float:
    """Stability change in dB relative to a reference clock (negative is better)."""
    a = result.sigma2_phi if isinstance(result, StabilityResult) else float(result)
    b = css_result.sigma2_phi if isinstance(css_result, StabilityResult) else float(css_result)
    return 10.0 * math.log10(a / b)


_css_lock = threading.Lock()


@functools.lru_cache(maxsize=256)
def _css_cached(atom_count: float, gamma: float, T: float, prep: float, ramsey: float):
    spec = validate_spec(EnsembleSpec(atom_count, 1.0, 1.0, prep, ramsey), continuous_n=True)
    return optimize_ramsey_time(build_phase_error_curve(spec), gamma, T, css=False)


def css_reference(atom_count: float, gamma: float = 1.0, T: float | None = None,
                  prep_contrast: float = 1.0, ramsey_contrast: float = 1.0) -> StabilityResult:
    """Optimized coherent-state clock, cached per (N, gamma, T, contrasts)."""
    if T is None:
        T = 1.0 / gamma
    with _css_lock:
        return _css_cached(float(atom_count), float(gamma), float(T),
                           float(prep_contrast), float(ramsey_contrast))


REFERENCES = ("perfect", "matched")


def reference_clock(spec: EnsembleSpec, gamma: float = 1.0, T: float | None = None,
                    reference: str = "perfect") -> StabilityResult:
    """Coherent clock that ``spec`` is compared with.

    ``"perfect"``: unit contrast.  ``"matched"``: unit preparation contrast
    but the same Ramsey-time contrast, since decay during the Ramsey time
    affects coherent and squeezed states alike.
    """
    if reference == "perfect":
        return css_reference(spec.atom_count, gamma, T)
    if reference == "matched":
        return css_reference(spec.atom_count, gamma, T, 1.0, spec.ramsey_contrast)
    raise ValueError(f"unknown reference {reference!r}; expected one of {REFERENCES}")


def optimize_spec(spec: EnsembleSpec, gamma: float = 1.0, T: float | None = None,
                  css: StabilityResult | None = None) -> StabilityResult:
    return optimize_ramsey_time(build_phase_error_curve(spec), gamma, T, css)


# ---------------------------------------------------------------- sweeps

SWEEP_FIELDS = ("atom_count", "xi2", "area", "chi2", "prep_contrast", "ramsey_contrast", "theta")


@dataclass(frozen=True)
class Axis:
    """One sweep axis.  ``samples`` are in the axis' own scale (dB values for 'dB')."""

    name: str
    samples: tuple
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in SWEEP_FIELDS:
            raise ValueError(f"unknown sweep parameter {self.name!r}; expected one of {SWEEP_FIELDS}")
        if self.scale not in ("linear", "dB", "log"):
            raise ValueError(f"unknown axis scale {self.scale!r}")
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise ValueError(f"axis {self.name!r} needs at least one sample")
        d = np.diff(s)
        if s.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError(f"axis {self.name!r} samples must be strictly monotone")
        object.__setattr__(self, "samples", tuple(float(v) for v in s))

    @classmethod
    def span(cls, name, start, stop, num, scale="linear"):
        if scale == "log":
            vals = np.geomspace(start, stop, num)
        else:
            vals = np.linspace(start, stop, num)
        return cls(name, tuple(vals), scale)

    def linear_values(self):
        s = np.asarray(self.samples)
        return 10.0 ** (s / 10.0) if self.scale == "dB" else s


def spec_for_cell(template: EnsembleSpec, assignments: dict) -> EnsembleSpec:
    """Apply linear-scale parameter values to the template.

    The template's excess area is held fixed when xi2 is swept, unless the
    same cell also sets chi2 explicitly.
    """
    xi2 = assignments.get("xi2", template.xi2)
    area = assignments.get("area", template.xi2 * template.chi2)
    chi2 = assignments.get("chi2", area / xi2)
    changes = {k: v for k, v in assignments.items() if k not in ("xi2", "area", "chi2")}
    return template.with_(xi2=xi2, chi2=chi2, **changes)


@dataclass
class SweepGrid:
    axes: tuple
    results: np.ndarray  # object array of StabilityResult | None
    errors: np.ndarray  # object array of str | None
    specs: np.ndarray = field(repr=False, default=None)

    @property
    def shape(self):
        return tuple(len(a.samples) for a in self.axes)

    def field_array(self, name: str) -> np.ndarray:
        out = np.full(self.shape, np.nan)
        for idx, r in np.ndenumerate(self.results):
            if r is not None:
                out[idx] = getattr(r, name)
        return out

    def cells(self):
        """Yield (index, axis samples, spec, result, error) in axis-major order."""
        for idx in np.ndindex(*self.shape):
            coords = tuple(ax.samples[i] for ax, i in zip(self.axes, idx))
            yield idx, coords, self.specs[idx], self.results[idx], self.errors[idx]


def _evaluate_cell(args):
    spec, gamma, T, css = args
    try:
        return optimize_spec(spec, gamma, T, css), None
    except Exception as exc:  # recorded per cell, the grid completes
        return None, f"{type(exc).__name__}: {exc}"


def stability_map(template: EnsembleSpec, axes: Sequence[Axis], gamma: float = 1.0,
                  T: float | None = None, jobs: int = 1,
                  css: StabilityResult | None = None, reference: str = "perfect") -> SweepGrid:
    """Optimized stability over a 1-D or 2-D grid of ensemble parameters.

    ``sql_ratio_db`` of each cell is taken against ``css`` if given.
    Otherwise ``reference="perfect"`` compares with the perfect-contrast
    coherent clock for the cell's own N, and ``"matched"`` with a coherent
    clock sharing the cell's Ramsey-time contrast (see reference_clock).
    """
    if reference not in REFERENCES:
        raise ValueError(f"unknown reference {reference!r}; expected one of {REFERENCES}")
    axes = tuple(axes)
    if not 1 <= len(axes) <= 2:
        raise ValueError("stability_map supports one or two axes")
    if T is None:
        T = 1.0 / gamma
    shape = tuple(len(a.samples) for a in axes)
    specs = np.empty(shape, dtype=object)
    errors = np.empty(shape, dtype=object)
    tasks, slots = [], []
    for idx in np.ndindex(*shape):
        assign = {ax.name: float(ax.linear_values()[i]) for ax, i in zip(axes, idx)}
        try:
            spec = spec_for_cell(template, assign)
        except Exception as exc:
            errors[idx] = f"{type(exc).__name__}: {exc}"
            continue
        specs[idx] = spec
        ref = css if css is not None else reference_clock(spec, gamma, T, reference)
        tasks.append((spec, gamma, T, ref))
        slots.append(idx)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_evaluate_cell, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outcomes = [_evaluate_cell(t) for t in tasks]
    results = np.empty(shape, dtype=object)
    for idx, (res, err) in zip(slots, outcomes):
        results[idx] = res
        errors[idx] = err
    return SweepGrid(axes, results, errors, specs)


def optimum_along(values: np.ndarray, samples: Sequence[float]) -> float:
    """Location of the minimum of ``values`` over ``samples`` (parabolic refinement)."""
    v = np.asarray(values, dtype=float)
    x = np.asarray(samples, dtype=float)
    i = int(np.nanargmin(v))
    if 0 < i < v.size - 1:
        y0, y1, y2 = v[i - 1], v[i], v[i + 1]
        den = y0 - 2 * y1 + y2
        if den > 0:
            h = 0.5 * (y0 - y2) / den
            return float(x[i] + h * (x[i + 1] - x[i - 1]) / 2.0)
    return float(x[i])


__all__ = [
    "Axis", "FlatObjectiveWarning", "StabilityResult", "SweepGrid", "classify_regime",
    "clock_phase_variance", "compare_to_css", "css_reference", "expected_phase_error",
    "expected_phase_error_generic", "lo_phase_pdf", "optimize_ramsey_time", "optimize_spec",
    "regime_alpha", "reference_clock", "stability_map", "optimum_along", "REFERENCES", "spec_for_cell", "db_to_linear", "linear_to_db",
]
