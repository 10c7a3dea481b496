"""Closed-form phase-estimation error of a Ramsey clock with a squeezed state.

The single-shot error is built from three pieces: the linearized error for
|phi| < pi/2, its saturation value near the fringe extremum, and a quadratic
wrap-around penalty for |phi| > pi/2.  Contrast loss during preparation
(C1) and during the Ramsey time (C2) is included throughout; with
C1 = C2 = 1 every expression reduces to the unit-contrast form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EnsembleSpec, validate_spec

HALF_PI = 0.5 * math.pi

_STAR_ATOL = 1e-10


def delta_sx_sq(chi2):
    """Variance of the mean-spin component, (chi^2 - chi^-2)^2 / 8."""
    chi2 = np.asarray(chi2, dtype=float)
    out = (chi2 - 1.0 / chi2) ** 2 / 8.0
    return float(out) if out.ndim == 0 else out


def delta_sx_sq_full(xi2, chi2):
    """Unsimplified variance including the displacement-mixture term xi^2 - chi^-2."""
    return delta_sx_sq(chi2) + xi2 - 1.0 / chi2


def _antisqueeze_term(spec: EnsembleSpec) -> float:
    return (spec.chi2 - 1.0 / spec.chi2) ** 2


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def sz_signal_mean(spec: EnsembleSpec, phi):
    """Mean final S_z, C * S * sin(phi)."""
    return _scalar_or_array(spec.contrast * 0.5 * spec.atom_count * np.sin(phi))


def sz_variance_final(spec: EnsembleSpec, phi):
    """Variance of the final S_z readout including decohered-atom noise."""
    n, c = spec.atom_count, spec.contrast
    c2, c1 = spec.ramsey_contrast, spec.prep_contrast
    cos2 = np.cos(phi) ** 2
    sin2 = np.sin(phi) ** 2
    squeezed = 0.25 * n * spec.xi2 * cos2 + delta_sx_sq(spec.chi2) * sin2
    decohered = 1.0 - c - c2 * (1.0 - c1) * cos2 * math.cos(spec.squeeze_angle) ** 2
    return _scalar_or_array(c * squeezed + 0.25 * n * decohered)


def phase_error_sq_inner(spec: EnsembleSpec, phi):
    """Linearized single-shot phase variance, valid for |phi| < pi/2.

    Clamped at zero from below; the preparation-contrast correction can
    otherwise push a rounding-level result negative.
    """
    phi = np.asarray(phi, dtype=float)
    if np.any(np.abs(phi) >= HALF_PI):
        raise ValueError("linearized phase error is only defined for |phi| < pi/2")
    n, c = spec.atom_count, spec.contrast
    c2, c1 = spec.ramsey_contrast, spec.prep_contrast
    sec2 = 1.0 / np.cos(phi) ** 2
    val = (
        spec.xi2 / (c * n)
        + _antisqueeze_term(spec) / (2.0 * c * n * n) * np.tan(phi) ** 2
        + (1.0 - c) / (c * c * n) * sec2
        - c2 * (1.0 - c1) / (c * c * n) * math.cos(spec.squeeze_angle) ** 2
    )
    return _scalar_or_array(np.maximum(val, 0.0))


def max_phase_error(spec: EnsembleSpec) -> float:
    """Largest phase error near |phi| = pi/2 (radians, not squared)."""
    n, c = spec.atom_count, spec.contrast
    inside = 2.0 * _antisqueeze_term(spec) / (n * n * c) + 4.0 * (1.0 - c) / (n * c * c)
    return inside**0.25


def phase_error_sq_outer(spec: EnsembleSpec, phi, dphi_max2: float | None = None):
    """Wrap-around error 4(|phi| - pi/2)^2 + dphi_max^2 for |phi| >= pi/2."""
    phi = np.asarray(phi, dtype=float)
    if np.any(np.abs(phi) < HALF_PI):
        raise ValueError("wrap-around branch is only defined for |phi| >= pi/2")
    if dphi_max2 is None:
        dphi_max2 = max_phase_error(spec) ** 2
    return _scalar_or_array(4.0 * (np.abs(phi) - HALF_PI) ** 2 + dphi_max2)


@dataclass(frozen=True)
class PhaseErrorCurve:
    """Stitched single-shot phase variance as a function of phase deviation.

    Inside |phi| < pi/2 the linearized error is written as
    ``base + tan2_coef * tan(phi)^2`` and capped at ``cap``, which it reaches
    at ``phi_star``.  Outside, the quadratic wrap-around penalty is added to
    ``outer_offset``, which equals the cap so the curve is continuous at pi/2.
    ``max_error_sq`` is the saturation value of the phase variance.
    """

    spec: EnsembleSpec
    phi_star: float
    max_error_sq: float
    cap: float
    base: float
    tan2_coef: float
    outer_offset: float

    def inner(self, phi):
        phi = np.asarray(phi, dtype=float)
        return np.maximum(self.base + self.tan2_coef * np.tan(phi) ** 2, 0.0)

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        a = np.abs(phi)
        inside = a < HALF_PI
        out = np.empty_like(a)
        with np.errstate(over="ignore", invalid="ignore"):
            out[inside] = np.minimum(self.inner(a[inside]), self.cap)
        out[~inside] = 4.0 * (a[~inside] - HALF_PI) ** 2 + self.outer_offset
        out[a == HALF_PI] = self.cap
        return _scalar_or_array(out)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Non-negative angles where the curve is not smooth."""
        pts = {HALF_PI}
        if 0.0 < self.phi_star < HALF_PI:
            pts.add(self.phi_star)
        return tuple(sorted(pts))


def _bisect_star(curve_inner, cap: float, hi: float) -> float:
    lo = 0.0
    while hi - lo > _STAR_ATOL:
        mid = 0.5 * (lo + hi)
        if curve_inner(mid) >= cap:
            hi = mid
        else:
            lo = mid
    return hi


def build_phase_error_curve(spec: EnsembleSpec) -> PhaseErrorCurve:
    """Stitch the inner, saturation and wrap-around branches into one curve.

    The inner branch is capped by the saturation value.  When the saturation
    value does not exceed the phi = 0 error (coherent states, weak squeezing)
    the cap is raised to the phi = 0 error so that the curve never drops
    below the linearized result there.
    """
    spec = validate_spec(spec, continuous_n=True)
    n, c = spec.atom_count, spec.contrast
    c2, c1 = spec.ramsey_contrast, spec.prep_contrast
    loss = (1.0 - c) / (c * c * n)
    base = (
        spec.xi2 / (c * n)
        + loss
        - c2 * (1.0 - c1) / (c * c * n) * math.cos(spec.squeeze_angle) ** 2
    )
    tan2_coef = _antisqueeze_term(spec) / (2.0 * c * n * n) + loss
    dmax2 = max_phase_error(spec) ** 2
    at_zero = max(base, 0.0)
    cap = max(dmax2, at_zero)

    def inner(p):
        return max(base + tan2_coef * math.tan(p) ** 2, 0.0)

    if tan2_coef <= 0.0:
        phi_star = HALF_PI
    elif cap <= at_zero:
        phi_star = 0.0
    else:
        # bracket strictly inside (0, pi/2) where tan is finite
        hi = math.atan(math.sqrt(max(cap - base, 0.0) / tan2_coef)) + 4 * _STAR_ATOL
        phi_star = min(_bisect_star(inner, cap, min(hi, HALF_PI)), HALF_PI)
    return PhaseErrorCurve(
        spec=spec,
        phi_star=phi_star,
        max_error_sq=dmax2,
        cap=cap,
        base=base,
        tan2_coef=tan2_coef,
        outer_offset=cap,
    )


def stitch_angle_closed_form(curve: PhaseErrorCurve) -> float:
    """Analytic stitch angle, arctan(sqrt((cap - base) / tan2_coef))."""
    if curve.tan2_coef <= 0:
        return HALF_PI
    return math.atan(math.sqrt(max(curve.cap - curve.base, 0.0) / curve.tan2_coef))
