"""Domain types shared by the model, the stability engine and the oracle.

All physical inputs are stored on a linear scale; decibel values are
variance dB (factor 10).
"""

from __future__ import annotations

import enum
import math
import numbers
from dataclasses import dataclass, field, replace


class SpecError(ValueError):
    """Raised when ensemble or LO parameters violate a physical constraint."""


def db_to_linear(x: float) -> float:
    return 10.0 ** (x / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise SpecError(f"cannot express non-positive ratio {x!r} in dB")
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class DecibelValue:
    value_db: float

    @property
    def linear(self) -> float:
        return db_to_linear(self.value_db)

    @classmethod
    def from_linear(cls, x: float) -> "DecibelValue":
        return cls(linear_to_db(x))


class SqueezingMethod(str, enum.Enum):
    """Orientation convention for the decohered preparation sub-ensemble.

    Measurement-based squeezing leaves it in the equatorial plane (theta = 0);
    feedback-based squeezing tilts it by arcsin(1/chi).
    """

    MEASUREMENT = "measurement"
    FEEDBACK = "feedback"
    CUSTOM = "custom"


@dataclass(frozen=True)
class EnsembleSpec:
    """Squeezed (or coherent) spin ensemble entering a Ramsey sequence.

    ``xi2`` and ``chi2`` are the squeezed and antisqueezed variances relative
    to the coherent-state value S/2.  ``atom_count`` may be any real >= 2 for
    the analytic model; the quantum oracle requires an even integer.
    """

    atom_count: float
    xi2: float = 1.0
    chi2: float = 1.0
    prep_contrast: float = 1.0
    ramsey_contrast: float = 1.0
    method: SqueezingMethod = SqueezingMethod.MEASUREMENT
    theta: float | None = None
    # derived, filled by validate_spec
    spin: float = field(default=0.0, compare=False)
    area: float = field(default=0.0, compare=False)
    contrast: float = field(default=0.0, compare=False)

    def __post_init__(self):
        # keep the derived fields consistent even for unvalidated instances
        try:
            object.__setattr__(self, "spin", self.atom_count / 2.0)
            object.__setattr__(self, "area", max(self.xi2 * self.chi2, 1.0))
            object.__setattr__(self, "contrast", self.prep_contrast * self.ramsey_contrast)
        except TypeError:
            pass  # rejected later by validate_spec

    @classmethod
    def from_db(cls, atom_count: float, xi2_db: float = 0.0, area_db: float = 0.0,
                **kw) -> "EnsembleSpec":
        """Build a validated spec from squeezing and excess area A^2, both in dB."""
        xi2 = db_to_linear(xi2_db)
        chi2 = db_to_linear(area_db - xi2_db)
        return validate_spec(cls(atom_count, xi2, chi2, **kw), continuous_n=True)

    @property
    def N(self) -> float:
        return self.atom_count

    @property
    def squeeze_angle(self) -> float:
        """Resolved orientation angle theta in radians."""
        if self.theta is not None:
            return self.theta
        if self.method is SqueezingMethod.FEEDBACK:
            return math.asin(1.0 / math.sqrt(self.chi2))
        return 0.0

    @property
    def xi2_db(self) -> float:
        return linear_to_db(self.xi2)

    @property
    def area_db(self) -> float:
        return linear_to_db(self.xi2 * self.chi2)

    def with_(self, **changes) -> "EnsembleSpec":
        """Copy with field changes, re-validated (N may be non-integer)."""
        return validate_spec(replace(self, **changes), continuous_n=True)


# A^2 >= 1 is checked with this relative slack so that chi2 = 1/xi2 built
# from dB values survives rounding.
_AREA_RTOL = 1e-12


def validate_spec(spec: EnsembleSpec, *, continuous_n: bool = False) -> EnsembleSpec:
    """Check physical constraints and return a copy with derived fields set.

    Non-integer atom numbers are rejected unless ``continuous_n`` is set,
    which the analytic sweeps use to treat N as a smooth parameter.
    """
    n = spec.atom_count
    if isinstance(n, bool) or not isinstance(n, numbers.Real) or not math.isfinite(n):
        raise SpecError(f"atom_count must be a finite number, got {n!r}")
    if n < 2:
        raise SpecError(f"atom_count must be >= 2, got {n}")
    if not continuous_n and not float(n).is_integer():
        raise SpecError(f"atom_count must be an integer, got {n}")
    for name in ("xi2", "chi2"):
        v = getattr(spec, name)
        if not (math.isfinite(v) and v > 0):
            raise SpecError(f"{name} must be a positive finite number, got {v!r}")
    if spec.xi2 > 1.0 + _AREA_RTOL:
        raise SpecError(f"xi2 must be <= 1 (squeezed or coherent), got {spec.xi2}")
    area = spec.xi2 * spec.chi2
    if area < 1.0 - _AREA_RTOL:
        raise SpecError(f"excess area A^2 = xi2*chi2 = {area:.6g} < 1 violates the uncertainty bound")
    for name in ("prep_contrast", "ramsey_contrast"):
        c = getattr(spec, name)
        if not (0.0 < c <= 1.0):
            raise SpecError(f"{name} must lie in (0, 1], got {c!r}")
    method = SqueezingMethod(spec.method)
    theta = spec.theta
    if theta is not None:
        if not (0.0 <= theta <= math.pi / 2):
            raise SpecError(f"theta must lie in [0, pi/2], got {theta}")
        method = SqueezingMethod.CUSTOM
    return replace(
        spec,
        atom_count=int(n) if isinstance(n, numbers.Integral) else float(n),
        method=method,
        spin=n / 2.0,
        area=max(area, 1.0),
        contrast=spec.prep_contrast * spec.ramsey_contrast,
    )


def require_integer_atoms(spec: EnsembleSpec) -> int:
    """Atom number as an int, for the exact simulation."""
    n = spec.atom_count
    if float(n) != int(n):
        raise SpecError(f"atom_count must be an integer here, got {n}")
    if int(n) % 2:
        raise SpecError(f"atom_count must be even here, got {int(n)}")
    return int(n)


def ramsey_squeezing_parameter(spec: EnsembleSpec) -> float:
    """Wineland parameter xi_R^2 = xi^2 / C^2, using the prepared-state variance."""
    spec = validate_spec(spec, continuous_n=True)
    return spec.xi2 / spec.contrast**2


@dataclass(frozen=True)
class LoModel:
    """Free-running local oscillator with Gaussian phase diffusion.

    The phase deviation after a Ramsey time tau has standard deviation
    ``gamma * tau``.
    """

    gamma: float = 1.0
    distribution: str = "gaussian"

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise SpecError(f"gamma must be positive, got {self.gamma!r}")
        if self.distribution != "gaussian":
            raise SpecError(f"unsupported LO distribution {self.distribution!r}")

    def phase_std(self, tau: float) -> float:
        return self.gamma * tau
