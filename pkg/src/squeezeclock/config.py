"""Run configuration: flat key-value sections, one per subcommand.

Numeric values may carry a ``dB`` suffix (variance dB); lists are comma
separated.  Example::

    [ensemble]
    atom_count = 1e4
    xi2 = -15 dB
    area = 0 dB, 15 dB, 30 dB

    [lo]
    gamma = 1

Parsing normalizes every value, so the canonical text of a parsed config
parses back to the same config.
"""

from __future__ import annotations

import configparser
import hashlib
import itertools
import re
from dataclasses import dataclass, field

from .core import EnsembleSpec, LoModel, SqueezingMethod, SpecError, db_to_linear, validate_spec


class ConfigError(ValueError):
    """Malformed or physically invalid configuration."""


@dataclass(frozen=True)
class Quantity:
    """A number as written: ``value`` in dB when ``db`` is set, else linear."""

    value: float
    db: bool = False

    @property
    def linear(self) -> float:
        return db_to_linear(self.value) if self.db else self.value

    def __str__(self) -> str:
        return f"{_num(self.value)} dB" if self.db else _num(self.value)


def _num(x: float) -> str:
    return repr(float(x))  # shortest text that reads back to the same float


_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(dB)?\s*$", re.IGNORECASE)


def parse_quantity(text: str) -> Quantity:
    m = _QTY.match(text.replace("−", "-"))
    if not m:
        raise ConfigError(f"not a number (optionally with dB suffix): {text!r}")
    return Quantity(float(m.group(1)), m.group(2) is not None)


def _qlist(text):
    items = [t for t in (s.strip() for s in text.split(",")) if t]
    return tuple(parse_quantity(t) for t in items)


def _q(text):
    return parse_quantity(text)


def _int(text):
    q = parse_quantity(text)
    if q.db or q.value != int(q.value):
        raise ConfigError(f"expected an integer, got {text!r}")
    return int(q.value)


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _str(text):
    return text.strip()


def _choice(*options):
    def parse(text):
        t = text.strip().lower()
        if t not in options:
            raise ConfigError(f"expected one of {options}, got {text!r}")
        return t
    return parse


_AXIS_NAMES = ("atom_count", "xi2", "area", "chi2", "prep_contrast", "ramsey_contrast", "theta")


def _axis_keys(i):
    return {
        f"axis{i}": (_choice(*_AXIS_NAMES), None),
        f"axis{i}_start": (_q, None),
        f"axis{i}_stop": (_q, None),
        f"axis{i}_num": (_int, None),
        f"axis{i}_scale": (_choice("auto", "linear", "log", "db"), "auto"),
    }


# section -> key -> (parser, default); None defaults mean "unset"
SCHEMA = {
    "ensemble": {
        "atom_count": (_qlist, (Quantity(1e4),)),
        "xi2": (_qlist, (Quantity(1.0),)),
        "area": (_qlist, (Quantity(1.0),)),
        "chi2": (_qlist, None),
        "prep_contrast": (_qlist, (Quantity(1.0),)),
        "ramsey_contrast": (_qlist, (Quantity(1.0),)),
        "method": (_choice(*(m.value for m in SqueezingMethod)), "measurement"),
        "theta": (_qlist, None),
    },
    "lo": {
        "gamma": (_q, Quantity(1.0)),
        "total_time": (_q, None),
        "distribution": (_choice("gaussian"), "gaussian"),
    },
    "phase-error": {
        "phi_start": (_q, Quantity(-1.0)),
        "phi_stop": (_q, Quantity(1.0)),
        "phi_points": (_int, 201),
        "oracle": (_bool, False),
        "components": (_int, 21),
        "estimator_points": (_int, 801),
    },
    "stability": {
        "gamma_tau_start": (_q, Quantity(1e-3)),
        "gamma_tau_stop": (_q, Quantity(1.0)),
        "points": (_int, 100),
        "spacing": (_choice("log", "linear"), "log"),
    },
    "optimize": {
        "reference": (_choice("perfect", "matched"), "perfect"),
    },
    "map": {**_axis_keys(1), **_axis_keys(2),
            "reference": (_choice("perfect", "matched"), "perfect")},
    "validate": {
        "phi_max": (_q, Quantity(0.2)),
        "phi_points": (_int, 21),
        "rtol": (_q, Quantity(0.1)),
        "components": (_int, 21),
        "estimator_points": (_int, 801),
        "step_check": (_bool, True),
    },
    "experiments": {
        "table": (_str, None),
        "reference": (_choice("perfect", "matched"), "perfect"),
        "extrapolate_to": (_q, None),
        "extrapolate_points": (_int, 0),
    },
}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration: ``sections[name][key]`` holds typed values.

    Only keys that were set explicitly are stored; defaults come from
    SCHEMA through :meth:`get`.
    """

    sections: dict = field(default_factory=dict)
    deterministic: bool = True  # no randomness anywhere in the pipeline

    def get(self, section: str, key: str):
        try:
            _, default = SCHEMA[section][key]
        except KeyError:
            raise ConfigError(f"unknown setting [{section}] {key}") from None
        return self.sections.get(section, {}).get(key, default)

    def canonical_text(self) -> str:
        """Stable text form: schema section order, sorted keys, normalized values."""
        lines = []
        for sec in SCHEMA:
            vals = self.sections.get(sec)
            if not vals:
                continue
            if lines:
                lines.append("")
            lines.append(f"[{sec}]")
            for key in sorted(vals):
                lines.append(f"{key} = {_format(vals[key])}")
        return "\n".join(lines) + "\n" if lines else ""

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()

    def as_dict(self) -> dict:
        return {sec: {k: _format(v) for k, v in sorted(self.sections[sec].items())}
                for sec in SCHEMA if self.sections.get(sec)}

    # -------------------------------------------------------- physics views

    @property
    def gamma(self) -> float:
        return self.get("lo", "gamma").linear

    @property
    def total_time(self) -> float:
        t = self.get("lo", "total_time")
        return 1.0 / self.gamma if t is None else t.linear

    def lo_model(self) -> LoModel:
        try:
            return LoModel(self.gamma, self.get("lo", "distribution"))
        except SpecError as exc:
            raise ConfigError(str(exc)) from exc

    def template(self) -> EnsembleSpec:
        """First spec of the ensemble section (used as the sweep template)."""
        return self.specs()[0]

    def specs(self) -> list[EnsembleSpec]:
        """Cartesian product of all listed ensemble values, validated."""
        g = lambda k: self.get("ensemble", k)  # noqa: E731
        chi2 = g("chi2")
        theta = g("theta")
        lists = [g("atom_count"), g("xi2"), chi2 if chi2 is not None else g("area"),
                 g("prep_contrast"), g("ramsey_contrast"), theta if theta is not None else (None,)]
        for name, vals in zip(("atom_count", "xi2", "chi2/area", "prep_contrast",
                               "ramsey_contrast", "theta"), lists):
            if len(vals) == 0:
                raise ConfigError(f"[ensemble] {name} has no values")
        out = []
        for n, xi2, third, c1, c2, th in itertools.product(*lists):
            xi2_lin = xi2.linear
            chi2_lin = third.linear if chi2 is not None else third.linear / xi2_lin
            spec = EnsembleSpec(
                atom_number(n.linear), xi2_lin, chi2_lin, c1.linear, c2.linear,
                SqueezingMethod(g("method")), None if th is None else th.linear)
            try:
                out.append(validate_spec(spec, continuous_n=True))
            except SpecError as exc:
                raise ConfigError(str(exc)) from exc
        return out


def atom_number(n: float):
    """Integral atom counts as int (1e4 -> 10000); others stay float for continuous sweeps."""
    return int(round(n)) if abs(n - round(n)) <= 1e-9 * max(1.0, abs(n)) else n


def parse_config(text: str) -> RunConfig:
    """Parse config text; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                       empty_lines_in_values=False)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    sections = {}
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]; expected one of {tuple(SCHEMA)}")
        vals = {}
        for key, raw in parser.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown setting [{sec}] {key}")
            vals[key] = SCHEMA[sec][key][0](raw)
        sections[sec] = vals
    return RunConfig(sections)


def canonicalize(text: str) -> str:
    return parse_config(text).canonical_text()


def config_hash(text: str) -> str:
    return parse_config(text).digest()
