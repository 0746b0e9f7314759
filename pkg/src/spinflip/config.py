"""Run configuration: key=value files with explicit unit suffixes.

The format is one ``key = value`` pair per line; ``#`` starts a comment and
blank lines are ignored. Every physical quantity carries a unit suffix
(times: ns/us/ms/s, fields: mG/G/T, frequencies: Hz/kHz/MHz); bare numbers
are rejected so no run can silently mix unit systems. Unknown keys are
rejected with the offending key named.

Every CSV the CLI writes embeds its fully resolved configuration as
``# key=value`` comment lines behind a marker, and such a file can be fed
back through ``--config`` to reproduce the run bit-identically.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields

from .core import FieldMode, FieldModel, SpinSystem
from .experiments import Engines, SweepConfig
from .propagator import Basis, PropagationSettings

CSV_CONFIG_MARKER = "# spinflip-config-v1"

# Default calibration: a compact Ioffe/quadrupole coil pair with the
# quadrupole turn-off fixed at 117.7 us. With these amplitudes the stock
# tau_i grid sweeps the reversal from fully adiabatic (all population
# retained) to strongly nonadiabatic (mostly flipped), with the field
# rotation frequency at the reversal crossing the Larmor frequency on the
# way. The coil fields at the atoms are calibration knobs, not measured
# quantities.
_DEFAULTS = {
    "spin_j": 2.0,
    "g_factor": 0.5,
    "m0": 2.0,
    "b_y_ioffe": 0.040e-4,  # T (0.040 G)
    "b_y_quad": 0.034e-4,  # T (0.034 G)
    "b_z_ioffe": 2.0e-4,  # T (2 G)
    "b_z_quad": 1.5e-4,  # T (1.5 G)
    "tau_i": 30.3e-6,
    "tau_q": 117.7e-6,
    "tau_i_values": (117.7e-6, 30.3e-6, 16.1e-6, 11.4e-6, 7.7e-6, 5.8e-6, 4.4e-6),
    "mode": FieldMode.LINEARIZED,
    "engines": Engines.BOTH,
    "k_coeff": None,
    "f_rot": None,
    "rel_tol": 1e-11,
    "abs_tol": 1e-13,
    "window_ratio": 400.0,
    "n_samples": 1000,
    "trace_basis": Basis.LAB_Z,
    "t_start": None,
    "t_end": None,
    "out": None,
    "plot": None,
}


class ConfigError(Exception):
    """A configuration problem; carries the offending key."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config field '{key}': {message}")


_TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}
_FIELD_UNITS = {"T": 1.0, "G": 1e-4, "mG": 1e-7}
_FREQ_UNITS = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6}

_QUANTITY_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([A-Za-z]*)$")


def parse_quantity(text: str, units: dict[str, float], key: str) -> float:
    """Number with a mandatory unit suffix, converted to SI."""
    match = _QUANTITY_RE.match(text.strip())
    if match is None:
        raise ConfigError(key, f"cannot parse quantity {text!r}")
    value, suffix = match.groups()
    if suffix not in units:
        expected = ", ".join(sorted(units))
        raise ConfigError(key, f"bad or missing unit suffix in {text!r} (expected one of: {expected})")
    return float(value) * units[suffix]


def parse_float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse number {text!r}") from None


def parse_int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse integer {text!r}") from None


def parse_half_integer(text: str, key: str) -> float:
    """Values like '2', '-1', '1/2' or '-3/2' (also plain decimals)."""
    text = text.strip()
    if "/" in text:
        num, _, den = text.partition("/")
        try:
            value = float(num) / float(den)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(key, f"cannot parse fraction {text!r}") from None
    else:
        value = parse_float(text, key)
    if abs(2 * value - round(2 * value)) > 1e-9:
        raise ConfigError(key, f"{text!r} is not a multiple of 1/2")
    return round(2 * value) / 2


def _parse_time_list(text: str, key: str) -> tuple[float, ...]:
    parts = [p for p in (piece.strip() for piece in text.split(",")) if p]
    if not parts:
        raise ConfigError(key, "list must not be empty")
    return tuple(parse_quantity(p, _TIME_UNITS, key) for p in parts)


def _parse_enum(enum_cls, text: str, key: str):
    try:
        return enum_cls(text.strip().lower())
    except ValueError:
        choices = ", ".join(e.value for e in enum_cls)
        raise ConfigError(key, f"expected one of: {choices}; got {text!r}") from None


_PARSERS = {
    "spin_j": lambda t, k: parse_half_integer(t, k),
    "g_factor": parse_float,
    "m0": lambda t, k: parse_half_integer(t, k),
    "b_y_ioffe": lambda t, k: parse_quantity(t, _FIELD_UNITS, k),
    "b_y_quad": lambda t, k: parse_quantity(t, _FIELD_UNITS, k),
    "b_z_ioffe": lambda t, k: parse_quantity(t, _FIELD_UNITS, k),
    "b_z_quad": lambda t, k: parse_quantity(t, _FIELD_UNITS, k),
    "tau_i": lambda t, k: parse_quantity(t, _TIME_UNITS, k),
    "tau_q": lambda t, k: parse_quantity(t, _TIME_UNITS, k),
    "tau_i_values": _parse_time_list,
    "mode": lambda t, k: _parse_enum(FieldMode, t, k),
    "engines": lambda t, k: _parse_enum(Engines, t, k),
    "k_coeff": parse_float,
    "f_rot": lambda t, k: parse_quantity(t, _FREQ_UNITS, k),
    "rel_tol": parse_float,
    "abs_tol": parse_float,
    "window_ratio": parse_float,
    "n_samples": parse_int,
    "trace_basis": lambda t, k: _parse_enum(Basis, t, k),
    "t_start": lambda t, k: parse_quantity(t, _TIME_UNITS, k),
    "t_end": lambda t, k: parse_quantity(t, _TIME_UNITS, k),
    "out": lambda t, k: t.strip(),
    "plot": lambda t, k: t.strip(),
}


@dataclass
class RunConfig:
    """Fully resolved run parameters (SI units)."""

    spin_j: float = _DEFAULTS["spin_j"]
    g_factor: float = _DEFAULTS["g_factor"]
    m0: float = _DEFAULTS["m0"]
    b_y_ioffe: float = _DEFAULTS["b_y_ioffe"]
    b_y_quad: float = _DEFAULTS["b_y_quad"]
    b_z_ioffe: float = _DEFAULTS["b_z_ioffe"]
    b_z_quad: float = _DEFAULTS["b_z_quad"]
    tau_i: float = _DEFAULTS["tau_i"]
    tau_q: float = _DEFAULTS["tau_q"]
    tau_i_values: tuple[float, ...] = _DEFAULTS["tau_i_values"]
    mode: FieldMode = _DEFAULTS["mode"]
    engines: Engines = _DEFAULTS["engines"]
    k_coeff: float | None = _DEFAULTS["k_coeff"]
    f_rot: float | None = _DEFAULTS["f_rot"]
    rel_tol: float = _DEFAULTS["rel_tol"]
    abs_tol: float = _DEFAULTS["abs_tol"]
    window_ratio: float = _DEFAULTS["window_ratio"]
    n_samples: int = _DEFAULTS["n_samples"]
    trace_basis: Basis = _DEFAULTS["trace_basis"]
    t_start: float | None = _DEFAULTS["t_start"]
    t_end: float | None = _DEFAULTS["t_end"]
    out: str | None = _DEFAULTS["out"]
    plot: str | None = _DEFAULTS["plot"]

    def apply(self, key: str, raw_value: str) -> None:
        """Set one field from its textual form; unknown keys are rejected."""
        if key not in _PARSERS:
            raise ConfigError(key, "unknown key")
        setattr(self, key, _PARSERS[key](raw_value, key))

    def validate(self) -> None:
        """Cross-field checks; raises ConfigError naming the bad field."""
        if self.two_j < 1:
            raise ConfigError("spin_j", f"spin must be at least 1/2, got {self.spin_j}")
        if (round(2 * self.m0) - self.two_j) % 2 != 0 or abs(2 * self.m0) > self.two_j:
            raise ConfigError("m0", f"{self.m0} is not a level of a spin-{self.spin_j} system")
        for name in ("tau_i", "tau_q"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, "must be positive")
        for name in ("b_y_ioffe", "b_y_quad", "b_z_ioffe", "b_z_quad"):
            if getattr(self, name) < 0:
                raise ConfigError(name, "must be non-negative")
        if any(v <= 0 for v in self.tau_i_values):
            raise ConfigError("tau_i_values", "all values must be positive")
        for name in ("rel_tol", "abs_tol"):
            if not 0 < getattr(self, name) <= 1e-3:
                raise ConfigError(name, "must lie in (0, 1e-3]")
        if self.window_ratio <= 0:
            raise ConfigError("window_ratio", "must be positive")
        if self.n_samples < 2:
            raise ConfigError("n_samples", "need at least two samples")
        if self.f_rot is not None and self.f_rot <= 0:
            raise ConfigError("f_rot", "must be positive")

    # -- derived domain objects -------------------------------------------

    @property
    def two_j(self) -> int:
        return round(2 * self.spin_j)

    def spin_system(self) -> SpinSystem:
        return SpinSystem(two_j=self.two_j, g_factor=self.g_factor)

    def field_model(self, tau_i: float | None = None) -> FieldModel:
        return FieldModel(
            b_y_ioffe=self.b_y_ioffe,
            b_y_quad=self.b_y_quad,
            b_z_ioffe=self.b_z_ioffe,
            b_z_quad=self.b_z_quad,
            tau_i=self.tau_i if tau_i is None else tau_i,
            tau_q=self.tau_q,
            mode=self.mode,
        )

    def ramp_model(self) -> FieldModel:
        """Model for a trace run: from f_rot if given, else the coil model."""
        if self.f_rot is not None:
            a_y = self.b_y_ioffe + self.b_y_quad
            if a_y <= 0:
                raise ConfigError("b_y_quad", "f_rot runs need a positive transverse field")
            return FieldModel.from_ramp(
                transverse_field=a_y,
                sweep_rate=2 * math.pi * a_y * self.f_rot,
            )
        return self.field_model()

    def settings(self, sys: SpinSystem, model: FieldModel, basis: Basis) -> PropagationSettings:
        if self.t_start is not None and self.t_end is not None:
            return PropagationSettings(
                t_start=self.t_start,
                t_end=self.t_end,
                rel_tol=self.rel_tol,
                abs_tol=self.abs_tol,
                basis_out=basis,
            )
        return PropagationSettings.around_reversal(
            sys,
            model,
            ratio=self.window_ratio,
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            basis_out=basis,
        )

    def sweep_config(self) -> SweepConfig:
        return SweepConfig(
            sys=self.spin_system(),
            base_model=self.field_model(),
            m0=self.m0,
            tau_i_values=self.tau_i_values,
            k=self.k_coeff,
            engines=self.engines,
            window_ratio=self.window_ratio,
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
        )


def _format_value(name: str, value) -> str:
    if isinstance(value, FieldMode) or isinstance(value, Engines) or isinstance(value, Basis):
        return value.value
    if isinstance(value, tuple):
        return ", ".join(f"{v!r}s" for v in value)
    if name in ("tau_i", "tau_q", "t_start", "t_end"):
        return f"{value!r}s"
    if name.startswith("b_"):
        return f"{value!r}T"
    if name == "f_rot":
        return f"{value!r}Hz"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_echo(cfg: RunConfig) -> list[tuple[str, str]]:
    """Canonical (key, value) pairs that reproduce cfg when re-parsed."""
    pairs = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None or f.name in ("out", "plot"):
            continue
        pairs.append((f.name, _format_value(f.name, value)))
    return pairs


def parse_config_lines(lines, cfg: RunConfig, source: str = "<config>") -> RunConfig:
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(key.strip() or f"{source}:{lineno}", f"expected 'key = value', got {line!r}")
        cfg.apply(key.strip(), value.strip())
    return cfg


def _parse_embedded_csv_config(lines, cfg: RunConfig) -> RunConfig:
    for raw in lines:
        if not raw.startswith("#"):
            break
        line = raw[1:].strip()
        if not line or "=" not in line:
            continue
        key, _, value = line.partition("=")
        cfg.apply(key.strip(), value.strip())
    return cfg


def load_config(path: str, cfg: RunConfig | None = None) -> RunConfig:
    """Read a config file, or the config echoed into a previously written CSV."""
    cfg = cfg if cfg is not None else RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if lines and lines[0].strip() == CSV_CONFIG_MARKER:
        return _parse_embedded_csv_config(lines[1:], cfg)
    return parse_config_lines(lines, cfg, source=path)
