"""
Scenario and sweep files

INI files read with configparser. Every numeric value carries a unit suffix
(see utils.units). Parse errors name the file, line and field.
"""

import configparser
import math
import re
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from core.analytic import DEFAULT_WINDOW_FACTOR, DEFAULT_WINDOW_POINTS, MotionCase, MotionKind
from core.errors import ConfigError
from core.params import CircuitParams, DampingParams, DerivedCouplings, derive_couplings
from core.settings import ModelOptions
from utils.units import parse_quantity

ORACLE_MODES = ("none", "markov", "discretized", "both")
DRESSINGS = ("effective", "exact", "both")
SWEEP_PARAMETERS = {
    "zeta2_over_delta": "frequency",
    "n_c": "dimensionless",
    "gamma_c": "frequency",
    "lambda": "frequency",
}


@dataclass(frozen=True)
class GridSpec:
    points: int = DEFAULT_WINDOW_POINTS
    window_factor: float = DEFAULT_WINDOW_FACTOR
    wide_points: int = 0


@dataclass(frozen=True)
class OracleSpec:
    mode: str = "none"
    dressing: str = "effective"
    phonon_truncation: int = 1
    t_max: Optional[float] = None
    mode_count: int = 2000
    half_bandwidth: float = 100.0
    bath_t_max: float = 4.0
    linf_tolerance: float = 0.05
    position_tolerance: float = 0.05
    shift_tolerance: float = 0.02

    @property
    def runs_markov(self) -> bool:
        return self.mode in ("markov", "both")

    @property
    def runs_discretized(self) -> bool:
        return self.mode in ("discretized", "both")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a scenario run needs, already converted to internal units."""
    name: str
    couplings: DerivedCouplings
    damping: DampingParams
    case_labels: Tuple[str, ...]
    n_c: int = 1
    description: str = ""
    grid: GridSpec = GridSpec()
    oracle: OracleSpec = OracleSpec()
    options: ModelOptions = ModelOptions()
    output_dir: Optional[Path] = None
    circuit: Optional[CircuitParams] = None
    source: str = ""

    def __post_init__(self):
        if not self.case_labels:
            raise ValueError("at least one motion case must be selected")

    @property
    def cases(self) -> Tuple[MotionCase, ...]:
        return tuple(MotionCase.from_label(label, self.couplings.omega_R, self.n_c)
                     for label in self.case_labels)

    def parameters(self) -> Dict[str, Any]:
        """Flat record for the run manifest."""
        data: Dict[str, Any] = {
            "name": self.name,
            "source": self.source,
            "description": self.description,
            "cases": list(self.case_labels),
            "n_c": self.n_c,
            "couplings_MHz": self.couplings.to_dict(),
            "damping_MHz": self.damping.to_dict(),
            "gamma_R_MHz": self.damping.gamma_R(self.couplings.nu),
            "grid": asdict(self.grid),
            "oracle": asdict(self.oracle),
            "model": self.options.to_dict(),
        }
        gamma_R = self.damping.gamma_R(self.couplings.nu)
        if gamma_R is not None and self.couplings.zeta:
            data["gamma_R_over_zeta"] = gamma_R / self.couplings.zeta
            # same Q_R read against the NAMR frequency instead of nu
            at_omega_R = self.couplings.omega_R / self.damping.Q_R
            data["gamma_R_over_zeta_at_omega_R"] = at_omega_R / self.couplings.zeta
        if self.circuit is not None:
            data["circuit_SI"] = self.circuit.to_dict()
        return data


@dataclass(frozen=True)
class SweepSpec:
    """One swept parameter over a fixed base scenario."""
    parameter: str
    values: Tuple[float, ...]
    base: ScenarioConfig
    case_labels: Tuple[str, ...] = ("Q",)
    name: str = "sweep"
    output_dir: Optional[Path] = None

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"cannot sweep {self.parameter!r}; choose from {sorted(SWEEP_PARAMETERS)}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        for v in self.values:
            if not math.isfinite(v):
                raise ValueError(f"sweep value {v} is not finite")
        if self.parameter == "n_c":
            for v in self.values:
                if v < 0 or v != int(v):
                    raise ValueError(f"n_c sweep values must be non-negative integers, got {v}")

    def scenario_for(self, value: float) -> ScenarioConfig:
        """Base scenario with the swept parameter set to ``value``."""
        base = replace(self.base, case_labels=self.case_labels)
        dc, dp = base.couplings, base.damping
        if self.parameter == "zeta2_over_delta":
            return replace(base, couplings=dc.with_zeta(math.sqrt(max(value, 0.0) * dc.delta)))
        if self.parameter == "n_c":
            return replace(base, n_c=int(value))
        if self.parameter == "gamma_c":
            return replace(base, damping=replace(dp, gamma_c=value, Q_nu=None))
        return replace(base, couplings=dc.with_lambda(value))


class _Reader:
    """configparser wrapper that converts values and reports file positions."""

    def __init__(self, text: str, path: Any) -> None:
        self.text = text
        self.path = path
        self.parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        self.parser.optionxform = str
        try:
            self.parser.read_string(text, source=str(path))
        except configparser.MissingSectionHeaderError as e:
            raise ConfigError("content before the first [section] header", path, e.lineno) from e
        except configparser.ParsingError as e:
            line = e.errors[0][0] if e.errors else None
            raise ConfigError("malformed line", path, line) from e
        except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
            raise ConfigError(e.message, path, e.lineno) from e

    def has(self, section: str, key: Optional[str] = None) -> bool:
        if not self.parser.has_section(section):
            return False
        return key is None or self.parser.has_option(section, key)

    def line_of(self, section: str, key: Optional[str] = None) -> Optional[int]:
        current = None
        for number, raw in enumerate(self.text.splitlines(), start=1):
            stripped = raw.strip()
            header = re.match(r"^\[([^\]]+)\]", stripped)
            if header:
                current = header.group(1).strip()
                if key is None and current == section:
                    return number
                continue
            if current == section and key is not None:
                if re.match(rf"^{re.escape(key)}\s*[=:]", stripped):
                    return number
        return None

    def error(self, message: str, section: str, key: Optional[str] = None) -> ConfigError:
        field_name = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigError(message, self.path, self.line_of(section, key), field_name)

    def raw(self, section: str, key: str) -> str:
        if not self.has(section, key):
            raise self.error("missing required value", section, key)
        return self.parser.get(section, key)

    def _convert(self, section: str, key: str, convert: Callable[[str], Any]) -> Any:
        raw = self.raw(section, key)
        try:
            return convert(raw)
        except ValueError as e:
            raise self.error(str(e), section, key) from e

    def quantity(self, section: str, key: str, kind: str, default: Optional[float] = None) -> Optional[float]:
        if not self.has(section, key):
            if default is None:
                raise self.error("missing required value", section, key)
            return default
        return self._convert(section, key, lambda s: parse_quantity(s, kind))

    def optional_quantity(self, section: str, key: str, kind: str) -> Optional[float]:
        if not self.has(section, key):
            return None
        return self._convert(section, key, lambda s: parse_quantity(s, kind))

    def integer(self, section: str, key: str, default: int) -> int:
        if not self.has(section, key):
            return default

        def to_int(s: str) -> int:
            value = float(parse_quantity(s, "dimensionless"))
            if value != int(value):
                raise ValueError(f"{s!r} is not an integer")
            return int(value)
        return self._convert(section, key, to_int)

    def boolean(self, section: str, key: str, default: bool) -> bool:
        if not self.has(section, key):
            return default
        try:
            return self.parser.getboolean(section, key)
        except ValueError as e:
            raise self.error(str(e), section, key) from e

    def choice(self, section: str, key: str, choices: Tuple[str, ...], default: str) -> str:
        if not self.has(section, key):
            return default
        value = self.parser.get(section, key).strip().lower()
        if value not in choices:
            raise self.error(f"expected one of {', '.join(choices)}, got {value!r}", section, key)
        return value

    def text_value(self, section: str, key: str, default: str = "") -> str:
        if not self.has(section, key):
            return default
        return self.parser.get(section, key).strip()

    def list_value(self, section: str, key: str) -> List[str]:
        return [item.strip() for item in self.raw(section, key).split(",") if item.strip()]


def _read_couplings(r: _Reader, options: ModelOptions) -> Tuple[DerivedCouplings, Optional[CircuitParams]]:
    if r.has("circuit"):
        s = "circuit"
        try:
            circuit = CircuitParams(
                c_J=r.quantity(s, "c_J", "capacitance"),
                C0=r.quantity(s, "C0", "capacitance"),
                Cd=r.quantity(s, "Cd", "capacitance"),
                Cg=r.quantity(s, "Cg", "capacitance"),
                C_t=r.quantity(s, "C_t", "capacitance"),
                L_tlr=r.quantity(s, "L_tlr", "length"),
                V_g=r.quantity(s, "V_g", "voltage"),
                V_x=r.quantity(s, "V_x", "voltage"),
                flux_ratio=r.quantity(s, "flux_ratio", "dimensionless"),
                eps_J=r.quantity(s, "eps_J", "frequency"),
                m=r.quantity(s, "m", "mass"),
                d=r.quantity(s, "d", "length"),
                omega_R=2.0 * math.pi * 1e6 * r.quantity(s, "omega_R", "frequency"),
            )
            nu = r.quantity(s, "nu", "frequency")
            return derive_couplings(circuit, nu, options), circuit
        except ConfigError:
            raise
        except ValueError as e:
            raise r.error(str(e), s) from e

    s = "couplings"
    if not r.has(s):
        raise r.error("either [couplings] or [circuit] is required", s)
    nu = r.quantity(s, "nu", "frequency")
    omega0 = r.quantity(s, "omega0", "frequency", default=nu)
    omega_R = r.quantity(s, "omega_R", "frequency")
    lam = r.quantity(s, "lambda", "frequency")
    E_C = r.quantity(s, "E_C", "frequency", default=0.0)
    zeta = r.optional_quantity(s, "zeta", "frequency")
    ratio = r.optional_quantity(s, "zeta2_over_delta", "frequency")
    if (zeta is None) == (ratio is None):
        raise r.error("give exactly one of zeta or zeta2_over_delta", s)
    if zeta is None:
        if omega0 <= omega_R:
            raise r.error("zeta2_over_delta needs omega0 > omega_R", s, "zeta2_over_delta")
        if ratio < 0:
            raise r.error("must be non-negative", s, "zeta2_over_delta")
        zeta = math.sqrt(ratio * (omega0 - omega_R))
    try:
        dc = DerivedCouplings.from_frequencies(nu, omega0, omega_R, lam, zeta, E_C=E_C, options=options)
    except ValueError as e:
        raise r.error(str(e), s) from e
    return dc, None


def _read_damping(r: _Reader, nu: float) -> DampingParams:
    s = "damping"
    if not r.has(s):
        raise r.error("section is required", s)
    Q_R = r.optional_quantity(s, "Q_R", "dimensionless")
    try:
        if r.has(s, "gamma_c"):
            Q_nu = r.optional_quantity(s, "Q_nu", "dimensionless")
            return DampingParams(
                gamma_c=r.quantity(s, "gamma_c", "frequency"),
                gamma_d=r.quantity(s, "gamma_d", "frequency"),
                Q_nu=Q_nu,
                Q_R=Q_R,
            )
        return DampingParams.from_quality(
            nu,
            r.quantity(s, "Q_nu", "dimensionless"),
            gamma_d_ratio=r.quantity(s, "gamma_d_ratio", "dimensionless", default=0.6),
            Q_R=Q_R,
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise r.error(str(e), s) from e


def _read_options(r: _Reader) -> ModelOptions:
    s = "model"
    try:
        return ModelOptions(
            alpha_convention=r.choice(s, "alpha_convention", ("paper", "standard"), "paper"),
            swap_damping=r.boolean(s, "swap_damping", False),
            dispersive_threshold=r.quantity(s, "dispersive_threshold", "dimensionless", default=0.1),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise r.error(str(e), s) from e


def _read_grid(r: _Reader) -> GridSpec:
    s = "grid"
    grid = GridSpec(
        points=r.integer(s, "points", DEFAULT_WINDOW_POINTS),
        window_factor=r.quantity(s, "window_factor", "dimensionless", default=DEFAULT_WINDOW_FACTOR),
        wide_points=r.integer(s, "wide_points", 0),
    )
    if grid.points < 3:
        raise r.error("need at least 3 points per window", s, "points")
    if not grid.window_factor > 0:
        raise r.error("must be positive", s, "window_factor")
    return grid


def _read_oracle(r: _Reader) -> OracleSpec:
    s = "oracle"
    spec = OracleSpec(
        mode=r.choice(s, "mode", ORACLE_MODES, "none"),
        dressing=r.choice(s, "dressing", DRESSINGS, "effective"),
        phonon_truncation=r.integer(s, "phonon_truncation", 1),
        t_max=r.optional_quantity(s, "t_max", "time"),
        mode_count=r.integer(s, "mode_count", 2000),
        half_bandwidth=r.quantity(s, "half_bandwidth", "frequency", default=100.0),
        bath_t_max=r.quantity(s, "bath_t_max", "time", default=4.0),
        linf_tolerance=r.quantity(s, "linf_tolerance", "dimensionless", default=0.05),
        position_tolerance=r.quantity(s, "position_tolerance", "frequency", default=0.05),
        shift_tolerance=r.quantity(s, "shift_tolerance", "frequency", default=0.02),
    )
    if spec.phonon_truncation < 1:
        raise r.error("must be at least 1", s, "phonon_truncation")
    return spec


def parse_scenario(text: str, path: Any = "<string>", name: Optional[str] = None) -> ScenarioConfig:
    """
    Build a ScenarioConfig from INI text.

    Raises:
        ConfigError: with file, line and field of the offending entry
    """
    r = _Reader(text, path)
    options = _read_options(r)
    couplings, circuit = _read_couplings(r, options)
    damping = _read_damping(r, couplings.nu)

    s = "scenario"
    labels = tuple(label.upper() for label in r.list_value(s, "cases")) if r.has(s, "cases") else ("N",)
    for label in labels:
        if label not in {k.value for k in MotionKind}:
            raise r.error(f"unknown case {label!r}; expected N, C or Q", s, "cases")
    n_c = r.integer("motion", "n_c", 1)
    if n_c < 0:
        raise r.error("must be non-negative", "motion", "n_c")

    output_dir = r.text_value("output", "directory") or None
    try:
        return ScenarioConfig(
            name=r.text_value(s, "name", name or Path(str(path)).stem),
            description=r.text_value(s, "description"),
            couplings=couplings,
            damping=damping,
            case_labels=labels,
            n_c=n_c,
            grid=_read_grid(r),
            oracle=_read_oracle(r),
            options=options,
            output_dir=Path(output_dir) if output_dir else None,
            circuit=circuit,
            source=str(path),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise r.error(str(e), s) from e


def load_scenario(path: Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read scenario file: {e}", path) from e
    return parse_scenario(text, path)


def parse_sweep(text: str, path: Any = "<string>",
                resolve_base: Optional[Callable[[str], ScenarioConfig]] = None) -> SweepSpec:
    """
    Build a SweepSpec; ``resolve_base`` maps the ``base`` entry (preset name or
    file) to a ScenarioConfig.
    """
    r = _Reader(text, path)
    s = "sweep"
    if not r.has(s):
        raise r.error("section is required", s)
    parameter = r.raw(s, "parameter").strip()
    if parameter not in SWEEP_PARAMETERS:
        raise r.error(f"expected one of {', '.join(sorted(SWEEP_PARAMETERS))}", s, "parameter")
    kind = SWEEP_PARAMETERS[parameter]
    try:
        values = tuple(parse_quantity(v, kind) for v in r.list_value(s, "values"))
    except ValueError as e:
        raise r.error(str(e), s, "values") from e

    base_ref = r.raw(s, "base").strip()
    if resolve_base is None:
        from cli.presets import resolve_scenario
        resolve_base = resolve_scenario
    base = resolve_base(base_ref)
    labels = tuple(label.upper() for label in r.list_value(s, "cases")) if r.has(s, "cases") else ("Q",)
    output_dir = r.text_value("output", "directory") or None
    try:
        return SweepSpec(parameter=parameter, values=values, base=base, case_labels=labels,
                         name=r.text_value(s, "name", Path(str(path)).stem),
                         output_dir=Path(output_dir) if output_dir else None)
    except ValueError as e:
        raise r.error(str(e), s) from e


def load_sweep(path: Path) -> SweepSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read sweep file: {e}", path) from e
    return parse_sweep(text, path)
