"""Simulation configuration: defaults, TOML loading, and echo serialization.

The TOML layout mirrors the parameter dataclasses one table per block:
[sim], [vehicle], [battery], [thermal], [supercap], [fuzzy], [filter],
[fade]. Every key is optional and overrides the built-in default; unknown
keys or tables are rejected loudly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .battery import BatteryParams, ThermalParams
from .drive_cycle import VehicleParams
from .errors import ConfigError
from .fuzzy import FuzzyRuleBase, default_rule_base, load_rule_base
from .life import FadeParams
from .supercap import SupercapParams

MODES = ("hess", "single_ess")
HISTORY_SOURCES = ("commanded", "raw")


@dataclass(frozen=True)
class FilterConfig:
    """Savitzky-Golay stage: mode-1 window/order scan and mode-2 window set."""

    mode1_half_width: int = 5
    mode1_max_order: int = 4
    mode2_half_widths: tuple = (3, 5, 7)
    mode2_order: int = 2
    history_source: str = "commanded"

    def __post_init__(self):
        object.__setattr__(self, "mode2_half_widths", tuple(int(m) for m in self.mode2_half_widths))
        n = 2 * self.mode1_half_width + 1
        if not 1 <= self.mode1_max_order <= n - 2:
            raise ConfigError(
                f"mode1_max_order must be in [1, {n - 2}] for half width {self.mode1_half_width}"
            )
        if not all(2 * m + 1 > self.mode2_order + 1 for m in self.mode2_half_widths):
            raise ConfigError(f"every mode2 window must exceed order {self.mode2_order} + 1 samples")
        if self.history_source not in HISTORY_SOURCES:
            raise ConfigError(f"history_source must be one of {HISTORY_SOURCES}")

    @property
    def min_history(self) -> int:
        """Shortest history that lets any filter stage run."""
        return min(2 * self.mode1_half_width + 1, min(2 * m + 1 for m in self.mode2_half_widths))


@dataclass(frozen=True)
class FuzzyConfig:
    """Controller wiring: rule-base source and the demand normalization."""

    rule_file: str = ""
    p_peak_w: float = 50000.0

    def __post_init__(self):
        if not self.p_peak_w > 0:
            raise ConfigError(f"p_peak_w must be positive, got {self.p_peak_w}")

    def rule_base(self) -> FuzzyRuleBase:
        if self.rule_file:
            return load_rule_base(self.rule_file)
        return default_rule_base()


@dataclass(frozen=True)
class SimConfig:
    mode: str = "hess"
    dt_s: float = 1.0
    soc_bat_init: float = 1.0
    soc_sc_init: float = 0.6
    temp_init_k: float = 298.15
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    battery: BatteryParams = field(default_factory=BatteryParams)
    thermal: ThermalParams = field(default_factory=ThermalParams)
    supercap: SupercapParams = field(default_factory=SupercapParams)
    fuzzy: FuzzyConfig = field(default_factory=FuzzyConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    fade: FadeParams = field(default_factory=FadeParams)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.dt_s > 0:
            raise ConfigError(f"dt_s must be positive, got {self.dt_s}")
        if not self.battery.soc_min <= self.soc_bat_init <= self.battery.soc_max:
            raise ConfigError(
                f"soc_bat_init {self.soc_bat_init} outside "
                f"[{self.battery.soc_min}, {self.battery.soc_max}]"
            )
        if not 0.0 <= self.soc_sc_init <= 1.0:
            raise ConfigError(f"soc_sc_init must be in [0, 1], got {self.soc_sc_init}")
        if not self.temp_init_k > 0:
            raise ConfigError(f"temp_init_k must be positive, got {self.temp_init_k}")


_SECTIONS = {
    "sim": None,
    "vehicle": VehicleParams,
    "battery": BatteryParams,
    "thermal": ThermalParams,
    "supercap": SupercapParams,
    "fuzzy": FuzzyConfig,
    "filter": FilterConfig,
    "fade": FadeParams,
}
_SIM_KEYS = ("mode", "dt_s", "soc_bat_init", "soc_sc_init", "temp_init_k")


def default_config() -> SimConfig:
    return SimConfig()


def load_config(path, overrides: dict = None) -> SimConfig:
    """Build a SimConfig from a TOML file plus optional {section: {key: val}}
    overrides (the CLI uses these for flags like --mode)."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    return config_from_dict(raw, overrides, source=str(path))


def config_from_dict(raw: dict, overrides: dict = None, source: str = "config") -> SimConfig:
    for key, value in raw.items():
        if not isinstance(value, dict):
            raise ConfigError(f"{source}: top-level key {key!r} must be a table")
    data = {k: dict(v) for k, v in raw.items()}
    for section, values in (overrides or {}).items():
        data.setdefault(section, {})
        data[section].update(values)

    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"{source}: unknown section(s) {sorted(unknown)}")

    kwargs = {}
    sim = data.pop("sim", {})
    bad = set(sim) - set(_SIM_KEYS)
    if bad:
        raise ConfigError(f"{source}: unknown [sim] key(s) {sorted(bad)}")
    kwargs.update(sim)

    for section, cls in _SECTIONS.items():
        if cls is None or section not in data:
            continue
        values = data[section]
        names = {f.name for f in dataclasses.fields(cls)}
        bad = set(values) - names
        if bad:
            raise ConfigError(f"{source}: unknown [{section}] key(s) {sorted(bad)}")
        try:
            kwargs[section] = cls(**values)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{source}: [{section}]: {exc}") from None

    try:
        return SimConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def config_echo(cfg: SimConfig) -> dict:
    """Deterministic plain-dict form of the config for report payloads."""

    def scrub(value):
        if dataclasses.is_dataclass(value):
            return {k: scrub(v) for k, v in sorted(dataclasses.asdict(value).items())}
        if isinstance(value, tuple):
            return [scrub(v) for v in value]
        return value

    return {
        "mode": cfg.mode,
        "dt_s": cfg.dt_s,
        "soc_bat_init": cfg.soc_bat_init,
        "soc_sc_init": cfg.soc_sc_init,
        "temp_init_k": cfg.temp_init_k,
        "vehicle": scrub(cfg.vehicle),
        "battery": scrub(cfg.battery),
        "thermal": scrub(cfg.thermal),
        "supercap": scrub(cfg.supercap),
        "fuzzy": scrub(cfg.fuzzy),
        "filter": scrub(cfg.filter),
        "fade": scrub(cfg.fade),
    }


def default_config_path() -> Path:
    """Path of the fully commented default config shipped with the package."""
    from importlib import resources

    return Path(str(resources.files("hesskit.data").joinpath("default_config.toml")))
