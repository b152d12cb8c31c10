from __future__ import annotations

import logging
import math
import os
import secrets
import sys
from configparser import ConfigParser
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterable, Mapping


LOGGER = logging.getLogger(__name__)

CONFIG_FILENAME = "canyoncov_config.ini"
SEED_ENV_VAR = "CANYONCOV_SEED"
SIG_DIGITS_FORMAT = "%.6g"
LOG_FORMAT = "%(levelname)s: %(message)s"


class ConfigError(ValueError):
    """Config file could not be parsed, or holds an unknown key or a bad value."""


class DomainError(ValueError):
    """Numeric precondition of a model operation violated."""


class InputDataError(ValueError):
    """Input file is structurally invalid (header, rejected-row ratio, sidecar)."""


def _env_flag(name: str, default: bool = False) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in {"1", "true", "yes", "on"}


def discover_project_root(start: Path | None = None) -> Path:
    env_root = os.getenv("CANYONCOV_ROOT")
    if env_root:
        path = Path(env_root).expanduser().resolve()
        if path.exists():
            return path

    current = (start or Path(__file__).resolve().parent).resolve()
    for candidate in [current, *current.parents]:
        if (candidate / CONFIG_FILENAME).exists() or (candidate / ".git").exists():
            return candidate
    return current


PROJECT_ROOT = discover_project_root()


def project_path(*parts: str) -> Path:
    return PROJECT_ROOT.joinpath(*parts)


# ============================================================
# Configuration
# ============================================================

@dataclass(frozen=True)
class KeySpec:
    kind: type
    default: Any
    minimum: float | None = None
    maximum: float | None = None
    choices: tuple[str, ...] = ()
    strict_minimum: bool = False


CONFIG_SCHEMA: Mapping[str, KeySpec] = MappingProxyType(
    {
        "seed": KeySpec(int, None, minimum=0, maximum=2**63 - 1),
        "frequency_hz": KeySpec(float, 28e9, minimum=0.0, strict_minimum=True),
        "degradation_cdf_file": KeySpec(str, "datos/degradacion_roof_edge.csv"),
        "grid.block_long_m": KeySpec(float, 200.0, minimum=1.0),
        "grid.block_short_m": KeySpec(float, 50.0, minimum=1.0),
        "grid.blocks_x": KeySpec(int, 8, minimum=4, maximum=200),
        "grid.blocks_y": KeySpec(int, 16, minimum=4, maximum=400),
        "grid.site_spacing_long_m": KeySpec(float, 400.0, minimum=1.0),
        "grid.site_spacing_short_m": KeySpec(float, 200.0, minimum=1.0),
        "grid.ue_step_m": KeySpec(float, 3.0, minimum=0.1, maximum=1000.0),
        "budget.tx_power_dbm": KeySpec(float, 28.0, minimum=-50.0, maximum=80.0),
        "budget.antenna_gain_dbi": KeySpec(float, 23.0, minimum=-20.0, maximum=60.0),
        "budget.ue_gain_dbi": KeySpec(float, 6.0, minimum=-20.0, maximum=40.0),
        "budget.noise_figure_db": KeySpec(float, 9.0, minimum=0.0, maximum=30.0),
        "budget.bandwidth_hz": KeySpec(float, 800e6, minimum=0.0, strict_minimum=True),
        "budget.implementation_penalty_db": KeySpec(float, 3.0, minimum=0.0, maximum=20.0),
        "budget.cell_height_m": KeySpec(float, 20.0, minimum=0.0, strict_minimum=True),
        "budget.ue_height_m": KeySpec(float, 1.5, minimum=0.0, strict_minimum=True),
        "shadowing.enabled": KeySpec(bool, False),
        "interference.model": KeySpec(str, "aimed", choices=("full", "aimed")),
        "interference.beamwidth_deg": KeySpec(float, 10.0, minimum=0.1, maximum=360.0),
        "interference.sidelobe_floor_db": KeySpec(float, -35.0, minimum=-200.0, maximum=0.0),
        "interference.elevation_beamwidth_deg": KeySpec(float, 8.0, minimum=0.0, maximum=180.0),
        "canyon.width_m": KeySpec(float, 30.0, minimum=0.0, strict_minimum=True),
        "canyon.eps_r": KeySpec(float, 5.0, minimum=1.0, strict_minimum=True),
        "canyon.bs_height_m": KeySpec(float, 18.0, minimum=0.0, strict_minimum=True),
        "canyon.ue_height_m": KeySpec(float, 1.5, minimum=0.0, strict_minimum=True),
        "canyon.bs_offset_m": KeySpec(float, 7.5, minimum=0.0),
        "canyon.ue_offset_m": KeySpec(float, 7.5, minimum=0.0),
        "canyon.max_bounces": KeySpec(int, 10, minimum=0, maximum=200),
        "canyon.ground": KeySpec(bool, True),
        "fit.confidence": KeySpec(float, 0.90, minimum=0.5, maximum=0.999),
        "fit.after_corner_min_m": KeySpec(float, 10.0, minimum=0.0, strict_minimum=True),
        "angular.grid_bins": KeySpec(int, 144, minimum=144, maximum=100_000),
        "angular.beamwidth_deg": KeySpec(float, 10.0, minimum=0.1, maximum=360.0),
        "angular.sidelobe_floor_db": KeySpec(float, -25.0, minimum=-200.0, maximum=0.0),
        "angular.alpha": KeySpec(float, 0.10, minimum=0.0, maximum=1.0, strict_minimum=True),
    }
)


PRESET_KEY_PREFIX = "preset."

_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


def _parse_bool(key: str, raw: str) -> bool:
    word = raw.strip().lower()
    if word in _TRUE_WORDS:
        return True
    if word in _FALSE_WORDS:
        return False
    raise ConfigError(f"Valor booleano inválido para '{key}': {raw!r}")


def _parse_value(key: str, raw: str, spec: KeySpec) -> Any:
    text = raw.strip()
    if spec.kind is bool:
        return _parse_bool(key, text)
    if spec.kind is str:
        if spec.choices and text not in spec.choices:
            raise ConfigError(f"Valor inválido para '{key}': {text!r} (opciones: {', '.join(spec.choices)})")
        return text
    try:
        value = int(text) if spec.kind is int else float(text)
    except ValueError as exc:
        raise ConfigError(f"Valor numérico inválido para '{key}': {text!r}") from exc
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"Valor no finito para '{key}': {text!r}")
    _check_range(key, value, spec)
    return value


def _check_range(key: str, value: float, spec: KeySpec) -> None:
    low_ok = True
    if spec.minimum is not None:
        low_ok = value > spec.minimum if spec.strict_minimum else value >= spec.minimum
    high_ok = spec.maximum is None or value <= spec.maximum
    if not (low_ok and high_ok):
        low = "-inf" if spec.minimum is None else f"{spec.minimum:g}"
        high = "inf" if spec.maximum is None else f"{spec.maximum:g}"
        bracket = "(" if spec.strict_minimum else "["
        raise ConfigError(f"Valor fuera de rango para '{key}': {value:g} (rango {bracket}{low}, {high}])")


@dataclass(frozen=True)
class ToolConfig:
    """Flat namespaced settings: file values merged over ``CONFIG_SCHEMA`` defaults."""

    values: Mapping[str, Any]
    preset_overrides: Mapping[str, float] = field(default_factory=dict)
    source: Path | None = None

    def __getitem__(self, key: str) -> Any:
        if key not in self.values:
            raise ConfigError(f"Clave de configuración desconocida: '{key}'")
        return self.values[key]

    def get_float(self, key: str) -> float:
        return float(self[key])

    def get_int(self, key: str) -> int:
        return int(self[key])

    def get_bool(self, key: str) -> bool:
        return bool(self[key])

    def get_str(self, key: str) -> str:
        return str(self[key])

    @property
    def seed(self) -> int | None:
        return self.values.get("seed")

    def resolve_path(self, key: str) -> Path | None:
        raw = self.get_str(key).strip()
        if not raw:
            return None
        path = Path(raw).expanduser()
        return path if path.is_absolute() else PROJECT_ROOT / path


def default_config() -> ToolConfig:
    return ToolConfig(values=MappingProxyType({k: spec.default for k, spec in CONFIG_SCHEMA.items()}))


def parse_config_text(text: str, source: Path | None = None) -> ToolConfig:
    parser = ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string("[canyoncov]\n" + text, source=str(source or "<config>"))
    except Exception as exc:
        raise ConfigError(f"No se pudo interpretar el archivo de configuración {source}: {exc}") from exc

    values = {k: spec.default for k, spec in CONFIG_SCHEMA.items()}
    overrides: dict[str, float] = {}
    for key, raw in parser.items("canyoncov"):
        if key.startswith(PRESET_KEY_PREFIX):
            parts = key.split(".")
            if len(parts) != 3 or not parts[1] or not parts[2]:
                raise ConfigError(f"Clave de preset mal formada: '{key}' (se espera preset.<clave>.<campo>)")
            try:
                overrides[key] = float(raw)
            except ValueError as exc:
                raise ConfigError(f"Valor numérico inválido para '{key}': {raw!r}") from exc
            continue
        spec = CONFIG_SCHEMA.get(key)
        if spec is None:
            raise ConfigError(f"Clave de configuración desconocida: '{key}'")
        if spec.kind is int and key == "seed" and not raw.strip():
            values[key] = None
            continue
        values[key] = _parse_value(key, raw, spec)

    return ToolConfig(
        values=MappingProxyType(values),
        preset_overrides=MappingProxyType(overrides),
        source=source,
    )


def load_tool_config(path: str | Path | None = "default") -> ToolConfig:
    """Read a flat ``key = value`` config. ``"default"`` names the project config file."""
    if path is None:
        return default_config()
    config_path = project_path(CONFIG_FILENAME) if str(path) == "default" else Path(path).expanduser()
    if not config_path.is_file():
        raise FileNotFoundError(f"No se pudo leer el archivo de configuración: {config_path}")
    text = config_path.read_text(encoding="utf-8")
    return parse_config_text(text, source=config_path)


# ============================================================
# Seeds, logging, output
# ============================================================

def resolve_seed(cli_seed: int | None = None, config: ToolConfig | None = None) -> int:
    if cli_seed is not None:
        return int(cli_seed)
    if config is not None and config.seed is not None:
        return int(config.seed)
    env_seed = os.getenv(SEED_ENV_VAR)
    if env_seed is not None and env_seed.strip():
        try:
            return int(env_seed.strip())
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} no es un entero: {env_seed!r}") from exc
    seed = secrets.randbits(32)
    LOGGER.warning("Semilla no especificada; usando semilla aleatoria %d", seed)
    return seed


def setup_logging(verbose: bool = False) -> None:
    debug = verbose or _env_flag("CANYONCOV_DEBUG", default=False)
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def format_sig(value: float) -> str:
    return SIG_DIGITS_FORMAT % value


def ensure_directories(paths: Iterable[Path]) -> None:
    for path in paths:
        path.mkdir(parents=True, exist_ok=True)
