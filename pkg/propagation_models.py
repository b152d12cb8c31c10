#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Closed-form street-canyon path-gain models at 28 GHz.

Slope-intercept fits for roof-edge, offset and lamppost bases, the UMa
slope-intercept proxies, and the three around-corner formulations
(diffraction, scattering, dual slope). Distances are along-route
(unwrapped) meters; every model is anchored at a 1 m intercept.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from types import MappingProxyType
from typing import Mapping, Union

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from common_runtime import ConfigError, DomainError, ToolConfig


LOGGER = logging.getLogger(__name__)

FREQUENCY_HZ = 28e9
FRIIS_1M_DB = -61.4
AFTER_CORNER_MIN_M = 10.0
MIN_DISTANCE_M = 1.0

ArrayLike = Union[float, np.ndarray]


class CornerVariant(str, Enum):
    DIFFRACTION = "diffraction"
    SCATTERING = "scattering"
    DUAL_SLOPE = "dualslope"


class ReferenceModelTag(str, Enum):
    UMA_LOS = "uma-los"
    UMA_NLOS = "uma-nlos"


# (A [dB], n); fixed, not overridable
REFERENCE_PARAMETERS: Mapping[ReferenceModelTag, tuple[float, float]] = MappingProxyType(
    {
        ReferenceModelTag.UMA_LOS: (-56.9, -2.20),
        ReferenceModelTag.UMA_NLOS: (-42.5, -3.91),
    }
)


@dataclass(frozen=True)
class SlopeInterceptModel:
    intercept_db_1m: float
    exponent: float
    sigma_db: float = 0.0

    def __post_init__(self) -> None:
        if not self.sigma_db >= 0:
            raise DomainError(f"sigma_db debe ser >= 0 (recibido {self.sigma_db})")


@dataclass(frozen=True)
class CornerModel:
    intercept_db_1m: float
    exponent_before: float
    corner_loss_db: float
    corner_distance_m: float
    variant: CornerVariant
    exponent_after: float = float("nan")
    sigma_db: float = 0.0

    def __post_init__(self) -> None:
        if not self.corner_distance_m > MIN_DISTANCE_M:
            raise DomainError(f"corner_distance_m debe ser > 1 m (recibido {self.corner_distance_m})")
        if not self.corner_loss_db >= 0:
            raise DomainError(f"corner_loss_db debe ser >= 0 (recibido {self.corner_loss_db})")
        if self.variant is CornerVariant.DUAL_SLOPE and not np.isfinite(self.exponent_after):
            raise DomainError("El modelo de doble pendiente requiere exponent_after")
        if not self.sigma_db >= 0:
            raise DomainError(f"sigma_db debe ser >= 0 (recibido {self.sigma_db})")


@dataclass(frozen=True)
class CornerEvaluation:
    value_db: float
    clamped: bool


def _as_distance(distance_m: ArrayLike, minimum: float = MIN_DISTANCE_M, strict: bool = False) -> np.ndarray:
    d = np.asarray(distance_m, dtype=float)
    bad = ~(d > minimum) if strict else ~(d >= minimum)
    if np.any(bad):
        worst = float(np.min(d[bad])) if np.any(np.isfinite(d[bad])) else float("nan")
        op = ">" if strict else ">="
        raise DomainError(f"La distancia debe ser {op} {minimum:g} m (recibido {worst:g} m)")
    return d


def _out(value: np.ndarray) -> ArrayLike:
    return float(value) if value.ndim == 0 else value


def wavelength_m(frequency_hz: float = FREQUENCY_HZ) -> float:
    if not frequency_hz > 0:
        raise DomainError(f"La frecuencia debe ser positiva (recibido {frequency_hz})")
    return SPEED_OF_LIGHT / frequency_hz


def friis_path_gain(distance_m: ArrayLike, frequency_hz: float = FREQUENCY_HZ) -> ArrayLike:
    lam = wavelength_m(frequency_hz)
    d = _as_distance(distance_m)
    return _out(20.0 * np.log10(lam / (4.0 * np.pi * d)))


def eval_slope_intercept(model: SlopeInterceptModel, distance_m: ArrayLike) -> ArrayLike:
    d = _as_distance(distance_m)
    return _out(model.intercept_db_1m + 10.0 * model.exponent * np.log10(d))


def eval_reference(tag: ReferenceModelTag | str, distance_m: ArrayLike) -> ArrayLike:
    intercept, exponent = REFERENCE_PARAMETERS[ReferenceModelTag(tag)]
    return eval_slope_intercept(SlopeInterceptModel(intercept, exponent), distance_m)


def sample_shadowed(
    model: SlopeInterceptModel,
    distance_m: ArrayLike,
    rng: np.random.Generator,
    size: int | tuple[int, ...] | None = None,
) -> ArrayLike:
    """Median path gain plus zero-mean Gaussian shadowing with ``model.sigma_db``."""
    median = np.asarray(eval_slope_intercept(model, distance_m), dtype=float)
    shape = size if size is not None else median.shape
    draw = rng.normal(0.0, model.sigma_db, size=shape) if model.sigma_db > 0 else np.zeros(shape)
    return _out(np.asarray(median + draw))


def excess_loss_vs_free_space(
    model: SlopeInterceptModel, distance_m: ArrayLike, frequency_hz: float = FREQUENCY_HZ
) -> ArrayLike:
    """Free-space gain minus model gain; positive values are extra loss."""
    d = _as_distance(distance_m)
    friis = np.asarray(friis_path_gain(d, frequency_hz))
    return _out(friis - np.asarray(eval_slope_intercept(model, d)))


# ============================================================
# Around-corner models
# ============================================================

def eval_corner_array(
    model: CornerModel,
    unwrapped_distance_m: ArrayLike,
    corner_distance_m: ArrayLike | None = None,
    after_corner_min_m: float = AFTER_CORNER_MIN_M,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised corner evaluation with optional per-link corner distance.

    Returns ``(values_db, clamped)``. Diffraction and scattering after-corner
    legs shorter than ``after_corner_min_m`` are evaluated at that leg length
    and flagged; the dual-slope branch is never clamped.
    """
    x = _as_distance(unwrapped_distance_m, strict=True)
    if corner_distance_m is None:
        dc = np.full_like(x, model.corner_distance_m)
    else:
        dc = np.broadcast_to(_as_distance(corner_distance_m, strict=True), x.shape).astype(float)
    x, dc = np.broadcast_arrays(x, dc)

    before = x <= dc
    values = np.array(model.intercept_db_1m + 10.0 * model.exponent_before * np.log10(x), dtype=float)
    clamped = np.zeros(x.shape, dtype=bool)

    after = ~before
    if np.any(after):
        xa, dca = x[after], dc[after]
        if model.variant is CornerVariant.DUAL_SLOPE:
            values_after = (
                model.intercept_db_1m
                + 10.0 * model.exponent_before * np.log10(dca)
                - model.corner_loss_db
                + 10.0 * model.exponent_after * np.log10(xa / dca)
            )
        else:
            leg = xa - dca
            short = leg < after_corner_min_m
            leg = np.where(short, after_corner_min_m, leg)
            factor = 5.0 if model.variant is CornerVariant.DIFFRACTION else 10.0
            values_after = (
                model.intercept_db_1m
                - model.corner_loss_db
                + factor * model.exponent_before * np.log10(dca * leg)
            )
            clamped[after] = short
        values[after] = values_after
    return values, clamped


def eval_corner(
    model: CornerModel,
    unwrapped_distance_m: float,
    after_corner_min_m: float = AFTER_CORNER_MIN_M,
) -> CornerEvaluation:
    values, clamped = eval_corner_array(model, float(unwrapped_distance_m), after_corner_min_m=after_corner_min_m)
    result = CornerEvaluation(value_db=float(values), clamped=bool(clamped))
    if result.clamped:
        LOGGER.debug(
            "Evaluación limitada a %.0f m tras la esquina (x=%.2f m, d_c=%.2f m)",
            after_corner_min_m,
            unwrapped_distance_m,
            model.corner_distance_m,
        )
    return result


# ============================================================
# Preset catalog
# ============================================================

Preset = Union[SlopeInterceptModel, CornerModel]

DEFAULT_CORNER_DISTANCE_M = 244.0

PRESETS: Mapping[str, Preset] = MappingProxyType(
    {
        "roof-edge": SlopeInterceptModel(-35.0, -3.56, 7.1),
        "roof-edge-fixed": SlopeInterceptModel(FRIIS_1M_DB, -2.48, 7.5),
        "offset": SlopeInterceptModel(-94.0, -1.44, 7.0),
        "offset-fixed": SlopeInterceptModel(FRIIS_1M_DB, -2.80, 7.7),
        "lamppost": SlopeInterceptModel(-60.4, -2.42, 5.5),
        "lamppost-fixed": SlopeInterceptModel(FRIIS_1M_DB, -2.37, 5.5),
        "uma-los": SlopeInterceptModel(*REFERENCE_PARAMETERS[ReferenceModelTag.UMA_LOS]),
        "uma-nlos": SlopeInterceptModel(*REFERENCE_PARAMETERS[ReferenceModelTag.UMA_NLOS]),
        "corner-diffraction-friis": CornerModel(
            FRIIS_1M_DB, -2.27, 2.2, DEFAULT_CORNER_DISTANCE_M, CornerVariant.DIFFRACTION, sigma_db=3.4
        ),
        "corner-scattering-friis": CornerModel(
            FRIIS_1M_DB, -2.23, 0.0, DEFAULT_CORNER_DISTANCE_M, CornerVariant.SCATTERING, sigma_db=6.6
        ),
        "corner-dualslope-friis": CornerModel(
            FRIIS_1M_DB, -2.27, 12.0, DEFAULT_CORNER_DISTANCE_M, CornerVariant.DUAL_SLOPE,
            exponent_after=-12.3, sigma_db=4.0,
        ),
        "corner-diffraction-float": CornerModel(
            -52.1, -2.63, 0.0, DEFAULT_CORNER_DISTANCE_M, CornerVariant.DIFFRACTION, sigma_db=3.2
        ),
        "corner-scattering-float": CornerModel(
            -81.3, -1.44, 0.0, DEFAULT_CORNER_DISTANCE_M, CornerVariant.SCATTERING, sigma_db=4.1
        ),
        "corner-dualslope-float": CornerModel(
            -11.8, -3.35, 11.8, DEFAULT_CORNER_DISTANCE_M, CornerVariant.DUAL_SLOPE,
            exponent_after=-12.2, sigma_db=3.6,
        ),
    }
)

_LOCKED_PRESETS = {"uma-los", "uma-nlos"}


def preset(key: str, catalog: Mapping[str, Preset] | None = None) -> Preset:
    source = PRESETS if catalog is None else catalog
    try:
        return source[key]
    except KeyError as exc:
        raise ConfigError(f"Preset desconocido: '{key}' (disponibles: {', '.join(PRESETS)})") from exc


def presets_from_config(config: ToolConfig) -> Mapping[str, Preset]:
    """Catalog with ``preset.<key>.<field> = value`` overrides applied."""
    catalog: dict[str, Preset] = dict(PRESETS)
    for full_key, value in config.preset_overrides.items():
        _, name, field_name = full_key.split(".", 2)
        if name not in catalog:
            raise ConfigError(f"Clave de configuración desconocida: '{full_key}' (preset '{name}' no existe)")
        if name in _LOCKED_PRESETS:
            raise ConfigError(f"Los parámetros de '{name}' son constantes y no se pueden modificar: '{full_key}'")
        current = catalog[name]
        if field_name == "variant" or not hasattr(current, field_name):
            raise ConfigError(f"Clave de configuración desconocida: '{full_key}' (campo '{field_name}')")
        try:
            catalog[name] = replace(current, **{field_name: value})
        except DomainError as exc:
            raise ConfigError(f"Valor inválido para '{full_key}': {exc}") from exc
        LOGGER.debug("Preset %s: %s = %g", name, field_name, value)
    return MappingProxyType(catalog)


def preset_keys() -> tuple[str, ...]:
    return tuple(PRESETS)
