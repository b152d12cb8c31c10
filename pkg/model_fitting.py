#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Least-squares fitting of slope-intercept and around-corner path-gain models.

Regression is unweighted OLS in dB against 10*log10(distance). Confidence
half-widths use the Gaussian approximation with the OLS parameter
covariance; corner fits keep the corner loss non-negative by clip-and-refit.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd
from scipy.stats import norm

from common_runtime import DomainError
from propagation_models import (
    AFTER_CORNER_MIN_M,
    FRIIS_1M_DB,
    CornerModel,
    CornerVariant,
    SlopeInterceptModel,
    eval_corner_array,
    eval_slope_intercept,
)


LOGGER = logging.getLogger(__name__)

DEFAULT_CONFIDENCE = 0.90
CENTRAL_RANGE = (0.005, 0.995)
MIN_LOGNORMALITY_SAMPLES = 100


class Scenario(str, Enum):
    ROOF_EDGE = "RoofEdge"
    OFFSET = "Offset"
    LAMPPOST = "Lamppost"
    SAME_STREET_CORNER = "SameStreetCorner"
    AROUND_CORNER = "AroundCorner"


class InterceptMode(str, Enum):
    PINNED_FRIIS = "pinned"
    FLOATING = "floating"


@dataclass(frozen=True)
class LinkRecord:
    street_id: str
    scenario: Scenario
    unwrapped_distance_m: float
    path_gain_db: float
    corner_distance_m: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if not np.isfinite(self.unwrapped_distance_m) or self.unwrapped_distance_m < 1.0:
            raise DomainError(f"distance_m debe ser >= 1 m (recibido {self.unwrapped_distance_m})")
        if not np.isfinite(self.path_gain_db):
            raise DomainError("path_gain_db no es finito")
        if self.scenario is Scenario.AROUND_CORNER:
            if self.corner_distance_m is None:
                raise DomainError("AroundCorner requiere corner_distance_m")
            if not 1.0 < self.corner_distance_m < self.unwrapped_distance_m:
                raise DomainError(
                    f"corner_distance_m ({self.corner_distance_m}) debe estar en (1, distance_m={self.unwrapped_distance_m})"
                )


@dataclass(frozen=True, eq=False)
class FitResult:
    params: SlopeInterceptModel | CornerModel
    rmse_db: float
    ci90_intercept_db: float
    ci90_exponent: float
    residuals_db: np.ndarray
    ci_half_widths: Mapping[str, float] = field(default_factory=dict)
    confidence: float = DEFAULT_CONFIDENCE
    n_records: int = 0

    def parameter_table(self) -> pd.DataFrame:
        rows = []
        for name, half in self.ci_half_widths.items():
            value = float(getattr(self.params, name))
            rows.append({"param": name, "value": value, "ci90_lo": value - half, "ci90_hi": value + half})
        rows.append({"param": "rmse_db", "value": self.rmse_db, "ci90_lo": np.nan, "ci90_hi": np.nan})
        return pd.DataFrame(rows, columns=["param", "value", "ci90_lo", "ci90_hi"])


def _z_value(confidence: float) -> float:
    if not 0 < confidence < 1:
        raise DomainError(f"confidence debe estar en (0, 1) (recibido {confidence})")
    return float(norm.ppf(0.5 + confidence / 2.0))


def _ols(design: np.ndarray, target: np.ndarray, confidence: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients, residuals and CI half-widths of ``target ~ design``."""
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise DomainError("Diseño de regresión degenerado (regresores linealmente dependientes)")
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    residuals = target - design @ coef
    dof = design.shape[0] - design.shape[1]
    if dof > 0:
        s2 = float(residuals @ residuals) / dof
        cov = s2 * np.linalg.inv(design.T @ design)
        half = _z_value(confidence) * np.sqrt(np.clip(np.diag(cov), 0.0, None))
    else:
        half = np.full(design.shape[1], np.nan)
    return coef, residuals, half


def _rmse(residuals: np.ndarray) -> float:
    return float(np.sqrt(np.mean(residuals**2))) if residuals.size else 0.0


def _arrays(records: Sequence[LinkRecord]) -> tuple[np.ndarray, np.ndarray]:
    x = np.array([r.unwrapped_distance_m for r in records], dtype=float)
    y = np.array([r.path_gain_db for r in records], dtype=float)
    return x, y


# ============================================================
# Slope-intercept fits
# ============================================================

def fit_slope_intercept(records: Sequence[LinkRecord], confidence: float = DEFAULT_CONFIDENCE) -> FitResult:
    records = list(records)
    if len(records) < 2:
        raise DomainError(f"Se requieren al menos 2 registros (recibido {len(records)})")
    x, y = _arrays(records)
    if np.unique(x).size < 2:
        raise DomainError("Diseño degenerado: todas las distancias son iguales")
    design = np.column_stack([np.ones_like(x), 10.0 * np.log10(x)])
    coef, residuals, half = _ols(design, y, confidence)
    model = SlopeInterceptModel(float(coef[0]), float(coef[1]), _rmse(residuals))
    return FitResult(
        params=model,
        rmse_db=_rmse(residuals),
        ci90_intercept_db=float(half[0]),
        ci90_exponent=float(half[1]),
        residuals_db=residuals,
        ci_half_widths={"intercept_db_1m": float(half[0]), "exponent": float(half[1])},
        confidence=confidence,
        n_records=len(records),
    )


def fit_fixed_intercept(
    records: Sequence[LinkRecord],
    intercept_db_1m: float = FRIIS_1M_DB,
    confidence: float = DEFAULT_CONFIDENCE,
) -> FitResult:
    records = list(records)
    if not records:
        raise DomainError("Se requiere al menos 1 registro")
    x, y = _arrays(records)
    regressor = 10.0 * np.log10(x)
    if not np.any(regressor != 0):
        raise DomainError("Diseño degenerado: todas las distancias son 1 m")
    coef, residuals, half = _ols(regressor[:, np.newaxis], y - intercept_db_1m, confidence)
    model = SlopeInterceptModel(float(intercept_db_1m), float(coef[0]), _rmse(residuals))
    return FitResult(
        params=model,
        rmse_db=_rmse(residuals),
        ci90_intercept_db=0.0,
        ci90_exponent=float(half[0]),
        residuals_db=residuals,
        ci_half_widths={"exponent": float(half[0])},
        confidence=confidence,
        n_records=len(records),
    )


def fit_by_street(
    records: Iterable[LinkRecord],
    confidence: float = DEFAULT_CONFIDENCE,
    min_records: int = 3,
) -> dict[str, FitResult]:
    """Separate slope-intercept fit per street; streets with too few links are skipped."""
    by_street: dict[str, list[LinkRecord]] = {}
    for record in records:
        by_street.setdefault(record.street_id, []).append(record)
    results: dict[str, FitResult] = {}
    for street_id in sorted(by_street):
        subset = by_street[street_id]
        if len(subset) < min_records or len({r.unwrapped_distance_m for r in subset}) < 2:
            LOGGER.warning("Calle %s omitida: %d registros", street_id, len(subset))
            continue
        results[street_id] = fit_slope_intercept(subset, confidence)
    return results


def rmse_against(model: SlopeInterceptModel, records: Sequence[LinkRecord]) -> float:
    """RMS error of a fixed model (no fitting) against measured records."""
    x, y = _arrays(list(records))
    if x.size == 0:
        raise DomainError("Sin registros")
    return _rmse(y - np.asarray(eval_slope_intercept(model, x)))


# ============================================================
# Corner fits
# ============================================================

def _corner_columns(
    variant: CornerVariant,
    x: np.ndarray,
    dc: np.ndarray,
    is_after: np.ndarray,
    after_corner_min_m: float,
) -> tuple[np.ndarray, list[str]]:
    log_x = 10.0 * np.log10(x)
    if variant is CornerVariant.DUAL_SLOPE:
        n1 = np.where(is_after, 10.0 * np.log10(dc), log_x)
        n2 = np.where(is_after, 10.0 * np.log10(x / dc), 0.0)
        delta = np.where(is_after, -1.0, 0.0)
        return np.column_stack([n1, n2, delta]), ["exponent_before", "exponent_after", "corner_loss_db"]

    leg = np.maximum(x - dc, after_corner_min_m)
    factor = 5.0 if variant is CornerVariant.DIFFRACTION else 10.0
    n = np.where(is_after, factor * np.log10(dc * leg), log_x)
    delta = np.where(is_after, -1.0, 0.0)
    return np.column_stack([n, delta]), ["exponent_before", "corner_loss_db"]


def fit_corner_model(
    records: Sequence[LinkRecord],
    variant: CornerVariant | str,
    corner_distance_m: float | None = None,
    intercept_mode: InterceptMode | str = InterceptMode.PINNED_FRIIS,
    pinned_intercept_db: float = FRIIS_1M_DB,
    confidence: float = DEFAULT_CONFIDENCE,
    after_corner_min_m: float = AFTER_CORNER_MIN_M,
) -> FitResult:
    """Joint fit over before-corner (SameStreetCorner) and after-corner (AroundCorner) links.

    Each after-corner record uses its own corner distance unless
    ``corner_distance_m`` is given. Records are sorted first so the result
    does not depend on input order.
    """
    variant = CornerVariant(variant)
    intercept_mode = InterceptMode(intercept_mode)
    ordered = sorted(
        (r for r in records if r.scenario in (Scenario.SAME_STREET_CORNER, Scenario.AROUND_CORNER)),
        key=lambda r: (r.scenario.value, r.street_id, r.unwrapped_distance_m, r.path_gain_db, r.corner_distance_m or 0.0),
    )
    before = [r for r in ordered if r.scenario is Scenario.SAME_STREET_CORNER]
    after = [r for r in ordered if r.scenario is Scenario.AROUND_CORNER]
    if len(before) < 2 or len(after) < 2:
        raise DomainError(
            f"Se requieren >= 2 puntos antes y >= 2 después de la esquina (recibido {len(before)} y {len(after)})"
        )

    rows = before + after
    x, y = _arrays(rows)
    is_after = np.array([r.scenario is Scenario.AROUND_CORNER for r in rows])
    if corner_distance_m is not None:
        if not corner_distance_m > 1:
            raise DomainError(f"corner_distance_m debe ser > 1 m (recibido {corner_distance_m})")
        dc = np.full_like(x, float(corner_distance_m))
        nominal_dc = float(corner_distance_m)
        if np.any(x[is_after] <= nominal_dc):
            raise DomainError("Hay registros después de la esquina con distancia <= corner_distance_m")
    else:
        dc = np.array([r.corner_distance_m if r.corner_distance_m is not None else np.nan for r in rows])
        counts = Counter(float(d) for d in dc[is_after])
        nominal_dc = min(counts, key=lambda d: (-counts[d], d))
    dc = np.where(is_after, dc, nominal_dc)

    clamped = int(np.sum(is_after & (x - dc < after_corner_min_m)))
    if clamped and variant is not CornerVariant.DUAL_SLOPE:
        LOGGER.warning("%d registros a menos de %.0f m tras la esquina: evaluación limitada", clamped, after_corner_min_m)

    columns, names = _corner_columns(variant, x, dc, is_after, after_corner_min_m)
    if intercept_mode is InterceptMode.FLOATING:
        columns = np.column_stack([np.ones_like(x), columns])
        names = ["intercept_db_1m", *names]
        target = y
    else:
        target = y - pinned_intercept_db

    coef, residuals, half = _ols(columns, target, confidence)
    delta_index = names.index("corner_loss_db")
    if coef[delta_index] < 0:
        LOGGER.debug("Pérdida de esquina negativa (%.3f dB): reajuste con Delta=0", coef[delta_index])
        keep = [i for i in range(len(names)) if i != delta_index]
        sub_coef, residuals, sub_half = _ols(columns[:, keep], target, confidence)
        coef = np.zeros(len(names))
        half = np.zeros(len(names))
        coef[keep] = sub_coef
        half[keep] = sub_half

    values = dict(zip(names, (float(v) for v in coef)))
    halves = dict(zip(names, (float(h) for h in half)))
    intercept = values.pop("intercept_db_1m", float(pinned_intercept_db))
    model = CornerModel(
        intercept_db_1m=intercept,
        exponent_before=values["exponent_before"],
        corner_loss_db=max(values["corner_loss_db"], 0.0),
        corner_distance_m=nominal_dc,
        variant=variant,
        exponent_after=values.get("exponent_after", float("nan")),
        sigma_db=_rmse(residuals),
    )
    return FitResult(
        params=model,
        rmse_db=_rmse(residuals),
        ci90_intercept_db=halves.get("intercept_db_1m", 0.0),
        ci90_exponent=halves["exponent_before"],
        residuals_db=residuals,
        ci_half_widths=halves,
        confidence=confidence,
        n_records=len(rows),
    )


def corner_predictions(
    model: CornerModel,
    records: Sequence[LinkRecord],
    after_corner_min_m: float = AFTER_CORNER_MIN_M,
) -> np.ndarray:
    """Model values for corner records, each after-corner record at its own d_c."""
    x, _ = _arrays(list(records))
    dc = np.array(
        [
            r.corner_distance_m if r.scenario is Scenario.AROUND_CORNER else max(model.corner_distance_m, r.unwrapped_distance_m)
            for r in records
        ]
    )
    values, _ = eval_corner_array(model, x, dc, after_corner_min_m)
    return values


# ============================================================
# Residual diagnostics
# ============================================================

def lognormality_deviation(residuals_db: np.ndarray, sigma_db: float | None = None) -> float:
    """Largest horizontal dB deviation from a matched Gaussian over the central 99%.

    Order statistics with plotting position (i-0.5)/N inside [0.005, 0.995]
    are compared with the Gaussian quantile of equal mean and standard
    deviation; the maximum absolute deviation is returned.
    """
    values = np.sort(np.asarray(residuals_db, dtype=float).ravel())
    n = values.size
    if n < MIN_LOGNORMALITY_SAMPLES:
        raise DomainError(f"Se requieren al menos {MIN_LOGNORMALITY_SAMPLES} residuos (recibido {n})")
    sd = float(np.std(values, ddof=1)) if sigma_db is None else float(sigma_db)
    if not sd > 0:
        raise DomainError("Desviación estándar nula: indique sigma_db")
    positions = (np.arange(1, n + 1) - 0.5) / n
    central = (positions >= CENTRAL_RANGE[0]) & (positions <= CENTRAL_RANGE[1])
    expected = values.mean() + sd * norm.ppf(positions[central])
    deviation = np.abs(values[central] - expected)
    return float(deviation.max())


# ============================================================
# Synthetic data
# ============================================================

def synthesize_links(
    model: SlopeInterceptModel,
    distances_m: np.ndarray,
    rng: np.random.Generator | None = None,
    noise_db: float | None = None,
    scenario: Scenario = Scenario.ROOF_EDGE,
    street_id: str = "sintetica",
) -> list[LinkRecord]:
    """Records drawn from ``model``; ``noise_db`` defaults to the model sigma."""
    d = np.asarray(distances_m, dtype=float)
    gains = np.asarray(eval_slope_intercept(model, d), dtype=float)
    sigma = model.sigma_db if noise_db is None else noise_db
    if sigma > 0:
        if rng is None:
            raise DomainError("Se requiere un generador aleatorio para datos con ruido")
        gains = gains + rng.normal(0.0, sigma, size=d.shape)
    return [LinkRecord(street_id, scenario, float(di), float(gi)) for di, gi in zip(d, gains)]


def synthesize_corner_links(
    model: CornerModel,
    before_distances_m: np.ndarray,
    after_legs_m: np.ndarray,
    corner_distance_m: float | None = None,
    rng: np.random.Generator | None = None,
    noise_db: float = 0.0,
    street_id: str = "esquina",
) -> list[LinkRecord]:
    """Before-corner and after-corner records generated from ``model``."""
    dc = model.corner_distance_m if corner_distance_m is None else float(corner_distance_m)
    x_before = np.asarray(before_distances_m, dtype=float)
    x_after = dc + np.asarray(after_legs_m, dtype=float)
    g_before, _ = eval_corner_array(model, x_before, np.full_like(x_before, max(dc, x_before.max(initial=dc))))
    g_after, _ = eval_corner_array(model, x_after, np.full_like(x_after, dc))
    if noise_db > 0:
        if rng is None:
            raise DomainError("Se requiere un generador aleatorio para datos con ruido")
        g_before = g_before + rng.normal(0.0, noise_db, size=g_before.shape)
        g_after = g_after + rng.normal(0.0, noise_db, size=g_after.shape)
    records = [
        LinkRecord(f"{street_id}-base", Scenario.SAME_STREET_CORNER, float(x), float(g))
        for x, g in zip(x_before, g_before)
    ]
    records += [
        LinkRecord(street_id, Scenario.AROUND_CORNER, float(x), float(g), dc)
        for x, g in zip(x_after, g_after)
    ]
    return records
