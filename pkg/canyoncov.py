#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Herramienta de propagación mmWave en cañones urbanos.

Subcomandos: eval, fit, corner-fit, angular, raytrace, netsim.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from angular_processing import (
    azimuth_gain,
    degradation_from_nominal,
    empirical_cdf,
    fraction_within,
    gaussian_beam_pattern,
    omni_path_gain,
    simulate_full_scattering,
)
from canyon_raytracer import CanyonGeometry, path_gain_profile
from common_runtime import (
    ConfigError,
    DomainError,
    InputDataError,
    ToolConfig,
    ensure_directories,
    format_sig,
    load_tool_config,
    project_path,
    resolve_seed,
    setup_logging,
)
from links_io import cdf_frame, load_degradation_cdf, load_links, load_scan, write_frame
from model_fitting import (
    FitResult,
    InterceptMode,
    LinkRecord,
    Scenario,
    corner_predictions,
    fit_by_street,
    fit_corner_model,
    fit_fixed_intercept,
    fit_slope_intercept,
    lognormality_deviation,
    rmse_against,
)
from network_simulator import GridScenario, InterferenceModel, compute_map, percentile_report
from propagation_models import (
    FRIIS_1M_DB,
    CornerModel,
    CornerVariant,
    SlopeInterceptModel,
    eval_corner_array,
    eval_slope_intercept,
    friis_path_gain,
    preset,
    preset_keys,
    presets_from_config,
)


LOGGER = logging.getLogger("canyoncov")

EXIT_OK = 0
EXIT_UNEXPECTED = 1

# (exception, exit code, kind) checked in order
ERROR_KINDS: tuple[tuple[type[BaseException], int, str], ...] = (
    (ConfigError, 2, "config"),
    (FileNotFoundError, 3, "missing-input"),
    (DomainError, 4, "domain"),
    (InputDataError, 5, "input-data"),
)

DEGRADATION_THRESHOLD_DB = 2.0


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out) if args.out else project_path("salidas", args.command)
    ensure_directories([out])
    return out


def _parse_fixed_intercept(raw: str | None) -> float | None:
    if raw is None:
        return None
    if raw.strip().lower() == "friis":
        return FRIIS_1M_DB
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"--fixed-intercept debe ser 'friis' o un valor en dB (recibido {raw!r})") from exc


def _residual_frame(records: Sequence[LinkRecord], predictions: np.ndarray) -> pd.DataFrame:
    measured = np.array([r.path_gain_db for r in records])
    return pd.DataFrame(
        {
            "street_id": [r.street_id for r in records],
            "scenario": [r.scenario.value for r in records],
            "distance_m": [r.unwrapped_distance_m for r in records],
            "path_gain_db": measured,
            "model_db": predictions,
            "residual_db": measured - predictions,
        }
    )


def _log_lognormality(result: FitResult) -> None:
    if result.residuals_db.size < 100:
        LOGGER.debug("Menos de 100 residuos: se omite la prueba de log-normalidad")
        return
    deviation = lognormality_deviation(result.residuals_db, result.rmse_db)
    LOGGER.info("Desviación máxima de log-normalidad (99%% central): %.2f dB", deviation)


# ============================================================
# Subcommands
# ============================================================

def cmd_eval(args: argparse.Namespace, config: ToolConfig) -> int:
    model = preset(args.preset, presets_from_config(config))
    if isinstance(model, SlopeInterceptModel):
        value = float(eval_slope_intercept(model, args.distance))
    else:
        values, clamped = eval_corner_array(
            model, args.distance, args.corner_distance, config.get_float("fit.after_corner_min_m")
        )
        value = float(values)
        if bool(clamped):
            LOGGER.warning(
                "Evaluación limitada a %s m tras la esquina", format_sig(config.get_float("fit.after_corner_min_m"))
            )
    print(format_sig(value))
    return EXIT_OK


def cmd_fit(args: argparse.Namespace, config: ToolConfig) -> int:
    records, manifest = load_links(args.input)
    scenario = Scenario(args.scenario)
    subset = [r for r in records if r.scenario is scenario]
    if not subset:
        raise InputDataError(f"No hay registros {scenario.value} en {args.input}")

    confidence = config.get_float("fit.confidence")
    intercept = _parse_fixed_intercept(args.fixed_intercept)
    if intercept is None:
        result = fit_slope_intercept(subset, confidence)
    else:
        result = fit_fixed_intercept(subset, intercept, confidence)
    model = result.params

    out = _out_dir(args)
    write_frame(result.parameter_table(), out / "parametros.csv")
    predictions = np.asarray(eval_slope_intercept(model, np.array([r.unwrapped_distance_m for r in subset])))
    write_frame(_residual_frame(subset, predictions), out / "residuos.csv")
    write_frame(manifest.rejected_frame(), out / "filas_rechazadas.csv")

    comparison = [{"model": "fit", "rmse_db": result.rmse_db}]
    for key in ("uma-los", "uma-nlos"):
        reference = preset(key)
        comparison.append({"model": key, "rmse_db": rmse_against(reference, subset)})
    write_frame(pd.DataFrame(comparison, columns=["model", "rmse_db"]), out / "comparacion_referencias.csv")

    if args.by_street:
        rows = []
        for street_id, street_fit in fit_by_street(subset, confidence).items():
            rows.append(
                {
                    "street_id": street_id,
                    "intercept_db_1m": street_fit.params.intercept_db_1m,
                    "exponent": street_fit.params.exponent,
                    "rmse_db": street_fit.rmse_db,
                    "n_records": street_fit.n_records,
                }
            )
        write_frame(pd.DataFrame(rows), out / "ajuste_por_calle.csv")

    _log_lognormality(result)
    print(
        f"A = {format_sig(model.intercept_db_1m)} dB (+/- {format_sig(result.ci90_intercept_db)}), "
        f"n = {format_sig(model.exponent)} (+/- {format_sig(result.ci90_exponent)}), "
        f"rmse = {format_sig(result.rmse_db)} dB, N = {result.n_records}"
    )
    LOGGER.info("OK: ajuste %s escrito en %s", scenario.value, out)
    return EXIT_OK


def cmd_corner_fit(args: argparse.Namespace, config: ToolConfig) -> int:
    records, manifest = load_links(args.input)
    after_min = config.get_float("fit.after_corner_min_m")
    mode = InterceptMode.FLOATING if args.float_intercept else InterceptMode.PINNED_FRIIS
    result = fit_corner_model(
        records,
        CornerVariant(args.variant),
        corner_distance_m=args.corner_distance,
        intercept_mode=mode,
        confidence=config.get_float("fit.confidence"),
        after_corner_min_m=after_min,
    )
    model = result.params
    assert isinstance(model, CornerModel)

    subset = [r for r in records if r.scenario in (Scenario.SAME_STREET_CORNER, Scenario.AROUND_CORNER)]
    if args.corner_distance is not None:
        subset = [
            replace(r, corner_distance_m=args.corner_distance) if r.scenario is Scenario.AROUND_CORNER else r
            for r in subset
        ]
    predictions = corner_predictions(model, subset, after_min)

    out = _out_dir(args)
    write_frame(result.parameter_table(), out / "parametros.csv")
    write_frame(_residual_frame(subset, predictions), out / "residuos.csv")
    write_frame(manifest.rejected_frame(), out / "filas_rechazadas.csv")

    print(
        f"P1 = {format_sig(model.intercept_db_1m)} dB, n = {format_sig(model.exponent_before)}, "
        f"Delta = {format_sig(model.corner_loss_db)} dB, d_c = {format_sig(model.corner_distance_m)} m, "
        f"rmse = {format_sig(result.rmse_db)} dB"
    )
    LOGGER.info("OK: ajuste de esquina (%s, %s) escrito en %s", model.variant.value, mode.value, out)
    return EXIT_OK


def cmd_angular(args: argparse.Namespace, config: ToolConfig) -> int:
    scan = load_scan(args.input, args.meta)
    gain_db = azimuth_gain(scan)
    omni_db = omni_path_gain(scan)
    print(f"gain_db = {format_sig(gain_db)}")
    print(f"omni_path_gain_db = {format_sig(omni_db)}")

    out = _out_dir(args)
    summary = [{"metric": "gain_db", "value": gain_db}, {"metric": "omni_path_gain_db", "value": omni_db}]

    if args.full_scattering:
        seed = resolve_seed(args.seed, config)
        antenna = gaussian_beam_pattern(
            config.get_int("angular.grid_bins"),
            config.get_float("angular.beamwidth_deg"),
            config.get_float("angular.sidelobe_floor_db"),
        )
        nominal_db = azimuth_gain(antenna)
        gains = simulate_full_scattering(antenna, args.full_scattering, seed)
        degradation = degradation_from_nominal(gains, nominal_db)
        cdf = empirical_cdf(degradation, config.get_float("angular.alpha"))
        write_frame(
            cdf_frame(cdf.values, cdf.probabilities, cdf.band_lower, cdf.band_upper),
            out / "cdf_degradacion.csv",
        )
        within = fraction_within(degradation, DEGRADATION_THRESHOLD_DB)
        summary += [
            {"metric": "nominal_gain_db", "value": nominal_db},
            {"metric": "median_degradation_db", "value": cdf.quantile(0.5)},
            {"metric": "fraction_within_2db", "value": within},
            {"metric": "dkw_epsilon", "value": cdf.band_epsilon},
        ]
        LOGGER.info("OK: %d ensayos de dispersión completa (semilla %d)", args.full_scattering, seed)

    write_frame(pd.DataFrame(summary, columns=["metric", "value"]), out / "resumen.csv")
    return EXIT_OK


def cmd_raytrace(args: argparse.Namespace, config: ToolConfig) -> int:
    if not args.dmin >= 1:
        raise DomainError(f"--dmin debe ser >= 1 m (recibido {args.dmin})")
    if not args.step > 0:
        raise DomainError(f"--step debe ser positivo (recibido {args.step})")
    if args.dmax < args.dmin:
        raise DomainError(f"--dmax ({args.dmax}) menor que --dmin ({args.dmin})")

    geometry = CanyonGeometry.from_config(config)
    ranges = args.dmin + args.step * np.arange(int(np.floor((args.dmax - args.dmin) / args.step + 1e-9)) + 1)
    gains, n_rays = path_gain_profile(geometry, ranges)
    roof_edge = preset("roof-edge", presets_from_config(config))
    frame = pd.DataFrame(
        {
            "range_m": ranges,
            "path_gain_db": gains,
            "n_rays": np.full(ranges.size, n_rays, dtype=int),
            "friis_db": friis_path_gain(ranges, geometry.frequency_hz),
            "roof_edge_db": eval_slope_intercept(roof_edge, ranges),
        }
    )
    out = _out_dir(args)
    write_frame(frame, out / "perfil_rayos.csv")
    LOGGER.info("OK: %d distancias, %d rayos por punto", ranges.size, n_rays)
    return EXIT_OK


def cmd_netsim(args: argparse.Namespace, config: ToolConfig) -> int:
    seed = resolve_seed(args.seed, config)
    degradation = load_degradation_cdf(config.resolve_path("degradation_cdf_file"))
    scenario = GridScenario.from_config(config, degradation, presets_from_config(config))
    if args.interference:
        scenario = replace(scenario, interference=InterferenceModel(args.interference))

    coverage = compute_map(scenario, seed)
    report = percentile_report(coverage)

    out = _out_dir(args)
    write_frame(coverage.to_frame(), out / "mapa_cobertura.csv")
    write_frame(report, out / "percentiles.csv")

    LOGGER.info(
        "Semilla %d, interferencia %s, piso de ruido %.2f dBm",
        seed,
        scenario.interference.value,
        coverage.noise_floor_dbm,
    )
    for row in report.itertuples(index=False):
        print(
            f"p{format_sig(row.percentile)}: SNR {format_sig(row.snr_db)} dB, SINR {format_sig(row.sinr_db)} dB, "
            f"tasa {format_sig(row.rate_bps / 1e6)} Mbps"
        )
    return EXIT_OK


COMMANDS: dict[str, Callable[[argparse.Namespace, ToolConfig], int]] = {
    "eval": cmd_eval,
    "fit": cmd_fit,
    "corner-fit": cmd_corner_fit,
    "angular": cmd_angular,
    "raytrace": cmd_raytrace,
    "netsim": cmd_netsim,
}


# ============================================================
# Entry point
# ============================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="default", help="Archivo INI; 'default' usa canyoncov_config.ini del proyecto.")
    common.add_argument("--seed", type=int, default=None, help="Semilla; si falta se usa la del config o CANYONCOV_SEED.")
    common.add_argument("--out", type=Path, default=None, help="Directorio de salida (por defecto salidas/<comando>).")
    common.add_argument("-v", "--verbose", action="store_true", help="Activa logging DEBUG.")

    parser = argparse.ArgumentParser(description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="Evalúa un modelo predefinido a una distancia.")
    p.add_argument("--preset", required=True, choices=preset_keys())
    p.add_argument("--distance", type=float, required=True, help="Distancia desplegada en m.")
    p.add_argument("--corner-distance", type=float, default=None, help="d_c en m (solo modelos de esquina).")

    p = sub.add_parser("fit", parents=[common], help="Ajuste pendiente-intercepto por mínimos cuadrados.")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--fixed-intercept", default=None, help="'friis' o intercepto en dB a 1 m.")
    p.add_argument("--scenario", default=Scenario.ROOF_EDGE.value, choices=[s.value for s in Scenario])
    p.add_argument("--by-street", action="store_true", help="Escribe además un ajuste por calle.")

    p = sub.add_parser("corner-fit", parents=[common], help="Ajuste de modelos de esquina.")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--variant", required=True, choices=[v.value for v in CornerVariant])
    p.add_argument("--float-intercept", action="store_true", help="Intercepto libre en vez de Friis a 1 m.")
    p.add_argument("--corner-distance", type=float, default=None, help="d_c común para todos los registros.")

    p = sub.add_parser("angular", parents=[common], help="Ganancia azimutal y ganancia omnidireccional de un barrido.")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--meta", type=Path, default=None, help="JSON de metadatos (por defecto <input>.json).")
    p.add_argument("--full-scattering", type=int, default=0, metavar="N", help="Ensayos de dispersión completa.")

    p = sub.add_parser("raytrace", parents=[common], help="Perfil de ganancia por trazado de rayos.")
    p.add_argument("--dmin", type=float, required=True)
    p.add_argument("--dmax", type=float, required=True)
    p.add_argument("--step", type=float, required=True)

    p = sub.add_parser("netsim", parents=[common], help="Simulación de red en grilla Manhattan.")
    p.add_argument("--interference", default=None, choices=[m.value for m in InterferenceModel])

    return parser


def run(args: argparse.Namespace) -> int:
    config = load_tool_config(args.config)
    LOGGER.debug("Configuración: %s", config.source or "valores por defecto")
    return COMMANDS[args.command](args, config)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        return run(args)
    except Exception as exc:
        for kind, code, label in ERROR_KINDS:
            if isinstance(exc, kind):
                print(f"ERROR: {label}: {exc}", file=sys.stderr)
                return code
        LOGGER.debug("Error inesperado", exc_info=True)
        print(f"ERROR: unexpected: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    raise SystemExit(main())
