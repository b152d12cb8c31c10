#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""CSV ingestion and output writing.

Link files: ``street_id,scenario,distance_m,path_gain_db,corner_distance_m``.
Malformed rows are rejected with line number and reason; more than 10%
rejected rows fails the whole file.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from common_runtime import SIG_DIGITS_FORMAT, DomainError, InputDataError, ensure_directories
from angular_processing import AngularScan, DegradationCdf, ScanMetadata
from model_fitting import LinkRecord, Scenario


LOGGER = logging.getLogger(__name__)

LINK_COLUMNS = ["street_id", "scenario", "distance_m", "path_gain_db", "corner_distance_m"]
SCAN_COLUMNS = ["angle_deg", "power_mw"]
SCAN_META_KEYS = ("tx_power_dbm", "tx_gain_dbi", "rx_elev_gain_dbi")
DEGRADATION_COLUMNS = ["degradation_db", "prob"]
MAX_REJECTED_FRACTION = 0.10


@dataclass(frozen=True)
class RejectedRow:
    line: int
    reason: str


@dataclass
class DatasetManifest:
    input_paths: list[Path]
    total_rows: int = 0
    accepted_rows: int = 0
    scenario_counts: dict[str, int] = field(default_factory=dict)
    rejected: list[RejectedRow] = field(default_factory=list)

    @property
    def rejected_rows(self) -> int:
        return len(self.rejected)

    def rejected_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"line": r.line, "reason": r.reason} for r in self.rejected],
            columns=["line", "reason"],
        )


def require_cols(df: pd.DataFrame, cols: Sequence[str], source: Path) -> None:
    missing = [c for c in cols if c not in df.columns]
    if missing:
        raise InputDataError(f"Faltan columnas {missing} en {source}")


def _read_csv_text(path: Path) -> pd.DataFrame:
    if not path.is_file():
        raise FileNotFoundError(f"No existe el archivo de entrada: {path}")
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise InputDataError(f"Archivo vacío o sin encabezado: {path}") from exc


def _parse_link_row(row: pd.Series) -> LinkRecord:
    street_id = row["street_id"].strip()
    if not street_id:
        raise ValueError("street_id vacío")
    try:
        scenario = Scenario(row["scenario"].strip())
    except ValueError as exc:
        raise ValueError(f"escenario desconocido '{row['scenario']}'") from exc
    try:
        distance = float(row["distance_m"])
        gain = float(row["path_gain_db"])
    except ValueError as exc:
        raise ValueError("valor numérico inválido en distance_m/path_gain_db") from exc
    corner_raw = row["corner_distance_m"].strip()
    corner = None
    if corner_raw:
        try:
            corner = float(corner_raw)
        except ValueError as exc:
            raise ValueError(f"corner_distance_m inválido '{corner_raw}'") from exc
    if distance < 1.0:
        raise ValueError(f"distance_m={distance:g} < 1 m")
    if scenario is Scenario.AROUND_CORNER and corner is None:
        raise ValueError("AroundCorner sin corner_distance_m")
    return LinkRecord(street_id, scenario, distance, gain, corner)


def load_links(path: str | Path) -> tuple[list[LinkRecord], DatasetManifest]:
    path = Path(path)
    df = _read_csv_text(path)
    require_cols(df, LINK_COLUMNS, path)

    manifest = DatasetManifest(input_paths=[path], total_rows=len(df))
    records: list[LinkRecord] = []
    for idx, row in df.iterrows():
        line = int(idx) + 2  # header is line 1
        try:
            record = _parse_link_row(row)
        except (ValueError, DomainError) as exc:
            manifest.rejected.append(RejectedRow(line, str(exc)))
            LOGGER.warning("Fila %d de %s rechazada: %s", line, path.name, exc)
            continue
        records.append(record)

    manifest.accepted_rows = len(records)
    manifest.scenario_counts = dict(Counter(r.scenario.value for r in records))
    if manifest.total_rows and manifest.rejected_rows / manifest.total_rows > MAX_REJECTED_FRACTION:
        raise InputDataError(
            f"{manifest.rejected_rows} de {manifest.total_rows} filas rechazadas en {path} "
            f"(máximo {MAX_REJECTED_FRACTION:.0%})"
        )
    LOGGER.info("OK: %d enlaces leídos de %s (%d rechazados)", manifest.accepted_rows, path.name, manifest.rejected_rows)
    return records, manifest


def links_frame(records: Sequence[LinkRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "street_id": r.street_id,
                "scenario": r.scenario.value,
                "distance_m": r.unwrapped_distance_m,
                "path_gain_db": r.path_gain_db,
                "corner_distance_m": r.corner_distance_m,
            }
            for r in records
        ],
        columns=LINK_COLUMNS,
    )


def write_links(records: Sequence[LinkRecord], path: str | Path) -> Path:
    """Full-precision link CSV; ``load_links`` reads it back unchanged."""
    path = Path(path)
    ensure_directories([path.parent])
    links_frame(records).to_csv(path, index=False, encoding="utf-8")
    return path


def write_frame(df: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    ensure_directories([path.parent])
    df.to_csv(path, index=False, encoding="utf-8", float_format=SIG_DIGITS_FORMAT)
    LOGGER.info("OK: %s", path)
    return path


def load_scan(path: str | Path, meta_path: str | Path | None = None) -> AngularScan:
    """Scan CSV plus JSON sidecar (same stem, ``.json``) with the link metadata."""
    path = Path(path)
    df = _read_csv_text(path)
    require_cols(df, SCAN_COLUMNS, path)
    try:
        angles = df["angle_deg"].astype(float).to_numpy()
        power = df["power_mw"].astype(float).to_numpy()
    except ValueError as exc:
        raise InputDataError(f"Valores no numéricos en {path}") from exc

    sidecar = Path(meta_path) if meta_path is not None else path.with_suffix(".json")
    if sidecar.is_file():
        try:
            raw = json.loads(sidecar.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputDataError(f"JSON inválido en {sidecar}: {exc}") from exc
        if not isinstance(raw, dict):
            raise InputDataError(f"{sidecar} debe contener un objeto JSON")
        unknown = sorted(set(raw) - set(SCAN_META_KEYS))
        if unknown:
            raise InputDataError(f"Claves desconocidas en {sidecar}: {unknown}")
        try:
            meta = ScanMetadata(**{k: float(raw.get(k, 0.0)) for k in SCAN_META_KEYS})
        except (TypeError, ValueError) as exc:
            raise InputDataError(f"Metadato no numérico en {sidecar}: {exc}") from exc
    else:
        LOGGER.warning("Sin metadatos para %s; se asume P_T = G_T = G_elev = 0", path.name)
        meta = ScanMetadata()

    try:
        return AngularScan(angles, power, meta)
    except DomainError as exc:
        raise InputDataError(f"Barrido inválido en {path}: {exc}") from exc


def load_degradation_cdf(path: str | Path | None) -> DegradationCdf:
    if path is None:
        return DegradationCdf.default()
    path = Path(path)
    df = _read_csv_text(path)
    require_cols(df, DEGRADATION_COLUMNS, path)
    try:
        deg = df["degradation_db"].astype(float).to_numpy()
        prob = df["prob"].astype(float).to_numpy()
    except ValueError as exc:
        raise InputDataError(f"Valores no numéricos en {path}") from exc
    return DegradationCdf(deg, prob)


def cdf_frame(values: np.ndarray, probabilities: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({"value_db": values, "prob": probabilities, "band_lo": lower, "band_hi": upper})
