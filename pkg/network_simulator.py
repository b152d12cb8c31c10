#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Downlink coverage of rooftop cells on a Manhattan street grid.

Streets are centre lines at multiples of the block dimensions; sites sit
on a lattice of intersections with four cells each, one per street
direction. A cell reaches UEs ahead on its own street (same-street model)
or one turn off it (corner-diffraction model). The strongest cell serves,
every other reachable cell interferes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from angular_processing import DegradationCdf
from common_runtime import ConfigError, ToolConfig
from propagation_models import (
    AFTER_CORNER_MIN_M,
    CornerModel,
    SlopeInterceptModel,
    eval_corner_array,
    eval_slope_intercept,
    preset,
)


LOGGER = logging.getLogger(__name__)

THERMAL_NOISE_DBM_HZ = -174.0
_ON_STREET_TOL_M = 1e-6
DEFAULT_PERCENTILES = (10.0, 50.0, 90.0)


class Facing(Enum):
    EAST = (1, 0)
    WEST = (-1, 0)
    NORTH = (0, 1)
    SOUTH = (0, -1)

    @property
    def along_x(self) -> bool:
        return self.value[1] == 0

    @property
    def sign(self) -> int:
        return self.value[0] if self.along_x else self.value[1]


class RouteClass(str, Enum):
    SAME_STREET = "SameStreet"
    ONE_CORNER = "OneCorner"
    UNREACHABLE = "Unreachable"


class InterferenceModel(str, Enum):
    FULL = "full"
    AIMED = "aimed"


_ROUTE_CODES = {0: RouteClass.UNREACHABLE, 1: RouteClass.SAME_STREET, 2: RouteClass.ONE_CORNER}


# ============================================================
# Grid
# ============================================================

@dataclass(frozen=True)
class GridSpec:
    block_long_m: float = 200.0
    block_short_m: float = 50.0
    blocks_x: int = 8
    blocks_y: int = 16
    site_spacing_long_m: float = 400.0
    site_spacing_short_m: float = 200.0
    ue_step_m: float = 3.0

    def __post_init__(self) -> None:
        if self.blocks_x < 4 or self.blocks_y < 4:
            raise ConfigError(f"Se requieren al menos 4x4 manzanas (recibido {self.blocks_x}x{self.blocks_y})")
        if min(self.block_long_m, self.block_short_m, self.ue_step_m) <= 0:
            raise ConfigError("Las dimensiones de manzana y el paso de UE deben ser positivos")
        for spacing, block, name in (
            (self.site_spacing_long_m, self.block_long_m, "site_spacing_long_m"),
            (self.site_spacing_short_m, self.block_short_m, "site_spacing_short_m"),
        ):
            ratio = spacing / block
            if ratio < 1 - 1e-9 or not math.isclose(ratio, round(ratio), abs_tol=1e-9):
                raise ConfigError(f"grid.{name}={spacing:g} no es múltiplo de la manzana ({block:g} m)")

    @classmethod
    def from_config(cls, config: ToolConfig) -> "GridSpec":
        return cls(
            block_long_m=config.get_float("grid.block_long_m"),
            block_short_m=config.get_float("grid.block_short_m"),
            blocks_x=config.get_int("grid.blocks_x"),
            blocks_y=config.get_int("grid.blocks_y"),
            site_spacing_long_m=config.get_float("grid.site_spacing_long_m"),
            site_spacing_short_m=config.get_float("grid.site_spacing_short_m"),
            ue_step_m=config.get_float("grid.ue_step_m"),
        )

    @property
    def width_m(self) -> float:
        return self.blocks_x * self.block_long_m

    @property
    def height_m(self) -> float:
        return self.blocks_y * self.block_short_m

    @property
    def site_density_per_km2(self) -> float:
        return 1e6 / (self.site_spacing_long_m * self.site_spacing_short_m)


@dataclass(frozen=True)
class Cell:
    cell_id: int
    site_id: int
    x_m: float
    y_m: float
    facing: Facing
    height_m: float = 20.0
    tx_power_dbm: float = 28.0
    antenna_gain_dbi: float = 23.0


@dataclass(frozen=True)
class UePoint:
    x_m: float
    y_m: float
    on_x_street: bool  # True on a street running along x (y fixed)
    ue_gain_dbi: float = 6.0
    noise_figure_db: float = 9.0
    height_m: float = 1.5


@dataclass(frozen=True, eq=False)
class StreetGrid:
    spec: GridSpec
    street_xs: np.ndarray  # positions of streets running along y
    street_ys: np.ndarray  # positions of streets running along x
    sites: tuple[tuple[float, float], ...]
    cells: tuple[Cell, ...]

    @property
    def site_density_per_km2(self) -> float:
        return self.spec.site_density_per_km2

    def ue_points(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """UE coordinates at segment-cell midpoints; intersections are never sampled."""
        xs: list[np.ndarray] = []
        ys: list[np.ndarray] = []
        flags: list[np.ndarray] = []
        step = self.spec.ue_step_m

        offsets_long = _segment_offsets(self.spec.block_long_m, step)
        for y in self.street_ys:
            for x0 in self.street_xs[:-1]:
                xs.append(x0 + offsets_long)
                ys.append(np.full(offsets_long.size, y))
                flags.append(np.ones(offsets_long.size, dtype=bool))

        offsets_short = _segment_offsets(self.spec.block_short_m, step)
        for x in self.street_xs:
            for y0 in self.street_ys[:-1]:
                xs.append(np.full(offsets_short.size, x))
                ys.append(y0 + offsets_short)
                flags.append(np.zeros(offsets_short.size, dtype=bool))

        return np.concatenate(xs), np.concatenate(ys), np.concatenate(flags)


def _segment_offsets(length_m: float, step_m: float) -> np.ndarray:
    count = max(int(math.ceil(length_m / step_m - 1e-9)), 1)
    offsets = step_m / 2.0 + step_m * np.arange(count)
    offsets = offsets[offsets < length_m]
    return offsets if offsets.size else np.array([length_m / 2.0])


def build_grid(
    spec: GridSpec,
    cell_height_m: float = 20.0,
    tx_power_dbm: float = 28.0,
    antenna_gain_dbi: float = 23.0,
) -> StreetGrid:
    street_xs = spec.block_long_m * np.arange(spec.blocks_x + 1)
    street_ys = spec.block_short_m * np.arange(spec.blocks_y + 1)
    every_x = int(round(spec.site_spacing_long_m / spec.block_long_m))
    every_y = int(round(spec.site_spacing_short_m / spec.block_short_m))

    sites: list[tuple[float, float]] = []
    cells: list[Cell] = []
    for ix in range(0, spec.blocks_x + 1, every_x):
        for iy in range(0, spec.blocks_y + 1, every_y):
            site_id = len(sites)
            x, y = float(street_xs[ix]), float(street_ys[iy])
            sites.append((x, y))
            for facing in Facing:
                cells.append(Cell(len(cells), site_id, x, y, facing, cell_height_m, tx_power_dbm, antenna_gain_dbi))

    LOGGER.info(
        "Grilla %dx%d manzanas: %d sitios, %d celdas, densidad %.2f sitios/km2",
        spec.blocks_x,
        spec.blocks_y,
        len(sites),
        len(cells),
        spec.site_density_per_km2,
    )
    return StreetGrid(spec, street_xs, street_ys, tuple(sites), tuple(cells))


# ============================================================
# Routes and link budget
# ============================================================

@dataclass(frozen=True)
class RouteInfo:
    route_class: RouteClass
    unwrapped_distance_m: float = float("nan")
    corner_distance_m: float | None = None


def _classify_arrays(
    ue_x: np.ndarray,
    ue_y: np.ndarray,
    on_x_street: np.ndarray,
    cell_x: np.ndarray,
    cell_y: np.ndarray,
    along_x: np.ndarray,
    sign: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Route codes (0 unreachable, 1 same street, 2 one corner), unwrapped and corner distances."""
    ux, uy, ux_street = ue_x[:, None], ue_y[:, None], on_x_street[:, None]
    cx, cy, cax, cs = cell_x[None, :], cell_y[None, :], along_x[None, :], sign[None, :]

    ahead = np.where(cax, (ux - cx) * cs, (uy - cy) * cs)
    lateral = np.where(cax, np.abs(uy - cy), np.abs(ux - cx))
    on_cell_street = np.where(cax, ux_street, ~ux_street) & (lateral < _ON_STREET_TOL_M)
    on_cross_street = np.where(cax, ~ux_street, ux_street)

    same = on_cell_street & (ahead > _ON_STREET_TOL_M)
    corner = on_cross_street & (ahead > 1.0)

    codes = np.zeros(ahead.shape, dtype=np.int8)
    codes[same] = 1
    codes[corner] = 2
    unwrapped = np.where(same, ahead, np.where(corner, ahead + lateral, np.nan))
    corner_distance = np.where(corner, ahead, np.nan)
    return codes, unwrapped, corner_distance


def classify_route(ue: UePoint, cell: Cell) -> RouteInfo:
    codes, unwrapped, corner = _classify_arrays(
        np.array([ue.x_m]),
        np.array([ue.y_m]),
        np.array([ue.on_x_street]),
        np.array([cell.x_m]),
        np.array([cell.y_m]),
        np.array([cell.facing.along_x]),
        np.array([cell.facing.sign]),
    )
    route = _ROUTE_CODES[int(codes[0, 0])]
    if route is RouteClass.UNREACHABLE:
        return RouteInfo(route)
    dc = float(corner[0, 0]) if route is RouteClass.ONE_CORNER else None
    return RouteInfo(route, float(unwrapped[0, 0]), dc)


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float = 28.0
    antenna_gain_dbi: float = 23.0
    ue_gain_dbi: float = 6.0
    noise_figure_db: float = 9.0
    bandwidth_hz: float = 800e6
    implementation_penalty_db: float = 3.0
    cell_height_m: float = 20.0
    ue_height_m: float = 1.5

    @classmethod
    def from_config(cls, config: ToolConfig) -> "LinkBudget":
        return cls(
            tx_power_dbm=config.get_float("budget.tx_power_dbm"),
            antenna_gain_dbi=config.get_float("budget.antenna_gain_dbi"),
            ue_gain_dbi=config.get_float("budget.ue_gain_dbi"),
            noise_figure_db=config.get_float("budget.noise_figure_db"),
            bandwidth_hz=config.get_float("budget.bandwidth_hz"),
            implementation_penalty_db=config.get_float("budget.implementation_penalty_db"),
            cell_height_m=config.get_float("budget.cell_height_m"),
            ue_height_m=config.get_float("budget.ue_height_m"),
        )

    @property
    def noise_floor_dbm(self) -> float:
        return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db

    @property
    def eirp_dbm(self) -> float:
        return self.tx_power_dbm + self.antenna_gain_dbi

    def shannon_rate_bps(self, sinr_db: np.ndarray | float) -> np.ndarray | float:
        sinr = np.asarray(sinr_db, dtype=float)
        rate = self.bandwidth_hz * np.log2(1.0 + 10.0 ** ((sinr - self.implementation_penalty_db) / 10.0))
        return float(rate) if rate.ndim == 0 else rate


@dataclass(frozen=True)
class LinkEval:
    route_class: RouteClass
    unwrapped_distance_m: float
    corner_distance_m: float | None
    path_gain_db: float
    rx_power_dbm: float
    clamped: bool = False


def route_path_gain(
    route: RouteInfo,
    same_street_model: SlopeInterceptModel,
    corner_model: CornerModel,
) -> tuple[float, bool]:
    if route.route_class is RouteClass.SAME_STREET:
        return float(eval_slope_intercept(same_street_model, max(route.unwrapped_distance_m, 1.0))), False
    if route.route_class is RouteClass.ONE_CORNER:
        values, clamped = eval_corner_array(corner_model, route.unwrapped_distance_m, route.corner_distance_m)
        return float(values), bool(clamped)
    return float("-inf"), False


def link_budget(
    route: RouteInfo,
    budget: LinkBudget,
    same_street_model: SlopeInterceptModel | None = None,
    corner_model: CornerModel | None = None,
    degradation_db: float = 0.0,
    shadowing_db: float = 0.0,
) -> LinkEval:
    same_street_model = same_street_model or preset("roof-edge")
    corner_model = corner_model or preset("corner-diffraction-friis")
    path_gain, clamped = route_path_gain(route, same_street_model, corner_model)
    if route.route_class is RouteClass.UNREACHABLE:
        rx = float("-inf")
    else:
        rx = budget.eirp_dbm - degradation_db + budget.ue_gain_dbi + path_gain + shadowing_db
    return LinkEval(route.route_class, route.unwrapped_distance_m, route.corner_distance_m, path_gain, rx, clamped)


# ============================================================
# Scenario and coverage map
# ============================================================

@dataclass(frozen=True, eq=False)
class GridScenario:
    grid: StreetGrid
    budget: LinkBudget = field(default_factory=LinkBudget)
    degradation: DegradationCdf = field(default_factory=DegradationCdf.default)
    same_street_model: SlopeInterceptModel = field(default_factory=lambda: preset("roof-edge"))
    corner_model: CornerModel = field(default_factory=lambda: preset("corner-diffraction-friis"))
    shadowing: bool = False
    interference: InterferenceModel = InterferenceModel.AIMED
    beamwidth_deg: float = 10.0
    sidelobe_floor_db: float = -35.0
    elevation_beamwidth_deg: float | None = 8.0
    after_corner_min_m: float = AFTER_CORNER_MIN_M

    @classmethod
    def default(cls, spec: GridSpec | None = None) -> "GridScenario":
        budget = LinkBudget()
        return cls(grid=build_grid(spec or GridSpec(), budget.cell_height_m, budget.tx_power_dbm, budget.antenna_gain_dbi))

    @classmethod
    def from_config(
        cls,
        config: ToolConfig,
        degradation: DegradationCdf,
        presets: Mapping[str, object] | None = None,
    ) -> "GridScenario":
        budget = LinkBudget.from_config(config)
        grid = build_grid(GridSpec.from_config(config), budget.cell_height_m, budget.tx_power_dbm, budget.antenna_gain_dbi)
        same = preset("roof-edge", presets)
        corner = preset("corner-diffraction-friis", presets)
        if not isinstance(same, SlopeInterceptModel) or not isinstance(corner, CornerModel):
            raise ConfigError("Presets de simulación con tipo inesperado")
        return cls(
            grid=grid,
            budget=budget,
            degradation=degradation,
            same_street_model=same,
            corner_model=corner,
            shadowing=config.get_bool("shadowing.enabled"),
            interference=InterferenceModel(config.get_str("interference.model")),
            beamwidth_deg=config.get_float("interference.beamwidth_deg"),
            sidelobe_floor_db=config.get_float("interference.sidelobe_floor_db"),
            elevation_beamwidth_deg=config.get_float("interference.elevation_beamwidth_deg") or None,
            after_corner_min_m=config.get_float("fit.after_corner_min_m"),
        )

    def with_cells(self, cell_ids: Sequence[int]) -> "GridScenario":
        wanted = set(cell_ids)
        cells = tuple(c for c in self.grid.cells if c.cell_id in wanted)
        return replace(self, grid=replace(self.grid, cells=cells))


@dataclass(frozen=True, eq=False)
class CoverageMap:
    x_m: np.ndarray
    y_m: np.ndarray
    serving_cell: np.ndarray
    snr_db: np.ndarray
    sinr_db: np.ndarray
    rate_bps: np.ndarray
    route_class: np.ndarray
    noise_floor_dbm: float
    seed: int
    clamped_links: int = 0

    @property
    def n_ues(self) -> int:
        return int(self.x_m.size)

    @property
    def outage(self) -> np.ndarray:
        return self.serving_cell < 0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "x_m": self.x_m,
                "y_m": self.y_m,
                "serving_cell": self.serving_cell,
                "snr_db": self.snr_db,
                "sinr_db": self.sinr_db,
                "rate_bps": self.rate_bps,
                "route_class": self.route_class,
            }
        )


def _pattern_attenuation_db(offset_deg: np.ndarray, beamwidth_deg: float, floor_db: float) -> np.ndarray:
    # same Gaussian main lobe as gaussian_beam_pattern, in dB
    main_lobe = -40.0 * np.log10(2.0) * (offset_deg / beamwidth_deg) ** 2
    return np.maximum(main_lobe, floor_db)


def compute_map(scenario: GridScenario, seed: int) -> CoverageMap:
    """Serving cell, SNR, SINR and Shannon rate for every UE point.

    Each UE gets its own generator derived from ``seed``, so results do not
    depend on evaluation order. Outage UEs (no reachable cell) get rate 0
    and -inf SNR/SINR.
    """
    cells = scenario.grid.cells
    if not cells:
        raise ConfigError("El escenario no tiene celdas")
    ue_x, ue_y, on_x = scenario.grid.ue_points()
    n_ue, n_cell = ue_x.size, len(cells)
    budget = scenario.budget

    cell_x = np.array([c.x_m for c in cells])
    cell_y = np.array([c.y_m for c in cells])
    along_x = np.array([c.facing.along_x for c in cells])
    sign = np.array([c.facing.sign for c in cells], dtype=float)
    eirp = np.array([c.tx_power_dbm + c.antenna_gain_dbi for c in cells])

    codes, unwrapped, corner_distance = _classify_arrays(ue_x, ue_y, on_x, cell_x, cell_y, along_x, sign)
    same = codes == 1
    corner = codes == 2

    path_gain = np.full(codes.shape, -np.inf)
    path_gain[same] = eval_slope_intercept(scenario.same_street_model, np.maximum(unwrapped[same], 1.0))
    clamped_links = 0
    if np.any(corner):
        values, clamped = eval_corner_array(
            scenario.corner_model, unwrapped[corner], corner_distance[corner], scenario.after_corner_min_m
        )
        path_gain[corner] = values
        clamped_links = int(clamped.sum())
        if clamped_links:
            LOGGER.warning("%d enlaces de esquina evaluados con tramo mínimo de %.0f m", clamped_links, scenario.after_corner_min_m)

    root = np.random.SeedSequence(seed)
    ue_seeds, aim_seed = root.spawn(2)
    uniforms = np.empty((n_ue, n_cell))
    normals = np.empty((n_ue, n_cell))
    for i, child in enumerate(ue_seeds.spawn(n_ue)):
        rng = np.random.default_rng(child)
        uniforms[i] = rng.random(n_cell)
        normals[i] = rng.standard_normal(n_cell)

    degradation = scenario.degradation.inverse(uniforms)
    shadow = np.zeros(codes.shape)
    if scenario.shadowing:
        shadow[same] = scenario.same_street_model.sigma_db * normals[same]
        shadow[corner] = scenario.corner_model.sigma_db * normals[corner]

    reachable = codes > 0
    rx = np.where(
        reachable,
        eirp[None, :] - degradation + budget.ue_gain_dbi + path_gain + shadow,
        -np.inf,
    )

    outage = ~np.any(reachable, axis=1)
    serving = np.where(outage, -1, np.argmax(rx, axis=1))
    rows = np.arange(n_ue)
    serving_rx = np.where(outage, -np.inf, rx[rows, np.maximum(serving, 0)])

    interferer_rx = rx.copy()
    if scenario.interference is InterferenceModel.AIMED:
        aimed = choose_aims(serving, n_cell, np.random.default_rng(aim_seed))
        interferer_rx += aimed_pattern_loss_db(scenario, ue_x, ue_y, on_x, aimed)
    interferer_rx[rows[~outage], serving[~outage]] = -np.inf
    with np.errstate(divide="ignore"):
        interference_mw = np.sum(10.0 ** (interferer_rx / 10.0), axis=1)

    noise_dbm = budget.noise_floor_dbm
    noise_mw = 10.0 ** (noise_dbm / 10.0)
    snr = serving_rx - noise_dbm
    sinr = snr - 10.0 * np.log10(1.0 + interference_mw / noise_mw)
    rate = np.where(outage, 0.0, budget.shannon_rate_bps(np.where(outage, 0.0, sinr)))

    serving_codes = np.where(outage, 0, codes[rows, np.maximum(serving, 0)])
    route_labels = np.array([_ROUTE_CODES[int(c)].value for c in serving_codes], dtype=object)
    serving_ids = np.where(outage, -1, np.array([c.cell_id for c in cells])[np.maximum(serving, 0)])

    if np.any(outage):
        LOGGER.warning("%d UE sin celda alcanzable (outage)", int(outage.sum()))
    LOGGER.info("OK: mapa de cobertura con %d UE y %d celdas", n_ue, n_cell)
    return CoverageMap(
        x_m=ue_x,
        y_m=ue_y,
        serving_cell=serving_ids,
        snr_db=snr,
        sinr_db=sinr,
        rate_bps=rate,
        route_class=route_labels,
        noise_floor_dbm=noise_dbm,
        seed=int(seed),
        clamped_links=clamped_links,
    )


def choose_aims(serving: np.ndarray, n_cell: int, rng: np.random.Generator) -> np.ndarray:
    """Index of the UE each cell points at, drawn uniformly among its served UEs; -1 when it serves nobody."""
    aimed = np.full(n_cell, -1, dtype=np.int64)
    for j in range(n_cell):
        served = np.flatnonzero(serving == j)
        if served.size:
            aimed[j] = served[rng.integers(served.size)]
    return aimed


def aimed_pattern_loss_db(
    scenario: GridScenario,
    ue_x: np.ndarray,
    ue_y: np.ndarray,
    on_x_street: np.ndarray,
    aimed: np.ndarray,
) -> np.ndarray:
    """Pattern loss per (UE, cell) link when each cell points at one UE.

    Every route leaves the cell down the street it faces, so the azimuth at
    departure is the same for all reachable UEs. The beam turns only at the
    corner of the aimed UE and toward its side: a victim behind another
    corner sits 90 degrees off at its corner, one on the opposite side 180.
    With ``elevation_beamwidth_deg`` set, the beam also tilts down toward
    the first-leg distance of its target (the corner for a turning route).
    Silent cells give -inf.
    """
    cells = scenario.grid.cells
    cell_x = np.array([c.x_m for c in cells])
    cell_y = np.array([c.y_m for c in cells])
    along_x = np.array([c.facing.along_x for c in cells])
    sign = np.array([c.facing.sign for c in cells], dtype=float)
    codes, unwrapped, corner_distance = _classify_arrays(ue_x, ue_y, on_x_street, cell_x, cell_y, along_x, sign)
    turn_side = np.sign(np.where(along_x[None, :], ue_y[:, None] - cell_y[None, :], ue_x[:, None] - cell_x[None, :]))

    active = aimed >= 0
    cols = np.arange(cell_x.size)
    target = np.maximum(aimed, 0)
    aim_code = codes[target, cols]
    aim_corner = corner_distance[target, cols]
    aim_side = turn_side[target, cols]

    victim_corner = codes == 2
    same_corner = np.isclose(corner_distance, aim_corner[None, :], atol=_ON_STREET_TOL_M) & (aim_code[None, :] == 2)
    azimuth_offset = np.where(
        victim_corner & ~same_corner,
        90.0,
        np.where(victim_corner & (turn_side != aim_side[None, :]), 180.0, 0.0),
    )
    loss = _pattern_attenuation_db(azimuth_offset, scenario.beamwidth_deg, -np.inf)

    if scenario.elevation_beamwidth_deg is not None:
        drop_m = scenario.budget.cell_height_m - scenario.budget.ue_height_m
        first_leg = np.maximum(np.where(victim_corner, corner_distance, unwrapped), 1.0)
        tilt = np.degrees(np.arctan2(drop_m, first_leg))
        aim_tilt = tilt[target, cols]
        loss = loss + _pattern_attenuation_db(tilt - aim_tilt[None, :], scenario.elevation_beamwidth_deg, -np.inf)

    loss = np.maximum(loss, scenario.sidelobe_floor_db)
    return np.where(active[None, :] & (codes > 0), loss, -np.inf)


# ============================================================
# Percentiles
# ============================================================

def _percentile(values: np.ndarray, q: float) -> float:
    """Linear interpolation between order statistics; -inf propagates."""
    ordered = np.sort(np.asarray(values, dtype=float))
    if ordered.size == 0:
        return float("nan")
    position = q / 100.0 * (ordered.size - 1)
    lo = int(math.floor(position))
    hi = min(lo + 1, ordered.size - 1)
    frac = position - lo
    if frac == 0.0 or ordered[lo] == ordered[hi] or np.isinf(ordered[lo]):
        return float(ordered[lo])
    return float(ordered[lo] + (ordered[hi] - ordered[lo]) * frac)


def percentile_report(coverage: CoverageMap, percentiles: Sequence[float] = DEFAULT_PERCENTILES) -> pd.DataFrame:
    if coverage.n_ues == 0:
        raise ConfigError("Mapa de cobertura vacío")
    rows = []
    for q in percentiles:
        if not 0 <= q <= 100:
            raise ConfigError(f"Percentil fuera de [0, 100]: {q}")
        snr = _percentile(coverage.snr_db, q)
        sinr = _percentile(coverage.sinr_db, q)
        gap = snr - sinr if np.isfinite(snr) and np.isfinite(sinr) else float("nan")
        rows.append(
            {
                "percentile": float(q),
                "snr_db": snr,
                "sinr_db": sinr,
                "rate_bps": _percentile(coverage.rate_bps, q),
                "snr_minus_sinr_db": gap,
            }
        )
    return pd.DataFrame(rows, columns=["percentile", "snr_db", "sinr_db", "rate_bps", "snr_minus_sinr_db"])
