from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from angular_processing import DegradationCdf
from common_runtime import CONFIG_FILENAME, ConfigError, default_config, load_tool_config, parse_config_text, project_path
from network_simulator import (
    Cell,
    CoverageMap,
    Facing,
    GridScenario,
    GridSpec,
    InterferenceModel,
    LinkBudget,
    RouteClass,
    UePoint,
    aimed_pattern_loss_db,
    build_grid,
    choose_aims,
    classify_route,
    compute_map,
    link_budget,
    percentile_report,
)
from propagation_models import eval_corner_array, preset


SMALL = GridSpec(blocks_x=4, blocks_y=4)


def _small_scenario(**kwargs) -> GridScenario:
    return replace(GridScenario.default(SMALL), **kwargs)


@pytest.fixture(scope="module")
def default_map() -> CoverageMap:
    return compute_map(GridScenario.default(), seed=1)


@pytest.fixture(scope="module")
def default_full_map() -> CoverageMap:
    return compute_map(replace(GridScenario.default(), interference=InterferenceModel.FULL), seed=1)


class TestGrid:
    def test_small_grid_counts(self):
        grid = build_grid(SMALL)
        assert len(grid.sites) == 6
        assert len(grid.cells) == 24

    def test_nine_sites_on_four_by_eight(self):
        grid = build_grid(GridSpec(blocks_x=4, blocks_y=8))
        assert len(grid.sites) == 9
        assert len(grid.cells) == 36

    def test_default_grid(self):
        grid = build_grid(GridSpec())
        assert len(grid.cells) == 100
        assert grid.site_density_per_km2 == pytest.approx(12.5)
        ue_x, _, _ = grid.ue_points()
        assert ue_x.size == 11_560

    def test_four_cells_per_site(self):
        grid = build_grid(SMALL)
        facings = [c.facing for c in grid.cells if c.site_id == 0]
        assert sorted(f.name for f in facings) == sorted(f.name for f in Facing)

    def test_no_ue_on_intersections(self):
        grid = build_grid(SMALL)
        ue_x, ue_y, _ = grid.ue_points()
        on_x_line = np.isin(ue_x, grid.street_xs)
        on_y_line = np.isin(ue_y, grid.street_ys)
        assert not np.any(on_x_line & on_y_line)

    def test_needs_four_by_four(self):
        with pytest.raises(ConfigError):
            GridSpec(blocks_x=3)

    def test_spacing_must_align_with_blocks(self):
        with pytest.raises(ConfigError, match="site_spacing_long_m"):
            GridSpec(site_spacing_long_m=300.0)

    def test_from_config(self):
        assert GridSpec.from_config(default_config()) == GridSpec()


CELL = Cell(0, 0, 400.0, 200.0, Facing.EAST)


class TestRoutes:
    def test_same_street_ahead(self):
        route = classify_route(UePoint(451.5, 200.0, True), CELL)
        assert route.route_class is RouteClass.SAME_STREET
        assert route.unwrapped_distance_m == pytest.approx(51.5)
        assert route.corner_distance_m is None

    def test_behind_is_unreachable(self):
        assert classify_route(UePoint(398.5, 200.0, True), CELL).route_class is RouteClass.UNREACHABLE

    def test_one_corner(self):
        route = classify_route(UePoint(600.0, 231.5, False), CELL)
        assert route.route_class is RouteClass.ONE_CORNER
        assert route.corner_distance_m == pytest.approx(200.0)
        assert route.unwrapped_distance_m == pytest.approx(231.5)

    def test_same_street_one_fifty_meters(self):
        route = classify_route(UePoint(550.0, 200.0, True), CELL)
        assert route.route_class is RouteClass.SAME_STREET
        assert route.unwrapped_distance_m == pytest.approx(150.0)

    def test_one_corner_two_sixty_meters(self):
        route = classify_route(UePoint(600.0, 260.0, False), CELL)
        assert route.route_class is RouteClass.ONE_CORNER
        assert route.corner_distance_m == pytest.approx(200.0)
        assert route.unwrapped_distance_m == pytest.approx(260.0)

    def test_cross_street_through_own_site(self):
        assert classify_route(UePoint(400.0, 231.5, False), CELL).route_class is RouteClass.UNREACHABLE

    def test_parallel_street(self):
        assert classify_route(UePoint(451.5, 250.0, True), CELL).route_class is RouteClass.UNREACHABLE

    def test_south_facing_cell(self):
        cell = Cell(1, 0, 400.0, 200.0, Facing.SOUTH)
        route = classify_route(UePoint(400.0, 160.0, False), cell)
        assert route.route_class is RouteClass.SAME_STREET
        assert route.unwrapped_distance_m == pytest.approx(40.0)


class TestLinkBudget:
    def test_noise_floor(self):
        assert LinkBudget().noise_floor_dbm == pytest.approx(-75.97, abs=0.005)

    def test_same_street_two_hundred_meters(self):
        route = classify_route(UePoint(600.0 - 1e-9, 200.0, True), CELL)
        link = link_budget(route, LinkBudget())
        assert link.rx_power_dbm == pytest.approx(-59.92, abs=0.01)

    def test_corner_link_uses_corner_model(self):
        route = classify_route(UePoint(600.0, 231.5, False), CELL)
        link = link_budget(route, LinkBudget(), degradation_db=2.0)
        expected, _ = eval_corner_array(preset("corner-diffraction-friis"), 231.5, 200.0)
        assert link.path_gain_db == pytest.approx(float(expected))
        assert link.rx_power_dbm == pytest.approx(28 + 23 - 2.0 + 6 + float(expected))

    def test_unreachable(self):
        route = classify_route(UePoint(398.5, 200.0, True), CELL)
        assert link_budget(route, LinkBudget()).rx_power_dbm == float("-inf")

    def test_shannon_rate(self):
        budget = LinkBudget()
        assert budget.shannon_rate_bps(3.0) == pytest.approx(800e6)
        assert budget.shannon_rate_bps(np.array([3.0]))[0] == pytest.approx(800e6)


class TestComputeMap:
    def test_sinr_never_exceeds_snr(self):
        coverage = compute_map(_small_scenario(), seed=4)
        served = ~coverage.outage
        assert served.any()
        assert np.all(coverage.sinr_db[served] <= coverage.snr_db[served] + 1e-12)

    def test_single_cell_has_no_interference(self):
        coverage = compute_map(_small_scenario().with_cells([0]), seed=4)
        served = ~coverage.outage
        assert served.any() and coverage.outage.any()
        assert coverage.sinr_db[served] == pytest.approx(coverage.snr_db[served])
        assert np.all(coverage.serving_cell[served] == 0)
        assert np.all(coverage.rate_bps[coverage.outage] == 0.0)
        assert np.all(np.isneginf(coverage.snr_db[coverage.outage]))

    def test_reproducible(self):
        scenario = _small_scenario(shadowing=True)
        first = compute_map(scenario, seed=9).to_frame()
        second = compute_map(scenario, seed=9).to_frame()
        assert first.equals(second)

    def test_seed_changes_draws(self):
        scenario = _small_scenario()
        first = compute_map(scenario, seed=1)
        second = compute_map(scenario, seed=2)
        assert not np.array_equal(first.snr_db, second.snr_db)

    def test_matches_scalar_link_budget(self):
        scenario = _small_scenario(degradation=DegradationCdf.zero())
        coverage = compute_map(scenario, seed=0)
        ue_x, ue_y, on_x = scenario.grid.ue_points()
        noise = scenario.budget.noise_floor_dbm
        for i in (0, 57, 400, ue_x.size - 1):
            ue = UePoint(float(ue_x[i]), float(ue_y[i]), bool(on_x[i]))
            best = max(
                link_budget(classify_route(ue, cell), scenario.budget).rx_power_dbm for cell in scenario.grid.cells
            )
            assert coverage.snr_db[i] == pytest.approx(best - noise)

    def test_aimed_interference_is_lower(self):
        full = compute_map(_small_scenario(interference=InterferenceModel.FULL), seed=3)
        aimed = compute_map(_small_scenario(interference=InterferenceModel.AIMED), seed=3)
        served = ~full.outage
        assert np.array_equal(full.serving_cell, aimed.serving_cell)
        assert np.all(aimed.sinr_db[served] >= full.sinr_db[served] - 1e-9)

    def test_frame_columns(self):
        frame = compute_map(_small_scenario(), seed=1).to_frame()
        assert list(frame.columns) == ["x_m", "y_m", "serving_cell", "snr_db", "sinr_db", "rate_bps", "route_class"]
        assert set(frame["route_class"]) <= {r.value for r in RouteClass}

    def test_from_config(self):
        scenario = GridScenario.from_config(default_config(), DegradationCdf.default())
        assert len(scenario.grid.cells) == 100
        assert scenario.interference is InterferenceModel.AIMED
        assert scenario.sidelobe_floor_db == pytest.approx(-35.0)
        assert scenario.elevation_beamwidth_deg == pytest.approx(8.0)

    def test_zero_elevation_beamwidth_disables_tilt(self):
        config = parse_config_text("interference.elevation_beamwidth_deg = 0\n")
        scenario = GridScenario.from_config(config, DegradationCdf.default())
        assert scenario.elevation_beamwidth_deg is None

    def test_extra_interferer_never_raises_sinr(self):
        base = _small_scenario(interference=InterferenceModel.FULL, degradation=DegradationCdf.zero())
        subset_ids = [c.cell_id for c in base.grid.cells if c.site_id != 1]
        subset = compute_map(base.with_cells(subset_ids), seed=5)
        superset = compute_map(base, seed=5)
        kept = (subset.serving_cell >= 0) & (subset.serving_cell == superset.serving_cell)
        assert kept.sum() > 100
        assert np.all(superset.sinr_db[kept] <= subset.sinr_db[kept] + 1e-9)


class TestAimedPatternLoss:
    UE_X = np.array([550.0, 400.0, 700.0, 550.0, 250.0, 400.0])
    UE_Y = np.array([200.0, 100.0, 200.0, 100.0, 200.0, 1.5])
    ON_X = np.array([True, False, True, True, True, False])

    def _loss(self, scenario: GridScenario) -> tuple[np.ndarray, int]:
        north = next(c for c in scenario.grid.cells if (c.x_m, c.y_m, c.facing) == (400.0, 0.0, Facing.NORTH))
        aimed = np.full(len(scenario.grid.cells), -1)
        aimed[north.cell_id] = 0
        loss = aimed_pattern_loss_db(scenario, self.UE_X, self.UE_Y, self.ON_X, aimed)
        return loss, north.cell_id

    def test_first_leg_departs_along_the_street(self):
        loss, j = self._loss(_small_scenario(elevation_beamwidth_deg=None))
        assert loss[0, j] == pytest.approx(0.0)
        assert loss[1, j] == pytest.approx(0.0)
        assert loss[2, j] == pytest.approx(0.0)
        assert loss[5, j] == pytest.approx(0.0)

    def test_other_corner_or_side_hits_floor(self):
        loss, j = self._loss(_small_scenario(elevation_beamwidth_deg=None))
        assert loss[3, j] == pytest.approx(-35.0)
        assert loss[4, j] == pytest.approx(-35.0)

    def test_silent_cells(self):
        loss, j = self._loss(_small_scenario())
        others = np.delete(loss, j, axis=1)
        assert np.all(np.isneginf(others))

    def test_elevation_tilt_toward_corner(self):
        loss, j = self._loss(_small_scenario())
        tilt_target = math.degrees(math.atan2(18.5, 200.0))
        tilt_victim = math.degrees(math.atan2(18.5, 100.0))
        expected = -40.0 * math.log10(2.0) * ((tilt_victim - tilt_target) / 8.0) ** 2
        assert loss[0, j] == pytest.approx(0.0)
        assert loss[2, j] == pytest.approx(0.0)
        assert loss[1, j] == pytest.approx(expected)
        assert -35.0 < expected < -1.0
        assert loss[5, j] == pytest.approx(-35.0)

    def test_choose_aims_picks_served_ues(self):
        serving = np.array([0, 0, 2, -1, 2, 2])
        aimed = choose_aims(serving, 4, np.random.default_rng(0))
        assert aimed[1] == -1 and aimed[3] == -1
        assert serving[aimed[0]] == 0
        assert serving[aimed[2]] == 2


class TestPercentileReport:
    def _map(self, snr, sinr, rate):
        n = len(snr)
        return CoverageMap(
            x_m=np.zeros(n),
            y_m=np.zeros(n),
            serving_cell=np.zeros(n, dtype=int),
            snr_db=np.array(snr, dtype=float),
            sinr_db=np.array(sinr, dtype=float),
            rate_bps=np.array(rate, dtype=float),
            route_class=np.array(["SameStreet"] * n, dtype=object),
            noise_floor_dbm=-75.97,
            seed=0,
        )

    def test_linear_interpolation(self):
        report = percentile_report(self._map([10, 20, 30, 40, 50], [0, 5, 10, 15, 20], [1, 2, 3, 4, 5]), (10, 50))
        assert list(report.columns) == ["percentile", "snr_db", "sinr_db", "rate_bps", "snr_minus_sinr_db"]
        assert report["snr_db"].tolist() == pytest.approx([14.0, 30.0])
        assert report["snr_minus_sinr_db"].tolist() == pytest.approx([12.0, 20.0])

    def test_outage_propagates(self):
        inf = float("-inf")
        report = percentile_report(self._map([inf, 20, 30, 40, 50], [inf, 5, 10, 15, 20], [0, 2, 3, 4, 5]), (10, 50))
        assert report["snr_db"].iloc[0] == inf
        assert np.isnan(report["snr_minus_sinr_db"].iloc[0])
        assert report["snr_db"].iloc[1] == pytest.approx(30.0)

    def test_invalid_percentile(self):
        with pytest.raises(ConfigError):
            percentile_report(self._map([1, 2], [1, 2], [1, 2]), (120,))


@pytest.mark.slow
class TestDefaultScenario:
    @pytest.mark.timeout(120)
    def test_rate_and_gap_bands(self, default_map):
        report = percentile_report(default_map).set_index("percentile")
        assert default_map.noise_floor_dbm == pytest.approx(-75.97, abs=0.005)
        assert 175e6 <= report.loc[10.0, "rate_bps"] <= 700e6
        assert report.loc[90.0, "snr_minus_sinr_db"] == pytest.approx(5.0, abs=2.0)
        assert report.loc[90.0, "snr_db"] == pytest.approx(38.8, abs=1.0)
        assert not default_map.outage.any()

    @pytest.mark.timeout(120)
    def test_shipped_config_is_the_default_scenario(self, default_map):
        config = load_tool_config(project_path(CONFIG_FILENAME))
        scenario = GridScenario.from_config(config, DegradationCdf.default())
        coverage = compute_map(scenario, seed=1)
        assert np.array_equal(coverage.sinr_db, default_map.sinr_db)

    @pytest.mark.timeout(120)
    def test_full_interference_is_an_upper_bound(self, default_map, default_full_map):
        report = percentile_report(default_full_map).set_index("percentile")
        assert 100e6 <= report.loc[10.0, "rate_bps"] <= 200e6
        assert report.loc[10.0, "snr_db"] == pytest.approx(20.4, abs=1.0)
        assert report.loc[90.0, "snr_minus_sinr_db"] > 20.0
        assert np.all(default_full_map.sinr_db <= default_map.sinr_db + 1e-9)

    @pytest.mark.timeout(120)
    def test_ue_step_does_not_move_percentiles(self, default_full_map):
        coarse = compute_map(
            replace(GridScenario.default(GridSpec(ue_step_m=6.0)), interference=InterferenceModel.FULL), seed=1
        )
        fine = percentile_report(default_full_map, (10, 50)).set_index("percentile")
        rough = percentile_report(coarse, (10, 50)).set_index("percentile")
        for column in ("snr_db", "sinr_db"):
            assert np.all(np.abs(fine[column] - rough[column]) < 0.5)
