from __future__ import annotations

import json

import numpy as np
import pandas as pd
import pytest

from common_runtime import InputDataError
from links_io import (
    LINK_COLUMNS,
    cdf_frame,
    load_degradation_cdf,
    load_links,
    load_scan,
    write_frame,
    write_links,
)
from model_fitting import Scenario, fit_slope_intercept


HEADER = ",".join(LINK_COLUMNS)


def _write(path, rows):
    path.write_text("\n".join([HEADER, *rows]) + "\n", encoding="utf-8")
    return path


class TestLoadLinks:
    def test_well_formed(self, tmp_path):
        path = _write(
            tmp_path / "ok.csv",
            [
                "a,RoofEdge,50,-95.5,",
                "a,RoofEdge,120.5,-110.25,",
                "c,AroundCorner,300,-112,244",
            ],
        )
        records, manifest = load_links(path)
        assert len(records) == 3
        assert manifest.total_rows == 3
        assert manifest.rejected_rows == 0
        assert manifest.scenario_counts == {"RoofEdge": 2, "AroundCorner": 1}
        assert records[2].corner_distance_m == 244.0

    def test_bad_rows_are_logged_with_line_numbers(self, tmp_path, caplog):
        rows = [f"a,RoofEdge,{50 + i},-100," for i in range(18)]
        rows.insert(3, "a,RoofEdge,0.5,-40,")
        rows.insert(10, "c,AroundCorner,300,-112,")
        path = _write(tmp_path / "mixed.csv", rows)
        records, manifest = load_links(path)
        assert len(records) == 18
        assert [r.line for r in manifest.rejected] == [5, 12]
        assert "distance_m" in manifest.rejected[0].reason
        assert "corner_distance_m" in manifest.rejected[1].reason
        assert manifest.accepted_rows + manifest.rejected_rows == manifest.total_rows
        assert "Fila 5" in caplog.text

    def test_too_many_rejected(self, tmp_path):
        rows = ["a,RoofEdge,50,-100,"] * 8 + ["a,Tejado,50,-100,"] * 2
        with pytest.raises(InputDataError, match="rechazadas"):
            load_links(_write(tmp_path / "bad.csv", rows))

    def test_missing_header(self, tmp_path):
        path = tmp_path / "sin_encabezado.csv"
        path.write_text("a,RoofEdge,50,-100,\n", encoding="utf-8")
        with pytest.raises(InputDataError, match="Faltan columnas"):
            load_links(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_links(tmp_path / "no_existe.csv")

    def test_non_numeric_value(self, tmp_path):
        rows = [f"a,RoofEdge,{50 + i},-100," for i in range(10)] + ["a,RoofEdge,cien,-100,"]
        _, manifest = load_links(_write(tmp_path / "texto.csv", rows))
        assert manifest.rejected_rows == 1

    def test_corner_distance_not_below_unwrapped(self, tmp_path):
        rows = [f"a,RoofEdge,{50 + i},-100," for i in range(10)] + ["c,AroundCorner,200,-112,244"]
        _, manifest = load_links(_write(tmp_path / "esquina.csv", rows))
        assert manifest.rejected_rows == 1


class TestRoundTrip:
    def test_write_then_load_is_lossless(self, tmp_path, rng):
        path = _write(
            tmp_path / "orig.csv",
            [
                f"s{i % 3},RoofEdge,{float(d)!r},{float(g)!r},"
                for i, (d, g) in enumerate(zip(rng.uniform(30, 500, 20), rng.normal(-100, 7, 20)))
            ]
            + ["c,AroundCorner,300.125,-112.0625,244.5", "c,SameStreetCorner,100,-107,"],
        )
        records, _ = load_links(path)
        copy = write_links(records, tmp_path / "copia.csv")
        again, manifest = load_links(copy)
        assert again == records
        assert manifest.rejected_rows == 0


class TestShippedFixture:
    def test_fixture_loads_cleanly(self, fixtures_dir):
        records, manifest = load_links(fixtures_dir / "enlaces_sinteticos.csv")
        assert manifest.rejected_rows == 0
        assert manifest.scenario_counts["RoofEdge"] == 400
        assert manifest.scenario_counts["AroundCorner"] == 90
        assert len(records) == 708

    def test_fixture_roof_edge_fit_within_ci(self, fixtures_dir):
        records, _ = load_links(fixtures_dir / "enlaces_sinteticos.csv")
        result = fit_slope_intercept([r for r in records if r.scenario is Scenario.ROOF_EDGE])
        assert result.params.intercept_db_1m == pytest.approx(-35.0, abs=result.ci90_intercept_db)
        assert result.params.exponent == pytest.approx(-3.56, abs=result.ci90_exponent)
        assert result.params.intercept_db_1m == pytest.approx(-35.012, abs=0.01)
        assert result.params.exponent == pytest.approx(-3.5546, abs=0.001)


class TestScan:
    def test_fixture_scan_with_sidecar(self, fixtures_dir):
        scan = load_scan(fixtures_dir / "barrido_ejemplo.csv")
        assert scan.angles_deg.size == 144
        assert scan.meta.tx_power_dbm == 22.0
        assert scan.meta.rx_elev_gain_dbi == 9.5

    def test_missing_sidecar_uses_zeros(self, tmp_path, caplog):
        angles = np.arange(72) * 5.0
        pd.DataFrame({"angle_deg": angles, "power_mw": np.ones(72)}).to_csv(tmp_path / "giro.csv", index=False)
        scan = load_scan(tmp_path / "giro.csv")
        assert scan.meta.tx_power_dbm == 0.0
        assert "metadatos" in caplog.text

    def test_unknown_sidecar_key(self, tmp_path):
        angles = np.arange(72) * 5.0
        pd.DataFrame({"angle_deg": angles, "power_mw": np.ones(72)}).to_csv(tmp_path / "giro.csv", index=False)
        (tmp_path / "giro.json").write_text(json.dumps({"tx_power_dbm": 20, "polarizacion": "V"}), encoding="utf-8")
        with pytest.raises(InputDataError, match="polarizacion"):
            load_scan(tmp_path / "giro.csv")

    @pytest.mark.parametrize("sidecar", [{"tx_power_dbm": "alto"}, {"tx_gain_dbi": None}, [1, 2]])
    def test_malformed_sidecar_is_input_error(self, tmp_path, sidecar):
        angles = np.arange(72) * 5.0
        pd.DataFrame({"angle_deg": angles, "power_mw": np.ones(72)}).to_csv(tmp_path / "giro.csv", index=False)
        (tmp_path / "giro.json").write_text(json.dumps(sidecar), encoding="utf-8")
        with pytest.raises(InputDataError):
            load_scan(tmp_path / "giro.csv")

    def test_too_few_samples(self, tmp_path):
        pd.DataFrame({"angle_deg": np.arange(10) * 36.0, "power_mw": np.ones(10)}).to_csv(
            tmp_path / "corto.csv", index=False
        )
        with pytest.raises(InputDataError):
            load_scan(tmp_path / "corto.csv")


class TestDegradationFile:
    def test_shipped_cdf(self, fixtures_dir):
        cdf = load_degradation_cdf(fixtures_dir / "degradacion_roof_edge.csv")
        assert cdf.inverse(0.9) == pytest.approx(2.0)

    def test_none_gives_default(self):
        assert load_degradation_cdf(None).inverse(1.0) == pytest.approx(4.0)

    def test_not_ending_at_one(self, tmp_path):
        path = tmp_path / "cdf.csv"
        path.write_text("degradation_db,prob\n0,0\n2,0.5\n", encoding="utf-8")
        with pytest.raises(InputDataError):
            load_degradation_cdf(path)


class TestWriteFrame:
    def test_six_significant_digits(self, tmp_out):
        frame = cdf_frame(np.array([1.0 / 3.0]), np.array([0.5]), np.array([0.45]), np.array([0.55]))
        path = write_frame(frame, tmp_out / "sub" / "cdf.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "value_db,prob,band_lo,band_hi"
        assert lines[1] == "0.333333,0.5,0.45,0.55"
