import csv
import io
import math

import pytest

from udnsim.cli import EXIT_OK, main
from udnsim.config import SimConfig
from udnsim.errors import ConfigurationError
from udnsim.sweep import (
    COLUMNS,
    Axis,
    SweepSpec,
    WindowRule,
    evaluate_point,
    load_sweep,
    preset,
    read_csv,
    rows_to_csv,
    run_sweep,
    sweep_from_dict,
)

TINY = {
    "base": {"deployment": {"antenna_density_per_km2": 400, "window_side_km": 1.0},
             "simulation": {"drops": 6, "seed": 5}},
    "axis": [{"parameter": "M", "values": [4, 8]},
             {"parameter": "rho", "values": [50, 150]}],
    "ablation": [{"name": "on"}, {"name": "off", "pilot_contamination": False}],
}


class TestPresets:
    def test_fig3_grid(self):
        spec = preset("fig3")
        assert len(spec) == 36
        pts = spec.points()
        assert {c.antenna_density_per_km2 for _, c in pts} == {1000.0}
        assert [c.antennas_per_bs for _, c in pts[:9]] == [2, 4, 8, 10, 16, 20, 40, 100, 200]
        assert sorted({c.ue_density_per_km2 for _, c in pts}) == [50, 100, 300, 600]
        assert all(c.pilot_contamination for _, c in pts)

    def test_fig4_is_perfect_csi(self):
        assert not any(c.pilot_contamination for _, c in preset("fig4").points())

    def test_fig1_densities(self):
        pts = preset("fig1").points()
        assert sorted({c.bs_density_per_km2 for _, c in pts}) == [5, 10, 50, 100, 500]
        assert [c.antennas_per_bs for _, c in pts[::11]] == [100, 50, 10, 5, 1]

    def test_fig2_densities(self):
        lam = sorted({c.bs_density_per_km2 for _, c in preset("fig2").points()})
        assert lam == [5, 10, 50, 100, 500, 1000]

    def test_window_scaling(self):
        rule = WindowRule("bs-count", 300.0, 1.0)
        assert rule.side_km(SimConfig(antennas_per_bs=200)) == 4.0
        assert rule.side_km(SimConfig(antennas_per_bs=10)) == pytest.approx(math.sqrt(3.0))
        assert rule.side_km(SimConfig(antennas_per_bs=1)) == 1.0
        assert WindowRule().side_km(SimConfig(window_side_km=2.5)) == 2.5

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            preset("fig9")


class TestSpec:
    def test_empty_axis(self):
        with pytest.raises(ConfigurationError):
            Axis("antennas_per_bs", ())
        with pytest.raises(ConfigurationError):
            sweep_from_dict({"axis": [{"parameter": "rho", "values": []}]})

    def test_axis_count(self):
        with pytest.raises(ConfigurationError):
            SweepSpec(SimConfig(), [])

    def test_unknown_parameter(self):
        with pytest.raises(ConfigurationError):
            Axis("antenna_count", (1,))

    def test_invalid_grid_point(self):
        with pytest.raises(ConfigurationError):
            sweep_from_dict({"axis": [{"parameter": "M", "values": [10, 0]}]})

    def test_row_order(self):
        spec = sweep_from_dict(TINY)
        got = [(n, c.antennas_per_bs, c.ue_density_per_km2) for n, c in spec.points()]
        assert got == [("on", 4, 50), ("on", 4, 150), ("on", 8, 50), ("on", 8, 150),
                       ("off", 4, 50), ("off", 4, 150), ("off", 8, 50), ("off", 8, 150)]

    def test_lambda_axis(self):
        spec = sweep_from_dict({"base": {"deployment": {"antenna_density_per_km2": 500}},
                                "axis": [{"parameter": "lambda", "values": [5, 50]}]})
        assert [c.antennas_per_bs for _, c in spec.points()] == [100, 10]

    def test_bad_tables(self):
        with pytest.raises(ConfigurationError):
            sweep_from_dict({"axes": []})
        with pytest.raises(ConfigurationError):
            sweep_from_dict({"axis": [{"parameter": "M", "values": [4]}], "window": {"side": 1}})
        with pytest.raises(ConfigurationError):
            sweep_from_dict({"axis": [{"parameter": "M", "values": [4]}],
                             "window": {"scaling": "area"}})

    def test_example_file_loads(self):
        spec = load_sweep("configs/small_sweep.toml")
        assert len(spec) == 12


class TestRows:
    def test_csv_format(self):
        spec = sweep_from_dict(TINY)
        text = rows_to_csv(run_sweep(spec))
        lines = text.split("\r\n")
        assert lines[0] == ",".join(COLUMNS)
        assert lines[-1] == "" and len(lines) == 2 + len(spec)
        rows = list(csv.DictReader(io.StringIO(text)))
        assert all(r["schema"] == "1" for r in rows)
        assert rows[4]["pilot_contamination"] == "false"
        # at most nine significant digits
        assert all(len(r["ase"].replace(".", "").lstrip("0").split("e")[0]) <= 9 for r in rows)
        assert float(rows[0]["lambda_tilde_closed_form"]) == pytest.approx(
            100 * (1 - (1 + 50 / 350) ** -3.5), rel=1e-8)

    def test_rerun_reproduces_row(self):
        cfg = SimConfig(antenna_density_per_km2=400, antennas_per_bs=8, ue_density_per_km2=100,
                        window_side_km=1.0, seed=4)
        a = evaluate_point(cfg, 10)
        b = evaluate_point(a.cfg, a.n_drops)
        assert a.ase == b.ase and a.ci95 == b.ci95

    def test_failure_becomes_error_row(self, monkeypatch):
        import udnsim.engine as engine
        real = engine.run_point

        def flaky(cfg, *a, **k):
            if cfg.antennas_per_bs == 8:
                raise FloatingPointError("overflow")
            return real(cfg, *a, **k)
        monkeypatch.setattr(engine, "run_point", flaky)
        rows = run_sweep(sweep_from_dict(TINY))
        errs = [r.error for r in rows]
        assert errs.count("") == 4
        assert all("overflow" in e for e in errs if e)
        assert "FloatingPointError" in rows_to_csv(rows)

    def test_cli_sweep(self, tmp_path):
        spec_path = tmp_path / "s.toml"
        spec_path.write_text(
            "[base.deployment]\nantenna_density_per_km2 = 400\nwindow_side_km = 1.0\n"
            "[base.simulation]\ndrops = 5\n"
            "[[axis]]\nparameter = \"M\"\nvalues = [4, 8]\n")
        out = tmp_path / "o.csv"
        assert main(["sweep", str(spec_path), "--out", str(out), "--seed", "2"]) == EXIT_OK
        rows = read_csv(out)
        assert len(rows) == 2 and {r["seed"] for r in rows} == {"2"}
        assert not (tmp_path / "o.csv.part").exists()

    def test_byte_identical_across_workers(self, tmp_path):
        spec_path = tmp_path / "s.toml"
        spec_path.write_text(
            "[base.deployment]\nantenna_density_per_km2 = 400\nwindow_side_km = 1.0\n"
            "[[axis]]\nparameter = \"M\"\nvalues = [4, 8]\n")
        outs = []
        for w in ("1", "3"):
            out = tmp_path / f"w{w}.csv"
            assert main(["sweep", str(spec_path), "--out", str(out), "--drops", "260",
                         "--workers", w]) == EXIT_OK
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
