import csv
import io

import pytest

from udnsim.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, analytics_report, main
from udnsim.config import SimConfig, config_from_dict, dump_config, load_config
from udnsim.errors import ConfigurationError

SMALL = """
[deployment]
antenna_density_per_km2 = 400
antennas_per_bs = 8
ue_density_per_km2 = 100
window_side_km = 1.0

[simulation]
drops = 15
seed = 3
"""


@pytest.fixture
def small_file(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL)
    return p


def parse_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestConfig:
    def test_defaults(self):
        c = SimConfig()
        assert c.bs_density_per_km2 == 100.0 and c.k_u == 2
        assert c.p_bs_tx_w == pytest.approx(0.251188643150958)
        assert c.gamma0 == 1.0

    def test_units_converted_once(self):
        c = SimConfig(bs_tx_power_dbm=30.0, noise_power_dbm=-90.0)
        assert c.p_bs_tx_w == pytest.approx(1.0) and c.noise_w == pytest.approx(1e-12)

    def test_small_cap(self):
        assert SimConfig(antenna_density_per_km2=400, antennas_per_bs=4).k_u == 1

    def test_bs_density_key(self):
        c = config_from_dict({"deployment": {"antenna_density_per_km2": 500,
                                             "bs_density_per_km2": 50}})
        assert c.antennas_per_bs == 10

    def test_non_divisible_names_both(self):
        with pytest.raises(ConfigurationError, match=r"1000.*300"):
            config_from_dict({"deployment": {"bs_density_per_km2": 300}})

    def test_conflicting_m_and_lambda(self):
        with pytest.raises(ConfigurationError, match="disagree"):
            config_from_dict({"deployment": {"bs_density_per_km2": 50, "antennas_per_bs": 10}})

    @pytest.mark.parametrize("doc,field", [
        ({"radio": {"pilot_count": "many"}}, "pilot_count"),
        ({"radio": {"pilot_count": 0}}, "pilot_count"),
        ({"deployment": {"ue_density_per_km2": -1}}, "ue_density_per_km2"),
        ({"radio": {"pathloss_compensation": 2}}, "pathloss_compensation"),
        ({"simulation": {"pilot_contamination": 1}}, "pilot_contamination"),
        ({"simulation": {"mmse_denominator": "x"}}, "mmse_denominator"),
        ({"deployment": {"nb_q": True}}, "nb_q"),
    ])
    def test_field_level_messages(self, doc, field):
        with pytest.raises(ConfigurationError, match=field):
            config_from_dict(doc)

    def test_unknown_section_and_key(self):
        with pytest.raises(ConfigurationError, match="section"):
            config_from_dict({"nope": {}})
        with pytest.raises(ConfigurationError, match="radio.p_bs"):
            config_from_dict({"radio": {"p_bs": 1}})

    def test_round_trip(self, tmp_path):
        c = SimConfig(antennas_per_bs=20, pilot_contamination=False, seed=9)
        p = tmp_path / "c.toml"
        p.write_text(dump_config(c))
        assert load_config(p) == c

    def test_hash_ignores_drop_count(self):
        assert SimConfig(drops=5).config_hash() == SimConfig(drops=6).config_hash()
        assert SimConfig(seed=5).config_hash() != SimConfig(seed=6).config_hash()

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "none.toml")


class TestCliRun:
    def test_valid_config(self, small_file, capsys):
        assert main(["run", str(small_file)]) == EXIT_OK
        rows = parse_rows(capsys.readouterr().out)
        assert len(rows) == 1
        assert rows[0]["n_drops"] == "15" and rows[0]["seed"] == "3" and rows[0]["error"] == ""

    def test_overrides(self, small_file, capsys):
        assert main(["run", str(small_file), "--drops", "4", "--seed", "11"]) == EXIT_OK
        row = parse_rows(capsys.readouterr().out)[0]
        assert (row["n_drops"], row["seed"]) == ("4", "11")

    def test_missing_file(self, tmp_path, capsys):
        path = tmp_path / "absent.toml"
        assert main(["run", str(path)]) == EXIT_CONFIG
        assert str(path) in capsys.readouterr().err

    def test_m_not_dividing(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text("[deployment]\nantenna_density_per_km2 = 1000\nbs_density_per_km2 = 300\n")
        assert main(["run", str(p)]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "1000" in err and "300" in err

    def test_bad_toml(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[deployment\n")
        assert main(["run", str(p)]) == EXIT_CONFIG

    def test_bad_usage(self):
        assert main(["frobnicate"]) == EXIT_CONFIG
        assert main(["run", "x.toml", "--workers", "0"]) == EXIT_CONFIG

    def test_runtime_failure(self, small_file, monkeypatch, capsys):
        import udnsim.cli as cli

        def boom(*a, **k):
            raise RuntimeError("worker died")
        monkeypatch.setattr(cli, "evaluate_point", boom)
        assert main(["run", str(small_file)]) == EXIT_RUNTIME
        assert "worker died" in capsys.readouterr().err


class TestAnalytics:
    def test_report(self, tmp_path, capsys):
        p = tmp_path / "a.toml"
        p.write_text("[deployment]\nantenna_density_per_km2 = 1000\nantennas_per_bs = 10\n"
                     "ue_density_per_km2 = 100\n")
        assert main(["analytics", str(p)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "lambda_tilde_per_km2 = 58.5051349" in out
        assert "\n0,0.414948651\n" in out
        assert "k_u = 2" in out
        table = out.split("[nb_pmf]")[1].split("[truncated_pmf]")[0].strip().splitlines()
        assert table[-1].startswith("50,")
        s = [l for l in out.splitlines() if l.startswith("sum,")][0]
        assert abs(float(s.split(",")[1]) - 1.0) <= 1e-12

    def test_cap_of_one(self):
        out = analytics_report(SimConfig(antenna_density_per_km2=400, antennas_per_bs=4))
        assert "k_u = 1" in out and "\n1,1\n" in out

    def test_no_users(self):
        assert "no active" in analytics_report(SimConfig(ue_density_per_km2=0.0))
