"""CLI surface tests."""

from pathlib import Path

from burststream.cli import main, _parse_grid

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


class TestGridParsing:
    def test_comma_list(self):
        assert _parse_grid("1,2,5") == [1.0, 2.0, 5.0]

    def test_range(self):
        assert _parse_grid("1:5:2") == [1.0, 3.0, 5.0]

    def test_range_default_step(self):
        assert _parse_grid("1:3") == [1.0, 2.0, 3.0]


class TestCommands:
    def test_run_scenario(self, capsys, tmp_path):
        rc = main(["run", str(SCENARIO_DIR / "lte-audio-18s.ini"),
                   "--out", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "savings=" in out
        assert (tmp_path / "bursts.csv").exists()
        assert (tmp_path / "radio_states.csv").read_text().startswith(
            "start_s,end_s,state,power_mw")
        assert (tmp_path / "signaling.csv").exists()
        assert (tmp_path / "stalls.csv").exists()

    def test_sweep_writes_csv(self, tmp_path):
        out = tmp_path / "surface.csv"
        rc = main(["sweep", "wifi-ref", "--rs", "500000",
                   "--t", "1:10:1", "--b", "1000000,10000000",
                   "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == \
            "technology,r_s_bps,buffer_bytes,interval_s,avg_power_mw"
        assert len(lines) == 1 + 20

    def test_compare_ordering_enforced(self, capsys):
        rc = main(["compare", str(SCENARIO_DIR / "lte-audio-18s.ini"),
                   "lte-drx-default", "lte-drx-longidle",
                   "--expect-energy-order",
                   "lte-drx-longidle,lte-drx-default"])
        assert rc == 0
        assert "lte-drx-longidle" in capsys.readouterr().out

    def test_compare_violation_exits_nonzero(self, capsys):
        rc = main(["compare", str(SCENARIO_DIR / "lte-audio-18s.ini"),
                   "lte-drx-default", "lte-drx-longidle",
                   "--expect-energy-order",
                   "lte-drx-default,lte-drx-longidle"])
        assert rc == 1

    def test_unknown_profile_errors(self):
        rc = main(["sweep", "no-such-profile", "--rs", "1", "--t", "1",
                   "--b", "1"])
        assert rc == 1

    def test_profiles_listing(self, capsys):
        rc = main(["profiles"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "hspa-default" in out and "wifi-ref" in out
