"""Command-line interface: exit codes, outputs, diagnostics."""

import numpy as np


from cortexsim.cli import cli


def gen(tmp_path, channels=3, hypercolumns=3, seed=1, repeats=2):
    net = tmp_path / "net.txt"
    stim = tmp_path / "stim.txt"
    rc = cli([
        "gen-auditory",
        "--channels", str(channels),
        "--hypercolumns", str(hypercolumns),
        "--out", str(net),
        "--stim", str(stim),
        "--seed", str(seed),
        "--repeats", str(repeats),
    ])
    assert rc == 0
    return net, stim


class TestCli:
    def test_generate_then_validate(self, tmp_path):
        net, stim = gen(tmp_path)
        assert cli(["validate", "--net", str(net)]) == 0
        assert net.read_text().startswith("seed 1\n")
        assert stim.read_text().startswith("ev ")

    def test_validate_full_scale_configuration(self, tmp_path):
        # the canonical 100x100 network generates and validates
        net, stim = gen(tmp_path, channels=100, hypercolumns=100, repeats=1)
        assert cli(["validate", "--net", str(net)]) == 0

    def test_validate_bad_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("range 0 0000010 1 1\n", encoding="utf-8")
        assert cli(["validate", "--net", str(bad)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_run_zero_steps_empty_outputs(self, tmp_path, capsys):
        net, stim = gen(tmp_path)
        spikes = tmp_path / "spikes.csv"
        events = tmp_path / "events.csv"
        stats = tmp_path / "stats.csv"
        rc = cli([
            "run", "--net", str(net), "--stim", str(stim), "--steps", "0",
            "--tm-minicolumns", "1024",
            "--spikes", str(spikes), "--events", str(events), "--stats", str(stats),
        ])
        assert rc == 0
        assert spikes.read_text() == ""
        assert events.read_text() == ""
        assert stats.read_text() == ""

    def test_run_reports_throughput(self, tmp_path, capsys):
        net, stim = gen(tmp_path)
        rc = cli([
            "run", "--net", str(net), "--stim", str(stim), "--steps", "20",
            "--tm-minicolumns", "8192", "--seed", "5",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "neuron updates/s:" in out

    def test_run_missing_network(self, tmp_path, capsys):
        rc = cli(["run", "--net", str(tmp_path / "nope.txt"), "--steps", "1"])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_monitor_flag_restricts_records(self, tmp_path):
        net, stim = gen(tmp_path)
        events_all = tmp_path / "all.csv"
        events_none = tmp_path / "none.csv"
        common = ["run", "--net", str(net), "--stim", str(stim), "--steps", "25",
                  "--tm-minicolumns", "8192", "--seed", "5"]
        assert cli(common + ["--events", str(events_all)]) == 0
        assert cli(common + ["--events", str(events_none),
                             "--monitor", "7f00000:7ffff80"]) == 0
        assert events_all.read_text() != "" or events_none.read_text() == ""
        assert events_none.read_text() == ""

    def test_report_produces_figures(self, tmp_path):
        net, stim = gen(tmp_path)
        events = tmp_path / "events.csv"
        stats = tmp_path / "stats.csv"
        rc = cli([
            "run", "--net", str(net), "--stim", str(stim), "--steps", "30",
            "--tm-minicolumns", "8192", "--seed", "5",
            "--events", str(events), "--stats", str(stats),
        ])
        assert rc == 0
        rc = cli([
            "report", "--events", str(events), "--stats", str(stats),
            "--channels", "3", "--out-prefix", str(tmp_path / "fig"),
            "--steps", "30",
        ])
        assert rc == 0
        grid = np.loadtxt(tmp_path / "fig_grid_exc.csv", delimiter=",")
        assert grid.shape == (3, 30)
        assert (tmp_path / "fig_active_trace.csv").exists()

    def test_realtime_tm_configuration_loads(self, tmp_path):
        # the canonical 176k-slot configuration initializes and steps
        net, stim = gen(tmp_path)
        rc = cli([
            "run", "--net", str(net), "--stim", str(stim), "--steps", "2",
            "--tm-minicolumns", str(176 * 1024), "--seed", "1",
        ])
        assert rc == 0
