"""Command-line interface tests, run in-process through ``main(argv)``."""

import pytest

from slam2d.cli import main
from slam2d.evaluation import load_runlog
from slam2d.simulator import default_scenario, load_map, save_scenario


@pytest.fixture(scope="module")
def scenario_file(tmp_path_factory):
    cfg = default_scenario(
        duration=6.0, motion_noise=None, sensor_noise=None, laser_noise=None
    )
    path = tmp_path_factory.mktemp("scenario") / "quiet.ini"
    save_scenario(cfg, path)
    return str(path)


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory, scenario_file):
    out = tmp_path_factory.mktemp("sim")
    code = main(["simulate", "--scenario", scenario_file, "--seed", "3",
                 "--out", str(out)])
    assert code == 0
    return out


class TestSimulate:
    def test_prints_seed_and_three_paths(self, scenario_file, tmp_path, capsys):
        code = main(["simulate", "--scenario", scenario_file, "--out", str(tmp_path)])
        out = capsys.readouterr().out.splitlines()
        assert code == 0
        assert out[0] == "seed 0"
        assert [line.rsplit("/", 1)[-1] for line in out[1:]] == [
            "log.txt", "truth.txt", "map.txt",
        ]
        assert all((tmp_path / n).exists() for n in ("log.txt", "truth.txt", "map.txt"))

    def test_same_seed_same_bytes(self, scenario_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert main(["simulate", "--scenario", scenario_file, "--seed", "9",
                         "--out", str(d)]) == 0
        assert (a / "log.txt").read_bytes() == (b / "log.txt").read_bytes()
        assert (a / "truth.txt").read_bytes() == (b / "truth.txt").read_bytes()


class TestRun:
    def test_dead_reckoning_writes_run_csv(self, sim_dir, tmp_path, capsys):
        code = main(["run", "--log", str(sim_dir / "log.txt"),
                     "--estimator", "dead_reckoning", "--out", str(tmp_path)])
        printed = capsys.readouterr().out.splitlines()
        assert code == 0
        assert printed == [str(tmp_path / "run.csv")]
        run = load_runlog(tmp_path / "run.csv")
        assert run.label == "dead_reckoning"
        assert len(run.rows) > 0

    def test_slam_writes_run_and_map(self, sim_dir, tmp_path, capsys):
        code = main(["run", "--log", str(sim_dir / "log.txt"),
                     "--estimator", "ekf_slam", "--out", str(tmp_path)])
        printed = capsys.readouterr().out.splitlines()
        assert code == 0
        assert printed == [str(tmp_path / "run.csv"), str(tmp_path / "map.txt")]
        assert load_runlog(tmp_path / "run.csv").has_covariance()
        load_map(tmp_path / "map.txt")  # parses

    def test_localisation_with_map(self, sim_dir, tmp_path, capsys):
        code = main(["run", "--log", str(sim_dir / "log.txt"),
                     "--estimator", "ekf_localisation",
                     "--map", str(sim_dir / "map.txt"), "--out", str(tmp_path)])
        printed = capsys.readouterr().out.splitlines()
        assert code == 0
        assert printed == [str(tmp_path / "run.csv")]

    def test_batch_prints_table(self, scenario_file, tmp_path, capsys):
        code = main(["run", "--runs", "2", "--scenario", scenario_file,
                     "--estimator", "dead_reckoning", "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "seeds 0..1"
        assert lines[1].startswith("label")
        assert any(ln.startswith("dead_reckoning-s1") for ln in lines)
        assert any(ln.startswith("mean") for ln in lines)
        assert lines[-1] == str(tmp_path / "table.csv")
        assert (tmp_path / "table.csv").exists()

    def test_batch_localisation_uses_truth_map(self, scenario_file, tmp_path, capsys):
        code = main(["run", "--runs", "1", "--scenario", scenario_file,
                     "--estimator", "ekf_localisation", "--out", str(tmp_path)])
        assert code == 0
        assert "ekf_localisation-s0" in capsys.readouterr().out


class TestUsageErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            ["run", "--log", "x", "--estimator", "ekf_localisation", "--out", "y"],
            ["run", "--log", "x", "--estimator", "ekf_slam", "--map", "m", "--out", "y"],
            ["run", "--runs", "0", "--out", "y"],
            ["run", "--out", "y"],
            ["run", "--log", "x", "--estimator", "nonsense", "--out", "y"],
            ["simulate"],
        ],
    )
    def test_exit_one_with_message(self, argv, capsys):
        assert main(argv) == 1
        assert capsys.readouterr().err.startswith("usage error:")


class TestDataErrors:
    def test_missing_log_file(self, tmp_path, capsys):
        code = main(["run", "--log", str(tmp_path / "absent.txt"),
                     "--out", str(tmp_path)])
        assert code == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_malformed_log_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("# slamlog v1\nS 0.0 not_a_number\n")
        code = main(["run", "--log", str(bad), "--out", str(tmp_path)])
        assert code == 2
        assert "line 2" in capsys.readouterr().err


class TestCompare:
    @pytest.fixture()
    def two_runs(self, sim_dir, tmp_path):
        paths = []
        for est in ("dead_reckoning", "ekf_slam"):
            d = tmp_path / est
            assert main(["run", "--log", str(sim_dir / "log.txt"),
                         "--estimator", est, "--out", str(d)]) == 0
            paths.append(str(d / "run.csv"))
        return paths

    def test_table_lists_runs_and_mean(self, sim_dir, two_runs, capsys):
        code = main(["compare", *two_runs, "--truth", str(sim_dir / "truth.txt")])
        out = capsys.readouterr().out.splitlines()
        assert code == 0
        labels = [ln.split()[0] for ln in out[2:]]
        assert labels == ["dead_reckoning", "ekf_slam", "mean"]

    def test_out_writes_csv(self, sim_dir, two_runs, tmp_path, capsys):
        dest = tmp_path / "tables"
        code = main(["compare", *two_runs, "--truth", str(sim_dir / "truth.txt"),
                     "--out", str(dest)])
        out = capsys.readouterr().out.splitlines()
        assert code == 0
        assert out[-1] == str(dest / "table.csv")
        header = (dest / "table.csv").read_text().splitlines()[0]
        assert header.split(",")[0] == "label"

    def test_mismatched_truth_is_data_error(self, two_runs, tmp_path, capsys):
        truth = tmp_path / "truth.txt"
        truth.write_text("# slamtruth v1\nP 999.0 0.0 0.0 0.0\n")
        code = main(["compare", two_runs[0], "--truth", str(truth)])
        assert code == 2
        assert capsys.readouterr().err.startswith("error:")
