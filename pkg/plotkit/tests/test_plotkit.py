"""Figure rendering from the shipped sample CSVs, with parse-back checks."""

import csv
import os

import numpy as np
import pytest

from plotkit import (
    SchemaError,
    plot_convergence,
    plot_sweep,
    read_sweep_csv,
    read_trajectory_csv,
)
from plotkit.cli import main

SAMPLES = os.path.join(os.path.dirname(__file__), "..", "samples")


def sample(name):
    return os.path.join(SAMPLES, name)


def raw_column(path, name):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    j = rows[0].index(name)
    return np.array([float(r[j]) for r in rows[1:]])


class TestConvergence:
    def test_renders_single_series(self, tmp_path):
        out = tmp_path / "conv.png"
        series = plot_convergence(sample("trajectory_tree.csv"), out)
        assert out.exists() and out.stat().st_size > 0
        assert len(series) == 1

    def test_plotted_values_equal_csv(self, tmp_path):
        series = plot_convergence(sample("trajectory_tree.csv"),
                                  tmp_path / "c.png")
        expect = raw_column(sample("trajectory_tree.csv"), "wsr")
        assert np.array_equal(series[0]["wsr"], expect)
        expect_it = raw_column(sample("trajectory_tree.csv"), "iteration")
        assert np.array_equal(series[0]["iteration"], expect_it)

    def test_two_method_overlay(self, tmp_path):
        out = tmp_path / "overlay.svg"
        series = plot_convergence(
            [sample("trajectory_gm.csv"), sample("trajectory_tree.csv")],
            out, labels=["gm", "tree"])
        assert out.exists()
        assert [s["label"] for s in series] == ["gm", "tree"]

    def test_single_point_trajectory(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("iteration,wsr\n0,3.5\n")
        series = plot_convergence(path, tmp_path / "one.png")
        assert series[0]["wsr"].tolist() == [3.5]

    def test_missing_column_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("iteration,rate\n0,1\n")
        with pytest.raises(SchemaError, match="wsr"):
            plot_convergence(path, tmp_path / "bad.png")


class TestSweep:
    def test_pmax_sweep_renders(self, tmp_path):
        out = tmp_path / "pmax.png"
        data = plot_sweep(sample("sweep_pmax.csv"), "p_max_dbw", out)
        assert out.exists() and out.stat().st_size > 0
        assert np.all(np.diff(data["mean_wsr"][np.argsort(data["x"])]) >= 0)

    def test_epsilon_comparison_renders(self, tmp_path):
        out = tmp_path / "eps.png"
        data = plot_sweep(sample("sweep_epsilon.csv"), "epsilon", out)
        assert out.exists()
        lo = data["mean_wsr"][data["x"] == 1e-4][0]
        hi = data["mean_wsr"][data["x"] == 1e-1][0]
        assert lo >= hi - 1e-6

    def test_plotted_values_equal_csv(self, tmp_path):
        data = plot_sweep(sample("sweep_pmax.csv"), "p_max_dbw",
                          tmp_path / "x.png")
        assert np.array_equal(data["mean_wsr"],
                              raw_column(sample("sweep_pmax.csv"), "mean_wsr"))
        assert np.array_equal(data["std_wsr"],
                              raw_column(sample("sweep_pmax.csv"), "std_wsr"))

    def test_unknown_axis_lists_available(self, tmp_path):
        with pytest.raises(SchemaError, match="available"):
            plot_sweep(sample("sweep_pmax.csv"), "bandwidth",
                       tmp_path / "y.png")

    def test_empty_body_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("p_max_dbw,mean_wsr,std_wsr\n")
        with pytest.raises(SchemaError, match="no data"):
            plot_sweep(path, "p_max_dbw", tmp_path / "z.png")


class TestCli:
    def test_convergence_command(self, tmp_path, capsys):
        rc = main(["convergence", sample("trajectory_tree.csv"),
                   "--out", str(tmp_path / "c.png")])
        assert rc == 0
        assert (tmp_path / "c.png").exists()

    def test_sweep_command(self, tmp_path):
        rc = main(["sweep", sample("sweep_epsilon.csv"), "--axis", "epsilon",
                   "--out", str(tmp_path / "e.png")])
        assert rc == 0

    def test_schema_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        rc = main(["sweep", str(bad), "--axis", "p_max_dbw",
                   "--out", str(tmp_path / "x.png")])
        assert rc == 2
        assert "error" in capsys.readouterr().err
