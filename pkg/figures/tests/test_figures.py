import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mctdh_figures.cli import main
from mctdh_figures.io import RunDataError, load_density, load_probabilities
from mctdh_figures.plots import plot_density_map, plot_model, plot_probabilities, plot_sigma

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def synth_run_dir(tmp_path: Path) -> Path:
    """Write a miniature run directory in the exact on-disk formats."""
    run = tmp_path / "run"
    run.mkdir()
    x = np.linspace(-20.0, 20.0, 8, endpoint=False)
    times = np.linspace(0.0, 30.0, 7)

    prob_lines = ["t,p0,p1,p2,p3,trace,energy_re,sigma_min"]
    for i, t in enumerate(times):
        p3 = 1.0 - 0.1 * i
        p2 = 0.08 * i
        p1 = 0.02 * i
        row = [t, 1e-6 * i, p1, p2, p3, p1 + p2 + p3 + 1e-6 * i, -7.4, 10.0 ** (-3 - 0.2 * i)]
        prob_lines.append(",".join("%.16e" % v for v in row))
    (run / "probabilities.csv").write_text("\n".join(prob_lines) + "\n")

    dens_lines = [",".join("%.16e" % v for v in x)]
    for t in times:
        n = np.exp(-((x + 2 - 0.3 * t) ** 2) / 4.0)
        dens_lines.append(",".join("%.16e" % v for v in [t, *n]))
    (run / "density.csv").write_text("\n".join(dens_lines) + "\n")

    (run / "spectrum.csv").write_text(
        "t,sigma_min\n" + "\n".join(f"%.16e,%.16e" % (t, 1e-3) for t in times) + "\n"
    )

    meta = {
        "config": {"trap_depth": 8.0, "trap_width": 1.25, "cap_onset": 16.0},
        "grid": {"dx": 40.0 / 8, "n_points": 8, "half_width": 20.0},
    }
    (run / "meta.json").write_text(json.dumps(meta))
    return run


@pytest.fixture
def run_dir(tmp_path):
    return synth_run_dir(tmp_path)


def test_loaders_roundtrip(run_dir):
    table = load_probabilities(run_dir)
    assert table.probs.shape == (7, 4)
    assert table.t[0] == 0.0 and table.t[-1] == 30.0
    dens = load_density(run_dir)
    assert dens.density.shape == (7, 8)
    assert dens.x.size == 8


def test_missing_file_raises(tmp_path):
    with pytest.raises(RunDataError, match="missing"):
        load_probabilities(tmp_path)


def test_malformed_csv_raises(tmp_path):
    run = tmp_path / "run"
    run.mkdir()
    (run / "density.csv").write_text("1.0,2.0\n0.0,not-a-number\n")
    with pytest.raises(RunDataError):
        load_density(run)


def test_empty_trajectory_raises(tmp_path):
    run = tmp_path / "run"
    run.mkdir()
    (run / "density.csv").write_text(",".join(["0.0"] * 4) + "\n")
    with pytest.raises(RunDataError, match="no records"):
        load_density(run)


def test_each_plot_writes_png(run_dir, tmp_path):
    for fn, name in [
        (plot_model, "model.png"),
        (plot_density_map, "map.png"),
        (plot_probabilities, "probs.png"),
        (plot_sigma, "sigma.png"),
    ]:
        out = fn(run_dir, tmp_path / name, dpi=72)
        assert out.exists()
        assert out.read_bytes()[:8] == PNG_MAGIC


def test_model_plot_requires_meta(run_dir, tmp_path):
    (run_dir / "meta.json").unlink()
    with pytest.raises(RunDataError, match="meta"):
        plot_model(run_dir, tmp_path / "model.png")


def test_cli_all_emits_four_images(run_dir, tmp_path):
    out_dir = tmp_path / "figs"
    rc = main(["all", "--run-dir", str(run_dir), "--out", str(out_dir), "--dpi", "72"])
    assert rc == 0
    images = sorted(p.name for p in out_dir.glob("*.png"))
    assert images == ["density_map.png", "model.png", "probabilities.png", "sigma_min.png"]


def test_cli_reports_parse_errors(tmp_path, capsys):
    rc = main(["sigma", "--run-dir", str(tmp_path), "--out", str(tmp_path / "x.png")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_cli_subprocess_smoke(run_dir, tmp_path):
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "mctdh_figures.cli",
            "probabilities",
            "--run-dir",
            str(run_dir),
            "--out",
            str(tmp_path / "p.png"),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "p.png").exists()
