import filecmp
import math
import os
from pathlib import Path

import numpy as np
import pytest

from trapquench import cli, runner
from trapquench.config import RunConfig, apply_overrides, load_preset
from trapquench.textio import read_columns


def small_config(**kw):
    cfg = RunConfig(g_A=25.0, g_AB=[1.25, 25.0], n_tot=8, T=2 * math.pi, output_dt=0.5,
                    density_x=list(np.linspace(-8, 8, 161)), omega=list(np.linspace(-10, 2, 241)),
                    loschmidt=True, densities=True, entropy=True, natural_orbitals=True, subsystem_le=True,
                    spectrum=True, spectrum_check=True)
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


def tree(path: Path) -> list[str]:
    return sorted(str(p.relative_to(path)) for p in path.rglob("*") if p.is_file())


def manifest(path: Path) -> dict:
    out = {}
    for line in path.read_text().splitlines():
        if " = " in line and not line.startswith("#"):
            k, v = line.split(" = ", 1)
            out.setdefault(k, v)
    return out


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert runner.run(small_config(), out) == 0
    return out


def test_layout(small_run):
    files = tree(small_run)
    for name in ("manifest.txt", "summary.txt", "timings.txt"):
        assert name in files
    point = "p001_gAB_25.000000"
    for name in ("manifest.txt", "echo.txt", "entropy.txt", "occupations.txt", "density_A.txt", "density_B.txt",
                 "subsystem_le.txt", "spectrum.txt", "spectrum_check.txt"):
        assert f"{point}/{name}" in files


def test_data_files_name_their_manifest(small_run):
    for f in (small_run / "p000_gAB_1.250000").glob("*.txt"):
        if f.name != "manifest.txt":
            assert f.read_text().startswith("# manifest: manifest.txt"), f.name


def test_run_manifest(small_run):
    m = manifest(small_run / "manifest.txt")
    assert m["format_version"] == "1" and m["status"] == "complete"
    assert int(m["dim_even"]) + int(m["dim_odd"]) == int(m["dim_total"])
    assert m["point.001"].endswith("ok")
    assert "[physics]" in (small_run / "manifest.txt").read_text()


def test_point_checks(small_run):
    for d in ("p000_gAB_1.250000", "p001_gAB_25.000000"):
        m = manifest(small_run / d / "manifest.txt")
        assert m["status"] == "ok"
        assert abs(float(m["weight_sum"]) - 1) <= 1e-10
        assert float(m["L0_error"]) <= 1e-10
        assert int(m["rspdm_violations"]) == 0
        assert float(m["density_norm_error"]) <= 1e-6 and float(m["density_parity_error"]) <= 1e-8
        assert abs(float(m["sum_rule"]) - 1) <= 1e-3
        bw = float(m["dt"])
        assert bw > 0


def test_file_contents(small_run):
    echo = read_columns(small_run / "p001_gAB_25.000000" / "echo.txt")
    assert echo[0, 3] == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(echo[:, 1] ** 2 + echo[:, 2] ** 2, echo[:, 3], rtol=1e-10, atol=1e-12)
    ent = read_columns(small_run / "p001_gAB_25.000000" / "entropy.txt")
    assert ent[0, 1] <= 1e-8 and np.all(ent[:, 1:] >= 0)
    dens = read_columns(small_run / "p000_gAB_1.250000" / "density_A.txt")
    assert dens.shape[1] == 1 + len(np.arange(0, 2 * math.pi + 0.5, 0.5))
    summary = read_columns(small_run / "summary.txt")
    assert summary.shape == (2, 1 + len(runner.SUMMARY_COLUMNS))
    assert summary[1, runner.SUMMARY_COLUMNS.index("min_L") + 1] < summary[0, runner.SUMMARY_COLUMNS.index("min_L") + 1]


def test_empty_sweep_writes_manifest_only(tmp_path):
    assert runner.run(small_config(g_AB=[]), tmp_path) == 0
    assert not [p for p in tmp_path.iterdir() if p.is_dir()]
    assert manifest(tmp_path / "manifest.txt")["sweep_points"] == "0"


def test_crash_containment(tmp_path, monkeypatch):
    real = runner.diagonalize

    def flaky(block):
        if block.params.g_AB == 5.0:
            raise RuntimeError("injected failure")
        return real(block)

    monkeypatch.setattr(runner, "diagonalize", flaky)
    cfg = small_config(g_AB=[1.25, 5.0, 25.0], densities=False, spectrum_check=False)
    assert runner.run(cfg, tmp_path) == 3
    bad = tmp_path / "p001_gAB_5.000000"
    assert "injected failure" in (bad / "error.txt").read_text()
    assert manifest(bad / "manifest.txt")["status"] == "error"
    for good in ("p000_gAB_1.250000", "p002_gAB_25.000000"):
        assert manifest(tmp_path / good / "manifest.txt")["status"] == "ok"
        assert (tmp_path / good / "echo.txt").exists()
    m = manifest(tmp_path / "manifest.txt")
    assert "error" in m["point.001"] and m["point.002"].endswith("ok")

    # the same points computed alone are byte-identical to those of the failing sweep
    monkeypatch.setattr(runner, "diagonalize", real)
    alone = tmp_path / "alone"
    assert runner.run(small_config(g_AB=[1.25, 5.0, 25.0], densities=False, spectrum_check=False), alone) == 0
    for good in ("p000_gAB_1.250000", "p002_gAB_25.000000"):
        for f in (tmp_path / good).iterdir():
            assert filecmp.cmp(f, alone / good / f.name, shallow=False)


def test_explicit_dt_checked_against_spectrum(tmp_path):
    cfg = small_config(g_AB=[25.0], dt=math.pi / 4 / 8, densities=False, spectrum_check=False)
    assert runner.run(cfg, tmp_path) == 3
    assert "dt" in (tmp_path / "p000_gAB_25.000000" / "error.txt").read_text()


def _compare_trees(a: Path, b: Path):
    files = [f for f in tree(a) if f != "timings.txt"]
    assert files == [f for f in tree(b) if f != "timings.txt"]
    mismatch = [f for f in files if not filecmp.cmp(a / f, b / f, shallow=False)]
    assert not mismatch


def test_fig4c_determinism_reduced(tmp_path):
    cfg = lambda: apply_overrides(load_preset("fig4c"), ["n_tot=10", "g_AB=linspace(0, 25, 6)"])
    assert runner.run(cfg(), tmp_path / "a") == 0
    assert runner.run(cfg(), tmp_path / "b") == 0
    _compare_trees(tmp_path / "a", tmp_path / "b")


def test_parallel_matches_serial(tmp_path):
    cfg = lambda w: apply_overrides(load_preset("fig4c"), ["n_tot=8", "g_AB=0, 12.5, 25", f"workers={w}"])
    assert runner.run(cfg(1), tmp_path / "serial") == 0
    assert runner.run(cfg(2), tmp_path / "parallel") == 0
    a, b = tmp_path / "serial", tmp_path / "parallel"
    for f in tree(a):
        if f not in ("timings.txt", "manifest.txt"):
            assert filecmp.cmp(a / f, b / f, shallow=False), f


def test_cli_run_and_integral_cache(tmp_path):
    cache = tmp_path / "cache"
    code = cli.main(["run", "--preset", "fig1", "--override", "n_tot=6", "--override", "g_AB=2",
                     "--override", f"integral_cache={cache}", "--override", "density_x=linspace(-6, 6, 121)",
                     "--out", str(tmp_path / "out")])
    assert code == 0
    assert any(cache.iterdir())
    assert (tmp_path / "out" / "p000_gAB_2.000000" / "density_B.txt").exists()
    assert not any(name.endswith(".tmp") for _, _, names in os.walk(tmp_path) for name in names)
