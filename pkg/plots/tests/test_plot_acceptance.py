"""Secondary acceptance: every bundled scenario's artifacts render
headlessly with exit code 0, and the monotonicity figure's upper trace
is non-increasing as drawn from the CSV it consumed."""

import subprocess
import sys

import pytest

from solitonflow_plots import PlotSpec, render
from solitonflow_plots.cli import main

pytest.importorskip("solitonflow", reason="primary package not installed")

BUNDLES = ("circle_gaussian", "shrinker_circle", "circle2_monotonicity",
           "ellipse_gaussian", "equator_sphere", "latitude_sphere")


@pytest.fixture(scope="module")
def all_artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundles")
    cmd = [sys.executable, "-m", "solitonflow.cli", "run"]
    for name in BUNDLES:
        cmd += ["--config", name]
    cmd += ["--out", str(out), "--jobs", "2"]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return out


def test_renders_all_bundles_headlessly(all_artifacts, tmp_path):
    print()
    for scen in BUNDLES:
        base = all_artifacts / scen
        codes = [
            main(["--kind", "monotonicity", "--series", str(base / "series.csv"),
                  "--out", str(tmp_path / f"{scen}_mono.png")]),
            main(["--kind", "type_one", "--series", str(base / "series.csv"),
                  "--out", str(tmp_path / f"{scen}_t1.png")]),
            main(["--kind", "snapshots", "--snapshots",
                  str(base / "snapshots.jsonl"),
                  "--out", str(tmp_path / f"{scen}_snap.png")]),
        ]
        ok = codes == [0, 0, 0]
        print(f"ACCEPTANCE plots-render {scen}: {'PASS' if ok else 'FAIL'}")
        assert ok, f"{scen}: exit codes {codes}"


def test_monotone_trace_on_monotone_scenarios(all_artifacts, tmp_path):
    print()
    for scen in ("circle_gaussian", "shrinker_circle", "circle2_monotonicity",
                 "ellipse_gaussian", "equator_sphere"):
        summary = render(PlotSpec(
            kind="monotonicity",
            series_path=all_artifacts / scen / "series.csv",
            out_path=tmp_path / f"{scen}.png"))
        print(f"ACCEPTANCE plots-monotone-trace {scen}: "
              f"{'PASS' if summary['non_increasing'] else 'FAIL'}")
        assert summary["non_increasing"], scen


def test_shrinker_overlay_deviation(all_artifacts, tmp_path):
    summary = render(PlotSpec(
        kind="snapshots",
        snapshots_path=all_artifacts / "shrinker_circle" / "snapshots.jsonl",
        out_path=tmp_path / "overlay.png"))
    ok = summary["max_radial_deviation"] <= 1e-3
    print(f"\nACCEPTANCE plots-overlay-deviation: {'PASS' if ok else 'FAIL'} "
          f"({summary['max_radial_deviation']:.2e} <= 1e-3)")
    assert ok
