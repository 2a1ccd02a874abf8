import json
import re

import numpy as np
import pytest

from ngbvar.cli import main
from ngbvar.config import load_config
from ngbvar.irf import QuantileBand
from ngbvar.panel import load_csv
from ngbvar.pipeline import EXIT_CONFIG, EXIT_OK, run_pipeline
from ngbvar.plots import default_layout, emit_plots
from ngbvar.synthetic import SyntheticDgp, generate_synthetic, simulate

from conftest import IDS, make_project


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline")
    cfg = make_project(root, battery=True)
    code = main(["run", "--config", str(cfg), "--out", str(root / "out")])
    return code, root / "out"


def test_run_writes_all_artifacts(run_dir):
    code, out = run_dir
    assert code == EXIT_OK
    for name in ("manifest.json", "panel.csv", "irf_bands.csv", "battery.json"):
        assert (out / name).is_file()
    assert (out / "draws" / "index.json").is_file()
    assert list((out / "plots").glob("*.svg"))
    assert not (out / "FAILED").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["exit_code"] == 0
    assert manifest["seed"] == 0
    assert re.fullmatch(r"[0-9a-f]{64}", manifest["config_hash"])
    assert "irf_bands.csv" in manifest["artifacts"]
    battery = json.loads((out / "battery.json").read_text())
    assert [v["label"] for v in battery["variants"]] == ["lags3", "lags4", "reorder", "spread"]
    for v in battery["variants"]:
        assert (out / v["median_path_file"]).is_file()


def test_bands_file_matches_ordering(run_dir):
    _, out = run_dir
    band = QuantileBand.from_csv(out / "irf_bands.csv")
    assert band.ordering == IDS
    assert np.all(band.median[0, IDS.index("eonia")] == -0.25)
    assert np.all(band.values[:, 0, : IDS.index("eonia")] == 0.0)


def test_unknown_series_fails_before_estimation(tmp_path):
    cfg = make_project(tmp_path, battery=False)
    cfg.write_text(cfg.read_text().replace('"stoxx"]', '"stoxx", "nope"]'))
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_CONFIG
    assert (out / "FAILED").is_file()
    assert not (out / "draws").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["failed_stage"] == "validate"
    assert "estimate" not in manifest["stages"]


def test_rerun_is_byte_identical(tmp_path):
    cfg = load_config(make_project(tmp_path, battery=False, burn=50, keep=50))
    assert run_pipeline(cfg, tmp_path / "a") == EXIT_OK
    assert run_pipeline(cfg, tmp_path / "b") == EXIT_OK
    assert (tmp_path / "a" / "irf_bands.csv").read_bytes() == (tmp_path / "b" / "irf_bands.csv").read_bytes()
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["artifacts"] == mb["artifacts"]
    # a different seed changes the draws
    assert run_pipeline(cfg.with_seed(1), tmp_path / "c") == EXIT_OK
    mc = json.loads((tmp_path / "c" / "manifest.json").read_text())
    assert mc["artifacts"]["irf_bands.csv"] != ma["artifacts"]["irf_bands.csv"]
    assert mc["config_hash"] != ma["config_hash"]


def test_stage_subcommands(tmp_path, capsys):
    cfg = make_project(tmp_path, battery=False, burn=20, keep=20)
    out = tmp_path / "out"
    args = ["--config", str(cfg), "--out", str(out)]
    assert main(["ingest", *args]) == 0
    assert main(["estimate", *args]) == 0
    assert main(["irf", *args]) == 0
    assert (out / "panel.csv").is_file() and (out / "irf_bands.csv").is_file()
    assert main(["battery", *args, "--seed", "5"]) == 0


def test_disaggregate_subcommand(tmp_path):
    src = tmp_path / "q.csv"
    src.write_text("date,series_id,value\n2008-Q1,bls,1\n2008-Q2,bls,2\n2008-Q3,bls,3\n")
    out = tmp_path / "m.csv"
    assert main(["disaggregate", "--input", str(src), "--output", str(out), "--rule", "last"]) == 0
    (s,) = load_csv(out)
    assert s.dates[0] == "2008-01" and s.values[2] == 1.0 and s.values[8] == 3.0
    assert main(["disaggregate", "--input", str(src), "--output", str(out), "--method", "chow-lin"]) == EXIT_CONFIG


def test_synthetic_subcommand(tmp_path):
    out = tmp_path / "syn"
    assert main(["synthetic", "--m", "3", "--p", "2", "--t", "300", "--seed", "4", "--out", str(out)]) == 0
    rows = (out / "data.csv").read_text().splitlines()
    assert len(rows) == 1 + 900
    truth = json.loads((out / "truth.json").read_text())
    assert truth["companion_max_modulus"] < 1.0
    assert load_config(out / "config.toml").ordering == ("y1", "y2", "y3")


def test_synthetic_seed_determinism(tmp_path):
    dgp = SyntheticDgp(m=3, p=2, t=100, seed=9)
    generate_synthetic(dgp, tmp_path / "a")
    generate_synthetic(dgp, tmp_path / "b")
    for name in ("data.csv", "truth.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_explosive_truth_is_redrawn():
    data = simulate(SyntheticDgp(m=2, p=1, t=50, seed=0, A=np.diag([1.2, 0.3])))
    assert np.max(np.abs(np.linalg.eigvals(data.A))) < 1.0
    # wide magnitudes force rejections of the random truth as well
    data = simulate(SyntheticDgp(m=4, p=2, t=50, seed=1, sparsity=0.0, magnitude=(0.6, 0.9)))
    assert data.redraws > 0
    assert np.max(np.abs(np.linalg.eigvals(np.block([[data.A], [np.eye(4), np.zeros((4, 4))]])))) < 0.95


def test_generated_csv_round_trips_exactly(tmp_path):
    data = generate_synthetic(SyntheticDgp(m=3, p=1, t=80, seed=2), tmp_path)
    loaded = {s.id: s for s in load_csv(tmp_path / "data.csv")}
    for i, s in enumerate(data.series):
        np.testing.assert_array_equal(loaded[s.id].values, data.values[:, i])


def band(ids, values):
    return QuantileBand(probs=(0.16, 0.5, 0.84), values=values, ordering=tuple(ids))


def test_seven_country_role_gives_one_svg_with_seven_panels(tmp_path):
    ids = [f"loan_supply_{c}_inv" for c in ("at", "be", "de", "gr", "it", "pt", "es")]
    vals = np.sort(np.random.default_rng(0).normal(size=(3, 13, 7)), axis=0)
    layout = default_layout(ids)
    assert list(layout) == ["loan_supply_inv"] and len(layout["loan_supply_inv"]) == 7
    (path,) = emit_plots(band(ids, vals), tmp_path)
    text = path.read_text()
    assert path.name == "loan_supply_inv.svg"
    assert text.count('id="axes_') == 7


def test_flat_band_and_determinism(tmp_path):
    flat = np.zeros((3, 5, 1)) + 0.5
    (a,) = emit_plots(band(["x"], flat), tmp_path / "a")
    (b,) = emit_plots(band(["x"], flat), tmp_path / "b")
    assert a.read_bytes() == b.read_bytes()


def test_empty_bands_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_plots(band([], np.zeros((3, 5, 0))), tmp_path)
