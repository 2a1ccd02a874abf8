"""End-to-end run: ingest, disaggregate, estimate, identify, report."""

from __future__ import annotations

import hashlib
import logging
import subprocess
import time
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, dump_json
from .errors import ConfigError, NgbvarError
from .irf import write_draws_csv
from .plots import emit_plots
from .robustness import run_battery, stability_report
from .stages import estimate_and_identify, load_sources, panel_for, prepare_series, validate_ids

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ESTIMATION = 4
EXIT_REPORT = 5


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _git_describe(path: Path) -> str | None:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=path, capture_output=True, text=True, timeout=10,
        )
    except (OSError, subprocess.SubprocessError):
        return None
    return out.stdout.strip() or None if out.returncode == 0 else None


def _checksums(out_dir: Path) -> dict[str, str]:
    files = sorted(p for p in out_dir.rglob("*") if p.is_file())
    skip = {"manifest.json", "FAILED"}
    return {p.relative_to(out_dir).as_posix(): sha256_file(p) for p in files if p.name not in skip}


def run_pipeline(config: RunConfig, out_dir: str | Path | None = None, threads: int = 1) -> int:
    """Run every stage, writing artifacts into ``out_dir``; returns an exit code.

    On failure the artifacts written so far stay in place next to a
    ``FAILED`` marker that names the stage and error.
    """
    out = Path(out_dir) if out_dir is not None else config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "FAILED").unlink(missing_ok=True)
    started = time.perf_counter()
    manifest = {
        "run_id": config.run_id,
        "seed": config.seed,
        "config_hash": config.config_hash(),
        "hyper": config.hyper.to_dict(),
        "model": {"lags": config.lags, "ordering": list(config.ordering),
                  "shock": {"variable": config.shock.shock_variable,
                            "size_pp": config.shock.size_pp,
                            "horizons": config.shock.horizons}},
        "inputs": {str(p): sha256_file(p) for p in config.files if p.exists()},
        "inputs_git_describe": _git_describe(config.base_dir),
        "package_version": __version__,
        "stages": {},
    }
    stage = "ingest"
    code = EXIT_DATA
    try:
        raw = load_sources(config)
        stage = "disaggregate"
        prepared = prepare_series(config, raw)
        manifest["notes"] = prepared.notes
        stage = "validate"
        code = EXIT_CONFIG
        validate_ids(config, prepared)
        stage = "panel"
        code = EXIT_DATA
        panel = panel_for(prepared, config.ordering)
        panel.to_csv(out / "panel.csv")
        manifest["stages"]["ingest"] = {"t": panel.t, "m": panel.m,
                                        "span": panel.dates[0] + ".." + panel.dates[-1]}

        stage = "estimate"
        code = EXIT_ESTIMATION
        fit = estimate_and_identify(panel, config.lags, config.hyper, config.shock, threads)
        fit.sample.save(out / "draws", run_id=config.run_id)
        stab = stability_report(fit.sample)
        manifest["stages"]["estimate"] = {
            "draws": len(fit.sample),
            "stability": stab.summary(),
            "max_split_rhat_S": float(np.nanmax(fit.sample.diagnostics["S"]["rhat"])),
            "min_ess_S": float(np.nanmin(fit.sample.diagnostics["S"]["ess"])),
        }

        stage = "irf"
        code = EXIT_REPORT
        fit.bands.to_csv(out / "irf_bands.csv")
        if config.export_draw_irfs:
            write_draws_csv(fit.irfs, out / "irf_draws.csv")

        variants = config.all_variants()
        variant_medians = None
        if variants:
            stage = "battery"
            battery = run_battery(config, variants, prepared=prepared, base=fit, threads=threads)
            doc = battery.write(out / "battery")
            for entry in doc["variants"]:
                if "median_path_file" in entry:
                    entry["median_path_file"] = "battery/" + entry["median_path_file"]
            (out / "battery.json").write_text(dump_json(doc))
            variant_medians = {
                v.spec.label: {name: v.median[:, j] for j, name in enumerate(v.ordering)}
                for v in battery.variants if v.status == "ok"
            }
            manifest["stages"]["battery"] = {
                "variants": [e["label"] for e in doc["variants"]],
                "failed": [e["label"] for e in doc["variants"] if e["status"] != "ok"],
            }

        if "svg" in config.formats:
            stage = "plots"
            emit_plots(fit.bands, out / "plots", countries=config.plot_countries)
            if variant_medians:
                emit_plots(fit.bands, out / "plots" / "battery", countries=config.plot_countries,
                           variant_medians=variant_medians)
        code = EXIT_OK
    except (NgbvarError, OSError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            code = EXIT_CONFIG
        log.error("stage %s failed: %s", stage, exc)
        manifest["failed_stage"] = stage
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        (out / "FAILED").write_text(
            f"stage: {stage}\nerror: {type(exc).__name__}: {exc}\n\n{traceback.format_exc()}"
        )
    manifest["status"] = "ok" if code == EXIT_OK else "failed"
    manifest["exit_code"] = code
    manifest["wall_time_s"] = round(time.perf_counter() - started, 3)
    manifest["artifacts"] = _checksums(out)
    (out / "manifest.json").write_text(dump_json(manifest))
    return code
