from pathlib import Path

import pytest

from ngbvar.config import load_config
from ngbvar.synthetic import SyntheticDgp, generate_synthetic, synthetic_config

IDS = ("gdp", "loan_supply", "mro", "eonia", "stoxx")


def make_project(root: Path, seed=0, burn=100, keep=100, chains=1, battery=True, t=150, horizons=12,
                 A=None):
    """Synthetic data file plus a ready config; returns the config path."""
    root.mkdir(parents=True, exist_ok=True)
    generate_synthetic(SyntheticDgp(m=len(IDS), p=2, t=t, seed=seed, ids=IDS, A=A), root)
    text = synthetic_config(IDS, "eonia", out_dir="out", seed=seed, lags=2, burn=burn, keep=keep,
                            chains=chains, horizons=horizons, standard_variants=battery)
    path = root / "config.toml"
    path.write_text(text)
    return path


@pytest.fixture(scope="session")
def project(tmp_path_factory):
    return make_project(tmp_path_factory.mktemp("project"))


@pytest.fixture(scope="session")
def project_config(project):
    return load_config(project)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record ``(number, passed, detail)`` for the acceptance summary."""
    def record(number: int, passed: bool, detail: str = "") -> bool:
        ACCEPTANCE[number] = (bool(passed), detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
