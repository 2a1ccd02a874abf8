"""Simulated VAR panels with a known truth, written in the ingest format."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .panel import MONTHLY, TimeSeries, parse_period, write_long_csv
from .robustness import companion_eigen_max

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyntheticDgp:
    m: int
    p: int
    t: int
    seed: int = 0
    sparsity: float = 0.8
    A: np.ndarray | None = None
    sigma: np.ndarray | None = None
    ids: tuple[str, ...] | None = None
    start: str = "2008-01"
    magnitude: tuple[float, float] = (0.2, 0.8)
    max_modulus: float = 0.95
    burn_in: int = 200


@dataclass(frozen=True, eq=False)
class SyntheticData:
    series: list[TimeSeries]
    A: np.ndarray
    sigma: np.ndarray
    mask: np.ndarray
    values: np.ndarray
    redraws: int


def _draw_coefficients(dgp: SyntheticDgp, rng) -> tuple[np.ndarray, np.ndarray]:
    k = dgp.m * dgp.m * dgp.p
    n_zero = int(round(dgp.sparsity * k))
    flat = np.ones(k, dtype=bool)
    flat[rng.permutation(k)[:n_zero]] = False
    mask = flat.reshape(dgp.m, dgp.m * dgp.p)
    lo, hi = dgp.magnitude
    mags = rng.uniform(lo, hi, size=mask.shape) * rng.choice([-1.0, 1.0], size=mask.shape)
    return np.where(mask, mags, 0.0), mask


def _draw_sigma(m: int, rng) -> np.ndarray:
    L = np.tril(rng.normal(0.0, 0.3, size=(m, m)), -1) + np.diag(rng.uniform(0.5, 1.5, size=m))
    return L @ L.T


def simulate(dgp: SyntheticDgp) -> SyntheticData:
    """Simulate a stable VAR; explosive truths are redrawn, never emitted."""
    rng = np.random.default_rng(dgp.seed)
    m, p = dgp.m, dgp.p
    redraws = 0
    if dgp.A is not None:
        A = np.asarray(dgp.A, dtype=float).reshape(m, m * p)
        mask = A != 0
        if companion_eigen_max(A) >= 1.0:
            log.warning("requested coefficient matrix is explosive; redrawing")
            A = None
    else:
        A = None
    while A is None or companion_eigen_max(A) >= dgp.max_modulus:
        if A is not None:
            redraws += 1
        A, mask = _draw_coefficients(dgp, rng)
    sigma = _draw_sigma(m, rng) if dgp.sigma is None else np.asarray(dgp.sigma, dtype=float)
    chol = np.linalg.cholesky(sigma)

    total = dgp.t + dgp.burn_in
    y = np.zeros((total + p, m))
    shocks = rng.standard_normal((total + p, m)) @ chol.T
    for t in range(p, total + p):
        x = np.concatenate([y[t - j] for j in range(1, p + 1)])
        y[t] = A @ x + shocks[t]
    values = y[-dgp.t :]

    ids = dgp.ids or tuple(f"y{i + 1}" for i in range(m))
    if len(ids) != m:
        raise ValueError(f"{len(ids)} ids for m={m}")
    freq, start = parse_period(dgp.start)
    if freq != MONTHLY:
        raise ValueError("synthetic panels start on a month")
    series = [TimeSeries(id=ids[i], frequency=MONTHLY, start=start, values=values[:, i])
              for i in range(m)]
    return SyntheticData(series=series, A=A, sigma=sigma, mask=mask, values=values, redraws=redraws)


def generate_synthetic(dgp: SyntheticDgp, out_dir: str | Path) -> SyntheticData:
    """Write ``data.csv`` and ``truth.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = simulate(dgp)
    write_long_csv(out_dir / "data.csv", data.series)
    truth = {
        "m": dgp.m,
        "p": dgp.p,
        "t": dgp.t,
        "seed": dgp.seed,
        "ids": [s.id for s in data.series],
        "A": data.A.tolist(),
        "sigma": data.sigma.tolist(),
        "mask": data.mask.astype(int).tolist(),
        "companion_max_modulus": companion_eigen_max(data.A),
        "redraws": data.redraws,
    }
    (out_dir / "truth.json").write_text(json.dumps(truth, indent=2) + "\n")
    return data


def synthetic_config(ids, shock: str, out_dir: str = "out", seed: int = 0, lags: int = 2,
                     burn: int = 1000, keep: int = 1000, chains: int = 2, horizons: int = 36,
                     standard_variants: bool = True, reorder_below=()) -> str:
    """TOML text of a ready-to-run config for a synthetic panel."""
    q = lambda xs: "[" + ", ".join(f'"{x}"' for x in xs) + "]"  # noqa: E731
    lines = [
        f"seed = {seed}",
        'run_id = "synthetic"',
        "",
        "[data]",
        'files = ["data.csv"]',
        "",
        "[model]",
        f"lags = {lags}",
        f"ordering = {q(ids)}",
        f'shock = {{ variable = "{shock}", size_pp = -0.25, horizons = {horizons} }}',
        "",
        "[prior]",
        f"burn = {burn}",
        f"keep = {keep}",
        f"chains = {chains}",
        "",
        "[output]",
        f'dir = "{out_dir}"',
        "",
        "[battery]",
        f"standard_variants = {'true' if standard_variants else 'false'}",
        f"reorder_below_shock = {q(reorder_below)}",
        "",
    ]
    return "\n".join(lines)
