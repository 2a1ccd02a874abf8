"""Recursive identification, normalized impulse responses and credible bands."""

from __future__ import annotations

import csv
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, NormalizationError, NumericalError
from .sampler import DrawState, PosteriorSample

DEFAULT_PROBS = (0.16, 0.5, 0.84)


@dataclass(frozen=True)
class ShockSpec:
    """``size_pp`` is the horizon-0 move of the shock variable, e.g. -0.25 for a 25 bp cut."""

    shock_variable: str
    size_pp: float = -0.25
    horizons: int = 36

    def __post_init__(self):
        if self.horizons < 1:
            raise ConfigError("horizons must be >= 1")
        if not np.isfinite(self.size_pp) or self.size_pp == 0:
            raise ConfigError("size_pp must be a finite non-zero number")

    def position(self, ordering: Sequence[str]) -> int:
        try:
            return list(ordering).index(self.shock_variable)
        except ValueError:
            raise ConfigError(f"shock variable {self.shock_variable!r} not in ordering") from None


@dataclass(frozen=True, eq=False)
class IrfSet:
    responses: np.ndarray  # draws x (H+1) x m
    shock: ShockSpec
    ordering: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class QuantileBand:
    probs: tuple[float, ...]
    values: np.ndarray  # len(probs) x (H+1) x m
    ordering: tuple[str, ...]

    def __getitem__(self, prob: float) -> np.ndarray:
        return self.values[self.probs.index(prob)]

    @property
    def median(self) -> np.ndarray:
        return self[0.5]

    @property
    def horizons(self) -> int:
        return self.values.shape[1] - 1

    def to_csv(self, path: str | Path) -> None:
        """Long format ``variable,horizon,q16,q50,q84``; floats in shortest repr."""
        cols = [f"q{round(100 * p):d}" for p in self.probs]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["variable", "horizon", *cols])
            for v, name in enumerate(self.ordering):
                for h in range(self.values.shape[1]):
                    writer.writerow([name, h, *(repr(float(x)) for x in self.values[:, h, v])])

    @classmethod
    def from_csv(cls, path: str | Path) -> QuantileBand:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        cols = [c for c in rows[0] if c.startswith("q")]
        probs = tuple(int(c[1:]) / 100 for c in cols)
        ordering = tuple(dict.fromkeys(r["variable"] for r in rows))
        horizons = max(int(r["horizon"]) for r in rows)
        values = np.empty((len(cols), horizons + 1, len(ordering)))
        for r in rows:
            v = ordering.index(r["variable"])
            values[:, int(r["horizon"]), v] = [float(r[c]) for c in cols]
        return cls(probs=probs, values=values, ordering=ordering)


def impact_matrix(draw: DrawState) -> np.ndarray:
    """Lower-triangular ``B0 = H^-1 S^1/2`` with ``B0 B0' = Sigma``."""
    b0 = draw.h_inverse() * np.sqrt(draw.S)[None, :]
    if not np.all(np.isfinite(b0)):
        raise NumericalError("impact matrix has non-finite entries")
    return b0


def ma_coefficients(A: np.ndarray, horizons: int) -> np.ndarray:
    """Reduced-form moving-average matrices ``Phi_0..Phi_H``."""
    m = A.shape[0]
    p = A.shape[1] // m
    lags = [A[:, r * m : (r + 1) * m] for r in range(p)]
    phi = np.empty((horizons + 1, m, m))
    phi[0] = np.eye(m)
    for h in range(1, horizons + 1):
        acc = np.zeros((m, m))
        for r in range(1, min(h, p) + 1):
            acc += lags[r - 1] @ phi[h - r]
        phi[h] = acc
    return phi


def compute_irf(draw: DrawState, spec: ShockSpec, shock_index: int) -> np.ndarray:
    """``(H+1) x m`` responses to the shock in column ``shock_index``.

    Paths are divided by the shock variable's own impact response and
    multiplied by ``spec.size_pp``, so that response equals ``size_pp``.
    """
    impulse = impact_matrix(draw)[:, shock_index]
    own = impulse[shock_index]
    if own == 0 or not np.isfinite(own):
        raise NormalizationError("shock variable has zero impact response")
    phi = ma_coefficients(draw.A, spec.horizons)
    paths = phi @ impulse
    return paths / own * spec.size_pp


def irf_set(sample: PosteriorSample | Sequence[DrawState], spec: ShockSpec, ordering) -> IrfSet:
    ordering = tuple(ordering)
    idx = spec.position(ordering)
    responses = np.stack([compute_irf(d, spec, idx) for d in sample])
    return IrfSet(responses=responses, shock=spec, ordering=ordering)


def quantile_bands(irfs: IrfSet, probs: Sequence[float] = DEFAULT_PROBS) -> QuantileBand:
    """Per variable and horizon empirical quantiles (linear interpolation)."""
    probs = tuple(float(p) for p in probs)
    if not probs or any(not 0.0 < p < 1.0 for p in probs):
        raise ValueError("probabilities must lie in (0, 1)")
    r = irfs.responses
    if r.ndim != 3 or r.shape[0] == 0:
        raise ValueError("no impulse-response draws to summarize")
    values = np.quantile(r, probs, axis=0)
    return QuantileBand(probs=probs, values=values, ordering=irfs.ordering)


def write_draws_csv(irfs: IrfSet, path: str | Path) -> None:
    """Per-draw export ``draw,variable,horizon,response``."""
    r = irfs.responses
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["draw", "variable", "horizon", "response"])
        for d in range(r.shape[0]):
            for v, name in enumerate(irfs.ordering):
                for h in range(r.shape[1]):
                    writer.writerow([d, name, h, repr(float(r[d, h, v]))])
