"""Robustness battery: alternative lag orders, orderings and shock variables."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import RunConfig, VariantSpec
from .errors import AlignmentError, NgbvarError
from .irf import QuantileBand, ShockSpec
from .panel import MONTHLY, TimeSeries
from .sampler import DrawState, PosteriorSample
from .stages import Fit, Prepared, estimate_and_identify, load_sources, panel_for, prepare_series

log = logging.getLogger(__name__)


def companion_matrix(A: np.ndarray) -> np.ndarray:
    m = A.shape[0]
    mp = A.shape[1]
    comp = np.zeros((mp, mp))
    comp[:m] = A
    comp[m:, :-m] = np.eye(mp - m)
    return comp


def companion_eigen_max(draw: DrawState | np.ndarray, p: int | None = None) -> float:
    """Largest eigenvalue modulus of the VAR(1) companion form."""
    A = draw.A if isinstance(draw, DrawState) else np.asarray(draw, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if p is not None and A.shape[1] != A.shape[0] * p:
        raise ValueError(f"coefficient matrix {A.shape} inconsistent with p={p}")
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(A)))))


@dataclass(frozen=True, eq=False)
class StabilityReport:
    moduli: np.ndarray

    @property
    def explosive_share(self) -> float:
        return float(np.mean(self.moduli >= 1.0)) if self.moduli.size else 0.0

    def summary(self) -> dict:
        return {
            "draws": int(self.moduli.size),
            "explosive_share": self.explosive_share,
            "max_modulus_median": float(np.median(self.moduli)) if self.moduli.size else None,
            "max_modulus_max": float(np.max(self.moduli)) if self.moduli.size else None,
        }


def stability_report(sample: PosteriorSample) -> StabilityReport:
    return StabilityReport(np.array([companion_eigen_max(a) for a in sample.A]))


def derive_spread(mro: TimeSeries, eonia: TimeSeries, id: str = "mro_eonia_spread") -> TimeSeries:
    """``mro - eonia`` on a shared monthly span."""
    if mro.frequency != MONTHLY or eonia.frequency != MONTHLY:
        raise AlignmentError("spread needs monthly series")
    if mro.start != eonia.start or len(mro) != len(eonia):
        raise AlignmentError(
            f"{mro.id!r} and {eonia.id!r} cover different spans; align them first"
        )
    return TimeSeries(id=id, frequency=MONTHLY, start=mro.start,
                      values=mro.values - eonia.values, unit="percentage-points")


@dataclass
class VariantOutcome:
    spec: VariantSpec
    status: str
    error: str | None = None
    ordering: tuple[str, ...] = ()
    shock: ShockSpec | None = None
    median: np.ndarray | None = None  # (H+1) x m in ``ordering``
    stability: StabilityReport | None = None
    zero_check: bool | None = None

    def median_for(self, variable: str) -> np.ndarray | None:
        if self.median is None or variable not in self.ordering:
            return None
        return self.median[:, self.ordering.index(variable)]


@dataclass
class BatteryResult:
    base: Fit
    base_stability: StabilityReport
    variants: list[VariantOutcome] = field(default_factory=list)

    @property
    def base_bands(self) -> QuantileBand:
        return self.base.bands

    def labels(self) -> list[str]:
        return [v.spec.label for v in self.variants]

    def write(self, directory: str | Path) -> dict:
        """Median-path CSVs per variant plus the JSON summary document."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        doc = {
            "base": {"stability": self.base_stability.summary(),
                     "ordering": list(self.base.bands.ordering)},
            "variants": [],
        }
        for v in self.variants:
            entry = {"label": v.spec.label, "status": v.status, "changes": v.spec.changes()}
            if v.status == "ok":
                path = directory / f"median_{v.spec.label}.csv"
                with open(path, "w", newline="", encoding="utf-8") as fh:
                    writer = csv.writer(fh, lineterminator="\n")
                    writer.writerow(["variable", "horizon", "q50"])
                    for j, name in enumerate(v.ordering):
                        for h in range(v.median.shape[0]):
                            writer.writerow([name, h, repr(float(v.median[h, j]))])
                entry.update(
                    median_path_file=path.name,
                    stability_share=v.stability.explosive_share,
                    stability=v.stability.summary(),
                    shock={"variable": v.shock.shock_variable, "size_pp": v.shock.size_pp},
                    impact_zeros_hold=v.zero_check,
                )
            else:
                entry["error"] = v.error
            doc["variants"].append(entry)
        return doc


def _impact_zeros_hold(fit: Fit) -> bool:
    idx = fit.irfs.ordering.index(fit.irfs.shock.shock_variable)
    return bool(np.all(fit.irfs.responses[:, 0, :idx] == 0.0))


def _variant_setup(config: RunConfig, prepared: Prepared, spec: VariantSpec):
    """Resolve a variant into (prepared series, ordering, lags, shock)."""
    spec.validate()
    ordering = list(config.ordering)
    lags = config.lags
    shock = config.shock
    if spec.lags is not None:
        lags = spec.lags
    if spec.ordering is not None:
        if sorted(spec.ordering) != sorted(ordering):
            raise AlignmentError(f"variant {spec.label!r} ordering is not a permutation of the base")
        ordering = list(spec.ordering)
    if spec.shock is not None:
        bs = config.battery
        if spec.shock == "spread":
            mro = prepared.series[bs.spread_mro]
            eonia = prepared.series[bs.spread_eonia]
            first = max(mro.start, eonia.start)
            last = min(mro.end, eonia.end)
            spread = derive_spread(mro.window(first, last), eonia.window(first, last), bs.spread_id)
            prepared = Prepared({**prepared.series, spread.id: spread}, prepared.notes)
            ordering[ordering.index(config.shock.shock_variable)] = spread.id
            shock = replace(shock, shock_variable=spread.id,
                            size_pp=float(np.sign(bs.spread_sign)) * abs(shock.size_pp))
        else:
            if spec.shock not in ordering:
                raise AlignmentError(f"variant shock {spec.shock!r} not in ordering")
            shock = replace(shock, shock_variable=spec.shock)
    return prepared, ordering, lags, shock


def run_variant(config: RunConfig, prepared: Prepared, spec: VariantSpec, threads: int = 1) -> VariantOutcome:
    try:
        prep, ordering, lags, shock = _variant_setup(config, prepared, spec)
        fit = estimate_and_identify(panel_for(prep, ordering), lags, config.hyper, shock, threads)
    except NgbvarError as exc:
        log.warning("variant %s failed: %s", spec.label, exc)
        return VariantOutcome(spec=spec, status="failed", error=f"{type(exc).__name__}: {exc}")
    return VariantOutcome(
        spec=spec,
        status="ok",
        ordering=tuple(ordering),
        shock=shock,
        median=fit.bands.median,
        stability=stability_report(fit.sample),
        zero_check=_impact_zeros_hold(fit),
    )


def run_battery(
    config: RunConfig,
    variants=None,
    prepared: Prepared | None = None,
    base: Fit | None = None,
    threads: int = 1,
) -> BatteryResult:
    """Re-estimate the model under each variant and pair medians with base bands.

    A variant that fails validation or estimation is recorded as failed;
    the remaining variants still run. Every variant uses the base seed.
    """
    variants = config.all_variants() if variants is None else tuple(variants)
    if prepared is None:
        prepared = prepare_series(config, load_sources(config))
    if base is None:
        base = estimate_and_identify(panel_for(prepared, config.ordering), config.lags,
                                     config.hyper, config.shock, threads)
    result = BatteryResult(base=base, base_stability=stability_report(base.sample))
    for spec in variants:
        result.variants.append(run_variant(config, prepared, spec, threads))
    return result
