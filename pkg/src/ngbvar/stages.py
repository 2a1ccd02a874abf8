"""Pipeline stages shared by the full run and the robustness battery."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .config import RunConfig
from .disaggregate import chow_lin, spline_disaggregate
from .errors import FrequencyError, OrderingError
from .irf import IrfSet, QuantileBand, ShockSpec, irf_set, quantile_bands
from .panel import QUARTERLY, Panel, TimeSeries, assemble_panel, growth_rate, invert_series, load_csv
from .sampler import NgHyper, PosteriorSample, build_design, run_mcmc

log = logging.getLogger(__name__)


@dataclass
class Prepared:
    """Monthly, transformed series keyed by their final id, plus provenance notes."""

    series: dict[str, TimeSeries]
    notes: dict = field(default_factory=dict)


def load_sources(config: RunConfig) -> list[TimeSeries]:
    units = {s.id: s.unit for s in config.series}
    out: list[TimeSeries] = []
    seen: set[str] = set()
    for path in config.files:
        for s in load_csv(path, config.schema, units):
            if s.id in seen:
                raise OrderingError(f"series {s.id!r} appears in more than one input file")
            seen.add(s.id)
            out.append(s)
    return out


def prepare_series(config: RunConfig, raw: list[TimeSeries]) -> Prepared:
    """Disaggregate quarterly series, then apply per-series transforms."""
    by_id = {s.id: s for s in raw}
    prepared: dict[str, TimeSeries] = {}
    notes: dict = {"extrapolated": {}, "chow_lin": {}, "quarterly_without_rule": []}
    for s in raw:
        rule = config.rule_for(s.id)
        monthly = s
        if s.frequency == QUARTERLY:
            if rule is None:
                # untouched quarterly series stay out of the panel
                notes["quarterly_without_rule"].append(s.id)
                continue
            if rule.disaggregate == "chow-lin":
                if rule.indicator not in by_id:
                    raise OrderingError(f"indicator {rule.indicator!r} for {s.id!r} not found")
                fit = chow_lin(s, by_id[rule.indicator], rule.aggregation, rule.rho, rule.intercept)
                monthly = fit.monthly_estimate
                notes["chow_lin"][s.id] = {"rho": fit.rho, "beta": fit.beta.tolist(),
                                           "loglik": fit.loglik}
            else:
                res = spline_disaggregate(s, rule.aggregation)
                monthly = res.series
                if res.extrapolated:
                    notes["extrapolated"][s.id] = list(res.extrapolated)
        if rule is not None:
            if rule.transform == "invert":
                monthly = invert_series(monthly)
            elif rule.transform == "growth":
                monthly = growth_rate(monthly, "period-on-period")
            elif rule.transform == "log-return":
                monthly = growth_rate(monthly, "log-return")
        prepared[monthly.id] = monthly
    return Prepared(prepared, notes)


def validate_ids(config: RunConfig, prepared: Prepared) -> None:
    """Fail fast when the ordering references series the data cannot supply."""
    missing = [sid for sid in config.ordering if sid not in prepared.series]
    quarterly = [sid for sid in missing if sid in prepared.notes.get("quarterly_without_rule", ())]
    if quarterly:
        raise FrequencyError(f"add a disaggregation rule for quarterly series {quarterly}")
    if missing:
        raise OrderingError(f"ordering references unknown series: {', '.join(missing)}")
    quarterly = [sid for sid in config.ordering if prepared.series[sid].frequency == QUARTERLY]
    if quarterly:
        raise FrequencyError(f"add a disaggregation rule for quarterly series {quarterly}")


def panel_for(prepared: Prepared, ordering) -> Panel:
    return assemble_panel(list(prepared.series.values()), list(ordering))


@dataclass
class Fit:
    panel: Panel
    sample: PosteriorSample
    irfs: IrfSet
    bands: QuantileBand


def estimate_and_identify(panel: Panel, lags: int, hyper: NgHyper, shock: ShockSpec,
                          threads: int = 1) -> Fit:
    design = build_design(panel, lags)
    log.info("estimating m=%d p=%d t_eff=%d (k=%d)", design.m, lags, design.t_eff, design.k)
    sample = run_mcmc(design, hyper, threads=threads)
    irfs = irf_set(sample, shock, panel.ids)
    return Fit(panel, sample, irfs, quantile_bands(irfs))
