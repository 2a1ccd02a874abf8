"""Quarterly-to-monthly conversion.

Both methods return monthly values covering every month of every input
quarter. Under ``spline_disaggregate`` the first two months of the first
quarter lie before the first anchor and are extrapolated; they are
reported in ``DisaggResult.extrapolated``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.interpolate import CubicSpline

from .errors import (
    CollinearityError,
    ConsistencyError,
    FrequencyError,
    InsufficientDataError,
)
from .panel import MONTHLY, QUARTERLY, TimeSeries, format_period

AGGREGATION_RULES = ("sum", "average", "last")

RHO_BOUND = 0.99
RHO_GRID_POINTS = 199
RHO_TOL = 1e-6
CONSTRAINT_TOL = 1e-8

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AggregationRule:
    """How three monthly values map to one quarterly value."""

    kind: str = "average"

    def __post_init__(self):
        kind = {"last-of-period": "last", "mean": "average"}.get(self.kind, self.kind)
        if kind not in AGGREGATION_RULES:
            raise ValueError(f"unknown aggregation rule {self.kind!r}")
        object.__setattr__(self, "kind", kind)

    def weights(self) -> np.ndarray:
        if self.kind == "sum":
            return np.ones(3)
        if self.kind == "average":
            return np.full(3, 1.0 / 3.0)
        return np.array([0.0, 0.0, 1.0])

    def matrix(self, n_quarters: int) -> np.ndarray:
        """``n_quarters x 3 n_quarters`` aggregation matrix."""
        return np.kron(np.eye(n_quarters), self.weights())

    def aggregate(self, monthly: np.ndarray) -> np.ndarray:
        monthly = np.asarray(monthly, dtype=float)
        return monthly.reshape(-1, 3) @ self.weights()


@dataclass(frozen=True)
class DisaggResult:
    series: TimeSeries
    extrapolated: tuple[str, ...]


@dataclass(frozen=True)
class ChowLinFit:
    beta: np.ndarray
    rho: float
    loglik: float
    monthly_estimate: TimeSeries


def _require_quarterly(q: TimeSeries) -> None:
    if q.frequency != QUARTERLY:
        raise FrequencyError(f"series {q.id!r} is not quarterly")


def spline_disaggregate(q: TimeSeries, rule: AggregationRule | str = "average") -> DisaggResult:
    """Natural cubic spline through quarterly anchors at each quarter's last month.

    Under the ``sum`` rule anchors are scaled to a per-month level (q / 3);
    otherwise the anchor is the quarterly value itself.
    """
    rule = rule if isinstance(rule, AggregationRule) else AggregationRule(rule)
    _require_quarterly(q)
    if len(q) < 3:
        raise InsufficientDataError(
            f"spline interpolation of {q.id!r} needs at least 3 quarters, got {len(q)}"
        )
    anchors = q.values / 3.0 if rule.kind == "sum" else q.values
    knots = q.months.astype(float)
    first_month = 3 * q.start
    months = np.arange(first_month, q.months[-1] + 1)
    spline = CubicSpline(knots, anchors, bc_type="natural", extrapolate=True)
    values = spline(months.astype(float))
    # exact anchor values; spline evaluation at knots can differ in the last ulp
    values[knots.astype(int) - first_month] = anchors
    extrapolated = tuple(format_period(MONTHLY, int(mo)) for mo in months if mo < knots[0])
    out = TimeSeries(id=q.id, frequency=MONTHLY, start=first_month, values=values, unit=q.unit)
    return DisaggResult(out, extrapolated)


def ar1_covariance(rho: float, n: int) -> np.ndarray:
    """Unit-innovation stationary AR(1) covariance ``rho^|i-j| / (1 - rho^2)``."""
    lags = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    return rho**lags / (1.0 - rho**2)


def _gls(rho: float, y_q: np.ndarray, x_m: np.ndarray, agg: np.ndarray):
    """GLS fit at fixed rho; returns (beta, residual_q, V, Omega factor, loglik)."""
    n_q = y_q.shape[0]
    V = ar1_covariance(rho, agg.shape[1])
    omega = agg @ V @ agg.T
    omega = 0.5 * (omega + omega.T)
    cf = linalg.cho_factor(omega, lower=True)
    x_q = agg @ x_m
    wx = linalg.cho_solve(cf, x_q)
    xtwx = x_q.T @ wx
    beta = linalg.solve(xtwx, wx.T @ y_q, assume_a="pos")
    resid = y_q - x_q @ beta
    quad = float(resid @ linalg.cho_solve(cf, resid))
    sigma2 = quad / n_q
    logdet = 2.0 * float(np.sum(np.log(np.diag(cf[0]))))
    if sigma2 <= 0.0:
        # perfect fit: the profile likelihood is unbounded, report +inf
        loglik = np.inf
    else:
        loglik = -0.5 * n_q * (np.log(2.0 * np.pi * sigma2) + 1.0) - 0.5 * logdet
    return beta, resid, V, cf, loglik


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def profile_loglik(rho: float, q: TimeSeries, indicator: TimeSeries, rule, intercept=False) -> float:
    y_q, x_m, agg = _chow_lin_arrays(q, indicator, rule, intercept)
    return _gls(rho, y_q, x_m, agg)[4]


def _chow_lin_arrays(q, indicator, rule, intercept):
    _require_quarterly(q)
    if indicator.frequency != MONTHLY:
        raise FrequencyError(f"indicator {indicator.id!r} must be monthly")
    first, last = 3 * q.start, 3 * q.end + 2
    if indicator.start > first or indicator.end < last:
        raise InsufficientDataError(
            f"indicator {indicator.id!r} must cover {format_period(MONTHLY, first)}"
            f"..{format_period(MONTHLY, last)}"
        )
    x = indicator.window(first, last).values
    x_m = np.column_stack([np.ones_like(x), x]) if intercept else x[:, None]
    agg = rule.matrix(len(q))
    x_q = agg @ x_m
    if np.linalg.matrix_rank(x_q) < x_q.shape[1] or x_q.shape[0] < x_q.shape[1]:
        raise CollinearityError(
            f"aggregated regressors for {q.id!r} are rank deficient"
            + (" (constant indicator with intercept?)" if intercept else "")
        )
    return q.values.astype(float), x_m, agg


def chow_lin(
    q: TimeSeries,
    indicator: TimeSeries,
    rule: AggregationRule | str = "average",
    rho: float | str = "ml",
    intercept: bool = False,
) -> ChowLinFit:
    """Chow-Lin disaggregation of ``q`` with a single monthly indicator.

    ``rho`` is either a fixed AR(1) coefficient in (-1, 1) or ``"ml"`` to
    maximize the concentrated log-likelihood over a grid on (-0.99, 0.99)
    followed by golden-section refinement.
    """
    rule = rule if isinstance(rule, AggregationRule) else AggregationRule(rule)
    y_q, x_m, agg = _chow_lin_arrays(q, indicator, rule, intercept)

    if isinstance(rho, str):
        if rho not in ("ml", "maximum-likelihood"):
            raise ValueError(f"unknown rho mode {rho!r}")
        grid = np.linspace(-RHO_BOUND, RHO_BOUND, RHO_GRID_POINTS)
        ll = np.array([_gls(r, y_q, x_m, agg)[4] for r in grid])
        if not np.all(np.isfinite(ll)) and np.all(np.isinf(ll)):
            rho_hat = 0.0
        else:
            best = int(np.nanargmax(np.where(np.isnan(ll), -np.inf, ll)))
            lo = grid[max(best - 1, 0)]
            hi = grid[min(best + 1, len(grid) - 1)]
            rho_hat = _golden_max(lambda r: _gls(r, y_q, x_m, agg)[4], lo, hi, RHO_TOL)
    else:
        rho_hat = float(rho)
        if not -1.0 < rho_hat < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {rho_hat}")

    beta, resid, V, cf, loglik = _gls(rho_hat, y_q, x_m, agg)
    monthly = x_m @ beta + V @ agg.T @ linalg.cho_solve(cf, resid)

    back = agg @ monthly
    scale = np.maximum(np.abs(y_q), 1.0)
    err = float(np.max(np.abs(back - y_q) / scale))
    if err > CONSTRAINT_TOL:
        raise ConsistencyError(f"Chow-Lin aggregation constraint violated by {err:.3e}")

    est = TimeSeries(id=q.id, frequency=MONTHLY, start=3 * q.start, values=monthly, unit=q.unit)
    return ChowLinFit(beta=beta, rho=float(rho_hat), loglik=float(loglik), monthly_estimate=est)
