"""Gibbs sampler for a VAR under a hierarchical normal-gamma prior.

Model, for t = p+1..T::

    y_t = A x_t + e_t,   x_t = (y_{t-1}, ..., y_{t-p})
    Cov(e_t) = H^{-1} S H^{-1}',  H unit lower triangular, S = diag(s)

Prior on each autoregressive coefficient a_i sitting at lag j::

    a_i | psi_i ~ N(0, 2 psi_i / lambda2_j),   psi_i ~ Gamma(theta, theta)
    lambda2_j = zeta_1 * ... * zeta_j,          zeta_r ~ Gamma(d_r, l_r)

Gamma distributions are shape-rate. The free elements of H get the same
structure with their own local scales and a single global ``zeta_cov``.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import ConfigError, DomainError, InsufficientDataError, NumericalError
from .gig import sample_gig
from .panel import Panel

log = logging.getLogger(__name__)

_TINY = 1e-300
LAG_STRUCTURES = ("cumulative", "full")


@dataclass(frozen=True, eq=False)
class VarDesign:
    Y: np.ndarray
    X: np.ndarray
    m: int
    p: int
    ids: tuple[str, ...] = ()

    @property
    def t_eff(self) -> int:
        return self.Y.shape[0]

    @property
    def k(self) -> int:
        return self.m * self.m * self.p

    def lag_of_column(self) -> np.ndarray:
        """Lag (1-based) of every column of ``X``."""
        return np.repeat(np.arange(1, self.p + 1), self.m)


def build_design(data, p: int, ids=None) -> VarDesign:
    """Stack responses and lagged regressors from a panel or ``t x m`` array."""
    if isinstance(data, Panel):
        ids = tuple(data.ids)
        values = data.values
    else:
        values = np.asarray(data, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
    t, m = values.shape
    ids = tuple(ids) if ids is not None else tuple(f"y{i + 1}" for i in range(m))
    if p < 1:
        raise ConfigError(f"lag order must be >= 1, got {p}")
    if t <= p + 1:
        raise InsufficientDataError(f"{t} observations are not enough for {p} lags")
    flat = [ids[i] for i in range(m) if np.ptp(values[:, i]) == 0.0]
    if flat:
        raise InsufficientDataError(f"constant series cannot enter the VAR: {', '.join(flat)}")
    Y = values[p:]
    X = np.hstack([values[p - j : t - j] for j in range(1, p + 1)])
    return VarDesign(Y=Y, X=X, m=m, p=p, ids=ids)


def lambda_for_lag(zeta, j: int, structure: str = "cumulative") -> float:
    """Global shrinkage ``lambda^2`` applied to lag ``j`` (1-based)."""
    zeta = np.asarray(zeta, dtype=float)
    if not 1 <= j <= zeta.shape[0]:
        raise DomainError(f"lag {j} outside 1..{zeta.shape[0]}")
    if structure == "full":
        return float(np.prod(zeta))
    return float(np.prod(zeta[:j]))


def lag_lambda2(zeta, structure: str = "cumulative") -> np.ndarray:
    zeta = np.asarray(zeta, dtype=float)
    if structure == "full":
        return np.full(zeta.shape[0], np.prod(zeta))
    return np.cumprod(zeta)


@dataclass(frozen=True)
class NgHyper:
    theta_psi: float = 0.1
    d: float | tuple[float, ...] = 0.01
    l: float | tuple[float, ...] = 0.01
    s_shape: float = 0.01
    s_rate: float = 0.01
    cov_d: float = 0.01
    cov_l: float = 0.01
    burn: int = 5000
    keep: int = 5000
    thin: int = 1
    chains: int = 2
    seed: int = 0
    lag_structure: str = "cumulative"

    def __post_init__(self):
        if self.theta_psi <= 0:
            raise ConfigError("theta_psi must be positive")
        if self.burn < 0 or self.keep < 1 or self.thin < 1 or self.chains < 1:
            raise ConfigError("need burn >= 0, keep >= 1, thin >= 1, chains >= 1")
        if self.lag_structure not in LAG_STRUCTURES:
            raise ConfigError(f"lag_structure must be one of {LAG_STRUCTURES}")
        for name in ("s_shape", "s_rate", "cov_d", "cov_l"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for name in ("d", "l"):
            v = getattr(self, name)
            if isinstance(v, (list, tuple)):
                object.__setattr__(self, name, tuple(float(x) for x in v))
            if np.any(np.asarray(getattr(self, name)) <= 0):
                raise ConfigError(f"{name} must be positive")

    def lag_vector(self, name: str, p: int) -> np.ndarray:
        v = getattr(self, name)
        if isinstance(v, tuple):
            if len(v) != p:
                raise ConfigError(f"{name} has {len(v)} entries for {p} lags")
            return np.array(v)
        return np.full(p, float(v))

    @property
    def sweeps(self) -> int:
        return self.burn + self.keep * self.thin

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class DrawState:
    """One state of the chain.

    ``H`` is stored in full (unit diagonal); ``h_free`` gives the strictly
    lower-triangular elements in row-major order, matching ``psi_cov``.
    """

    A: np.ndarray
    H: np.ndarray
    S: np.ndarray
    psi: np.ndarray
    psi_cov: np.ndarray
    zeta: np.ndarray
    zeta_cov: float
    residuals: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.A.shape[1] // self.A.shape[0]

    @property
    def h_free(self) -> np.ndarray:
        return self.H[np.tril_indices(self.m, -1)]

    @property
    def alpha(self) -> np.ndarray:
        """vec(A), column-major."""
        return self.A.reshape(-1, order="F")

    def h_inverse(self) -> np.ndarray:
        return np.tril(linalg.solve_triangular(self.H, np.eye(self.m), lower=True, unit_diagonal=True))

    def sigma(self) -> np.ndarray:
        hinv = self.h_inverse()
        return (hinv * self.S) @ hinv.T

    def is_valid(self) -> bool:
        pos = [self.S, self.psi, self.psi_cov, self.zeta, np.atleast_1d(self.zeta_cov)]
        if not all(np.all(np.isfinite(v)) and np.all(v > 0) for v in pos):
            return False
        sig = self.sigma()
        return bool(np.all(np.isfinite(sig)) and np.all(np.linalg.eigvalsh(sig) > 0))


@dataclass
class _Cache:
    XtX: np.ndarray
    lag_cols: np.ndarray
    tril: tuple[np.ndarray, np.ndarray]


def _cache(design: VarDesign) -> _Cache:
    return _Cache(
        XtX=design.X.T @ design.X,
        lag_cols=design.lag_of_column(),
        tril=np.tril_indices(design.m, -1),
    )


def _draw_gaussian(prior_var, Q, b, rng, equation):
    """Draw from N(P^-1 b, P^-1) with P = diag(1/prior_var) + Q.

    Works in the prior-standardized basis so that tiny prior variances do
    not wreck the conditioning of the factorization.
    """
    sd = np.sqrt(prior_var)
    P = Q * np.outer(sd, sd)
    P[np.diag_indices_from(P)] += 1.0
    try:
        L = linalg.cholesky(P, lower=True)
    except linalg.LinAlgError:
        raise NumericalError(
            f"conditional precision not positive definite in equation {equation}", equation=equation
        ) from None
    mean = linalg.cho_solve((L, True), sd * b)
    w = mean + linalg.solve_triangular(L.T, rng.standard_normal(sd.shape[0]), lower=False)
    return sd * w


def initial_state(design: VarDesign, hyper: NgHyper) -> DrawState:
    """A = 0, H = I, unit local/global scales, variances from a ridge pre-fit."""
    m, p = design.m, design.p
    mp = m * p
    if design.t_eff > 0:
        XtX = design.X.T @ design.X
        ridge = max(float(np.trace(XtX)) / mp, 1e-8)
        coef = linalg.solve(XtX + ridge * np.eye(mp), design.X.T @ design.Y, assume_a="pos")
        resid = design.Y - design.X @ coef
        S = np.mean(resid**2, axis=0)
        floor = 1e-8 * np.maximum(np.var(design.Y, axis=0), 1e-12)
        S = np.maximum(S, floor)
    else:
        S = np.ones(m)
    return DrawState(
        A=np.zeros((m, mp)),
        H=np.eye(m),
        S=S,
        psi=np.ones((m, mp)),
        psi_cov=np.ones(m * (m - 1) // 2),
        zeta=np.ones(p),
        zeta_cov=1.0,
        residuals=design.Y.copy(),
    )


def gibbs_step(state: DrawState, design: VarDesign, hyper: NgHyper, rng, cache=None) -> DrawState:
    """One full sweep: coefficients, variances, local scales, global scales."""
    cache = cache or _cache(design)
    Y, X = design.Y, design.X
    m, p = design.m, design.p
    t_eff = design.t_eff
    A = state.A.copy()
    H = state.H.copy()
    S = state.S.copy()
    zeta = state.zeta.copy()
    theta = hyper.theta_psi

    # (a) autoregressive rows, each from its exact conditional given H, S and
    # the other rows: row i enters equations i..m of the triangular system
    lam2 = lag_lambda2(zeta, hyper.lag_structure)
    col_lam2 = lam2[cache.lag_cols - 1]
    prior_var = np.maximum(2.0 * state.psi / col_lam2[None, :], _TINY)
    E = Y - X @ A.T
    U = E @ H.T
    for i in range(m):
        h_col = H[i:, i]
        c = float(np.sum(h_col**2 / S[i:]))
        Z = U[:, i:] + np.outer(X @ A[i], h_col)
        rhs = X.T @ (Z @ (h_col / S[i:]))
        a_new = _draw_gaussian(prior_var[i], c * cache.XtX, rhs, rng, equation=i)
        xa = X @ a_new
        U[:, i:] = Z - np.outer(xa, h_col)
        E[:, i] = Y[:, i] - xa
        A[i] = a_new

    # (a') free elements of H: e_i = -sum_{j<i} H_ij e_j + u_i
    cov_var = np.maximum(2.0 * state.psi_cov / state.zeta_cov, _TINY)
    pos = 0
    for i in range(1, m):
        Ei = E[:, :i]
        g = _draw_gaussian(
            cov_var[pos : pos + i], Ei.T @ Ei / S[i], Ei.T @ E[:, i] / S[i], rng, equation=i
        )
        H[i, :i] = -g
        pos += i
    U = E @ H.T

    # (b) variances through their precisions
    shape = hyper.s_shape + 0.5 * t_eff
    rate = hyper.s_rate + 0.5 * np.sum(U**2, axis=0)
    precision = rng.gamma(shape, 1.0 / rate)
    if not np.all(np.isfinite(precision)):
        raise NumericalError("variance draw degenerate")
    S = 1.0 / np.clip(precision, _TINY, 1.0 / _TINY)

    # (c) local scales
    chi = np.maximum(A**2 * col_lam2[None, :] / 2.0, _TINY)
    psi = np.maximum(sample_gig(theta - 0.5, chi, 2.0 * theta, rng), _TINY)
    h_free = H[cache.tril]
    if h_free.size:
        chi_c = np.maximum(h_free**2 * state.zeta_cov / 2.0, _TINY)
        psi_cov = np.maximum(sample_gig(theta - 0.5, chi_c, 2.0 * theta, rng), _TINY)
    else:
        psi_cov = state.psi_cov.copy()

    # (d) global scales, one lag at a time
    d_vec = hyper.lag_vector("d", p)
    l_vec = hyper.lag_vector("l", p)
    energy = np.bincount(cache.lag_cols - 1, weights=np.sum(A**2 / (4.0 * psi), axis=0), minlength=p)
    per_lag = m * m
    for r in range(p):
        if hyper.lag_structure == "full":
            others = np.prod(np.delete(zeta, r))
            shp = d_vec[r] + 0.5 * per_lag * p
            rt = l_vec[r] + others * np.sum(energy)
        else:
            # lambda2_j / zeta_r for every lag j >= r
            partial = np.cumprod(np.where(np.arange(p) == r, 1.0, zeta))[r:]
            shp = d_vec[r] + 0.5 * per_lag * (p - r)
            rt = l_vec[r] + float(np.sum(partial * energy[r:]))
        zeta[r] = rng.gamma(shp, 1.0 / rt)
    zeta = np.maximum(zeta, _TINY)
    if h_free.size:
        shp = hyper.cov_d + 0.5 * h_free.size
        rt = hyper.cov_l + float(np.sum(h_free**2 / (4.0 * psi_cov)))
        zeta_cov = max(float(rng.gamma(shp, 1.0 / rt)), _TINY)
    else:
        zeta_cov = state.zeta_cov

    # (e) residuals under the new coefficients
    return DrawState(
        A=A, H=H, S=S, psi=psi, psi_cov=psi_cov, zeta=zeta, zeta_cov=zeta_cov, residuals=E
    )


# --- convergence diagnostics -------------------------------------------------


def split_rhat(x: np.ndarray) -> float:
    """Split potential scale reduction for a ``chains x draws`` array."""
    x = np.asarray(x, dtype=float)
    n = x.shape[1] // 2
    if n < 2:
        return float("nan")
    halves = np.concatenate([x[:, :n], x[:, -n:]], axis=0)
    w = np.mean(np.var(halves, axis=1, ddof=1))
    b_over_n = np.var(np.mean(halves, axis=1), ddof=1)
    if w == 0:
        return float("nan") if b_over_n > 0 else 1.0
    var_plus = (n - 1) / n * w + b_over_n
    return float(np.sqrt(var_plus / w))


def _autocov(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    size = 1 << int(np.ceil(np.log2(2 * n)))
    xc = x - x.mean(axis=-1, keepdims=True)
    f = np.fft.rfft(xc, n=size, axis=-1)
    return np.fft.irfft(f * np.conj(f), n=size, axis=-1)[..., :n] / n


def effective_sample_size(x: np.ndarray) -> float:
    """Multi-chain ESS with Geyer's initial monotone sequence."""
    x = np.asarray(x, dtype=float)
    c, n = x.shape
    if n < 4:
        return float("nan")
    acov = _autocov(x)
    chain_var = acov[:, 0] * n / (n - 1)
    mean_var = float(np.mean(chain_var))
    var_plus = mean_var * (n - 1) / n
    if c > 1:
        var_plus += float(np.var(np.mean(x, axis=1), ddof=1))
    if var_plus <= 0:
        return float("nan")
    rho = 1.0 - (mean_var - np.mean(acov, axis=0)) / var_plus
    rho[0] = 1.0
    pairs = []
    for t in range(0, n - 1, 2):
        s = rho[t] + rho[t + 1]
        if s < 0:
            break
        pairs.append(s)
    pairs = np.minimum.accumulate(np.array(pairs)) if pairs else np.array([1.0])
    tau = -1.0 + 2.0 * float(np.sum(pairs))
    return float(c * n / max(tau, 1.0 / np.log10(max(c * n, 10))))


# --- chains and the posterior sample ----------------------------------------

STORE_FIELDS = ("A", "H", "S", "psi", "psi_cov", "zeta", "zeta_cov", "chain", "sweep")


@dataclass(eq=False)
class PosteriorSample:
    """Kept draws stacked along the first axis (chain-major order)."""

    A: np.ndarray
    H: np.ndarray
    S: np.ndarray
    psi: np.ndarray
    psi_cov: np.ndarray
    zeta: np.ndarray
    zeta_cov: np.ndarray
    chain: np.ndarray
    sweep: np.ndarray
    design: VarDesign | None = None
    hyper: NgHyper | None = None
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.A.shape[0]

    def __getitem__(self, i: int) -> DrawState:
        resid = None
        if self.design is not None:
            resid = self.design.Y - self.design.X @ self.A[i].T
        return DrawState(
            A=self.A[i],
            H=self.H[i],
            S=self.S[i],
            psi=self.psi[i],
            psi_cov=self.psi_cov[i],
            zeta=self.zeta[i],
            zeta_cov=float(self.zeta_cov[i]),
            residuals=resid,
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def n_chains(self) -> int:
        return int(self.chain.max()) + 1 if len(self) else 0

    def by_chain(self, values: np.ndarray) -> np.ndarray:
        """Reshape a per-draw array to ``chains x keep x ...``."""
        return values.reshape(self.n_chains, -1, *values.shape[1:])

    def lambda2(self) -> np.ndarray:
        structure = self.hyper.lag_structure if self.hyper else "cumulative"
        return np.array([lag_lambda2(z, structure) for z in self.zeta])

    def save(self, directory: str | Path, run_id: str = "") -> list[Path]:
        """One ``.npy`` per field plus an index; byte-stable for equal draws."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for name in STORE_FIELDS:
            path = directory / f"{name}.npy"
            np.save(path, np.ascontiguousarray(getattr(self, name)))
            paths.append(path)
        index = {
            "run_id": run_id,
            "key": ["run_id", "chain", "sweep"],
            "fields": list(STORE_FIELDS),
            "draws": len(self),
            "chains": self.n_chains,
            "ids": list(self.design.ids) if self.design else [],
            "hyper": self.hyper.to_dict() if self.hyper else None,
        }
        path = directory / "index.json"
        path.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
        paths.append(path)
        return paths

    @classmethod
    def load(cls, directory: str | Path, design: VarDesign | None = None) -> PosteriorSample:
        directory = Path(directory)
        arrays = {name: np.load(directory / f"{name}.npy") for name in STORE_FIELDS}
        index = json.loads((directory / "index.json").read_text())
        hyper = NgHyper(**index["hyper"]) if index.get("hyper") else None
        return cls(**arrays, design=design, hyper=hyper)


def _run_chain(design, hyper, seed_seq, chain, cache):
    rng = np.random.default_rng(seed_seq)
    state = initial_state(design, hyper)
    kept = []
    sweeps = []
    for sweep in range(hyper.sweeps):
        try:
            state = gibbs_step(state, design, hyper, rng, cache)
        except NumericalError as exc:
            raise NumericalError(
                f"chain {chain}, sweep {sweep}: {exc}", equation=exc.equation, sweep=sweep
            ) from exc
        if sweep >= hyper.burn and (sweep - hyper.burn + 1) % hyper.thin == 0:
            kept.append(state)
            sweeps.append(sweep)
    return kept, sweeps


def compute_diagnostics(sample: PosteriorSample) -> dict:
    """Split-R-hat and ESS for the variances, global scales and coefficients."""
    out = {}

    def per_param(values, name):
        chains = sample.by_chain(values.reshape(len(sample), -1))
        rh = [split_rhat(chains[:, :, j]) for j in range(chains.shape[2])]
        es = [effective_sample_size(chains[:, :, j]) for j in range(chains.shape[2])]
        out[name] = {"rhat": rh, "ess": es}

    per_param(sample.S, "S")
    per_param(np.log(sample.zeta), "log_zeta")
    per_param(sample.A.transpose(0, 2, 1), "alpha")
    return out


def run_mcmc(design: VarDesign, hyper: NgHyper, threads: int = 1, diagnostics: bool = True) -> PosteriorSample:
    """Run ``hyper.chains`` independent chains and stack the kept draws.

    Chain ``c`` draws from the ``c``-th child of ``SeedSequence(hyper.seed)``,
    so results do not depend on ``threads``.
    """
    cache = _cache(design)
    seeds = np.random.SeedSequence(int(hyper.seed)).spawn(hyper.chains)
    started = time.perf_counter()
    jobs = [(design, hyper, seeds[c], c, cache) for c in range(hyper.chains)]
    if threads > 1 and hyper.chains > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda job: _run_chain(*job), jobs))
    else:
        results = [_run_chain(*job) for job in jobs]
    log.info("sampled %d chains x %d sweeps in %.1fs", hyper.chains, hyper.sweeps,
             time.perf_counter() - started)

    states = [s for kept, _ in results for s in kept]
    chain_idx = np.concatenate([np.full(len(kept), c) for c, (kept, _) in enumerate(results)])
    sweep_idx = np.concatenate([np.asarray(sw) for _, sw in results])
    sample = PosteriorSample(
        A=np.stack([s.A for s in states]),
        H=np.stack([s.H for s in states]),
        S=np.stack([s.S for s in states]),
        psi=np.stack([s.psi for s in states]),
        psi_cov=np.stack([s.psi_cov for s in states]),
        zeta=np.stack([s.zeta for s in states]),
        zeta_cov=np.array([s.zeta_cov for s in states]),
        chain=chain_idx.astype(np.int64),
        sweep=sweep_idx.astype(np.int64),
        design=design,
        hyper=hyper,
    )
    if diagnostics:
        sample.diagnostics = compute_diagnostics(sample)
    return sample


def with_seed(hyper: NgHyper, seed: int) -> NgHyper:
    return replace(hyper, seed=int(seed))
