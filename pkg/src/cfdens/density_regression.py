"""Additive density regression fitted through the multinomial/Poisson trick.

Observations are binned on the outcome grid and pooled by unique covariate
combination.  The Poisson model with a free intercept per combination and a
log bin-width offset is maximized with the nuisance intercepts profiled out,
which reduces to Newton scoring on the multinomial log-likelihood.  Weighted
(non-integer) counts are handled as a quasi-likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import (
    CovariateBasis,
    OutcomeBasis,
    covariate_row,
    design_row,
    design_row_at,
)
from .errors import ConvergenceError, DataError, DomainError, NumericError
from .measure_grid import ClrFunction, GridDensity, GridSpec, density_from_clr_values

MAX_ITER = 100
DEVIANCE_RTOL = 1e-8

#: always-on ridge that caps boundary drift when some covariate subgroup has
#: an empty span of outcome cells (the unpenalized MLE is then at infinity);
#: small enough to leave identified coefficients unchanged at ~1e-8
STABILIZING_RIDGE = 1e-6


@dataclass(frozen=True)
class ObservationTable:
    """Rows (outcome, covariates, weight) for one treatment group."""

    outcomes: np.ndarray
    covariates: dict[str, np.ndarray]
    weights: np.ndarray
    group: str = ""

    def __post_init__(self):
        outcomes = np.asarray(self.outcomes, dtype=float)
        object.__setattr__(self, "outcomes", outcomes)
        n = len(outcomes)
        covs = {k: np.asarray(v) for k, v in self.covariates.items()}
        object.__setattr__(self, "covariates", covs)
        for name, v in covs.items():
            if len(v) != n:
                raise DataError(f"covariate '{name}' has {len(v)} rows, expected {n}")
        if self.weights is None:
            weights = np.ones(n)
        else:
            weights = np.asarray(self.weights, dtype=float)
        if len(weights) != n:
            raise DataError("weights length does not match outcomes")
        if np.any(weights <= 0):
            raise DataError("weights must be positive")
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return len(self.outcomes)

    def row_covariates(self, i: int) -> dict:
        return {k: v[i] for k, v in self.covariates.items()}


@dataclass(frozen=True)
class PooledHistogram:
    """Weighted histogram counts per unique covariate combination."""

    grid: GridSpec
    combinations: tuple[dict, ...]
    counts: np.ndarray  # (I, n_cells)
    totals: np.ndarray  # (I,) row-weight sums

    @property
    def n_combinations(self) -> int:
        return len(self.combinations)


def bin_and_pool(data: ObservationTable, grid: GridSpec) -> PooledHistogram:
    """Bin outcomes on the grid and pool rows sharing a covariate combination."""
    names = sorted(data.covariates)
    key_to_idx: dict[tuple, int] = {}
    combos: list[dict] = []
    rows: list[np.ndarray] = []
    for i in range(len(data)):
        key = tuple((n, data.covariates[n][i]) for n in names)
        if key not in key_to_idx:
            key_to_idx[key] = len(combos)
            combos.append(dict(key))
            rows.append(np.zeros(grid.n_cells))
        try:
            g = grid.cell_index(float(data.outcomes[i]))
        except DomainError as exc:
            raise DataError(f"row {i}: {exc}") from exc
        rows[key_to_idx[key]][g] += data.weights[i]
    # canonical combination order so the fit is invariant to row permutations
    order = sorted(range(len(combos)), key=lambda i: str(sorted(combos[i].items())))
    counts = np.vstack([rows[i] for i in order])
    return PooledHistogram(
        grid=grid,
        combinations=tuple(combos[i] for i in order),
        counts=counts,
        totals=counts.sum(axis=1),
    )


@dataclass(frozen=True)
class FittedDensityModel:
    """Estimated coefficients with bases and profiled Fisher information."""

    theta: np.ndarray
    nuisance_intercepts: np.ndarray
    outcome_basis: OutcomeBasis
    covariate_bases: tuple[CovariateBasis, ...]
    grid: GridSpec
    fisher_information: np.ndarray = field(repr=False)
    deviance_trace: tuple[float, ...] = ()
    converged: bool = True
    iterations: int = 0

    @property
    def n_coefficients(self) -> int:
        return len(self.theta)


def _design_blocks(pooled, covariate_bases, outcome_basis) -> np.ndarray:
    """Stack of (n_cells, R) design blocks, one per covariate combination."""
    return np.stack(
        [design_row(list(covariate_bases), outcome_basis, c) for c in pooled.combinations]
    )


def class_probabilities(
    theta: np.ndarray,
    design_block: np.ndarray,
    grid: GridSpec,
) -> np.ndarray:
    """Cell probabilities for one combination: width-weighted softmax."""
    eta = design_block @ theta
    eta = eta - np.max(eta)
    unnorm = grid.widths * np.exp(eta)
    return unnorm / np.sum(unnorm)


def _all_probabilities(theta, blocks, grid) -> np.ndarray:
    eta = blocks @ theta  # (I, n_cells)
    eta = eta - eta.max(axis=1, keepdims=True)
    unnorm = grid.widths[None, :] * np.exp(eta)
    return unnorm / unnorm.sum(axis=1, keepdims=True)


def multinomial_loglik(
    theta: np.ndarray,
    pooled: PooledHistogram,
    covariate_bases,
    outcome_basis: OutcomeBasis,
    blocks: np.ndarray | None = None,
) -> float:
    """Grid-based (multinomial) log-likelihood, dropping the bin-width constants."""
    if blocks is None:
        blocks = _design_blocks(pooled, covariate_bases, outcome_basis)
    eta = blocks @ theta
    lognorm = _log_quadrature_norm(eta, pooled.grid.widths)
    return float(np.sum(pooled.counts * eta) - np.dot(pooled.totals, lognorm))


def _log_quadrature_norm(eta: np.ndarray, widths: np.ndarray) -> np.ndarray:
    m = eta.max(axis=-1, keepdims=True)
    return (m + np.log(np.sum(widths * np.exp(eta - m), axis=-1, keepdims=True)))[..., 0]


def bayes_loglik(
    theta: np.ndarray,
    data: ObservationTable,
    covariate_bases,
    outcome_basis: OutcomeBasis,
    quadrature_points: int = 10_000,
) -> float:
    """Bayes space log-likelihood with exact outcome evaluation.

    The normalizing integral uses a fine midpoint quadrature independent of
    the fitting grid; used for diagnostics, not for fitting.
    """
    grid = outcome_basis.grid
    if outcome_basis.interval is not None:
        a, b = outcome_basis.interval
        fine = np.linspace(a, b, 2 * quadrature_points + 1)[1::2]
        w_fine = np.full(quadrature_points, (b - a) / quadrature_points)
        fine_basis = np.vstack([outcome_basis.evaluate_at(float(y)) for y in fine])
    else:
        fine_basis = np.empty((0, outcome_basis.n_columns))
        w_fine = np.empty(0)
    atom_basis = np.vstack(
        [outcome_basis.evaluate_at(loc) for loc in grid.atom_locations]
    ) if grid.n_atoms else np.empty((0, outcome_basis.n_columns))
    atom_widths = grid.widths[grid.n_continuous:]
    eval_basis = np.vstack([fine_basis, atom_basis])
    eval_widths = np.concatenate([w_fine, atom_widths])

    total = 0.0
    cov_bases = list(covariate_bases)
    for i in range(len(data)):
        x = data.row_covariates(i)
        bx = covariate_row(cov_bases, x)
        zy = design_row_at(cov_bases, outcome_basis, x, float(data.outcomes[i]))
        eta_y = float(zy @ theta)
        eta_all = np.kron(bx[None, :], eval_basis) @ theta
        m = float(np.max(eta_all))
        lognorm = m + np.log(np.sum(eval_widths * np.exp(eta_all - m)))
        total += data.weights[i] * (eta_y - lognorm)
    return total


def _newton(theta0, lam, pooled, blocks, covariate_bases, outcome_basis, max_iter,
            divergence_cap=1e5, raise_on_divergence=True):
    """Newton scoring on the (optionally ridged) multinomial deviance.

    Returns (theta, trace, converged); step halving keeps the deviance
    nonincreasing.
    """
    grid = pooled.grid
    R = blocks.shape[2]

    def penalized_deviance(th):
        ll = multinomial_loglik(th, pooled, covariate_bases, outcome_basis, blocks)
        return -2.0 * (ll - lam * float(th @ th))

    theta = np.asarray(theta0, dtype=float).copy()
    dev = penalized_deviance(theta)
    trace = [dev]
    for _ in range(max_iter):
        probs = _all_probabilities(theta, blocks, grid)
        resid = pooled.counts - pooled.totals[:, None] * probs
        score = np.einsum("igr,ig->r", blocks, resid) - 2.0 * lam * theta
        zp = np.einsum("igr,ig->ir", blocks, probs)
        info = (
            np.einsum("i,igr,ig,igs->rs", pooled.totals, blocks, probs, blocks)
            - np.einsum("i,ir,is->rs", pooled.totals, zp, zp)
        )
        info_pen = info + 2.0 * lam * np.eye(R)
        try:
            step = np.linalg.solve(info_pen, score)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"singular information matrix: {exc}") from exc
        scale = 1.0
        for _ in range(40):
            cand = theta + scale * step
            cand_dev = penalized_deviance(cand)
            if cand_dev <= dev + 1e-13 * (abs(dev) + 1.0):
                break
            scale *= 0.5
        else:
            cand, cand_dev = theta, dev
        rel_change = abs(dev - cand_dev) / (abs(dev) + 0.1)
        theta, dev = cand, cand_dev
        trace.append(dev)
        if np.max(np.abs(theta)) > divergence_cap:
            if raise_on_divergence:
                raise NumericError(
                    "coefficients diverging (likely separation); refit with penalty > 0"
                )
            return theta, trace, False
        if rel_change < DEVIANCE_RTOL:
            return theta, trace, True
    return theta, trace, False


#: an unpenalized polish fit is only accepted when its coefficients stay
#: this small; boundary-divergent directions blow past it
POLISH_THETA_CAP = 50.0


def fit(
    pooled: PooledHistogram,
    covariate_bases,
    outcome_basis: OutcomeBasis,
    penalty: float = 0.0,
) -> FittedDensityModel:
    """Maximize the profiled Poisson (= multinomial) likelihood by Newton scoring.

    Optional ridge penalty ``penalty * ||theta||^2`` on the model coefficients;
    the per-combination nuisance intercepts are never penalized.

    The fit runs in two stages: Newton scoring with a small stabilizing ridge
    added to the requested penalty, then a polish stage at the requested
    penalty alone.  The polish is kept only when it converges cleanly with
    bounded coefficients, so identified instances get the exact maximizer
    while boundary-divergent ones (a covariate subgroup with an empty span of
    outcome cells) retain the stabilized estimate.
    """
    if penalty < 0:
        raise DomainError("penalty must be nonnegative")
    if not np.any(pooled.counts > 0):
        raise DataError("no positive counts to fit")
    grid = pooled.grid
    blocks = _design_blocks(pooled, covariate_bases, outcome_basis)
    R = blocks.shape[2]

    lam = penalty + STABILIZING_RIDGE
    theta, trace, converged = _newton(
        np.zeros(R), lam, pooled, blocks, covariate_bases, outcome_basis, MAX_ITER
    )
    if not converged:
        raise ConvergenceError(
            f"no convergence after {MAX_ITER} iterations", trace=trace
        )
    try:
        p_theta, p_trace, p_converged = _newton(
            theta, penalty, pooled, blocks, covariate_bases, outcome_basis, 30,
            divergence_cap=POLISH_THETA_CAP, raise_on_divergence=False,
        )
    except NumericError:
        # singular unpenalized information: keep the stabilized estimate
        p_converged = False
    if p_converged and np.max(np.abs(p_theta)) <= POLISH_THETA_CAP:
        theta = p_theta
        trace = trace + p_trace[1:]
        lam = penalty
    it = len(trace) - 1

    probs = _all_probabilities(theta, blocks, grid)
    zp = np.einsum("igr,ig->ir", blocks, probs)
    fisher = (
        np.einsum("i,igr,ig,igs->rs", pooled.totals, blocks, probs, blocks)
        - np.einsum("i,ir,is->rs", pooled.totals, zp, zp)
        + 2.0 * lam * np.eye(R)  # observed information of the penalized objective
    )
    fisher = 0.5 * (fisher + fisher.T)
    eta = blocks @ theta
    lognorm = _log_quadrature_norm(eta, grid.widths)
    with np.errstate(divide="ignore"):
        alphas = np.where(pooled.totals > 0, np.log(pooled.totals), -np.inf) - lognorm
    return FittedDensityModel(
        theta=theta,
        nuisance_intercepts=alphas,
        outcome_basis=outcome_basis,
        covariate_bases=tuple(covariate_bases),
        grid=grid,
        fisher_information=fisher,
        deviance_trace=tuple(trace),
        converged=converged,
        iterations=it,
    )


def fit_table(
    data: ObservationTable,
    covariate_bases,
    outcome_basis: OutcomeBasis,
    penalty: float = 0.0,
) -> FittedDensityModel:
    """Convenience: bin, pool, and fit in one call."""
    pooled = bin_and_pool(data, outcome_basis.grid)
    return fit(pooled, covariate_bases, outcome_basis, penalty=penalty)


def predict_density(
    model: FittedDensityModel,
    x: dict,
    theta: np.ndarray | None = None,
) -> GridDensity:
    """Conditional density at covariates ``x`` (optionally with other coefficients)."""
    th = model.theta if theta is None else theta
    eta = design_row(list(model.covariate_bases), model.outcome_basis, x) @ th
    return density_from_clr_values(model.grid, eta)


def predict_partial(model: FittedDensityModel, j: int, x_j) -> ClrFunction:
    """clr contribution of effect ``j`` alone at covariate value ``x_j``."""
    bases = model.covariate_bases
    if not 0 <= j < len(bases):
        raise DataError(f"effect index {j} out of range")
    d_T = model.outcome_basis.n_columns
    offset = sum(b.n_columns for b in bases[:j]) * d_T
    cb = bases[j]
    bx = cb.evaluate(x_j) if cb.spec.kind != "intercept" else cb.evaluate(None)
    block_theta = model.theta[offset: offset + cb.n_columns * d_T]
    values = np.kron(bx[None, :], model.outcome_basis.matrix) @ block_theta
    return ClrFunction(model.grid, values)


def sample_theta(
    model: FittedDensityModel,
    alpha: float,
    B: int,
    seed: int,
) -> list[np.ndarray]:
    """Draw coefficients from the Gaussian truncated to the Wald ellipsoid.

    Rejection sampling from N(theta_hat, I^{-1}) restricted to
    {theta : (theta - theta_hat)' I (theta - theta_hat) <= chi2_{R,1-alpha}}.
    Deterministic given the seed.
    """
    from scipy.stats import chi2

    if not 0 < alpha < 1:
        raise DomainError(f"alpha must be in (0,1), got {alpha}")
    if B == 0:
        return []
    R = model.n_coefficients
    info = model.fisher_information + 1e-10 * np.eye(R)
    eigvals = np.linalg.eigvalsh(info)
    if eigvals[0] <= 0:
        raise NumericError(
            f"Fisher information not positive definite (min eigenvalue {eigvals[0]})"
        )
    # z ~ N(0, I_R); theta = theta_hat + L^{-T} z has the target covariance and
    # Mahalanobis norm ||z||^2, so the ellipsoid test reduces to a chi2 bound.
    L = np.linalg.cholesky(info)
    bound = chi2.ppf(1.0 - alpha, df=R)
    if 1.0 - alpha < 1e-6:
        # degenerate region: the ellipsoid shrinks to the point estimate
        return [model.theta.copy() for _ in range(B)]
    rng = np.random.default_rng(seed)
    draws: list[np.ndarray] = []
    while len(draws) < B:
        z = rng.standard_normal(R)
        if float(z @ z) <= bound:
            draws.append(model.theta + np.linalg.solve(L.T, z))
    return draws


def wald_ellipsoid_radius(model: FittedDensityModel, alpha: float) -> float:
    from scipy.stats import chi2

    return float(chi2.ppf(1.0 - alpha, df=model.n_coefficients))
