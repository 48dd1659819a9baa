"""Plug-in counterfactual densities and multiplicative effect decompositions.

Counterfactual densities average a group's fitted conditional densities over
another group's empirical covariate distribution.  Effects are pointwise
ratios of counterfactual densities; cells whose denominator falls below a
validity floor are masked invalid rather than clipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .density_regression import FittedDensityModel, predict_density, predict_partial, sample_theta
from .errors import ConfigError, StructuralError
from .measure_grid import GridDensity, GridSpec, density_from_clr_values, integrate, tv_distance

#: denominator density values below this are masked invalid in ratios
VALIDITY_FLOOR = 1e-12

#: pair-enumeration budget before falling back to Monte Carlo subsampling
MAX_EXACT_PAIRS = 10_000_000
MC_PAIRS = 1_000_000


@dataclass(frozen=True)
class CovariateSample:
    """Weighted covariate vectors from one group (empirical distribution)."""

    covariates: dict[str, np.ndarray]
    weights: np.ndarray

    def __post_init__(self):
        covs = {k: np.asarray(v) for k, v in self.covariates.items()}
        object.__setattr__(self, "covariates", covs)
        weights = np.asarray(self.weights, dtype=float)
        if np.any(weights <= 0):
            raise StructuralError("sample weights must be positive")
        object.__setattr__(self, "weights", weights / weights.sum())
        n = len(weights)
        for name, v in covs.items():
            if len(v) != n:
                raise StructuralError(f"covariate '{name}' length mismatch")

    @classmethod
    def from_table(cls, table) -> "CovariateSample":
        return cls(covariates=dict(table.covariates), weights=table.weights.copy())

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(sorted(self.covariates))

    def row(self, i: int) -> dict:
        return {k: v[i] for k, v in self.covariates.items()}

    def unique_rows(self, names=None) -> tuple[list[dict], np.ndarray]:
        """Distinct covariate combinations (over ``names``) with pooled weights."""
        names = self.names if names is None else tuple(names)
        seen: dict[tuple, int] = {}
        combos: list[dict] = []
        wts: list[float] = []
        for i in range(len(self)):
            key = tuple((n, self.covariates[n][i]) for n in names)
            if key not in seen:
                seen[key] = len(combos)
                combos.append(dict(key))
                wts.append(0.0)
            wts[seen[key]] += self.weights[i]
        return combos, np.asarray(wts)


@dataclass(frozen=True)
class RatioFunction:
    """Pointwise ratio of two densities with a validity mask."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        valid = np.asarray(self.valid, dtype=bool)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)
        if values.shape != (self.grid.n_cells,) or valid.shape != (self.grid.n_cells,):
            raise StructuralError("ratio values/mask do not match grid")
        if np.any(values[valid] <= 0):
            raise StructuralError("ratio must be strictly positive on valid cells")


@dataclass(frozen=True)
class EffectBands:
    """Point estimate plus per-draw ratio curves for uncertainty display."""

    point: RatioFunction
    draws: tuple[RatioFunction, ...]

    def __post_init__(self):
        for d in self.draws:
            if not d.grid.same_as(self.point.grid):
                raise StructuralError("band draw on a different grid")


def _ratio(numerator: GridDensity, denominator: GridDensity) -> RatioFunction:
    if not numerator.grid.same_as(denominator.grid):
        raise StructuralError("ratio of densities on different grids")
    valid = denominator.values >= VALIDITY_FLOOR
    values = np.zeros(numerator.grid.n_cells)
    values[valid] = numerator.values[valid] / denominator.values[valid]
    valid = valid & (values > 0)
    values[~valid] = np.nan
    return RatioFunction(grid=numerator.grid, values=values, valid=valid)


def counterfactual_density(
    model_k: FittedDensityModel,
    sample_l: CovariateSample,
    theta: np.ndarray | None = None,
) -> GridDensity:
    """Average the fitted conditional density over an empirical covariate sample."""
    model_names = {
        cb.spec.covariate_name for cb in model_k.covariate_bases if cb.spec.kind != "intercept"
    }
    if not model_names <= set(sample_l.names):
        raise StructuralError(
            f"sample lacks covariates {sorted(model_names - set(sample_l.names))}"
        )
    combos, wts = sample_l.unique_rows(sorted(model_names))
    values = np.zeros(model_k.grid.n_cells)
    for combo, w in zip(combos, wts):
        values += w * predict_density(model_k, combo, theta=theta).values
    return GridDensity(model_k.grid, values)


def distribution_effect(f11: GridDensity, f01: GridDensity) -> RatioFunction:
    """Effect of changing the conditional density at the treated covariates."""
    return _ratio(f11, f01)


def covariate_effect(f01: GridDensity, f00: GridDensity) -> RatioFunction:
    """Effect of changing the covariate distribution under the control model."""
    return _ratio(f01, f00)


def total_effect(f11: GridDensity, f00: GridDensity) -> RatioFunction:
    """Ratio of the two observed-group marginal densities."""
    return _ratio(f11, f00)


def _product_measure_average(
    model: FittedDensityModel,
    sample_rest: CovariateSample,
    sample_j: CovariateSample,
    j_name: str,
    seed: int = 0,
    theta: np.ndarray | None = None,
) -> GridDensity:
    """Average predicted densities over F(x_{-j}) x F(x_j).

    Full enumeration of unique-combination pairs when affordable, otherwise a
    seeded Monte Carlo subsample of pairs.
    """
    model_names = sorted(
        cb.spec.covariate_name for cb in model.covariate_bases if cb.spec.kind != "intercept"
    )
    rest_names = [n for n in model_names if n != j_name]
    rest_combos, rest_w = sample_rest.unique_rows(rest_names)
    j_combos, j_w = sample_j.unique_rows([j_name])
    if len(rest_combos) * len(j_combos) <= MAX_EXACT_PAIRS:
        values = np.zeros(model.grid.n_cells)
        for rc, rw in zip(rest_combos, rest_w):
            for jc, jw in zip(j_combos, j_w):
                x = {**rc, **jc}
                values += rw * jw * predict_density(model, x, theta=theta).values
        return GridDensity(model.grid, values)
    rng = np.random.default_rng(seed)
    ri = rng.choice(len(rest_combos), size=MC_PAIRS, p=rest_w)
    ji = rng.choice(len(j_combos), size=MC_PAIRS, p=j_w)
    values = np.zeros(model.grid.n_cells)
    pair_keys, pair_counts = np.unique(np.stack([ri, ji]), axis=1, return_counts=True)
    for (a, b), c in zip(pair_keys.T, pair_counts):
        x = {**rest_combos[a], **j_combos[b]}
        values += (c / MC_PAIRS) * predict_density(model, x, theta=theta).values
    return GridDensity(model.grid, values)


def _check_covariate(model: FittedDensityModel, j_name: str) -> int:
    for idx, cb in enumerate(model.covariate_bases):
        if cb.spec.covariate_name == j_name:
            return idx
    raise ConfigError(f"model has no covariate '{j_name}'")


def marginal_effect_ce_j(
    model_0: FittedDensityModel,
    sample_0: CovariateSample,
    sample_1: CovariateSample,
    j_name: str,
    seed: int = 0,
    theta_0: np.ndarray | None = None,
) -> RatioFunction:
    """Contribution of covariate j to the covariate effect.

    Numerator integrates the control model over control x_{-j} and treated
    x_j (product measure); denominator is the control counterfactual density.
    """
    _check_covariate(model_0, j_name)
    if j_name not in sample_1.names or j_name not in sample_0.names:
        raise ConfigError(f"covariate '{j_name}' missing from a sample")
    num = _product_measure_average(model_0, sample_0, sample_1, j_name, seed=seed, theta=theta_0)
    den = counterfactual_density(model_0, sample_0, theta=theta_0)
    return _ratio(num, den)


def marginal_effect_de_j(
    model_1: FittedDensityModel,
    model_0: FittedDensityModel,
    sample_1: CovariateSample,
    sample_0: CovariateSample,
    j_name: str,
    seed: int = 0,
    theta_1: np.ndarray | None = None,
    theta_0: np.ndarray | None = None,
) -> RatioFunction:
    """Contribution of covariate j to the distribution effect.

    Numerator integrates the treated model over treated x_{-j} and control
    x_j; denominator is the control counterfactual density.
    """
    _check_covariate(model_1, j_name)
    _check_covariate(model_0, j_name)
    num = _product_measure_average(model_1, sample_1, sample_0, j_name, seed=seed, theta=theta_1)
    den = counterfactual_density(model_0, sample_0, theta=theta_0)
    return _ratio(num, den)


def marginal_effect_ce_j_fast(
    model_0: FittedDensityModel,
    sample_0: CovariateSample,
    sample_1: CovariateSample,
    j_name: str,
) -> RatioFunction:
    """Interaction-free shortcut: intercept-plus-partial-effect composite.

    Averages clr_inverse(intercept + partial effect of j) over each group's
    marginal of x_j.  The product-measure path is the definitional reference;
    this one drops the other covariates entirely.
    """
    j_idx = _check_covariate(model_0, j_name)
    intercept_idx = next(
        i for i, cb in enumerate(model_0.covariate_bases) if cb.spec.kind == "intercept"
    )
    intercept_clr = predict_partial(model_0, intercept_idx, None).values

    def averaged(sample: CovariateSample) -> GridDensity:
        combos, wts = sample.unique_rows([j_name])
        values = np.zeros(model_0.grid.n_cells)
        for combo, w in zip(combos, wts):
            partial = predict_partial(model_0, j_idx, combo[j_name]).values
            values += w * density_from_clr_values(model_0.grid, intercept_clr + partial).values
        return GridDensity(model_0.grid, values)

    return _ratio(averaged(sample_1), averaged(sample_0))


EFFECT_KINDS = ("de", "ce", "te", "ce_j", "de_j")


def _effect_point(models, samples, kind, j_name, seed, thetas=(None, None)) -> RatioFunction:
    model_1, model_0 = models
    sample_1, sample_0 = samples
    theta_1, theta_0 = thetas
    if kind == "de":
        f11 = counterfactual_density(model_1, sample_1, theta=theta_1)
        f01 = counterfactual_density(model_0, sample_1, theta=theta_0)
        return distribution_effect(f11, f01)
    if kind == "ce":
        f01 = counterfactual_density(model_0, sample_1, theta=theta_0)
        f00 = counterfactual_density(model_0, sample_0, theta=theta_0)
        return covariate_effect(f01, f00)
    if kind == "te":
        f11 = counterfactual_density(model_1, sample_1, theta=theta_1)
        f00 = counterfactual_density(model_0, sample_0, theta=theta_0)
        return total_effect(f11, f00)
    if kind == "ce_j":
        return marginal_effect_ce_j(model_0, sample_0, sample_1, j_name, seed=seed, theta_0=theta_0)
    if kind == "de_j":
        return marginal_effect_de_j(
            model_1, model_0, sample_1, sample_0, j_name,
            seed=seed, theta_1=theta_1, theta_0=theta_0,
        )
    raise ConfigError(f"unknown effect kind '{kind}'")


def effect_bands(
    models: tuple[FittedDensityModel, FittedDensityModel],
    samples: tuple[CovariateSample, CovariateSample],
    kind: str,
    alpha: float,
    B: int,
    seed: int,
    j_name: str | None = None,
) -> EffectBands:
    """Point estimate plus B ratio curves from Wald-region coefficient draws.

    Coefficients are redrawn independently per group (derived seeds), the
    counterfactual densities rebuilt, and the ratio recomputed per draw.
    """
    if kind not in EFFECT_KINDS:
        raise ConfigError(f"unknown effect kind '{kind}'")
    if kind in ("ce_j", "de_j") and j_name is None:
        raise ConfigError("marginal effects need a covariate name")
    model_1, model_0 = models
    point = _effect_point(models, samples, kind, j_name, seed)
    draws_1 = sample_theta(model_1, alpha, B, seed=seed * 2 + 1) if B else []
    draws_0 = sample_theta(model_0, alpha, B, seed=seed * 2 + 2) if B else []
    band_draws = []
    for b in range(B):
        band_draws.append(
            _effect_point(
                models, samples, kind, j_name, seed,
                thetas=(draws_1[b], draws_0[b]),
            )
        )
    return EffectBands(point=point, draws=tuple(band_draws))


def scalar_density_effect(f1: GridDensity, f0: GridDensity, metric: str = "tv") -> float:
    """Scalar discrepancy between two densities (total variation)."""
    if metric != "tv":
        raise ConfigError(f"unsupported metric '{metric}'")
    return tv_distance(f1, f0)


def mean_functional(f: GridDensity) -> float:
    """Mean of the outcome under the density; atoms contribute location * mass."""
    return integrate(f.grid.centers * f.values, f.grid)
