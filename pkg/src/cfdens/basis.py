"""Outcome and covariate bases for the additive density regression model.

The outcome basis spans a subspace of the zero-integral clr space: B-spline
columns over the continuous part and one indicator column per atom, each
centered to zero measure-integral, with one linearly dependent column dropped
(the raw columns form a partition of unity).  Covariate bases produce the
per-observation coefficient vectors that multiply the outcome basis in the
tensor-product design.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline
from scipy.linalg import null_space

from .errors import ConfigError, DataError, NumericError
from .measure_grid import GridSpec, ReferenceMeasure, integrate


@dataclass(frozen=True)
class PartialEffectSpec:
    """One additive term: intercept, categorical dummies, or a smooth."""

    kind: str  # "intercept" | "categorical" | "smooth"
    covariate_name: str = ""
    levels: tuple[str, ...] = ()
    reference_level: str = ""
    knot_count: int = 0
    degree: int = 3

    def __post_init__(self):
        if self.kind == "categorical":
            if len(self.levels) < 2:
                raise ConfigError(f"categorical '{self.covariate_name}' needs >= 2 levels")
            if self.reference_level not in self.levels:
                raise ConfigError(
                    f"reference level '{self.reference_level}' not among levels"
                )
        elif self.kind == "smooth":
            if self.degree < 1:
                raise ConfigError("smooth degree must be >= 1")
            if self.knot_count < self.degree + 1:
                raise ConfigError("smooth needs knot_count >= degree + 1")
        elif self.kind != "intercept":
            raise ConfigError(f"unknown effect kind '{self.kind}'")

    @classmethod
    def intercept(cls) -> "PartialEffectSpec":
        return cls(kind="intercept", covariate_name="(intercept)")

    @classmethod
    def categorical(cls, name, levels, reference) -> "PartialEffectSpec":
        return cls(
            kind="categorical",
            covariate_name=name,
            levels=tuple(str(l) for l in levels),
            reference_level=str(reference),
        )

    @classmethod
    def smooth(cls, name, knot_count, degree=3) -> "PartialEffectSpec":
        return cls(kind="smooth", covariate_name=name, knot_count=knot_count, degree=degree)


def _bspline_design(x: np.ndarray, lo: float, hi: float, count: int, degree: int) -> np.ndarray:
    """Design matrix of ``count`` B-splines with equally spaced knots on [lo, hi]."""
    n_interior = count - degree - 1
    if n_interior < 0:
        raise ConfigError(f"need count > degree, got count={count}, degree={degree}")
    interior = np.linspace(lo, hi, n_interior + 2)[1:-1]
    knots = np.concatenate([[lo] * (degree + 1), interior, [hi] * (degree + 1)])
    x = np.clip(np.asarray(x, dtype=float), lo, hi)
    return BSpline.design_matrix(x, knots, degree).toarray()


@dataclass(frozen=True)
class OutcomeBasis:
    """Centered basis over the outcome grid, evaluable at arbitrary points.

    ``matrix`` holds the kept columns at the grid cells (n_cells x d_T).
    ``centering`` holds the measure-means subtracted from the raw columns so
    the basis can be evaluated off-grid consistently.
    """

    grid: GridSpec
    matrix: np.ndarray = field(repr=False)
    centering: np.ndarray = field(repr=False)
    spline_count: int
    degree: int
    interval: tuple[float, float] | None
    kept: tuple[int, ...]

    @property
    def n_columns(self) -> int:
        return self.matrix.shape[1]

    def _raw_at(self, y: float) -> np.ndarray:
        """Uncentered columns (all, before dropping) at a single point."""
        n_raw = self.spline_count * (self.interval is not None) + self.grid.n_atoms
        row = np.zeros(n_raw)
        for d, loc in enumerate(self.grid.atom_locations):
            if y == loc:
                offset = self.spline_count if self.interval is not None else 0
                row[offset + d] = 1.0
                return row
        if self.interval is None:
            raise DataError(f"outcome {y} matches no atom")
        lo, hi = self.interval
        row[: self.spline_count] = _bspline_design(
            np.array([y]), lo, hi, self.spline_count, self.degree
        )[0]
        return row

    def evaluate_at(self, y: float) -> np.ndarray:
        """Centered kept columns at an arbitrary outcome value."""
        raw = self._raw_at(y) - self.centering
        return raw[list(self.kept)]


def build_outcome_basis(
    measure: ReferenceMeasure,
    grid: GridSpec,
    spline_count: int,
    degree: int = 3,
) -> OutcomeBasis:
    """Build the clr-constrained outcome basis on a grid.

    B-spline columns are evaluated at bin centers and atoms contribute
    indicator columns; each column is centered to zero measure-integral and
    the last column is dropped to remove the single partition-of-unity
    dependency.
    """
    has_cont = measure.continuous_interval is not None
    if has_cont and spline_count <= degree:
        raise ConfigError(f"spline_count must exceed degree, got {spline_count} <= {degree}")
    cols = []
    if has_cont:
        a, b = measure.continuous_interval
        spl = np.zeros((grid.n_cells, spline_count))
        spl[: grid.n_continuous] = _bspline_design(
            grid.centers[: grid.n_continuous], a, b, spline_count, degree
        )
        cols.append(spl)
    if grid.n_atoms:
        ind = np.zeros((grid.n_cells, grid.n_atoms))
        for d in range(grid.n_atoms):
            ind[grid.n_continuous + d, d] = 1.0
        cols.append(ind)
    raw = np.hstack(cols)
    mu_total = grid.total_measure
    centering = np.array([integrate(raw[:, m], grid) for m in range(raw.shape[1])]) / mu_total
    centered = raw - centering
    kept = tuple(range(raw.shape[1] - 1))
    matrix = centered[:, list(kept)]
    expected = len(kept)
    if expected and np.linalg.matrix_rank(matrix) != expected:
        raise NumericError(
            f"outcome basis rank-deficient: rank {np.linalg.matrix_rank(matrix)} "
            f"of {expected} columns"
        )
    return OutcomeBasis(
        grid=grid,
        matrix=matrix,
        centering=centering,
        spline_count=spline_count if has_cont else 0,
        degree=degree,
        interval=measure.continuous_interval,
        kept=kept,
    )


@dataclass(frozen=True)
class CovariateBasis:
    """Evaluates one partial effect's covariate coefficients.

    Categorical effects use dummy coding (reference level -> zero vector);
    smooth effects use B-splines reparameterized to sum to zero over the
    training sample.
    """

    spec: PartialEffectSpec
    n_columns: int
    # smooth internals
    _range: tuple[float, float] | None = None
    _transform: np.ndarray | None = field(default=None, repr=False)

    def evaluate(self, value) -> np.ndarray:
        if self.spec.kind == "intercept":
            return np.ones(1)
        if self.spec.kind == "categorical":
            value = str(value)
            if value not in self.spec.levels:
                raise DataError(
                    f"unseen level '{value}' for covariate '{self.spec.covariate_name}'"
                )
            out = np.zeros(self.n_columns)
            non_ref = [l for l in self.spec.levels if l != self.spec.reference_level]
            if value != self.spec.reference_level:
                out[non_ref.index(value)] = 1.0
            return out
        lo, hi = self._range
        row = _bspline_design(
            np.array([float(value)]), lo, hi, self.spec.knot_count, self.spec.degree
        )[0]
        return row @ self._transform


def build_covariate_basis(spec: PartialEffectSpec, training_values) -> CovariateBasis:
    """Construct the covariate basis for one effect from its training sample."""
    if spec.kind == "intercept":
        return CovariateBasis(spec=spec, n_columns=1)
    training_values = list(training_values)
    if not training_values:
        raise DataError(f"no training values for covariate '{spec.covariate_name}'")
    if spec.kind == "categorical":
        unseen = {str(v) for v in training_values} - set(spec.levels)
        if unseen:
            raise DataError(
                f"values {sorted(unseen)} of '{spec.covariate_name}' "
                f"not among declared levels"
            )
        return CovariateBasis(spec=spec, n_columns=len(spec.levels) - 1)
    vals = np.asarray(training_values, dtype=float)
    lo, hi = float(vals.min()), float(vals.max())
    design = _bspline_design(vals, lo, hi, spec.knot_count, spec.degree)
    means = design.mean(axis=0)
    transform = null_space(means[None, :])  # columns of B @ transform average to zero
    if transform.shape[1] != spec.knot_count - 1:
        raise NumericError("unexpected null-space dimension in smooth centering")
    return CovariateBasis(
        spec=spec,
        n_columns=spec.knot_count - 1,
        _range=(lo, hi),
        _transform=transform,
    )


def covariate_row(covariate_bases: list[CovariateBasis], x: dict) -> np.ndarray:
    """Concatenated covariate coefficients b(x) across all effects."""
    parts = []
    for cb in covariate_bases:
        if cb.spec.kind == "intercept":
            parts.append(cb.evaluate(None))
            continue
        name = cb.spec.covariate_name
        if name not in x:
            raise DataError(f"missing covariate '{name}'")
        parts.append(cb.evaluate(x[name]))
    return np.concatenate(parts)


def design_row(
    covariate_bases: list[CovariateBasis],
    outcome_basis: OutcomeBasis,
    x: dict,
) -> np.ndarray:
    """Tensor-product design block for one covariate vector.

    Row g is b(x) kron b_T(cell g); shape (n_cells, R) with
    R = sum_j d_j * d_T.
    """
    bx = covariate_row(covariate_bases, x)
    return np.kron(bx[None, :], outcome_basis.matrix)


def design_row_at(
    covariate_bases: list[CovariateBasis],
    outcome_basis: OutcomeBasis,
    x: dict,
    y: float,
) -> np.ndarray:
    """Single design row evaluated at an exact outcome value (off-grid)."""
    bx = covariate_row(covariate_bases, x)
    return np.kron(bx, outcome_basis.evaluate_at(y))
