"""Bias selection: three-stage heuristic, CRE baseline, full grid search.

The three-stage scheme fixes per-class small-cell biases sequentially:
stationary users get the bias maximizing their own coverage, walking users
get the smallest bias that makes the vehicular constraint attainable
(vacating macro resources), and vehicular users get the bias maximizing
their own coverage given the first two. CRE applies one common bias to all
classes; full search enumerates the whole grid cube and is the optimality
oracle. All candidates under one config share common random numbers.
"""

from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

from .association import BiasVector, linear_from_db
from .coverage import CoverageEstimator, CoverageReport
from .model import NetworkConfig, UserClass

FULL_SEARCH_WARN_CANDIDATES = 2000

DEFAULT_GRID_DB = tuple(float(db) for db in range(0, 21, 2))
DEFAULT_CONVEXITY_VALUES = (1.0, 2.0, 3.04, 4.0, 5.0, 6.0, 7.0, 8.0)


class UnsatisfiableRequirementError(RuntimeError):
    """No bandwidth in the search interval satisfies every class threshold."""

    def __init__(self, message: str, failing_classes: tuple[UserClass, ...]):
        super().__init__(message)
        self.failing_classes = failing_classes


class Scheme(enum.Enum):
    THREE_STAGE = "three-stage"
    CRE = "cre"
    FULL_SEARCH = "full"


@dataclass(frozen=True)
class BiasGrid:
    """Ordered candidate biases shared by every optimizer, linear factors.

    Must be strictly increasing and start at exactly 1 (0 dB) so the
    unbiased association is always a candidate.
    """

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("bias grid must be nonempty")
        if self.values[0] != 1.0:
            raise ValueError("bias grid must start at 1 (0 dB)")
        for lo, hi in zip(self.values, self.values[1:]):
            if hi <= lo:
                raise ValueError("bias grid must be strictly increasing")

    @classmethod
    def default(cls) -> "BiasGrid":
        return cls.from_db(DEFAULT_GRID_DB)

    @classmethod
    def from_db(cls, db_values: Sequence[float]) -> "BiasGrid":
        return cls(tuple(linear_from_db(db) for db in db_values))

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class OptimizerResult:
    """Winning bias vector of one scheme with its coverage report."""

    bias: BiasVector
    report: CoverageReport
    feasible: bool
    scheme: Scheme


@dataclass(frozen=True)
class DemandScenario:
    """Total daily traffic split into per-class volumes by user convexity.

    The stationary share of the total is fixed; the moving share is split
    between walking and vehicular users in the ratio 1 : user_convexity.
    """

    total_volume: float
    stationary_share: float
    moving_share: float
    user_convexity: float

    def __post_init__(self) -> None:
        if self.total_volume < 0.0:
            raise ValueError("total_volume must be >= 0")
        if abs(self.stationary_share + self.moving_share - 1.0) > 1e-9:
            raise ValueError("stationary_share + moving_share must equal 1")
        if min(self.stationary_share, self.moving_share) < 0.0:
            raise ValueError("shares must be >= 0")
        if self.user_convexity <= 0.0:
            raise ValueError("user_convexity must be > 0")

    @classmethod
    def measured_2015(cls) -> "DemandScenario":
        """The 145.05 MB/day field-measurement mix."""
        return cls(145.05, 0.6107, 0.3893, 3.04)

    def class_volumes(self) -> tuple[float, float, float]:
        """(stationary, walking, vehicular) volumes in MB/day."""
        stationary = self.stationary_share * self.total_volume
        walking = self.moving_share * self.total_volume / (1.0 + self.user_convexity)
        vehicular = self.user_convexity * walking
        return (stationary, walking, vehicular)

    def with_convexity(self, user_convexity: float) -> "DemandScenario":
        return replace(self, user_convexity=user_convexity)

    def with_total(self, total_volume: float) -> "DemandScenario":
        return replace(self, total_volume=total_volume)

    def apply(self, config: NetworkConfig) -> NetworkConfig:
        """Config with per-class traffic volumes set from this scenario."""
        return config.with_volumes(self.class_volumes())


def _resolve(
    config: NetworkConfig,
    grid: BiasGrid | None,
    estimator: CoverageEstimator | None,
) -> tuple[BiasGrid, CoverageEstimator]:
    if grid is None:
        grid = BiasGrid.default()
    if estimator is None:
        estimator = CoverageEstimator(config)
    return grid, estimator


def stage1_stationary_bias(
    config: NetworkConfig,
    grid: BiasGrid | None = None,
    estimator: CoverageEstimator | None = None,
) -> float:
    """Bias maximizing stationary coverage with the other classes unbiased.

    Ties break to the smallest bias.
    """
    grid, estimator = _resolve(config, grid, estimator)
    best_bias = None
    best_coverage = -1.0
    for candidate in grid:
        report = estimator.evaluate(BiasVector(candidate, 1.0, 1.0))
        coverage = report.per_class_coverage[UserClass.STATIONARY]
        if coverage > best_coverage:
            best_coverage = coverage
            best_bias = candidate
    return best_bias


def _stage3(
    estimator: CoverageEstimator,
    grid: BiasGrid,
    fixed_stationary: float,
    fixed_walking: float,
) -> tuple[float, CoverageReport]:
    """Vehicular-coverage argmax over the grid; returns (bias, its report)."""
    best_bias = None
    best_report = None
    best_coverage = -1.0
    for candidate in grid:
        bias = BiasVector(fixed_stationary, fixed_walking, candidate)
        report = estimator.evaluate(bias)
        coverage = report.per_class_coverage[UserClass.VEHICULAR]
        if coverage > best_coverage:
            best_coverage = coverage
            best_bias = candidate
            best_report = report
    return best_bias, best_report


def stage3_vehicular_bias(
    config: NetworkConfig,
    grid: BiasGrid | None = None,
    fixed_stationary: float = 1.0,
    fixed_walking: float = 1.0,
    estimator: CoverageEstimator | None = None,
) -> float:
    """Bias maximizing vehicular coverage given the first two stages."""
    grid, estimator = _resolve(config, grid, estimator)
    bias, _ = _stage3(estimator, grid, fixed_stationary, fixed_walking)
    return bias


def _stage2(
    estimator: CoverageEstimator,
    grid: BiasGrid,
    fixed_stationary: float,
) -> tuple[float, float, CoverageReport]:
    """Walking-bias scan; returns (walking, vehicular bias, final report).

    Scans the grid upward and stops at the first walking bias whose
    stage-3 completion meets the vehicular coverage threshold: the macro
    resources vacated by walking users are just enough. Falls back to the
    candidate with the best vehicular coverage when none qualifies.
    """
    min_vehicular = estimator.config.profiles[UserClass.VEHICULAR].min_coverage
    best = None
    best_coverage = -1.0
    for candidate in grid:
        vehicular_bias, report = _stage3(estimator, grid, fixed_stationary, candidate)
        coverage = report.per_class_coverage[UserClass.VEHICULAR]
        if coverage >= min_vehicular:
            return candidate, vehicular_bias, report
        if coverage > best_coverage:
            best_coverage = coverage
            best = (candidate, vehicular_bias, report)
    return best


def stage2_walking_bias(
    config: NetworkConfig,
    grid: BiasGrid | None = None,
    fixed_stationary: float = 1.0,
    estimator: CoverageEstimator | None = None,
) -> float:
    """Smallest bias whose stage-3 completion satisfies vehicular coverage."""
    grid, estimator = _resolve(config, grid, estimator)
    walking_bias, _, _ = _stage2(estimator, grid, fixed_stationary)
    return walking_bias


def three_stage_optimize(
    config: NetworkConfig,
    grid: BiasGrid | None = None,
    estimator: CoverageEstimator | None = None,
) -> OptimizerResult:
    """Compose the three per-class stages under common random numbers."""
    grid, estimator = _resolve(config, grid, estimator)
    stationary = stage1_stationary_bias(config, grid, estimator)
    walking, vehicular, report = _stage2(estimator, grid, stationary)
    bias = BiasVector(stationary, walking, vehicular)
    return OptimizerResult(
        bias=bias, report=report, feasible=report.feasible, scheme=Scheme.THREE_STAGE
    )


def cre_optimize(
    config: NetworkConfig,
    grid: BiasGrid | None = None,
    estimator: CoverageEstimator | None = None,
) -> OptimizerResult:
    """Best common bias: highest average coverage, feasible candidates first.

    When no common bias is feasible the best-average infeasible candidate
    is returned with feasible=False. Ties break to the smallest bias.
    """
    grid, estimator = _resolve(config, grid, estimator)
    best_feasible = None
    best_any = None
    for candidate in grid:
        bias = BiasVector.uniform(candidate)
        report = estimator.evaluate(bias)
        entry = (report.average_coverage, bias, report)
        if best_any is None or entry[0] > best_any[0]:
            best_any = entry
        if report.feasible and (best_feasible is None or entry[0] > best_feasible[0]):
            best_feasible = entry
    chosen = best_feasible if best_feasible is not None else best_any
    _, bias, report = chosen
    return OptimizerResult(
        bias=bias, report=report, feasible=report.feasible, scheme=Scheme.CRE
    )


def full_search(
    config: NetworkConfig,
    grid: BiasGrid | None = None,
    estimator: CoverageEstimator | None = None,
) -> OptimizerResult:
    """Exhaustive search over the grid cube; the optimality oracle.

    Feasible candidates are preferred; among equals the lexicographically
    smallest (stationary, walking, vehicular) triple wins.
    """
    grid, estimator = _resolve(config, grid, estimator)
    n_candidates = len(grid) ** 3
    if n_candidates > FULL_SEARCH_WARN_CANDIDATES:
        warnings.warn(
            f"full search over {n_candidates} candidates may be slow",
            stacklevel=2,
        )
    best_feasible = None
    best_any = None
    for triple in itertools.product(grid, repeat=3):
        bias = BiasVector(*triple)
        report = estimator.evaluate(bias)
        entry = (report.average_coverage, bias, report)
        if best_any is None or entry[0] > best_any[0]:
            best_any = entry
        if report.feasible and (best_feasible is None or entry[0] > best_feasible[0]):
            best_feasible = entry
    chosen = best_feasible if best_feasible is not None else best_any
    _, bias, report = chosen
    return OptimizerResult(
        bias=bias, report=report, feasible=report.feasible, scheme=Scheme.FULL_SEARCH
    )


_SCHEME_RUNNERS = {
    Scheme.THREE_STAGE: three_stage_optimize,
    Scheme.CRE: cre_optimize,
    Scheme.FULL_SEARCH: full_search,
}


def run_scheme(
    scheme: Scheme,
    config: NetworkConfig,
    grid: BiasGrid | None = None,
    estimator: CoverageEstimator | None = None,
) -> OptimizerResult:
    """Dispatch one association scheme by name."""
    return _SCHEME_RUNNERS[scheme](config, grid, estimator)


def required_bandwidth(
    config: NetworkConfig,
    grid: BiasGrid | None,
    scheme: Scheme,
    w_min: float,
    w_max: float,
    tolerance: float,
) -> float:
    """Smallest bandwidth at which the scheme's optimizer is feasible.

    Bisects on bandwidth; deployments and fading depend only on the seed,
    so feasibility is monotone in bandwidth under common random numbers.
    Raises UnsatisfiableRequirementError when even w_max is infeasible.
    """
    if not 0.0 < w_min <= w_max:
        raise ValueError("need 0 < w_min <= w_max")
    if tolerance <= 0.0:
        raise ValueError("tolerance must be > 0")
    if grid is None:
        grid = BiasGrid.default()
    base = CoverageEstimator(config)

    def result_at(width: float) -> OptimizerResult:
        return run_scheme(scheme, config, grid, base.with_bandwidth(width))

    top = result_at(w_max)
    if not top.feasible:
        failing = tuple(
            cls
            for cls in UserClass
            if top.report.per_class_coverage[cls] < config.profiles[cls].min_coverage
        )
        names = ", ".join(cls.label for cls in failing)
        raise UnsatisfiableRequirementError(
            f"{scheme.value} infeasible even at {w_max:g} Hz (failing: {names})",
            failing,
        )
    if result_at(w_min).feasible:
        return w_min

    low, high = w_min, w_max  # invariant: low infeasible, high feasible
    while high - low > tolerance:
        mid = 0.5 * (low + high)
        if result_at(mid).feasible:
            high = mid
        else:
            low = mid
    return high


@dataclass(frozen=True)
class SweepPoint:
    """One (user convexity, scheme) cell of a sweep table."""

    convexity: float
    scheme: Scheme
    result: OptimizerResult


def convexity_sweep(
    base: DemandScenario,
    convexity_values: Sequence[float],
    config: NetworkConfig,
    grid: BiasGrid | None = None,
    schemes: Sequence[Scheme] = tuple(Scheme),
) -> list[SweepPoint]:
    """Evaluate every scheme across a range of user-convexity values.

    Total volume and the stationary share stay fixed; only the split of
    moving traffic between walking and vehicular users varies. Every cell
    uses identical seeds, so rows are exactly comparable.
    """
    if any(value <= 0.0 for value in convexity_values):
        raise ValueError("convexity values must be > 0")
    if grid is None:
        grid = BiasGrid.default()
    rows: list[SweepPoint] = []
    for convexity in convexity_values:
        scenario = base.with_convexity(convexity)
        point_config = scenario.apply(config)
        estimator = CoverageEstimator(point_config)
        for scheme in schemes:
            result = run_scheme(scheme, point_config, grid, estimator)
            rows.append(SweepPoint(convexity=convexity, scheme=scheme, result=result))
    return rows
