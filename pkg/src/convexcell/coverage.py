"""Per-user rates, handover loss, and Monte-Carlo rate-coverage estimation.

Rate coverage of a class is the fraction of (user, trial) pairs whose
achieved rate meets the class's demand-derived requirement. All bias
vectors evaluated against one config see identical deployments and fading
(common random numbers), so candidate comparisons are paired and exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .association import AssociationMap, BiasVector, cell_loads
from .model import (
    Deployment,
    NetworkConfig,
    Tier,
    UserClass,
    mean_power_matrix,
    sample_deployment,
    sinr,
)

SECONDS_PER_DAY = 86400.0
BITS_PER_MB = 8e6  # 1 MB = 1e6 bytes


class EstimationError(RuntimeError):
    """Raised when a coverage estimate cannot be formed."""


@dataclass(frozen=True)
class CoverageReport:
    """Rate coverage of one bias vector under one config.

    average_coverage is the density-weighted mean of the per-class values;
    feasible means every class meets its min_coverage threshold.
    """

    per_class_coverage: tuple[float, float, float]
    average_coverage: float
    feasible: bool
    trials_used: int

    def coverage_of(self, user_class: UserClass) -> float:
        return self.per_class_coverage[user_class]


def rate_requirement(volume_mb_per_day: float, peak_factor: float) -> float:
    """Busy-period rate requirement in bits/s for a mean daily volume.

    The mean daily volume is spread over 86400 s and concentrated by
    peak_factor into the busy period a user must actually be served in.
    """
    if volume_mb_per_day < 0.0:
        raise ValueError("volume must be >= 0")
    if peak_factor < 1.0:
        raise ValueError("peak_factor must be >= 1")
    return volume_mb_per_day * BITS_PER_MB / SECONDS_PER_DAY * peak_factor


def handover_efficiency(
    velocity_kmh: float, tier_density_per_km2: float, config: NetworkConfig
) -> float:
    """Fraction of time a user moving at the given speed is not in handover.

    Handover rate is the Poisson-Voronoi boundary-crossing rate
    c * v * sqrt(density) with v in m/s and density in stations/m^2; each
    crossing costs handover_delay seconds, floored at zero efficiency.
    """
    if velocity_kmh < 0.0:
        raise ValueError("velocity must be >= 0")
    if tier_density_per_km2 < 0.0:
        raise ValueError("tier density must be >= 0")
    v_ms = velocity_kmh / 3.6
    density_m2 = tier_density_per_km2 * 1e-6
    rate = config.crossing_coefficient * v_ms * math.sqrt(density_m2)
    return max(0.0, 1.0 - rate * config.handover_delay)


def user_rate(
    user_index: int,
    assoc: AssociationMap,
    deployment: Deployment,
    config: NetworkConfig,
    bandwidth: float | None = None,
    loads: np.ndarray | None = None,
) -> float:
    """Achieved rate of one user in bits/s.

    Equal intra-cell sharing: the serving station splits its bandwidth
    evenly over its load. The handover efficiency of the user's class on
    the serving tier scales the result.
    """
    width = config.bandwidth if bandwidth is None else bandwidth
    if loads is None:
        loads = cell_loads(assoc, deployment)
    station = int(assoc.serving[user_index])
    tier = Tier(int(assoc.tier[user_index]))
    user_class = UserClass(int(deployment.user_classes[user_index]))
    velocity = config.profiles[user_class].velocity
    efficiency = handover_efficiency(velocity, config.tier_density(tier), config)
    snr = sinr(user_index, station, deployment, config, bandwidth=width)
    return efficiency * (width / loads[station]) * math.log2(1.0 + snr)


class CoverageEstimator:
    """Shared-realization evaluator of rate coverage for many bias vectors.

    Precomputes, per (user, trial), the best macro and best small station
    by mean power together with their instantaneous SINR terms. Evaluating
    a bias vector then reduces to a vectorized two-way choice per user plus
    a load recount, so grid searches reuse the expensive geometry. Reports
    are cached by bias triple; identical inputs give identical reports
    regardless of evaluation order.
    """

    def __init__(
        self,
        config: NetworkConfig,
        deployments: Iterable[Deployment] | None = None,
    ) -> None:
        self.config = config
        if deployments is None:
            deployments = (
                sample_deployment(config, t) for t in range(config.trials)
            )

        counts = config.class_counts()
        for cls, count in zip(UserClass, counts):
            if count == 0:
                raise EstimationError(
                    f"class {cls.label} has zero users in every trial; "
                    "increase user_count or its density_fraction"
                )

        cls_parts = []
        pw_macro_parts = []
        pw_small_parts = []
        gid_macro_parts = []
        gid_small_parts = []
        sig_macro_parts = []
        sig_small_parts = []
        total_inst_parts = []
        station_offset = 0
        n_trials = 0
        for deployment in deployments:
            part = self._reduce(deployment, station_offset)
            (cls_t, pw_m, pw_s, gid_m, gid_s, sig_m, sig_s, tot, n_st) = part
            cls_parts.append(cls_t)
            pw_macro_parts.append(pw_m)
            pw_small_parts.append(pw_s)
            gid_macro_parts.append(gid_m)
            gid_small_parts.append(gid_s)
            sig_macro_parts.append(sig_m)
            sig_small_parts.append(sig_s)
            total_inst_parts.append(tot)
            station_offset += n_st
            n_trials += 1
        if n_trials == 0:
            raise EstimationError("at least one trial is required")

        self._trials = n_trials
        self._cls = np.concatenate(cls_parts)
        self._pw_macro = np.concatenate(pw_macro_parts)
        self._pw_small = np.concatenate(pw_small_parts)
        self._gid_macro = np.concatenate(gid_macro_parts)
        self._gid_small = np.concatenate(gid_small_parts)
        self._sig_macro = np.concatenate(sig_macro_parts)
        self._sig_small = np.concatenate(sig_small_parts)
        self._total_inst = np.concatenate(total_inst_parts)
        self._n_station_ids = station_offset
        self._class_index = [np.nonzero(self._cls == c)[0] for c in range(3)]

        self._requirements = np.array(
            [
                rate_requirement(p.traffic_volume, config.demand_peak_factor)
                for p in config.profiles
            ]
        )
        self._min_coverage = np.array([p.min_coverage for p in config.profiles])
        self._fractions = config.density_fractions()

        eff = np.empty((3, 2))
        for cls in UserClass:
            velocity = config.profiles[cls].velocity
            eff[cls, Tier.MACRO] = handover_efficiency(
                velocity, config.macro_density, config
            )
            eff[cls, Tier.SMALL] = handover_efficiency(
                velocity, config.small_density, config
            )
        self._efficiency = eff

        self._bind_bandwidth(config.bandwidth)

    def _reduce(self, deployment: Deployment, station_offset: int):
        """Collapse one trial to per-user best-of-tier link quantities."""
        mean_power = mean_power_matrix(deployment, self.config)
        inst_power = mean_power * deployment.fading
        total_inst = inst_power.sum(axis=1)
        n_users = deployment.n_users
        n_macro = deployment.n_macro
        rows = np.arange(n_users)

        best_macro = np.argmax(mean_power[:, :n_macro], axis=1)
        pw_macro = mean_power[rows, best_macro]
        sig_macro = inst_power[rows, best_macro]
        gid_macro = best_macro + station_offset

        if deployment.n_small > 0:
            best_small = np.argmax(mean_power[:, n_macro:], axis=1) + n_macro
            pw_small = mean_power[rows, best_small]
            sig_small = inst_power[rows, best_small]
            gid_small = best_small + station_offset
        else:
            # no small tier: zero power is never selected by the bias compare
            pw_small = np.zeros(n_users)
            sig_small = np.zeros(n_users)
            gid_small = gid_macro.copy()

        return (
            deployment.user_classes.astype(np.int8),
            pw_macro,
            pw_small,
            gid_macro,
            gid_small,
            sig_macro,
            sig_small,
            total_inst,
            deployment.n_stations,
        )

    def _bind_bandwidth(self, bandwidth: float) -> None:
        """Recompute the bandwidth-dependent per-user rate factors."""
        self._bandwidth = bandwidth
        noise = self.config.noise_power * bandwidth
        with np.errstate(divide="ignore", invalid="ignore"):
            sinr_macro = self._sig_macro / (self._total_inst - self._sig_macro + noise)
            sinr_small = np.where(
                self._pw_small > 0.0,
                self._sig_small / (self._total_inst - self._sig_small + noise),
                0.0,
            )
        # efficiency * log2(1 + SINR); bandwidth/load sharing applied later
        eff_macro = self._efficiency[self._cls, Tier.MACRO]
        eff_small = self._efficiency[self._cls, Tier.SMALL]
        self._factor_macro = eff_macro * np.log1p(sinr_macro) / math.log(2.0)
        self._factor_small = eff_small * np.log1p(sinr_small) / math.log(2.0)
        self._cache: dict[tuple[float, float, float], CoverageReport] = {}

    def with_bandwidth(self, bandwidth: float) -> "CoverageEstimator":
        """Cheap copy sharing the trial geometry but using another bandwidth."""
        if bandwidth <= 0.0:
            raise ValueError("bandwidth must be > 0")
        clone = object.__new__(CoverageEstimator)
        clone.__dict__.update(self.__dict__)
        clone.config = replace(self.config, bandwidth=bandwidth)
        clone._bind_bandwidth(bandwidth)
        return clone

    def evaluate(self, bias: BiasVector) -> CoverageReport:
        """Rate coverage of one bias vector over the shared realizations."""
        key = (bias.stationary_bias, bias.walking_bias, bias.vehicular_bias)
        cached = self._cache.get(key)
        if cached is not None:
            return cached

        user_bias = bias.as_array()[self._cls]
        on_small = user_bias * self._pw_small > self._pw_macro
        gid = np.where(on_small, self._gid_small, self._gid_macro)
        loads = np.bincount(gid, minlength=self._n_station_ids)
        rate = (
            np.where(on_small, self._factor_small, self._factor_macro)
            * self._bandwidth
            / loads[gid]
        )

        per_class = []
        for cls in range(3):
            idx = self._class_index[cls]
            covered = np.count_nonzero(rate[idx] >= self._requirements[cls])
            per_class.append(covered / idx.size)
        average = float(np.dot(self._fractions, per_class))
        feasible = bool(np.all(np.asarray(per_class) >= self._min_coverage))
        report = CoverageReport(
            per_class_coverage=tuple(per_class),
            average_coverage=average,
            feasible=feasible,
            trials_used=self._trials,
        )
        self._cache[key] = report
        return report


def estimate_rate_coverage(config: NetworkConfig, bias: BiasVector) -> CoverageReport:
    """Monte-Carlo rate coverage of one bias vector under one config."""
    return CoverageEstimator(config).evaluate(bias)
