"""Two-tier cellular network model: deployment sampling, propagation, SINR.

Distances are in meters, powers in watts, densities in stations per km^2.
A deployment is one Monte-Carlo realization of station and user placement
plus per-link Rayleigh fading; it is a pure function of (seed, trial_index).
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

# Path-loss distance floor; avoids the singularity of d**-alpha at d=0.
MIN_PATH_DISTANCE_M = 1.0

# Thermal noise density, -174 dBm/Hz expressed in W/Hz.
THERMAL_NOISE_W_PER_HZ = 3.981071705534985e-21


class ConfigError(ValueError):
    """Raised when a configuration value is invalid; names the field."""


class UserClass(enum.IntEnum):
    """Mobility state of a user. Values index per-class arrays."""

    STATIONARY = 0
    WALKING = 1
    VEHICULAR = 2

    @property
    def label(self) -> str:
        return self.name.lower()


class Tier(enum.IntEnum):
    """Station tier. Macro stations always precede small ones in station ids."""

    MACRO = 0
    SMALL = 1


@dataclass(frozen=True)
class ClassProfile:
    """Demand and mobility parameters of one user class.

    traffic_volume is a mean daily downlink volume in MB/day (1 MB = 1e6
    bytes); velocity is the mean speed in km/h used by the handover model;
    min_coverage is the per-class rate-coverage requirement in [0, 1].
    """

    user_class: UserClass
    density_fraction: float
    traffic_volume: float
    velocity: float
    min_coverage: float

    def __post_init__(self) -> None:
        name = self.user_class.label
        if not 0.0 <= self.density_fraction <= 1.0:
            raise ConfigError(f"profiles.{name}.density_fraction must be in [0, 1]")
        if self.traffic_volume < 0.0:
            raise ConfigError(f"profiles.{name}.traffic_volume must be >= 0")
        if self.velocity < 0.0:
            raise ConfigError(f"profiles.{name}.velocity must be >= 0")
        if not 0.0 <= self.min_coverage <= 1.0:
            raise ConfigError(f"profiles.{name}.min_coverage must be in [0, 1]")
        # Velocity must be consistent with the mobility-state definition.
        if self.user_class is UserClass.STATIONARY and self.velocity != 0.0:
            raise ConfigError("profiles.stationary.velocity must be 0")
        if self.user_class is UserClass.WALKING and self.velocity > 10.0:
            raise ConfigError("profiles.walking.velocity must be <= 10 km/h")
        if self.user_class is UserClass.VEHICULAR and self.velocity <= 10.0:
            raise ConfigError("profiles.vehicular.velocity must be > 10 km/h")


def default_profiles() -> tuple[ClassProfile, ClassProfile, ClassProfile]:
    """Field-measurement demand mix: 145.05 MB/day total, 0.8 thresholds."""
    return (
        ClassProfile(UserClass.STATIONARY, 0.8972, 88.58, 0.0, 0.8),
        ClassProfile(UserClass.WALKING, 0.0470, 14.00, 2.58, 0.8),
        ClassProfile(UserClass.VEHICULAR, 0.0558, 42.48, 31.9, 0.8),
    )


@dataclass(frozen=True)
class NetworkConfig:
    """All physical and simulation parameters of one experiment.

    Every field has a usable default; loadable from a flat JSON document
    via :func:`NetworkConfig.from_dict`. Immutable; derive variants with
    ``dataclasses.replace`` or the ``with_*`` helpers.
    """

    # Defaults describe the calibrated reference deployment: a dense layer of
    # low-power picos under a two-per-km^2 macro grid, urban-ish path loss,
    # and a handover cost heavy enough that vehicular users get no useful
    # throughput from small cells. See README for how these were chosen.
    area_side: float = 2000.0           # m, square simulation window
    macro_density: float = 2.0          # stations / km^2
    small_density: float = 40.0         # stations / km^2
    macro_power: float = 40.0           # W (46 dBm)
    small_power: float = 0.0092         # W (~9.6 dBm pico)
    path_loss_exponent: float = 3.1
    reference_loss: float = 1.0         # dimensionless gain at 1 m
    noise_power: float = THERMAL_NOISE_W_PER_HZ  # W/Hz
    bandwidth: float = 10e6             # Hz
    user_count: int = 500
    profiles: tuple[ClassProfile, ClassProfile, ClassProfile] = field(
        default_factory=default_profiles
    )
    handover_delay: float = 14.3        # s lost per crossing (interruption
                                        # plus signaling and ramp-up)
    crossing_coefficient: float = 4.0 / math.pi
    demand_peak_factor: float = 5.4     # mean daily volume -> busy-period rate
    trials: int = 200
    seed: int = 42

    def __post_init__(self) -> None:
        if self.area_side <= 0.0:
            raise ConfigError("area_side must be > 0")
        if self.macro_density <= 0.0:
            raise ConfigError("macro_density must be > 0")
        if self.small_density < 0.0:
            raise ConfigError("small_density must be >= 0")
        if self.macro_power <= 0.0 or self.small_power <= 0.0:
            raise ConfigError("macro_power and small_power must be > 0")
        if self.macro_power <= self.small_power:
            raise ConfigError("macro_power must exceed small_power (two-tier assumption)")
        if self.path_loss_exponent <= 2.0:
            raise ConfigError("path_loss_exponent must be > 2")
        if self.reference_loss <= 0.0:
            raise ConfigError("reference_loss must be > 0")
        if self.noise_power < 0.0:
            raise ConfigError("noise_power must be >= 0")
        if self.bandwidth <= 0.0:
            raise ConfigError("bandwidth must be > 0")
        if self.user_count <= 0:
            raise ConfigError("user_count must be > 0")
        if self.handover_delay < 0.0:
            raise ConfigError("handover_delay must be >= 0")
        if self.crossing_coefficient < 0.0:
            raise ConfigError("crossing_coefficient must be >= 0")
        if self.demand_peak_factor < 1.0:
            raise ConfigError("demand_peak_factor must be >= 1")
        if self.trials <= 0:
            raise ConfigError("trials must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if len(self.profiles) != 3:
            raise ConfigError("profiles must contain exactly three entries")
        for cls, profile in zip(UserClass, self.profiles):
            if profile.user_class is not cls:
                raise ConfigError(
                    "profiles must be ordered stationary, walking, vehicular"
                )
        total = sum(p.density_fraction for p in self.profiles)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(
                f"profiles density_fraction must sum to 1 (got {total!r})"
            )

    # -- derived quantities -------------------------------------------------

    @property
    def area_km2(self) -> float:
        return (self.area_side / 1000.0) ** 2

    def tier_density(self, tier: Tier) -> float:
        return self.macro_density if tier is Tier.MACRO else self.small_density

    def tier_power(self, tier: Tier) -> float:
        return self.macro_power if tier is Tier.MACRO else self.small_power

    def density_fractions(self) -> np.ndarray:
        return np.array([p.density_fraction for p in self.profiles])

    def class_counts(self) -> np.ndarray:
        """Per-class user counts, largest-remainder rounded to user_count."""
        return largest_remainder_counts(
            [p.density_fraction for p in self.profiles], self.user_count
        )

    def with_volumes(self, volumes: Sequence[float]) -> "NetworkConfig":
        """Copy of the config with per-class traffic volumes replaced."""
        if len(volumes) != 3:
            raise ConfigError("volumes must contain exactly three entries")
        profiles = tuple(
            replace(p, traffic_volume=float(v)) for p, v in zip(self.profiles, volumes)
        )
        return replace(self, profiles=profiles)

    # -- serialization ------------------------------------------------------

    _PROFILE_FIELDS = ("density_fraction", "traffic_volume", "velocity", "min_coverage")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "area_side": self.area_side,
            "macro_density": self.macro_density,
            "small_density": self.small_density,
            "macro_power": self.macro_power,
            "small_power": self.small_power,
            "path_loss_exponent": self.path_loss_exponent,
            "reference_loss": self.reference_loss,
            "noise_power": self.noise_power,
            "bandwidth": self.bandwidth,
            "user_count": self.user_count,
            "handover_delay": self.handover_delay,
            "crossing_coefficient": self.crossing_coefficient,
            "demand_peak_factor": self.demand_peak_factor,
            "trials": self.trials,
            "seed": self.seed,
            "profiles": {
                p.user_class.label: {f: getattr(p, f) for f in self._PROFILE_FIELDS}
                for p in self.profiles
            },
        }
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NetworkConfig":
        """Build a config from a JSON-style mapping; omitted fields default.

        Profiles may be partially overridden per class, e.g.
        ``{"profiles": {"vehicular": {"traffic_volume": 50.0}}}``.
        Unknown keys raise :class:`ConfigError`.
        """
        known = {
            "area_side", "macro_density", "small_density", "macro_power",
            "small_power", "path_loss_exponent", "reference_loss", "noise_power",
            "bandwidth", "user_count", "handover_delay", "crossing_coefficient",
            "demand_peak_factor", "trials", "seed", "profiles",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")

        kwargs: dict[str, Any] = {k: data[k] for k in data if k != "profiles"}
        for key in ("user_count", "trials", "seed"):
            if key in kwargs:
                kwargs[key] = int(kwargs[key])

        profile_data = data.get("profiles", {})
        if not isinstance(profile_data, Mapping):
            raise ConfigError("profiles must be a mapping keyed by class name")
        labels = {c.label: c for c in UserClass}
        unknown_profiles = set(profile_data) - set(labels)
        if unknown_profiles:
            raise ConfigError(
                f"unknown profile class(es): {', '.join(sorted(unknown_profiles))}"
            )
        profiles = []
        for base in default_profiles():
            override = profile_data.get(base.user_class.label, {})
            bad = set(override) - set(cls._PROFILE_FIELDS)
            if bad:
                raise ConfigError(
                    f"unknown profile field(s) for {base.user_class.label}: "
                    f"{', '.join(sorted(bad))}"
                )
            profiles.append(replace(base, **{k: float(v) for k, v in override.items()}))
        kwargs["profiles"] = tuple(profiles)
        return cls(**kwargs)

    def config_hash(self) -> str:
        """Stable sha256 of the resolved configuration."""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Deployment:
    """One realization of station and user placement with fading gains.

    Stations carry global ids: macros are 0..n_macro-1, smalls follow.
    fading[u, s] is the unit-mean exponential channel power gain of the
    (user u, station s) link.
    """

    macro_positions: np.ndarray
    small_positions: np.ndarray
    user_positions: np.ndarray
    user_classes: np.ndarray
    fading: np.ndarray

    def __post_init__(self) -> None:
        n_users = self.user_positions.shape[0]
        n_stations = self.macro_positions.shape[0] + self.small_positions.shape[0]
        if self.user_classes.shape != (n_users,):
            raise ValueError("user_classes must have one entry per user")
        if self.fading.shape != (n_users, n_stations):
            raise ValueError("fading must have shape (n_users, n_stations)")

    @property
    def n_macro(self) -> int:
        return self.macro_positions.shape[0]

    @property
    def n_small(self) -> int:
        return self.small_positions.shape[0]

    @property
    def n_stations(self) -> int:
        return self.n_macro + self.n_small

    @property
    def n_users(self) -> int:
        return self.user_positions.shape[0]

    def station_positions(self) -> np.ndarray:
        return np.vstack([self.macro_positions, self.small_positions])

    def station_tiers(self) -> np.ndarray:
        """Tier value per global station id."""
        return np.concatenate(
            [
                np.full(self.n_macro, Tier.MACRO, dtype=np.int8),
                np.full(self.n_small, Tier.SMALL, dtype=np.int8),
            ]
        )

    def station_powers(self, config: NetworkConfig) -> np.ndarray:
        return np.concatenate(
            [
                np.full(self.n_macro, config.macro_power),
                np.full(self.n_small, config.small_power),
            ]
        )


def largest_remainder_counts(fractions: Sequence[float], total: int) -> np.ndarray:
    """Round fractions*total to integers that sum exactly to total.

    Floors every share, then hands out the remaining units by descending
    fractional remainder (ties to the lower index). Deterministic.
    """
    raw = np.asarray(fractions, dtype=float) * total
    counts = np.floor(raw).astype(int)
    remainders = raw - counts
    missing = total - int(counts.sum())
    # argsort on (-remainder) is stable, so equal remainders keep index order
    for idx in np.argsort(-remainders, kind="stable")[:missing]:
        counts[idx] += 1
    return counts


def sample_deployment(config: NetworkConfig, trial_index: int) -> Deployment:
    """Draw one network realization, fully determined by (seed, trial_index).

    Station counts are Poisson with mean density*area (at least one macro);
    positions and users are uniform i.i.d. in the window; fading gains are
    i.i.d. unit-mean exponential per (user, station) link.
    """
    if trial_index < 0:
        raise ValueError("trial_index must be >= 0")
    rng = np.random.default_rng((config.seed, trial_index))

    n_macro = max(1, int(rng.poisson(config.macro_density * config.area_km2)))
    n_small = int(rng.poisson(config.small_density * config.area_km2))
    macro_positions = rng.uniform(0.0, config.area_side, size=(n_macro, 2))
    small_positions = rng.uniform(0.0, config.area_side, size=(n_small, 2))
    user_positions = rng.uniform(0.0, config.area_side, size=(config.user_count, 2))
    fading = rng.exponential(1.0, size=(config.user_count, n_macro + n_small))

    counts = config.class_counts()
    user_classes = np.repeat(np.arange(3, dtype=np.int8), counts)

    return Deployment(
        macro_positions=macro_positions,
        small_positions=small_positions,
        user_positions=user_positions,
        user_classes=user_classes,
        fading=fading,
    )


def received_power(
    station_power: float,
    distance: float,
    fading_gain: float,
    config: NetworkConfig,
) -> float:
    """Power-law received power with a 1 m distance floor.

    Returns station_power * reference_loss * fading_gain * d**(-alpha)
    with d = max(distance, 1 m). Accepts scalars or numpy arrays.
    """
    if np.any(np.asarray(station_power) < 0):
        raise ValueError("station_power must be >= 0")
    if np.any(np.asarray(distance) < 0):
        raise ValueError("distance must be >= 0")
    if np.any(np.asarray(fading_gain) < 0):
        raise ValueError("fading_gain must be >= 0")
    d = np.maximum(distance, MIN_PATH_DISTANCE_M)
    value = (
        station_power
        * config.reference_loss
        * fading_gain
        * d ** (-config.path_loss_exponent)
    )
    return value if isinstance(value, np.ndarray) else float(value)


def link_distances(deployment: Deployment) -> np.ndarray:
    """(n_users, n_stations) matrix of user-to-station distances in meters."""
    stations = deployment.station_positions()
    delta = deployment.user_positions[:, None, :] - stations[None, :, :]
    return np.hypot(delta[..., 0], delta[..., 1])


def mean_power_matrix(deployment: Deployment, config: NetworkConfig) -> np.ndarray:
    """Fading-averaged received power of every (user, station) link."""
    powers = deployment.station_powers(config)
    return received_power(powers[None, :], link_distances(deployment), 1.0, config)


def sinr(
    user_index: int,
    serving_station: int,
    deployment: Deployment,
    config: NetworkConfig,
    bandwidth: float | None = None,
) -> float:
    """Instantaneous SINR of one user against all co-channel interferers.

    Interference sums the received power of every station other than the
    serving one, both tiers (full-buffer assumption). Noise is
    noise_power * bandwidth (config.bandwidth when not overridden).
    """
    if not 0 <= user_index < deployment.n_users:
        raise IndexError(f"unknown user index {user_index}")
    if not 0 <= serving_station < deployment.n_stations:
        raise IndexError(f"unknown station id {serving_station}")
    width = config.bandwidth if bandwidth is None else bandwidth
    distances = link_distances(deployment)[user_index]
    inst = received_power(
        deployment.station_powers(config),
        distances,
        deployment.fading[user_index],
        config,
    )
    signal = inst[serving_station]
    interference = inst.sum() - signal
    return float(signal / (interference + config.noise_power * width))
