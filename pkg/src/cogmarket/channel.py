"""Channel model for an overlay cognitive radio network.

K secondary transmitter-receiver pairs (SUs) contend for L licensed channels,
one primary pair (PU) per channel. Each SU runs an energy detector per
channel; imperfect sensing leaves both false alarms and missed detections,
which shape the ergodic rates on both sides. All fading gains are Rayleigh,
so squared magnitudes are unit-mean exponentials.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

_SQRT2 = math.sqrt(2.0)


def q_function(x):
    """Upper tail of the standard normal, Q(x) = P(Z > x)."""
    if np.isscalar(x):
        return 0.5 * math.erfc(x / _SQRT2)
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2)


def q_inverse(p: float) -> float:
    """Inverse of q_function on (0, 1).

    Newton iteration (Q' is the negated normal pdf) safeguarded by
    bisection on a bracket that always contains the root.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"q_inverse requires 0 < p < 1, got {p}")
    lo, hi = -40.0, 40.0  # Q(-40) ~ 1 and Q(40) underflows below any double
    x = 0.0
    for _ in range(200):
        fx = q_function(x) - p
        if abs(fx) <= 1e-15:
            break
        if fx > 0.0:  # Q decreasing, so Q(x) > p puts the root to the right
            lo = x
        else:
            hi = x
        pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        step = x + fx / pdf if pdf > 0.0 else lo
        x = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo < 1e-13 * max(1.0, abs(x)):
            break
    return x


def detector_threshold(f_target: float, n_samples: int, sigma2: float) -> float:
    """Energy detector threshold meeting a false alarm target.

    Inverts the Gaussian approximation of the N-sample noise-only test
    statistic: gamma = sigma2 * (sqrt(2 N) * Q^-1(f) + N).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be a positive integer")
    if sigma2 <= 0.0:
        raise ValueError("sigma2 must be positive")
    return sigma2 * (math.sqrt(2.0 * n_samples) * q_inverse(f_target) + n_samples)


def false_alarm_probability(threshold: float, n_samples: int, sigma2: float):
    """False alarm probability of the energy detector under noise only."""
    return q_function((threshold - n_samples * sigma2) / (sigma2 * np.sqrt(2.0 * n_samples)))


def detection_probability(threshold, n_samples, sigma2, primary_power, z2):
    """Detection probability given the sensing-link squared gain z2.

    Gaussian approximation of the test statistic when the primary signal
    is present with received power primary_power * z2.
    """
    rx = np.asarray(primary_power) * np.asarray(z2)
    mean = n_samples * (sigma2 + rx)
    var = 2.0 * n_samples * sigma2 * (sigma2 + 2.0 * rx)
    return q_function((threshold - mean) / np.sqrt(var))


def access_probability(tx_prob, false_alarm, detection):
    """Probability that an SU transmits on a channel.

    The SU transmits when the channel idles and no false alarm fires, or
    when it is busy but detection misses.
    """
    return (1.0 - tx_prob) * (1.0 - false_alarm) + tx_prob * (1.0 - detection)


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario parameters; scalars broadcast to per-SU or per-channel tuples.

    ``primary_power`` defaults to the secondary transmit power and
    ``epsilon`` defaults to ``alpha / 2`` when left unset.
    """

    K: int = 10
    L: int = 20
    quotas: tuple = 2
    snr_db: float = 0.0
    noise_power: float = 1.0
    primary_power: tuple | None = None
    n_samples: int = 20
    false_alarm_target: float = 0.05
    tx_prob: tuple = 0.75
    lambda_: float = 0.5
    alpha: float = 0.01
    epsilon: float | None = None
    qos_thresholds: tuple = 0.0
    seed: int = 0
    trials: int = 1000

    def __post_init__(self):
        if self.K < 1 or self.L < 1:
            raise ValueError("K and L must be at least 1")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.noise_power <= 0.0:
            raise ValueError("noise_power must be positive")
        if not 0.0 < self.false_alarm_target < 1.0:
            raise ValueError("false_alarm_target must lie in (0, 1)")
        if self.n_samples < 1:
            raise ValueError("n_samples must be a positive integer")
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.epsilon is not None and self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "quotas", self._per_su("quotas", self.quotas))
        object.__setattr__(self, "tx_prob", self._per_channel("tx_prob", self.tx_prob))
        object.__setattr__(
            self, "qos_thresholds", self._per_channel("qos_thresholds", self.qos_thresholds)
        )
        power = self.primary_power if self.primary_power is not None else self.secondary_power
        object.__setattr__(self, "primary_power", self._per_channel("primary_power", power))
        if any(q < 1 for q in self.quotas):
            raise ValueError("quotas must be at least 1")
        if any(not 0.0 <= v <= 1.0 for v in self.tx_prob):
            raise ValueError("tx_prob entries must lie in [0, 1]")
        if any(p <= 0.0 for p in self.primary_power):
            raise ValueError("primary_power entries must be positive")
        if any(u < 0.0 for u in self.qos_thresholds):
            raise ValueError("qos_thresholds must be nonnegative")

    def _per_su(self, name, value):
        return self._broadcast(name, value, self.K)

    def _per_channel(self, name, value):
        return self._broadcast(name, value, self.L)

    @staticmethod
    def _broadcast(name, value, n):
        if isinstance(value, (int, float)):
            return (value,) * n
        value = tuple(value)
        if len(value) != n:
            raise ValueError(f"{name} must have length {n}, got {len(value)}")
        return value

    @property
    def secondary_power(self) -> float:
        """SU transmit power fixed by the target SNR over the noise floor."""
        return self.noise_power * 10.0 ** (self.snr_db / 10.0)

    @property
    def initial_price(self) -> float:
        return self.epsilon if self.epsilon is not None else self.alpha / 2.0

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        if "lambda" in data:
            data["lambda_"] = data.pop("lambda")
        valid = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - valid
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            key = "lambda" if f.name == "lambda_" else f.name
            value = getattr(self, f.name)
            out[key] = list(value) if isinstance(value, tuple) else value
        return out

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of all squared link gains (unit-mean exponentials).

    h2[k][l]      SU-k transmitter to SU-k receiver on channel l
    g2[l]         PU-l transmitter to PU-l receiver
    g_cross2[k][l] PU-l transmitter into SU-k receiver
    h_cross2[k][l] SU-k transmitter into PU-l receiver
    z2[k][l]      PU-l transmitter to SU-k sensing input
    """

    h2: np.ndarray
    g2: np.ndarray
    g_cross2: np.ndarray
    h_cross2: np.ndarray
    z2: np.ndarray
    trial_index: int = 0


@dataclass(frozen=True)
class SensingProfile:
    """Per (SU, channel) detector operating point and access probability."""

    threshold: np.ndarray
    false_alarm: np.ndarray
    detection: np.ndarray
    access: np.ndarray


@dataclass(frozen=True)
class UtilityTables:
    """Ergodic utilities for one realization.

    u_su[k][l] is SU k's rate on channel l, u_pu[l][k] is PU l's utility
    when SU k holds the channel. u_pu_free is the interference-free PU
    utility, u_pu_self the utility of keeping the channel unassigned
    (the QoS floor, never above u_pu_free).
    """

    u_su: np.ndarray
    u_pu: np.ndarray
    u_pu_free: np.ndarray
    u_pu_self: np.ndarray

    @property
    def n_sus(self) -> int:
        return self.u_su.shape[0]

    @property
    def n_channels(self) -> int:
        return self.u_su.shape[1]

    def weighted_values(self, lam: float) -> np.ndarray:
        """Per-pair weighted objective, lam * u_su + (1 - lam) * u_pu."""
        return lam * self.u_su + (1.0 - lam) * self.u_pu.T


def trial_generator(seed: int, trial_index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator, independent per (seed, stream, trial)."""
    ss = np.random.SeedSequence(seed, spawn_key=(stream, trial_index))
    return np.random.Generator(np.random.Philox(ss))


def generate_realization(config: ScenarioConfig, trial_index: int) -> ChannelRealization:
    """Draw one realization; draw order is fixed for reproducibility."""
    rng = trial_generator(config.seed, trial_index, stream=0)
    k, l = config.K, config.L
    return ChannelRealization(
        h2=rng.standard_exponential((k, l)),
        g2=rng.standard_exponential(l),
        g_cross2=rng.standard_exponential((k, l)),
        h_cross2=rng.standard_exponential((k, l)),
        z2=rng.standard_exponential((k, l)),
        trial_index=trial_index,
    )


def build_sensing_profile(realization: ChannelRealization, config: ScenarioConfig) -> SensingProfile:
    sigma2 = config.noise_power
    gamma = detector_threshold(config.false_alarm_target, config.n_samples, sigma2)
    power = np.asarray(config.primary_power)
    tx = np.asarray(config.tx_prob)
    f = np.full((config.K, config.L), false_alarm_probability(gamma, config.n_samples, sigma2))
    d = detection_probability(gamma, config.n_samples, sigma2, power, realization.z2)
    return SensingProfile(
        threshold=np.full((config.K, config.L), gamma),
        false_alarm=f,
        detection=d,
        access=access_probability(tx, f, d),
    )


def su_rate(k, l, realization, sensing, config) -> float:
    """SU k's ergodic rate on channel l.

    An idle channel sensed free gives the clean rate; a busy channel
    missed gives a rate degraded by PU interference at the SU receiver.
    """
    sigma2 = config.noise_power
    p_su = config.secondary_power
    tx = config.tx_prob[l]
    f = sensing.false_alarm[k, l]
    d = sensing.detection[k, l]
    clean = math.log2(1.0 + p_su * realization.h2[k, l] / sigma2)
    hit = math.log2(
        1.0
        + p_su
        * realization.h2[k, l]
        / (sigma2 + config.primary_power[l] * realization.g_cross2[k, l])
    )
    return (1.0 - tx) * (1.0 - f) * clean + tx * (1.0 - d) * hit


def su_sum_rate(k, channels, tables: UtilityTables) -> float:
    """Sum of SU k's rates over an iterable of channel indices."""
    return float(sum(tables.u_su[k, l] for l in sorted(channels)))


def pu_utility(l, k, realization, sensing, config) -> float:
    """PU l's ergodic utility while SU k holds the channel.

    Detection keeps the PU clean; a miss adds SU interference at the PU
    receiver. Both terms are gated by the PU activity probability.
    """
    sigma2 = config.noise_power
    tx = config.tx_prob[l]
    d = sensing.detection[k, l]
    rx = config.primary_power[l] * realization.g2[l]
    clean = math.log2(1.0 + rx / sigma2)
    hit = math.log2(1.0 + rx / (sigma2 + config.secondary_power * realization.h_cross2[k, l]))
    return tx * (d * clean + (1.0 - d) * hit)


def pu_utility_free(l, realization, config) -> float:
    """PU l's utility with no secondary user on the channel."""
    sigma2 = config.noise_power
    rx = config.primary_power[l] * realization.g2[l]
    return config.tx_prob[l] * math.log2(1.0 + rx / sigma2)


def build_utility_tables(realization: ChannelRealization, config: ScenarioConfig) -> UtilityTables:
    """Vectorized utility tables for one realization."""
    sensing = build_sensing_profile(realization, config)
    sigma2 = config.noise_power
    p_su = config.secondary_power
    power = np.asarray(config.primary_power)
    tx = np.asarray(config.tx_prob)
    f = sensing.false_alarm
    d = sensing.detection

    clean_su = np.log2(1.0 + p_su * realization.h2 / sigma2)
    hit_su = np.log2(1.0 + p_su * realization.h2 / (sigma2 + power * realization.g_cross2))
    u_su = (1.0 - tx) * (1.0 - f) * clean_su + tx * (1.0 - d) * hit_su

    rx = power * realization.g2  # (L,) received PU power at its own receiver
    clean_pu = np.log2(1.0 + rx / sigma2)
    hit_pu = np.log2(1.0 + rx / (sigma2 + p_su * realization.h_cross2))
    u_pu = (tx * (d * clean_pu + (1.0 - d) * hit_pu)).T  # (L, K)

    u_pu_free = tx * clean_pu
    u_pu_self = np.minimum(np.asarray(config.qos_thresholds, dtype=float), u_pu_free)
    return UtilityTables(u_su=u_su, u_pu=u_pu, u_pu_free=u_pu_free, u_pu_self=u_pu_self)
