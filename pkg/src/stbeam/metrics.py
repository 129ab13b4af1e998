"""Rate evaluation: SINR, spectral efficiency and closed-form baselines.

All rates are in bits/s/Hz.  Repetition coding over ``m`` slots pays a
1/m pre-log penalty and accumulates noise to ``m * sigma^2`` after the
receiver sums its m observations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * np.log10(watts) + 30.0


def noise_power_w(density_dbm_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power over a bandwidth from a density in dBm/Hz."""
    return dbm_to_watts(density_dbm_hz) * bandwidth_hz


@dataclass(frozen=True)
class PowerConfig:
    """Transmit power, combined noise power and CSIT error variance."""

    tx_power_w: float
    noise_w: float
    csit_error_var: float = 0.0

    def __post_init__(self):
        if self.tx_power_w <= 0:
            raise ValueError("tx_power_w must be positive")
        if self.noise_w < 0 or self.csit_error_var < 0:
            raise ValueError("noise and error variances must be nonnegative")

    @property
    def noise_over_power(self) -> float:
        return self.noise_w / self.tx_power_w


@dataclass
class RateReport:
    """Per-user SINRs and spectral efficiencies for one realization."""

    per_user_sinr: np.ndarray
    per_user_se: np.ndarray
    sum_se: float
    m_used: int

    @classmethod
    def from_sinrs(cls, sinrs, m: int) -> "RateReport":
        sinrs = np.asarray(sinrs, dtype=np.float64)
        se = np.array([spectral_efficiency(s, m) for s in sinrs])
        return cls(sinrs, se, float(se.sum()), m)


def _vectors(precoders) -> list:
    return [np.asarray(getattr(f, "vector", f)) for f in precoders]


def sinr(user_k: int, all_channels, all_precoders, power: PowerConfig,
         m: int) -> float:
    """Signal-to-interference-plus-noise ratio at one user.

    ``all_channels[k][l]`` is the space-time channel from transmitter l to
    user k, built at transmitter l's repetition interval; interference is
    always evaluated with these (true) channels even when the precoders
    came from estimates.
    """
    channels = np.asarray(all_channels)
    precoders = _vectors(all_precoders)
    k_users = channels.shape[0]
    if channels.shape[1] != k_users or len(precoders) != k_users:
        raise ValueError("need a K x K channel matrix and K precoders")
    for f in precoders:
        if f.shape != channels.shape[2:]:
            raise ValueError("precoder/channel dimension mismatch")
    p = power.tx_power_w
    signal = abs(np.vdot(channels[user_k, user_k], precoders[user_k])) ** 2 * p
    interf = sum(abs(np.vdot(channels[user_k, l], precoders[l])) ** 2 * p
                 for l in range(k_users) if l != user_k)
    return signal / (interf + m * power.noise_w)


def spectral_efficiency(sinr_value: float, m: int) -> float:
    """(1/m) log2(1 + SINR); the m = 0 sentinel maps to rate 0."""
    if m == 0:
        return 0.0
    if m < 0 or sinr_value < 0:
        raise ValueError("need sinr >= 0 and m >= 0")
    return float(np.log2(1.0 + sinr_value)) / m


def tdma_partial_sum_se(per_user_snr_linear) -> float:
    """Two-group schedule: every user served half the time at full power."""
    snrs = np.asarray(per_user_snr_linear, dtype=np.float64)
    return float(0.5 * np.log2(1.0 + snrs).sum())


def st_zf_sum_se_closed_form(per_user_snr_linear) -> float:
    """Two orthogonal repetitions double each user's effective SNR."""
    snrs = np.asarray(per_user_snr_linear, dtype=np.float64)
    return float(0.5 * np.log2(1.0 + 2.0 * snrs).sum())


def tdma_full_sum_se(per_user_snr_linear) -> float:
    """One user per slot: pre-log 1/K, no inter-transmitter interference."""
    snrs = np.asarray(per_user_snr_linear, dtype=np.float64)
    return float(np.log2(1.0 + snrs).sum() / snrs.size)
