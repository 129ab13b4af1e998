"""Network geometry sampling and the seeded Monte Carlo engine.

A trial is one snapshot of the network: satellite/user positions, link
arrival angles with their per-trial jitters, per-link Doppler shifts and
multipath attenuations.  Every random draw comes from a stream keyed by
``(seed, trial, purpose, link)``, so a trial is fully determined by the
seed and its index regardless of execution order or worker count.

Topologies: ``partial`` wires satellite k to interfere only its ring
neighbour, with the two outgoing links of a satellite sharing arrival
angles (co-located users seen under one beam); ``full`` lets every
transmitter reach every user with independently jittered angles.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import beamform, metrics
from .channel import (ArrayGeometry, FadingConfig, PathParams, PathSet,
                      SpaceTimeChannel, complex_gaussian, path_attenuation,
                      path_loss, shadowed_rician_sample, spatial_channel,
                      temporal_steering)

SCHEMES = ("MRT", "ZF", "SLNR", "TDMA", "ST-ZF", "ST-SLNR",
           "ST-SLNR-imperfect")
TOPOLOGIES = ("partial", "full")


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment's network, link-budget and sampling parameters."""

    k_users: int = 3
    topology: str = "partial"
    scheme: str = "ST-ZF"
    # planar array and carrier
    nx: int = 8
    ny: int = 8
    spacing_wavelengths: float = 0.5
    carrier_hz: float = 1.9925e9
    bandwidth_hz: float = 5.0e6
    # link budget
    tx_power_dbm: float = 40.0
    noise_density_dbm_hz: float = -174.0
    pathloss_exponent: float = 2.0
    # constellation geometry
    altitude_m: float = 530.0e3
    earth_radius_m: float = 6371.0e3
    ref_azimuth_deg: float = 10.0
    ref_zenith_deg: float = 5.0
    sat_spacing_deg: float = 2.0
    angle_jitter_deg: float = 1.0
    user_disc_radius_m: float = 5.0e3
    # multipath fading
    num_paths: int = 3
    tap_gain_delta: float = 0.5
    sr_b: float = 0.126
    sr_m: float = 10.1
    sr_omega: float = 0.835
    # Doppler and repetition-interval search
    doppler_max_hz: float = 50.0e3
    r_max: int = 500
    m_max: int = 8
    fixed_m: int | None = None
    # CSIT error power relative to the per-entry channel power
    csit_error_ratio: float = 0.01
    # Monte Carlo
    trials: int = 2000
    seed: int = 1

    def __post_init__(self):
        if self.k_users < 1 or self.trials < 1 or self.num_paths < 1:
            raise ValueError("k_users, trials and num_paths must be >= 1")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.doppler_max_hz <= 0:
            raise ValueError("doppler_max_hz must be positive")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.fixed_m is not None and self.fixed_m < 1:
            raise ValueError("fixed_m must be >= 1")
        if self.csit_error_ratio < 0:
            raise ValueError("csit_error_ratio must be nonnegative")

    def geometry(self) -> ArrayGeometry:
        lam = 3.0e8 / self.carrier_hz
        return ArrayGeometry(self.nx, self.ny,
                             self.spacing_wavelengths * lam, lam)

    def fading(self) -> FadingConfig:
        return FadingConfig(self.sr_b, self.sr_m, self.sr_omega,
                            self.tap_gain_delta, self.pathloss_exponent,
                            self.carrier_hz)

    def power(self) -> metrics.PowerConfig:
        return metrics.PowerConfig(
            metrics.dbm_to_watts(self.tx_power_dbm),
            metrics.noise_power_w(self.noise_density_dbm_hz,
                                  self.bandwidth_hz))

    @property
    def sample_period_s(self) -> float:
        return 1.0 / self.bandwidth_hz

    def digest(self) -> str:
        return hashlib.sha256(repr(self).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class Topology:
    """Interference wiring: which transmitter reaches which victim."""

    kind: str
    k_users: int
    edges: tuple  # (transmitter, victim user) pairs

    def victims_of(self, sat: int):
        return [u for s, u in self.edges if s == sat]

    def interferers_of(self, user: int):
        return [s for s, u in self.edges if u == user]


def build_topology(kind: str, k_users: int) -> Topology:
    if kind == "partial":
        edges = tuple((s, (s + 1) % k_users) for s in range(k_users)
                      if k_users > 1)
    elif kind == "full":
        edges = tuple((s, u) for s in range(k_users)
                      for u in range(k_users) if s != u)
    else:
        raise ValueError(f"unknown topology {kind!r}")
    return Topology(kind, k_users, edges)


@dataclass
class TrialRealization:
    """Sampled channels and positions for one Monte Carlo snapshot."""

    path_sets: np.ndarray          # (K, K) object array, [user, sat], or None
    spatial: np.ndarray            # (K, K, N) spatial channels, zero if weak
    doppler_hz: np.ndarray         # (K, K) link Doppler [user, sat]
    link_active: np.ndarray        # (K, K) bool
    user_positions: np.ndarray     # (K, 3) meters
    sat_positions: np.ndarray      # (K, 3) meters
    seed_stream_id: tuple = ()


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng(list(key))


def _direction(zenith_rad: float, azimuth_rad: float) -> np.ndarray:
    s = np.sin(zenith_rad)
    return np.array([s * np.cos(azimuth_rad), s * np.sin(azimuth_rad),
                     np.cos(zenith_rad)])


def sample_geometry(config: ScenarioConfig,
                    trial_index: int) -> TrialRealization:
    """Draw one network snapshot from the trial's dedicated streams."""
    k = config.k_users
    geom = config.geometry()
    fading = config.fading()
    topo = build_topology(config.topology, k)
    jit = np.deg2rad(config.angle_jitter_deg)

    trial_rng = _rng(config.seed, trial_index, 0)
    radius = config.user_disc_radius_m * np.sqrt(trial_rng.uniform(size=k))
    angle = trial_rng.uniform(0.0, 2.0 * np.pi, size=k)
    ux, uy = radius * np.cos(angle), radius * np.sin(angle)
    user_pos = np.column_stack(
        [ux, uy, np.sqrt(config.earth_radius_m ** 2 - ux ** 2 - uy ** 2)])

    # satellites sit on the altitude shell along the reference direction
    # seen from the user cluster, so the link range is close to the
    # altitude and the arrival zenith matches the reference zenith
    ref_point = np.array([0.0, 0.0, config.earth_radius_m])
    shell = config.earth_radius_m + config.altitude_m
    sat_pos = np.empty((k, 3))
    for s in range(k):
        az = np.deg2rad(config.ref_azimuth_deg + config.sat_spacing_deg * s)
        zen = np.deg2rad(config.ref_zenith_deg)
        d_hat = _direction(zen, az)
        proj = float(np.dot(ref_point, d_hat))
        slant = -proj + np.sqrt(proj ** 2 + shell ** 2
                                - config.earth_radius_m ** 2)
        sat_pos[s] = ref_point + slant * d_hat

    active = np.zeros((k, k), dtype=bool)
    for u in range(k):
        active[u, u] = True
    for s, u in topo.edges:
        active[u, s] = True

    path_sets = np.empty((k, k), dtype=object)
    spatial = np.zeros((k, k, geom.n), dtype=np.complex128)
    doppler = np.zeros((k, k))
    n_paths = config.num_paths
    for s in range(k):
        # partial topology: one angle draw per satellite, shared by both of
        # its outgoing links (aligned arrival angles toward co-located users)
        shared_key = (config.seed, trial_index, 3, s)
        for u in range(k):
            if not active[u, s]:
                continue
            if config.topology == "partial":
                arng = _rng(*shared_key)
            else:
                arng = _rng(config.seed, trial_index, 3, s, u)
            zen0 = np.deg2rad(config.ref_zenith_deg) \
                + arng.uniform(-jit, jit)
            az0 = np.deg2rad(config.ref_azimuth_deg
                             + config.sat_spacing_deg * s) \
                + arng.uniform(-jit, jit)
            devs = arng.uniform(-jit, jit, size=(n_paths - 1, 2))

            lrng = _rng(config.seed, trial_index, 1, u, s)
            f = lrng.uniform(-config.doppler_max_hz, config.doppler_max_hz)
            dist = float(np.linalg.norm(sat_pos[s] - user_pos[u]))
            d_gain = path_loss(dist, config.carrier_hz,
                               config.pathloss_exponent)
            h_pow = shadowed_rician_sample(fading, lrng, size=n_paths)
            paths = []
            for i in range(n_paths):
                zen = zen0 if i == 0 else zen0 + devs[i - 1, 0]
                az = az0 if i == 0 else az0 + devs[i - 1, 1]
                beta = path_attenuation(i + 1, config.tap_gain_delta,
                                        d_gain, h_pow[i], lrng)
                paths.append(PathParams(zen, az, beta, i + 1))
            ps = PathSet(tuple(paths), f)
            path_sets[u, s] = ps
            spatial[u, s] = spatial_channel(ps, geom)
            doppler[u, s] = f

    return TrialRealization(path_sets, spatial, doppler, active, user_pos,
                            sat_pos, (config.seed, trial_index))


# ---------------------------------------------------------------------------
# per-trial scheme evaluation
# ---------------------------------------------------------------------------

def _spatial_as_channel(vec: np.ndarray) -> SpaceTimeChannel:
    return SpaceTimeChannel(vec, 1, 0.0, vec.size)


def _mrt_snrs(real: TrialRealization, power: metrics.PowerConfig):
    k = real.spatial.shape[0]
    return [float(np.linalg.norm(real.spatial[u, u]) ** 2)
            * power.tx_power_w / power.noise_w for u in range(k)]


def _csit_errors(config: ScenarioConfig, real: TrialRealization,
                 trial_index: int, sat: int):
    """Per-slot estimation-error blocks for one satellite's links.

    The per-link error variance is ``csit_error_ratio`` times that link's
    average per-entry channel power, so the estimation quality tracks the
    link strength instead of an absolute unit convention.
    """
    k, n = real.spatial.shape[0], real.spatial.shape[2]
    blocks = np.zeros((config.m_max, n, k), dtype=np.complex128)
    var_sum = 0.0
    for u in range(k):
        if not real.link_active[u, sat]:
            continue
        var = config.csit_error_ratio \
            * float(np.linalg.norm(real.spatial[u, sat]) ** 2) / n
        erng = _rng(config.seed, trial_index, 2, u, sat)
        blocks[:, :, u] = complex_gaussian(erng, (config.m_max, n), var)
        var_sum += var
    return blocks, var_sum


def _run_spatial(real, scheme, config, topo, power):
    k = config.k_users
    precoders = []
    for s in range(k):
        desired = _spatial_as_channel(real.spatial[s, s])
        victims = [real.spatial[u, s] for u in topo.victims_of(s)]
        if scheme == "MRT":
            precoders.append(beamform.mrt(desired))
        elif scheme == "ZF":
            precoders.append(beamform.zf_project(desired, victims))
        else:  # SLNR
            leak = np.column_stack(victims) if victims else None
            precoders.append(beamform.slnr_precoder(
                desired, leak, power.noise_over_power, 1))
    channels = real.spatial  # (K, K, N) with zeros on weak links
    sinrs = [metrics.sinr(u, channels, precoders, power, 1)
             for u in range(k)]
    return metrics.RateReport.from_sinrs(sinrs, 1)


def _run_tdma(real, config, power):
    snrs = _mrt_snrs(real, power)
    m_sched = 2 if config.topology == "partial" else config.k_users
    se = [metrics.spectral_efficiency(s, m_sched) for s in snrs]
    return metrics.RateReport(np.asarray(snrs), np.asarray(se),
                              float(np.sum(se)), m_sched)


def _run_st_zf(real, config, topo, power):
    if config.topology != "partial":
        raise ValueError("ST-ZF applies to the partial topology only")
    k = config.k_users
    n = real.spatial.shape[2]
    precoders = []
    taus = np.zeros(k)
    for s in range(k):
        victims = topo.victims_of(s)
        if not victims:
            taus[s] = config.sample_period_s
            b = temporal_steering(real.doppler_hz[s, s], taus[s], 2)
            precoders.append(beamform.mrt(SpaceTimeChannel(
                np.kron(b, real.spatial[s, s]), 2, taus[s], n)))
            continue
        v = victims[0]
        df = real.doppler_hz[s, s] - real.doppler_hz[v, s]
        if df == 0.0:
            taus[s] = config.sample_period_s
            precoders.append(beamform.Beamformer.zero(2 * n, 2))
            continue
        taus[s] = beamform.st_zf_interval(real.doppler_hz[s, s],
                                          real.doppler_hz[v, s]).tau_s
        desired = SpaceTimeChannel(
            np.kron(temporal_steering(real.doppler_hz[s, s], taus[s], 2),
                    real.spatial[s, s]), 2, taus[s], n)
        interferer = SpaceTimeChannel(
            np.kron(temporal_steering(real.doppler_hz[v, s], taus[s], 2),
                    real.spatial[v, s]), 2, taus[s], n)
        precoders.append(beamform.st_zf(desired, interferer))
    channels = _stacked_channels(real, 2, taus)
    sinrs = [metrics.sinr(u, channels, precoders, power, 2)
             for u in range(k)]
    return metrics.RateReport.from_sinrs(sinrs, 2)


def _stacked_channels(real: TrialRealization, m: int, taus) -> np.ndarray:
    """True space-time channels H[user, sat] at each transmitter's tau."""
    k, n = real.spatial.shape[0], real.spatial.shape[2]
    channels = np.zeros((k, k, m * n), dtype=np.complex128)
    for s in range(k):
        for u in range(k):
            if not real.link_active[u, s]:
                continue
            b = temporal_steering(real.doppler_hz[u, s], taus[s], m)
            channels[u, s] = np.kron(b, real.spatial[u, s])
    return channels


def _run_st_slnr(real, config, power, trial_index, imperfect):
    k = config.k_users
    csit = []
    for s in range(k):
        if imperfect and config.csit_error_ratio > 0:
            errors, var_sum = _csit_errors(config, real, trial_index, s)
        else:
            errors, var_sum = None, 0.0
        csit.append(beamform.SatelliteCsit(
            real.spatial[:, s, :].T.copy(), real.doppler_hz[:, s].copy(),
            serves=s, errors=errors, error_var_sum=var_sum))
    cfg = beamform.StSlnrConfig(config.sample_period_s, power.tx_power_w,
                                power.noise_w, config.r_max, config.m_max,
                                config.fixed_m)
    sol = beamform.st_slnr_algorithm(csit, cfg)
    channels = _stacked_channels(real, sol.chosen_m, sol.per_satellite_tau)
    sinrs = [metrics.sinr(u, channels, sol.per_satellite_precoder, power,
                          sol.chosen_m) for u in range(k)]
    return metrics.RateReport.from_sinrs(sinrs, sol.chosen_m)


def run_trial(realization: TrialRealization, scheme: str,
              config: ScenarioConfig, trial_index: int = 0):
    """Evaluate one scheme on one sampled network snapshot."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    topo = build_topology(config.topology, config.k_users)
    power = config.power()
    if scheme == "TDMA":
        return _run_tdma(realization, config, power)
    if scheme in ("MRT", "ZF", "SLNR"):
        return _run_spatial(realization, scheme, config, topo, power)
    if scheme == "ST-ZF":
        return _run_st_zf(realization, config, topo, power)
    return _run_st_slnr(realization, config, power, trial_index,
                        imperfect=(scheme == "ST-SLNR-imperfect"))


# ---------------------------------------------------------------------------
# Monte Carlo engine
# ---------------------------------------------------------------------------

@dataclass
class ErgodicResult:
    """Mean sum spectral efficiency over independent trials."""

    mean_sum_se: float
    std_error: float
    per_trial_values: np.ndarray
    scheme: str
    config_digest: str


def _trial_sum_se(config: ScenarioConfig, trial_index: int) -> float:
    real = sample_geometry(config, trial_index)
    return run_trial(real, config.scheme, config, trial_index).sum_se


def _trial_chunk(config: ScenarioConfig, start: int, stop: int):
    return [_trial_sum_se(config, t) for t in range(start, stop)]


def monte_carlo(config: ScenarioConfig, threads: int = 1) -> ErgodicResult:
    """Average the configured scheme over seeded independent trials.

    The result is bit-identical for a fixed (seed, config) regardless of
    ``threads``: trial t draws only from streams keyed by (seed, t), and
    the reduction uses exact compensated summation in trial order.
    """
    n = config.trials
    if threads <= 1 or n < 4:
        values = _trial_chunk(config, 0, n)
    else:
        workers = min(threads, n)
        bounds = np.linspace(0, n, workers + 1, dtype=int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = pool.map(_trial_chunk, [config] * workers,
                              bounds[:-1], bounds[1:])
            values = [v for chunk in chunks for v in chunk]
    arr = np.asarray(values)
    mean = math.fsum(values) / n
    if n > 1:
        var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
        stderr = math.sqrt(var / n)
    else:
        stderr = float("nan")
    return ErgodicResult(mean, stderr, arr, config.scheme, config.digest())
