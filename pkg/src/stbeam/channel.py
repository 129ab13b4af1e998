"""Space-time channel construction for moving-transmitter downlinks.

A link is described by a set of propagation paths (angles of arrival plus
complex attenuations) and one Doppler shift shared by all paths of the
link.  Repeating a symbol ``m`` times at interval ``tau`` stretches the
spatial channel into a length ``m*n`` space-time vector, the Kronecker
product of a temporal steering vector (Doppler phase ramp) and the spatial
channel.  This module also provides the statistical ingredients used by
the Monte Carlo engine: path loss, shadowed-Rician fading power, tap
attenuations and additive channel-estimate corruption.

Angles are radians everywhere; degrees appear only at the config boundary.
All randomness flows through an explicitly passed ``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 3.0e8  # m/s


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array: ``nx`` by ``ny`` elements spaced ``spacing_d``."""

    nx: int
    ny: int
    spacing_d: float    # meters
    wavelength: float   # meters

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("element counts must be >= 1")
        if self.spacing_d <= 0 or self.wavelength <= 0:
            raise ValueError("spacing_d and wavelength must be positive")

    @property
    def n(self) -> int:
        return self.nx * self.ny

    @property
    def aperture_w(self) -> float:
        """Physical aperture size: largest element span along one axis."""
        return max(self.nx - 1, self.ny - 1) * self.spacing_d

    @classmethod
    def square(cls, side: int, carrier_hz: float,
               spacing_wavelengths: float = 0.5) -> "ArrayGeometry":
        lam = SPEED_OF_LIGHT / carrier_hz
        return cls(side, side, spacing_wavelengths * lam, lam)


@dataclass(frozen=True)
class PathParams:
    """One propagation path: arrival angles, complex gain and tap index."""

    zenith: float       # radians, in [0, pi/2]
    azimuth: float      # radians, in [-pi, pi]
    attenuation: complex
    tap_index: int = 1

    def __post_init__(self):
        if not 0.0 <= self.zenith <= np.pi / 2:
            raise ValueError("zenith must lie in [0, pi/2]")
        if not -np.pi <= self.azimuth <= np.pi:
            raise ValueError("azimuth must lie in [-pi, pi]")
        if self.tap_index < 1:
            raise ValueError("tap_index is 1-based")


@dataclass(frozen=True)
class PathSet:
    """All paths of one link plus the link Doppler shared across them."""

    paths: tuple
    doppler_hz: float
    rel_velocity: float | None = None

    def __post_init__(self):
        if len(self.paths) == 0:
            raise ValueError("a link needs at least one path")
        object.__setattr__(self, "paths", tuple(self.paths))

    @property
    def num_paths(self) -> int:
        return len(self.paths)

    @classmethod
    def from_velocity(cls, paths, rel_velocity: float,
                      wavelength: float) -> "PathSet":
        """Build with the Doppler implied by a line-of-sight velocity."""
        return cls(tuple(paths), rel_velocity / wavelength, rel_velocity)


@dataclass(frozen=True)
class TimingConfig:
    """Repetition count and interval; the interval is a grid multiple."""

    repetitions: int            # m >= 1
    sample_period_s: float      # 1 / bandwidth
    interval_multiplier: int    # r >= 1, interval = r * sample period

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.sample_period_s <= 0:
            raise ValueError("sample_period_s must be positive")
        if self.interval_multiplier < 1:
            raise ValueError("interval_multiplier must be >= 1")

    @property
    def interval_s(self) -> float:
        return self.interval_multiplier * self.sample_period_s

    @classmethod
    def from_bandwidth(cls, repetitions: int, bandwidth_hz: float,
                       interval_multiplier: int = 1) -> "TimingConfig":
        return cls(repetitions, 1.0 / bandwidth_hz, interval_multiplier)


@dataclass
class SpaceTimeChannel:
    """Length ``m*n`` channel over ``m`` repetitions at interval ``tau_s``."""

    vector: np.ndarray
    m: int
    tau_s: float
    n: int

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.complex128)
        if self.vector.shape != (self.m * self.n,):
            raise ValueError("vector length must equal m * n")

    @property
    def norm_sq(self) -> float:
        return float(np.real(np.vdot(self.vector, self.vector)))


@dataclass(frozen=True)
class FadingConfig:
    """Shadowed-Rician fading, tap decay and path-loss parameters.

    Defaults are the average-shadowing land-mobile-satellite parameters
    (scatter half-power b, Nakagami order m, line-of-sight power omega).
    """

    sr_b: float = 0.126
    sr_m: float = 10.1
    sr_omega: float = 0.835
    tap_gain_delta: float = 0.5
    pathloss_exponent: float = 2.0
    carrier_hz: float = 1.9925e9

    def __post_init__(self):
        if self.sr_b <= 0 or self.sr_m <= 0 or self.sr_omega < 0:
            raise ValueError("invalid shadowed-Rician parameters")
        if not 0.0 < self.tap_gain_delta < 1.0:
            raise ValueError("tap_gain_delta must lie in (0, 1)")
        if self.pathloss_exponent <= 0:
            raise ValueError("pathloss_exponent must be positive")

    @property
    def mean_power(self) -> float:
        """Average fading power 2b + omega."""
        return 2.0 * self.sr_b + self.sr_omega


@dataclass
class CsitError:
    """Additive estimation error on a stacked space-time channel."""

    variance: float
    error_vector: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# steering vectors and channels
# ---------------------------------------------------------------------------

def steering_1d(u: float, count: int, spacing_d: float,
                wavelength: float) -> np.ndarray:
    """Uniform linear phase ramp for direction cosine ``u``.

    Entry q equals exp(-j * 2*pi/wavelength * q * spacing_d * u).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if spacing_d <= 0 or wavelength <= 0:
        raise ValueError("spacing_d and wavelength must be positive")
    q = np.arange(count)
    return np.exp(-2j * np.pi / wavelength * spacing_d * u * q)


def upa_response(zenith: float, azimuth: float,
                 geometry: ArrayGeometry) -> np.ndarray:
    """Planar-array response, Kronecker product of two axis ramps."""
    ux = np.sin(zenith) * np.cos(azimuth)
    uy = np.sin(zenith) * np.sin(azimuth)
    ax = steering_1d(ux, geometry.nx, geometry.spacing_d, geometry.wavelength)
    ay = steering_1d(uy, geometry.ny, geometry.spacing_d, geometry.wavelength)
    return np.kron(ax, ay)


def temporal_steering(doppler_hz: float, tau_s: float, m: int) -> np.ndarray:
    """Doppler phase ramp over ``m`` repetitions at interval ``tau_s``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    q = np.arange(m)
    return np.exp(-2j * np.pi * q * doppler_hz * tau_s)


def spatial_channel(path_set: PathSet, geometry: ArrayGeometry) -> np.ndarray:
    """Superpose path responses weighted by their attenuations."""
    if path_set.num_paths == 0:
        raise ValueError("empty path list")
    h = np.zeros(geometry.n, dtype=np.complex128)
    for p in path_set.paths:
        h += p.attenuation * upa_response(p.zenith, p.azimuth, geometry)
    return h


def space_time_channel(spatial: np.ndarray, doppler_hz: float,
                       timing: TimingConfig) -> SpaceTimeChannel:
    """Stack ``m`` Doppler-rotated copies of the spatial channel."""
    spatial = np.asarray(spatial, dtype=np.complex128)
    b = temporal_steering(doppler_hz, timing.interval_s, timing.repetitions)
    return SpaceTimeChannel(np.kron(b, spatial), timing.repetitions,
                            timing.interval_s, spatial.size)


def virtual_aperture(geometry: ArrayGeometry, m: int, tau_s: float,
                     rel_velocity: float) -> float:
    """Effective aperture synthesized by transmitter motion between repeats."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return geometry.aperture_w + (m - 1) * tau_s * rel_velocity


# ---------------------------------------------------------------------------
# large-scale statistics
# ---------------------------------------------------------------------------

def path_loss(distance_m: float, carrier_hz: float, alpha: float) -> float:
    """Free-space style power gain (c / (4 pi f d))^alpha."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    return (SPEED_OF_LIGHT / (4.0 * np.pi * carrier_hz * distance_m)) ** alpha


def shadowed_rician_sample(fading: FadingConfig,
                           rng: np.random.Generator, size=None):
    """Draw fading power H with mean 2b + omega.

    The line-of-sight amplitude is Nakagami (power omega/m * Gamma(m, 1)),
    the scatter term complex Gaussian with per-dimension variance b; H is
    the squared magnitude of their sum.
    """
    los = np.sqrt(fading.sr_omega / fading.sr_m
                  * rng.gamma(fading.sr_m, 1.0, size=size))
    sb = np.sqrt(fading.sr_b)
    re = los + sb * rng.standard_normal(size=size)
    im = sb * rng.standard_normal(size=size)
    return re * re + im * im


def path_attenuation(tap_index: int, delta: float, pathloss_d: float,
                     fading_h: float, rng: np.random.Generator) -> complex:
    """Tap gain delta^(i-1) * sqrt(D * H) with a uniform random phase."""
    if tap_index < 1:
        raise ValueError("tap_index is 1-based")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    mag = delta ** (tap_index - 1) * np.sqrt(pathloss_d * fading_h)
    return mag * np.exp(2j * np.pi * rng.uniform())


def complex_gaussian(rng: np.random.Generator, size, variance: float):
    """Circularly symmetric complex Gaussian, total variance per entry."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def corrupt_csit(true_channel: SpaceTimeChannel, variance: float,
                 rng: np.random.Generator):
    """Model imperfect transmitter CSI: estimate = true - error.

    The error entries are IID complex Gaussian with the given total
    variance per entry.  The defining identity estimate = true - error
    holds bit-exactly as computed; the rearranged sum estimate + error
    reconstructs the true channel to within one rounding step.
    """
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    err = complex_gaussian(rng, true_channel.vector.shape, variance)
    est = SpaceTimeChannel(true_channel.vector - err, true_channel.m,
                           true_channel.tau_s, true_channel.n)
    return est, CsitError(variance, err)
