"""TLE ingestion, orbit propagation and Doppler feasibility maps.

Catalog records arrive as standard two-line element sets (optionally with
a leading name line).  Propagation defaults to two-body motion from the
TLE mean elements plus sidereal Earth rotation, which is plenty for
velocity and Doppler ranges over short horizons; ``method="sgp4"`` hooks
in the full perturbation model when the ``sgp4`` package is installed.

Sign convention: relative velocity is the satellite's velocity projected
on the satellite-to-user direction, so an approaching satellite gives a
positive value and a positive Doppler shift f = v / wavelength.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

EARTH_MU = 3.986004418e14          # m^3/s^2
EARTH_RADIUS_M = 6371.0e3          # spherical model, matches the simulator
SIDEREAL_RATE = 7.2921159e-5       # rad/s
SECONDS_PER_DAY = 86400.0
LEO_ALTITUDE_BAND_M = (150.0e3, 2500.0e3)
FEASIBLE_INTERVAL_CAP_S = 100e-6
J2000 = datetime(2000, 1, 1, 12, 0, 0, tzinfo=timezone.utc)


class TleParseError(ValueError):
    """A TLE group failed structural or checksum validation."""


class StaleEphemerisError(ValueError):
    """Propagation requested too far from the record epoch."""


@dataclass(frozen=True)
class TleRecord:
    """Mean orbital elements decoded from one catalog entry."""

    name: str
    catalog_number: int
    epoch: datetime
    inclination_deg: float
    raan_deg: float
    eccentricity: float
    arg_perigee_deg: float
    mean_anomaly_deg: float
    mean_motion_rev_day: float
    checksum_ok: bool = True
    line1: str = ""
    line2: str = ""

    def __post_init__(self):
        if not 0.0 <= self.eccentricity < 1.0:
            raise ValueError("eccentricity must lie in [0, 1)")
        if self.mean_motion_rev_day <= 0:
            raise ValueError("mean motion must be positive")


@dataclass
class SatState:
    """Earth-fixed position and velocity at one instant."""

    position: np.ndarray       # ECEF meters
    velocity: np.ndarray       # ECEF m/s
    epoch_offset_s: float


@dataclass(frozen=True)
class FeasibilityCell:
    """Doppler offset and retransmission interval at one grid point."""

    lat_deg: float
    lon_deg: float
    rel_velocity_mps: float
    doppler_hz: float
    delta_f_hz: float
    retx_interval_s: float
    feasible: bool


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def line_checksum(line: str) -> int:
    """Modulo-10 checksum: digits count as themselves, '-' counts as 1."""
    total = 0
    for c in line[:68]:
        if c in string.digits:
            total += int(c)
        elif c == "-":
            total += 1
    return total % 10


def _check_line(line: str, which: int, lineno: int):
    if len(line) != 69:
        raise TleParseError(
            f"line {lineno}: length {len(line)}, TLE lines must be 69 chars")
    if line[0] != str(which):
        raise TleParseError(
            f"line {lineno}: expected line number {which}, got {line[0]!r}")
    expected = line[68]
    if not expected.isdigit():
        raise TleParseError(f"line {lineno}: checksum column is not a digit")
    if line_checksum(line) != int(expected):
        raise TleParseError(
            f"line {lineno}: checksum mismatch "
            f"(computed {line_checksum(line)}, stated {expected})")


def _parse_epoch(field: str) -> datetime:
    year = int(field[:2])
    year += 2000 if year < 57 else 1900
    day = float(field[2:])
    return (datetime(year, 1, 1, tzinfo=timezone.utc)
            + timedelta(days=day - 1.0))


def _decode(name: str, line1: str, line2: str,
            checksum_ok: bool) -> TleRecord:
    try:
        return TleRecord(
            name=name.strip(),
            catalog_number=int(line1[2:7]),
            epoch=_parse_epoch(line1[18:32]),
            inclination_deg=float(line2[8:16]),
            raan_deg=float(line2[17:25]),
            eccentricity=float("0." + line2[26:33].strip()),
            arg_perigee_deg=float(line2[34:42]),
            mean_anomaly_deg=float(line2[43:51]),
            mean_motion_rev_day=float(line2[52:63]),
            checksum_ok=checksum_ok,
            line1=line1,
            line2=line2,
        )
    except (ValueError, IndexError) as exc:
        if isinstance(exc, TleParseError):
            raise
        raise TleParseError(f"unparseable element fields: {exc}") from exc


@dataclass
class TleParseResult:
    records: list
    errors: list  # messages carrying 1-based line numbers


def parse_tle(text: str, *, skip_invalid: bool = False,
              verify_checksums: bool = True) -> TleParseResult:
    """Parse 2- or 3-line TLE groups from catalog text.

    With ``skip_invalid`` bad groups are collected into ``errors`` (one
    message per group, naming the offending line); otherwise the first
    bad group raises :class:`TleParseError`.  ``verify_checksums=False``
    keeps records whose checksum fails, flagged via ``checksum_ok``.
    """
    lines = [(i + 1, ln.rstrip("\r\n")) for i, ln in
             enumerate(text.splitlines())]
    lines = [(no, ln) for no, ln in lines if ln.strip()]
    records, errors = [], []
    i = 0
    while i < len(lines):
        no, ln = lines[i]
        if ln.startswith("1 ") and len(ln) == 69:
            name, group = "", lines[i:i + 2]
            i += 2
        else:
            name = ln
            group = lines[i + 1:i + 3]
            i += 3
        try:
            if len(group) < 2:
                raise TleParseError(f"line {no}: truncated TLE group")
            (no1, l1), (no2, l2) = group
            checksum_ok = True
            try:
                _check_line(l1, 1, no1)
                _check_line(l2, 2, no2)
            except TleParseError:
                if verify_checksums:
                    raise
                checksum_ok = False
            if l1[2:7] != l2[2:7]:
                raise TleParseError(
                    f"line {no2}: catalog number differs from line {no1}")
            records.append(_decode(name or l1[2:7], l1, l2, checksum_ok))
        except TleParseError as exc:
            if not skip_invalid:
                raise
            errors.append(str(exc))
    return TleParseResult(records, errors)


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def _solve_kepler(mean_anomaly: float, ecc: float) -> float:
    e_anom = mean_anomaly if ecc < 0.8 else np.pi
    for _ in range(32):
        delta = (e_anom - ecc * np.sin(e_anom) - mean_anomaly) \
            / (1.0 - ecc * np.cos(e_anom))
        e_anom -= delta
        if abs(delta) < 1e-14:
            break
    return e_anom


def _rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def earth_rotation_angle(t: datetime) -> float:
    """Earth rotation angle (radians) from days since the J2000 epoch."""
    days = (t - J2000).total_seconds() / SECONDS_PER_DAY
    turns = 0.7790572732640 + 1.00273781191135448 * days
    return 2.0 * np.pi * (turns % 1.0)


def propagate_eci(record: TleRecord, t: datetime):
    """Two-body inertial state from the TLE mean elements."""
    dt = (t - record.epoch).total_seconds()
    n = record.mean_motion_rev_day * 2.0 * np.pi / SECONDS_PER_DAY
    a = (EARTH_MU / n ** 2) ** (1.0 / 3.0)
    ecc = record.eccentricity
    mean_anom = np.deg2rad(record.mean_anomaly_deg) + n * dt
    e_anom = _solve_kepler(np.mod(mean_anom, 2.0 * np.pi), ecc)
    cos_e, sin_e = np.cos(e_anom), np.sin(e_anom)
    r = a * (1.0 - ecc * cos_e)
    # perifocal position/velocity
    pos_pf = np.array([a * (cos_e - ecc), a * np.sqrt(1 - ecc ** 2) * sin_e,
                       0.0])
    fac = np.sqrt(EARTH_MU * a) / r
    vel_pf = fac * np.array([-sin_e, np.sqrt(1 - ecc ** 2) * cos_e, 0.0])
    rot = _rot_z(np.deg2rad(record.raan_deg)) \
        @ _rot_x(np.deg2rad(record.inclination_deg)) \
        @ _rot_z(np.deg2rad(record.arg_perigee_deg))
    return rot @ pos_pf, rot @ vel_pf


def propagate(record: TleRecord, t: datetime, method: str = "kepler",
              max_age_days: float = 7.0) -> SatState:
    """Earth-fixed satellite state at UTC instant ``t``.

    Propagation farther than ``max_age_days`` from the record epoch
    raises :class:`StaleEphemerisError` (accuracy guard).
    """
    dt = (t - record.epoch).total_seconds()
    if abs(dt) > max_age_days * SECONDS_PER_DAY:
        raise StaleEphemerisError(
            f"instant lies {dt / SECONDS_PER_DAY:+.1f} days from the epoch")
    if method == "kepler":
        pos_eci, vel_eci = propagate_eci(record, t)
    elif method == "sgp4":
        pos_eci, vel_eci = _propagate_sgp4(record, t)
    else:
        raise ValueError(f"unknown propagation method {method!r}")
    theta = earth_rotation_angle(t)
    to_ecef = _rot_z(-theta)
    pos = to_ecef @ pos_eci
    vel = to_ecef @ vel_eci - np.cross([0.0, 0.0, SIDEREAL_RATE], pos)
    return SatState(pos, vel, dt)


def _propagate_sgp4(record: TleRecord, t: datetime):
    try:
        from sgp4.api import Satrec, jday
    except ImportError as exc:
        raise ImportError(
            "method='sgp4' needs the optional sgp4 package") from exc
    sat = Satrec.twoline2rv(record.line1, record.line2)
    jd, fr = jday(t.year, t.month, t.day, t.hour, t.minute,
                  t.second + t.microsecond / 1e6)
    err, pos_km, vel_kms = sat.sgp4(jd, fr)
    if err != 0:
        raise StaleEphemerisError(f"sgp4 error code {err}")
    return np.asarray(pos_km) * 1e3, np.asarray(vel_kms) * 1e3


def inertial_speed(state: SatState) -> float:
    """Magnitude of the inertial velocity recovered from an ECEF state."""
    omega = np.array([0.0, 0.0, SIDEREAL_RATE])
    return float(np.linalg.norm(state.velocity
                                + np.cross(omega, state.position)))


# ---------------------------------------------------------------------------
# geometry on the ground
# ---------------------------------------------------------------------------

def geodetic_to_ecef(lat_deg: float, lon_deg: float) -> np.ndarray:
    """Surface point on the spherical Earth model."""
    lat, lon = np.deg2rad(lat_deg), np.deg2rad(lon_deg)
    return EARTH_RADIUS_M * np.array(
        [np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])


def elevation_deg(state: SatState, user_ecef: np.ndarray) -> float:
    """Elevation of the satellite above the user's local horizon."""
    up = user_ecef / np.linalg.norm(user_ecef)
    los = state.position - user_ecef
    sin_el = np.clip(np.dot(up, los) / np.linalg.norm(los), -1.0, 1.0)
    return float(np.rad2deg(np.arcsin(sin_el)))


def relative_velocity(state: SatState, user_ecef: np.ndarray) -> float:
    """Velocity along the satellite-to-user line of sight (m/s).

    Positive when the satellite approaches the user (negative range
    rate); the user co-rotates with the Earth, hence has zero ECEF
    velocity.
    """
    los = np.asarray(user_ecef, dtype=float) - state.position
    return float(np.dot(state.velocity, los) / np.linalg.norm(los))


def doppler_offset(rel_velocity_mps: float, wavelength_m: float) -> float:
    """Doppler shift f = v / wavelength."""
    if wavelength_m <= 0:
        raise ValueError("wavelength must be positive")
    return rel_velocity_mps / wavelength_m


def feasibility_map(record: TleRecord, t: datetime, user_grid,
                    reference_user, wavelength_m: float,
                    cap_s: float = FEASIBLE_INTERVAL_CAP_S,
                    min_elevation_deg: float | None = None,
                    method: str = "kepler"):
    """Retransmission-interval feasibility across a ground grid.

    ``user_grid`` is an iterable of (lat_deg, lon_deg); the Doppler of
    each cell is offset against the reference user's, and the interval
    1/(2 |delta f|) is flagged feasible when at or below the cap.  Cells
    with zero offset (including the reference cell itself) are
    infeasible.  ``min_elevation_deg`` drops below-horizon cells.
    """
    state = propagate(record, t, method=method)
    ref_ecef = geodetic_to_ecef(*reference_user)
    f_ref = doppler_offset(relative_velocity(state, ref_ecef), wavelength_m)
    cells = []
    for lat, lon in user_grid:
        ecef = geodetic_to_ecef(lat, lon)
        if min_elevation_deg is not None \
                and elevation_deg(state, ecef) < min_elevation_deg:
            continue
        v = relative_velocity(state, ecef)
        f = doppler_offset(v, wavelength_m)
        df = f - f_ref
        if df == 0.0:
            cells.append(FeasibilityCell(lat, lon, v, f, 0.0,
                                         float("inf"), False))
        else:
            tau = 1.0 / (2.0 * abs(df))
            cells.append(FeasibilityCell(lat, lon, v, f, df, tau,
                                         tau <= cap_s))
    return cells


def feasibility_csv_rows(cells):
    """CSV serialization: fixed column order, '.' decimals, one header."""
    yield ("lat_deg,lon_deg,rel_velocity_mps,doppler_hz,delta_f_hz,"
           "retx_interval_us,feasible")
    for c in cells:
        yield (f"{c.lat_deg:.6g},{c.lon_deg:.6g},{c.rel_velocity_mps:.6g},"
               f"{c.doppler_hz:.6g},{c.delta_f_hz:.6g},"
               f"{c.retx_interval_s * 1e6:.6g},"
               f"{'true' if c.feasible else 'false'}")
