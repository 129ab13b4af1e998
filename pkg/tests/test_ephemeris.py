from datetime import timedelta

import numpy as np
import pytest

from conftest import DATA_DIR
from stbeam import ephemeris
from stbeam.ephemeris import (EARTH_MU, EARTH_RADIUS_M, SIDEREAL_RATE,
                              StaleEphemerisError, TleParseError,
                              doppler_offset, elevation_deg,
                              feasibility_csv_rows, feasibility_map,
                              geodetic_to_ecef, inertial_speed,
                              line_checksum, parse_tle, propagate,
                              propagate_eci, relative_velocity)

ISS_TLE = """ISS (ZARYA)
1 25544U 98067A   20151.61686127  .00000168  00000-0  11087-4 0  9992
2 25544  51.6444  75.4313 0002297  11.5525  50.1151 15.49398617229298
"""


def independent_checksum(line: str) -> int:
    """Reference modulo-10 rule, written separately from the parser."""
    total = 0
    for ch in line[:-1]:
        if ch.isdigit():
            total += int(ch)
        if ch == "-":
            total += 1
    return total % 10


def synthetic_leo_record(mean_motion_rev_day=15.05, inclination=53.0,
                         ecc=0.0002):
    """Circular-ish LEO elements without going through text parsing."""
    base = parse_tle(ISS_TLE).records[0]
    from dataclasses import replace
    return replace(base, mean_motion_rev_day=mean_motion_rev_day,
                   inclination_deg=inclination, eccentricity=ecc)


class TestParsing:
    def test_iss_record_fields(self):
        rec = parse_tle(ISS_TLE).records[0]
        assert rec.name == "ISS (ZARYA)"
        assert rec.catalog_number == 25544
        assert 51.0 < rec.inclination_deg < 52.0
        assert rec.epoch.year == 2020
        assert np.isclose(rec.mean_motion_rev_day, 15.49398617)

    def test_two_line_group_without_name(self):
        text = "\n".join(ISS_TLE.splitlines()[1:]) + "\n"
        rec = parse_tle(text).records[0]
        assert rec.name == "25544"

    def test_corrupted_checksum_names_line(self):
        lines = ISS_TLE.splitlines()
        bad = lines[2][:68] + str((int(lines[2][68]) + 1) % 10)
        with pytest.raises(TleParseError, match="line 3"):
            parse_tle("\n".join([lines[0], lines[1], bad]))

    def test_truncated_line_rejected(self):
        lines = ISS_TLE.splitlines()
        with pytest.raises(TleParseError, match="length"):
            parse_tle("\n".join([lines[0], lines[1][:50], lines[2]]))

    def test_skip_mode_collects_errors(self):
        lines = ISS_TLE.splitlines()
        bad = lines[2][:68] + str((int(lines[2][68]) + 1) % 10)
        text = ISS_TLE + "\n".join(["BROKEN", lines[1], bad]) + "\n"
        result = parse_tle(text, skip_invalid=True)
        assert len(result.records) == 1
        assert len(result.errors) == 1

    def test_unverified_mode_flags_checksum(self):
        lines = ISS_TLE.splitlines()
        bad = lines[2][:68] + str((int(lines[2][68]) + 1) % 10)
        text = "\n".join([lines[0], lines[1], bad]) + "\n"
        result = parse_tle(text, verify_checksums=False)
        assert len(result.records) == 1
        assert not result.records[0].checksum_ok

    def test_golden_file_agrees_with_independent_checksum(self):
        text = (DATA_DIR / "golden.tle").read_text()
        lines = [ln for ln in text.splitlines() if ln.strip()]
        groups = [lines[i:i + 3] for i in range(0, len(lines), 3)]
        assert len(groups) >= 50
        expected_ok = [all(independent_checksum(ln) == int(ln[68])
                           for ln in grp[1:]) for grp in groups]
        result = parse_tle(text, skip_invalid=True)
        # zero false accepts and zero false rejects
        assert len(result.records) == sum(expected_ok)
        assert len(result.errors) == len(groups) - sum(expected_ok)
        accepted = {r.name for r in result.records}
        for grp, ok in zip(groups, expected_ok):
            assert (grp[0] in accepted) == ok

    def test_checksum_counts_minus_as_one(self):
        digits_only = "1 11111U 11111A   11111.11111111  .11111111" \
            + " " * 24 + " "
        with_minus = digits_only[:50] + "--" + digits_only[52:]
        assert line_checksum(with_minus + "0") \
            == (line_checksum(digits_only + "0") + 2) % 10
        full = with_minus + str(line_checksum(with_minus + "0"))
        assert line_checksum(full) == independent_checksum(full)


class TestPropagation:
    def test_epoch_radius_in_leo_band(self):
        rec = parse_tle(ISS_TLE).records[0]
        state = propagate(rec, rec.epoch)
        alt = np.linalg.norm(state.position) - EARTH_RADIUS_M
        assert 150e3 < alt < 2500e3

    def test_vis_viva_speed(self):
        rec = synthetic_leo_record(ecc=1e-4)
        state = propagate(rec, rec.epoch + timedelta(seconds=1234.5))
        r = np.linalg.norm(state.position)
        assert np.isclose(inertial_speed(state), np.sqrt(EARTH_MU / r),
                          rtol=0.01)

    def test_orbit_closes_after_one_period(self):
        rec = synthetic_leo_record()
        period = 86400.0 / rec.mean_motion_rev_day
        p0, _ = propagate_eci(rec, rec.epoch)
        p1, _ = propagate_eci(rec, rec.epoch + timedelta(seconds=period))
        assert np.linalg.norm(p1 - p0) < 1e3

    def test_stale_epoch_guard(self):
        rec = parse_tle(ISS_TLE).records[0]
        with pytest.raises(StaleEphemerisError):
            propagate(rec, rec.epoch + timedelta(days=8))

    def test_ecef_velocity_consistent_with_finite_difference(self):
        rec = synthetic_leo_record()
        t = rec.epoch + timedelta(seconds=500.0)
        dt = 1e-3
        a = propagate(rec, t)
        b = propagate(rec, t + timedelta(seconds=dt))
        fd = (b.position - a.position) / dt
        assert np.allclose(fd, a.velocity, rtol=1e-4, atol=1e-3)


class TestRelativeVelocity:
    def test_tangential_pass_near_zero(self):
        state = ephemeris.SatState(
            np.array([0.0, 0.0, EARTH_RADIUS_M + 530e3]),
            np.array([7600.0, 0.0, 0.0]), 0.0)
        user = np.array([0.0, 0.0, EARTH_RADIUS_M])
        assert abs(relative_velocity(state, user)) < 1e-9

    def test_approaching_gives_positive_velocity_and_doppler(self):
        # satellite moving straight down the line of sight toward the user
        user = np.array([0.0, 0.0, EARTH_RADIUS_M])
        state = ephemeris.SatState(
            np.array([0.0, 0.0, EARTH_RADIUS_M + 530e3]),
            np.array([0.0, 0.0, -7600.0]), 0.0)
        v = relative_velocity(state, user)
        assert np.isclose(v, 7600.0)
        assert doppler_offset(v, 0.15) > 0

    def test_antisymmetry_under_direction_flip(self):
        user = np.array([0.0, 0.0, EARTH_RADIUS_M])
        pos = np.array([300e3, -200e3, EARTH_RADIUS_M + 500e3])
        vel = np.array([4000.0, 5000.0, -2000.0])
        a = relative_velocity(ephemeris.SatState(pos, vel, 0.0), user)
        b = relative_velocity(ephemeris.SatState(pos, -vel, 0.0), user)
        assert np.isclose(a, -b, rtol=1e-12)

    def test_matches_range_rate_finite_difference(self):
        rec = synthetic_leo_record()
        user = geodetic_to_ecef(10.0, 40.0)
        t = rec.epoch + timedelta(seconds=700.0)
        dt = 1e-3
        a = propagate(rec, t)
        b = propagate(rec, t + timedelta(seconds=dt))
        rate = (np.linalg.norm(b.position - user)
                - np.linalg.norm(a.position - user)) / dt
        assert np.isclose(relative_velocity(a, user), -rate, rtol=1e-3)


class TestDoppler:
    def test_zero_velocity(self):
        assert doppler_offset(0.0, 0.15) == 0.0

    def test_reference_value(self):
        wavelength = 3.0e8 / 1.9925e9
        f = doppler_offset(7530.0, wavelength)
        assert np.isclose(f, 50.0e3, rtol=3e-3)

    def test_sign_follows_velocity(self):
        assert doppler_offset(-100.0, 0.15) < 0

    def test_leo_doppler_bound_over_pass(self):
        # any sub-8 km/s state projects to at most v/lambda
        rec = synthetic_leo_record(mean_motion_rev_day=15.15)
        wavelength = 3.0e8 / 1.9925e9
        user = geodetic_to_ecef(0.0, 0.0)
        for offset in np.linspace(0, 5400, 61):
            state = propagate(rec, rec.epoch + timedelta(seconds=offset))
            f = doppler_offset(relative_velocity(state, user), wavelength)
            assert abs(f) <= 53.2e3


class TestFeasibilityMap:
    def _cells(self, min_elevation=None):
        rec = synthetic_leo_record()
        grid = [(la, lo) for la in np.arange(-2, 2.5, 1.0)
                for lo in np.arange(38, 42.5, 1.0)]
        # place the reference under the pass by probing the subpoint
        state = propagate(rec, rec.epoch)
        lat = np.rad2deg(np.arcsin(state.position[2]
                                   / np.linalg.norm(state.position)))
        lon = np.rad2deg(np.arctan2(state.position[1], state.position[0]))
        grid = [(lat + dla, lon + dlo) for dla in np.arange(-2, 2.5, 1.0)
                for dlo in np.arange(-2, 2.5, 1.0)]
        return feasibility_map(rec, rec.epoch, grid, (lat, lon),
                               3e8 / 1.9925e9,
                               min_elevation_deg=min_elevation)

    def test_reference_cell_is_infeasible_singularity(self):
        cells = self._cells()
        ref = min(cells, key=lambda c: abs(c.delta_f_hz))
        assert ref.delta_f_hz == 0.0
        assert not ref.feasible
        assert ref.retx_interval_s == float("inf")

    def test_interval_inverts_offset_exactly(self):
        for c in self._cells():
            if c.feasible:
                assert np.isclose(c.retx_interval_s * 2
                                  * abs(c.delta_f_hz), 1.0, rtol=1e-12)

    def test_majority_of_footprint_feasible(self):
        cells = self._cells(min_elevation=10.0)
        assert len(cells) > 10
        feasible = sum(c.feasible for c in cells)
        assert feasible > 0.5 * len(cells)

    def test_csv_rows_schema(self):
        rows = list(feasibility_csv_rows(self._cells()[:3]))
        assert rows[0] == ("lat_deg,lon_deg,rel_velocity_mps,doppler_hz,"
                           "delta_f_hz,retx_interval_us,feasible")
        for row in rows[1:]:
            fields = row.split(",")
            assert len(fields) == 7
            assert fields[6] in ("true", "false")

    def test_elevation_helper(self):
        user = geodetic_to_ecef(0.0, 0.0)
        overhead = ephemeris.SatState(user * (1 + 530e3 / EARTH_RADIUS_M),
                                      np.zeros(3), 0.0)
        assert np.isclose(elevation_deg(overhead, user), 90.0)


def test_earth_rotation_rate_consistency():
    # the rotation angle advances at the sidereal rate
    rec = parse_tle(ISS_TLE).records[0]
    t0, dt = rec.epoch, 3600.0
    a = ephemeris.earth_rotation_angle(t0)
    b = ephemeris.earth_rotation_angle(t0 + timedelta(seconds=dt))
    assert np.isclose(((b - a) % (2 * np.pi)) / dt, SIDEREAL_RATE,
                      rtol=1e-5)
