"""Experiment configuration, sweep orchestration and CSV emission.

Config files are flat ``key = value`` text ('#' starts a comment).  Every
key has a documented unit in its name (dBm, GHz, km, degrees, ...); see
``CONFIG_KEYS`` or the README schema table.  An empty or missing config
reproduces the default network setup.  Results go to a CSV with one row
per (scheme, axis value); the byte output is deterministic for a fixed
seed regardless of worker count.

Environment: ``STBEAM_SEED`` and ``STBEAM_THREADS`` override the config,
explicit ``--seed`` / ``--threads`` flags override the environment.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field, replace
from datetime import timedelta

import numpy as np

from . import ephemeris
from .scenario import SCHEMES, ScenarioConfig, monte_carlo

EXPERIMENTS = ("single-run", "sweep-power", "sweep-users", "sweep-m",
               "tle-feasibility")

CSV_HEADER = ("experiment,scheme,axis_name,axis_value,"
              "mean_sum_se_bps_hz,std_error,trials,seed")

AXIS_NAMES = {"single-run": "tx_power_dbm", "sweep-power": "tx_power_dbm",
              "sweep-users": "k_users", "sweep-m": "fixed_m"}

DEFAULT_AXES = {
    "sweep-power": [20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 60.0],
    "sweep-users": [2.0, 3.0, 4.0, 5.0, 6.0],
    "sweep-m": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
}

SEED_ENV = "STBEAM_SEED"
THREADS_ENV = "STBEAM_THREADS"


class ConfigError(ValueError):
    """A config key is unknown, untyped or violates its constraint."""


@dataclass
class TleSettings:
    """Inputs for the Doppler-feasibility map experiment."""

    tle_file: str = ""
    tle_name: str = ""                 # substring selecting one record
    epoch_offset_s: float = 0.0        # map instant relative to TLE epoch
    grid_lat_min_deg: float = 33.0
    grid_lat_max_deg: float = 43.0
    grid_lon_min_deg: float = 122.0
    grid_lon_max_deg: float = 132.0
    grid_step_deg: float = 0.5
    ref_lat_deg: float = 37.5665       # typical metropolitan user
    ref_lon_deg: float = 126.978
    min_elevation_deg: float = 10.0
    cap_us: float = 100.0


@dataclass
class ExperimentSpec:
    """Validated experiment: scenario, schemes, sweep axis and output."""

    experiment: str
    scenario: ScenarioConfig
    schemes: list
    sweep_axis: list
    output_path: str = "results.csv"
    tle: TleSettings = field(default_factory=TleSettings)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    scheme: str
    axis_name: str
    axis_value: float
    mean_sum_se: float
    std_error: float
    trials: int
    seed: int


def _parse_bool_int(key, raw):
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc


def _parse_float(key, raw):
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc


def _parse_list(key, raw):
    try:
        return [float(v) for v in raw.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated numbers") from exc


# key -> (parser, description with unit)
CONFIG_KEYS = {
    "experiment": (str, "single-run | sweep-power | sweep-users | sweep-m"
                        " | tle-feasibility"),
    "schemes": (str, "comma-separated scheme names"),
    "topology": (str, "partial | full"),
    "k_users": (_parse_bool_int, "number of satellite-user pairs"),
    "sweep_axis": (_parse_list, "axis values (dBm, users or repetitions)"),
    "out": (str, "output CSV path"),
    "trials": (_parse_bool_int, "Monte Carlo trials per point"),
    "seed": (_parse_bool_int, "base RNG seed (nonnegative integer)"),
    "nx": (_parse_bool_int, "array elements along x"),
    "ny": (_parse_bool_int, "array elements along y"),
    "element_spacing_wavelengths": (_parse_float,
                                    "inter-element spacing (wavelengths)"),
    "carrier_ghz": (_parse_float, "carrier frequency (GHz)"),
    "bandwidth_mhz": (_parse_float, "signal bandwidth (MHz)"),
    "tx_power_dbm": (_parse_float, "per-satellite transmit power (dBm)"),
    "noise_density_dbm_hz": (_parse_float, "noise density (dBm/Hz)"),
    "pathloss_exponent": (_parse_float, "path-loss exponent"),
    "altitude_km": (_parse_float, "orbit altitude (km)"),
    "earth_radius_km": (_parse_float, "Earth radius (km)"),
    "ref_azimuth_deg": (_parse_float, "reference link azimuth (degrees)"),
    "ref_zenith_deg": (_parse_float, "reference link zenith (degrees)"),
    "sat_spacing_deg": (_parse_float, "azimuth gap between satellites (deg)"),
    "angle_jitter_deg": (_parse_float, "per-trial angle jitter (degrees)"),
    "user_disc_radius_km": (_parse_float, "user placement disc (km)"),
    "num_paths": (_parse_bool_int, "multipath components per link"),
    "tap_delta": (_parse_float, "per-tap gain decay, in (0, 1)"),
    "sr_b": (_parse_float, "shadowed-Rician scatter half-power"),
    "sr_m": (_parse_float, "shadowed-Rician Nakagami order"),
    "sr_omega": (_parse_float, "shadowed-Rician line-of-sight power"),
    "doppler_max_khz": (_parse_float, "link Doppler bound (kHz)"),
    "r_max": (_parse_bool_int, "interval-search grid size"),
    "m_max": (_parse_bool_int, "repetition-search cap"),
    "fixed_m": (str, "fixed repetition count (empty = search)"),
    "csit_error_ratio": (_parse_float,
                         "estimation error power / channel entry power"),
    "tle_file": (str, "TLE catalog path (tle-feasibility)"),
    "tle_name": (str, "record name substring (tle-feasibility)"),
    "tle_epoch_offset_s": (_parse_float, "map instant after TLE epoch (s)"),
    "grid_lat_min_deg": (_parse_float, "feasibility grid bound (degrees)"),
    "grid_lat_max_deg": (_parse_float, "feasibility grid bound (degrees)"),
    "grid_lon_min_deg": (_parse_float, "feasibility grid bound (degrees)"),
    "grid_lon_max_deg": (_parse_float, "feasibility grid bound (degrees)"),
    "grid_step_deg": (_parse_float, "feasibility grid step (degrees)"),
    "ref_lat_deg": (_parse_float, "reference user latitude (degrees)"),
    "ref_lon_deg": (_parse_float, "reference user longitude (degrees)"),
    "min_elevation_deg": (_parse_float, "visibility threshold (degrees)"),
    "cap_us": (_parse_float, "feasible interval cap (microseconds)"),
}


def _read_pairs(path: str) -> dict:
    pairs = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in text.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in pairs:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            pairs[key] = raw
    return pairs


def _build_scenario(values: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig(
            k_users=values.get("k_users", 3),
            topology=values.get("topology", "partial"),
            scheme="TDMA",  # placeholder, replaced per run
            nx=values.get("nx", 8),
            ny=values.get("ny", 8),
            spacing_wavelengths=values.get("element_spacing_wavelengths",
                                           0.5),
            carrier_hz=values.get("carrier_ghz", 1.9925) * 1e9,
            bandwidth_hz=values.get("bandwidth_mhz", 5.0) * 1e6,
            tx_power_dbm=values.get("tx_power_dbm", 40.0),
            noise_density_dbm_hz=values.get("noise_density_dbm_hz", -174.0),
            pathloss_exponent=values.get("pathloss_exponent", 2.0),
            altitude_m=values.get("altitude_km", 530.0) * 1e3,
            earth_radius_m=values.get("earth_radius_km", 6371.0) * 1e3,
            ref_azimuth_deg=values.get("ref_azimuth_deg", 10.0),
            ref_zenith_deg=values.get("ref_zenith_deg", 5.0),
            sat_spacing_deg=values.get("sat_spacing_deg", 2.0),
            angle_jitter_deg=values.get("angle_jitter_deg", 1.0),
            user_disc_radius_m=values.get("user_disc_radius_km", 5.0) * 1e3,
            num_paths=values.get("num_paths", 3),
            tap_gain_delta=values.get("tap_delta", 0.5),
            sr_b=values.get("sr_b", 0.126),
            sr_m=values.get("sr_m", 10.1),
            sr_omega=values.get("sr_omega", 0.835),
            doppler_max_hz=values.get("doppler_max_khz", 50.0) * 1e3,
            r_max=values.get("r_max", 500),
            m_max=values.get("m_max", 8),
            fixed_m=values.get("fixed_m"),
            csit_error_ratio=values.get("csit_error_ratio", 0.01),
            trials=values.get("trials", 2000),
            seed=values.get("seed", 1),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _positive(values, key):
    if key in values and values[key] <= 0:
        raise ConfigError(f"{key}: must be positive, got {values[key]}")


def load_config(path: str | None) -> ExperimentSpec:
    """Parse and fully validate a config file (None means all defaults)."""
    pairs = _read_pairs(path) if path else {}
    values = {}
    for key, raw in pairs.items():
        parser, _ = CONFIG_KEYS[key]
        values[key] = parser(key, raw) if parser is not str else raw
    for key in ("tx_power_dbm", "carrier_ghz", "bandwidth_mhz",
                "altitude_km", "trials", "k_users", "nx", "ny", "r_max",
                "m_max", "num_paths", "grid_step_deg", "cap_us"):
        _positive(values, key)
    if "fixed_m" in values:
        raw = values["fixed_m"].strip()
        values["fixed_m"] = _parse_bool_int("fixed_m", raw) if raw else None

    experiment = values.get("experiment", "single-run")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown value {experiment!r}")

    schemes = [s.strip() for s in values.get("schemes", "ST-ZF,TDMA")
               .split(",") if s.strip()]
    for s in schemes:
        if s not in SCHEMES:
            raise ConfigError(f"schemes: unknown scheme {s!r}")

    scenario = _build_scenario(values)

    axis = values.get("sweep_axis")
    if axis is None:
        axis = DEFAULT_AXES.get(experiment,
                                [scenario.tx_power_dbm])
    if not axis:
        raise ConfigError("sweep_axis: must be nonempty")
    if any(b <= a for a, b in zip(axis, axis[1:])):
        raise ConfigError("sweep_axis: values must be strictly increasing")

    if experiment != "tle-feasibility":
        _validate_runs(experiment, schemes, scenario, axis)

    tle = TleSettings(
        tle_file=values.get("tle_file", ""),
        tle_name=values.get("tle_name", ""),
        epoch_offset_s=values.get("tle_epoch_offset_s", 0.0),
        grid_lat_min_deg=values.get("grid_lat_min_deg", 33.0),
        grid_lat_max_deg=values.get("grid_lat_max_deg", 43.0),
        grid_lon_min_deg=values.get("grid_lon_min_deg", 122.0),
        grid_lon_max_deg=values.get("grid_lon_max_deg", 132.0),
        grid_step_deg=values.get("grid_step_deg", 0.5),
        ref_lat_deg=values.get("ref_lat_deg", 37.5665),
        ref_lon_deg=values.get("ref_lon_deg", 126.978),
        min_elevation_deg=values.get("min_elevation_deg", 10.0),
        cap_us=values.get("cap_us", 100.0),
    )
    return ExperimentSpec(experiment, scenario, schemes, list(axis),
                          values.get("out", "results.csv"), tle)


def _validate_runs(experiment, schemes, scenario, axis):
    """Reject infeasible combinations before any computation."""
    for s in schemes:
        if s == "ST-ZF" and scenario.topology == "full":
            raise ConfigError("schemes: ST-ZF requires the partial topology")
    if experiment == "sweep-m":
        for s in schemes:
            if s not in ("ST-SLNR", "ST-SLNR-imperfect"):
                raise ConfigError(
                    "schemes: sweep-m applies to ST-SLNR variants only")
        if any(v != int(v) or v < 1 for v in axis):
            raise ConfigError("sweep_axis: repetition counts must be "
                              "positive integers")
    if experiment == "sweep-users" and any(v != int(v) or v < 1
                                           for v in axis):
        raise ConfigError("sweep_axis: user counts must be positive "
                          "integers")


def _configure_point(spec: ExperimentSpec, scheme: str,
                     value: float) -> ScenarioConfig:
    cfg = replace(spec.scenario, scheme=scheme)
    if spec.experiment in ("single-run", "sweep-power"):
        return replace(cfg, tx_power_dbm=value)
    if spec.experiment == "sweep-users":
        return replace(cfg, k_users=int(value))
    return replace(cfg, fixed_m=int(value))


def run_experiment(spec: ExperimentSpec, threads: int = 1):
    """One Monte Carlo result per (scheme, axis value)."""
    axis_name = AXIS_NAMES[spec.experiment]
    rows = []
    for scheme in spec.schemes:
        for value in spec.sweep_axis:
            cfg = _configure_point(spec, scheme, value)
            res = monte_carlo(cfg, threads=threads)
            rows.append(ResultRow(spec.experiment, scheme, axis_name,
                                  value, res.mean_sum_se, res.std_error,
                                  cfg.trials, cfg.seed))
    return rows


def emit_csv(rows, path: str):
    """Header plus one row per result, 6 significant digits, '.' decimals."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(f"{r.experiment},{r.scheme},{r.axis_name},"
                     f"{r.axis_value:.6g},{r.mean_sum_se:.6g},"
                     f"{r.std_error:.6g},{r.trials},{r.seed}\n")


def parse_result_csv(path: str):
    """Inverse of :func:`emit_csv` (used for round-trip checks)."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        for line in fh:
            (exp, scheme, axis_name, axis_value, mean, stderr, trials,
             seed) = line.rstrip("\n").split(",")
            rows.append(ResultRow(exp, scheme, axis_name,
                                  float(axis_value), float(mean),
                                  float(stderr), int(trials), int(seed)))
    return rows


def run_tle_feasibility(spec: ExperimentSpec):
    """Produce the Doppler-offset feasibility cells for one satellite."""
    st = spec.tle
    if not st.tle_file:
        raise ConfigError("tle_file: required for tle-feasibility")
    with open(st.tle_file, encoding="utf-8") as fh:
        result = ephemeris.parse_tle(fh.read(), skip_invalid=True)
    records = result.records
    if st.tle_name:
        records = [r for r in records if st.tle_name.lower()
                   in r.name.lower()]
    if not records:
        raise ConfigError("tle_file: no record matches the request")
    record = records[0]
    t = record.epoch + timedelta(seconds=st.epoch_offset_s)
    lats = np.arange(st.grid_lat_min_deg,
                     st.grid_lat_max_deg + st.grid_step_deg / 2,
                     st.grid_step_deg)
    lons = np.arange(st.grid_lon_min_deg,
                     st.grid_lon_max_deg + st.grid_step_deg / 2,
                     st.grid_step_deg)
    grid = [(float(la), float(lo)) for la in lats for lo in lons]
    wavelength = 3.0e8 / spec.scenario.carrier_hz
    return ephemeris.feasibility_map(
        record, t, grid, (st.ref_lat_deg, st.ref_lon_deg), wavelength,
        cap_s=st.cap_us * 1e-6, min_elevation_deg=st.min_elevation_deg)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stbeam",
        description="Space-time beamforming experiments for LEO satellite "
                    "interference networks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep-power", "sweep-users", "sweep-m",
                 "tle-feasibility"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="key = value config file")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--seed", type=int, default=None,
                       help=f"override RNG seed (env {SEED_ENV})")
        p.add_argument("--trials", type=int, default=None,
                       help="override Monte Carlo trials")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker processes (env {THREADS_ENV})")
    return parser


def _resolve_int(flag_value, env_name):
    if flag_value is not None:
        return flag_value
    raw = os.environ.get(env_name)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{env_name}: expected an integer") from exc


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = load_config(args.config)
        command = "single-run" if args.command == "run" else args.command
        if args.config is None or spec.experiment != command:
            spec.experiment = command
            if "sweep_axis" not in (_read_pairs(args.config)
                                    if args.config else {}):
                spec.sweep_axis = DEFAULT_AXES.get(
                    command, [spec.scenario.tx_power_dbm])
        seed = _resolve_int(args.seed, SEED_ENV)
        threads = _resolve_int(args.threads, THREADS_ENV) or 1
        updates = {}
        if seed is not None:
            updates["seed"] = seed
        if args.trials is not None:
            updates["trials"] = args.trials
        if updates:
            spec.scenario = replace(spec.scenario, **updates)
        if args.out is not None:
            spec.output_path = args.out
        if command != "tle-feasibility":
            _validate_runs(command, spec.schemes, spec.scenario,
                           spec.sweep_axis)

        if command == "tle-feasibility":
            cells = run_tle_feasibility(spec)
            with open(spec.output_path, "w", encoding="utf-8",
                      newline="\n") as fh:
                for line in ephemeris.feasibility_csv_rows(cells):
                    fh.write(line + "\n")
            print(f"wrote {len(cells)} cells to {spec.output_path}")
        else:
            rows = run_experiment(spec, threads=threads)
            emit_csv(rows, spec.output_path)
            print(f"wrote {len(rows)} rows to {spec.output_path}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, ImportError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
