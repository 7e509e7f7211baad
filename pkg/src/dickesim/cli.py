"""Declarative experiment runner.

Experiments are described by a YAML config (see README for the annotated
schema), run with one of three verbs:

    dickesim simulate --config cfg.yaml   one trajectory or ensemble mean
    dickesim sweep    --config cfg.yaml   pulse-duration sweep
    dickesim analyze  --trajectory t.csv --t0 5.0   re-run windows and fits

Outputs land in the configured out_dir: trajectory.csv (time series),
analysis.csv (one row per analyzed duration), resolved_config.yaml (the
canonical config echo; reparsing it reproduces the run byte for byte) and
manifest.json (seed, version, wall time, failure counts).

Exit codes: 0 success, 2 configuration error, 3 numerical/analysis error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np
import yaml

from . import __version__
from .analysis import (
    DecayAnalysis,
    DecayWindows,
    SweepRow,
    analyze_decay,
    pulse_sweep,
)
from .couplings import circular_dipole
from .ensemble import (
    ChainSampler,
    EnsembleSpec,
    FixedPairSampler,
    GaussianCloudSampler,
    ObservablesSpec,
    run_ensemble,
)
from .errors import AnalysisError, ConfigError, DickesimError
from .observables import EmissionTrajectory, two_atom_state
from .propagator import (
    N_ATOMS_CAP,
    DrivePulse,
    EvolutionSchedule,
    time_grid,
)
from .units import TransitionSpec, saturation_to_rabi, si_time_to_gamma_units

_EXIT_CONFIG = 2
_EXIT_NUMERICS = 3
_EXIT_IO = 4


# --------------------------------------------------------------------------
# config parsing: YAML -> canonical dict -> ExperimentConfig
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description.

    `resolved` is the canonical dict echo: all defaults materialized, all
    SI-facing fields converted to the internal dimensionless units.
    """

    transition: TransitionSpec
    ensemble: EnsembleSpec
    drive: DrivePulse | None          # None in sweep mode (t_off per row)
    windows: DecayWindows
    observables: ObservablesSpec
    dt_sample: float
    t_final: float | None
    rtol: float
    atol: float
    max_step: float | None
    sweep_durations: list[float] | None
    out_dir: str
    keep_realizations: bool
    resolved: dict

    def to_dict(self) -> dict:
        return copy.deepcopy(self.resolved)


class _Section:
    """Mapping view that tracks consumed keys and reports leftovers."""

    def __init__(self, data, path):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'config'} must be a mapping, got {type(data).__name__}")
        self.data = data
        self.path = path
        self.seen = set()

    def _name(self, key):
        return f"{self.path}.{key}" if self.path else key

    def take(self, key, default=None):
        self.seen.add(key)
        return self.data.get(key, default)

    def has(self, key):
        return key in self.data

    def number(self, key, default=None, minimum=None, positive=False):
        val = self.take(key, default)
        if val is None:
            return None
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{self._name(key)} must be a number")
        val = float(val)
        if positive and val <= 0:
            raise ConfigError(f"{self._name(key)} must be > 0")
        if minimum is not None and val < minimum:
            raise ConfigError(f"{self._name(key)} must be >= {minimum}")
        return val

    def integer(self, key, default=None, minimum=None):
        val = self.take(key, default)
        if val is None:
            return None
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{self._name(key)} must be an integer")
        if minimum is not None and val < minimum:
            raise ConfigError(f"{self._name(key)} must be >= {minimum}")
        return int(val)

    def string(self, key, default=None, choices=None):
        val = self.take(key, default)
        if val is None:
            return None
        if not isinstance(val, str):
            raise ConfigError(f"{self._name(key)} must be a string")
        if choices is not None and val not in choices:
            raise ConfigError(f"{self._name(key)} must be one of {sorted(choices)}, got {val!r}")
        return val

    def boolean(self, key, default=None):
        val = self.take(key, default)
        if val is None:
            return None
        if not isinstance(val, bool):
            raise ConfigError(f"{self._name(key)} must be true or false")
        return val

    def vector3(self, key, default=None):
        val = self.take(key, default)
        if val is None:
            return None
        if (not isinstance(val, (list, tuple)) or len(val) != 3
                or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in val)):
            raise ConfigError(f"{self._name(key)} must be a list of 3 numbers")
        return [float(x) for x in val]

    def one_of(self, *keys, required=True):
        present = [k for k in keys if self.has(k)]
        if len(present) > 1:
            raise ConfigError(
                f"{self.path or 'config'}: exactly one of {keys} may be given, "
                f"found {present}"
            )
        if not present:
            if required:
                raise ConfigError(f"{self.path or 'config'}: one of {keys} is required")
            for k in keys:
                self.seen.add(k)
            return None
        for k in keys:
            self.seen.add(k)
        return present[0]

    def section(self, key):
        self.seen.add(key)
        return _Section(self.data.get(key), self._name(key))

    def finish(self):
        unknown = set(self.data) - self.seen
        if unknown:
            name = self._name(sorted(unknown)[0])
            raise ConfigError(f"unknown key {name!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a YAML experiment config.

    Syntax errors carry line/column; semantic errors name the offending
    field. Unknown keys are rejected.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"syntax error at {where}: {exc.problem or exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"syntax error: {exc}") from exc
    if data is None:
        raise ConfigError("syntax error: config file is empty")
    canonical = _canonicalize(data)
    return _build(canonical)


def _canonicalize(data) -> dict:
    root = _Section(data, "")

    # transition: accepted in SI-friendly or canonical SI-base form
    tr = root.section("transition")
    lam_key = tr.one_of("lambda0_nm", "lambda0_m", required=False)
    if lam_key == "lambda0_nm":
        lambda0 = tr.number("lambda0_nm", positive=True) * 1e-9
    elif lam_key == "lambda0_m":
        lambda0 = tr.number("lambda0_m", positive=True)
    else:
        lambda0 = 780.2e-9
    gam_key = tr.one_of("gamma0_2pi_mhz", "gamma0_rad_s", required=False)
    if gam_key == "gamma0_2pi_mhz":
        gamma0 = 2 * math.pi * tr.number("gamma0_2pi_mhz", positive=True) * 1e6
    elif gam_key == "gamma0_rad_s":
        gamma0 = tr.number("gamma0_rad_s", positive=True)
    else:
        gamma0 = 2 * math.pi * 6e6
    isat_key = tr.one_of("isat_mw_cm2", "isat_w_m2", required=False)
    if isat_key == "isat_mw_cm2":
        isat = tr.number("isat_mw_cm2", positive=True) * 10.0
    elif isat_key == "isat_w_m2":
        isat = tr.number("isat_w_m2", positive=True)
    else:
        isat = 16.7
    tr.finish()
    transition = TransitionSpec(lambda0=lambda0, gamma0=gamma0, isat=isat)

    def from_ns(ns):
        return si_time_to_gamma_units(ns * 1e-9, transition)

    def time_field(sec, name, default):
        key = sec.one_of(name, f"{name}_ns", required=False)
        if key == f"{name}_ns":
            return from_ns(sec.number(key, minimum=0.0))
        if key == name:
            val = sec.take(name)
            if val is None:
                return None
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"{sec._name(name)} must be a number or null")
            return float(val)
        return default

    # geometry
    geo = root.section("geometry")
    sampler_kind = geo.string("sampler", choices={"fixed_pair", "gaussian_cloud", "chain"})
    if sampler_kind is None:
        raise ConfigError("geometry.sampler is required")
    dip = geo.section("dipole")
    dip_type = dip.string("type", default="sigma_minus", choices={"sigma_minus", "linear"})
    dip_axis = dip.vector3("axis", default=[0.0, 0.0, 1.0])
    dip.finish()
    geo_canon = {"sampler": sampler_kind, "dipole": {"type": dip_type, "axis": dip_axis}}
    if sampler_kind == "fixed_pair":
        geo_canon["distance"] = geo.number("distance", positive=True)
        if geo_canon["distance"] is None:
            raise ConfigError("geometry.distance is required for the fixed_pair sampler")
        geo_canon["angle_distribution"] = geo.string(
            "angle_distribution", default="solid_angle", choices={"solid_angle", "polar"}
        )
        n_atoms = 2
    elif sampler_kind == "gaussian_cloud":
        n_atoms = geo.integer("n_atoms", minimum=1)
        geo_canon["n_atoms"] = n_atoms
        geo_canon["sigma_ax"] = geo.number("sigma_ax", positive=True)
        geo_canon["sigma_rad"] = geo.number("sigma_rad", positive=True)
        if None in (n_atoms, geo_canon["sigma_ax"], geo_canon["sigma_rad"]):
            raise ConfigError("geometry.{n_atoms, sigma_ax, sigma_rad} are required "
                              "for the gaussian_cloud sampler")
    else:
        n_atoms = geo.integer("n_atoms", minimum=1)
        geo_canon["n_atoms"] = n_atoms
        geo_canon["spacing"] = geo.number("spacing", positive=True)
        if None in (n_atoms, geo_canon["spacing"]):
            raise ConfigError("geometry.{n_atoms, spacing} are required for the chain sampler")
        geo_canon["axis"] = geo.vector3("axis", default=[1.0, 0.0, 0.0])
    geo.finish()
    if n_atoms > N_ATOMS_CAP:
        raise ConfigError(f"geometry.n_atoms = {n_atoms} exceeds the cap of {N_ATOMS_CAP}")

    # ensemble
    ens = root.section("ensemble")
    ens_canon = {
        "n_realizations": ens.integer("n_realizations", default=1, minimum=1),
        "intensity_jitter_rel": ens.number("intensity_jitter_rel", default=0.0, minimum=0.0),
        "seed": ens.integer("seed", default=0, minimum=0),
    }
    ens.finish()

    # drive
    drv = root.section("drive")
    strength = drv.one_of("s", "rabi")
    if strength == "s":
        rabi = saturation_to_rabi(drv.number("s", minimum=0.0))
    else:
        rabi = drv.number("rabi", minimum=0.0)
    duration = time_field(drv, "duration", None)
    drv_canon = {
        "rabi": rabi,
        "detuning": drv.number("detuning", default=0.0),
        "direction": drv.vector3("direction", default=[0.0, 1.0, 0.0]),
        "duration": duration,
    }
    drv.finish()

    # windows (the 5 ns exclusion default converts through the resolved transition)
    win = root.section("windows")
    win_canon = {
        "super_fit_start": time_field(win, "super_fit_start", from_ns(5.0)),
        "super_fit_end": time_field(win, "super_fit_end", 1.0),
        "super_count_end": time_field(win, "super_count_end", 1.0),
        "sub_start": time_field(win, "sub_start", 4.0),
        "sub_end": time_field(win, "sub_end", None),
    }
    win.finish()

    # schedule
    sch = root.section("schedule")
    sch_canon = {
        "dt_sample": time_field(sch, "dt_sample", 0.02),
        "t_final": time_field(sch, "t_final", None),
        "rtol": sch.number("rtol", default=1e-8, positive=True),
        "atol": sch.number("atol", default=1e-10, positive=True),
        "max_step": sch.number("max_step", default=None, positive=True),
    }
    sch.finish()

    # observables
    obs = root.section("observables")
    tags = obs.take("tags", ["plus", "minus"] if n_atoms == 2 else [])
    if (not isinstance(tags, list)
            or any(t not in ("plus", "minus") for t in tags)):
        raise ConfigError("observables.tags must be a list drawn from ['plus', 'minus']")
    if tags and n_atoms != 2:
        raise ConfigError("observables.tags plus/minus require a two-atom geometry")
    obs_canon = {
        "k_ax": obs.vector3("k_ax", default=[1.0, 0.0, 0.0]),
        "tags": sorted(tags),
    }
    obs.finish()

    # sweep
    sweep_canon = None
    if root.has("sweep"):
        sw = root.section("sweep")
        key = sw.one_of("durations", "durations_ns")
        raw = sw.take(key)
        if (not isinstance(raw, list) or not raw
                or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in raw)):
            raise ConfigError(f"sweep.{key} must be a non-empty list of numbers")
        durations = [float(x) for x in raw]
        if key == "durations_ns":
            durations = [from_ns(x) for x in durations]
        if any(d <= 0 for d in durations) or any(
                b <= a for a, b in zip(durations, durations[1:])):
            raise ConfigError("sweep durations must be positive and strictly increasing")
        sweep_canon = {"durations": durations}
        sw.finish()
    else:
        root.seen.add("sweep")

    # outputs
    out = root.section("outputs")
    out_canon = {
        "out_dir": out.string("out_dir", default="dickesim-out"),
        "keep_realizations": out.boolean("keep_realizations", default=False),
    }
    out.finish()
    root.finish()

    if sweep_canon is None and duration is None:
        raise ConfigError("drive.duration (or duration_ns) is required without a sweep section")
    if sweep_canon is not None and duration is not None:
        raise ConfigError("drive.duration and a sweep section are mutually exclusive")

    # resolve the default record length for single runs
    if sweep_canon is None and sch_canon["t_final"] is None:
        sch_canon["t_final"] = duration + win_canon["sub_start"] + 4.0

    return {
        "transition": {"lambda0_m": transition.lambda0,
                       "gamma0_rad_s": transition.gamma0,
                       "isat_w_m2": transition.isat},
        "geometry": geo_canon,
        "ensemble": ens_canon,
        "drive": drv_canon,
        "windows": win_canon,
        "schedule": sch_canon,
        "observables": obs_canon,
        "sweep": sweep_canon,
        "outputs": out_canon,
    }


def _build(canonical: dict) -> ExperimentConfig:
    tr = canonical["transition"]
    transition = TransitionSpec(lambda0=tr["lambda0_m"], gamma0=tr["gamma0_rad_s"],
                                isat=tr["isat_w_m2"])

    geo = canonical["geometry"]
    dip = geo["dipole"]
    if dip["type"] == "sigma_minus":
        dipole = circular_dipole(dip["axis"])
    else:
        axis = np.asarray(dip["axis"], dtype=float)
        dipole = (axis / np.linalg.norm(axis)).astype(complex)
    if geo["sampler"] == "fixed_pair":
        sampler = FixedPairSampler(distance=geo["distance"], dipole=dipole,
                                   angle_distribution=geo["angle_distribution"])
    elif geo["sampler"] == "gaussian_cloud":
        sampler = GaussianCloudSampler(n_atoms=geo["n_atoms"], sigma_ax=geo["sigma_ax"],
                                       sigma_rad=geo["sigma_rad"], dipole=dipole)
    else:
        sampler = ChainSampler(n_atoms=geo["n_atoms"], spacing=geo["spacing"],
                               axis=geo["axis"], dipole=dipole)

    ens = canonical["ensemble"]
    ensemble = EnsembleSpec(sampler=sampler, n_realizations=ens["n_realizations"],
                            intensity_jitter_rel=ens["intensity_jitter_rel"],
                            seed=ens["seed"])

    drv = canonical["drive"]
    drive = None
    if drv["duration"] is not None:
        drive = DrivePulse(rabi=drv["rabi"], t_off=drv["duration"],
                           detuning=drv["detuning"], k_hat=drv["direction"])

    win = canonical["windows"]
    windows = DecayWindows(super_fit_start=win["super_fit_start"],
                           super_fit_end=win["super_fit_end"],
                           super_count_end=win["super_count_end"],
                           sub_start=win["sub_start"], sub_end=win["sub_end"])

    obs = canonical["observables"]
    tags = {name: two_atom_state(name) for name in obs["tags"]}
    observables = ObservablesSpec(k_ax_hat=obs["k_ax"], tags=tags)

    sch = canonical["schedule"]
    sweep = canonical["sweep"]
    out = canonical["outputs"]
    return ExperimentConfig(
        transition=transition,
        ensemble=ensemble,
        drive=drive,
        windows=windows,
        observables=observables,
        dt_sample=sch["dt_sample"],
        t_final=sch["t_final"],
        rtol=sch["rtol"],
        atol=sch["atol"],
        max_step=sch["max_step"],
        sweep_durations=None if sweep is None else list(sweep["durations"]),
        out_dir=out["out_dir"],
        keep_realizations=out["keep_realizations"],
        resolved=canonical,
    )


# --------------------------------------------------------------------------
# output files
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    # shortest round-trip float form; locale-independent
    return repr(float(x))


def _write_trajectory_csv(path: str, traj: EmissionTrajectory):
    tags = sorted(traj.tagged_populations)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["time", "n_e", "axial_intensity", "total_rate"]
                    + [f"pop_{t}" for t in tags])
        for i in range(traj.times.size):
            row = [_fmt(traj.times[i]), _fmt(traj.n_e[i]),
                   _fmt(traj.axial_intensity[i]), _fmt(traj.total_rate[i])]
            row += [_fmt(traj.tagged_populations[t][i]) for t in tags]
            wr.writerow(row)


_ANALYSIS_COLUMNS = [
    "duration", "n_e_at_t0", "tau_super", "tau_sub", "n_super", "n_sub",
    "n_super_rate", "n_sub_rate", "fit_rms_super", "fit_rms_sub",
    "super_decaying", "sub_decaying", "error",
]


def _analysis_row(duration: float, analysis: DecayAnalysis | None, error: str | None):
    if analysis is None:
        return [_fmt(duration)] + [""] * (len(_ANALYSIS_COLUMNS) - 2) + [error or ""]
    return [
        _fmt(duration), _fmt(analysis.n_e_at_t0), _fmt(analysis.tau_super),
        _fmt(analysis.tau_sub), _fmt(analysis.n_super), _fmt(analysis.n_sub),
        _fmt(analysis.n_super_rate), _fmt(analysis.n_sub_rate),
        _fmt(analysis.fit_rms_super), _fmt(analysis.fit_rms_sub),
        "true" if analysis.super_decaying else "false",
        "true" if analysis.sub_decaying else "false",
        error or "",
    ]


def _write_analysis_csv(path: str, rows: list[SweepRow]):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(_ANALYSIS_COLUMNS)
        for row in rows:
            wr.writerow(_analysis_row(row.duration, row.analysis, row.error))


def read_trajectory_csv(path: str) -> EmissionTrajectory:
    """Load a trajectory written by `simulate` back into memory."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None:
            raise ConfigError(f"{path}: empty trajectory file")
        required = ["time", "n_e", "axial_intensity", "total_rate"]
        if header[: len(required)] != required:
            raise ConfigError(f"{path}: unexpected trajectory columns {header[:4]}")
        tags = [c[len("pop_"):] for c in header[len(required):] if c.startswith("pop_")]
        data = [[float(x) for x in row] for row in rd if row]
    if not data:
        raise ConfigError(f"{path}: trajectory file has no samples")
    arr = np.asarray(data)
    pops = {t: arr[:, 4 + i] for i, t in enumerate(tags)}
    return EmissionTrajectory(times=arr[:, 0], n_e=arr[:, 1],
                              axial_intensity=arr[:, 2], total_rate=arr[:, 3],
                              tagged_populations=pops)


# --------------------------------------------------------------------------
# experiment execution
# --------------------------------------------------------------------------

def run_experiment(config: ExperimentConfig, *, command: str | None = None,
                   seed: int | None = None, jobs: int | None = None,
                   out_dir: str | None = None,
                   keep_realizations: bool | None = None) -> dict:
    """Run simulate or sweep per config; returns the manifest dict.

    CLI-level overrides (seed, out_dir, keep_realizations) are applied to
    the canonical config before the run, so the echoed resolved config
    always reproduces what was executed.
    """
    overrides = {}
    if seed is not None:
        overrides[("ensemble", "seed")] = int(seed)
    if out_dir is not None:
        overrides[("outputs", "out_dir")] = out_dir
    if keep_realizations is not None:
        overrides[("outputs", "keep_realizations")] = keep_realizations
    if overrides:
        canonical = config.to_dict()
        for (sec, key), val in overrides.items():
            canonical[sec][key] = val
        config = _build(canonical)
    if command is None:
        command = "sweep" if config.sweep_durations is not None else "simulate"
    if command == "sweep" and config.sweep_durations is None:
        raise ConfigError("sweep requested but the config has no sweep section")
    if command == "simulate" and config.drive is None:
        raise ConfigError("simulate requested but the config has no drive.duration")

    t_start = time.monotonic()
    os.makedirs(config.out_dir, exist_ok=True)
    files = {}
    n_failures = 0
    notes = []

    if command == "simulate":
        grid = time_grid(config.drive.t_off, config.t_final, config.dt_sample)
        schedule = EvolutionSchedule(grid, rtol=config.rtol, atol=config.atol,
                                     max_step=config.max_step)
        result = run_ensemble(config.ensemble, config.drive, schedule,
                              config.observables, jobs=jobs,
                              keep_realizations=config.keep_realizations)
        n_failures = len(result.failures)
        traj_path = os.path.join(config.out_dir, "trajectory.csv")
        _write_trajectory_csv(traj_path, result.mean)
        files["trajectory"] = "trajectory.csv"
        if config.keep_realizations and result.realizations is not None:
            real_dir = os.path.join(config.out_dir, "realizations")
            os.makedirs(real_dir, exist_ok=True)
            for i, traj in enumerate(result.realizations):
                _write_trajectory_csv(
                    os.path.join(real_dir, f"trajectory_{i:04d}.csv"), traj)
            files["realizations"] = "realizations/"
        try:
            analysis = analyze_decay(result.mean, config.drive.t_off, config.windows)
            rows = [SweepRow(duration=config.drive.t_off, analysis=analysis)]
            _write_analysis_csv(os.path.join(config.out_dir, "analysis.csv"), rows)
            files["analysis"] = "analysis.csv"
        except AnalysisError as exc:
            notes.append(f"analysis skipped: {exc}")
    else:
        drive_proto = DrivePulse(
            rabi=config.resolved["drive"]["rabi"],
            t_off=config.sweep_durations[0],
            detuning=config.resolved["drive"]["detuning"],
            k_hat=config.resolved["drive"]["direction"],
        )
        rows = pulse_sweep(
            config.ensemble, drive_proto, config.sweep_durations, config.windows,
            observables=config.observables, dt_sample=config.dt_sample,
            rtol=config.rtol, atol=config.atol, max_step=config.max_step,
            jobs=jobs,
        )
        n_failures = sum(1 for r in rows if r.error is not None)
        _write_analysis_csv(os.path.join(config.out_dir, "analysis.csv"), rows)
        files["analysis"] = "analysis.csv"

    resolved_path = os.path.join(config.out_dir, "resolved_config.yaml")
    with open(resolved_path, "w") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)
    files["resolved_config"] = "resolved_config.yaml"

    manifest = {
        "package": "dickesim",
        "version": __version__,
        "command": command,
        "seed": config.resolved["ensemble"]["seed"],
        "jobs": jobs,
        "wall_time_s": time.monotonic() - t_start,
        "n_failures": n_failures,
        "notes": notes,
        "files": files,
        "resolved_config": config.to_dict(),
    }
    with open(os.path.join(config.out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _cmd_analyze(args) -> int:
    windows = DecayWindows()
    if args.config:
        with open(args.config) as fh:
            windows = parse_config(fh.read()).windows
    traj = read_trajectory_csv(args.trajectory)
    analysis = analyze_decay(traj, args.t0, windows)
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "analysis.csv")
    _write_analysis_csv(path, [SweepRow(duration=args.t0, analysis=analysis)])
    print(path)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dickesim",
        description="Collective-emission simulator: drive, decay, analyze.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, needs_config):
        if needs_config:
            sp.add_argument("--config", required=True, help="YAML experiment config")
        sp.add_argument("--seed", type=int, default=None, help="override ensemble seed")
        sp.add_argument("--jobs", type=int, default=None,
                        help="worker processes (default: all cores)")
        sp.add_argument("--out-dir", default=None, help="override outputs.out_dir")
        sp.add_argument("--keep-realizations", action="store_true", default=None)

    common(sub.add_parser("simulate", help="run one trajectory or ensemble"), True)
    common(sub.add_parser("sweep", help="run a pulse-duration sweep"), True)
    an = sub.add_parser("analyze", help="re-run windows/fits on a stored trajectory")
    an.add_argument("--trajectory", required=True, help="trajectory.csv to analyze")
    an.add_argument("--t0", type=float, required=True, help="switch-off time [1/Gamma0]")
    an.add_argument("--config", default=None, help="optional config supplying windows")
    an.add_argument("--out-dir", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        with open(args.config) as fh:
            config = parse_config(fh.read())
        run_experiment(config, command=args.command, seed=args.seed, jobs=args.jobs,
                       out_dir=args.out_dir, keep_realizations=args.keep_realizations)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except DickesimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_NUMERICS
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return _EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
