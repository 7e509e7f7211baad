"""Time-windowed decay analysis.

The protocol splits every decay record at the switch-off time t0 into an
early superradiant window and a late subradiant window. The early decay time
tau_super comes from an exponential fit over [t0 + super_fit_start,
t0 + super_fit_end] (the fit-start offset skips the emission burst right
after switch-off); the early photon count n_super integrates the axial
emission over [t0, t0 + super_count_end]. The late decay time tau_sub and
count n_sub use everything from t0 + sub_start onwards.

Defaults: the fit-start exclusion is the dimensionless equivalent of 5 ns
for the default transition (~0.188/Gamma0), the early windows end 1/Gamma0
after t0, and the late window starts 4/Gamma0 after t0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .ensemble import EnsembleSpec, ObservablesSpec, run_ensemble
from .errors import AnalysisError, ConfigError, DickesimError
from .observables import EmissionTrajectory
from .propagator import DrivePulse, EvolutionSchedule, time_grid
from .units import RB87_D2, si_time_to_gamma_units

#: 5 ns converted once through the unit layer (default transition).
DEFAULT_SUPER_FIT_START = si_time_to_gamma_units(5e-9, RB87_D2)


@dataclass(frozen=True)
class DecayWindows:
    """Analysis windows, all offsets relative to the switch-off time t0."""

    super_fit_start: float = DEFAULT_SUPER_FIT_START
    super_fit_end: float = 1.0
    super_count_end: float = 1.0
    sub_start: float = 4.0
    sub_end: float | None = None       # None: end of record

    def __post_init__(self):
        end = math.inf if self.sub_end is None else self.sub_end
        if not 0 <= self.super_fit_start < self.super_fit_end <= self.sub_start < end:
            raise ConfigError(
                "window ordering must satisfy "
                "0 <= super_fit_start < super_fit_end <= sub_start < sub_end"
            )


@dataclass(frozen=True)
class ExponentialFit:
    """Result of one weighted log-linear exponential fit."""

    tau: float                 # decay time; +inf sentinel when not decaying
    amplitude: float
    rms_residual: float        # RMS of ln-residuals, unweighted
    n_used: int
    n_excluded: int            # non-positive samples dropped before the fit
    decaying: bool             # False when the fitted slope was >= 0


def fit_exponential(times, values, window) -> ExponentialFit:
    """Fit v = A exp(-t/tau) on (t, ln v) with weights proportional to v.

    Value weighting is the Gauss-Newton equivalent of a direct least-squares
    fit for count-like data. Non-positive samples inside the window are
    excluded and counted; fewer than 5 usable samples raise AnalysisError.
    Non-decaying data yields tau = +inf with decaying=False instead of an
    exception.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    if mask.sum() < 5:
        raise AnalysisError(f"only {int(mask.sum())} samples in window [{lo}, {hi}]")
    t = t[mask]
    v = v[mask]
    pos = v > 0
    n_excluded = int((~pos).sum())
    if pos.sum() < 5:
        raise AnalysisError(
            f"only {int(pos.sum())} positive samples in window [{lo}, {hi}]"
        )
    t = t[pos]
    v = v[pos]

    w = v
    y = np.log(v)
    wsum = w.sum()
    tbar = (w * t).sum() / wsum
    ybar = (w * y).sum() / wsum
    dt = t - tbar
    denom = (w * dt * dt).sum()
    if denom == 0:
        raise AnalysisError("degenerate window: all samples at one time")
    slope = (w * dt * (y - ybar)).sum() / denom
    amplitude = math.exp(ybar - slope * tbar)
    rms = float(np.sqrt(np.mean((y - (ybar + slope * dt)) ** 2)))
    n_used = int(t.size)
    if slope >= 0:
        return ExponentialFit(
            tau=math.inf, amplitude=amplitude, rms_residual=rms,
            n_used=n_used, n_excluded=n_excluded, decaying=False,
        )
    return ExponentialFit(
        tau=-1.0 / slope, amplitude=amplitude, rms_residual=rms,
        n_used=n_used, n_excluded=n_excluded, decaying=True,
    )


def integrate_window(times, values, window) -> float:
    """Trapezoidal integral of the sampled series over the window intersection.

    The series is treated as piecewise linear; window edges falling between
    samples are interpolated. An empty intersection raises AnalysisError.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    lo = max(window[0], t[0])
    hi = min(window[1], t[-1])
    if hi <= lo:
        raise AnalysisError(f"window [{window[0]}, {window[1]}] does not overlap the record")
    inner = (t > lo) & (t < hi)
    xs = np.concatenate([[lo], t[inner], [hi]])
    ys = np.concatenate([[np.interp(lo, t, v)], v[inner], [np.interp(hi, t, v)]])
    return float(np.trapezoid(ys, xs))


@dataclass(frozen=True)
class DecayAnalysis:
    """Windowed decay quantities for one record."""

    tau_super: float            # early decay time [1/Gamma0]
    tau_sub: float              # late decay time [1/Gamma0]
    n_super: float              # axial count integral, early window [arb]
    n_sub: float                # axial count integral, late window [arb]
    n_super_rate: float         # same windows on the total rate (diagnostic)
    n_sub_rate: float
    fit_rms_super: float
    fit_rms_sub: float
    n_e_at_t0: float
    super_decaying: bool
    sub_decaying: bool


def analyze_decay(traj: EmissionTrajectory, t0: float,
                  windows: DecayWindows | None = None) -> DecayAnalysis:
    """Apply the windowed fits and count integrals to one trajectory."""
    w = windows if windows is not None else DecayWindows()
    end = traj.times[-1]
    if end < t0 + w.sub_start + 2.0:
        raise AnalysisError(
            f"record ends at {end:.3f} but the late window needs data "
            f"past t0 + {w.sub_start + 2.0:.3f}"
        )
    sub_end = end if w.sub_end is None else min(end, t0 + w.sub_end)

    sup = fit_exponential(traj.times, traj.axial_intensity,
                          (t0 + w.super_fit_start, t0 + w.super_fit_end))
    sub = fit_exponential(traj.times, traj.axial_intensity,
                          (t0 + w.sub_start, sub_end))
    n_super = integrate_window(traj.times, traj.axial_intensity,
                               (t0, t0 + w.super_count_end))
    n_sub = integrate_window(traj.times, traj.axial_intensity,
                             (t0 + w.sub_start, sub_end))
    n_super_rate = integrate_window(traj.times, traj.total_rate,
                                    (t0, t0 + w.super_count_end))
    n_sub_rate = integrate_window(traj.times, traj.total_rate,
                                  (t0 + w.sub_start, sub_end))

    exact = np.nonzero(traj.times == t0)[0]
    if exact.size:
        n_e_t0 = float(traj.n_e[exact[0]])
    else:
        n_e_t0 = float(np.interp(t0, traj.times, traj.n_e))

    return DecayAnalysis(
        tau_super=sup.tau, tau_sub=sub.tau,
        n_super=n_super, n_sub=n_sub,
        n_super_rate=n_super_rate, n_sub_rate=n_sub_rate,
        fit_rms_super=sup.rms_residual, fit_rms_sub=sub.rms_residual,
        n_e_at_t0=n_e_t0,
        super_decaying=sup.decaying, sub_decaying=sub.decaying,
    )


@dataclass(frozen=True)
class SweepRow:
    duration: float
    analysis: DecayAnalysis | None
    error: str | None = None

    @property
    def n_e_at_t0(self) -> float:
        return self.analysis.n_e_at_t0 if self.analysis is not None else math.nan


def pulse_sweep(spec: EnsembleSpec, base_drive: DrivePulse, durations,
                windows: DecayWindows | None = None, *,
                observables: ObservablesSpec | None = None,
                dt_sample: float = 0.02, tail: float | None = None,
                rtol: float = 1e-8, atol: float = 1e-10,
                max_step: float | None = None,
                jobs: int | None = 1) -> list[SweepRow]:
    """Simulate-then-analyze once per pulse duration.

    Each duration d becomes a drive with t_off = d, simulated on a grid
    reaching d + tail (default: past the late window, sub_start + 4). Rows
    that fail keep their error string and the sweep continues.
    """
    durations = [float(d) for d in durations]
    if not durations or any(d <= 0 for d in durations):
        raise ConfigError("durations must be positive")
    if any(b <= a for a, b in zip(durations, durations[1:])):
        raise ConfigError("durations must be strictly increasing")
    w = windows if windows is not None else DecayWindows()
    span = (w.sub_start + 4.0) if tail is None else tail

    rows: list[SweepRow] = []
    for d in durations:
        try:
            drive = replace(base_drive, t_off=d)
            grid = time_grid(d, d + span, dt_sample)
            schedule = EvolutionSchedule(grid, rtol=rtol, atol=atol, max_step=max_step)
            result = run_ensemble(spec, drive, schedule, observables, jobs=jobs)
            rows.append(SweepRow(duration=d, analysis=analyze_decay(result.mean, d, w)))
        except DickesimError as exc:
            rows.append(SweepRow(duration=d, analysis=None, error=str(exc)))
    return rows


@dataclass(frozen=True)
class ScatterPoint:
    """One point of the decay-vs-excitation scatter."""

    n_e_at_t0: float
    tau_super: float
    n_super: float
    t0: float


def correlate_vs_ne(sweep_table: list[SweepRow]) -> list[ScatterPoint]:
    """Reshape a sweep into (n_e(t0), tau_super, n_super, t0) scatter rows."""
    if not sweep_table:
        raise AnalysisError("sweep table is empty")
    return [
        ScatterPoint(
            n_e_at_t0=row.analysis.n_e_at_t0,
            tau_super=row.analysis.tau_super,
            n_super=row.analysis.n_super,
            t0=row.duration,
        )
        for row in sweep_table
        if row.analysis is not None
    ]
