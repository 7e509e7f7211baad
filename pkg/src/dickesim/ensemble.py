"""Disorder sampling and ensemble averaging.

Reproducibility contract: every random draw comes from a Philox4x64-10
counter-based generator addressed as key = seed, counter = (0, 0, stream,
realization_index). Stream 0 feeds geometry sampling, stream 1 the drive
jitter, so a realization is a pure function of (seed, index) no matter how
the work is scheduled. The ensemble mean is reduced in realization-index
order, which makes the output independent of the worker pool layout.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .couplings import AtomConfiguration, MIN_SEPARATION, build_couplings, circular_dipole
from .errors import ConfigError, EnsembleError, GeometryError
from .observables import EmissionTrajectory, default_tags, record_trajectory
from .propagator import DrivePulse, EvolutionSchedule, evolve, initial_ground_state

_STREAM_GEOMETRY = 0
_STREAM_DRIVE = 1

_RESAMPLE_ATTEMPTS = 100


def _realization_rng(seed: int, index: int, stream: int) -> np.random.Generator:
    counter = np.array([0, 0, stream, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=np.uint64(seed), counter=counter))


def _unit_vector_on_sphere(rng: np.random.Generator, distribution: str) -> np.ndarray:
    if distribution == "solid_angle":
        z = rng.uniform(-1.0, 1.0)
        phi = rng.uniform(0.0, 2.0 * np.pi)
        s = np.sqrt(1.0 - z * z)
        return np.array([s * np.cos(phi), s * np.sin(phi), z])
    if distribution == "polar":
        # sensitivity-check alternative: uniform polar angle instead of
        # uniform solid angle
        theta = rng.uniform(0.0, np.pi)
        phi = rng.uniform(0.0, 2.0 * np.pi)
        return np.array(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
        )
    raise ConfigError(f"unknown angle distribution {distribution!r}")


@dataclass(frozen=True)
class FixedPairSampler:
    """Two atoms at a fixed distance, interatomic axis drawn on the sphere."""

    distance: float                              # pair separation [lambda0]
    dipole: np.ndarray = field(default_factory=circular_dipole)
    angle_distribution: str = "solid_angle"      # or "polar"

    def __post_init__(self):
        if self.distance <= MIN_SEPARATION:
            raise ConfigError("pair distance must exceed the near-field cutoff")
        if self.angle_distribution not in ("solid_angle", "polar"):
            raise ConfigError(f"unknown angle distribution {self.angle_distribution!r}")

    @property
    def n_atoms(self) -> int:
        return 2

    def sample(self, rng: np.random.Generator) -> AtomConfiguration:
        u = _unit_vector_on_sphere(rng, self.angle_distribution)
        positions = np.array([[0.0, 0.0, 0.0], self.distance * u])
        return AtomConfiguration(positions=positions, dipole=self.dipole)


@dataclass(frozen=True)
class GaussianCloudSampler:
    """Positions i.i.d. normal: axial width along x, radial width along y, z."""

    n_atoms: int
    sigma_ax: float                              # [lambda0]
    sigma_rad: float                             # [lambda0]
    dipole: np.ndarray = field(default_factory=circular_dipole)

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ConfigError("n_atoms must be >= 1")
        if self.sigma_ax <= 0 or self.sigma_rad <= 0:
            raise ConfigError("cloud widths must be positive")

    def sample(self, rng: np.random.Generator) -> AtomConfiguration:
        scale = np.array([self.sigma_ax, self.sigma_rad, self.sigma_rad])
        for _ in range(_RESAMPLE_ATTEMPTS):
            positions = rng.normal(size=(self.n_atoms, 3)) * scale
            if self.n_atoms == 1 or _min_separation(positions) > MIN_SEPARATION:
                return AtomConfiguration(positions=positions, dipole=self.dipole)
        raise GeometryError(
            f"no valid cloud found in {_RESAMPLE_ATTEMPTS} attempts "
            "(requested density too high for the separation guard)"
        )


@dataclass(frozen=True)
class ChainSampler:
    """Deterministic equally-spaced chain; only the drive jitter varies."""

    n_atoms: int
    spacing: float                               # [lambda0]
    axis: np.ndarray = (1.0, 0.0, 0.0)
    dipole: np.ndarray = field(default_factory=circular_dipole)

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ConfigError("n_atoms must be >= 1")
        if self.spacing <= MIN_SEPARATION:
            raise ConfigError("chain spacing must exceed the near-field cutoff")
        ax = np.asarray(self.axis, dtype=float).reshape(3)
        norm = np.linalg.norm(ax)
        if norm == 0:
            raise ConfigError("chain axis must be nonzero")
        object.__setattr__(self, "axis", ax / norm)

    def sample(self, rng: np.random.Generator) -> AtomConfiguration:
        steps = np.arange(self.n_atoms)[:, None] * self.spacing
        return AtomConfiguration(positions=steps * self.axis, dipole=self.dipole)


def _min_separation(positions: np.ndarray) -> float:
    diffs = positions[:, None, :] - positions[None, :, :]
    d = np.linalg.norm(diffs, axis=-1)
    n = positions.shape[0]
    return d[np.triu_indices(n, k=1)].min()


Sampler = FixedPairSampler | GaussianCloudSampler | ChainSampler


@dataclass(frozen=True)
class EnsembleSpec:
    """How many realizations to run and how to draw them."""

    sampler: Sampler
    n_realizations: int = 1
    intensity_jitter_rel: float = 0.0            # experiment quotes ~0.10
    seed: int = 0

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be >= 1")
        if self.intensity_jitter_rel < 0:
            raise ConfigError("intensity_jitter_rel must be >= 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 bits")


@dataclass(frozen=True)
class ObservablesSpec:
    """Detection axis and tagged states recorded for each trajectory."""

    k_ax_hat: np.ndarray = (1.0, 0.0, 0.0)
    tags: dict[str, np.ndarray] | None = None    # None: |+>, |-> when N = 2

    def __post_init__(self):
        k = np.asarray(self.k_ax_hat, dtype=float).reshape(3)
        norm = np.linalg.norm(k)
        if abs(norm - 1.0) > 1e-9:
            raise ConfigError("k_ax_hat must be a unit vector")
        object.__setattr__(self, "k_ax_hat", k / norm)


def sample_configuration(spec: EnsembleSpec, index: int) -> AtomConfiguration:
    """Atomic configuration of realization `index`; pure in (seed, index)."""
    rng = _realization_rng(spec.seed, index, _STREAM_GEOMETRY)
    return spec.sampler.sample(rng)


def sample_drive(spec: EnsembleSpec, base_drive: DrivePulse, index: int) -> DrivePulse:
    """Drive of realization `index`: Rabi scaled by sqrt(1 + eps) with eps
    normal(0, jitter) truncated at 3 sigma (intensity jitter, rabi ~ sqrt(I))."""
    if spec.intensity_jitter_rel == 0:
        return base_drive
    rng = _realization_rng(spec.seed, index, _STREAM_DRIVE)
    sigma = spec.intensity_jitter_rel
    while True:
        eps = rng.normal(0.0, sigma)
        if abs(eps) <= 3.0 * sigma:
            break
    return replace(base_drive, rabi=base_drive.rabi * np.sqrt(max(0.0, 1.0 + eps)))


@dataclass(frozen=True)
class EnsembleResult:
    mean: EmissionTrajectory
    n_ok: int
    failures: list[tuple[int, str]]
    realizations: list[EmissionTrajectory] | None = None


def _run_realization(args) -> tuple[str, object]:
    spec, base_drive, schedule, obs, index = args
    try:
        config = sample_configuration(spec, index)
        drive = sample_drive(spec, base_drive, index)
        couplings = build_couplings(config)
        rho0 = initial_ground_state(config.n_atoms)
        snapshots = evolve(rho0, config, couplings, drive, schedule)
        tags = obs.tags if obs.tags is not None else default_tags(config.n_atoms)
        traj = record_trajectory(snapshots, config, couplings, obs.k_ax_hat, tags)
        return ("ok", traj)
    except Exception as exc:  # failures are counted, not fatal per realization
        return ("err", f"{type(exc).__name__}: {exc}")


def run_ensemble(spec: EnsembleSpec, base_drive: DrivePulse,
                 schedule: EvolutionSchedule,
                 observables: ObservablesSpec | None = None, *,
                 jobs: int | None = 1,
                 keep_realizations: bool = False) -> EnsembleResult:
    """Run all realizations and average their observables pointwise.

    Failed realizations are excluded and reported; more than 1% failures
    raise EnsembleError. The reduction runs in realization-index order, so
    the result is bit-identical for any `jobs`.
    """
    obs = observables if observables is not None else ObservablesSpec()
    if jobs is None:
        jobs = os.cpu_count() or 1
    n = spec.n_realizations
    work = [(spec, base_drive, schedule, obs, i) for i in range(n)]
    if jobs > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, n)) as pool:
            results = list(pool.map(_run_realization, work,
                                    chunksize=max(1, n // (4 * jobs))))
    else:
        results = [_run_realization(w) for w in work]

    failures = [(i, msg) for i, (status, msg) in enumerate(results) if status == "err"]
    if len(failures) > 0.01 * n:
        raise EnsembleError(
            f"{len(failures)} of {n} realizations failed (> 1%): {failures[:3]}"
        )

    kept: list[EmissionTrajectory] = []
    acc = None
    for status, traj in results:  # fixed index order
        if status != "ok":
            continue
        if acc is None:
            acc = {
                "times": traj.times.copy(),
                "n_e": traj.n_e.copy(),
                "axial_intensity": traj.axial_intensity.copy(),
                "total_rate": traj.total_rate.copy(),
                "tags": {k: v.copy() for k, v in traj.tagged_populations.items()},
            }
        else:
            acc["n_e"] += traj.n_e
            acc["axial_intensity"] += traj.axial_intensity
            acc["total_rate"] += traj.total_rate
            for k in acc["tags"]:
                acc["tags"][k] += traj.tagged_populations[k]
        if keep_realizations:
            kept.append(traj)
    n_ok = n - len(failures)
    mean = EmissionTrajectory(
        times=acc["times"],
        n_e=acc["n_e"] / n_ok,
        axial_intensity=acc["axial_intensity"] / n_ok,
        total_rate=acc["total_rate"] / n_ok,
        tagged_populations={k: v / n_ok for k, v in acc["tags"].items()},
    )
    return EnsembleResult(
        mean=mean, n_ok=n_ok, failures=failures,
        realizations=kept if keep_realizations else None,
    )
