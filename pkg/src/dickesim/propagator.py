"""Driven Lindblad evolution of the N-atom density matrix.

The master equation in Gamma0 units is

    drho/dt = -i [H, rho]
              + sum_mn gamma_mn ( s_n^- rho s_m^+ - 1/2 {s_m^+ s_n^-, rho} )

with, in the frame rotating at the laser frequency,

    H = -delta * sum_n s_n^+ s_n^-  +  sum_{m != n} j_mn s_m^+ s_n^-
        + (drive on) 1/2 * sum_n ( rabi * e^{i k.R_n} s_n^+ + h.c. )

The square pulse has instantaneous edges: the drive term is present exactly
for t < t_off and absent for t >= t_off; integration restarts at t_off so no
step straddles the switch-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .couplings import AtomConfiguration, CouplingMatrices
from .errors import ConfigError, InvariantViolationError, ToleranceError

#: Memory guard: the dense state has (2^N)^2 entries.
N_ATOMS_CAP = 10

#: Snapshot invariant bounds (see evolve()).
HERMITICITY_TOL = 1e-9
TRACE_TOL = 1e-8


@dataclass(frozen=True)
class DrivePulse:
    """Square resonant excitation pulse, instantaneous rise and fall."""

    rabi: float                                  # Rabi frequency [Gamma0]
    t_off: float                                 # switch-off time [1/Gamma0]
    detuning: float = 0.0                        # laser detuning [Gamma0]
    k_hat: np.ndarray = (0.0, 1.0, 0.0)          # propagation direction

    def __post_init__(self):
        if self.rabi < 0:
            raise ConfigError("rabi must be >= 0")
        if self.t_off < 0:
            raise ConfigError("t_off must be >= 0")
        k = np.asarray(self.k_hat, dtype=float).reshape(3)
        norm = np.linalg.norm(k)
        if abs(norm - 1.0) > 1e-9:
            raise ConfigError("k_hat must be a unit vector")
        object.__setattr__(self, "k_hat", k / norm)


@dataclass(frozen=True)
class EvolutionSchedule:
    """Sample times and integrator controls for one run.

    max_step = None applies the default policy 0.01 / max(1, rabi) where
    rabi is that of the active segment (zero once the pulse is off).
    """

    t_grid: np.ndarray                           # strictly increasing [1/Gamma0]
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float | None = None

    def __post_init__(self):
        grid = np.asarray(self.t_grid, dtype=float).reshape(-1)
        if grid.size < 1 or grid[0] < 0 or np.any(np.diff(grid) <= 0):
            raise ConfigError("t_grid must be non-empty, start at >= 0 and increase strictly")
        if self.rtol <= 0 or self.atol <= 0:
            raise ConfigError("integrator tolerances must be positive")
        if self.max_step is not None and self.max_step <= 0:
            raise ConfigError("max_step must be positive when given")
        object.__setattr__(self, "t_grid", grid)

    def validate_with(self, drive: DrivePulse):
        grid = self.t_grid
        if grid[0] < drive.t_off < grid[-1] and not np.any(grid == drive.t_off):
            raise ConfigError(
                f"t_grid must contain the switch-off time {drive.t_off} as an exact point"
            )

    def step_cap(self, drive: DrivePulse, drive_on: bool) -> float:
        if self.max_step is not None:
            return self.max_step
        rabi = drive.rabi if drive_on else 0.0
        return 0.01 / max(1.0, rabi)


def time_grid(t_off: float, t_end: float, dt: float = 0.02) -> np.ndarray:
    """Uniform-ish sample grid containing t_off as an exact point."""
    if t_end <= 0 or dt <= 0:
        raise ConfigError("t_end and dt must be positive")
    if t_off <= 0:
        return np.linspace(0.0, t_end, max(1, round(t_end / dt)) + 1)
    if t_off >= t_end:
        return np.linspace(0.0, t_end, max(1, round(t_end / dt)) + 1)
    pre = np.linspace(0.0, t_off, max(1, round(t_off / dt)) + 1)
    post = np.linspace(t_off, t_end, max(1, round((t_end - t_off) / dt)) + 1)
    return np.concatenate([pre, post[1:]])


def initial_ground_state(n_atoms: int, n_max: int = N_ATOMS_CAP) -> np.ndarray:
    """Pure |g...g><g...g| state as a dense density matrix."""
    if not 1 <= n_atoms <= n_max:
        raise ConfigError(f"n_atoms must be in [1, {n_max}], got {n_atoms}")
    dim = 1 << n_atoms
    rho = np.zeros((dim, dim), dtype=np.complex128)
    rho[0, 0] = 1.0
    return rho


def validate_density_matrix(rho: np.ndarray, herm_tol: float = 1e-10,
                            trace_tol: float = TRACE_TOL):
    """Raise InvariantViolationError unless rho is Hermitian with unit trace."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise InvariantViolationError(f"Hermiticity residue {herm:.3e} > {herm_tol:.0e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise InvariantViolationError(f"|trace - 1| = {abs(tr - 1.0):.3e} > {trace_tol:.0e}")


def min_eigenvalue(rho: np.ndarray) -> float:
    """Smallest eigenvalue of (rho + rho^dag)/2; positivity spot-check."""
    rho = np.asarray(rho)
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())


def _check_same_system(config: AtomConfiguration, couplings: CouplingMatrices):
    if couplings.n_atoms != config.n_atoms:
        raise ValueError(
            f"couplings are for {couplings.n_atoms} atoms, configuration has {config.n_atoms}"
        )


def build_hamiltonian(config: AtomConfiguration, couplings: CouplingMatrices,
                      drive: DrivePulse, drive_on: bool = True) -> np.ndarray:
    """Dense 2^N x 2^N Hamiltonian (Gamma0 units) in the rotating frame."""
    _check_same_system(config, couplings)
    n = config.n_atoms
    dim = 1 << n
    idx = np.arange(dim)
    h = np.zeros((dim, dim), dtype=np.complex128)

    _, _, n_exc = _kernels.sigma_index_arrays(n)
    h[idx, idx] = -drive.detuning * n_exc

    for m in range(n):
        for k in range(n):
            if m == k or couplings.j[m, k] == 0:
                continue
            src = idx[((idx >> k) & 1 == 1) & ((idx >> m) & 1 == 0)]
            dst = src ^ (1 << k) ^ (1 << m)
            h[dst, src] += couplings.j[m, k]
    if drive_on and drive.rabi != 0:
        phases = np.exp(2j * np.pi * (config.positions @ drive.k_hat))
        for a in range(n):
            w = 0.5 * drive.rabi * phases[a]
            src = idx[(idx >> a) & 1 == 0]
            dst = src | (1 << a)
            h[dst, src] += w
            h[src, dst] += np.conj(w)

    if np.max(np.abs(h - h.conj().T)) > 1e-12:
        raise InvariantViolationError("assembled Hamiltonian is not Hermitian")
    return h


def lindblad_rhs(rho: np.ndarray, h: np.ndarray,
                 couplings: CouplingMatrices) -> np.ndarray:
    """Right-hand side -i[H, rho] + dissipator, for an explicit Hamiltonian.

    Reference implementation of the generator; evolve() uses the jitted
    matrix-free equivalent in dickesim._kernels.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    n = couplings.n_atoms
    dim = 1 << n
    if rho.shape != (dim, dim) or h.shape != (dim, dim):
        raise ValueError(
            f"shape mismatch: rho {rho.shape}, h {h.shape}, expected {(dim, dim)}"
        )
    idx = np.arange(dim)
    set_idx, clear_idx, _ = _kernels.sigma_index_arrays(n)

    out = -1j * (h @ rho - rho @ h)
    for m in range(n):
        for k in range(n):
            g = couplings.gamma[m, k]
            if g == 0:
                continue
            # jump term  s_k^- rho s_m^+
            out[np.ix_(clear_idx[k], clear_idx[m])] += g * rho[np.ix_(set_idx[k], set_idx[m])]
            # anticommutator  -(g/2) { s_m^+ s_k^-, rho }
            if m == k:
                rows = set_idx[k]
                out[rows, :] -= 0.5 * g * rho[rows, :]
                out[:, rows] -= 0.5 * g * rho[:, rows]
            else:
                src = idx[((idx >> k) & 1 == 1) & ((idx >> m) & 1 == 0)]
                dst = src ^ (1 << k) ^ (1 << m)
                out[dst, :] -= 0.5 * g * rho[src, :]
                out[:, src] -= 0.5 * g * rho[:, dst]
    return out


def evolve(rho0: np.ndarray, config: AtomConfiguration, couplings: CouplingMatrices,
           drive: DrivePulse, schedule: EvolutionSchedule,
           method: str = "dopri5") -> list[tuple[float, np.ndarray]]:
    """Propagate rho0 and return (time, density matrix) snapshots on t_grid.

    The drive term is active exactly for t < drive.t_off. Each snapshot is
    re-Hermitized as (rho + rho^dag)/2 and trace-renormalized when
    |trace - 1| lies in (1e-12, 1e-8]; drift beyond 1e-8 in the trace or
    beyond 1e-9 in Hermiticity aborts the run.

    method: "dopri5" (adaptive Dormand-Prince 5(4), default) or "rk4"
    (fixed-step cross-check at the same step cap).
    """
    _check_same_system(config, couplings)
    n = config.n_atoms
    dim = 1 << n
    rho0 = np.array(rho0, dtype=np.complex128)
    if rho0.shape != (dim, dim):
        raise ValueError(f"rho0 has shape {rho0.shape}, expected {(dim, dim)}")
    validate_density_matrix(rho0)
    schedule.validate_with(drive)
    if method not in ("dopri5", "rk4"):
        raise ConfigError(f"unknown integration method {method!r}")

    grid = schedule.t_grid
    t_off = drive.t_off

    # segments: (t_start, t_end, drive_on, grid slice)
    segments = []
    if t_off <= grid[0]:
        segments.append((grid[0], grid[-1], False, grid))
    elif t_off >= grid[-1]:
        segments.append((grid[0], grid[-1], True, grid))
    else:
        on_part = grid[grid <= t_off]
        off_part = grid[grid > t_off]
        segments.append((grid[0], t_off, True, on_part))
        segments.append((t_off, grid[-1], False, off_part))

    y = rho0.copy()
    times: list[float] = []
    snapshots: list[np.ndarray] = []
    for t_start, t_end, drive_on, seg_grid in segments:
        terms = _kernels.generator_terms(config, couplings, drive, drive_on)
        snaps = np.empty((seg_grid.size, dim, dim), dtype=np.complex128)
        if t_end > t_start:
            cap = schedule.step_cap(drive, drive_on)
            if method == "dopri5":
                status, _, _ = _kernels.dopri5_segment(
                    y, t_start, t_end, seg_grid, snaps,
                    schedule.rtol, schedule.atol, cap, *terms,
                    _kernels.DP_A, _kernels.DP_C, _kernels.DP_E, _kernels.DP_P,
                )
            else:
                status, _, _ = _kernels.rk4_segment(
                    y, t_start, t_end, seg_grid, snaps, cap, *terms,
                )
            if status == _kernels.STEP_UNDERFLOW:
                raise ToleranceError(
                    f"step size underflow near t = {t_start}..{t_end} "
                    f"(rtol={schedule.rtol}, atol={schedule.atol})"
                )
        else:
            snaps[:] = y
        times.extend(seg_grid.tolist())
        snapshots.extend(snaps)

    out = []
    for t, rho in zip(times, snapshots):
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERMITICITY_TOL:
            raise InvariantViolationError(
                f"Hermiticity residue {herm:.3e} > {HERMITICITY_TOL:.0e} at t = {t:.6g}"
            )
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        drift = abs(tr - 1.0)
        if drift > TRACE_TOL:
            raise InvariantViolationError(
                f"trace drift {drift:.3e} > {TRACE_TOL:.0e} at t = {t:.6g}"
            )
        if drift > 1e-12:
            rho = rho / tr
        out.append((float(t), rho))
    return out
