"""Measured quantities extracted from density-matrix snapshots.

All functions are pure and read-only. Tiny negative values from floating
point are kept as-is here; flooring happens only at the reporting layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import sigma_index_arrays
from .couplings import AtomConfiguration, CouplingMatrices
from .errors import InvariantViolationError

#: Allowed imaginary residue of the Hermitian forms (axial/total rate).
_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class EmissionTrajectory:
    """Sampled observables of one run (or an ensemble mean)."""

    times: np.ndarray                 # increasing [1/Gamma0]
    n_e: np.ndarray                   # excited fraction, in [0, 1]
    axial_intensity: np.ndarray       # phase-matched emission, >= 0 (arb. units)
    total_rate: np.ndarray            # total photon rate [Gamma0]
    tagged_populations: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        for name in ("n_e", "axial_intensity", "total_rate"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != times.shape:
                raise ValueError(f"{name} must have the same length as times")
        tags = {k: np.asarray(v, dtype=float) for k, v in self.tagged_populations.items()}
        object.__setattr__(self, "tagged_populations", tags)
        for k, v in tags.items():
            if v.shape != times.shape:
                raise ValueError(f"tagged population {k!r} must match times")
        if np.any(self.n_e < -1e-10) or np.any(self.n_e > 1 + 1e-10):
            raise ValueError("n_e out of [0, 1]")
        if np.any(self.axial_intensity < -1e-10):
            raise ValueError("axial_intensity below the numerical floor")


def correlation_matrix(rho: np.ndarray, n_atoms: int) -> np.ndarray:
    """Pair correlation matrix C[m, n] = <s_m^+ s_n^->; Hermitian PSD."""
    dim = 1 << n_atoms
    idx = np.arange(dim)
    set_idx, _, _ = sigma_index_arrays(n_atoms)
    c = np.empty((n_atoms, n_atoms), dtype=np.complex128)
    for m in range(n_atoms):
        for k in range(n_atoms):
            if m == k:
                rows = set_idx[m]
                c[m, m] = rho[rows, rows].sum()
            else:
                src = idx[((idx >> k) & 1 == 1) & ((idx >> m) & 1 == 0)]
                dst = src ^ (1 << k) ^ (1 << m)
                c[m, k] = rho[src, dst].sum()
    return c


def excited_fraction(rho: np.ndarray, n_atoms: int) -> float:
    """Mean excited-state population (1/N) sum_n <s_n^+ s_n^->."""
    _, _, n_exc = sigma_index_arrays(n_atoms)
    val = complex(np.sum(n_exc * np.diagonal(rho))) / n_atoms
    if abs(val.imag) > 1e-12:
        raise InvariantViolationError(f"excited fraction has imaginary part {val.imag:.3e}")
    return val.real


def axial_intensity(rho: np.ndarray, config: AtomConfiguration, k_ax_hat) -> float:
    """Phase-matched emission sum_mn e^{i k_ax.(R_m - R_n)} <s_m^+ s_n^->.

    k_ax = 2*pi*k_ax_hat in lambda0 units. A Hermitian quadratic form of the
    correlation matrix, hence real and non-negative up to float error.
    """
    k_hat = np.asarray(k_ax_hat, dtype=float).reshape(3)
    if abs(np.linalg.norm(k_hat) - 1.0) > 1e-9:
        raise ValueError("k_ax_hat must be a unit vector")
    c = correlation_matrix(rho, config.n_atoms)
    w = np.exp(-2j * np.pi * (config.positions @ k_hat))
    val = complex(w.conj() @ c @ w)
    if abs(val.imag) > _IMAG_TOL:
        raise InvariantViolationError(f"axial intensity has imaginary part {val.imag:.3e}")
    return val.real


def total_emission_rate(rho: np.ndarray, couplings: CouplingMatrices) -> float:
    """Total photon emission rate sum_mn gamma_mn <s_m^+ s_n^-> [Gamma0].

    Equals -d<sum_n s_n^+ s_n^->/dt once the drive is off.
    """
    c = correlation_matrix(rho, couplings.n_atoms)
    val = complex(np.sum(couplings.gamma * c))
    if abs(val.imag) > _IMAG_TOL:
        raise InvariantViolationError(f"total rate has imaginary part {val.imag:.3e}")
    return val.real


def state_population(rho: np.ndarray, state: np.ndarray) -> float:
    """Population <psi|rho|psi> of a pure collective state, clamped to [0, 1]."""
    v = np.asarray(state, dtype=np.complex128).reshape(-1)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ValueError("state vector must be normalized")
    if v.size != rho.shape[0]:
        raise ValueError(f"state dimension {v.size} does not match rho {rho.shape}")
    val = complex(v.conj() @ rho @ v)
    if not -1e-10 <= val.real <= 1 + 1e-10:
        raise InvariantViolationError(f"population {val.real} outside [0, 1] tolerance")
    return min(1.0, max(0.0, val.real))


def two_atom_state(label: str) -> np.ndarray:
    """The |+> or |-> single-excitation state of two atoms, (|eg> +/- |ge>)/sqrt(2)."""
    sign = {"plus": 1.0, "minus": -1.0}.get(label)
    if sign is None:
        raise ValueError(f"unknown two-atom state label {label!r}")
    v = np.zeros(4, dtype=np.complex128)
    v[1] = 1.0 / np.sqrt(2.0)
    v[2] = sign / np.sqrt(2.0)
    return v


def default_tags(n_atoms: int) -> dict[str, np.ndarray]:
    """Standard tagged states: |+> and |-> for two atoms, none otherwise."""
    if n_atoms == 2:
        return {"plus": two_atom_state("plus"), "minus": two_atom_state("minus")}
    return {}


def record_trajectory(snapshots, config: AtomConfiguration,
                      couplings: CouplingMatrices, k_ax_hat=(1.0, 0.0, 0.0),
                      tags: dict[str, np.ndarray] | None = None) -> EmissionTrajectory:
    """Apply all observables to a list of (time, rho) snapshots."""
    if not snapshots:
        raise ValueError("snapshots must be non-empty")
    if tags is None:
        tags = default_tags(config.n_atoms)
    times = np.array([t for t, _ in snapshots], dtype=float)
    n = config.n_atoms
    n_e = np.empty(times.size)
    axial = np.empty(times.size)
    rate = np.empty(times.size)
    pops = {name: np.empty(times.size) for name in tags}
    for i, (_, rho) in enumerate(snapshots):
        n_e[i] = excited_fraction(rho, n)
        axial[i] = axial_intensity(rho, config, k_ax_hat)
        rate[i] = total_emission_rate(rho, couplings)
        for name, vec in tags.items():
            pops[name][i] = state_population(rho, vec)
    return EmissionTrajectory(
        times=times, n_e=n_e, axial_intensity=axial, total_rate=rate,
        tagged_populations=pops,
    )
