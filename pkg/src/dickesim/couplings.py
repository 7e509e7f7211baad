"""Pairwise dipole-dipole couplings from the free-space Green tensor.

For two atoms separated by r (in lambda0 units, so the phase is u = 2*pi*|r|)
sharing a complex unit dipole orientation d, the dissipative and coherent
couplings in Gamma0 units depend only on u and on a = |d . r_hat|^2:

    gamma(u, a) = 3/2 * [ (1-a)  * sin(u)/u
                        + (1-3a) * (cos(u)/u^2 - sin(u)/u^3) ]
    j(u, a)     = 3/4 * [ -(1-a) * cos(u)/u
                        + (1-3a) * (sin(u)/u^2 + cos(u)/u^3) ]

normalized so that gamma -> 1 in the small-separation (Dicke) limit and the
on-site values are gamma_nn = 1, j_nn = 0. j diverges as u^-3 at short range,
which is why near-coincident pairs are rejected rather than regularized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, SingularityError

#: Pairs closer than this (in lambda0 units) are rejected as unphysical.
MIN_SEPARATION = 1e-6

#: Switch-over below which the cancellation-prone gamma terms use series.
_SERIES_CUTOFF = 0.05


def circular_dipole(axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Unit circular (sigma-minus type) dipole about a quantization axis.

    Returns (e1 - i*e2)/sqrt(2) with (e1, e2, axis) right-handed. Only the
    plane and |d . r_hat|^2 matter for the couplings, so the in-plane phase
    convention is free; this one reduces to (x - iy)/sqrt(2) for axis = z.
    """
    q = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(q)
    if norm == 0:
        raise GeometryError("quantization axis must be a nonzero vector")
    q = q / norm
    # pick the coordinate axis least aligned with q to seed the transverse pair
    seed = np.zeros(3)
    seed[np.argmin(np.abs(q))] = 1.0
    e1 = seed - np.dot(seed, q) * q
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(q, e1)
    return (e1 - 1j * e2) / math.sqrt(2.0)


@dataclass(frozen=True)
class AtomConfiguration:
    """Static atomic positions (lambda0 units) plus a shared dipole orientation."""

    positions: np.ndarray            # (N, 3) float
    dipole: np.ndarray               # (3,) complex unit vector

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise GeometryError(f"positions must be (N, 3) with N >= 1, got {pos.shape}")
        dip = np.asarray(self.dipole, dtype=complex).reshape(3)
        if abs(np.linalg.norm(dip) - 1.0) > 1e-12:
            raise GeometryError("dipole orientation must be a unit vector (|norm - 1| <= 1e-12)")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "dipole", dip)
        n = pos.shape[0]
        for m in range(n):
            for k in range(m + 1, n):
                if np.linalg.norm(pos[m] - pos[k]) <= MIN_SEPARATION:
                    raise SingularityError(
                        f"atoms {m} and {k} closer than {MIN_SEPARATION} lambda0"
                    )

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class CouplingMatrices:
    """Dissipative (gamma) and coherent (j) coupling matrices in Gamma0 units."""

    gamma: np.ndarray                # (N, N) real symmetric, diag = 1, PSD
    j: np.ndarray                    # (N, N) real symmetric, diag = 0
    _skip_checks: bool = field(default=False, repr=False)

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        jm = np.asarray(self.j, dtype=float)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "j", jm)
        if self._skip_checks:
            return
        if g.shape != jm.shape or g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise GeometryError("coupling matrices must be square and same shape")
        if not np.allclose(g, g.T, atol=1e-12) or not np.allclose(jm, jm.T, atol=1e-12):
            raise GeometryError("coupling matrices must be symmetric")
        if not np.allclose(np.diag(g), 1.0, atol=1e-12):
            raise GeometryError("gamma diagonal must equal 1 (single-atom rate)")
        if np.any(np.abs(np.diag(jm)) > 1e-12):
            raise GeometryError("j diagonal must vanish")
        if np.max(np.abs(g)) > 1.0 + 1e-9:
            raise GeometryError("|gamma_mn| must not exceed 1")
        if np.linalg.eigvalsh(g).min() < -1e-10:
            raise GeometryError("gamma matrix must be positive semidefinite")

    @property
    def n_atoms(self) -> int:
        return self.gamma.shape[0]


def pair_coupling(separation, dipole) -> tuple[float, float]:
    """Couplings (gamma_mn, j_mn) for one pair, both in Gamma0 units.

    Parameters
    ----------
    separation : (3,) array_like
        Pair separation vector in lambda0 units.
    dipole : (3,) array_like, complex
        Shared unit dipole orientation.

    Returns
    -------
    gamma_mn, j_mn : float
        Real dissipative and dispersive couplings.
    """
    sep = np.asarray(separation, dtype=float).reshape(3)
    r = np.linalg.norm(sep)
    if r <= MIN_SEPARATION:
        raise SingularityError(
            f"pair separation {r:.3e} lambda0 below cutoff {MIN_SEPARATION}"
        )
    d = np.asarray(dipole, dtype=complex).reshape(3)
    u = 2 * math.pi * r
    a = abs(np.dot(d, sep / r)) ** 2

    if u < _SERIES_CUTOFF:
        # sin(u)/u and cos(u)/u^2 - sin(u)/u^3 cancel catastrophically at
        # small u; use their series instead (error < 1e-16 below the cutoff)
        u2 = u * u
        f_sin = 1.0 - u2 / 6.0 + u2 * u2 / 120.0 - u2 * u2 * u2 / 5040.0
        f_mix = -1.0 / 3.0 + u2 / 30.0 - u2 * u2 / 840.0 + u2 * u2 * u2 / 45360.0
    else:
        f_sin = math.sin(u) / u
        f_mix = math.cos(u) / u**2 - math.sin(u) / u**3

    gamma_mn = 1.5 * ((1.0 - a) * f_sin + (1.0 - 3.0 * a) * f_mix)
    j_mn = 0.75 * (
        -(1.0 - a) * math.cos(u) / u
        + (1.0 - 3.0 * a) * (math.sin(u) / u**2 + math.cos(u) / u**3)
    )
    return gamma_mn, j_mn


def build_couplings(config: AtomConfiguration) -> CouplingMatrices:
    """Assemble the full coupling matrices for a configuration.

    Serial over pairs; the matrices are symmetric by construction with
    gamma_nn = 1 and j_nn = 0.
    """
    n = config.n_atoms
    gamma = np.eye(n)
    j = np.zeros((n, n))
    for m in range(n):
        for k in range(m + 1, n):
            try:
                g_mk, j_mk = pair_coupling(
                    config.positions[m] - config.positions[k], config.dipole
                )
            except SingularityError as exc:
                raise SingularityError(f"pair ({m}, {k}): {exc}") from exc
            gamma[m, k] = gamma[k, m] = g_mk
            j[m, k] = j[k, m] = j_mk
    return CouplingMatrices(gamma=gamma, j=j)
