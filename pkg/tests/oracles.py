"""Independent brute-force references used only by the tests.

Deliberately slow and simple, sharing no numerical kernels with the package:
operators are built as explicit Kronecker-product matrices, propagation uses
a dense superoperator matrix exponential (scaling and squaring via scipy),
and the single-atom curve comes from a separate 3-ODE integration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

_SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|, basis (g, e)
_MAX_ORACLE_ATOMS = 3


@dataclass(frozen=True)
class OracleReport:
    case_id: str
    max_abs_deviation: float
    tolerance: float

    def __post_init__(self):
        if self.max_abs_deviation < 0:
            raise ValueError("deviation must be non-negative")

    @property
    def passed(self) -> bool:
        return self.max_abs_deviation <= self.tolerance


def site_lowering(n: int, n_atoms: int) -> np.ndarray:
    """sigma_n^- as a dense matrix; atom n owns bit n of the basis index."""
    op = np.array([[1.0 + 0.0j]])
    for a in range(n_atoms - 1, -1, -1):
        op = np.kron(op, _SIGMA_MINUS if a == n else np.eye(2))
    return op


def hamiltonian_matrix(config, couplings, drive, drive_on: bool) -> np.ndarray:
    n = config.n_atoms
    dim = 2**n
    h = np.zeros((dim, dim), dtype=complex)
    lowers = [site_lowering(a, n) for a in range(n)]
    for a in range(n):
        h += -drive.detuning * (lowers[a].conj().T @ lowers[a])
    for m in range(n):
        for k in range(n):
            if m != k:
                h += couplings.j[m, k] * (lowers[m].conj().T @ lowers[k])
    if drive_on:
        for a in range(n):
            w = 0.5 * drive.rabi * np.exp(2j * np.pi * np.dot(drive.k_hat, config.positions[a]))
            h += w * lowers[a].conj().T + np.conj(w) * lowers[a]
    return h


def liouvillian_matrix(config, couplings, drive, drive_on: bool) -> np.ndarray:
    """Dense 4^N x 4^N generator for vec(rho) in row-major convention."""
    n = config.n_atoms
    dim = 2**n
    ident = np.eye(dim)
    h = hamiltonian_matrix(config, couplings, drive, drive_on)
    lowers = [site_lowering(a, n) for a in range(n)]
    lv = -1j * (np.kron(h, ident) - np.kron(ident, h.T))
    for m in range(n):
        for k in range(n):
            g = couplings.gamma[m, k]
            sm_dag_sk = lowers[m].conj().T @ lowers[k]
            lv += g * np.kron(lowers[k], lowers[m].conj())
            lv -= 0.5 * g * (np.kron(sm_dag_sk, ident) + np.kron(ident, sm_dag_sk.T))
    return lv


def dense_superoperator_evolve(rho0, config, couplings, drive, t: float) -> np.ndarray:
    """rho(t) via expm of the explicit Liouvillian, split exactly at t_off."""
    if config.n_atoms > _MAX_ORACLE_ATOMS:
        raise ValueError(f"oracle limited to N <= {_MAX_ORACLE_ATOMS}")
    dim = 2**config.n_atoms
    vec = np.asarray(rho0, dtype=complex).reshape(dim * dim)
    t_on = min(t, drive.t_off)
    if t_on > 0:
        vec = expm(liouvillian_matrix(config, couplings, drive, True) * t_on) @ vec
    if t > drive.t_off:
        lv_off = liouvillian_matrix(config, couplings, drive, False)
        vec = expm(lv_off * (t - drive.t_off)) @ vec
    return vec.reshape(dim, dim)


def bloch_single_atom(s: float, t) -> np.ndarray:
    """Resonant single-atom excited population from the optical Bloch equations.

    State (p, x, v) = (rho_ee, Re rho_ge, Im rho_ge), Gamma0 = 1:
        dp/dt = omega*v - p
        dx/dt = -x/2
        dv/dt = -(omega/2)(2p - 1) - v/2
    with omega = sqrt(s/2). Returns n_e at the requested times.
    """
    if s < 0:
        raise ValueError("saturation must be >= 0")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    omega = np.sqrt(s / 2.0)

    def rhs(_t, y):
        p, x, v = y
        return [omega * v - p, -0.5 * x, -0.5 * omega * (2 * p - 1) - 0.5 * v]

    sol = solve_ivp(rhs, (0.0, float(t.max()) if t.max() > 0 else 1e-12), [0.0, 0.0, 0.0],
                    t_eval=t, rtol=1e-12, atol=1e-14, method="RK45", max_step=0.01)
    return sol.y[0]


def bloch_steady_state(s: float) -> float:
    """Closed-form resonant steady state (s/2)/(1+s)."""
    return (s / 2.0) / (1.0 + s)


def green_pair_coupling(separation, dipole) -> tuple[float, float]:
    """Couplings by direct numerical contraction of the dyadic Green tensor."""
    sep = np.asarray(separation, dtype=float)
    d = np.asarray(dipole, dtype=complex)
    r = np.linalg.norm(sep)
    u = 2 * np.pi * r
    rh = sep / r
    rr = np.outer(rh, rh)
    dyad = (np.exp(1j * u) / (4 * np.pi * u)) * (
        (1 + 1j / u - 1 / u**2) * np.eye(3) + (-1 - 3j / u + 3 / u**2) * rr
    )
    contraction = np.conj(d) @ dyad @ d
    return 6 * np.pi * np.imag(contraction), -3 * np.pi * np.real(contraction)
