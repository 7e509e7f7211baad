"""Jitted numerical core of the propagator.

The density matrix is kept dense (2^N x 2^N) while every operator is applied
through basis-index arithmetic: bit n of a basis index is 1 when atom n is
excited, so sigma_n^- maps index (i | bit_n) -> (i & ~bit_n) and all
Hamiltonian/dissipator terms become row or column gathers. This keeps one
right-hand-side evaluation at O(N^2 * 4^N) and never forms the 4^N x 4^N
superoperator.

The RK integration loops live here too: an adaptive Dormand-Prince 5(4)
stepper with its quartic dense-output interpolant (snapshots land exactly on
the requested sample grid regardless of the internal steps), plus a
fixed-step RK4 used as a cross-check mode. Everything is single-threaded
and bit-deterministic.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau, error weights and dense-output matrix.
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = np.zeros((7, 7))
DP_A[1, :1] = [1 / 5]
DP_A[2, :2] = [3 / 40, 9 / 40]
DP_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
DP_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
DP_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
DP_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
DP_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

# integrate_segment status codes
OK = 0
STEP_UNDERFLOW = -1


def sigma_index_arrays(n_atoms: int):
    """Index machinery for sigma operators on the 2^N basis.

    Returns (set_idx, clear_idx, n_exc): set_idx[n] lists the basis indices
    with bit n set, clear_idx[n] the same indices with bit n cleared
    (element-aligned), and n_exc the excitation number of every index.
    """
    dim = 1 << n_atoms
    idx = np.arange(dim, dtype=np.int64)
    set_idx = np.empty((n_atoms, dim // 2), dtype=np.int64)
    for n in range(n_atoms):
        set_idx[n] = idx[(idx >> n) & 1 == 1]
    clear_idx = set_idx ^ (1 << np.arange(n_atoms, dtype=np.int64))[:, None]
    n_exc = np.array([bin(i).count("1") for i in range(dim)], dtype=np.int64)
    return set_idx, clear_idx, n_exc


def generator_terms(config, couplings, drive, drive_on: bool):
    """Flatten the effective-Hamiltonian action into gather arrays.

    K = H - (i/2) sum_mn gamma_mn sigma_m^+ sigma_n^- is represented as a
    diagonal part plus a flat list of (source row, destination row, coefficient)
    entries; the jump term keeps the per-atom index tables. The RHS kernel then
    evaluates  drho = -i (K rho - rho K^dag) + sum_mn gamma_mn s_n^- rho s_m^+.
    """
    n = config.n_atoms
    dim = 1 << n
    set_idx, clear_idx, n_exc = sigma_index_arrays(n)
    gamma = couplings.gamma
    jmat = couplings.j
    idx = np.arange(dim, dtype=np.int64)

    diag_k = np.zeros(dim, dtype=np.complex128)
    for a in range(n):
        on = ((idx >> a) & 1).astype(np.float64)
        diag_k += on * (-drive.detuning - 0.5j * gamma[a, a])

    srcs, dsts, coefs = [], [], []
    for m in range(n):
        for k in range(n):
            if m == k:
                continue
            c_mk = jmat[m, k] - 0.5j * gamma[m, k]
            if c_mk == 0:
                continue
            sel = ((idx >> k) & 1 == 1) & ((idx >> m) & 1 == 0)
            s = idx[sel]
            srcs.append(s)
            dsts.append(s ^ (1 << k) ^ (1 << m))
            coefs.append(np.full(s.size, c_mk, dtype=np.complex128))
    if drive_on and drive.rabi != 0:
        phases = np.exp(2j * np.pi * (config.positions @ drive.k_hat))
        for a in range(n):
            w = 0.5 * drive.rabi * phases[a]
            s_up = idx[(idx >> a) & 1 == 0]
            d_up = s_up | (1 << a)
            srcs.extend([s_up, d_up])
            dsts.extend([d_up, s_up])
            coefs.extend(
                [
                    np.full(s_up.size, w, dtype=np.complex128),
                    np.full(s_up.size, np.conj(w), dtype=np.complex128),
                ]
            )
    if srcs:
        src = np.concatenate(srcs)
        dst = np.concatenate(dsts)
        coef = np.concatenate(coefs)
    else:
        src = np.empty(0, dtype=np.int64)
        dst = np.empty(0, dtype=np.int64)
        coef = np.empty(0, dtype=np.complex128)
    return diag_k, src, dst, coef, np.ascontiguousarray(gamma), set_idx, clear_idx


@njit(cache=True)
def lindblad_apply(rho, diag_k, src, dst, coef, gamma, set_idx, clear_idx, out):
    dim = rho.shape[0]
    for i in range(dim):
        di = diag_k[i]
        for j in range(dim):
            out[i, j] = -1j * (di - np.conj(diag_k[j])) * rho[i, j]
    for e in range(src.size):
        s = src[e]
        d = dst[e]
        c = -1j * coef[e]
        for j in range(dim):
            out[d, j] += c * rho[s, j]
        cc = 1j * np.conj(coef[e])
        for i in range(dim):
            out[i, d] += cc * rho[i, s]
    n_at = gamma.shape[0]
    half = set_idx.shape[1]
    for m in range(n_at):
        for k in range(n_at):
            g = gamma[m, k]
            if g == 0.0:
                continue
            for a in range(half):
                sa = set_idx[k, a]
                ca = clear_idx[k, a]
                for b in range(half):
                    out[ca, clear_idx[m, b]] += g * rho[sa, set_idx[m, b]]
    return out


@njit(cache=True)
def _error_norm(err, y0, y1, rtol, atol):
    dim = y0.shape[0]
    acc = 0.0
    for i in range(dim):
        for j in range(dim):
            sc = atol + rtol * max(abs(y0[i, j]), abs(y1[i, j]))
            q = abs(err[i, j]) / sc
            acc += q * q
    return np.sqrt(acc / (dim * dim))


@njit(cache=True)
def dopri5_segment(
    y,
    t0,
    t1,
    grid,
    snaps,
    rtol,
    atol,
    max_step,
    diag_k,
    src,
    dst,
    coef,
    gamma,
    set_idx,
    clear_idx,
    a_tab,
    c_tab,
    e_tab,
    p_tab,
):
    """Integrate y in place from t0 to t1, filling snaps at the grid times.

    grid must be sorted inside [t0, t1]. Returns (status, n_accepted,
    n_rejected); on STEP_UNDERFLOW the contents of y/snaps are unspecified.
    """
    dim = y.shape[0]
    k = np.zeros((7, dim, dim), dtype=np.complex128)
    ytmp = np.empty((dim, dim), dtype=np.complex128)
    ynew = np.empty((dim, dim), dtype=np.complex128)
    err = np.empty((dim, dim), dtype=np.complex128)

    ng = grid.size
    gp = 0
    # grid points at (or numerically before) the segment start get the
    # initial state directly
    while gp < ng and grid[gp] <= t0:
        snaps[gp] = y
        gp += 1

    t = t0
    h = min(max_step, t1 - t0)
    lindblad_apply(y, diag_k, src, dst, coef, gamma, set_idx, clear_idx, k[0])
    n_acc = 0
    n_rej = 0
    while t < t1:
        if h > t1 - t:
            h = t1 - t
        last = t + h >= t1
        for s in range(1, 7):
            for i in range(dim):
                for j in range(dim):
                    acc = 0.0 + 0.0j
                    for q in range(s):
                        aq = a_tab[s, q]
                        if aq != 0.0:
                            acc += aq * k[q, i, j]
                    ytmp[i, j] = y[i, j] + h * acc
            lindblad_apply(
                ytmp, diag_k, src, dst, coef, gamma, set_idx, clear_idx, k[s]
            )
        # stage 7 was evaluated at the 5th-order solution: ytmp is y_new
        for i in range(dim):
            for j in range(dim):
                ynew[i, j] = ytmp[i, j]
                acc = 0.0 + 0.0j
                for q in range(7):
                    eq = e_tab[q]
                    if eq != 0.0:
                        acc += eq * k[q, i, j]
                err[i, j] = h * acc
        en = _error_norm(err, y, ynew, rtol, atol)
        if en <= 1.0:
            # dense output for grid points inside (t, t+h]
            while gp < ng and (grid[gp] <= t + h or last):
                theta = (grid[gp] - t) / h
                if theta > 1.0:
                    theta = 1.0
                for i in range(dim):
                    for j in range(dim):
                        acc = 0.0 + 0.0j
                        for q in range(7):
                            w = theta * (
                                p_tab[q, 0]
                                + theta
                                * (p_tab[q, 1] + theta * (p_tab[q, 2] + theta * p_tab[q, 3]))
                            )
                            acc += w * k[q, i, j]
                        snaps[gp, i, j] = y[i, j] + h * acc
                gp += 1
            t = t1 if last else t + h
            for i in range(dim):
                for j in range(dim):
                    y[i, j] = ynew[i, j]
                    k[0, i, j] = k[6, i, j]  # FSAL
            n_acc += 1
            if en == 0.0:
                fac = 10.0
            else:
                fac = min(10.0, max(0.2, 0.9 * en ** -0.2))
            h = min(max_step, h * fac)
        else:
            h = h * min(1.0, max(0.2, 0.9 * en ** -0.2))
            n_rej += 1
            if h < 1e-14 * max(1.0, abs(t)):
                return STEP_UNDERFLOW, n_acc, n_rej
    while gp < ng:  # endpoint within roundoff
        snaps[gp] = y
        gp += 1
    return OK, n_acc, n_rej


@njit(cache=True)
def rk4_segment(
    y,
    t0,
    t1,
    grid,
    snaps,
    step,
    diag_k,
    src,
    dst,
    coef,
    gamma,
    set_idx,
    clear_idx,
):
    """Fixed-step classical RK4 cross-check; lands exactly on grid points."""
    dim = y.shape[0]
    k1 = np.empty((dim, dim), dtype=np.complex128)
    k2 = np.empty((dim, dim), dtype=np.complex128)
    k3 = np.empty((dim, dim), dtype=np.complex128)
    k4 = np.empty((dim, dim), dtype=np.complex128)
    ytmp = np.empty((dim, dim), dtype=np.complex128)

    ng = grid.size
    gp = 0
    while gp < ng and grid[gp] <= t0:
        snaps[gp] = y
        gp += 1
    t_prev = t0
    while gp < ng:
        t_next = grid[gp]
        nsub = max(1, int(np.ceil((t_next - t_prev) / step - 1e-12)))
        h = (t_next - t_prev) / nsub
        for _ in range(nsub):
            lindblad_apply(y, diag_k, src, dst, coef, gamma, set_idx, clear_idx, k1)
            for i in range(dim):
                for j in range(dim):
                    ytmp[i, j] = y[i, j] + 0.5 * h * k1[i, j]
            lindblad_apply(ytmp, diag_k, src, dst, coef, gamma, set_idx, clear_idx, k2)
            for i in range(dim):
                for j in range(dim):
                    ytmp[i, j] = y[i, j] + 0.5 * h * k2[i, j]
            lindblad_apply(ytmp, diag_k, src, dst, coef, gamma, set_idx, clear_idx, k3)
            for i in range(dim):
                for j in range(dim):
                    ytmp[i, j] = y[i, j] + h * k3[i, j]
            lindblad_apply(ytmp, diag_k, src, dst, coef, gamma, set_idx, clear_idx, k4)
            for i in range(dim):
                for j in range(dim):
                    y[i, j] += (h / 6.0) * (
                        k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j]
                    )
        snaps[gp] = y
        gp += 1
        t_prev = t_next
    return OK, 0, 0
