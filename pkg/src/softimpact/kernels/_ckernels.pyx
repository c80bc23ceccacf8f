# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the trajectory hot loops.

Semantics must stay in lockstep with pykernels.py; the parity tests in
tests/test_kernels.py hold both lanes to the same event sequences.  The
inner loops work on raw pointers: keeping the memoryview structs out of
the hot path is what lets the C compiler vectorize them.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()


cdef inline void _dual_matvec(const double* V, Py_ssize_t N, Py_ssize_t M,
                              const double* cr, const double* ci,
                              double* out_re, double* out_im) noexcept nogil:
    # out_re + i out_im = V @ (cr + i ci), rows contiguous
    cdef Py_ssize_t i, n
    cdef const double* row
    cdef double sre, sim
    for i in range(N):
        row = V + i * M
        sre = 0.0
        sim = 0.0
        for n in range(M):
            sre += row[n] * cr[n]
            sim += row[n] * ci[n]
        out_re[i] = sre
        out_im[i] = sim


cdef inline void _density_ptr(const double* V, Py_ssize_t N, Py_ssize_t M,
                              const double* cr, const double* ci,
                              double* rho) noexcept nogil:
    cdef Py_ssize_t i, n
    cdef const double* row
    cdef double sre, sim
    for i in range(N):
        row = V + i * M
        sre = 0.0
        sim = 0.0
        for n in range(M):
            sre += row[n] * cr[n]
            sim += row[n] * ci[n]
        rho[i] = sre * sre + sim * sim


cdef inline void _project_ptr(const double* V, Py_ssize_t N, Py_ssize_t M,
                              const double* g, double dx, double* out) noexcept nogil:
    cdef Py_ssize_t i, n
    cdef const double* row
    cdef double gi
    for n in range(M):
        out[n] = 0.0
    for i in range(N):
        gi = g[i]
        if gi != 0.0:
            row = V + i * M
            for n in range(M):
                out[n] += row[n] * gi
    for n in range(M):
        out[n] *= dx


def reconstruct(states, coeffs):
    """psi on the grid from eigenbasis coefficients: sum_n c_n v_n(x)."""
    V = np.ascontiguousarray(states, dtype=np.float64)
    c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef Py_ssize_t N = V.shape[0], M = V.shape[1]
    cr = np.ascontiguousarray(c.real)
    ci = np.ascontiguousarray(c.imag)
    out_re = np.empty(N, dtype=np.float64)
    out_im = np.empty(N, dtype=np.float64)
    cdef double[:, ::1] Vm = V
    cdef double[::1] crm = cr, cim = ci, rem = out_re, imm = out_im
    with nogil:
        _dual_matvec(&Vm[0, 0], N, M, &crm[0], &cim[0], &rem[0], &imm[0])
    return out_re + 1j * out_im


def density(states, coeffs):
    """|psi(x)|^2 on the grid, without renormalization."""
    V = np.ascontiguousarray(states, dtype=np.float64)
    c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef Py_ssize_t N = V.shape[0], M = V.shape[1]
    cr = np.ascontiguousarray(c.real)
    ci = np.ascontiguousarray(c.imag)
    out = np.empty(N, dtype=np.float64)
    cdef double[:, ::1] Vm = V
    cdef double[::1] crm = cr, cim = ci, om = out
    with nogil:
        _density_ptr(&Vm[0, 0], N, M, &crm[0], &cim[0], &om[0])
    return out


def project_real(states, values, double dx):
    """dx-weighted projection of a real grid function onto the eigenbasis."""
    V = np.ascontiguousarray(states, dtype=np.float64)
    g = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t N = V.shape[0], M = V.shape[1]
    out = np.empty(M, dtype=np.float64)
    cdef double[:, ::1] Vm = V
    cdef double[::1] gm = g, om = out
    with nogil:
        _project_ptr(&Vm[0, 0], N, M, &gm[0], dx, &om[0])
    return out


def run_wall_loop(
    states,
    energies,
    x,
    double dx,
    double dt,
    coeffs0,
    int n_steps,
    int postulate,
    double r_fixed,
    double sigma_post,
    double x_wall,
    int wall_index,
    double wall_weight,
    int refractory,
    bint sample_beyond_only,
    int threshold_mode,
    threshold_draws,
    location_draws,
    int snapshot_stride=0,
):
    """Fused wall-collapse trajectory loop; see pykernels.run_wall_loop."""
    V_arr = np.ascontiguousarray(states, dtype=np.float64)
    E_arr = np.ascontiguousarray(energies, dtype=np.float64)
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    thr_arr = np.ascontiguousarray(threshold_draws, dtype=np.float64)
    loc_arr = np.ascontiguousarray(location_draws, dtype=np.float64)

    cdef Py_ssize_t N = V_arr.shape[0], M = V_arr.shape[1]

    c_arr = np.array(coeffs0, dtype=np.complex128)
    cr_arr = np.ascontiguousarray(c_arr.real)
    ci_arr = np.ascontiguousarray(c_arr.imag)
    c0r_arr = cr_arr.copy()
    c0i_arr = ci_arr.copy()
    ph_arr = np.exp(-1j * E_arr * dt)
    phr_arr = np.ascontiguousarray(ph_arr.real)
    phi_arr = np.ascontiguousarray(ph_arr.imag)

    pdf_sum_arr = np.zeros(N, dtype=np.float64)
    prob_sum_arr = np.zeros(M, dtype=np.float64)
    overlap_arr = np.empty(n_steps + 1, dtype=np.float64)
    energy_arr = np.empty(n_steps + 1, dtype=np.float64)
    events_arr = np.zeros((n_steps, 6), dtype=np.float64)
    rho_arr = np.empty(N, dtype=np.float64)
    g_arr = np.empty(N, dtype=np.float64)
    cg_arr = np.empty(M, dtype=np.float64)
    cdef int n_snaps = n_steps // snapshot_stride + 1 if snapshot_stride else 0
    snapshots_arr = np.zeros((n_snaps, M), dtype=np.complex128)
    snap_view_arr = np.zeros((max(n_snaps, 1), 2 * M))
    if n_snaps:
        snap_view_arr = snapshots_arr.view(np.float64).reshape(n_snaps, 2 * M)

    cdef double[:, ::1] Vm = V_arr
    cdef double[::1] Em = E_arr, xm = x_arr, thrm = thr_arr, locm = loc_arr
    cdef double[::1] crm = cr_arr, cim = ci_arr, c0rm = c0r_arr, c0im = c0i_arr
    cdef double[::1] phrm = phr_arr, phim = phi_arr
    cdef double[::1] pdfm = pdf_sum_arr, probm = prob_sum_arr
    cdef double[::1] ovm = overlap_arr, enm = energy_arr
    cdef double[:, ::1] evm = events_arr
    cdef double[::1] rhom = rho_arr, gm = g_arr, cgm = cg_arr
    cdef double[:, ::1] snapm = snap_view_arr

    cdef const double* V = &Vm[0, 0]
    cdef const double* E = &Em[0]
    cdef const double* xg = &xm[0]
    cdef const double* thr_draws = &thrm[0]
    cdef const double* loc_draws = &locm[0]
    cdef double* cr = &crm[0]
    cdef double* ci = &cim[0]
    cdef const double* c0r = &c0rm[0]
    cdef const double* c0i = &c0im[0]
    cdef const double* phr = &phrm[0]
    cdef const double* phi = &phim[0]
    cdef double* pdf_sum = &pdfm[0]
    cdef double* prob_sum = &probm[0]
    cdef double* overlap = &ovm[0]
    cdef double* energy = &enm[0]
    cdef double* rho = &rhom[0]
    cdef double* g = &gm[0]
    cdef double* cg = &cgm[0]
    cdef double* snaps = &snapm[0, 0]

    cdef int n_events = 0
    cdef long last_event = -1000000000
    cdef int k
    cdef Py_ssize_t i, n, lo, idx
    cdef double norm2, inv_norm2, beyond, pre_e, post_e, location, s, target, deficit
    cdef double re, im, tr, ti
    cdef double current_threshold = r_fixed
    cdef bint random_threshold = postulate == 2 or postulate == 4
    cdef bint collapse_at_wall = postulate == 1 or postulate == 2
    cdef bint do_collapse

    if random_threshold:
        current_threshold = thr_draws[0]

    norm2 = 0.0
    re = 0.0
    im = 0.0
    pre_e = 0.0
    for n in range(M):
        norm2 += cr[n] * cr[n] + ci[n] * ci[n]
        re += c0r[n] * cr[n] + c0i[n] * ci[n]
        im += c0r[n] * ci[n] - c0i[n] * cr[n]
        pre_e += (cr[n] * cr[n] + ci[n] * ci[n]) * E[n]
    overlap[0] = sqrt(re * re + im * im)
    energy[0] = pre_e / norm2
    if snapshot_stride:
        for n in range(M):
            snaps[2 * n] = cr[n]
            snaps[2 * n + 1] = ci[n]

    with nogil:
        for k in range(1, n_steps + 1):
            for n in range(M):
                tr = cr[n] * phr[n] - ci[n] * phi[n]
                ti = cr[n] * phi[n] + ci[n] * phr[n]
                cr[n] = tr
                ci[n] = ti
            _density_ptr(V, N, M, cr, ci, rho)
            norm2 = 0.0
            for n in range(M):
                norm2 += cr[n] * cr[n] + ci[n] * ci[n]

            if postulate != 0 and (k - last_event) >= refractory:
                beyond = wall_weight * rho[wall_index]
                for i in range(wall_index + 1, N):
                    beyond += rho[i]
                beyond = beyond * dx / norm2
                if random_threshold and threshold_mode == 0:
                    current_threshold = thr_draws[k]
                if beyond >= current_threshold:
                    pre_e = 0.0
                    for n in range(M):
                        pre_e += (cr[n] * cr[n] + ci[n] * ci[n]) * E[n]
                    pre_e /= norm2
                    do_collapse = True
                    if collapse_at_wall:
                        location = x_wall
                    else:
                        lo = wall_index if sample_beyond_only else 0
                        s = 0.0
                        for i in range(lo, N):
                            s += rho[i]
                        if s <= 0.0:
                            do_collapse = False
                            location = 0.0
                        else:
                            target = loc_draws[k] * s
                            s = 0.0
                            idx = N - 1
                            for i in range(lo, N):
                                s += rho[i]
                                if s > target:
                                    idx = i
                                    break
                            location = xg[idx]
                    if do_collapse:
                        s = 0.0
                        for i in range(N):
                            g[i] = exp(-(xg[i] - location) * (xg[i] - location)
                                       / (4.0 * sigma_post * sigma_post))
                            s += g[i] * g[i]
                        s = sqrt(s * dx)
                        for i in range(N):
                            g[i] /= s
                        _project_ptr(V, N, M, g, dx, cg)
                        s = 0.0
                        for n in range(M):
                            s += cg[n] * cg[n]
                        deficit = 1.0 - s
                        s = sqrt(s)
                        post_e = 0.0
                        for n in range(M):
                            cr[n] = cg[n] / s
                            ci[n] = 0.0
                            post_e += cr[n] * cr[n] * E[n]
                        norm2 = 1.0
                        evm[n_events, 0] = k
                        evm[n_events, 1] = location
                        evm[n_events, 2] = pre_e
                        evm[n_events, 3] = post_e
                        evm[n_events, 4] = current_threshold
                        evm[n_events, 5] = deficit
                        n_events += 1
                        last_event = k
                        if random_threshold and threshold_mode == 1:
                            current_threshold = thr_draws[k]
                        _density_ptr(V, N, M, cr, ci, rho)

            re = 0.0
            im = 0.0
            pre_e = 0.0
            for n in range(M):
                re += c0r[n] * cr[n] + c0i[n] * ci[n]
                im += c0r[n] * ci[n] - c0i[n] * cr[n]
                pre_e += (cr[n] * cr[n] + ci[n] * ci[n]) * E[n]
            overlap[k] = sqrt(re * re + im * im)
            energy[k] = pre_e / norm2
            inv_norm2 = 1.0 / norm2
            for i in range(N):
                pdf_sum[i] += rho[i] * inv_norm2
            for n in range(M):
                prob_sum[n] += cr[n] * cr[n] + ci[n] * ci[n]
            if snapshot_stride != 0 and k % snapshot_stride == 0:
                idx = (k // snapshot_stride) * 2 * M
                for n in range(M):
                    snaps[idx + 2 * n] = cr[n]
                    snaps[idx + 2 * n + 1] = ci[n]

    final = cr_arr + 1j * ci_arr
    return (
        pdf_sum_arr,
        prob_sum_arr,
        overlap_arr,
        energy_arr,
        events_arr[:n_events].copy(),
        snapshots_arr,
        final,
    )
