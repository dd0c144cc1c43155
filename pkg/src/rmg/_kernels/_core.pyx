# cython: language_level=3
"""Compiled recursion kernels (hot lane).

Mirrors :mod:`rmg._kernels.pykernels` op for op; see that module for the
derivation notes. Tests assert the two lanes agree to rounding.
"""

from libc.math cimport M_PI, NAN, isfinite, lgamma, log, log1p, sqrt

import numpy as np

cdef int C_OK = 0
cdef int C_NO_ROOT = 1
cdef int C_NONPOS_V = 2
cdef int C_A0_ZERO = 3
cdef int C_NONFINITE_LL = 4

OK = C_OK
NO_ROOT = C_NO_ROOT
NONPOS_V = C_NONPOS_V
A0_ZERO = C_A0_ZERO
NONFINITE_LL = C_NONFINITE_LL

cdef double _LOG_2PI = log(2.0 * M_PI)


def student_t_const(double nu):
    return _student_t_const(nu)


cdef inline double _student_t_const(double nu) noexcept nogil:
    return lgamma(0.5 * (nu + 1.0)) - lgamma(0.5 * nu) - 0.5 * log((nu - 2.0) * M_PI)


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(n):
        s += a[i] * b[i]
    return s


cdef struct StepOut:
    int status
    double v0
    double v1
    double m
    double a0
    double a1
    double d2
    double x_hi
    double x_lo


cdef StepOut _step(double v0, double v1, const double* beta, const double* r,
                   Py_ssize_t n_len, double vb0, double vb1, const double* bbar,
                   double a00, double a11, double a10,
                   double g00, double g11, double g10,
                   bint exact, double* dvec, double* bnew) noexcept nogil:
    cdef StepOut out
    cdef double n = <double> n_len
    cdef Py_ssize_t i
    cdef double rM, rr, rho0, rho1, mbar, omb
    cdef double w1, wbar1, ubar, hb0, hb1, a0, a1, c1, c2, d2
    cdef double a0l, a1l, d, scale
    cdef double aa, q, d2n, disc, sq, acoef, x_hi, x_lo, x, u_new, w1n, v0n, v1n, m
    cdef int k
    cdef bint any_in_range

    out.status = C_OK
    out.v0 = v0
    out.v1 = v1
    out.m = 0.0
    out.a0 = 0.0
    out.a1 = 0.0
    out.d2 = 0.0
    out.x_hi = 0.0
    out.x_lo = 0.0

    rM = _dot(beta, r, n_len) / n
    rr = _dot(r, r, n_len)
    rho0 = rM * rM
    rho1 = rr / n - rho0
    if rho1 < 0.0:
        rho1 = 0.0
    mbar = _dot(bbar, beta, n_len) / n
    omb = 1.0 - mbar * mbar

    if not exact:
        a0l = (1.0 - a00 - g00) * v0 + a00 * rho0 + g00 * (vb0 * mbar * mbar)
        a1l = (1.0 - a11 - g11) * v1 + a11 * rho1 + g11 * (vb1 + omb * vb0)
        out.a0 = a0l
        out.a1 = a1l
        if a0l == 0.0:
            out.status = C_A0_ZERO
            return out
        c1 = a10 * rM
        c2 = g10 * mbar * vb0
        d2 = 0.0
        for i in range(n_len):
            dvec[i] = c1 * (r[i] - rM * beta[i]) + c2 * (bbar[i] - mbar * beta[i])
            d2 += dvec[i] * dvec[i]
        out.d2 = d2
        d = d2 / (a0l * a0l * n)
        v0n = a0l * (1.0 + d)
        v1n = a1l - d * a0l
        out.x_hi = 1.0 / (1.0 + d)
        if not (v0n > 0.0 and v1n > 0.0 and isfinite(v0n) and isfinite(v1n)):
            out.status = C_NONPOS_V
            return out
        m = 1.0 / sqrt(1.0 + d)
        for i in range(n_len):
            bnew[i] = (beta[i] + dvec[i] / a0l) * m
        scale = sqrt(n / _dot(bnew, bnew, n_len))
        for i in range(n_len):
            bnew[i] *= scale
        out.v0 = v0n
        out.v1 = v1n
        out.m = m
        out.x_hi = m * m
        return out

    if n_len == 1:
        w1 = 0.0
        wbar1 = 0.0
        ubar = vb0
    else:
        w1 = (n - 1.0) * v1 / n
        wbar1 = (n - 1.0) * vb1 / n
        ubar = vb0 - vb1 / n
    hb0 = vb0 - omb * ubar
    hb1 = wbar1 + omb * ubar
    a0 = (1.0 - a00 - g00) * v0 + a00 * rho0 + g00 * hb0
    a1 = (1.0 - a11 - g11) * w1 + a11 * rho1 + g11 * hb1
    out.a0 = a0
    out.a1 = a1

    d2 = 0.0
    if n_len > 1:
        c1 = a10 * rM
        c2 = g10 * mbar * ubar
        for i in range(n_len):
            dvec[i] = c1 * (r[i] - rM * beta[i]) + c2 * (bbar[i] - mbar * beta[i])
            d2 += dvec[i] * dvec[i]
    out.d2 = d2

    if d2 == 0.0:
        v0n = a0
        if n_len == 1:
            v1n = v1
        else:
            v1n = n * a1 / (n - 1.0)
        out.x_hi = 1.0
        if not (v0n > 0.0 and v1n > 0.0):
            out.status = C_NONPOS_V
            out.m = 1.0
            return out
        for i in range(n_len):
            bnew[i] = beta[i]
        out.v0 = v0n
        out.v1 = v1n
        out.m = 1.0
        return out

    aa = a0 - (a0 + a1) / n
    q = aa * aa
    d2n = d2 / n
    if q == 0.0:
        out.status = C_NO_ROOT
        out.x_hi = NAN
        out.x_lo = NAN
        return out
    disc = q * (q + 4.0 * d2n * (n - 1.0) / (n * n))
    sq = sqrt(disc)
    acoef = q + d2n
    x_hi = (q + 2.0 * d2n / n + sq) / (2.0 * acoef)
    if x_hi > 1.0:
        x_hi = 1.0
    x_lo = (d2n / (n * n)) / (acoef * x_hi)
    out.x_hi = x_hi
    out.x_lo = x_lo

    any_in_range = False
    for k in range(2):
        x = x_hi if k == 0 else x_lo
        if not (x > 1.0 / n and x <= 1.0):
            continue
        any_in_range = True
        u_new = aa / (x - 1.0 / n)
        w1n = (n - 1.0) * (x * a1 - (1.0 - x) * a0) / (n * x - 1.0)
        v0n = a0 + (1.0 - x) * u_new
        v1n = n * w1n / (n - 1.0)
        if v0n > 0.0 and v1n > 0.0 and isfinite(v0n) and isfinite(v1n):
            m = sqrt(x)
            for i in range(n_len):
                bnew[i] = m * beta[i] + dvec[i] / (m * u_new)
            scale = sqrt(n / _dot(bnew, bnew, n_len))
            for i in range(n_len):
                bnew[i] *= scale
            out.v0 = v0n
            out.v1 = v1n
            out.m = m
            return out
    out.status = C_NONPOS_V if any_in_range else C_NO_ROOT
    return out


def filter_path(object r_in, double v0, double v1, object beta0_in,
                double vb0, double vb1, object bbar_in,
                double a00, double a11, double a10,
                double g00, double g11, double g10,
                bint exact, int noise_kind, double nu,
                bint keep_beta, bint keep_eta):
    """Compiled twin of ``pykernels.filter_path``; same contract."""
    r_np = np.ascontiguousarray(r_in, dtype=np.float64)
    cdef const double[:, ::1] r = r_np
    cdef Py_ssize_t t_len = r.shape[0]
    cdef Py_ssize_t n_len = r.shape[1]
    cdef double n = <double> n_len

    beta_np = np.array(beta0_in, dtype=np.float64)
    bbar_np = np.ascontiguousarray(bbar_in, dtype=np.float64)
    cdef double[::1] beta = beta_np
    cdef const double[::1] bbar = bbar_np
    cdef double[::1] dvec = np.empty(n_len)
    cdef double[::1] bnew = np.empty(n_len)

    v0s_np = np.empty(t_len)
    v1s_np = np.empty(t_len)
    mbars_np = np.empty(t_len)
    ms_np = np.empty(t_len)
    ll_np = np.zeros(t_len)
    cdef double[::1] v0s = v0s_np
    cdef double[::1] v1s = v1s_np
    cdef double[::1] mbars = mbars_np
    cdef double[::1] ms = ms_np
    cdef double[::1] ll_days = ll_np

    betas_np = np.empty((t_len, n_len)) if keep_beta else None
    eta_np = np.empty((t_len, n_len)) if keep_eta else None
    cdef double[:, ::1] betas = betas_np if keep_beta else None
    cdef double[:, ::1] eta = eta_np if keep_eta else None

    cdef double tconst = _student_t_const(nu) if noise_kind == 2 else 0.0
    cdef double loglik = 0.0
    cdef double rM, rr, ldet, quad, s, cm, inv_sq_v1, e_i, ll
    cdef Py_ssize_t t, i
    cdef StepOut st
    cdef int status = C_OK
    cdef Py_ssize_t fail_t = -1
    cdef tuple diag = (0.0, 0.0, 0.0, 0.0, 0.0)

    st.status = C_OK
    for t in range(t_len):
        v0s[t] = v0
        v1s[t] = v1
        mbars[t] = _dot(&bbar[0], &beta[0], n_len) / n
        if keep_beta:
            for i in range(n_len):
                betas[t, i] = beta[i]
        ll = 0.0
        if noise_kind != 0 or keep_eta:
            rM = _dot(&beta[0], &r[t, 0], n_len) / n
            ldet = log(n * v0) + (n - 1.0) * log(v1)
            cm = rM / sqrt(n * v0)
            inv_sq_v1 = 1.0 / sqrt(v1)
            if keep_eta or noise_kind == 2:
                s = 0.0
                for i in range(n_len):
                    e_i = cm * beta[i] + (r[t, i] - rM * beta[i]) * inv_sq_v1
                    if keep_eta:
                        eta[t, i] = e_i
                    if noise_kind == 2:
                        s += log1p(e_i * e_i / (nu - 2.0))
                if noise_kind == 2:
                    ll = n * tconst - 0.5 * (nu + 1.0) * s - 0.5 * ldet
            if noise_kind == 1:
                rr = _dot(&r[t, 0], &r[t, 0], n_len)
                quad = rM * rM / v0 + (rr - n * rM * rM) / v1
                ll = -0.5 * quad - 0.5 * n * _LOG_2PI - 0.5 * ldet
            if noise_kind != 0 and not isfinite(ll):
                status = C_NONFINITE_LL
                fail_t = t
                diag = (v0, v1, 0.0, 0.0, 0.0)
                break
            ll_days[t] = ll
            loglik += ll
        st = _step(v0, v1, &beta[0], &r[t, 0], n_len, vb0, vb1, &bbar[0],
                   a00, a11, a10, g00, g11, g10, exact, &dvec[0], &bnew[0])
        ms[t] = st.m
        if st.status != C_OK:
            status = st.status
            fail_t = t
            diag = (st.a0, st.a1, st.d2, st.x_hi, st.x_lo)
            break
        v0 = st.v0
        v1 = st.v1
        for i in range(n_len):
            beta[i] = bnew[i]

    if status == C_OK:
        diag = (st.a0, st.a1, st.d2, st.x_hi, st.x_lo)
    return (status, int(fail_t), loglik, ll_np, v0s_np, v1s_np, mbars_np, ms_np,
            betas_np, eta_np, diag)


def simulate_core(object eta_in, double v0, double v1, object beta0_in,
                  double vb0, double vb1, object bbar_in,
                  double a00, double a11, double a10,
                  double g00, double g11, double g10, bint exact):
    """Compiled twin of ``pykernels.simulate_core``; same contract."""
    eta_np = np.ascontiguousarray(eta_in, dtype=np.float64)
    cdef const double[:, ::1] eta = eta_np
    cdef Py_ssize_t t_len = eta.shape[0]
    cdef Py_ssize_t n_len = eta.shape[1]
    cdef double n = <double> n_len

    beta_np = np.array(beta0_in, dtype=np.float64)
    bbar_np = np.ascontiguousarray(bbar_in, dtype=np.float64)
    cdef double[::1] beta = beta_np
    cdef const double[::1] bbar = bbar_np
    cdef double[::1] dvec = np.empty(n_len)
    cdef double[::1] bnew = np.empty(n_len)

    out_np = np.empty((t_len, n_len))
    v0s_np = np.empty(t_len)
    v1s_np = np.empty(t_len)
    mbars_np = np.empty(t_len)
    ms_np = np.empty(t_len)
    betas_np = np.empty((t_len, n_len))
    cdef double[:, ::1] out = out_np
    cdef double[::1] v0s = v0s_np
    cdef double[::1] v1s = v1s_np
    cdef double[::1] mbars = mbars_np
    cdef double[::1] ms = ms_np
    cdef double[:, ::1] betas = betas_np

    cdef double pe, sq0, sq1
    cdef Py_ssize_t t, i
    cdef StepOut st
    cdef int status = C_OK
    cdef Py_ssize_t fail_t = -1
    cdef tuple diag = (0.0, 0.0, 0.0, 0.0, 0.0)

    st.status = C_OK
    for t in range(t_len):
        v0s[t] = v0
        v1s[t] = v1
        mbars[t] = _dot(&bbar[0], &beta[0], n_len) / n
        for i in range(n_len):
            betas[t, i] = beta[i]
        pe = _dot(&beta[0], &eta[t, 0], n_len) / n
        sq0 = sqrt(n * v0)
        sq1 = sqrt(v1)
        for i in range(n_len):
            out[t, i] = sq0 * pe * beta[i] + sq1 * (eta[t, i] - pe * beta[i])
        st = _step(v0, v1, &beta[0], &out[t, 0], n_len, vb0, vb1, &bbar[0],
                   a00, a11, a10, g00, g11, g10, exact, &dvec[0], &bnew[0])
        ms[t] = st.m
        if st.status != C_OK:
            status = st.status
            fail_t = t
            diag = (st.a0, st.a1, st.d2, st.x_hi, st.x_lo)
            break
        v0 = st.v0
        v1 = st.v1
        for i in range(n_len):
            beta[i] = bnew[i]

    if status == C_OK:
        diag = (st.a0, st.a1, st.d2, st.x_hi, st.x_lo)
    return (status, int(fail_t), out_np, v0s_np, v1s_np, mbars_np, ms_np, betas_np, diag)
