"""Pure-NumPy recursion kernels (fallback lane).

Reference implementation of the per-day state update, likelihood
accumulation, and Monte Carlo path generation. The compiled lane in
``_core.pyx`` mirrors these semantics exactly; ``tests/test_kernels.py``
asserts the two lanes agree.

One day of the update, given state (v0, v1, beta) with beta'beta = N,
target (v_bar_0, v_bar_1, beta_bar) and the day's return vector r:

* project r onto the market direction: r_M = beta'r / N, and split the
  squared magnitude into rho0 = r_M^2 and rho1 = |r|^2/N - r_M^2;
* form the projected one-step predictors A0, A1 of the two eigen-levels and
  the off-market drive vector D (orthogonal to beta by construction);
* exact mode: solve the quadratic for the squared overlap x = m^2 between
  consecutive beta vectors, keeping the root in (1/N, 1] that yields
  positive eigen-levels, then update levels and rotate beta;
* large-N mode: the same update linearized in 1/N, with
  m^2 = 1/(1 + D^2/(A0^2 N)).
"""
from __future__ import annotations

import math

import numpy as np

OK = 0
NO_ROOT = 1
NONPOS_V = 2
A0_ZERO = 3
NONFINITE_LL = 4

STATUS_MESSAGES = {
    NO_ROOT: "no admissible overlap root in (1/N, 1]",
    NONPOS_V: "update would make an eigen-level non-positive",
    A0_ZERO: "market-level predictor A0 is zero (degenerate large-N step)",
    NONFINITE_LL: "non-finite log-likelihood contribution",
}

_LOG_2PI = math.log(2.0 * math.pi)


def student_t_const(nu: float) -> float:
    """Log normalization of the unit-variance Student-t density."""
    return (
        math.lgamma(0.5 * (nu + 1.0))
        - math.lgamma(0.5 * nu)
        - 0.5 * math.log((nu - 2.0) * math.pi)
    )


def step_core(v0, v1, beta, r, vb0, vb1, bbar, a00, a11, a10, g00, g11, g10, exact):
    """Advance the state one day.

    Returns ``(status, v0_new, v1_new, beta_new, m, diag)`` where ``diag``
    is ``(A0, A1, D2, x_hi, x_lo)``. ``beta_new`` is freshly allocated and
    renormalized to beta'beta = N; it is None when status != OK.
    """
    n_int = beta.shape[0]
    n = float(n_int)
    rM = float(beta @ r) / n
    rr = float(r @ r)
    rho0 = rM * rM
    rho1 = rr / n - rho0
    if rho1 < 0.0:
        rho1 = 0.0
    mbar = float(bbar @ beta) / n
    omb = 1.0 - mbar * mbar

    if not exact:
        a0l = (1.0 - a00 - g00) * v0 + a00 * rho0 + g00 * (vb0 * mbar * mbar)
        a1l = (1.0 - a11 - g11) * v1 + a11 * rho1 + g11 * (vb1 + omb * vb0)
        if a0l == 0.0:
            return A0_ZERO, v0, v1, None, 0.0, (a0l, a1l, 0.0, 0.0, 0.0)
        d_vec = (a10 * rM) * (r - rM * beta) + (g10 * mbar * vb0) * (bbar - mbar * beta)
        d2 = float(d_vec @ d_vec)
        d = d2 / (a0l * a0l * n)
        v0n = a0l * (1.0 + d)
        v1n = a1l - d * a0l
        if not (v0n > 0.0 and v1n > 0.0 and math.isfinite(v0n) and math.isfinite(v1n)):
            return NONPOS_V, v0, v1, None, 0.0, (a0l, a1l, d2, 1.0 / (1.0 + d), 0.0)
        m = 1.0 / math.sqrt(1.0 + d)
        beta_new = (beta + d_vec / a0l) * m
        beta_new *= math.sqrt(n / float(beta_new @ beta_new))
        return OK, v0n, v1n, beta_new, m, (a0l, a1l, d2, m * m, 0.0)

    if n_int == 1:
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

    if n_int == 1:
        d2 = 0.0
        d_vec = None
    else:
        d_vec = (a10 * rM) * (r - rM * beta) + (g10 * mbar * ubar) * (bbar - mbar * beta)
        d2 = float(d_vec @ d_vec)

    if d2 == 0.0:
        v0n = a0
        v1n = v1 if n_int == 1 else n * a1 / (n - 1.0)
        if not (v0n > 0.0 and v1n > 0.0):
            return NONPOS_V, v0, v1, None, 1.0, (a0, a1, 0.0, 1.0, 0.0)
        return OK, v0n, v1n, beta.copy(), 1.0, (a0, a1, 0.0, 1.0, 0.0)

    aa = a0 - (a0 + a1) / n
    q = aa * aa
    d2n = d2 / n
    if q == 0.0:
        return NO_ROOT, v0, v1, None, 0.0, (a0, a1, d2, math.nan, math.nan)
    disc = q * (q + 4.0 * d2n * (n - 1.0) / (n * n))
    sq = math.sqrt(disc)
    acoef = q + d2n
    x_hi = (q + 2.0 * d2n / n + sq) / (2.0 * acoef)
    if x_hi > 1.0:
        x_hi = 1.0
    x_lo = (d2n / (n * n)) / (acoef * x_hi)

    any_in_range = False
    for x in (x_hi, x_lo):
        if not (x > 1.0 / n and x <= 1.0):
            continue
        any_in_range = True
        u_new = aa / (x - 1.0 / n)
        w1n = (n - 1.0) * (x * a1 - (1.0 - x) * a0) / (n * x - 1.0)
        v0n = a0 + (1.0 - x) * u_new
        v1n = n * w1n / (n - 1.0)
        if v0n > 0.0 and v1n > 0.0 and math.isfinite(v0n) and math.isfinite(v1n):
            m = math.sqrt(x)
            beta_new = m * beta + d_vec / (m * u_new)
            beta_new *= math.sqrt(n / float(beta_new @ beta_new))
            return OK, v0n, v1n, beta_new, m, (a0, a1, d2, x_hi, x_lo)
    status = NONPOS_V if any_in_range else NO_ROOT
    return status, v0, v1, None, 0.0, (a0, a1, d2, x_hi, x_lo)


def _loglik_row(v0, v1, beta, row, noise_kind, nu, tconst, eta_out):
    """Log-density of one return row under the current state.

    Fills ``eta_out`` with the de-garched noise when it is not None.
    """
    n = float(beta.shape[0])
    rM = float(beta @ row) / n
    ldet = math.log(n * v0) + (n - 1.0) * math.log(v1)
    eta = None
    if eta_out is not None or noise_kind == 2:
        eta = rM / math.sqrt(n * v0) * beta + (row - rM * beta) / math.sqrt(v1)
        if eta_out is not None:
            eta_out[:] = eta
    if noise_kind == 0:
        return 0.0
    if noise_kind == 1:
        rr = float(row @ row)
        quad = rM * rM / v0 + (rr - n * rM * rM) / v1
        return -0.5 * quad - 0.5 * n * _LOG_2PI - 0.5 * ldet
    s = float(np.sum(np.log1p(eta * eta / (nu - 2.0))))
    return n * tconst - 0.5 * (nu + 1.0) * s - 0.5 * ldet


def filter_path(
    r,
    v0,
    v1,
    beta0,
    vb0,
    vb1,
    bbar,
    a00,
    a11,
    a10,
    g00,
    g11,
    g10,
    exact,
    noise_kind,
    nu,
    keep_beta,
    keep_eta,
):
    """Run the recursion over a return matrix, accumulating the likelihood.

    Returns
    -------
    tuple
        ``(status, fail_t, loglik, ll_days, v0s, v1s, mbars, ms, betas,
        eta, diag)``; arrays hold the state *used for* each row (the update
        happens after the row is scored). ``betas``/``eta`` are None unless
        requested.
    """
    r = np.ascontiguousarray(r, dtype=np.float64)
    t_len, n = r.shape
    bbar = np.ascontiguousarray(bbar, dtype=np.float64)
    beta = np.array(beta0, dtype=np.float64)
    v0s = np.empty(t_len)
    v1s = np.empty(t_len)
    mbars = np.empty(t_len)
    ms = np.empty(t_len)
    ll_days = np.zeros(t_len)
    betas = np.empty((t_len, n)) if keep_beta else None
    eta = np.empty((t_len, n)) if keep_eta else None
    tconst = student_t_const(nu) if noise_kind == 2 else 0.0
    loglik = 0.0
    diag = (0.0,) * 5
    for t in range(t_len):
        row = r[t]
        v0s[t] = v0
        v1s[t] = v1
        mbars[t] = float(bbar @ beta) / n
        if betas is not None:
            betas[t] = beta
        ll = _loglik_row(
            v0, v1, beta, row, noise_kind, nu, tconst, eta[t] if keep_eta else None
        )
        if noise_kind and not math.isfinite(ll):
            return (NONFINITE_LL, t, loglik, ll_days, v0s, v1s, mbars, ms, betas, eta,
                    (v0, v1, 0.0, 0.0, 0.0))
        ll_days[t] = ll
        loglik += ll
        status, v0, v1, beta_new, m, diag = step_core(
            v0, v1, beta, row, vb0, vb1, bbar, a00, a11, a10, g00, g11, g10, exact
        )
        ms[t] = m
        if status != OK:
            return (status, t, loglik, ll_days, v0s, v1s, mbars, ms, betas, eta, diag)
        beta = beta_new
    return (OK, -1, loglik, ll_days, v0s, v1s, mbars, ms, betas, eta, diag)


def simulate_core(eta, v0, v1, beta0, vb0, vb1, bbar, a00, a11, a10, g00, g11, g10, exact):
    """Map i.i.d. unit-variance noise rows through the model.

    Each row is scaled by the current H(t)^{1/2} and the state is then
    advanced with the realized return. Returns
    ``(status, fail_t, returns, v0s, v1s, mbars, ms, betas, diag)``.
    """
    eta = np.ascontiguousarray(eta, dtype=np.float64)
    t_len, n_int = eta.shape
    n = float(n_int)
    bbar = np.ascontiguousarray(bbar, dtype=np.float64)
    beta = np.array(beta0, dtype=np.float64)
    out = np.empty((t_len, n_int))
    v0s = np.empty(t_len)
    v1s = np.empty(t_len)
    mbars = np.empty(t_len)
    ms = np.empty(t_len)
    betas = np.empty((t_len, n_int))
    diag = (0.0,) * 5
    for t in range(t_len):
        v0s[t] = v0
        v1s[t] = v1
        mbars[t] = float(bbar @ beta) / n
        betas[t] = beta
        e = eta[t]
        pe = float(beta @ e) / n
        row = math.sqrt(n * v0) * pe * beta + math.sqrt(v1) * (e - pe * beta)
        out[t] = row
        status, v0, v1, beta_new, m, diag = step_core(
            v0, v1, beta, row, vb0, vb1, bbar, a00, a11, a10, g00, g11, g10, exact
        )
        ms[t] = m
        if status != OK:
            return (status, t, out, v0s, v1s, mbars, ms, betas, diag)
        beta = beta_new
    return (OK, -1, out, v0s, v1s, mbars, ms, betas, diag)
