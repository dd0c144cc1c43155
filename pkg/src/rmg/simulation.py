"""Monte Carlo generation and predicted-return machinery.

All randomness flows through a counter-based Philox generator keyed by an
explicit seed, so every sample is reproducible bit for bit from
(config, seed).
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np
import pandas as pd

from . import _kernels
from .errors import RecursionFailure, RmgError
from .likelihood import NoiseModel
from .panel import ReturnsPanel
from .recursion import CovState, ModelParams, StatePath
from .targeting import TargetSpec

__all__ = [
    "make_rng",
    "simulate_path",
    "predicted_returns",
    "pdf_chi2",
]


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by an explicit seed."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _synthetic_dates(t_len: int, start: str):
    return [d.date() for d in pd.bdate_range(start, periods=t_len)]


def simulate_path(
    target: TargetSpec,
    params: ModelParams,
    T: int,
    seed: int,
    *,
    noise: Optional[NoiseModel] = None,
    burn_in: int = 500,
    mode: str = "exact",
    start_date: str = "2000-01-03",
    assets: Optional[list] = None,
):
    """Generate a synthetic panel from the model dynamics.

    Each day draws an i.i.d. noise vector, scales it by H(t)^{1/2}, emits
    the return, and advances the state with the realized return. A warm-up
    of ``burn_in`` days is simulated and discarded so that the emitted path
    has forgotten the deterministic start at the target state.

    Returns
    -------
    (ReturnsPanel, StatePath)
        The emitted returns (raw model scale, not re-normalized) and the
        state used to generate each row. Deterministic given ``seed``.
    """
    if T < 1:
        raise RmgError("T must be >= 1")
    if burn_in < 0:
        raise RmgError("burn_in must be >= 0")
    if mode not in ("exact", "large_n"):
        raise RmgError(f"unknown mode {mode!r}")
    noise = noise or params.noise
    n = target.n_assets
    rng = make_rng(seed)
    eta = noise.draw(rng, (T + burn_in, n))
    state0 = CovState.from_target(target)
    status, fail_t, returns, v0s, v1s, mbars, ms, betas, diag = _kernels.simulate_core(
        eta,
        state0.v0, state0.v1, state0.beta,
        target.v_bar_0, target.v_bar_1, target.beta_bar,
        params.a00, params.a11, params.a10, params.g00, params.g11, params.g10,
        mode == "exact",
    )
    if status != _kernels.OK:
        raise RecursionFailure(
            f"{_kernels.STATUS_MESSAGES[status]} at simulation step {fail_t}",
            t=fail_t, status=status,
            diagnostics={"A0": diag[0], "A1": diag[1], "D2": diag[2],
                         "m2_candidates": (diag[3], diag[4])},
        )
    sl = slice(burn_in, burn_in + T)
    names = assets or [f"A{i:03d}" for i in range(n)]
    panel = ReturnsPanel(returns[sl].copy(), _synthetic_dates(T, start_date), names)
    path = StatePath(
        v0s[sl].copy(), v1s[sl].copy(), betas[sl].copy(),
        mbars=mbars[sl].copy(), ms=ms[sl].copy(),
    )
    return panel, path


def predicted_returns(
    panel: ReturnsPanel,
    states,
    noise: NoiseModel,
    replications: int = 10,
    seed: int = 0,
) -> np.ndarray:
    """Model-implied return draws per day for pdf comparison.

    For each day t, draws ``replications`` noise vectors and maps them
    through H(t)^{1/2}. Pooling over t (per asset or globally) gives the
    predicted density against which the observed returns are compared.

    Returns
    -------
    (T, replications, N) ndarray
    """
    if replications < 0:
        raise RmgError("replications must be >= 0")
    t_len, n = panel.returns.shape
    if len(states) != t_len:
        raise RmgError(f"{len(states)} states for {t_len} panel rows")
    if isinstance(states, StatePath):
        v0s, v1s, betas = states.v0s, states.v1s, states.betas
    else:
        v0s = np.array([s.v0 for s in states])
        v1s = np.array([s.v1 for s in states])
        betas = np.array([s.beta for s in states])
    out = np.empty((t_len, replications, n))
    if replications == 0:
        return out
    rng = make_rng(seed)
    chunk = max(1, 262144 // max(replications * n, 1))
    for lo in range(0, t_len, chunk):
        hi = min(lo + chunk, t_len)
        eta = noise.draw(rng, (hi - lo, replications, n))
        b = betas[lo:hi]
        proj = np.einsum("trn,tn->tr", eta, b) / n
        market = proj[:, :, None] * b[:, None, :]
        scale0 = np.sqrt(n * v0s[lo:hi])[:, None, None]
        scale1 = np.sqrt(v1s[lo:hi])[:, None, None]
        out[lo:hi] = scale0 * market + scale1 * (eta - market)
    return out


def pdf_chi2(empirical, predicted, bins: int = 50) -> float:
    """Chi-square per bin between two sample densities.

    Both samples are histogrammed on a shared equal-width grid; adjacent
    bins are merged until each side's scaled expected count reaches 5, and
    the normalized two-sample chi-square statistic is averaged over the
    surviving bins. Two independent samples of the same law give values
    near 1; gross mismatches grow without bound.
    """
    x = np.asarray(empirical, dtype=np.float64).ravel()
    y = np.asarray(predicted, dtype=np.float64).ravel()
    x = x[np.isfinite(x)]
    y = y[np.isfinite(y)]
    if x.size == 0 or y.size == 0:
        raise RmgError("both samples must be non-empty")
    if bins < 5:
        raise RmgError("need at least 5 bins")
    lo = min(x.min(), y.min())
    hi = max(x.max(), y.max())
    if not hi > lo:
        raise RmgError("degenerate sample support")
    edges = np.linspace(lo, hi, bins + 1)
    a, _ = np.histogram(x, edges)
    b, _ = np.histogram(y, edges)
    na, nb = float(a.sum()), float(b.sum())

    merged_a, merged_b = [], []
    acc_a = acc_b = 0.0
    for k in range(bins):
        acc_a += a[k]
        acc_b += b[k]
        tot = acc_a + acc_b
        if tot > 0 and min(na, nb) * tot / (na + nb) >= 5.0:
            merged_a.append(acc_a)
            merged_b.append(acc_b)
            acc_a = acc_b = 0.0
    if acc_a + acc_b > 0:
        if merged_a:
            merged_a[-1] += acc_a
            merged_b[-1] += acc_b
        else:
            merged_a, merged_b = [acc_a], [acc_b]
    a = np.asarray(merged_a, dtype=np.float64)
    b = np.asarray(merged_b, dtype=np.float64)
    if a.size == 0:
        raise RmgError("all bins empty after merging")
    sa = math.sqrt(nb / na)
    sb = math.sqrt(na / nb)
    chi2 = float(np.sum((a * sa - b * sb) ** 2 / (a + b)))
    return chi2 / a.size
