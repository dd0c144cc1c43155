"""Post-fit analytics: correlations, risk measure, leverage, comparisons.

Everything here is a pure function of immutable inputs and returns tidy
data (arrays or long-format DataFrames ready for CSV); no plotting.
Pairwise quantities are computed from the state in O(1) per pair via

    H_ij(t) = (v0 - v1/N) beta_i beta_j + v1 delta_ij,

never materializing H.
"""
from __future__ import annotations

import math
import warnings
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .errors import AnalyticsError
from .panel import ReturnsPanel
from .recursion import CovState, StatePath

__all__ = [
    "conditional_correlations",
    "deco_correlation",
    "sector_median_corr",
    "risk_measure",
    "leverage_asymmetry",
    "acf_abs",
    "pair_delta",
    "cliffs_delta",
]


def _state_arrays(states):
    if isinstance(states, StatePath):
        return states.v0s, states.v1s, states.betas
    v0s = np.array([s.v0 for s in states])
    v1s = np.array([s.v1 for s in states])
    betas = np.array([s.beta for s in states])
    return v0s, v1s, betas


def conditional_correlations(state: CovState, pairs: Sequence) -> np.ndarray:
    """Conditional correlation for each (i, j) pair under one state.

    ``corr(i, j) = u b_i b_j / sqrt((u b_i^2 + v1)(u b_j^2 + v1))`` with
    ``u = v0 - v1/N``; the diagonal is exactly 1.
    """
    n = state.n_assets
    beta = state.beta
    u = state.v0 - state.v1 / n
    denom = np.sqrt(u * beta * beta + state.v1)
    out = np.empty(len(pairs))
    for k, (i, j) in enumerate(pairs):
        if not (0 <= i < n and 0 <= j < n):
            raise AnalyticsError(f"pair ({i}, {j}) out of range for N={n}")
        if i == j:
            out[k] = 1.0
        else:
            out[k] = u * beta[i] * beta[j] / (denom[i] * denom[j])
    return out


def deco_correlation(state: CovState) -> float:
    """Equicorrelation implied when every beta equals 1.

    Closed form ``rho = (N v0 - v1) / (N v0 + (N - 1) v1)``, the pairwise
    correlation of H with a flat market eigenvector.
    """
    n = state.n_assets
    return (n * state.v0 - state.v1) / (n * state.v0 + (n - 1.0) * state.v1)


def _sector_pairs_median(u, v1, beta, idx_a, idx_b, same):
    d = np.sqrt(u * beta * beta + v1)
    num = u * np.outer(beta[idx_a], beta[idx_b])
    den = np.outer(d[idx_a], d[idx_b])
    corr = num / den
    if same:
        iu = np.triu_indices(len(idx_a), k=1)
        vals = corr[iu]
    else:
        vals = corr.ravel()
    return float(np.median(vals))


def sector_median_corr(
    states,
    sectors: Sequence,
    window: int = 50,
    pairs: Optional[Sequence] = None,
) -> pd.DataFrame:
    """Median conditional correlation per sector pair, block-averaged.

    Daily medians over all cross pairs of each sector pair are averaged
    over non-overlapping ``window``-day blocks. Sector pairs needing two
    members (the diagonal ones) are skipped with a warning when a sector
    is a singleton.

    Returns a long DataFrame with columns
    (t_start, sector_a, sector_b, median_corr).
    """
    v0s, v1s, betas = _state_arrays(states)
    t_len, n = betas.shape
    if len(sectors) != n:
        raise AnalyticsError(f"{len(sectors)} sector labels for N={n}")
    if window < 1:
        raise AnalyticsError("window must be >= 1")
    labels = sorted(set(sectors))
    idx = {s: np.flatnonzero(np.asarray(sectors) == s) for s in labels}
    wanted = []
    if pairs is None:
        for a_i, sa in enumerate(labels):
            for sb in labels[a_i:]:
                wanted.append((sa, sb))
    else:
        wanted = [tuple(p) for p in pairs]
    kept = []
    for sa, sb in wanted:
        if sa == sb and idx[sa].size < 2:
            warnings.warn(f"sector {sa!r} has < 2 members; skipped", stacklevel=2)
            continue
        if idx[sa].size == 0 or idx[sb].size == 0:
            warnings.warn(f"empty sector in pair ({sa}, {sb}); skipped", stacklevel=2)
            continue
        kept.append((sa, sb))

    daily = np.empty((t_len, len(kept)))
    for t in range(t_len):
        u = v0s[t] - v1s[t] / n
        for k, (sa, sb) in enumerate(kept):
            daily[t, k] = _sector_pairs_median(
                u, v1s[t], betas[t], idx[sa], idx[sb], sa == sb
            )
    rows = []
    for start in range(0, t_len, window):
        stop = min(start + window, t_len)
        means = daily[start:stop].mean(axis=0)
        for k, (sa, sb) in enumerate(kept):
            rows.append(
                {"t_start": start, "sector_a": sa, "sector_b": sb,
                 "median_corr": float(means[k])}
            )
    return pd.DataFrame(rows)


def risk_measure(
    states,
    sectors: Sequence,
    volumes: Optional[np.ndarray] = None,
    threshold: float = 1.0,
    smooth: Optional[int] = None,
) -> pd.DataFrame:
    """Volume-weighted mass of above-threshold betas per sector.

    For each day, sums ``beta_i(t) V(t, i)`` over assets of each sector
    whose beta exceeds ``threshold``, then normalizes across sectors so the
    row sums to 1 (rows where nothing exceeds the threshold stay 0 and are
    flagged with a warning). Volumes default to 1, giving a count-weighted
    measure. ``smooth`` applies a trailing moving average of that many
    days to each sector column.
    """
    _, _, betas = _state_arrays(states)
    t_len, n = betas.shape
    if len(sectors) != n:
        raise AnalyticsError(f"{len(sectors)} sector labels for N={n}")
    if volumes is None:
        volumes = np.ones((t_len, n))
    volumes = np.asarray(volumes, dtype=np.float64)
    if volumes.shape != (t_len, n):
        raise AnalyticsError(f"volumes shape {volumes.shape} != ({t_len}, {n})")
    labels = sorted(set(sectors))
    sec_idx = {s: np.flatnonzero(np.asarray(sectors) == s) for s in labels}
    mass = np.zeros((t_len, len(labels)))
    active = (betas > threshold) * betas * volumes
    for k, s in enumerate(labels):
        mass[:, k] = active[:, sec_idx[s]].sum(axis=1)
    totals = mass.sum(axis=1)
    zero_rows = totals == 0.0
    if zero_rows.any():
        warnings.warn(
            f"{int(zero_rows.sum())} days with no beta above {threshold}; "
            "those rows are all-zero",
            stacklevel=2,
        )
    safe = np.where(zero_rows, 1.0, totals)
    mass = mass / safe[:, None]
    df = pd.DataFrame(mass, columns=labels)
    if smooth is not None and smooth > 1:
        df = df.rolling(smooth, min_periods=1).mean()
    return df


def leverage_asymmetry(v0_path: np.ndarray, panel, t_max: int = 42):
    """Cross-correlation of returns with market variance, and its asymmetry.

    ``L_i(lag)`` correlates the return at t with the market eigen-level at
    t + lag, so positive lags pair returns with *later* volatility; under a
    leverage effect (negative returns anticipating higher volatility) the
    positive-lag wing is negative. Edge terms are dropped: each lag uses
    only the overlapping support, and the normalization (Cauchy-Schwarz on
    that support) is computed on the same support, so ``|L| <= 1``.

    Parameters
    ----------
    v0_path : (T,) array
        Market eigen-level path (demeaned internally by its sample mean).
    panel : ReturnsPanel or (T, N) array
    t_max : int
        Maximum lag in days; the asymmetry averages lags 1..t_max.

    Returns
    -------
    (lags, L, A)
        ``lags`` is ``[-t_max, ..., t_max]``, ``L`` has shape
        ``(2 t_max + 1, N)``, and ``A[i] = mean_lag (L_i(lag) - L_i(-lag))``.
    """
    r = panel.returns if isinstance(panel, ReturnsPanel) else np.asarray(panel, float)
    v0 = np.asarray(v0_path, dtype=np.float64).ravel()
    t_len, n = r.shape
    if v0.size != t_len:
        raise AnalyticsError(f"v0 path length {v0.size} != T={t_len}")
    if t_max < 1:
        raise AnalyticsError("t_max must be >= 1")
    if t_max >= t_len:
        raise AnalyticsError(f"t_max={t_max} too large for T={t_len}")
    vc = v0 - v0.mean()
    if float(vc @ vc) == 0.0:
        raise AnalyticsError("constant market-variance path; correlation undefined")
    lags = np.arange(-t_max, t_max + 1)
    big_l = np.empty((lags.size, n))
    for k, lag in enumerate(lags):
        if lag >= 0:
            x = vc[lag:]
            y = r[: t_len - lag]
        else:
            x = vc[: t_len + lag]
            y = r[-lag:]
        xx = float(x @ x)
        yy = np.einsum("ti,ti->i", y, y)
        with np.errstate(invalid="ignore", divide="ignore"):
            big_l[k] = (x @ y) / np.sqrt(xx * yy)
        big_l[k, yy == 0.0] = 0.0
    pos = big_l[t_max + 1:]
    neg = big_l[t_max - 1::-1]
    asym = (pos - neg).mean(axis=0)
    return lags, big_l, asym


def acf_abs(series_set, max_lag: int) -> np.ndarray:
    """Autocorrelation of absolute values, averaged across series.

    Accepts a 1-d series, a (T, K) matrix, or a panel. Standard biased ACF
    of |x| per series via FFT; lag 0 is exactly 1.
    """
    if isinstance(series_set, ReturnsPanel):
        x = series_set.returns
    else:
        x = np.asarray(series_set, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
    t_len, k = x.shape
    if not max_lag < t_len / 2:
        raise AnalyticsError(f"max_lag={max_lag} must be < T/2 = {t_len / 2}")
    y = np.abs(x)
    y = y - y.mean(axis=0)
    nfft = 1 << int(np.ceil(np.log2(2 * t_len)))
    f = np.fft.rfft(y, n=nfft, axis=0)
    acov = np.fft.irfft(f * np.conj(f), n=nfft, axis=0)[: max_lag + 1]
    denom = acov[0].copy()
    denom[denom == 0.0] = 1.0
    ac = acov / denom
    ac[0] = 1.0
    return ac.mean(axis=1)


def pair_delta(
    empirical,
    simulated,
    pairs: Optional[Sequence] = None,
    n_pairs: int = 70,
    seed: int = 0,
):
    """Time-averaged absolute difference of pair products, per pair.

    ``Delta_ij = |sum_t (r_ti r_tj)_sim - (r_ti r_tj)_emp| / T`` over a
    pair sample (default: 70 distinct random pairs drawn with a
    counter-based generator keyed by ``seed``).

    Returns ``(pairs, deltas, mean, std)``.
    """
    emp = empirical.returns if isinstance(empirical, ReturnsPanel) else np.asarray(empirical, float)
    sim = simulated.returns if isinstance(simulated, ReturnsPanel) else np.asarray(simulated, float)
    if emp.shape != sim.shape:
        raise AnalyticsError(f"shape mismatch {emp.shape} vs {sim.shape}")
    t_len, n = emp.shape
    if pairs is None:
        all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        if len(all_pairs) <= n_pairs:
            pairs = all_pairs
        else:
            rng = np.random.Generator(np.random.Philox(int(seed)))
            sel = rng.choice(len(all_pairs), size=n_pairs, replace=False)
            pairs = [all_pairs[int(s)] for s in sorted(sel)]
    deltas = np.empty(len(pairs))
    for k, (i, j) in enumerate(pairs):
        deltas[k] = abs(float(np.sum(sim[:, i] * sim[:, j] - emp[:, i] * emp[:, j]))) / t_len
    return list(pairs), deltas, float(deltas.mean()), float(deltas.std())


def cliffs_delta(x, y) -> float:
    """Cliff's delta: (#{x > y} - #{x < y}) / (|x| |y|), in [-1, 1].

    0 means complete overlap, +-1 disjoint supports. Computed by sorting
    one sample and binary-searching the other, O((|x|+|y|) log |y|).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise AnalyticsError("both samples must be non-empty")
    ys = np.sort(y)
    below = np.searchsorted(ys, x, side="left")
    above = y.size - np.searchsorted(ys, x, side="right")
    wins = float(below.sum())
    losses = float(above.sum())
    return (wins - losses) / (x.size * y.size)
