"""Univariate GARCH(1,1) per asset (UVG), the comparison baseline.

The variance recursion is h(t+1) = h(t) + alpha (r_t^2 - h(t))
+ gamma (h_bar - h(t)) with h(0) = h_bar; h_bar is set by variance
targeting (mean of squares) rather than estimated, mirroring the
covariance targeting of the multivariate model. Restricting the
multivariate model to zero off-diagonal loadings freezes its beta path,
which is the two-component orthogonal-GARCH baseline; no separate
implementation is needed for it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.optimize import minimize

from .errors import EstimationError, RmgError
from .likelihood import NoiseModel
from .panel import ReturnsPanel

__all__ = ["UvgParams", "UvgFit", "uvg_filter", "uvg_loglik", "uvg_fit", "uvg_fit_panel"]


@dataclass(frozen=True)
class UvgParams:
    """GARCH(1,1) loadings and unconditional level for one series."""

    alpha: float
    gamma: float
    h_bar: float

    def __post_init__(self):
        if self.alpha < 0.0 or self.gamma < 0.0 or self.alpha + self.gamma >= 1.0:
            raise RmgError("need 0 <= alpha, 0 <= gamma, alpha + gamma < 1")
        if not self.h_bar > 0.0:
            raise RmgError("h_bar must be positive")

    @property
    def floor(self) -> float:
        """Guaranteed lower bound gamma/(alpha+gamma) * h_bar (0 if frozen)."""
        s = self.alpha + self.gamma
        return 0.0 if s == 0.0 else self.gamma / s * self.h_bar


@dataclass
class UvgFit:
    params: UvgParams
    loglik: float
    converged: bool


def uvg_filter(series: np.ndarray, params: UvgParams) -> np.ndarray:
    """Conditional variance path h(t), aligned with the series; h(0)=h_bar.

    The recursion is linear in h, so it is evaluated with a first-order IIR
    filter: h(t) = keep^t h(0) + sum_{s<t} keep^(t-1-s) x(s) with
    x = alpha r^2 + gamma h_bar and keep = 1 - alpha - gamma.
    """
    from scipy.signal import lfilter

    r = np.asarray(series, dtype=np.float64).ravel()
    t_len = r.size
    if t_len == 0:
        return np.empty(0)
    a, g, hb = params.alpha, params.gamma, params.h_bar
    keep = 1.0 - a - g
    h = np.empty(t_len)
    h[0] = hb
    if t_len > 1:
        x = a * r[:-1] * r[:-1] + g * hb
        y = lfilter([1.0], [1.0, -keep], x)
        h[1:] = keep ** np.arange(1, t_len) * hb + y
    return h


def uvg_loglik(series: np.ndarray, params: UvgParams, noise: NoiseModel) -> float:
    r = np.asarray(series, dtype=np.float64).ravel()
    h = uvg_filter(r, params)
    eta = r / np.sqrt(h)
    return float(np.sum(noise.logpdf(eta)) - 0.5 * np.sum(np.log(h)))


def uvg_fit(series: np.ndarray, noise: Optional[NoiseModel] = None, *,
            maxiter: int = 2000) -> UvgFit:
    """MLE of (alpha, gamma) with h_bar fixed by variance targeting.

    Uses the same logit reparametrization and Nelder-Mead search as the
    multivariate fit. Non-convergence is flagged, not raised.
    """
    from .estimation import _pair_from_natural, _pair_to_natural

    r = np.asarray(series, dtype=np.float64).ravel()
    if r.size < 100:
        raise EstimationError("need at least 100 observations for a UVG fit")
    noise = noise or NoiseModel.gaussian()
    h_bar = float(np.mean(r * r))
    if h_bar == 0.0:
        raise EstimationError("all-zero series")

    def obj(vec):
        a, g = _pair_to_natural(vec[0], vec[1], "persistence_split")
        try:
            return -uvg_loglik(r, UvgParams(a, g, h_bar), noise)
        except (RmgError, FloatingPointError):
            return np.inf

    x0 = np.array(_pair_from_natural(0.05, 0.02, "persistence_split"))
    res = minimize(
        obj, x0, method="Nelder-Mead",
        options={"maxiter": maxiter, "xatol": 1e-5, "fatol": 1e-8, "adaptive": True},
    )
    a, g = _pair_to_natural(res.x[0], res.x[1], "persistence_split")
    params = UvgParams(a, g, h_bar)
    return UvgFit(params, -float(res.fun), bool(res.success))


def uvg_fit_panel(panel: ReturnsPanel, noise: Optional[NoiseModel] = None) -> pd.DataFrame:
    """Fit each panel column independently; one row per ticker."""
    rows = []
    for j, ticker in enumerate(panel.assets):
        out = uvg_fit(panel.returns[:, j], noise)
        rows.append(
            {
                "ticker": ticker,
                "alpha": out.params.alpha,
                "gamma": out.params.gamma,
                "h_bar": out.params.h_bar,
                "loglik": out.loglik,
                "converged": out.converged,
            }
        )
    return pd.DataFrame(rows)
