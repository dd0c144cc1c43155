"""Spectral covariance targeting: unconditional market level, bulk level, beta.

The unconditional covariance is pinned from a calibration window instead of
being estimated inside the MLE. Its restricted two-component form needs only
the leading eigenpair of the sample covariance C = R'R / T (market level
``N * v_bar_0`` along eigenvector ``e``) and the trace, which fixes the bulk
level through ``tr(C)/N = v_bar_0 + v_bar_1``. C is never formed: every
product C v is evaluated as R'(R v) / T in O(T * N).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotConvergedError, TargetingError
from .panel import ReturnsPanel

__all__ = [
    "TargetSpec",
    "sample_covariance_apply",
    "leading_eigenpair",
    "target_from_panel",
]


@dataclass(frozen=True)
class TargetSpec:
    """Unconditional levels (v_bar_0, v_bar_1) and target beta vector.

    ``beta_bar`` is normalized to ``beta_bar' beta_bar = N`` with the sign
    fixed so that its entries sum to a non-negative value; the implied
    market eigenvalue of the unconditional covariance is ``N * v_bar_0``.
    """

    v_bar_0: float
    v_bar_1: float
    beta_bar: np.ndarray
    window: Optional[tuple] = None

    def __post_init__(self):
        b = np.ascontiguousarray(self.beta_bar, dtype=np.float64)
        b.setflags(write=False)
        object.__setattr__(self, "beta_bar", b)
        n = b.size
        if not (self.v_bar_0 > 0.0 and self.v_bar_1 > 0.0):
            raise TargetingError(
                f"target levels must be positive, got ({self.v_bar_0}, {self.v_bar_1})"
            )
        if abs(float(b @ b) - n) > 1e-10 * max(n, 1):
            raise TargetingError("beta_bar'beta_bar must equal N")
        if float(b.sum()) < 0.0:
            raise TargetingError("beta_bar sign convention violated (sum < 0)")

    @property
    def n_assets(self) -> int:
        return self.beta_bar.size

    def to_dict(self) -> dict:
        win = None
        if self.window is not None:
            win = {"from": self.window[0], "to": self.window[1]}
        return {
            "v_bar_0": float(self.v_bar_0),
            "v_bar_1": float(self.v_bar_1),
            "beta_bar": [float(x) for x in self.beta_bar],
            "window": win,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TargetSpec":
        win = d.get("window")
        window = (win["from"], win["to"]) if win else None
        return cls(
            float(d["v_bar_0"]),
            float(d["v_bar_1"]),
            np.asarray(d["beta_bar"], dtype=np.float64),
            window=window,
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "TargetSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _fix_sign(e: np.ndarray) -> np.ndarray:
    s = float(e.sum())
    if s < 0.0:
        return -e
    if s == 0.0:
        nz = np.flatnonzero(e)
        if nz.size and e[nz[0]] < 0.0:
            return -e
    return e


def sample_covariance_apply(panel: ReturnsPanel, v: np.ndarray) -> np.ndarray:
    """Apply the sample covariance C = R'R / T to a vector without forming C."""
    v = np.asarray(v, dtype=np.float64)
    r = panel.returns
    if v.shape != (r.shape[1],):
        raise TargetingError(f"vector of length {v.shape} against N={r.shape[1]} panel")
    return r.T @ (r @ v) / r.shape[0]


def _leading_eigenpair(rows: np.ndarray, tol: float, max_iter: int):
    t = rows.shape[0]

    def apply_c(v):
        return rows.T @ (rows @ v) / t

    x = apply_c(np.ones(rows.shape[1]))
    nx = np.linalg.norm(x)
    if nx == 0.0 or not np.isfinite(nx):
        x = np.zeros(rows.shape[1])
        x[0] = 1.0
    else:
        x = x / nx

    res = np.inf
    for _ in range(max_iter):
        y = apply_c(x)
        lam = float(x @ y)
        res = float(np.linalg.norm(y - lam * x))
        if res <= tol * max(abs(lam), np.finfo(float).tiny):
            e = _fix_sign(x)
            return lam, e
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            raise TargetingError("covariance annihilated the iterate; degenerate panel")
        x = y / ny
    raise NotConvergedError(
        f"power iteration: residual {res:.3e} after {max_iter} iterations (tol {tol:g})",
        residual=res,
    )


def leading_eigenpair(
    panel: ReturnsPanel, tol: float = 1e-10, max_iter: int = 10_000
):
    """Leading eigenvalue and unit eigenvector of C by power iteration.

    Deterministic: the start vector is one covariance application to the
    all-ones vector. Returns ``(lambda_max, e)`` with
    ``||C e - lambda_max e|| <= tol * lambda_max`` and ``sum(e) >= 0``.

    Raises
    ------
    NotConvergedError
        If the residual target is not met in ``max_iter`` sweeps; the last
        residual is attached.
    """
    if not tol > 0.0:
        raise TargetingError("tol must be positive")
    return _leading_eigenpair(panel.returns, tol, max_iter)


def target_from_panel(
    panel: ReturnsPanel,
    window: Optional[tuple] = None,
    *,
    default_rows: int = 1000,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> TargetSpec:
    """Estimate the TargetSpec from a calibration window of the panel.

    Parameters
    ----------
    panel : ReturnsPanel
        Normalized panel (the estimate itself works on any scale).
    window : (date_from, date_to), optional
        Inclusive ISO-date range. Default: the first ``default_rows`` rows
        (about four trading years at the default 1000).

    Returns
    -------
    TargetSpec
        ``v_bar_0 = lambda_max / N``, ``beta_bar = sqrt(N) e`` and
        ``v_bar_1 = tr(C)/N - v_bar_0``, so ``v_bar_0 + v_bar_1`` equals
        ``tr(C)/N`` by construction.

    Raises
    ------
    TargetingError
        If the window holds fewer than N observations, or the implied bulk
        level is non-positive (degenerate spectrum).
    """
    t, n = panel.returns.shape
    if window is None:
        rows = np.arange(min(default_rows, t))
        date_from, date_to = panel.dates[0], panel.dates[int(rows[-1])]
    else:
        idx = panel.row_slice(window[0], window[1])
        if idx.size == 0:
            raise TargetingError(f"empty calibration window {window}")
        rows = idx
        date_from, date_to = panel.dates[int(idx[0])], panel.dates[int(idx[-1])]
    t_w = rows.size
    if t_w < n:
        raise TargetingError(f"calibration window has {t_w} rows for N={n} assets")
    if t_w < 10 * n:
        warnings.warn(
            f"calibration window has only {t_w} rows for N={n}; "
            "targeting noise scales like 1/sqrt(T)",
            stacklevel=2,
        )
    r = panel.returns[rows]
    lam, e = _leading_eigenpair(r, tol, max_iter)
    v0 = lam / n
    tr_c = float(np.sum(r * r)) / t_w
    v1 = tr_c / n - v0
    if v1 <= 0.0:
        raise TargetingError(
            f"degenerate spectrum: tr(C)/N = {tr_c / n:.6g} <= lambda_max/N = {v0:.6g}; "
            "window too short or single-factor saturated"
        )
    if n * v0 < 2.0 * v1:
        warnings.warn(
            f"weak market factor: N*v_bar_0 = {n * v0:.4g} < 2*v_bar_1 = {2 * v1:.4g}; "
            "the leading eigenvalue may be noise-dominated",
            stacklevel=2,
        )
    beta_bar = np.sqrt(n) * e
    return TargetSpec(
        v0, v1, beta_bar, window=(date_from.isoformat(), date_to.isoformat())
    )
