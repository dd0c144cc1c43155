"""Return-panel loading, validation, and normalization.

A panel is a dense T x N matrix of daily returns with date and ticker
metadata, optionally carrying sector labels and traded volumes. Panels are
immutable after construction (arrays are marked read-only), so they can be
shared freely across threads and model fits.

CSV layout: first column ``date`` (ISO-8601), one column per ticker.
Optional sidecars: ``sectors.csv`` with columns (ticker, sector) and
``volumes.csv`` shaped exactly like the returns file.
"""
from __future__ import annotations

import dataclasses
import datetime as dt
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .errors import PanelError

__all__ = ["ReturnsPanel", "load_panel", "normalize", "write_panel"]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ReturnsPanel:
    """Immutable T x N demeaned return matrix with asset/date metadata.

    Attributes
    ----------
    returns : (T, N) ndarray
        Return matrix. After :func:`normalize` the columns have zero mean
        and the global sum of squares equals T * N.
    dates : tuple of datetime.date
        Strictly increasing observation dates, length T.
    assets : tuple of str
        Ticker per column, length N, unique.
    sectors : tuple of str, optional
        Sector label per asset.
    volumes : (T, N) ndarray, optional
        Non-negative traded share counts.
    """

    returns: np.ndarray
    dates: tuple
    assets: tuple
    sectors: Optional[tuple] = None
    volumes: Optional[np.ndarray] = None

    def __post_init__(self):
        r = _readonly(self.returns)
        object.__setattr__(self, "returns", r)
        if r.ndim != 2:
            raise PanelError(f"returns must be 2-d, got shape {r.shape}")
        t, n = r.shape
        if t < 2 or n < 2:
            raise PanelError(f"panel needs T >= 2 and N >= 2, got T={t}, N={n}")
        if not np.isfinite(r).all():
            bad = np.argwhere(~np.isfinite(r))[0]
            raise PanelError(
                f"non-finite return at row {bad[0]} ({self.dates[bad[0]]}), "
                f"column {self.assets[bad[1]]!r}"
            )
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "assets", tuple(str(a) for a in self.assets))
        if len(self.dates) != t:
            raise PanelError(f"{len(self.dates)} dates for {t} rows")
        if len(self.assets) != n:
            raise PanelError(f"{len(self.assets)} tickers for {n} columns")
        if len(set(self.assets)) != n:
            raise PanelError("duplicate tickers in header")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise PanelError(f"dates not strictly increasing at {b}")
        if self.sectors is not None:
            object.__setattr__(self, "sectors", tuple(str(s) for s in self.sectors))
            if len(self.sectors) != n:
                raise PanelError(f"{len(self.sectors)} sector labels for {n} assets")
        if self.volumes is not None:
            v = _readonly(self.volumes)
            if v.shape != r.shape:
                raise PanelError(f"volumes shape {v.shape} != returns shape {r.shape}")
            if (v < 0).any():
                raise PanelError("volumes must be non-negative")
            object.__setattr__(self, "volumes", v)

    @property
    def n_periods(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    def with_returns(self, returns: np.ndarray) -> "ReturnsPanel":
        """Copy of this panel with a different return matrix."""
        return dataclasses.replace(self, returns=returns)

    def row_slice(
        self, date_from: Optional[str] = None, date_to: Optional[str] = None
    ) -> np.ndarray:
        """Row indices whose date falls in the inclusive [date_from, date_to]."""
        lo = dt.date.fromisoformat(date_from) if date_from else self.dates[0]
        hi = dt.date.fromisoformat(date_to) if date_to else self.dates[-1]
        return np.array([i for i, d in enumerate(self.dates) if lo <= d <= hi], dtype=int)


def _parse_dates(raw: pd.Series, path: str) -> list:
    dates = []
    for i, cell in enumerate(raw):
        try:
            dates.append(dt.date.fromisoformat(str(cell).strip()))
        except ValueError:
            raise PanelError(f"{path}: unparseable date {cell!r} at row {i + 1}")
    seen = {}
    for i, d in enumerate(dates):
        if d in seen:
            raise PanelError(f"{path}: duplicate date {d} at rows {seen[d] + 1} and {i + 1}")
        seen[d] = i
    return dates


def _parse_matrix(df: pd.DataFrame, dates: list, path: str) -> np.ndarray:
    out = np.empty(df.shape, dtype=np.float64)
    for j, col in enumerate(df.columns):
        vals = pd.to_numeric(df[col].str.strip(), errors="coerce").to_numpy()
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            i = int(bad[0])
            cell = str(df[col].iloc[i]).strip()
            kind = "missing value" if cell == "" else f"non-numeric cell {cell!r}"
            raise PanelError(f"{path}: {kind} at row {dates[i]}, column {col!r}")
        out[:, j] = vals
    return out


def load_panel(
    path,
    format: str = "csv",
    *,
    prices: bool = False,
    sectors_path=None,
    volumes_path=None,
) -> ReturnsPanel:
    """Load a return panel from CSV, rejecting gaps and malformed cells.

    Parameters
    ----------
    path : path-like
        CSV file with a leading ``date`` column and one column per ticker.
    format : {"csv"}
        Only CSV is supported.
    prices : bool
        If True the cells are price levels and log-returns
        ``ln(p_t / p_{t-1})`` are taken (the first row is consumed).
    sectors_path, volumes_path : path-like, optional
        Sidecar files; see module docstring for layout.

    Raises
    ------
    PanelError
        On missing values, non-numeric cells, duplicate or unordered dates.
        The message names the offending row and column. Missing data is
        never imputed.
    """
    if format != "csv":
        raise PanelError(f"unsupported format {format!r}")
    raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    if raw.shape[1] < 3:
        raise PanelError(f"{path}: need a date column plus at least 2 tickers")
    if raw.shape[0] < 2:
        raise PanelError(f"{path}: need at least 2 rows")
    dates = _parse_dates(raw.iloc[:, 0], str(path))
    values = _parse_matrix(raw.iloc[:, 1:], dates, str(path))
    assets = [str(c).strip() for c in raw.columns[1:]]

    if prices:
        if (values <= 0).any():
            i, j = np.argwhere(values <= 0)[0]
            raise PanelError(
                f"{path}: non-positive price at row {dates[i]}, column {assets[j]!r}"
            )
        values = np.log(values[1:] / values[:-1])
        dates = dates[1:]

    sectors = None
    if sectors_path is not None:
        sec = pd.read_csv(sectors_path, dtype=str)
        if sec.shape[1] < 2:
            raise PanelError(f"{sectors_path}: expected columns (ticker, sector)")
        mapping = dict(zip(sec.iloc[:, 0].str.strip(), sec.iloc[:, 1].str.strip()))
        missing = [a for a in assets if a not in mapping]
        if missing:
            raise PanelError(f"{sectors_path}: no sector for ticker {missing[0]!r}")
        sectors = [mapping[a] for a in assets]

    volumes = None
    if volumes_path is not None:
        vraw = pd.read_csv(volumes_path, dtype=str, keep_default_na=False)
        vdates = _parse_dates(vraw.iloc[:, 0], str(volumes_path))
        vassets = [str(c).strip() for c in vraw.columns[1:]]
        if vassets != assets or vdates != dates:
            raise PanelError(f"{volumes_path}: dates/tickers do not match the panel")
        volumes = _parse_matrix(vraw.iloc[:, 1:], vdates, str(volumes_path))

    return ReturnsPanel(values, dates, assets, sectors=sectors, volumes=volumes)


def normalize(panel: ReturnsPanel) -> ReturnsPanel:
    """Demean each column and scale globally so that sum(r^2) = T * N.

    The per-column shift plus the single global scalar leave every
    cross-asset correlation matrix unchanged. Idempotent to rounding.

    Raises
    ------
    PanelError
        If the demeaned panel is identically zero (scale undefined).
    """
    x = panel.returns
    t, n = x.shape
    centered = x - x.mean(axis=0)
    ss = float(np.sum(centered * centered))
    if ss == 0.0:
        raise PanelError("all-zero panel after demeaning; normalization scale undefined")
    return panel.with_returns(centered * np.sqrt(t * n / ss))


def write_panel(panel: ReturnsPanel, path, *, matrix: Optional[np.ndarray] = None) -> None:
    """Write a panel (or an equally shaped matrix) in the canonical CSV layout.

    Floats are written with shortest round-trip repr, so write -> load is
    bit-exact.
    """
    values = panel.returns if matrix is None else np.asarray(matrix, dtype=np.float64)
    if values.shape != panel.returns.shape:
        raise PanelError(f"matrix shape {values.shape} != panel shape {panel.returns.shape}")
    df = pd.DataFrame(values, columns=list(panel.assets))
    df.insert(0, "date", [d.isoformat() for d in panel.dates])
    df.to_csv(path, index=False)
