"""Daily covariance-state recursion: exact and large-N eigen-projected steps.

The conditional covariance is restricted to a market eigen-component plus a
degenerate bulk,

    H(t) = N v0(t) P0(t) + v1(t) (I - P0(t)),     P0 = beta beta' / N,

so a day's state is just ``(v0, v1, beta)``. The matrix recursion is
projected onto the eigenvector frame of H(t); the resulting scalar system
is solved in closed form per day in O(N), never materializing H.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from . import _kernels
from ._kernels import pykernels
from .errors import RecursionFailure, RmgError
from .targeting import TargetSpec

if TYPE_CHECKING:
    from .likelihood import NoiseModel

__all__ = [
    "CovState",
    "StatePath",
    "ModelParams",
    "ProjectedReturns",
    "project_returns",
    "beta_drive",
    "step_exact",
    "step_large_n",
    "positivity_floor",
    "overlap_persistence_margin",
]

TIERS = ("two", "four", "six")


@dataclass(frozen=True)
class CovState:
    """Per-day covariance state; the implied H(t) is never materialized.

    ``v0`` is the market eigen-level (market eigenvalue of H is ``N * v0``),
    ``v1`` the level of the N-1 degenerate bulk eigenvalues, ``beta`` the
    market eigenvector normalized to ``beta'beta = N``.
    """

    v0: float
    v1: float
    beta: np.ndarray
    t: int = 0

    def __post_init__(self):
        b = np.ascontiguousarray(self.beta, dtype=np.float64)
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)
        if not (self.v0 > 0.0 and self.v1 > 0.0):
            raise RmgError(f"eigen-levels must be positive, got ({self.v0}, {self.v1})")
        n = b.size
        if abs(float(b @ b) - n) > 1e-8 * max(n, 1):
            raise RmgError("beta'beta must equal N (within 1e-8 relative)")

    @property
    def n_assets(self) -> int:
        return self.beta.size

    def to_dict(self) -> dict:
        return {
            "t": int(self.t),
            "v0": float(self.v0),
            "v1": float(self.v1),
            "beta": [float(x) for x in self.beta],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CovState":
        return cls(
            float(d["v0"]), float(d["v1"]), np.asarray(d["beta"], dtype=np.float64),
            t=int(d.get("t", 0)),
        )

    @classmethod
    def from_target(cls, target: TargetSpec, t: int = 0) -> "CovState":
        """Initial state: the unconditional levels and beta."""
        return cls(target.v_bar_0, target.v_bar_1, target.beta_bar.copy(), t=t)


class StatePath(Sequence):
    """Sequence of :class:`CovState` backed by flat arrays.

    Indexing returns a ``CovState``; the ``v0s``, ``v1s``, ``betas`` array
    views are what the analytics layer consumes. ``mbars`` holds the
    overlap with the target beta, ``ms`` the step-to-step overlap, and
    ``ll_days`` (when produced by a likelihood run) the per-day
    log-likelihood contributions.
    """

    def __init__(self, v0s, v1s, betas, t0: int = 0, mbars=None, ms=None, ll_days=None):
        self.v0s = np.asarray(v0s, dtype=np.float64)
        self.v1s = np.asarray(v1s, dtype=np.float64)
        self.betas = np.asarray(betas, dtype=np.float64)
        if self.betas.ndim != 2 or self.betas.shape[0] != self.v0s.size:
            raise RmgError("betas must be (T, N) aligned with v0s")
        self.t0 = int(t0)
        self.mbars = None if mbars is None else np.asarray(mbars, dtype=np.float64)
        self.ms = None if ms is None else np.asarray(ms, dtype=np.float64)
        self.ll_days = None if ll_days is None else np.asarray(ll_days, dtype=np.float64)

    def __len__(self) -> int:
        return self.v0s.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            idx = range(*i.indices(len(self)))
            return [self[j] for j in idx]
        i = int(i)
        if i < 0:
            i += len(self)
        return CovState(
            float(self.v0s[i]), float(self.v1s[i]), self.betas[i].copy(), t=self.t0 + i
        )

    @property
    def n_assets(self) -> int:
        return self.betas.shape[1]

    def to_dict(self) -> dict:
        return {"states": [self[i].to_dict() for i in range(len(self))]}

    @classmethod
    def from_dict(cls, d: dict) -> "StatePath":
        states = d["states"]
        if not states:
            raise RmgError("empty state path")
        v0s = np.array([s["v0"] for s in states])
        v1s = np.array([s["v1"] for s in states])
        betas = np.array([s["beta"] for s in states])
        return cls(v0s, v1s, betas, t0=int(states[0].get("t", 0)))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "StatePath":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ModelParams:
    """Symmetric 2x2 reversion (gamma) and innovation (alpha) loadings.

    Index 0 is the market component, 1 the bulk; ``a10``/``g10`` couple the
    two and drive the beta dynamics. ``tier`` records the parameter tying:
    ``two`` ties every entry to (a00, g00), ``four`` ties only the
    off-diagonals, ``six`` leaves all six free.
    """

    a00: float
    a11: float
    a10: float
    g00: float
    g11: float
    g10: float
    noise: "NoiseModel"
    tier: str = "six"

    def __post_init__(self):
        for nm, a, g in (("market", self.a00, self.g00), ("bulk", self.a11, self.g11)):
            if a < 0.0 or g < 0.0:
                raise RmgError(f"{nm} loadings must be non-negative")
            if a + g >= 1.0:
                raise RmgError(f"{nm} persistence a+g = {a + g:.4f} must be < 1")
        if abs(self.a10) >= 1.0 or abs(self.g10) >= 1.0:
            raise RmgError("off-diagonal loadings must lie in (-1, 1)")
        if self.tier not in TIERS:
            raise RmgError(f"unknown tier {self.tier!r}")
        if self.tier == "two" and not (
            self.a11 == self.a00 == self.a10 and self.g11 == self.g00 == self.g10
        ):
            raise RmgError("tier 'two' requires all entries tied to (a00, g00)")
        if self.tier == "four" and not (self.a10 == self.a00 and self.g10 == self.g00):
            raise RmgError("tier 'four' requires off-diagonals tied to (a00, g00)")

    @classmethod
    def make(cls, tier, a00, g00, a11=None, g11=None, a10=None, g10=None, *, noise):
        """Build params applying the tier's tying rules."""
        if tier == "two":
            return cls(a00, a00, a00, g00, g00, g00, noise, tier)
        if tier == "four":
            return cls(a00, float(a11), a00, g00, float(g11), g00, noise, tier)
        return cls(a00, float(a11), float(a10), g00, float(g11), float(g10), noise, tier)

    @property
    def alpha(self) -> np.ndarray:
        return np.array([[self.a00, self.a10], [self.a10, self.a11]])

    @property
    def gamma(self) -> np.ndarray:
        return np.array([[self.g00, self.g10], [self.g10, self.g11]])

    def to_dict(self) -> dict:
        return {
            "alpha": {"a00": self.a00, "a11": self.a11, "a10": self.a10},
            "gamma": {"g00": self.g00, "g11": self.g11, "g10": self.g10},
            "noise": self.noise.to_dict(),
            "tier": self.tier,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        from .likelihood import NoiseModel

        a, g = d["alpha"], d["gamma"]
        return cls(
            float(a["a00"]), float(a["a11"]), float(a["a10"]),
            float(g["g00"]), float(g["g11"]), float(g["g10"]),
            NoiseModel.from_dict(d["noise"]), d.get("tier", "six"),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ModelParams":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ProjectedReturns:
    """Market projection of one return vector under a state."""

    r_m: float
    rho2_0: float
    rho2_1: float
    m_bar: float


def project_returns(state: CovState, target: TargetSpec, r: np.ndarray) -> ProjectedReturns:
    """Market return, projected squared returns, and target overlap.

    ``r_m = beta'r / N``; ``rho2_0 = r_m^2``; ``rho2_1 = |r|^2/N - r_m^2``
    (clamped at 0 against rounding); ``m_bar = beta_bar'beta / N``.
    """
    r = np.asarray(r, dtype=np.float64)
    n = state.n_assets
    if r.shape != (n,):
        raise RmgError(f"return vector shape {r.shape} against N={n} state")
    r_m = float(state.beta @ r) / n
    rho0 = r_m * r_m
    rho1 = max(float(r @ r) / n - rho0, 0.0)
    m_bar = float(target.beta_bar @ state.beta) / n
    return ProjectedReturns(r_m, rho0, rho1, m_bar)


def beta_drive(
    state: CovState, target: TargetSpec, params: ModelParams, r: np.ndarray
) -> np.ndarray:
    """Off-market drive vector D(t); orthogonal to beta(t) by construction."""
    n = state.n_assets
    beta = state.beta
    r = np.asarray(r, dtype=np.float64)
    r_m = float(beta @ r) / n
    mbar = float(target.beta_bar @ beta) / n
    ubar = target.v_bar_0 - target.v_bar_1 / n
    return (params.a10 * r_m) * (r - r_m * beta) + (params.g10 * mbar * ubar) * (
        target.beta_bar - mbar * beta
    )


def _step(state, target, params, r, exact: bool) -> CovState:
    r = np.ascontiguousarray(r, dtype=np.float64)
    if r.shape != (state.n_assets,):
        raise RmgError(f"return vector shape {r.shape} against N={state.n_assets} state")
    status, v0n, v1n, beta_new, _m, diag = pykernels.step_core(
        state.v0, state.v1, state.beta, r,
        target.v_bar_0, target.v_bar_1, target.beta_bar,
        params.a00, params.a11, params.a10, params.g00, params.g11, params.g10,
        exact,
    )
    if status != pykernels.OK:
        raise RecursionFailure(
            f"{_kernels.STATUS_MESSAGES[status]} at t={state.t}",
            t=state.t,
            status=status,
            diagnostics={
                "A0": diag[0], "A1": diag[1], "D2": diag[2],
                "m2_candidates": (diag[3], diag[4]),
            },
        )
    return CovState(v0n, v1n, beta_new, t=state.t + 1)


def step_exact(
    state: CovState, target: TargetSpec, params: ModelParams, r: np.ndarray
) -> CovState:
    """Advance one day with the exact projected recursion.

    Solves the quadratic for the squared overlap between consecutive beta
    vectors, discards roots outside (1/N, 1], and among admissible roots
    keeps the larger one yielding positive eigen-levels. The returned beta
    is renormalized to ``beta'beta = N`` to stop drift over long paths.

    Raises
    ------
    RecursionFailure
        If no admissible root yields positive levels; carries (A0, A1, D2)
        and both overlap candidates.
    """
    return _step(state, target, params, r, exact=True)


def step_large_n(
    state: CovState, target: TargetSpec, params: ModelParams, r: np.ndarray
) -> CovState:
    """Advance one day with the large-N approximation of the recursion.

    Uses ``m^2 = 1/(1+d)`` with ``d = D^2 / (A0^2 N)``; beta moves by
    ``D / A0`` before renormalization. No accuracy claim is made at small
    N; the frozen regression bound against :func:`step_exact` is measured
    at N ~ several hundred.
    """
    return _step(state, target, params, r, exact=False)


def positivity_floor(params: ModelParams, target: TargetSpec, m0_sq: float):
    """Lower bounds on the eigen-levels guaranteed by the recursion.

    Under a minimum squared overlap with the target beta,
    ``m_bar^2 >= (1 + m0_sq)/2``, the levels obey
    ``v_nu >= g / (g + a) * m0_sq^(1-nu) * v_bar_nu`` along any path started
    at or above the floor. Returns ``(floor_0, floor_1)``; a component with
    ``a + g = 0`` is frozen, so its floor is reported as 0.
    """
    if not (0.0 < m0_sq <= 1.0):
        raise RmgError(f"m0_sq must lie in (0, 1], got {m0_sq}")
    s0 = params.a00 + params.g00
    s1 = params.a11 + params.g11
    floor0 = 0.0 if s0 == 0.0 else params.g00 / s0 * m0_sq * target.v_bar_0
    floor1 = 0.0 if s1 == 0.0 else params.g11 / s1 * target.v_bar_1
    return floor0, floor1


def overlap_persistence_margin(ms: np.ndarray, params: ModelParams) -> float:
    """Post-hoc existence margin for the market component.

    The market recursion stays contracting when ``1 - <m^2>`` (geometric
    average of the step overlap) is below ``a00 + g00``. Returns
    ``(a00 + g00) - (1 - <m^2>)``; positive means the condition held on
    this path.
    """
    ms = np.asarray(ms, dtype=np.float64)
    if ms.size == 0:
        raise RmgError("empty overlap path")
    geo = math.exp(float(np.mean(np.log(ms * ms))))
    return (params.a00 + params.g00) - (1.0 - geo)
