"""Analytic H^(+-1/2) application and the path log-likelihood.

With only two eigen-levels, square roots and inverses of H(t) are explicit:

    H^{-1/2} r = r_M / sqrt(N v0) * beta + (r - r_M beta) / sqrt(v1),

so de-garching and the Gaussian/Student-t log-likelihood cost O(N) per day.
``ln det H = ln(N v0) + (N-1) ln(v1)`` exactly. Full normalized densities
are used (no constants dropped), so the Gaussian day term equals the dense
multivariate-normal log-density exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import LikelihoodError, RecursionFailure, RmgError
from .panel import ReturnsPanel
from .recursion import CovState, ModelParams, StatePath
from .targeting import TargetSpec

__all__ = [
    "NoiseModel",
    "inv_sqrt_apply",
    "sqrt_apply",
    "loglik_day",
    "loglik_path",
    "loglik_value",
    "degarch",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class NoiseModel:
    """I.i.d. noise family: Gaussian or unit-variance Student-t.

    The Student-t is standardized (scale ``sqrt((nu-2)/nu)`` on the
    classical t) so that the noise has variance one for every ``nu > 2``.
    """

    family: str
    nu: Optional[float] = None

    def __post_init__(self):
        if self.family not in ("gaussian", "student_t"):
            raise RmgError(f"unknown noise family {self.family!r}")
        if self.family == "student_t":
            if self.nu is None or not self.nu > 2.0:
                raise RmgError("student_t noise needs tail index nu > 2")

    @classmethod
    def gaussian(cls) -> "NoiseModel":
        return cls("gaussian")

    @classmethod
    def student_t(cls, nu: float) -> "NoiseModel":
        return cls("student_t", float(nu))

    @property
    def kind_code(self) -> int:
        return 1 if self.family == "gaussian" else 2

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.family == "gaussian":
            return -0.5 * x * x - 0.5 * _LOG_2PI
        nu = self.nu
        c = _kernels.student_t_const(nu)
        return c - 0.5 * (nu + 1.0) * np.log1p(x * x / (nu - 2.0))

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.family == "gaussian":
            return rng.standard_normal(size)
        return rng.standard_t(self.nu, size) * math.sqrt((self.nu - 2.0) / self.nu)

    def to_dict(self) -> dict:
        d = {"family": self.family}
        if self.nu is not None:
            d["nu"] = float(self.nu)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        return cls(d["family"], d.get("nu"))


def inv_sqrt_apply(state: CovState, r: np.ndarray) -> np.ndarray:
    """Apply H(t)^{-1/2} to a return vector analytically."""
    r = np.asarray(r, dtype=np.float64)
    n = state.n_assets
    beta = state.beta
    r_m = float(beta @ r) / n
    return r_m / math.sqrt(n * state.v0) * beta + (r - r_m * beta) / math.sqrt(state.v1)


def sqrt_apply(state: CovState, eta: np.ndarray) -> np.ndarray:
    """Apply H(t)^{1/2} to a noise vector; inverse of :func:`inv_sqrt_apply`."""
    eta = np.asarray(eta, dtype=np.float64)
    n = state.n_assets
    beta = state.beta
    p = float(beta @ eta) / n
    return math.sqrt(n * state.v0) * p * beta + math.sqrt(state.v1) * (eta - p * beta)


def loglik_day(state: CovState, r: np.ndarray, noise: NoiseModel) -> float:
    """One day's log-likelihood: sum ln f(eta_i) - 0.5 ln det H(t)."""
    eta = inv_sqrt_apply(state, r)
    n = state.n_assets
    ldet = math.log(n * state.v0) + (n - 1.0) * math.log(state.v1)
    ll = float(np.sum(noise.logpdf(eta))) - 0.5 * ldet
    if not math.isfinite(ll):
        raise LikelihoodError(
            f"non-finite log-likelihood at t={state.t}",
            t=state.t, v0=state.v0, v1=state.v1,
        )
    return ll


def _run_filter(panel, target, params, mode, noise_kind, nu, keep_betas, keep_eta,
                initial_state):
    if mode not in ("exact", "large_n"):
        raise RmgError(f"unknown mode {mode!r}")
    state0 = initial_state or CovState.from_target(target)
    if state0.n_assets != panel.n_assets:
        raise RmgError(
            f"state has N={state0.n_assets} but panel has N={panel.n_assets}"
        )
    res = _kernels.filter_path(
        panel.returns,
        state0.v0, state0.v1, state0.beta,
        target.v_bar_0, target.v_bar_1, target.beta_bar,
        params.a00, params.a11, params.a10, params.g00, params.g11, params.g10,
        mode == "exact", noise_kind, nu, keep_betas, keep_eta,
    )
    status, fail_t = res[0], res[1]
    if status == _kernels.NONFINITE_LL:
        raise LikelihoodError(
            f"non-finite log-likelihood at t={fail_t}",
            t=fail_t, v0=res[10][0], v1=res[10][1],
        )
    if status != _kernels.OK:
        diag = res[10]
        raise RecursionFailure(
            f"{_kernels.STATUS_MESSAGES[status]} at t={fail_t}",
            t=fail_t, status=status,
            diagnostics={"A0": diag[0], "A1": diag[1], "D2": diag[2],
                         "m2_candidates": (diag[3], diag[4])},
        )
    return res


def loglik_path(
    panel: ReturnsPanel,
    target: TargetSpec,
    params: ModelParams,
    mode: str = "exact",
    *,
    initial_state: Optional[CovState] = None,
    keep_eta: bool = False,
):
    """Total log-likelihood of a panel plus the filtered state path.

    Runs the recursion from the targeting state (or ``initial_state``) over
    every row, scoring each day before updating; cost is O(T * N).

    Returns
    -------
    (float, StatePath)
        The total log-likelihood and the per-day states aligned with the
        panel rows (``states[t]`` scored row t). The path carries
        ``ll_days``, ``mbars`` and ``ms`` diagnostics; when ``keep_eta`` is
        set the de-garched noise is attached as ``states.eta``.

    Raises
    ------
    RecursionFailure
        Propagated from the failing step with its index attached.
    """
    res = _run_filter(
        panel, target, params, mode, params.noise.kind_code, params.noise.nu or 0.0,
        True, keep_eta, initial_state,
    )
    _, _, loglik, ll_days, v0s, v1s, mbars, ms, betas, eta, _ = res
    t0 = initial_state.t if initial_state is not None else 0
    path = StatePath(v0s, v1s, betas, t0=t0, mbars=mbars, ms=ms, ll_days=ll_days)
    if keep_eta:
        path.eta = eta
    return float(loglik), path


def loglik_value(
    panel: ReturnsPanel,
    target: TargetSpec,
    params: ModelParams,
    mode: str = "exact",
    *,
    initial_state: Optional[CovState] = None,
) -> float:
    """Total log-likelihood only (no path kept); the optimizer's inner loop."""
    res = _run_filter(
        panel, target, params, mode, params.noise.kind_code, params.noise.nu or 0.0,
        False, False, initial_state,
    )
    return float(res[2])


def degarch(panel: ReturnsPanel, states) -> np.ndarray:
    """Garch-filtered returns: row t is H(t)^{-1/2} applied to panel row t."""
    t_len, n = panel.returns.shape
    if len(states) != t_len:
        raise RmgError(f"{len(states)} states for {t_len} panel rows")
    if isinstance(states, StatePath):
        v0s, v1s, betas = states.v0s, states.v1s, states.betas
    else:
        v0s = np.array([s.v0 for s in states])
        v1s = np.array([s.v1 for s in states])
        betas = np.array([s.beta for s in states])
    if betas.shape[1] != n:
        raise RmgError(f"states have N={betas.shape[1]} but panel has N={n}")
    r = panel.returns
    r_m = np.einsum("tn,tn->t", r, betas) / n
    market = r_m[:, None] * betas
    return market / np.sqrt(n * v0s)[:, None] + (r - market) / np.sqrt(v1s)[:, None]
