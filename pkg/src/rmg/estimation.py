"""Constrained maximum-likelihood fitting of the recursion parameters.

The search runs a derivative-free Nelder-Mead simplex over an unconstrained
reparametrization of the admissible box (per component: persistence
``s = a + g`` in (0,1) and split ``p = a/s`` in (0,1) through logits;
off-diagonals through ``tanh``), so every trial point is feasible by
construction. Tiers are fitted as a ladder (two -> four -> six), each stage
warm-started from the previous one, which makes the nested-likelihood
ordering structural. Standard errors come from a central finite-difference
Hessian of -L in natural scale, Richardson-checked.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .errors import EstimationError, LikelihoodError, RecursionFailure, RmgError
from .likelihood import NoiseModel, loglik_value
from .panel import ReturnsPanel
from .recursion import ModelParams
from .targeting import TargetSpec

logger = logging.getLogger(__name__)

__all__ = [
    "FitOptions",
    "FitReport",
    "NuProfile",
    "fit",
    "fit_profiled",
    "profile_nu",
    "hessian_se",
    "fd_hessian",
    "fit_tail_index",
    "param_names",
]

_TIER_DIM = {"two": 2, "four": 4, "six": 6}
_NAMES = ["alpha_00", "gamma_00", "alpha_11", "gamma_11", "alpha_10", "gamma_10"]


def param_names(tier: str) -> list:
    """Free natural-parameter names for a tier, in optimizer order."""
    return _NAMES[: _TIER_DIM[tier]]


@dataclass
class FitOptions:
    """Optimizer and standard-error knobs; defaults fit a panel unattended."""

    mode: str = "exact"
    maxiter: int = 2000
    xatol: float = 2e-4
    fatol: float = 1e-3
    restarts: int = 1
    ladder: bool = True
    std_errors: bool = True
    param_map: str = "persistence_split"
    warm_start: Optional[ModelParams] = None
    hessian_rel_step: float = 1e-4


@dataclass
class FitReport:
    """MLE output: estimates, errors, and convergence diagnostics."""

    params: ModelParams
    loglik: float
    loglik_per_t: float
    std_errors: Optional[dict]
    iterations: int
    n_evaluations: int
    converged: bool
    constraint_active: dict
    hessian_pd: Optional[bool]
    tier: str
    mode: str
    messages: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "loglik": self.loglik,
            "loglik_per_t": self.loglik_per_t,
            "std_errors": self.std_errors,
            "iterations": self.iterations,
            "n_evaluations": self.n_evaluations,
            "converged": self.converged,
            "constraint_active": self.constraint_active,
            "hessian_pd": self.hessian_pd,
            "tier": self.tier,
            "mode": self.mode,
            "messages": list(self.messages),
        }


# ---------------------------------------------------------------------------
# parameter transforms


def _pair_to_natural(x, y, param_map):
    if param_map == "persistence_split":
        s = float(expit(x))
        p = float(expit(y))
        return s * p, s * (1.0 - p)
    if param_map == "rate_logit":
        a = float(expit(x))
        g = float(expit(y)) * (1.0 - a)
        return a, g
    raise EstimationError(f"unknown param_map {param_map!r}")


def _pair_from_natural(a, g, param_map):
    a = min(max(a, 1e-12), 1.0 - 1e-12)
    g = min(max(g, 1e-12), 1.0 - 1e-12)
    s = min(a + g, 1.0 - 1e-12)
    if param_map == "persistence_split":
        return float(logit(s)), float(logit(a / s))
    if param_map == "rate_logit":
        return float(logit(a)), float(logit(min(g / (1.0 - a), 1.0 - 1e-12)))
    raise EstimationError(f"unknown param_map {param_map!r}")


def _off_to_natural(z: float) -> float:
    return math.tanh(z)


def _off_from_natural(c: float) -> float:
    c = min(max(c, -1.0 + 1e-12), 1.0 - 1e-12)
    return math.atanh(c)


def _vec_to_params(vec, tier, noise, param_map) -> ModelParams:
    a00, g00 = _pair_to_natural(vec[0], vec[1], param_map)
    if tier == "two":
        return ModelParams.make("two", a00, g00, noise=noise)
    a11, g11 = _pair_to_natural(vec[2], vec[3], param_map)
    if tier == "four":
        return ModelParams.make("four", a00, g00, a11, g11, noise=noise)
    a10 = _off_to_natural(vec[4])
    g10 = _off_to_natural(vec[5])
    return ModelParams.make("six", a00, g00, a11, g11, a10, g10, noise=noise)


def _params_to_vec(params: ModelParams, tier: str, param_map: str) -> np.ndarray:
    x0, y0 = _pair_from_natural(params.a00, params.g00, param_map)
    if tier == "two":
        return np.array([x0, y0])
    x1, y1 = _pair_from_natural(params.a11, params.g11, param_map)
    if tier == "four":
        return np.array([x0, y0, x1, y1])
    return np.array(
        [x0, y0, x1, y1, _off_from_natural(params.a10), _off_from_natural(params.g10)]
    )


def _natural_vector(params: ModelParams, tier: str) -> np.ndarray:
    vals = [params.a00, params.g00, params.a11, params.g11, params.a10, params.g10]
    return np.array(vals[: _TIER_DIM[tier]])


def _params_from_natural(vec, tier, noise) -> ModelParams:
    v = list(vec)
    if tier == "two":
        return ModelParams.make("two", v[0], v[1], noise=noise)
    if tier == "four":
        return ModelParams.make("four", v[0], v[1], v[2], v[3], noise=noise)
    return ModelParams.make("six", v[0], v[1], v[2], v[3], v[4], v[5], noise=noise)


# ---------------------------------------------------------------------------
# fitting


def _objective(panel, target, tier, noise, mode, param_map, counter):
    def f(vec):
        counter[0] += 1
        try:
            params = _vec_to_params(vec, tier, noise, param_map)
            return -loglik_value(panel, target, params, mode)
        except (RecursionFailure, LikelihoodError) as exc:
            logger.debug("trial point rejected: %s", exc)
            return np.inf

    return f


_DEFAULT_START = {"a00": 0.05, "g00": 0.02, "a11": 0.10, "g11": 0.02,
                  "a10": 0.0, "g10": 0.0}


def _stage_start(tier, previous, noise) -> ModelParams:
    d = dict(_DEFAULT_START)
    if previous is not None:
        d.update(
            a00=previous.a00, g00=previous.g00, a11=previous.a11, g11=previous.g11,
            a10=previous.a10, g10=previous.g10,
        )
    if tier == "two":
        return ModelParams.make("two", d["a00"], d["g00"], noise=noise)
    if tier == "four":
        return ModelParams.make("four", d["a00"], d["g00"], d["a11"], d["g11"], noise=noise)
    return ModelParams.make(
        "six", d["a00"], d["g00"], d["a11"], d["g11"], d["a10"], d["g10"], noise=noise
    )


def _constraint_activity(params: ModelParams, tier: str) -> dict:
    """Flag parameters whose natural value sits at the admissible box edge."""
    edge = 1e-6
    act = {}
    pairs = [("alpha_00", "gamma_00", params.a00, params.g00)]
    if tier != "two":
        pairs.append(("alpha_11", "gamma_11", params.a11, params.g11))
    for na, ng, a, g in pairs:
        hot = a < edge or g < edge or (a + g) > 1.0 - edge
        act[na] = hot
        act[ng] = hot
    if tier == "six":
        act["alpha_10"] = abs(params.a10) > 1.0 - edge
        act["gamma_10"] = abs(params.g10) > 1.0 - edge
    return act


def fit(
    panel: ReturnsPanel,
    target: TargetSpec,
    tier: str = "six",
    noise: Optional[NoiseModel] = None,
    opts: Optional[FitOptions] = None,
) -> FitReport:
    """Maximize the path likelihood over the tier's free parameters.

    Parameters
    ----------
    panel : ReturnsPanel
        Normalized return panel.
    target : TargetSpec
        Covariance-targeting result; fixes the unconditional levels, the
        target beta, and the initial state.
    tier : {"two", "four", "six"}
        Parameter tying (see :class:`~rmg.recursion.ModelParams`).
    noise : NoiseModel
        Gaussian or Student-t with fixed tail index (profile the index
        separately with :func:`profile_nu`).
    opts : FitOptions

    Returns
    -------
    FitReport
        Estimates in natural scale, standard errors from the inverse
        Hessian when it is positive definite and no constraint is active,
        and convergence diagnostics. Deterministic: identical inputs
        reproduce the report bit for bit.
    """
    if tier not in _TIER_DIM:
        raise EstimationError(f"unknown tier {tier!r}")
    noise = noise or NoiseModel.gaussian()
    opts = opts or FitOptions()

    stages = ["two", "four", "six"]
    stages = stages[: stages.index(tier) + 1] if opts.ladder else [tier]
    previous = opts.warm_start
    counter = [0]
    iterations = 0
    converged = True
    messages = []

    best_params = None
    best_val = np.inf
    for stage in stages:
        start = _stage_start(stage, previous, noise)
        x0 = _params_to_vec(start, stage, opts.param_map)
        obj = _objective(panel, target, stage, noise, opts.mode, opts.param_map, counter)
        res = None
        for attempt in range(opts.restarts + 1):
            res = minimize(
                obj,
                x0,
                method="Nelder-Mead",
                options={
                    "maxiter": opts.maxiter,
                    "maxfev": 3 * opts.maxiter,
                    "xatol": opts.xatol,
                    "fatol": opts.fatol,
                    "adaptive": True,
                },
            )
            iterations += res.nit
            if attempt < opts.restarts:
                x0 = res.x
        previous = _vec_to_params(res.x, stage, noise, opts.param_map)
        if stage == tier:
            converged = bool(res.success)
            if not res.success:
                messages.append(f"optimizer stopped early: {res.message}")
            best_params = previous
            best_val = float(res.fun)

    if not math.isfinite(best_val):
        raise EstimationError("likelihood is -inf at every point visited")

    loglik = -best_val
    activity = _constraint_activity(best_params, tier)
    std_errors = None
    hessian_pd = None
    if opts.std_errors:
        if any(activity.values()):
            messages.append("constraint active at optimum; standard errors omitted")
            hessian_pd = False
        else:
            hres = hessian_se(
                panel, target, best_params,
                mode=opts.mode, rel_step=opts.hessian_rel_step,
            )
            std_errors = hres.se
            hessian_pd = hres.pd
            if hres.messages:
                messages.extend(hres.messages)

    return FitReport(
        params=best_params,
        loglik=loglik,
        loglik_per_t=loglik / panel.n_periods,
        std_errors=std_errors,
        iterations=iterations,
        n_evaluations=counter[0],
        converged=converged,
        constraint_active=activity,
        hessian_pd=hessian_pd,
        tier=tier,
        mode=opts.mode,
        messages=messages,
    )


# ---------------------------------------------------------------------------
# standard errors


def fd_hessian(f: Callable, x0: np.ndarray, rel_step: float = 1e-4) -> np.ndarray:
    """Central finite-difference Hessian with per-coordinate relative steps."""
    x0 = np.asarray(x0, dtype=np.float64)
    k = x0.size
    h = rel_step * np.maximum(np.abs(x0), 1e-8)
    hess = np.empty((k, k))
    f0 = f(x0)

    def at(shifts):
        x = x0.copy()
        for i, mult in shifts.items():
            x[i] = x0[i] + mult * h[i]
        return f(x)

    for i in range(k):
        fp = at({i: +1.0})
        fm = at({i: -1.0})
        hess[i, i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i])
        for j in range(i + 1, k):
            fpp = at({i: +1.0, j: +1.0})
            fpm = at({i: +1.0, j: -1.0})
            fmp = at({i: -1.0, j: +1.0})
            fmm = at({i: -1.0, j: -1.0})
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j])
    return hess


@dataclass
class HessianResult:
    se: Optional[dict]
    hessian: np.ndarray
    pd: bool
    richardson_dev: float
    messages: list


def hessian_se(
    panel: ReturnsPanel,
    target: TargetSpec,
    params_hat: ModelParams,
    *,
    mode: str = "exact",
    rel_step: float = 1e-4,
    richardson_tol: float = 0.3,
) -> HessianResult:
    """Standard errors from the inverse finite-difference Hessian of -L.

    The Hessian is evaluated at steps ``h`` and ``h/2`` and Richardson
    extrapolated; if the two disagree beyond ``richardson_tol`` the step is
    enlarged 20x once (root-selection kinks and rounding can poison very
    small steps). Errors are omitted (``se=None``) when the extrapolated
    Hessian is not positive definite.
    """
    tier = params_hat.tier
    names = param_names(tier)
    noise = params_hat.noise
    x0 = _natural_vector(params_hat, tier)

    def f(vec):
        try:
            p = _params_from_natural(vec, tier, noise)
            return -loglik_value(panel, target, p, mode)
        except (RecursionFailure, LikelihoodError, RmgError):
            return np.inf

    messages = []
    dev = np.inf
    hess = None
    for step in (rel_step, rel_step * 20.0):
        h1 = fd_hessian(f, x0, step)
        h2 = fd_hessian(f, x0, step * 0.5)
        if not (np.isfinite(h1).all() and np.isfinite(h2).all()):
            messages.append(f"non-finite Hessian entries at rel_step={step:g}")
            continue
        extrap = (4.0 * h2 - h1) / 3.0
        scale = np.max(np.abs(extrap)) or 1.0
        dev = float(np.max(np.abs(h1 - h2)) / scale)
        hess = extrap
        if dev <= richardson_tol:
            break
        messages.append(f"Richardson deviation {dev:.2g} at rel_step={step:g}")
    if hess is None:
        return HessianResult(None, np.full((len(names),) * 2, np.nan), False, dev, messages)

    try:
        np.linalg.cholesky(hess)
        pd = True
    except np.linalg.LinAlgError:
        pd = False
    if not pd:
        messages.append("Hessian not positive definite; standard errors omitted")
        return HessianResult(None, hess, False, dev, messages)
    cov = np.linalg.inv(hess)
    se = {nm: float(math.sqrt(max(cov[i, i], 0.0))) for i, nm in enumerate(names)}
    return HessianResult(se, hess, True, dev, messages)


# ---------------------------------------------------------------------------
# tail-index profiling


@dataclass
class NuProfile:
    """Profiled tail index with the likelihood curve used to find it."""

    nu_hat: float
    curve: list
    flat: bool
    effectively_gaussian: bool


def _golden_max(f: Callable, lo: float, hi: float, rel_tol: float = 1e-3) -> float:
    """Golden-section maximum of f on [lo, hi] in log space."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = math.log(lo), math.log(hi)
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    while (b - a) > rel_tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(math.exp(d))
    return math.exp(0.5 * (a + b))


def profile_nu(
    panel: ReturnsPanel,
    target: TargetSpec,
    params: ModelParams,
    *,
    grid: Optional[np.ndarray] = None,
    mode: str = "exact",
    flat_tol: float = 1.0,
) -> NuProfile:
    """Profile the Student-t tail index at fixed recursion parameters.

    Scans a log-spaced grid, then golden-section refines around the best
    grid point. A curve whose total range is below ``flat_tol`` (absolute
    log-likelihood units) is flagged flat; a maximum at the top of the grid
    is flagged effectively Gaussian.
    """
    if grid is None:
        grid = np.geomspace(2.2, 200.0, 15)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise EstimationError("empty nu grid")

    def l_of(nu: float) -> float:
        p = replace(params, noise=NoiseModel.student_t(nu))
        try:
            return loglik_value(panel, target, p, mode)
        except (RecursionFailure, LikelihoodError):
            return -np.inf

    curve = [(float(nu), float(l_of(nu))) for nu in grid]
    vals = np.array([v for _, v in curve])
    k = int(np.argmax(vals))
    flat = bool(np.nanmax(vals) - np.nanmin(vals) < flat_tol)
    if grid.size == 1:
        return NuProfile(float(grid[0]), curve, flat, False)
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    if lo == hi:
        nu_hat = float(lo)
    else:
        nu_hat = float(_golden_max(l_of, lo, hi))
    at_top = nu_hat >= 0.98 * float(grid[-1])
    return NuProfile(nu_hat, curve, flat, at_top)


def fit_profiled(
    panel: ReturnsPanel,
    target: TargetSpec,
    tier: str,
    opts: Optional[FitOptions] = None,
    *,
    nu_init: float = 6.0,
    rounds: int = 2,
    grid: Optional[np.ndarray] = None,
):
    """Alternate parameter fitting and tail-index profiling.

    Fits with t(nu_init) noise, profiles nu at the estimates, refits, and
    repeats ``rounds`` times. Returns ``(FitReport, NuProfile)``.
    """
    opts = opts or FitOptions()
    nu = nu_init
    report = None
    profile = None
    for k in range(rounds):
        inner = replace(opts, warm_start=report.params if report else opts.warm_start,
                        std_errors=(k == rounds - 1) and opts.std_errors)
        report = fit(panel, target, tier, NoiseModel.student_t(nu), inner)
        profile = profile_nu(panel, target, report.params, grid=grid, mode=opts.mode)
        nu = profile.nu_hat
    final = replace(report.params, noise=NoiseModel.student_t(nu))
    report.params = final
    return report, profile


def fit_tail_index(samples: np.ndarray, lo: float = 2.1, hi: float = 200.0) -> float:
    """MLE tail index of pooled residuals under the unit-variance Student-t.

    Samples are standardized to unit variance first, then nu is maximized
    by golden section.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    x = x[np.isfinite(x)]
    if x.size < 10:
        raise EstimationError("need at least 10 samples to fit a tail index")
    x = x / x.std()
    noise_cache = {}

    def l_of(nu: float) -> float:
        key = round(nu, 12)
        if key not in noise_cache:
            noise_cache[key] = float(np.sum(NoiseModel.student_t(nu).logpdf(x)))
        return noise_cache[key]

    return float(_golden_max(l_of, lo, hi))
