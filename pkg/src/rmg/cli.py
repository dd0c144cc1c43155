"""Command-line front end.

One binary with subcommands covering the pipeline: ``target`` -> ``fit`` ->
``simulate`` / ``degarch`` / ``analyze``. Model objects travel as JSON,
panels and series as CSV. Every command prints its resolved configuration
as JSON on stderr, takes ``--seed`` wherever randomness exists, and never
mutates its inputs, so outputs are reproducible byte for byte.

Exit codes: 0 success, 1 runtime/model error, 2 usage error.
"""
from __future__ import annotations

import json
import os
import sys

# RMG_THREADS caps BLAS/OpenMP parallelism; must be set before numpy loads.
_threads = os.environ.get("RMG_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import click
import numpy as np
import pandas as pd

from . import __version__
from .analytics import (
    acf_abs,
    cliffs_delta,
    conditional_correlations,
    leverage_asymmetry,
    pair_delta,
    risk_measure,
    sector_median_corr,
)
from .baselines import uvg_fit_panel
from .errors import RmgError
from .estimation import FitOptions, fit, fit_profiled, hessian_se, param_names, profile_nu
from .likelihood import NoiseModel, degarch, loglik_path
from .panel import load_panel, normalize, write_panel
from .recursion import ModelParams, StatePath
from .simulation import predicted_returns, simulate_path
from .targeting import TargetSpec, target_from_panel


def _echo_config(ctx: click.Context) -> None:
    cfg = {k: v for k, v in ctx.params.items()}
    cfg["command"] = ctx.command.name
    click.echo(json.dumps(cfg, sort_keys=True, default=str), err=True)


def _fail(exc: Exception) -> None:
    raise click.ClickException(str(exc))


def _load_normalized(path, prices, sectors_path=None, volumes_path=None,
                     do_normalize=True):
    panel = load_panel(path, prices=prices, sectors_path=sectors_path,
                       volumes_path=volumes_path)
    return normalize(panel) if do_normalize else panel


@click.group()
@click.version_option(__version__, prog_name="rmg")
def main():
    """Restricted-covariance multivariate GARCH with dynamic betas."""


@main.command()
@click.option("--panel", "panel_path", required=True, type=click.Path(exists=True))
@click.option("--window-from", default=None, help="ISO date, inclusive.")
@click.option("--window-to", default=None, help="ISO date, inclusive.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--prices", is_flag=True, help="Input cells are prices; take log returns.")
@click.option("--no-normalize", is_flag=True, help="Skip demeaning/global rescale.")
@click.option("--tol", default=1e-10, show_default=True)
@click.option("--max-iter", default=10_000, show_default=True)
@click.pass_context
def target(ctx, panel_path, window_from, window_to, out_path, prices, no_normalize,
           tol, max_iter):
    """Estimate the unconditional target (levels + beta) from a panel window."""
    _echo_config(ctx)
    try:
        panel = _load_normalized(panel_path, prices, do_normalize=not no_normalize)
        window = None
        if window_from or window_to:
            window = (window_from, window_to)
        spec = target_from_panel(panel, window, tol=tol, max_iter=max_iter)
        spec.save(out_path)
    except RmgError as exc:
        _fail(exc)
    click.echo(f"target written to {out_path}")


def _print_table_row(report) -> None:
    """Table row in the conventional scaling (x100, except alpha_11 x10)."""
    scales = {"alpha_00": 100, "gamma_00": 100, "alpha_11": 10,
              "gamma_11": 100, "alpha_10": 100, "gamma_10": 100}
    names = param_names(report.tier)
    p = report.params
    vals = {"alpha_00": p.a00, "gamma_00": p.g00, "alpha_11": p.a11,
            "gamma_11": p.g11, "alpha_10": p.a10, "gamma_10": p.g10}
    head, row, err = [], [], []
    for nm in names:
        s = scales[nm]
        head.append(f"{nm} x{s}")
        row.append(f"{vals[nm] * s:10.4f}")
        if report.std_errors:
            err.append(f"({report.std_errors[nm] * s:8.4f})")
    click.echo(f"n_par={len(names)}  L/T={report.loglik_per_t:.4f}  "
               f"converged={report.converged}")
    click.echo("  ".join(head))
    click.echo("  ".join(row))
    if err:
        click.echo("  ".join(err))


@main.command()
@click.option("--panel", "panel_path", required=True, type=click.Path(exists=True))
@click.option("--target", "target_path", required=True, type=click.Path(exists=True))
@click.option("--tier", type=click.Choice(["2", "4", "6"]), default="6", show_default=True)
@click.option("--noise", type=click.Choice(["gauss", "t"]), default="t", show_default=True)
@click.option("--nu", type=float, default=None,
              help="Fix the tail index; when omitted with --noise t it is profiled.")
@click.option("--mode", type=click.Choice(["exact", "large-n"]), default="exact",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Recorded for reproducibility; the fit itself is deterministic.")
@click.option("--prices", is_flag=True)
@click.option("--maxiter", default=2000, show_default=True)
@click.option("--no-ladder", is_flag=True, help="Skip the two->four->six warm-start ladder.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--states-out", "states_path", default=None, type=click.Path())
@click.pass_context
def fit_cmd(ctx, panel_path, target_path, tier, noise, nu, mode, seed, prices,
            maxiter, no_ladder, out_path, states_path):
    """Maximum-likelihood fit; prints a table-style row, writes a JSON report."""
    _echo_config(ctx)
    tier_name = {"2": "two", "4": "four", "6": "six"}[tier]
    mode_name = mode.replace("-", "_")
    try:
        panel = _load_normalized(panel_path, prices)
        spec = TargetSpec.load(target_path)
        opts = FitOptions(mode=mode_name, maxiter=maxiter, ladder=not no_ladder)
        profile = None
        if noise == "gauss":
            report = fit(panel, spec, tier_name, NoiseModel.gaussian(), opts)
        elif nu is not None:
            report = fit(panel, spec, tier_name, NoiseModel.student_t(nu), opts)
        else:
            report, profile = fit_profiled(panel, spec, tier_name, opts)
        out = report.to_dict()
        out["seed"] = seed
        if profile is not None:
            out["nu_profile"] = {
                "nu_hat": profile.nu_hat,
                "curve": profile.curve,
                "flat": profile.flat,
                "effectively_gaussian": profile.effectively_gaussian,
            }
        with open(out_path, "w") as fh:
            json.dump(out, fh, sort_keys=True)
            fh.write("\n")
        if states_path:
            _, states = loglik_path(panel, spec, report.params, mode_name)
            states.save(states_path)
        _print_table_row(report)
    except RmgError as exc:
        _fail(exc)


main.add_command(fit_cmd, name="fit")


@main.command()
@click.option("--target", "target_path", required=True, type=click.Path(exists=True))
@click.option("--params", "params_path", required=True, type=click.Path(exists=True))
@click.option("-T", "t_len", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--burn-in", default=500, show_default=True)
@click.option("--mode", type=click.Choice(["exact", "large-n"]), default="exact",
              show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--states-out", "states_path", default=None, type=click.Path())
@click.pass_context
def simulate(ctx, target_path, params_path, t_len, seed, burn_in, mode, out_path,
             states_path):
    """Monte Carlo panel from a target + params pair."""
    _echo_config(ctx)
    try:
        spec = TargetSpec.load(target_path)
        params = ModelParams.load(params_path)
        panel, states = simulate_path(
            spec, params, t_len, seed, burn_in=burn_in, mode=mode.replace("-", "_")
        )
        write_panel(panel, out_path)
        if states_path:
            states.save(states_path)
    except RmgError as exc:
        _fail(exc)
    click.echo(f"panel written to {out_path}")


@main.command()
@click.option("--panel", "panel_path", required=True, type=click.Path(exists=True))
@click.option("--target", "target_path", default=None, type=click.Path(exists=True))
@click.option("--params", "params_path", default=None, type=click.Path(exists=True))
@click.option("--states", "states_path", default=None, type=click.Path(exists=True),
              help="Use a stored state path instead of re-filtering.")
@click.option("--mode", type=click.Choice(["exact", "large-n"]), default="exact",
              show_default=True)
@click.option("--prices", is_flag=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def degarch_cmd(ctx, panel_path, target_path, params_path, states_path, mode, prices,
                out_path):
    """Garch-filtered returns; CSV shaped like the input panel."""
    _echo_config(ctx)
    try:
        panel = _load_normalized(panel_path, prices)
        if states_path:
            states = StatePath.load(states_path)
        else:
            if not (target_path and params_path):
                raise click.UsageError("need --states or both --target and --params")
            spec = TargetSpec.load(target_path)
            params = ModelParams.load(params_path)
            _, states = loglik_path(panel, spec, params, mode.replace("-", "_"))
        eta = degarch(panel, states)
        write_panel(panel, out_path, matrix=eta)
    except RmgError as exc:
        _fail(exc)
    click.echo(f"filtered returns written to {out_path}")


main.add_command(degarch_cmd, name="degarch")


@main.group()
def analyze():
    """Post-fit analytics; each subcommand writes tidy long-format CSV."""


def _read_sectors(path, assets):
    sec = pd.read_csv(path, dtype=str)
    mapping = dict(zip(sec.iloc[:, 0].str.strip(), sec.iloc[:, 1].str.strip()))
    missing = [a for a in assets if a not in mapping]
    if missing:
        raise click.ClickException(f"no sector for ticker {missing[0]!r}")
    return [mapping[a] for a in assets]


@analyze.command()
@click.option("--states", "states_path", required=True, type=click.Path(exists=True))
@click.option("--panel", "panel_path", required=True, type=click.Path(exists=True),
              help="Panel whose tickers order the sector file (volumes optional).")
@click.option("--sectors", "sectors_path", required=True, type=click.Path(exists=True))
@click.option("--volumes", "volumes_path", default=None, type=click.Path(exists=True))
@click.option("--threshold", default=1.0, show_default=True)
@click.option("--smooth", default=21, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def risk(ctx, states_path, panel_path, sectors_path, volumes_path, threshold, smooth,
         out_path):
    """Sector risk measure from the beta path."""
    _echo_config(ctx)
    try:
        states = StatePath.load(states_path)
        panel = load_panel(panel_path, volumes_path=volumes_path)
        sectors = _read_sectors(sectors_path, panel.assets)
        df = risk_measure(states, sectors, volumes=panel.volumes,
                          threshold=threshold, smooth=smooth or None)
        long = df.reset_index(names="t").melt("t", var_name="sector", value_name="risk")
        long.to_csv(out_path, index=False)
    except RmgError as exc:
        _fail(exc)
    click.echo(f"risk measure written to {out_path}")


@analyze.command("sector-corr")
@click.option("--states", "states_path", required=True, type=click.Path(exists=True))
@click.option("--panel", "panel_path", required=True, type=click.Path(exists=True))
@click.option("--sectors", "sectors_path", required=True, type=click.Path(exists=True))
@click.option("--window", default=50, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def sector_corr(ctx, states_path, panel_path, sectors_path, window, out_path):
    """Median conditional correlation per sector pair, window-averaged."""
    _echo_config(ctx)
    try:
        states = StatePath.load(states_path)
        panel = load_panel(panel_path)
        sectors = _read_sectors(sectors_path, panel.assets)
        df = sector_median_corr(states, sectors, window=window)
        df.to_csv(out_path, index=False)
    except RmgError as exc:
        _fail(exc)
    click.echo(f"sector correlations written to {out_path}")


@analyze.command("corr-pairs")
@click.option("--states", "states_path", required=True, type=click.Path(exists=True))
@click.option("--pairs", required=True,
              help="Comma-separated i:j index pairs, e.g. '0:1,0:2'.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def corr_pairs(ctx, states_path, pairs, out_path):
    """Daily conditional correlations for chosen asset pairs."""
    _echo_config(ctx)
    try:
        states = StatePath.load(states_path)
        parsed = []
        for chunk in pairs.split(","):
            i, j = chunk.split(":")
            parsed.append((int(i), int(j)))
        rows = []
        for t in range(len(states)):
            vals = conditional_correlations(states[t], parsed)
            for (i, j), v in zip(parsed, vals):
                rows.append({"t": t, "i": i, "j": j, "corr": float(v)})
        pd.DataFrame(rows).to_csv(out_path, index=False)
    except RmgError as exc:
        _fail(exc)
    click.echo(f"pair correlations written to {out_path}")


@analyze.command()
@click.option("--states", "states_path", required=True, type=click.Path(exists=True))
@click.option("--panel", "panel_path", required=True, type=click.Path(exists=True))
@click.option("--t-max", default=42, show_default=True)
@click.option("--out-curves", required=True, type=click.Path())
@click.option("--out-asym", required=True, type=click.Path())
@click.pass_context
def leverage(ctx, states_path, panel_path, t_max, out_curves, out_asym):
    """Leverage cross-correlation curves and per-asset asymmetry."""
    _echo_config(ctx)
    try:
        states = StatePath.load(states_path)
        panel = load_panel(panel_path)
        lags, curves, asym = leverage_asymmetry(states.v0s, panel, t_max=t_max)
        rows = []
        for k, lag in enumerate(lags):
            for j, a in enumerate(panel.assets):
                rows.append({"lag": int(lag), "asset": a, "L": float(curves[k, j])})
        pd.DataFrame(rows).to_csv(out_curves, index=False)
        pd.DataFrame({"asset": list(panel.assets), "A": asym}).to_csv(out_asym, index=False)
    except RmgError as exc:
        _fail(exc)
    click.echo(f"leverage curves written to {out_curves}, asymmetries to {out_asym}")


@analyze.command()
@click.option("--panel", "panel_path", required=True, type=click.Path(exists=True))
@click.option("--max-lag", default=100, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def acf(ctx, panel_path, max_lag, out_path):
    """Averaged autocorrelation of absolute returns."""
    _echo_config(ctx)
    try:
        panel = load_panel(panel_path)
        curve = acf_abs(panel, max_lag)
        pd.DataFrame({"lag": np.arange(max_lag + 1), "acf": curve}).to_csv(
            out_path, index=False
        )
    except RmgError as exc:
        _fail(exc)
    click.echo(f"acf written to {out_path}")


@analyze.command("pair-delta")
@click.option("--empirical", "emp_path", required=True, type=click.Path(exists=True))
@click.option("--simulated", "sim_path", required=True, type=click.Path(exists=True))
@click.option("--n-pairs", default=70, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def pair_delta_cmd(ctx, emp_path, sim_path, n_pairs, seed, out_path):
    """Pairwise product differences between an observed and simulated panel."""
    _echo_config(ctx)
    try:
        emp = load_panel(emp_path)
        sim = load_panel(sim_path)
        pairs, deltas, mean, std = pair_delta(emp, sim, n_pairs=n_pairs, seed=seed)
        rows = [{"i": i, "j": j, "delta": float(d)} for (i, j), d in zip(pairs, deltas)]
        pd.DataFrame(rows).to_csv(out_path, index=False)
        click.echo(f"delta mean={mean:.6g} std={std:.6g} over {len(pairs)} pairs")
    except RmgError as exc:
        _fail(exc)


@analyze.command()
@click.option("--x", "x_path", required=True, type=click.Path(exists=True),
              help="Single-column CSV.")
@click.option("--y", "y_path", required=True, type=click.Path(exists=True))
@click.pass_context
def cliffs(ctx, x_path, y_path):
    """Cliff's delta between two samples."""
    _echo_config(ctx)
    try:
        x = pd.read_csv(x_path).iloc[:, 0].to_numpy(dtype=float)
        y = pd.read_csv(y_path).iloc[:, 0].to_numpy(dtype=float)
        click.echo(f"{cliffs_delta(x, y):.10g}")
    except RmgError as exc:
        _fail(exc)


@main.command("uvg-fit")
@click.option("--panel", "panel_path", required=True, type=click.Path(exists=True))
@click.option("--noise", type=click.Choice(["gauss", "t"]), default="gauss",
              show_default=True)
@click.option("--nu", type=float, default=3.35, show_default=True)
@click.option("--prices", is_flag=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def uvg_fit_cmd(ctx, panel_path, noise, nu, prices, out_path):
    """Univariate GARCH(1,1) baseline, fitted per asset."""
    _echo_config(ctx)
    try:
        panel = _load_normalized(panel_path, prices)
        model = NoiseModel.gaussian() if noise == "gauss" else NoiseModel.student_t(nu)
        df = uvg_fit_panel(panel, model)
        df.to_csv(out_path, index=False)
    except RmgError as exc:
        _fail(exc)
    click.echo(f"per-asset UVG fits written to {out_path}")


@main.command("predicted")
@click.option("--panel", "panel_path", required=True, type=click.Path(exists=True))
@click.option("--states", "states_path", required=True, type=click.Path(exists=True))
@click.option("--noise", type=click.Choice(["gauss", "t"]), default="t", show_default=True)
@click.option("--nu", type=float, default=3.35, show_default=True)
@click.option("--replications", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Single-column CSV of pooled predicted returns.")
@click.pass_context
def predicted(ctx, panel_path, states_path, noise, nu, replications, seed, out_path):
    """Model-implied return draws pooled for pdf comparison."""
    _echo_config(ctx)
    try:
        panel = load_panel(panel_path)
        states = StatePath.load(states_path)
        model = NoiseModel.gaussian() if noise == "gauss" else NoiseModel.student_t(nu)
        draws = predicted_returns(panel, states, model, replications, seed)
        pd.DataFrame({"value": draws.ravel()}).to_csv(out_path, index=False)
    except RmgError as exc:
        _fail(exc)
    click.echo(f"predicted samples written to {out_path}")


if __name__ == "__main__":
    main()
