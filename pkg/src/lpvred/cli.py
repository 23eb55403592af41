"""Command-line interface: dataset generation, reductions, evaluation, reports."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .metrics import ReductionReport, nrmse

# Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 partial grid.
click.UsageError.exit_code = 1

_NUMERICAL_FAILURE = 2
_PARTIAL_FAILURE = 3


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Experiment configuration (INI).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="runs",
              show_default=True, help="Output directory for artifacts.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.pass_context
def main(ctx, config_path, out_dir, seed, fmt):
    """Joint state and scheduling reduction of affine LPV-SS models."""
    ctx.ensure_object(dict)
    ctx.obj.update(config=config_path, out=out_dir, seed=seed, fmt=fmt)


def _require_config(ctx):
    if ctx.obj["config"] is None:
        raise click.UsageError("this command needs --config")
    return ctx.obj["config"]


def _load_setup(ctx):
    from .benchmark import discretize_euler, embed_lpv, load_config

    cfg = load_config(_require_config(ctx))
    datasets = cfg.build_datasets()
    ct_model, eta = embed_lpv(cfg.chain)
    model = discretize_euler(ct_model, cfg.t_step)
    return cfg, datasets, model, eta


def _run_single(ctx, spec):
    from .experiment import config_hash, run_reducer

    cfg, datasets, model, eta = _load_setup(ctx)
    out = Path(ctx.obj["out"])
    out.mkdir(parents=True, exist_ok=True)
    try:
        report, _, triple = run_reducer(spec, model, eta, datasets,
                                        seed=ctx.obj["seed"])
    except Exception as exc:  # noqa: BLE001 - map to the numerical exit code
        click.echo(f"reduction failed: {type(exc).__name__}: {exc}", err=True)
        sys.exit(_NUMERICAL_FAILURE)
    report.config_hash = config_hash(cfg.raw_text, ctx.obj["seed"])
    from .experiment import _run_id

    run_id = _run_id(spec)
    triple.save(out / f"triple_{run_id}.txt")
    if ctx.obj["fmt"] == "json":
        ReductionReport.write_json([report], out / f"report_{run_id}.json")
    else:
        ReductionReport.write_csv([report], out / f"report_{run_id}.csv")
        ReductionReport.write_json([report], out / f"report_{run_id}.json")
    click.echo(ReductionReport.csv_header())
    click.echo(",".join(report.to_row()))


@main.group()
def bench():
    """Benchmark model and dataset commands."""


@bench.command("make")
@click.pass_context
def bench_make(ctx):
    """Generate the reduction/validation/extrapolation datasets."""
    cfg, datasets, _, _ = _load_setup(ctx)
    out = Path(ctx.obj["out"])
    out.mkdir(parents=True, exist_ok=True)
    for name, traj in datasets.items():
        path = out / f"dataset_{name}.csv"
        traj.to_csv(path)
        click.echo(f"wrote {path} ({len(traj)} samples, n_x={traj.x.shape[1]}, "
                   f"n_p={traj.p.shape[1]})")


@main.group()
def reduce():
    """Run a single reduction."""


@reduce.command("tmm")
@click.option("--mode", type=click.Choice(["R", "O", "H"], case_sensitive=False),
              default="R", show_default=True)
@click.option("--decomp", type=click.Choice(["tsvd", "hosvd"]), default="hosvd",
              show_default=True)
@click.option("--horizon", type=int, default=2, show_default=True)
@click.option("--tol", type=float, default=1e-8, show_default=True,
              help="Singular-vector retention tolerance.")
@click.option("--budget", type=float, default=2e8, show_default=True,
              help="Tensor entry budget for the horizon recursion.")
@click.pass_context
def reduce_tmm(ctx, mode, decomp, horizon, tol, budget):
    """Tensor-based moment matching."""
    _run_single(ctx, {"method": "tmm", "mode": mode.upper(), "decomp": decomp,
                      "horizon": horizon, "tol": tol, "budget": budget})


@reduce.command("pod")
@click.option("--variant", type=click.Choice(["matrix", "weighted", "tsvd", "hosvd"]),
              default="weighted", show_default=True)
@click.option("--rx", type=int, default=3, show_default=True)
@click.option("--rp", type=int, default=2, show_default=True)
@click.option("--residual", type=click.Choice(["galerkin", "delta"]),
              default="galerkin", show_default=True)
@click.pass_context
def reduce_pod(ctx, variant, rx, rp, residual):
    """Data-driven POD reduction."""
    _run_single(ctx, {"method": "pod", "variant": variant, "rx": rx, "rp": rp,
                      "residual": residual})


@main.command("run")
@click.pass_context
def run(ctx):
    """Run the full reducer grid from the configuration."""
    from .experiment import run_experiment

    config = _require_config(ctx)
    reports, any_failed = run_experiment(config, ctx.obj["out"],
                                         fmt=ctx.obj["fmt"], seed=ctx.obj["seed"])
    click.echo(ReductionReport.csv_header())
    for rep in reports:
        click.echo(",".join(rep.to_row()))
    if any_failed:
        click.echo("some runs failed; see the error column", err=True)
        sys.exit(_PARTIAL_FAILURE)


@main.command("eval")
@click.option("--ref", "ref_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--test", "test_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
def eval_cmd(ref_path, test_path):
    """NRMSE between the outputs of two stored trajectories."""
    from .model import Trajectory

    ref = Trajectory.from_csv(ref_path)
    test = Trajectory.from_csv(test_path)
    try:
        value = nrmse(ref.y, test.y)
    except ValueError as exc:
        click.echo(f"evaluation failed: {exc}", err=True)
        sys.exit(_NUMERICAL_FAILURE)
    click.echo(f"nrmse_percent={value:.6g}")


@main.command("report")
@click.argument("directory", type=click.Path(exists=True, file_okay=False),
                required=False)
@click.pass_context
def report_cmd(ctx, directory):
    """Merge every report.json under DIRECTORY into one table."""
    from .experiment import merge_reports

    directory = directory or ctx.obj["out"]
    out = Path(ctx.obj["out"])
    out.mkdir(parents=True, exist_ok=True)
    reports = merge_reports(directory, out_csv=out / "merged_report.csv",
                            out_json=out / "merged_report.json")
    click.echo(ReductionReport.csv_header())
    for rep in reports:
        click.echo(",".join(rep.to_row()))


@main.command("selftest")
@click.option("--seeds", type=int, default=3, show_default=True,
              help="Number of seeds per property check.")
def selftest_cmd(seeds):
    """Run the built-in property suites."""
    from .selftest import run_selftest

    if not run_selftest(seeds=range(seeds), echo=click.echo):
        sys.exit(_NUMERICAL_FAILURE)


if __name__ == "__main__":
    main()
