"""Command-line interface.

Exit codes: 0 success, 1 numerical failure, 2 usage or format error.
``MLG_THREADS`` caps worker threads (0 or unset: one per CPU).
"""

from __future__ import annotations

import functools
import os
import sys

import click

from . import datamodel as dm
from .config import load_config, parse_text
from .errors import FormatError, MLGError, ModelError, NumericalError, SizeError
from .metrics import evaluate
from .oos import assign_oos_batch, fit_oos, load_model, save_model
from .pipeline import parse_variant, run_benchmark, run_pipeline
from .synth import SynthSpec, generate


def _guard(fn):
    """Map toolkit errors onto the exit-code contract."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NumericalError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except (MLGError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _load_stack(paths) -> dm.LayerStack:
    layers = [dm.read_matrix(p, v) for v, p in enumerate(paths)]
    return dm.LayerStack(tuple(layers))


def _write_matrix(values, path, fmt):
    if fmt == "binary":
        dm.write_matrix_binary(values, path)
    else:
        dm.write_matrix_csv(values, path)


@click.group()
def main():
    """Multilayer-graph subspace clustering toolkit."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="key = value file with generator settings.")
@click.option("--k", type=int, help="Number of clusters.")
@click.option("--d", type=int, help="Subspace dimension.")
@click.option("--dim", type=int, help="Ambient dimension D.")
@click.option("--per-cluster", type=int, help="Points per cluster.")
@click.option("--layers", type=int, help="Number of layers (views).")
@click.option("--noise", type=float, help="Noise standard deviation per coordinate.")
@click.option("--seed", type=int, help="Random seed.")
@click.option("--format", "fmt", type=click.Choice(["csv", "binary"]), default="csv", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory.")
@_guard
def gen(config_path, k, d, dim, per_cluster, layers, noise, seed, fmt, out_dir):
    """Generate a synthetic multilayer union-of-subspaces dataset."""
    settings = {}
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            raw = parse_text(fh.read(), config_path)
        casts = {"k": int, "d": int, "dim": int, "per_cluster": int, "layers": int, "noise": float, "seed": int}
        for key, value in raw.items():
            if key not in casts:
                raise FormatError(f"{config_path}: unknown key {key!r}")
            try:
                settings[key] = casts[key](value)
            except ValueError:
                raise FormatError(f"{config_path}: bad value for {key}: {value!r}") from None
    flags = dict(k=k, d=d, dim=dim, per_cluster=per_cluster, layers=layers, noise=noise, seed=seed)
    settings.update({key: v for key, v in flags.items() if v is not None})
    spec = SynthSpec(
        k=settings.get("k", 3),
        d=settings.get("d", 3),
        ambient_dim=settings.get("dim", 30),
        points_per_cluster=settings.get("per_cluster", 50),
        noise_sigma=settings.get("noise", 0.0),
        num_layers=settings.get("layers", 3),
        seed=settings.get("seed", 0),
    )
    stack, labels = generate(spec)
    os.makedirs(out_dir, exist_ok=True)
    ext = "mlgm" if fmt == "binary" else "csv"
    for layer in stack:
        _write_matrix(layer.values, os.path.join(out_dir, f"layer{layer.layer_index}.{ext}"), fmt)
    dm.write_labels(labels, os.path.join(out_dir, "labels.txt"))
    click.echo(f"wrote {len(stack)} layers of {stack.n_samples} samples to {out_dir}")


def _pipeline_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="key = value pipeline config."),
        click.option("--preset", type=click.Choice(["orl", "eyaleb", "coil20", "mnist"]), help="Dataset preset for d and delta: ORL d=9 delta=4, EYaleB d=9 delta=2, COIL20 d=9 delta=2, MNIST d=12 delta=6."),
        click.option("--k", type=int, help="Number of clusters."),
        click.option("--d", type=int, help="Subspace dimension kept per column by IPD truncation (faces 9, digits 12, objects 9)."),
        click.option("--delta", type=float, help="Angular affinity exponent (default 2; presets: ORL 4, COIL20/EYaleB 2, MNIST 6)."),
        click.option("--gamma", type=float, help="Weight of the subspace term in the fused Laplacian (default 0.5)."),
        click.option("--eigen-order", type=click.Choice(["largest", "smallest"]), help="Which per-layer eigenvectors enter the fused Laplacian (default smallest)."),
        click.option("--lambda", "lam", type=float, help="Ridge weight of the reference solver for every layer (default 1)."),
        click.option("--seed", type=int, help="k-means seed."),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _config_from(config_path, preset, k, d, delta, gamma, eigen_order, lam, seed):
    overrides = {
        "preset": preset,
        "k": k,
        "d": d,
        "delta": delta,
        "gamma": gamma,
        "eigen_order": eigen_order,
        "seed": seed,
        "solver.default.lambda": lam,
    }
    return load_config(config_path, overrides)


@main.command()
@click.argument("layers", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@_pipeline_options
@click.option("--truth", type=click.Path(exists=True, dir_okay=False), help="Ground-truth labels for metrics.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--timings/--no-timings", default=False, help="Add wall-clock stage timings to summary.txt.")
@_guard
def cluster(layers, config_path, preset, k, d, delta, gamma, eigen_order, lam, seed, truth, out_dir, timings):
    """Cluster samples from one matrix file per layer (layer 0 first)."""
    cfg = _config_from(config_path, preset, k, d, delta, gamma, eigen_order, lam, seed)
    stack = _load_stack(layers)
    truth_labels = None
    if truth:
        truth_labels = dm.read_labels(truth)
        if truth_labels.size != stack.n_samples:
            raise SizeError(f"{truth_labels.size} truth labels for {stack.n_samples} samples")
    summary = run_pipeline(stack, cfg, truth=truth_labels, threads=None)
    os.makedirs(out_dir, exist_ok=True)
    dm.write_labels(summary.labels, os.path.join(out_dir, "labels.txt"))
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary.to_text(include_timings=timings))
    try:
        model = fit_oos(stack.deepest, summary.assignment, cfg.d)
    except ModelError as exc:
        click.echo(f"warning: no out-of-sample model written: {exc}", err=True)
    else:
        save_model(model, os.path.join(out_dir, "oos_model"))
    if summary.metrics is not None:
        m = summary.metrics
        click.echo(f"ACC {m.acc:.4f} NMI {m.nmi:.4f} F1 {m.f1:.4f}")
    else:
        click.echo(f"clustered {stack.n_samples} samples into {cfg.k} clusters")


@main.command()
@click.argument("model", type=click.Path(exists=True))
@click.argument("test_matrix", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False), help="Predicted labels file.")
@click.option("--distances", "dist_path", type=click.Path(dir_okay=False), help="Optional CSV of per-cluster distances.")
@_guard
def oos(model, test_matrix, out_path, dist_path):
    """Label new points (deepest-layer features) by nearest cluster subspace.

    MODEL is an oos_model directory or a `cluster` output directory.
    """
    if not os.path.exists(os.path.join(model, "model.txt")):
        model = os.path.join(model, "oos_model")
    fitted = load_model(model)
    x = dm.read_matrix(test_matrix)
    labels, dist = assign_oos_batch(fitted, x.values)
    dm.write_labels(labels, out_path)
    if dist_path:
        with open(dist_path, "w", encoding="utf-8") as fh:
            fh.write(",".join(f"cluster{c}" for c in range(fitted.k)) + "\n")
            for row in dist:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    click.echo(f"labeled {labels.size} points")


@main.command()
@click.argument("layers", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@_pipeline_options
@click.option("--truth", required=True, type=click.Path(exists=True, dir_okay=False), help="Ground-truth labels.")
@click.option("--trials", type=int, default=10, show_default=True)
@click.option("--subset-size", type=int, required=True, help="In-sample points per trial (class-balanced).")
@click.option("--oos-size", type=int, default=0, show_default=True, help="Held-out points per trial.")
@click.option("--variant", "variants", multiple=True, help="NAME=LAYERS[:GAMMA], LAYERS 'all' or e.g. '0,2'. Default: MLG plus each single layer.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@_guard
def bench(layers, config_path, preset, k, d, delta, gamma, eigen_order, lam, seed, truth, trials, subset_size, oos_size, variants, out_dir):
    """Compare method variants over repeated random subsets (table.csv, trials.csv)."""
    cfg = _config_from(config_path, preset, k, d, delta, gamma, eigen_order, lam, seed)
    stack = _load_stack(layers)
    truth_labels = dm.read_labels(truth)
    parsed = [parse_variant(v) for v in variants] or None
    result = run_benchmark(stack, truth_labels, cfg, trials, subset_size, oos_size, parsed, threads=None)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "table.csv"), "w", encoding="utf-8") as fh:
        fh.write(result.to_table_csv())
    with open(os.path.join(out_dir, "trials.csv"), "w", encoding="utf-8") as fh:
        fh.write(result.to_trials_csv())
    click.echo(result.to_table_csv(), nl=False)


@main.command()
@click.argument("truth", type=click.Path(exists=True, dir_okay=False))
@click.argument("pred", type=click.Path(exists=True, dir_okay=False))
@_guard
def metrics(truth, pred):
    """Compare two label files: ACC, NMI and pairwise F1."""
    rep = evaluate(dm.read_labels(truth), dm.read_labels(pred))
    click.echo(f"ACC {rep.acc:.4f} NMI {rep.nmi:.4f} F1 {rep.f1:.4f}")


if __name__ == "__main__":
    main()
