"""End-to-end multilayer clustering and the repeated-subset benchmark."""

from __future__ import annotations

import hashlib
import itertools
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .clustering import kmeans
from .datamodel import ClusterAssignment, LayerStack, PipelineConfig
from .errors import ConfigError, MLGError
from .fusion import joint_embedding, modified_laplacian, normalize_rows
from .graphs import affinity_angular, shifted_laplacian, spectral_basis
from .metrics import MetricReport, evaluate, wilcoxon_ranksum
from .oos import assign_oos_batch, fit_oos
from .selfexpress import solve_self_expressive, symmetrize, truncate_ipd

STAGES = (
    "solve",
    "truncate",
    "symmetrize",
    "affinity",
    "laplacian",
    "basis",
    "fuse",
    "embed",
    "kmeans",
)

# a priori subspace dimensions and affinity exponents per dataset family
PRESETS = {
    "orl": {"d": 9, "delta": 4.0},
    "eyaleb": {"d": 9, "delta": 2.0},
    "coil20": {"d": 9, "delta": 2.0},
    "mnist": {"d": 12, "delta": 6.0},
}


def resolve_threads(threads: int | None = None) -> int:
    """Worker count from the argument or ``MLG_THREADS`` (0 means one per CPU)."""
    if threads is None:
        raw = os.environ.get("MLG_THREADS", "0").strip() or "0"
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigError(f"MLG_THREADS must be an integer, got {raw!r}") from None
    if threads < 0:
        raise ConfigError("thread count must be >= 0")
    return threads or (os.cpu_count() or 1)


def checksum(a) -> str:
    a = np.ascontiguousarray(a)
    h = hashlib.sha256()
    h.update(str(a.dtype).encode())
    h.update(str(a.shape).encode())
    h.update(a.tobytes())
    return h.hexdigest()[:16]


@dataclass
class LayerDiagnostics:
    layer: int
    nonzeros: int
    basis_eigenvalues: np.ndarray
    spectral_gap: float
    checksums: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)


@dataclass
class RunSummary:
    layers: list
    fused_eigenvalues: np.ndarray
    assignment: ClusterAssignment
    inertia: float
    zero_rows: tuple
    checksums: dict
    timings: dict
    metrics: MetricReport | None = None

    @property
    def labels(self) -> np.ndarray:
        return self.assignment.labels

    def to_text(self, include_timings: bool = False) -> str:
        """Key-value rendering; stages appear in execution order."""
        fmt = "{:.12g}".format
        lines = [
            f"samples = {self.assignment.labels.size}",
            f"clusters = {self.assignment.k}",
            f"layers = {len(self.layers)}",
        ]
        for diag in self.layers:
            p = f"layer.{diag.layer}"
            lines.append(f"{p}.nonzeros = {diag.nonzeros}")
            lines.append(f"{p}.spectral_gap = {fmt(diag.spectral_gap)}")
            lines.append(f"{p}.eigenvalues = " + ",".join(fmt(x) for x in diag.basis_eigenvalues))
            for stage in STAGES[:6]:
                lines.append(f"{p}.checksum.{stage} = {diag.checksums[stage]}")
        lines.append("fused.eigenvalues = " + ",".join(fmt(x) for x in self.fused_eigenvalues))
        lines.append("fused.zero_rows = " + ",".join(str(i) for i in self.zero_rows))
        for stage in STAGES[6:]:
            lines.append(f"checksum.{stage} = {self.checksums[stage]}")
        lines.append(f"kmeans.inertia = {fmt(self.inertia)}")
        lines.append("cluster_sizes = " + ",".join(str(int(s)) for s in self.assignment.sizes))
        if self.metrics is not None:
            lines.append(f"metric.acc = {self.metrics.acc:.4f}")
            lines.append(f"metric.nmi = {self.metrics.nmi:.4f}")
            lines.append(f"metric.f1 = {self.metrics.f1:.4f}")
        if include_timings:
            for diag in self.layers:
                for stage, sec in diag.timings.items():
                    lines.append(f"time.layer.{diag.layer}.{stage} = {sec:.6f}")
            for stage, sec in self.timings.items():
                lines.append(f"time.{stage} = {sec:.6f}")
        return "\n".join(lines) + "\n"


def _layer_stage(feature, cfg: PipelineConfig):
    """Per-layer part of the pipeline: solver through spectral basis."""
    v = feature.layer_index
    times, sums = {}, {}

    def timed(name, fn, *args):
        t0 = time.perf_counter()
        out = fn(*args)
        times[name] = time.perf_counter() - t0
        return out

    try:
        c = timed("solve", solve_self_expressive, feature, cfg.solver_for(v))
        sums["solve"] = checksum(c.values)
        c = timed("truncate", truncate_ipd, c, cfg.d)
        sums["truncate"] = checksum(c.values)
        sym = timed("symmetrize", symmetrize, c)
        sums["symmetrize"] = checksum(sym)
        graph = timed("affinity", affinity_angular, sym, cfg.delta)
        sums["affinity"] = checksum(graph.weights)
        lap = timed("laplacian", shifted_laplacian, graph)
        sums["laplacian"] = checksum(lap.values)
        basis = timed("basis", spectral_basis, lap, cfg.k, cfg.eigen_order, v)
        sums["basis"] = checksum(basis.vectors)
    except MLGError as exc:
        raise type(exc)(f"layer {v}: {exc}") from exc
    diag = LayerDiagnostics(
        layer=v,
        nonzeros=int(np.count_nonzero(c.values)),
        basis_eigenvalues=basis.eigenvalues,
        spectral_gap=basis.gap,
        checksums=sums,
        timings=times,
    )
    return lap, basis, diag


def run_pipeline(stack: LayerStack, cfg: PipelineConfig, truth=None, threads: int | None = 1) -> RunSummary:
    """Cluster the samples of ``stack`` by fusing the graphs of all its layers."""
    cfg.check_samples(stack.n_samples)
    workers = resolve_threads(threads)
    if workers > 1 and len(stack) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(stack))) as pool:
            per_layer = list(pool.map(lambda f: _layer_stage(f, cfg), stack.layers))
    else:
        per_layer = [_layer_stage(f, cfg) for f in stack.layers]
    laps = [p[0] for p in per_layer]
    bases = [p[1] for p in per_layer]
    diags = [p[2] for p in per_layer]

    timings, sums = {}, {}
    t0 = time.perf_counter()
    lmod = modified_laplacian(laps, bases, cfg.gamma)
    timings["fuse"] = time.perf_counter() - t0
    sums["fuse"] = checksum(lmod.values)

    t0 = time.perf_counter()
    emb = joint_embedding(lmod, cfg.k)
    timings["embed"] = time.perf_counter() - t0
    sums["embed"] = checksum(emb.normalized)

    t0 = time.perf_counter()
    km = kmeans(
        emb.normalized,
        cfg.k,
        restarts=cfg.kmeans_restarts,
        max_iters=cfg.kmeans_max_iters,
        tol=cfg.kmeans_tol,
        seed=cfg.rng_seed,
    )
    timings["kmeans"] = time.perf_counter() - t0
    sums["kmeans"] = checksum(km.labels)

    report = None if truth is None else evaluate(truth, km.labels)
    return RunSummary(
        layers=diags,
        fused_eigenvalues=emb.eigenvalues,
        assignment=km.assignment,
        inertia=km.inertia,
        zero_rows=emb.zero_rows,
        checksums=sums,
        timings=timings,
        metrics=report,
    )


def spectral_clustering_layer(feature, cfg: PipelineConfig) -> np.ndarray:
    """Plain single-view spectral clustering on one layer's shifted Laplacian."""
    c = truncate_ipd(solve_self_expressive(feature, cfg.solver_for(feature.layer_index)), cfg.d)
    graph = affinity_angular(symmetrize(c), cfg.delta)
    basis = spectral_basis(shifted_laplacian(graph), cfg.k, "largest")
    embedding, _ = normalize_rows(np.array(basis.vectors))
    return kmeans(
        embedding,
        cfg.k,
        restarts=cfg.kmeans_restarts,
        max_iters=cfg.kmeans_max_iters,
        tol=cfg.kmeans_tol,
        seed=cfg.rng_seed,
    ).labels


# ---------------------------------------------------------------- benchmark

METRICS = ("ACC", "NMI", "F1")
_METRIC_ORDER = {f"{m}_{s}": i for i, (m, s) in enumerate(itertools.product(METRICS, ("in", "out")))}


def _sort_metrics(names) -> list:
    return sorted(names, key=lambda n: (_METRIC_ORDER.get(n, len(_METRIC_ORDER)), n))


@dataclass(frozen=True)
class Variant:
    """A method row of the benchmark: which layers to fuse and with what gamma.

    ``layers=None`` uses every layer; ``gamma=None`` keeps the config value.
    """

    name: str
    layers: tuple | None = None
    gamma: float | None = None

    def configure(self, stack: LayerStack, cfg: PipelineConfig):
        sub = stack if self.layers is None else stack.subset_layers(self.layers)
        if self.layers is not None:
            # keep each layer's own solver settings after renumbering
            solvers = tuple(cfg.solver_for(v) for v in self.layers)
            cfg = replace(cfg, solver_params=solvers)
        if self.gamma is not None:
            cfg = replace(cfg, gamma=self.gamma)
        return sub, cfg


def parse_variant(text: str) -> Variant:
    """Parse ``NAME=LAYERS[:GAMMA]`` with LAYERS ``all`` or comma-separated indices."""
    if "=" not in text:
        raise ConfigError(f"variant {text!r} must look like NAME=LAYERS[:GAMMA]")
    name, rest = text.split("=", 1)
    name = name.strip()
    layers_txt, _, gamma_txt = rest.partition(":")
    try:
        layers = None if layers_txt.strip() == "all" else tuple(int(t) for t in layers_txt.split(","))
        gamma = float(gamma_txt) if gamma_txt.strip() else None
    except ValueError:
        raise ConfigError(f"cannot parse variant {text!r}") from None
    if not name:
        raise ConfigError(f"variant {text!r} has no name")
    return Variant(name, layers, gamma)


def default_variants(n_layers: int) -> list:
    """All-layer fusion plus every single layer on its own (gamma 0)."""
    out = [Variant("MLG")]
    out += [Variant(f"layer{v}", (v,), 0.0) for v in range(n_layers)]
    return out


def balanced_split(labels, in_size: int, oos_size: int, rng: np.random.Generator):
    """Class-balanced disjoint in-sample / out-of-sample index sets.

    Each size is spread evenly over the classes, the first ``size % k``
    classes taking one extra sample.
    """
    labels = np.asarray(labels)
    classes = np.unique(labels)
    k = classes.size

    def quota(total):
        q = np.full(k, total // k)
        q[: total % k] += 1
        return q

    q_in, q_out = quota(in_size), quota(oos_size)
    in_idx, out_idx = [], []
    for c, a, b in zip(classes, q_in, q_out):
        members = np.flatnonzero(labels == c)
        if a + b > members.size:
            raise ConfigError(
                f"class {c} has {members.size} samples, cannot draw {a} in-sample + {b} out-of-sample"
            )
        perm = rng.permutation(members)
        in_idx.append(perm[:a])
        out_idx.append(perm[a : a + b])
    return np.sort(np.concatenate(in_idx)), np.sort(np.concatenate(out_idx))


@dataclass
class BenchmarkResult:
    """Long-form trial records ``(trial, method, metric, value)`` plus derived tables."""

    records: list
    methods: list
    metrics: list

    def values(self, method: str, metric: str) -> np.ndarray:
        rows = sorted((t, v) for t, m, name, v in self.records if m == method and name == metric)
        return np.array([v for _, v in rows])

    def mean(self, method: str, metric: str) -> float:
        return float(self.values(method, metric).mean())

    def pvalues(self) -> list:
        """``(method_a, method_b, {metric: p})`` for every pair of methods."""
        out = []
        for a, b in itertools.combinations(self.methods, 2):
            ps = {m: wilcoxon_ranksum(self.values(a, m), self.values(b, m))[1] for m in self.metrics}
            out.append((a, b, ps))
        return out

    def table_rows(self) -> list:
        header = ["row"] + [f"{m} [%]" for m in self.metrics]
        rows = [header]
        for method in self.methods:
            row = [method]
            for m in self.metrics:
                vals = 100.0 * self.values(method, m)
                std = vals.std(ddof=1) if vals.size > 1 else 0.0
                row.append(f"{vals.mean():.2f}±{std:.2f}")
            rows.append(row)
        for a, b, ps in self.pvalues():
            rows.append([f"p {a} vs. {b}"] + [f"{ps[m]:.3g}" for m in self.metrics])
        return rows

    def to_table_csv(self) -> str:
        return "".join(",".join(r) + "\n" for r in self.table_rows())

    def to_trials_csv(self) -> str:
        lines = ["trial,method,metric,value"]
        lines += [f"{t},{m},{name},{v!r}" for t, m, name, v in self.records]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_trials_csv(cls, text: str) -> "BenchmarkResult":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != "trial,method,metric,value":
            raise ConfigError("not a benchmark trials file")
        records, methods, metrics = [], [], []
        for ln in lines[1:]:
            t, m, name, v = ln.split(",")
            records.append((int(t), m, name, float(v)))
            if m not in methods:
                methods.append(m)
            if name not in metrics:
                metrics.append(name)
        return cls(records, methods, _sort_metrics(metrics))


def _trial(t, stack, truth, cfg, variants, subset_size, oos_size):
    seq = np.random.SeedSequence([cfg.rng_seed, t])
    rng = np.random.default_rng(seq)
    trial_seed = int(seq.generate_state(1)[0])
    in_idx, out_idx = balanced_split(truth, subset_size, oos_size, rng)
    in_stack = stack.select(in_idx)
    records = []
    for variant in variants:
        sub, vcfg = variant.configure(in_stack, replace(cfg, rng_seed=trial_seed))
        summary = run_pipeline(sub, vcfg, threads=1)
        rep = evaluate(truth[in_idx], summary.labels)
        records += [(t, variant.name, f"{m}_in", v) for m, v in zip(METRICS, (rep.acc, rep.nmi, rep.f1))]
        if out_idx.size:
            deepest = stack[max(variant.layers) if variant.layers else len(stack) - 1]
            model = fit_oos(deepest.select(in_idx), summary.assignment, cfg.d)
            pred, _ = assign_oos_batch(model, deepest.values[:, out_idx])
            rep = evaluate(truth[out_idx], pred)
            records += [(t, variant.name, f"{m}_out", v) for m, v in zip(METRICS, (rep.acc, rep.nmi, rep.f1))]
    return records


def run_benchmark(
    stack: LayerStack,
    truth,
    cfg: PipelineConfig,
    trials: int,
    subset_size: int,
    oos_size: int = 0,
    variants: Sequence[Variant] | None = None,
    threads: int | None = None,
) -> BenchmarkResult:
    """Repeat clustering on random class-balanced subsets and compare variants.

    Trial ``t`` draws its subsets and k-means seed from ``(cfg.rng_seed, t)``,
    so results do not depend on how many trials run concurrently.
    """
    truth = np.asarray(truth)
    if truth.size != stack.n_samples:
        raise ConfigError(f"{truth.size} truth labels for {stack.n_samples} samples")
    if trials < 2:
        raise ConfigError("need at least 2 trials")
    if oos_size < 0 or subset_size < 2:
        raise ConfigError("subset sizes must be positive")
    if oos_size == 1:
        raise ConfigError("out-of-sample subsets need at least 2 points for pairwise F1")
    variants = list(variants) if variants else default_variants(len(stack))
    names = [v.name for v in variants]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate variant names in {names}")
    for v in variants:
        for layer in v.layers or ():
            if not 0 <= layer < len(stack):
                raise ConfigError(f"variant {v.name}: no layer {layer}")
    cfg.check_samples(subset_size)
    # fail fast on infeasible sizes before spawning work
    balanced_split(truth, subset_size, oos_size, np.random.default_rng(0))

    workers = resolve_threads(threads)
    job = lambda t: _trial(t, stack, truth, cfg, variants, subset_size, oos_size)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(job, range(trials)))
    else:
        chunks = [job(t) for t in range(trials)]
    records = [r for chunk in chunks for r in chunk]
    metrics = [f"{m}_in" for m in METRICS]
    if oos_size:
        metrics += [f"{m}_out" for m in METRICS]
    return BenchmarkResult(records, names, _sort_metrics(metrics))
