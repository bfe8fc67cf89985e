"""Synthetic multilayer union-of-subspaces data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import LayerStack
from .errors import ParameterError

MIN_PRINCIPAL_ANGLE = 0.1
MAX_REDRAWS = 1000


@dataclass(frozen=True)
class SynthSpec:
    k: int = 3
    d: int = 3
    ambient_dim: int = 30
    points_per_cluster: int = 50
    noise_sigma: float = 0.0
    num_layers: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.d >= self.ambient_dim:
            raise ParameterError(f"d={self.d} must be smaller than ambient_dim={self.ambient_dim}")
        for name in ("k", "d", "ambient_dim", "points_per_cluster", "num_layers"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1")
        if not self.noise_sigma >= 0:
            raise ParameterError("noise_sigma must be >= 0")


def random_orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Haar-distributed ``rows x cols`` matrix with orthonormal columns."""
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs[None, :]


def smallest_principal_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Smallest principal angle (radians) between two orthonormal bases."""
    s = np.linalg.svd(a.T @ b, compute_uv=False)
    return float(np.arccos(min(1.0, s.max())))


def draw_bases(spec: SynthSpec, rng: np.random.Generator) -> list:
    """Per-cluster bases, redrawn until every pair is at least 0.1 rad apart."""
    for _ in range(MAX_REDRAWS):
        bases = [random_orthonormal(rng, spec.ambient_dim, spec.d) for _ in range(spec.k)]
        ok = all(
            smallest_principal_angle(bases[i], bases[j]) >= MIN_PRINCIPAL_ANGLE
            for i in range(spec.k)
            for j in range(i + 1, spec.k)
        )
        if ok:
            return bases
    raise ParameterError("could not draw separated subspaces; lower k*d or raise ambient_dim")


def _unit_columns(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=0)
    return x / np.where(norms > 0, norms, 1.0)[None, :]


def generate(spec: SynthSpec):
    """Return ``(LayerStack, labels)``.

    Layer 0 holds noisy unit-norm samples from ``k`` random ``d``-dimensional
    subspaces. Deeper layers rotate the clean layer-0 points by independent
    random orthogonal maps and add fresh noise, so each layer is a
    differently corrupted view of the same clusters. Samples are ordered by
    cluster.
    """
    rng = np.random.default_rng(spec.seed)
    bases = draw_bases(spec, rng)
    n_per = spec.points_per_cluster
    clean = np.hstack([b @ rng.standard_normal((spec.d, n_per)) for b in bases])
    labels = np.repeat(np.arange(spec.k), n_per)
    dim = spec.ambient_dim
    layers = []
    for v in range(spec.num_layers):
        view = clean if v == 0 else random_orthonormal(rng, dim, dim) @ clean
        noise = spec.noise_sigma * rng.standard_normal(view.shape)
        layers.append(_unit_columns(view + noise))
    return LayerStack.from_arrays(layers), labels
