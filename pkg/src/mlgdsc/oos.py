"""Out-of-sample labeling by point-to-subspace distance.

Each in-sample cluster is summarized by its mean and an orthonormal basis of
its centered members; a new point goes to the cluster whose affine subspace
is nearest.

Model directory layout (written by :func:`save_model`)::

    model.txt        key = value header: k, d, dim, source_layer, ranks
    cluster_<c>.mlgm MLGM matrix of shape dim x (1 + rank_c): column 0 is the
                     cluster mean, the remaining columns its basis
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .datamodel import ClusterAssignment, FeatureMatrix, _frozen, read_array_binary, write_matrix_binary
from .errors import FormatError, ModelError, NumericalError, ParameterError, SizeError

RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class OosModel:
    means: tuple
    bases: tuple
    d: int
    source_layer: int = 0

    def __post_init__(self):
        if len(self.means) != len(self.bases) or not self.means:
            raise ModelError("need one mean and one basis per cluster")
        object.__setattr__(self, "means", tuple(_frozen(m) for m in self.means))
        object.__setattr__(self, "bases", tuple(_frozen(b) for b in self.bases))
        dim = self.dim
        for c, (m, b) in enumerate(zip(self.means, self.bases)):
            if m.shape != (dim,) or b.ndim != 2 or b.shape[0] != dim:
                raise ModelError(f"cluster {c}: inconsistent mean/basis shapes")

    @property
    def k(self) -> int:
        return len(self.means)

    @property
    def dim(self) -> int:
        return self.means[0].shape[0]

    @property
    def ranks(self) -> tuple:
        """Basis size per cluster; smaller than ``d`` marks a rank-deficient cluster."""
        return tuple(b.shape[1] for b in self.bases)


def fit_oos(features: FeatureMatrix, assignment: ClusterAssignment, d: int) -> OosModel:
    x = features.values
    if assignment.labels.size != x.shape[1]:
        raise SizeError(
            f"{assignment.labels.size} labels for {x.shape[1]} samples"
        )
    if d < 1:
        raise ParameterError(f"d must be >= 1, got {d}")
    means, bases = [], []
    for c in range(assignment.k):
        members = x[:, assignment.labels == c]
        if members.shape[1] == 0:
            raise ModelError(f"cluster {c} has no members")
        mean = members.mean(axis=1)
        centered = members - mean[:, None]
        try:
            u, s, _ = linalg.svd(centered, full_matrices=False, check_finite=False)
        except linalg.LinAlgError as exc:
            raise NumericalError(f"cluster {c}: SVD failed: {exc}") from exc
        scale = max(s[0] if s.size else 0.0, float(np.abs(members).max()))
        rank = int(np.sum(s > RANK_TOL * scale))
        means.append(mean)
        bases.append(u[:, : min(d, rank)])
    return OosModel(tuple(means), tuple(bases), d, features.layer_index)


def distances(model: OosModel, x) -> np.ndarray:
    """Residual norms of the columns of ``x`` (dim x M) to every cluster, shape ``(M, k)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != model.dim:
        raise SizeError(f"points have dimension {x.shape[0]}, model expects {model.dim}")
    out = np.empty((x.shape[1], model.k))
    for c, (mean, basis) in enumerate(zip(model.means, model.bases)):
        centered = x - mean[:, None]
        resid = centered - basis @ (basis.T @ centered)
        out[:, c] = np.linalg.norm(resid, axis=0)
    return out


def assign_oos(model: OosModel, x):
    """Nearest-subspace cluster for one point; returns ``(cluster, distances)``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    dist = distances(model, x)[0]
    return int(np.argmin(dist)), dist


def assign_oos_batch(model: OosModel, x):
    """Labels and distance table for every column of ``x``."""
    dist = distances(model, x)
    return np.argmin(dist, axis=1), dist


def save_model(model: OosModel, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "model.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"k = {model.k}\n")
        fh.write(f"d = {model.d}\n")
        fh.write(f"dim = {model.dim}\n")
        fh.write(f"source_layer = {model.source_layer}\n")
        fh.write("ranks = " + ",".join(str(r) for r in model.ranks) + "\n")
    for c, (mean, basis) in enumerate(zip(model.means, model.bases)):
        block = np.column_stack([mean, basis]) if basis.size else mean[:, None]
        write_matrix_binary(block, os.path.join(directory, f"cluster_{c}.mlgm"))


def load_model(directory) -> OosModel:
    header = os.path.join(directory, "model.txt")
    if not os.path.exists(header):
        raise FormatError(f"{directory}: no model.txt")
    fields = {}
    with open(header, "r", encoding="utf-8") as fh:
        for line in fh:
            if "=" in line:
                key, value = line.split("=", 1)
                fields[key.strip()] = value.strip()
    try:
        k = int(fields["k"])
        d = int(fields["d"])
        dim = int(fields["dim"])
        source = int(fields.get("source_layer", 0))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{header}: bad header ({exc})") from None
    means, bases = [], []
    for c in range(k):
        block = read_array_binary(os.path.join(directory, f"cluster_{c}.mlgm"))
        if block.shape[0] != dim or block.shape[1] < 1:
            raise FormatError(f"cluster_{c}.mlgm has shape {block.shape}, expected {dim} rows")
        means.append(block[:, 0])
        bases.append(block[:, 1:])
    return OosModel(tuple(means), tuple(bases), d, source)
