"""Core data types and matrix/label file I/O.

In memory a feature matrix is ``D x N``: one column per sample. On disk the
CSV layout is sample-major (one row per sample), so readers and writers
transpose. The binary ``MLGM`` layout is::

    bytes 0..3    magic b"MLGM"
    bytes 4..7    uint32 LE row count D
    bytes 8..11   uint32 LE column count N
    bytes 12..    D*N float64 LE values, column-major
"""

from __future__ import annotations

import os
import re
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BadMagicError,
    EmptyInputError,
    FormatError,
    NonFiniteError,
    ParameterError,
    ParseError,
    SizeError,
    TruncatedError,
)

MAGIC = b"MLGM"
_HEADER = struct.Struct("<4sII")
_UINT = re.compile(r"[0-9]+")

EIGEN_ORDERS = ("largest", "smallest")
SOLVER_IDS = ("least_squares_reference", "external")


def _frozen(a, dtype=np.float64):
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Features of one layer, shape ``(D_v, N)`` with samples as columns."""

    values: np.ndarray
    layer_index: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise SizeError(f"feature matrix must be 2-D, got {v.ndim}-D")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise SizeError(f"feature matrix has empty shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteError(f"layer {self.layer_index}: non-finite feature values")
        if self.layer_index < 0:
            raise ParameterError("layer_index must be nonnegative")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]

    def select(self, columns) -> "FeatureMatrix":
        """Return a new matrix restricted to the given sample columns."""
        return FeatureMatrix(self.values[:, np.asarray(columns)], self.layer_index)


@dataclass(frozen=True, eq=False)
class LayerStack:
    """Ordered per-layer feature matrices sharing the sample count ``N``."""

    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise SizeError("layer stack must contain at least one layer")
        n = layers[0].n_samples
        for pos, layer in enumerate(layers):
            if pos > 0 and layer.layer_index <= layers[pos - 1].layer_index:
                raise ParameterError(
                    f"layer indices must be strictly increasing, got {layer.layer_index} "
                    f"after {layers[pos - 1].layer_index}"
                )
            if layer.n_samples != n:
                raise SizeError(
                    f"layer {layer.layer_index} has {layer.n_samples} samples, expected {n}"
                )
        if layers[0].layer_index != 0:
            raise ParameterError("layer indices must start at 0")
        if n < 2:
            raise SizeError(f"need at least 2 samples, got {n}")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_arrays(cls, arrays: Sequence) -> "LayerStack":
        """Build a stack from ``D_v x N`` arrays, numbering layers from 0."""
        return cls(tuple(FeatureMatrix(a, v) for v, a in enumerate(arrays)))

    @property
    def n_samples(self) -> int:
        return self.layers[0].n_samples

    @property
    def deepest(self) -> FeatureMatrix:
        return self.layers[-1]

    def __len__(self):
        return len(self.layers)

    def __iter__(self):
        return iter(self.layers)

    def __getitem__(self, i):
        return self.layers[i]

    def select(self, columns) -> "LayerStack":
        return LayerStack(tuple(layer.select(columns) for layer in self.layers))

    def subset_layers(self, indices: Sequence[int]) -> "LayerStack":
        """Keep only the given layers, renumbered from 0 in the given order."""
        picked = [self.layers[i] for i in indices]
        return LayerStack.from_arrays([m.values for m in picked])


@dataclass(frozen=True, eq=False)
class RepresentationMatrix:
    """Self-expressive coefficients ``C`` (N x N) with an exactly zero diagonal."""

    values: np.ndarray
    source_layer: int = 0

    def __post_init__(self):
        c = np.asarray(self.values, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise SizeError(f"representation matrix must be square, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise NonFiniteError(f"layer {self.source_layer}: non-finite coefficients")
        if np.any(np.diag(c) != 0):
            raise ParameterError("representation matrix must have a zero diagonal")
        object.__setattr__(self, "values", _frozen(c))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    """Hard assignment of N samples to k clusters."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise SizeError("labels must be a vector")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise ParameterError("labels must be integers")
        labels = labels.astype(np.int64)
        if self.k < 1:
            raise ParameterError("k must be positive")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ParameterError(f"labels must lie in [0, {self.k})")
        object.__setattr__(self, "labels", _frozen(labels, np.int64))

    @property
    def indicator(self) -> np.ndarray:
        """Binary ``N x k`` matrix with a single 1 per row."""
        f = np.zeros((self.labels.size, self.k), dtype=np.int64)
        f[np.arange(self.labels.size), self.labels] = 1
        return f

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)


@dataclass(frozen=True)
class SolverParams:
    """Hyperparameters of the per-layer self-expressive solver.

    ``extra`` carries opaque settings for solvers registered from outside.
    """

    solver_id: str = "least_squares_reference"
    lam: float = 1.0
    extra: tuple = ()

    def __post_init__(self):
        if self.solver_id == "least_squares_reference" and not self.lam > 0:
            raise ParameterError(f"lambda must be > 0 for the reference solver, got {self.lam}")


@dataclass(frozen=True)
class PipelineConfig:
    """Settings for one multilayer clustering run."""

    k: int
    d: int
    delta: float = 2.0
    gamma: float = 0.5
    eigen_order: str = "smallest"
    solver_params: tuple = field(default_factory=lambda: (SolverParams(),))
    kmeans_restarts: int = 30
    kmeans_max_iters: int = 300
    kmeans_tol: float = 1e-9
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ParameterError(f"k must be >= 2, got {self.k}")
        if self.d < 1:
            raise ParameterError(f"d must be >= 1, got {self.d}")
        if not self.delta > 0:
            raise ParameterError(f"delta must be > 0, got {self.delta}")
        if not self.gamma >= 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if self.eigen_order not in EIGEN_ORDERS:
            raise ParameterError(f"eigen_order must be one of {EIGEN_ORDERS}")
        if self.kmeans_restarts < 1 or self.kmeans_max_iters < 1:
            raise ParameterError("kmeans restarts and max_iters must be >= 1")
        if not self.solver_params:
            raise ParameterError("at least one solver parameter record is required")
        object.__setattr__(self, "solver_params", tuple(self.solver_params))

    def check_samples(self, n: int) -> None:
        if not 1 <= self.d < n:
            raise ParameterError(f"d must satisfy 1 <= d < N={n}, got {self.d}")
        if not 2 <= self.k <= n:
            raise ParameterError(f"k must satisfy 2 <= k <= N={n}, got {self.k}")

    def solver_for(self, layer: int) -> SolverParams:
        """Solver settings for a layer; the last record covers deeper layers."""
        return self.solver_params[min(layer, len(self.solver_params) - 1)]


# ---------------------------------------------------------------- file I/O


def read_matrix_csv(path, layer_index: int = 0) -> FeatureMatrix:
    """Read a sample-major CSV file into a ``D x N`` feature matrix."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        tokens = line.split(",")
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise FormatError(
                f"{path}:{lineno}: expected {width} values, found {len(tokens)}"
            )
        row = []
        for col, tok in enumerate(tokens, start=1):
            try:
                row.append(float(tok))
            except ValueError:
                raise ParseError(f"{path}:{lineno}:{col}: cannot parse {tok.strip()!r}") from None
        rows.append(row)
    if not rows:
        raise EmptyInputError(f"{path}: empty matrix file")
    return FeatureMatrix(np.array(rows, dtype=np.float64).T, layer_index)


def write_matrix_csv(m, path) -> None:
    """Write a feature matrix (or ``D x N`` array) as sample-major CSV."""
    values = m.values if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        for sample in values.T:
            fh.write(",".join(repr(float(x)) for x in sample))
            fh.write("\n")


def write_matrix_binary(m, path) -> None:
    values = m.values if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=np.float64)
    if values.ndim != 2:
        raise SizeError("binary matrix must be 2-D")
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("refusing to write non-finite values")
    rows, cols = values.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols))
        fh.write(np.asarray(values, dtype="<f8").tobytes(order="F"))


def read_matrix_binary(path, layer_index: int = 0) -> FeatureMatrix:
    return FeatureMatrix(read_array_binary(path), layer_index)


def read_array_binary(path) -> np.ndarray:
    """Read an ``MLGM`` file into a plain array (zero-size dimensions allowed)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        if blob[:4] != MAGIC[: len(blob)]:
            raise BadMagicError(f"{path}: bad magic {blob[:4]!r}")
        raise TruncatedError(f"{path}: header truncated ({len(blob)} bytes)")
    magic, rows, cols = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * rows * cols
    if len(blob) < expected:
        raise TruncatedError(f"{path}: expected {expected} bytes, found {len(blob)}")
    if len(blob) > expected:
        raise FormatError(f"{path}: {len(blob) - expected} trailing bytes")
    values = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=_HEADER.size)
    values = values.reshape((rows, cols), order="F").astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{path}: non-finite values")
    return values


def is_binary_matrix(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(4) == MAGIC


def read_matrix(path, layer_index: int = 0) -> FeatureMatrix:
    """Read either format, choosing by the leading magic bytes."""
    if os.path.getsize(path) == 0:
        raise EmptyInputError(f"{path}: empty matrix file")
    if is_binary_matrix(path):
        return read_matrix_binary(path, layer_index)
    return read_matrix_csv(path, layer_index)


def remap_labels(labels) -> np.ndarray:
    """Map arbitrary labels to 0..k-1 in order of first occurrence."""
    labels = np.asarray(labels)
    mapping = {}
    out = np.empty(labels.size, dtype=np.int64)
    for i, lab in enumerate(labels.tolist()):
        out[i] = mapping.setdefault(lab, len(mapping))
    return out


def read_labels(path) -> np.ndarray:
    """Read one nonnegative integer per line, remapped to contiguous labels."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    raw = []
    for lineno, line in enumerate(lines, start=1):
        tok = line.strip()
        if not tok:
            continue
        if not _UINT.fullmatch(tok):
            raise ParseError(f"{path}:{lineno}: expected a nonnegative integer, got {tok!r}")
        raw.append(int(tok))
    if not raw:
        raise EmptyInputError(f"{path}: empty labels file")
    return remap_labels(raw)


def write_labels(labels, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lab in np.asarray(labels).tolist():
            fh.write(f"{int(lab)}\n")
