"""Affinity graphs, normalized/shifted Laplacians and per-layer spectral bases."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .datamodel import EIGEN_ORDERS, _frozen
from .errors import NumericalError, ParameterError, SizeError

DEGREE_FLOOR = 1e-12
SV_CUTOFF = 1e-12
ROW_NORM_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class AffinityGraph:
    """Symmetric nonnegative weights ``W`` and the degree vector ``W @ 1``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise SizeError(f"affinity must be square, got {w.shape}")
        if not np.array_equal(w, w.T):
            raise ParameterError("affinity must be exactly symmetric")
        if np.any(w < 0):
            raise ParameterError("affinity must be nonnegative")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    @property
    def n_samples(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class ShiftedLaplacian:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """``N x k`` orthonormal eigenvectors and their eigenvalues."""

    vectors: np.ndarray
    eigenvalues: np.ndarray
    source_layer: int = 0
    order: str = "largest"
    spectrum: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "vectors", _frozen(self.vectors))
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))
        if self.spectrum is not None:
            object.__setattr__(self, "spectrum", _frozen(self.spectrum))

    @property
    def gap(self) -> float:
        """Distance between the k-th and (k+1)-th eigenvalue in selection order."""
        k = self.vectors.shape[1]
        if self.spectrum is None or k >= self.spectrum.size:
            return float("nan")
        w = self.spectrum[::-1] if self.order == "largest" else self.spectrum
        return float(abs(w[k - 1] - w[k]))

    @property
    def projector(self) -> np.ndarray:
        """Exactly symmetric ``U U^T``."""
        p = self.vectors @ self.vectors.T
        return (p + p.T) / 2.0


def affinity_classic(c) -> AffinityGraph:
    """Wrap an already symmetrized coefficient matrix as a graph."""
    return AffinityGraph(np.asarray(c, dtype=np.float64))


def affinity_angular(c, delta: float) -> AffinityGraph:
    """Angular affinity from the SVD ``C = U S V^T``.

    Rows of ``M = U S^{1/2}`` act as point descriptors and
    ``W_ij = |cos(m_i, m_j)|^delta`` with ``W_ii = 1``. Singular values
    below ``1e-12 * s_max`` are discarded; a row of ``M`` with norm below
    ``1e-12`` gets zero off-diagonal affinities.
    """
    if not delta > 0:
        raise ParameterError(f"delta must be > 0, got {delta}")
    c = np.asarray(c, dtype=np.float64)
    n = c.shape[0]
    try:
        u, s, _ = linalg.svd(c, full_matrices=False, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    if s.size == 0 or s[0] <= 0:
        return AffinityGraph(np.eye(n))
    keep = s > SV_CUTOFF * s[0]
    m = u[:, keep] * np.sqrt(s[keep])[None, :]
    norms = np.linalg.norm(m, axis=1)
    alive = norms >= ROW_NORM_FLOOR
    safe = np.where(alive, norms, 1.0)
    m = m / safe[:, None]
    cos = m @ m.T
    cos = (cos + cos.T) / 2.0
    w = np.minimum(np.abs(cos), 1.0) ** delta
    w[~alive, :] = 0.0
    w[:, ~alive] = 0.0
    np.fill_diagonal(w, 1.0)
    return AffinityGraph(w)


def _scaled_weights(g: AffinityGraph) -> np.ndarray:
    deg = np.maximum(g.degrees, DEGREE_FLOOR)
    inv_sqrt = 1.0 / np.sqrt(deg)
    return g.weights * np.outer(inv_sqrt, inv_sqrt)


def normalized_laplacian(g: AffinityGraph) -> np.ndarray:
    """``L = I - D^{-1/2} W D^{-1/2}`` with the same degree clamp as the shifted form."""
    return np.eye(g.n_samples) - _scaled_weights(g)


def shifted_laplacian(g: AffinityGraph) -> ShiftedLaplacian:
    """``L_s = I + D^{-1/2} W D^{-1/2}``; degrees are clamped at ``1e-12``."""
    return ShiftedLaplacian(np.eye(g.n_samples) + _scaled_weights(g))


def symmetric_eig(a: np.ndarray):
    """Eigenvalues (ascending) and eigenvectors of a symmetric matrix."""
    try:
        return linalg.eigh(a, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc


def select_eigenpairs(w: np.ndarray, v: np.ndarray, k: int, order: str):
    """Pick ``k`` extreme eigenpairs; equal eigenvalues keep ascending index order."""
    if order not in EIGEN_ORDERS:
        raise ParameterError(f"eigen order must be one of {EIGEN_ORDERS}, got {order!r}")
    idx = np.argsort(-w if order == "largest" else w, kind="stable")[:k]
    return w[idx], v[:, idx]


def spectral_basis(lap: ShiftedLaplacian, k: int, order: str = "largest", source_layer: int = 0) -> SpectralBasis:
    n = lap.n_samples
    if not 1 <= k <= n:
        raise ParameterError(f"k must satisfy 1 <= k <= N={n}, got {k}")
    w, v = symmetric_eig(lap.values)
    vals, vecs = select_eigenpairs(w, v, k, order)
    return SpectralBasis(vecs, vals, source_layer, order, w)
