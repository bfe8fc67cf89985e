"""Fusing per-layer Laplacians into one modified Laplacian and embedding it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datamodel import _frozen
from .errors import ParameterError, SizeError
from .graphs import ShiftedLaplacian, SpectralBasis, select_eigenpairs, symmetric_eig

ZERO_ROW = 1e-12


@dataclass(frozen=True, eq=False)
class ModifiedLaplacian:
    values: np.ndarray
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))


@dataclass(frozen=True, eq=False)
class JointEmbedding:
    """Top eigenvectors ``U`` of the fused operator and the row-normalized copy.

    ``zero_rows`` lists samples whose embedding row vanished; they are placed
    on the first coordinate axis.
    """

    vectors: np.ndarray
    normalized: np.ndarray
    eigenvalues: np.ndarray
    zero_rows: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "vectors", _frozen(self.vectors))
        object.__setattr__(self, "normalized", _frozen(self.normalized))
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))


def modified_laplacian(
    laps: Sequence[ShiftedLaplacian], bases: Sequence[SpectralBasis], gamma: float
) -> ModifiedLaplacian:
    """``sum_v L_s^v - gamma * sum_v U_s^v (U_s^v)^T``."""
    if not laps or len(laps) != len(bases):
        raise SizeError(f"need equally many Laplacians and bases, got {len(laps)} and {len(bases)}")
    if not gamma >= 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma}")
    n = laps[0].n_samples
    for lap, basis in zip(laps, bases):
        if lap.values.shape != (n, n) or basis.vectors.shape[0] != n:
            raise SizeError("all layers must share the sample count")
    total = np.zeros((n, n))
    proj = np.zeros((n, n))
    for lap, basis in zip(laps, bases):
        total += lap.values
        proj += basis.projector
    return ModifiedLaplacian(total - gamma * proj, float(gamma))


def normalize_rows(u: np.ndarray):
    """Scale rows to unit norm; vanishing rows become ``e_1``."""
    norms = np.linalg.norm(u, axis=1)
    zero = norms < ZERO_ROW
    out = u / np.where(zero, 1.0, norms)[:, None]
    out[zero] = 0.0
    out[zero, 0] = 1.0
    return out, tuple(int(i) for i in np.flatnonzero(zero))


def joint_embedding(lm: ModifiedLaplacian, k: int, order: str = "largest") -> JointEmbedding:
    n = lm.values.shape[0]
    if not 2 <= k <= n:
        raise ParameterError(f"k must satisfy 2 <= k <= N={n}, got {k}")
    w, v = symmetric_eig(lm.values)
    vals, vecs = select_eigenpairs(w, v, k, order)
    normed, zero = normalize_rows(vecs)
    return JointEmbedding(vecs, normed, vals, zero)
