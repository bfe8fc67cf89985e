"""Single-view self-expressive solvers, IPD truncation and symmetrization."""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import linalg

from .datamodel import FeatureMatrix, RepresentationMatrix, SolverParams
from .errors import NonFiniteError, NumericalError, ParameterError, SizeError

__all__ = [
    "SolverParams",
    "register_solver",
    "solve_self_expressive",
    "least_squares_reference",
    "truncate_ipd",
    "symmetrize",
]

_REGISTRY: dict[str, Callable] = {}


def register_solver(name: str, fn: Callable) -> None:
    """Register ``fn(X, params) -> C`` under ``name``.

    ``X`` is the ``D x N`` feature array. Select the solver with
    ``SolverParams(solver_id="external", extra=(("name", name), ...))``.
    The returned matrix must be ``N x N``; its diagonal is zeroed here.
    """
    _REGISTRY[name] = fn


def least_squares_reference(x: np.ndarray, lam: float) -> np.ndarray:
    """Closed-form minimizer of ``||X - XC||_F^2 + lam ||C||_F^2`` with ``diag(C) = 0``.

    With ``Z = (X^T X + lam I)^{-1}`` the solution is ``C_ij = -Z_ij / Z_jj``
    off the diagonal.
    """
    n = x.shape[1]
    gram = x.T @ x
    gram[np.diag_indices(n)] += lam
    try:
        z = linalg.inv(gram, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"reference solver: {exc}") from exc
    c = -z / np.diag(z)[None, :]
    np.fill_diagonal(c, 0.0)
    return c


def solve_self_expressive(x: FeatureMatrix, p: SolverParams) -> RepresentationMatrix:
    values = x.values
    if values.shape[1] < 2:
        raise SizeError(f"need at least 2 samples, got {values.shape[1]}")
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("non-finite feature values")
    if p.solver_id == "least_squares_reference":
        c = least_squares_reference(values, p.lam)
    elif p.solver_id == "external":
        name = dict(p.extra).get("name")
        if name not in _REGISTRY:
            raise ParameterError(f"no solver registered under {name!r}")
        c = np.array(_REGISTRY[name](values, p), dtype=np.float64)
        n = values.shape[1]
        if c.shape != (n, n):
            raise SizeError(f"solver {name!r} returned shape {c.shape}, expected {(n, n)}")
        np.fill_diagonal(c, 0.0)
    else:
        raise ParameterError(f"unknown solver id {p.solver_id!r}")
    if not np.all(np.isfinite(c)):
        raise NumericalError(f"layer {x.layer_index}: solver produced non-finite coefficients")
    return RepresentationMatrix(c, x.layer_index)


def truncate_ipd(c: RepresentationMatrix, d: int) -> RepresentationMatrix:
    """Keep the ``d`` largest-magnitude entries of every column, zero the rest.

    Equal magnitudes at the cut are resolved in favour of the lower row index.
    """
    values = c.values
    n = values.shape[0]
    if not 1 <= d <= n - 1:
        raise ParameterError(f"d must satisfy 1 <= d <= N-1={n - 1}, got {d}")
    order = np.argsort(-np.abs(values), axis=0, kind="stable")
    keep = order[:d]
    out = np.zeros_like(values)
    cols = np.broadcast_to(np.arange(n), keep.shape)
    out[keep, cols] = values[keep, cols]
    return RepresentationMatrix(out, c.source_layer)


def symmetrize(c) -> np.ndarray:
    """Return ``(|C| + |C|^T) / 2``."""
    values = c.values if isinstance(c, RepresentationMatrix) else np.asarray(c, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("non-finite coefficients")
    a = np.abs(values)
    return (a + a.T) / 2.0
