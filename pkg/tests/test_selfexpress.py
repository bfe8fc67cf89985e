import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mlgdsc.datamodel import FeatureMatrix, RepresentationMatrix, SolverParams
from mlgdsc.errors import NonFiniteError, ParameterError, SizeError
from mlgdsc.selfexpress import (
    least_squares_reference,
    register_solver,
    solve_self_expressive,
    symmetrize,
    truncate_ipd,
)


def _kkt_oracle(x, lam):
    """Solve each column's constrained ridge problem directly."""
    n = x.shape[1]
    c = np.zeros((n, n))
    for j in range(n):
        others = [i for i in range(n) if i != j]
        a = x[:, others]
        c[others, j] = np.linalg.solve(a.T @ a + lam * np.eye(n - 1), a.T @ x[:, j])
    return c


def test_orthogonal_samples_give_zero():
    c = least_squares_reference(np.eye(2), 1.0)
    np.testing.assert_allclose(c, np.zeros((2, 2)), atol=1e-15)


def test_identical_samples():
    c = least_squares_reference(np.array([[1.0, 1.0], [0.0, 0.0]]), 1.0)
    np.testing.assert_allclose(c, [[0, 0.5], [0.5, 0]], atol=1e-15)


@pytest.mark.parametrize("lam", [0.01, 1.0, 10.0])
def test_closed_form_matches_per_column_ridge(rng, lam):
    x = rng.standard_normal((6, 9))
    np.testing.assert_allclose(least_squares_reference(x, lam), _kkt_oracle(x, lam), atol=1e-10)


def test_solve_returns_zero_diagonal(rng):
    r = solve_self_expressive(FeatureMatrix(rng.standard_normal((4, 7)), 2), SolverParams())
    assert r.source_layer == 2
    assert np.all(np.diag(r.values) == 0)


def test_solve_rejects_single_sample():
    with pytest.raises(SizeError):
        solve_self_expressive(FeatureMatrix(np.ones((3, 1))), SolverParams())


def test_external_solver_registry(rng):
    register_solver("ones_test", lambda x, p: np.ones((x.shape[1], x.shape[1])) * float(dict(p.extra)["scale"]))
    p = SolverParams("external", 1.0, (("name", "ones_test"), ("scale", "2")))
    r = solve_self_expressive(FeatureMatrix(rng.standard_normal((3, 4))), p)
    expected = 2.0 * (np.ones((4, 4)) - np.eye(4))
    np.testing.assert_array_equal(r.values, expected)


def test_external_solver_unknown():
    p = SolverParams("external", 1.0, (("name", "nope"),))
    with pytest.raises(ParameterError):
        solve_self_expressive(FeatureMatrix(np.eye(3)), p)


def test_external_solver_bad_shape():
    register_solver("bad_shape", lambda x, p: np.zeros((2, 2)))
    p = SolverParams("external", 1.0, (("name", "bad_shape"),))
    with pytest.raises(SizeError):
        solve_self_expressive(FeatureMatrix(np.eye(3)), p)


def test_truncate_column_example():
    c = np.zeros((4, 4))
    c[1:, 0] = [0.5, -0.9, 0.1]
    out = truncate_ipd(RepresentationMatrix(c), 2).values
    np.testing.assert_array_equal(out[:, 0], [0, 0.5, -0.9, 0])


def test_truncate_full_is_identity(rng):
    c = rng.standard_normal((5, 5))
    np.fill_diagonal(c, 0.0)
    out = truncate_ipd(RepresentationMatrix(c), 4).values
    np.testing.assert_array_equal(out, c)


def test_truncate_tie_prefers_lower_row():
    c = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    out = truncate_ipd(RepresentationMatrix(c), 1).values
    np.testing.assert_array_equal(out, [[0, 1, 1], [1, 0, 0], [0, 0, 0]])


@pytest.mark.parametrize("d", [0, 3])
def test_truncate_range(d):
    with pytest.raises(ParameterError):
        truncate_ipd(RepresentationMatrix(np.zeros((3, 3))), d)


def _zero_diag(a):
    a = a.copy()
    np.fill_diagonal(a, 0.0)
    return a


@settings(max_examples=60, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(2, 7)).map(lambda t: (t[0], t[0])),
           elements=st.sampled_from([-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])),
    st.data(),
)
def test_truncate_keeps_exactly_d_per_column(a, data):
    c = _zero_diag(a)
    n = c.shape[0]
    d = data.draw(st.integers(1, n - 1))
    out = truncate_ipd(RepresentationMatrix(c), d).values
    kept = out != 0
    assert np.all(kept.sum(axis=0) <= d)
    # every kept entry dominates every dropped entry in magnitude
    for j in range(n):
        k_mag = np.abs(c[kept[:, j], j])
        d_mag = np.abs(c[~kept[:, j], j])
        if k_mag.size and d_mag.size:
            assert k_mag.min() >= d_mag.max()


def test_symmetrize_example():
    np.testing.assert_array_equal(symmetrize(np.array([[0.0, 2.0], [-4.0, 0.0]])), [[0, 3], [3, 0]])


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(-1e6, 1e6)))
def test_symmetrize_properties(a):
    s = symmetrize(a)
    np.testing.assert_array_equal(s, s.T)
    assert np.all(s >= 0)
    np.testing.assert_array_equal(symmetrize(s), s)


def test_symmetrize_rejects_nan():
    with pytest.raises(NonFiniteError):
        symmetrize(np.array([[0.0, np.nan], [0.0, 0.0]]))
