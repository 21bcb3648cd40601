import numpy as np
import pytest

from samplets import (
    InterpolationProblem,
    Matern,
    PointCloud,
    PursuitProblem,
    SolverError,
    build_basis,
    dense_kernel_matrix,
    forward_transform,
    inverse_transform,
    pursuit_objective,
    soft_shrink,
    solve_interpolation,
    solve_pursuit,
    transform_matrix_congruence,
)
from samplets.solvers import _StackedOperator
from samplets.transform import CoefficientVector


@pytest.fixture(scope="module")
def dense64():
    rng = np.random.default_rng(50)
    cloud = PointCloud(rng.random((64, 2)))
    basis = build_basis(cloud, 2)
    K = transform_matrix_congruence(basis, dense_kernel_matrix(Matern(0.5, 0.05), cloud))
    h = K @ rng.standard_normal(64)
    return cloud, basis, K, h


def test_soft_shrink_examples():
    np.testing.assert_array_equal(
        soft_shrink([3.0, -0.5], [1.0, 1.0]), [2.0, 0.0]
    )
    v = np.array([0.3, -2.0, 0.0])
    np.testing.assert_array_equal(soft_shrink(v, 0.0), v)
    np.testing.assert_array_equal(soft_shrink([0.5, -0.7], [0.5, 0.8]), [0.0, 0.0])
    with pytest.raises(ValueError):
        soft_shrink([1.0], [-0.1])


def test_interpolation_zero_rhs(dense64):
    _, _, K, _ = dense64
    beta, report = solve_interpolation(InterpolationProblem(K, np.zeros(64)))
    assert np.all(beta == 0)
    assert report.iterations == 0


def test_interpolation_sites_reproduced_mu_zero():
    rng = np.random.default_rng(51)
    cloud = PointCloud(rng.random((64, 2)))
    basis = build_basis(cloud, 2)
    K = dense_kernel_matrix(Matern(np.inf, 0.1), cloud)  # well-conditioned Gaussian
    Ks = transform_matrix_congruence(basis, K)
    h = K @ rng.standard_normal(64)
    hs = forward_transform(basis, h)
    beta, _ = solve_interpolation(InterpolationProblem(Ks, hs, tol=1e-12, max_iter=2000))
    alpha = inverse_transform(basis, beta)
    assert np.abs(K @ alpha - h).max() < 1e-8


def test_cg_matches_direct_factorization(dense64):
    _, _, K, h = dense64
    beta, _ = solve_interpolation(InterpolationProblem(K, h, tol=1e-13, max_iter=4000))
    direct = np.linalg.solve(K, h)
    assert np.linalg.norm(np.asarray(beta) - direct) < 1e-8 * np.linalg.norm(direct)


def test_interpolation_nonconvergence_carries_residual(dense64):
    _, _, K, h = dense64
    with pytest.raises(SolverError) as err:
        solve_interpolation(InterpolationProblem(K, h, tol=1e-14, max_iter=2))
    assert err.value.residual > 0
    assert len(err.value.trace) > 0


def test_interpolation_coefficient_vector_round_trip(dense64):
    cloud, basis, K, h = dense64
    rhs = CoefficientVector(h, basis)
    beta, _ = solve_interpolation(InterpolationProblem(K, rhs, ridge=1e-10))
    assert isinstance(beta, CoefficientVector)
    assert beta.basis is basis


def test_pursuit_zero_weight_matches_cg(dense64):
    _, _, K, h = dense64
    res = solve_pursuit(PursuitProblem([K], h, weights=0.0, tol=1e-10, max_iter=100))
    beta_cg, _ = solve_interpolation(InterpolationProblem(K, h, tol=1e-14, max_iter=4000))
    assert np.linalg.norm(res.stacked - np.asarray(beta_cg)) < 1e-8


def test_pursuit_large_weight_returns_zero(dense64):
    _, _, K, h = dense64
    w = np.abs(K.T @ h).max()
    res = solve_pursuit(PursuitProblem([K], h, weights=w))
    assert np.all(res.stacked == 0)
    assert res.residual == 0.0


def test_pursuit_matches_long_ista_oracle(dense64):
    _, _, K, h = dense64
    w = 1e-3
    res = solve_pursuit(PursuitProblem([K], h, weights=w, tol=1e-10, max_iter=200))
    gamma = 0.9 / np.linalg.norm(K.T @ K, 2)
    beta = np.zeros(64)
    for _ in range(50000):
        beta = soft_shrink(beta + gamma * (K.T @ (h - K @ beta)), gamma * w)
    assert np.linalg.norm(res.stacked - beta) < 1e-6
    prob = PursuitProblem([K], h, weights=w)
    assert pursuit_objective(prob, res.stacked) <= pursuit_objective(prob, beta) + 1e-10


def test_pursuit_subgradient_optimality(dense64):
    _, _, K, h = dense64
    w = 1e-3
    res = solve_pursuit(PursuitProblem([K], h, weights=w, tol=1e-10, max_iter=200))
    grad = K.T @ (h - K @ res.stacked)
    assert np.abs(grad).max() <= w + 1e-8
    on = res.stacked != 0
    np.testing.assert_allclose(grad[on], w * np.sign(res.stacked[on]), atol=1e-8)


def test_pursuit_fixed_point_gamma_independent(dense64):
    _, _, K, h = dense64
    w = 1e-3
    res = solve_pursuit(PursuitProblem([K], h, weights=w, tol=1e-10, max_iter=200))
    lam = np.linalg.norm(K.T @ K, 2)
    for frac in (0.05, 0.3, 0.9):
        g = frac / lam
        fp = res.stacked - soft_shrink(
            res.stacked + g * (K.T @ (h - K @ res.stacked)), g * w
        )
        assert np.linalg.norm(fp) <= 1e-8 * (1 + np.linalg.norm(h))


def test_pursuit_objective_examples(dense64):
    _, _, K, h = dense64
    prob = PursuitProblem([K], h, weights=1e-3)
    assert pursuit_objective(prob, np.zeros(64)) == pytest.approx(0.5 * h @ h)
    exact = np.linalg.solve(K, h)
    prob0 = PursuitProblem([K], h, weights=0.0)
    assert pursuit_objective(prob0, exact) < 1e-16 * (h @ h)


def test_pursuit_objective_nonincreasing_along_solve(dense64):
    _, _, K, h = dense64
    res = solve_pursuit(PursuitProblem([K], h, weights=1e-3, tol=1e-10, max_iter=200))
    tr = res.objective_trace
    assert all(b <= a + 1e-12 for a, b in zip(tr, tr[1:]))


def test_pursuit_sparsity_monotone_in_weight(dense64):
    _, _, K, h = dense64
    nnz = []
    for w in (1e-4, 1e-3, 1e-2, 1e-1, 0.5):
        res = solve_pursuit(PursuitProblem([K], h, weights=w, max_iter=300))
        nnz.append(int(np.count_nonzero(res.stacked)))
    assert all(b <= a + 1 for a, b in zip(nnz, nnz[1:]))


def test_pursuit_multi_kernel_stack(dense64):
    cloud, basis, K, h = dense64
    K2 = transform_matrix_congruence(basis, dense_kernel_matrix(Matern(0.5, 0.2), cloud))
    w = 0.05
    res = solve_pursuit(PursuitProblem([K, K2], h, weights=w, max_iter=400))
    assert len(res.coefficients) == 2
    op = _StackedOperator([K, K2], 64)
    lam = np.linalg.norm(np.hstack([K, K2]).T @ np.hstack([K, K2]), 2)
    for frac in (0.1, 0.9):
        g = frac / lam
        fp = res.stacked - soft_shrink(
            res.stacked + g * op.apply_adjoint(h - op.apply(res.stacked)), g * w
        )
        assert np.linalg.norm(fp) <= 1e-7 * (1 + np.linalg.norm(h))
    recon = op.apply(res.stacked)
    assert np.linalg.norm(recon - h) < np.linalg.norm(h)


def test_pursuit_nonconvergence_error():
    rng = np.random.default_rng(52)
    cloud = PointCloud(rng.random((48, 2)))
    basis = build_basis(cloud, 1)
    K = transform_matrix_congruence(basis, dense_kernel_matrix(Matern(np.inf, 0.5), cloud))
    h = rng.standard_normal(48)
    with pytest.raises(SolverError) as err:
        solve_pursuit(PursuitProblem([K], h, weights=1e-9, max_iter=2, tol=1e-14))
    assert err.value.residual > 0


def test_pursuit_rejects_bad_arguments(dense64):
    _, _, K, h = dense64
    with pytest.raises(ValueError):
        solve_pursuit(PursuitProblem([], h))
    with pytest.raises(ValueError):
        solve_pursuit(PursuitProblem([K], h, weights=-1.0))
    with pytest.raises(ValueError):
        solve_pursuit(PursuitProblem([K], h, weights=1.0, step=-0.1))
