import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from hypothesis import given, strategies as st

from ymhelix.solver import (NullspaceError, SolverError, nullspace, numerical_rank, pcg,
                            solve_spsd)


def path_laplacian(n):
    main = np.full(n, 2.0)
    main[[0, -1]] = 1.0
    return sp.diags([main, -np.ones(n - 1), -np.ones(n - 1)], [0, 1, -1]).tocsr()


def random_spd(rng, n, rank=None):
    B = rng.standard_normal((n, rank or n))
    return B @ B.T + (0 if rank else 0.1 * np.eye(n))


@given(st.integers(0, 2 ** 31), st.integers(3, 40))
def test_pcg_matches_direct_solve(seed, n):
    rng = np.random.default_rng(seed)
    A = random_spd(rng, n)
    b = rng.standard_normal(n)
    x, rep = pcg(sp.csr_matrix(A), b, tol=1e-12)
    ref = np.linalg.solve(A, b)
    assert rep.converged
    assert np.allclose(x, ref, rtol=1e-8, atol=1e-8 * np.abs(ref).max())


def test_dirichlet_elimination_against_spsolve():
    rng = np.random.default_rng(3)
    L = path_laplacian(30) + sp.diags(rng.uniform(0, 0.1, 30))
    b = rng.standard_normal(30)
    fixed = {0: 1.5, 29: -2.0, 11: 0.25}
    x, rep = solve_spsd(L, b, fixed=fixed)
    idx = np.array(sorted(fixed))
    free = np.setdiff1d(np.arange(30), idx)
    vals = np.array([fixed[i] for i in idx])
    ref = spla.spsolve(L[free][:, free].tocsc(), b[free] - L[free][:, idx] @ vals)
    assert np.allclose(x[free], ref, atol=1e-10)
    assert np.array_equal(x[idx], vals)
    assert rep.residual < 1e-12
    # tuple form gives the same answer
    x2, _ = solve_spsd(L, b, fixed=(list(fixed), list(fixed.values())))
    assert np.array_equal(x, x2)


def test_singular_solve_is_minimum_norm():
    L = path_laplacian(25)
    b = np.random.default_rng(4).standard_normal(25)
    b -= b.mean()
    kernel = np.ones((25, 1)) / 5.0
    x, rep = solve_spsd(L, b, kernel=kernel)
    ref = np.linalg.pinv(L.toarray()) @ b
    assert np.allclose(x, ref, atol=1e-10)
    assert rep.kernel_dim == 1


def test_inconsistent_rhs_raises():
    L = path_laplacian(10)
    with pytest.raises(SolverError):
        solve_spsd(L, np.ones(10), kernel=np.ones(10))


def test_unattainable_tolerance_reports_failure():
    L = path_laplacian(200) + sp.eye(200) * 1e-3
    with pytest.raises(SolverError) as err:
        solve_spsd(L, np.ones(200), tol=1e-30)
    # the iterate is not made worse by chasing roundoff
    assert err.value.report.residual < 1e-12


def test_bad_constraints():
    L = path_laplacian(5)
    with pytest.raises(ValueError):
        solve_spsd(L, np.zeros(5), fixed=([1, 1], [0.0, 1.0]))
    with pytest.raises(ValueError):
        solve_spsd(L, np.zeros(5), fixed=([7], [0.0]))
    with pytest.raises(ValueError):
        solve_spsd(L, np.zeros(4))


@given(st.integers(0, 2 ** 31), st.integers(1, 5))
def test_nullspace_against_scipy(seed, k):
    rng = np.random.default_rng(seed)
    n = 12
    A = random_spd(rng, n, rank=n - k)
    N = nullspace(A)
    ref = sla.null_space(A, rcond=1e-9)
    assert N.shape[1] == ref.shape[1] == k
    # same subspace: projections agree
    assert np.allclose(N @ N.T, ref @ ref.T, atol=1e-8)


def test_nullspace_with_mass_is_mass_orthonormal():
    rng = np.random.default_rng(5)
    A = random_spd(rng, 10, rank=7)
    mass = rng.uniform(0.5, 2.0, 10)
    N = nullspace(A, mass=mass)
    assert np.allclose(N.T @ (mass[:, None] * N), np.eye(3), atol=1e-10)
    assert np.abs(A @ N).max() < 1e-9


def test_nullspace_gap_and_cap():
    lam = np.array([0.0, 1e-8, 1e-6, 1.0])
    with pytest.raises(NullspaceError):
        nullspace(np.diag(lam), threshold=1e-7)
    with pytest.raises(NullspaceError):
        nullspace(np.eye(5), cap=4)


def test_numerical_rank():
    rng = np.random.default_rng(6)
    M = rng.standard_normal((8, 3)) @ rng.standard_normal((3, 10))
    assert numerical_rank(M) == 3 == np.linalg.matrix_rank(M)
    assert numerical_rank(np.zeros((3, 3))) == 0
