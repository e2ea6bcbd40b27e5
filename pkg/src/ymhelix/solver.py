"""Sparse symmetric solves with eliminated constraints, and dense kernel extraction."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

DEFAULT_TOL = 1e-12
KERNEL_THRESHOLD = 1e-9
SPECTRAL_GAP = 1e3
DENSE_CAP = 20000


class SolverError(RuntimeError):
    """Raised when a solve fails; carries the partial report."""

    def __init__(self, message: str, report: "SolveReport | None" = None):
        super().__init__(message)
        self.report = report


class NullspaceError(RuntimeError):
    pass


@dataclass
class SolveReport:
    iterations: int = 0
    residual: float = 0.0
    kernel_dim: int | None = None
    wall_time: float = 0.0
    converged: bool = True
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "kernel_dim": self.kernel_dim,
            "wall_time": self.wall_time,
            "converged": self.converged,
        }


def pcg(A, b, tol=DEFAULT_TOL, maxiter=None, kernel=None):
    """Jacobi-preconditioned conjugate gradients from x0 = 0.

    ``kernel`` is an optional (m, k) array with orthonormal columns spanning
    the null space of a singular A. The right-hand side is checked for
    consistency against it and the iterate is kept orthogonal to it, so the
    result is the minimum-norm solution.
    """
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    m = len(b)
    maxiter = maxiter or max(10 * m, 100)
    diag = A.diagonal()
    inv_diag = 1.0 / np.where(diag > 0, diag, 1.0)
    bnorm = np.linalg.norm(b)
    report = SolveReport()
    if bnorm == 0.0:
        return np.zeros(m), report

    def project(v):
        if kernel is None:
            return v
        return v - kernel @ (kernel.T @ v)

    if kernel is not None and np.linalg.norm(kernel.T @ b) > 1e-8 * bnorm:
        report.converged = False
        raise SolverError("right-hand side not orthogonal to the kernel (inconsistent)", report)

    x = np.zeros(m)
    r = b
    # restarts on the true residual absorb drift in the CG recurrences; a
    # correction is kept only if it lowers the true residual (below roundoff
    # further sweeps can only add noise)
    for _ in range(4):
        rn = np.linalg.norm(r)
        if rn < tol * bnorm:
            break
        dx, its = _cg(A, r, inv_diag, project, 1e-2 * tol * bnorm, maxiter)
        report.iterations += its
        x_new = project(x + dx)
        r_new = b - A @ x_new
        if np.linalg.norm(r_new) >= rn:
            break
        x, r = x_new, r_new
    report.residual = float(np.linalg.norm(b - A @ x) / bnorm)
    report.converged = report.residual < tol
    return x, report


def _cg(A, b, inv_diag, project, atol, maxiter, check_every=25):
    x = np.zeros(len(b))
    r = b.copy()
    z = project(inv_diag * r)
    p = z.copy()
    rz = r @ z
    best, stall, it = np.inf, 0, 0
    # the recurrence residual keeps shrinking after roundoff takes over, so the
    # best iterate by true residual is kept as well
    best_x, best_true = x.copy(), np.linalg.norm(b)
    for it in range(1, maxiter + 1):
        if it % check_every == 0:
            true = np.linalg.norm(b - A @ x)
            if true < best_true:
                best_x, best_true = x.copy(), true
            elif true > 10 * best_true:
                return best_x, it
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            break
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rn = np.linalg.norm(r)
        if rn < atol:
            break
        # stagnation: no halving of the residual for a long stretch
        if rn < 0.5 * best:
            best, stall = rn, 0
        else:
            stall += 1
            if stall > max(200, len(b)):
                break
        z = project(inv_diag * r)
        rz_new = r @ z
        if rz_new <= 0:
            break
        p = z + (rz_new / rz) * p
        rz = rz_new
    if np.linalg.norm(b - A @ x) > best_true:
        return best_x, it
    return x, it


def solve_spsd(A, b, fixed=None, tol: float = DEFAULT_TOL, maxiter: int | None = None,
               kernel=None):
    """Solve A x = b for symmetric positive semidefinite A.

    ``fixed`` maps indices to prescribed values (an (idx, vals) pair or a dict);
    those unknowns are eliminated, their equations dropped, and the reported
    residual is the true relative residual of the free equations. ``kernel``
    gives an orthonormal basis of the null space of the reduced operator when
    it is singular. Raises :class:`SolverError` on non-convergence.
    """
    t0 = time.perf_counter()
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or len(b) != n:
        raise ValueError("operator and right-hand side sizes differ")
    idx, vals = _normalize_fixed(fixed, n)
    free = np.setdiff1d(np.arange(n), idx)
    x = np.zeros(n)
    x[idx] = vals
    rhs = b[free] - (A[free][:, idx] @ vals if len(idx) else 0.0)
    Aff = A[free][:, free]
    if kernel is not None:
        kernel = np.asarray(kernel, dtype=float)
        if kernel.ndim == 1:
            kernel = kernel[:, None]
        if kernel.shape[0] == n and len(idx):
            kernel = kernel[free]
        kernel, _ = np.linalg.qr(kernel)
    xf, report = pcg(Aff, rhs, tol=tol, maxiter=maxiter, kernel=kernel)
    x[free] = xf
    rnorm = np.linalg.norm(rhs)
    report.residual = float(np.linalg.norm(rhs - Aff @ xf) / rnorm) if rnorm > 0 else 0.0
    report.kernel_dim = 0 if kernel is None else kernel.shape[1]
    report.wall_time = time.perf_counter() - t0
    report.converged = report.residual < tol
    if not report.converged:
        raise SolverError(
            f"CG did not reach tolerance {tol:g} (residual {report.residual:.3e}, "
            f"{report.iterations} iterations)", report)
    return x, report


def _normalize_fixed(fixed, n):
    if fixed is None:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    if isinstance(fixed, dict):
        idx = np.fromiter(fixed.keys(), dtype=np.int64, count=len(fixed))
        vals = np.fromiter(fixed.values(), dtype=float, count=len(fixed))
    else:
        idx, vals = fixed
        idx = np.asarray(idx, dtype=np.int64)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), idx.shape).copy()
    if len(np.unique(idx)) != len(idx):
        raise ValueError("duplicate constrained index")
    if len(idx) and (idx.min() < 0 or idx.max() >= n):
        raise ValueError("constrained index out of range")
    order = np.argsort(idx)
    return idx[order], vals[order]


def nullspace(A, threshold: float = KERNEL_THRESHOLD, mass=None, cap: int = DENSE_CAP,
              gap: float = SPECTRAL_GAP):
    """Orthonormal basis of the near-kernel of a symmetric operator.

    Solves the generalized problem A x = lam M x with M = diag(mass) (identity
    by default) and keeps eigenvectors with lam < threshold * lam_max. The
    basis is M-orthonormal. Raises :class:`NullspaceError` when the matrix is
    larger than ``cap`` or the accepted and rejected eigenvalues are not
    separated by at least ``gap``.
    """
    A = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    m = A.shape[0]
    if m > cap:
        raise NullspaceError(f"dense eigendecomposition of size {m} exceeds cap {cap}")
    if m == 0:
        return np.zeros((0, 0))
    A = 0.5 * (A + A.T)
    if mass is None:
        s = np.ones(m)
    else:
        mass = np.asarray(mass, dtype=float)
        if np.any(mass <= 0):
            raise ValueError("mass weights must be positive")
        s = 1.0 / np.sqrt(mass)
    lam, vec = sla.eigh(s[:, None] * A * s[None, :])
    top = max(abs(lam[-1]), np.finfo(float).tiny)
    cut = threshold * top
    k = int(np.sum(lam < cut))
    if k < m:
        below = abs(lam[k - 1]) if k > 0 else cut
        if lam[k] < gap * below:
            raise NullspaceError(
                f"no spectral gap at the kernel threshold: {below:.3e} vs {lam[k]:.3e}")
    return s[:, None] * vec[:, :k]


def numerical_rank(M, rtol: float = 1e-9, gap: float = SPECTRAL_GAP) -> int:
    """Rank by singular values with a relative cut and a gap check."""
    M = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0:
        return 0
    r = int(np.sum(sv > rtol * sv[0]))
    if 0 < r < len(sv) and sv[r] > 1e-14 * sv[0] and sv[r - 1] < gap * sv[r]:
        raise NullspaceError(f"no singular-value gap at rank {r}: {sv[r - 1]:.3e} vs {sv[r]:.3e}")
    return r
