"""Iterative sparse solves with a verified residual."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class LinearSolverError(RuntimeError):
    """Raised when an iterative solve misses its residual target."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


def solve(A: sp.spmatrix, b: np.ndarray, x0: np.ndarray | None = None, symmetric: bool = True,
          rtol: float = 1e-10, maxiter: int | None = None, label: str = "linear system") -> np.ndarray:
    """Solve ``A x = b`` to relative residual ``rtol``.

    Symmetric systems use Jacobi-preconditioned CG, others BiCGSTAB with an
    incomplete-LU preconditioner. The final residual is recomputed and a
    :class:`LinearSolverError` raised if it exceeds ``rtol`` (a factor 10 of
    slack covers the drift between recursive and true residual).
    """
    A = sp.csr_matrix(A)
    n = A.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    maxiter = maxiter or 10 * n
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).ravel()
    if symmetric:
        d = A.diagonal()
        if np.any(d <= 0):
            raise LinearSolverError(f"{label}: nonpositive diagonal in a symmetric solve", float("inf"))
        M = sp.diags(1.0 / d)
        x, info = spla.cg(A, b, x0=x0, rtol=rtol, atol=0.0, maxiter=maxiter, M=M)
    else:
        ilu = spla.spilu(A.tocsc(), drop_tol=1e-6, fill_factor=20)
        M = spla.LinearOperator(A.shape, ilu.solve)
        x, info = spla.bicgstab(A, b, x0=x0, rtol=rtol, atol=0.0, maxiter=maxiter, M=M)
    res = np.linalg.norm(b - A @ x) / bnorm
    if not np.isfinite(res) or res > 10 * rtol:
        raise LinearSolverError(f"{label}: no convergence after {maxiter} iterations", res)
    return x
