"""Sparse factorization and dense decomposition helpers.

Thin wrappers around scipy that add the shape checks, singularity
detection and rank handling the rest of the package relies on.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import (
    DimensionMismatch,
    RankDeficientWarning,
    SingularOperator,
    SvdFailure,
)

# A pivot below this fraction of the largest matrix entry is treated as singular.
PIVOT_RTOL = 1e-14

# Columns whose pivoted-QR diagonal falls below this fraction of the leading
# pivot are considered linearly dependent and dropped.
QR_RANK_RTOL = 1e-12


class FactorizedSolver:
    """Sparse LU factorization of a square operator.

    Keeps a reference to the assembled matrix and exposes solves with both
    the operator and its transpose from the single factorization.

    Parameters
    ----------
    operator : sparse or dense square matrix
        Converted to CSC for the factorization.
    """

    def __init__(self, operator):
        operator = sp.csc_matrix(operator)
        m, n = operator.shape
        if m != n:
            raise DimensionMismatch(f"operator must be square, got {m}x{n}")
        self.operator = operator
        self.n = n
        try:
            self._lu = spla.splu(operator)
        except RuntimeError as exc:
            raise SingularOperator(f"LU factorization failed: {exc}") from exc
        pivots = np.abs(self._lu.U.diagonal())
        scale = np.abs(operator.data).max() if operator.nnz else 0.0
        if scale == 0.0 or pivots.min() <= PIVOT_RTOL * scale:
            raise SingularOperator(
                f"operator numerically singular (min pivot {pivots.min():.3e}, "
                f"max entry {scale:.3e})"
            )

    def _check_rhs(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise DimensionMismatch(
                f"right-hand side has leading dimension {b.shape[0]}, expected {self.n}"
            )
        return b

    def solve(self, b):
        """Solve L x = b for one vector or the columns of a matrix."""
        return self._lu.solve(self._check_rhs(b))

    def solve_transpose(self, b):
        """Solve L^T x = b using the same factorization."""
        return self._lu.solve(self._check_rhs(b), trans="T")


def factorize(operator):
    """Factorize a square sparse operator once for repeated solves."""
    return FactorizedSolver(operator)


def solve_multi(solver, rhs, transpose=False):
    """Solve against every column of ``rhs``, preserving column order."""
    if transpose:
        return solver.solve_transpose(rhs)
    return solver.solve(rhs)


def qr_thin(a):
    """Thin QR factor with dependent columns dropped.

    Uses column-pivoted QR so rank deficiency shows up on the diagonal of R.
    Returns Q whose columns are orthonormal and span the numerically detected
    range of ``a``.  Emits a RankDeficientWarning when columns are dropped.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d array, got shape {a.shape}")
    if a.shape[1] == 0:
        return a.copy()
    q, r, _ = scipy.linalg.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    lead = diag[0] if diag.size else 0.0
    if lead == 0.0:
        rank = 0
    else:
        rank = int(np.sum(diag > QR_RANK_RTOL * lead))
    if rank < a.shape[1]:
        warnings.warn(
            f"orthonormalization dropped {a.shape[1] - rank} dependent column(s)",
            RankDeficientWarning,
            stacklevel=2,
        )
        return q[:, :rank]
    return q


def svd_dense(a):
    """Full SVD of a dense matrix, returned as (U, s, V) with A = U diag(s) V^T."""
    a = np.asarray(a, dtype=float)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(f"SVD did not converge: {exc}") from exc
    return u, s, vt.T
