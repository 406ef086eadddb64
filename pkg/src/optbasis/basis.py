"""Weighted SVD bases of the solution operator, randomized and dense.

For the factorizations here, the solution operator G = L^{-1} is never
formed at large scale.  With input weight Pi_X = F_X^T F_X and output
weight Pi_Y = F_Y^T F_Y, the weighted singular triplets of G are obtained
from the plain SVD of A = F_Y G F_X^{-1} through

    v_hat_i = F_X^{-1} z_i,     u_hat_i = G v_hat_i / lambda_i,

where A z_i = lambda_i w_i.  The triplets satisfy

    U^T Pi_Y U = I,   V^T Pi_X V = I,   G V = U diag(lambda),

and the randomized sketch only ever touches A through solves with L, L^T
and the weight factors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ProblemTooLarge, RankDeficientWarning, RankExhausted
from .linalg import factorize, qr_thin, svd_dense

# Singular values below this fraction of the largest are treated as numerically zero.
TRUNCATION_RTOL = 1e-14

DENSE_ORACLE_GUARD = 4096


@dataclass
class RsvdParams:
    """Randomized range sketch parameters.

    ``oversampling`` extra sample vectors and ``power`` subspace iteration
    passes trade work for accuracy; the counter-based seed makes runs
    reproducible bit for bit.
    """

    rank: int
    oversampling: int = 10
    power: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if self.oversampling < 0 or self.power < 0:
            raise ValueError("oversampling and power must be nonnegative")


@dataclass
class SVDBasis:
    """Weighted singular triplets of a solution operator.

    ``left_vectors`` are Pi_Y-orthonormal, ``right_vectors`` are
    Pi_X-orthonormal, and G right_vectors = left_vectors diag(singular_values).
    """

    n_dofs: int
    rank: int
    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    meta: dict = field(default_factory=dict)


def _apply_forward(solver, fx, fy, w):
    """A w with A = F_Y L^{-1} F_X^{-1}."""
    return fy.apply(solver.solve(fx.solve(w)))


def _apply_adjoint(solver, fx, fy, w):
    """A^T w = F_X^{-T} L^{-T} F_Y^T w."""
    return fx.solve_t(solver.solve_transpose(fy.apply_t(w)))


def compute_basis(solver, fx, fy, params: RsvdParams, meta=None):
    """Randomized weighted SVD basis of the factorized operator's inverse.

    Parameters
    ----------
    solver : FactorizedSolver
        Factorization of the (sparse) forward operator L.
    fx, fy : WeightFactor
        Input and output weight factors.
    params : RsvdParams
    meta : dict, optional
        Extra entries merged into the result's metadata.

    Notes
    -----
    The sketch draws rank + oversampling Gaussian columns from a Philox
    stream, runs ``power`` subspace iteration passes with re-orthonormal-
    ization after every operator application, and extracts triplets from
    the small projected matrix.  If the sketch detects numerical rank
    below the request, the basis is truncated and a RankDeficientWarning
    is emitted.
    """
    n = solver.n
    k = params.rank + params.oversampling
    if k > n:
        raise ValueError(f"rank + oversampling = {k} exceeds problem size {n}")
    rng = np.random.Generator(np.random.Philox(params.seed))
    sketch = rng.standard_normal((n, k))

    y = _apply_forward(solver, fx, fy, sketch)
    for _ in range(params.power):
        q = qr_thin(y)
        q = qr_thin(_apply_adjoint(solver, fx, fy, q))
        y = _apply_forward(solver, fx, fy, q)
    q = qr_thin(y)

    # b = Q^T A, assembled through one transpose solve block
    e = solver.solve_transpose(fy.apply_t(q))
    b = fx.solve_t(e).T
    _, svals, v_big = svd_dense(b)

    lead = svals[0] if svals.size else 0.0
    achieved = int(np.sum(svals > TRUNCATION_RTOL * lead)) if lead > 0.0 else 0
    r_eff = min(params.rank, achieved)
    if r_eff < params.rank:
        warnings.warn(
            f"requested rank {params.rank} but sketch found numerical rank {achieved}",
            RankDeficientWarning,
            stacklevel=2,
        )
    lam = svals[:r_eff].copy()
    v_hat = fx.solve(v_big[:, :r_eff])
    u_hat = solver.solve(v_hat) / lam

    info = {
        "method": "rsvd",
        "rank_requested": params.rank,
        "oversampling": params.oversampling,
        "power": params.power,
        "seed": params.seed,
        "weight_x": fx.label,
        "weight_y": fy.label,
    }
    if meta:
        info.update(meta)
    return SVDBasis(n, r_eff, lam, u_hat, v_hat, info)


def dense_svd_oracle(operator, fx, fy, size_guard=DENSE_ORACLE_GUARD, meta=None):
    """All weighted singular triplets by brute force, for verification.

    Forms the dense weighted operator A = F_Y L^{-1} F_X^{-1} column by
    column and runs a full SVD.  Refuses problems above ``size_guard``
    unknowns.
    """
    solver = operator if hasattr(operator, "solve_transpose") else factorize(operator)
    n = solver.n
    if n > size_guard:
        raise ProblemTooLarge(f"dense oracle limited to {size_guard} unknowns, got {n}")
    green = solver.solve(np.eye(n))
    a = fy.apply(green)
    a = fx.solve_t(a.T).T
    u_unweighted, svals, v_unweighted = svd_dense(a)
    v_hat = fx.solve(v_unweighted)
    u_hat = fy.solve(u_unweighted)
    info = {"method": "dense_oracle", "weight_x": fx.label, "weight_y": fy.label}
    if meta:
        info.update(meta)
    return SVDBasis(n, n, svals, u_hat, v_hat, info)


class SourceProjector:
    """Coefficient map g -> (Pi_X-inner products of g with the leading right vectors).

    Shared by the linear projection solve and the nonlinear fixed point so
    both take the identical floating-point path.
    """

    def __init__(self, basis: SVDBasis, fx, n):
        if n > basis.rank:
            raise RankExhausted(f"requested n = {n} but basis holds rank {basis.rank}")
        self.n = n
        self.fx = fx
        self._fv = fx.apply(basis.right_vectors[:, :n])

    def coefficients(self, g):
        return self._fv.T @ self.fx.apply(g)


def reconstruct(basis: SVDBasis, coeffs, n=None):
    """Assemble sum_i lambda_i c_i u_hat_i for the leading n triplets."""
    if n is None:
        n = len(coeffs)
    if n > basis.rank:
        raise RankExhausted(f"requested n = {n} but basis holds rank {basis.rank}")
    return basis.left_vectors[:, :n] @ (basis.singular_values[:n] * coeffs)


def defining_relation_errors(basis: SVDBasis, solver, fx, fy, indices=None):
    """Residuals of the four defining relations, for spot checks.

    Returns a dict with the maximum deviation of left/right weighted
    orthonormality and the relative residuals of G v_hat = lambda u_hat
    and G* u_hat = lambda v_hat over the sampled indices.
    """
    r = basis.rank
    if indices is None:
        indices = range(r)
    indices = list(indices)

    fu = fy.apply(basis.left_vectors)
    fv = fx.apply(basis.right_vectors)
    eye = np.eye(r)
    out = {
        "left_orthonormality": float(np.abs(fu.T @ fu - eye).max()),
        "right_orthonormality": float(np.abs(fv.T @ fv - eye).max()),
    }

    lam = basis.singular_values
    fwd = 0.0
    adj = 0.0
    for i in indices:
        gv = solver.solve(basis.right_vectors[:, i])
        scale = lam[i] * np.linalg.norm(basis.left_vectors[:, i])
        fwd = max(fwd, float(np.linalg.norm(gv - lam[i] * basis.left_vectors[:, i]) / scale))
        # G* u = Pi_X^{-1} G^T Pi_Y u
        pi_y_u = fy.apply_t(fy.apply(basis.left_vectors[:, i]))
        gstar_u = fx.solve(fx.solve_t(solver.solve_transpose(pi_y_u)))
        scale = lam[i] * np.linalg.norm(basis.right_vectors[:, i])
        adj = max(adj, float(np.linalg.norm(gstar_u - lam[i] * basis.right_vectors[:, i]) / scale))
    out["forward_residual"] = fwd
    out["adjoint_residual"] = adj
    return out
