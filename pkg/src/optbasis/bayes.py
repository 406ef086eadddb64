"""Bayesian reconstruction and Kolmogorov width checks, dense and small.

Everything here is a brute-force verification path.  The prior on the
source is white noise, so the solution u = G f has covariance C = G G^T;
conditioning on n linear observations psi = M^T u gives

    mean = K^T (Theta + delta I)^{-1} psi,
    cov  = C - K^T (Theta + delta I)^{-1} K,

with K = M^T C and Theta = M^T C M.  At delta = 0 the mean is a linear
reconstruction W psi with W = K^T Theta^{-1}, and trace(C) splits exactly
into the captured part trace(K^T Theta^{-1} K) and the residual trace.

The n-width side measures the worst-case approximation error of a trial
subspace through the weighted operator A = F_Y G F_X^{-1}: the best value
over all n-dimensional subspaces is singular value n+1 of A, attained by
the leading right singular subspace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import dense_svd_oracle
from .exceptions import (
    BoundViolation,
    DimensionMismatch,
    ProblemTooLarge,
    RankDeficient,
    SingularTheta,
)
from .weights import identity_weight

DENSE_BAYES_GUARD = 2048


def _as_green(g, size_guard):
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionMismatch(f"expected a square dense operator, got shape {g.shape}")
    if g.shape[0] > size_guard:
        raise ProblemTooLarge(
            f"dense Bayesian path limited to {size_guard} unknowns, got {g.shape[0]}"
        )
    return g


def _as_obs_matrix(m, n_dofs):
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2 or m.shape[0] != n_dofs:
        raise DimensionMismatch(
            f"observation matrix shape {m.shape} does not match state dimension {n_dofs}"
        )
    return m


def _solve_spd(theta, rhs, context):
    """Solve with a symmetric positive definite matrix, or raise SingularTheta."""
    n = theta.shape[0]
    if n == 0:
        return np.zeros_like(rhs)
    eigs = np.linalg.eigvalsh(0.5 * (theta + theta.T))
    if eigs[-1] <= 0.0 or eigs[0] <= n * np.finfo(float).eps * eigs[-1]:
        raise SingularTheta(f"{context}: observation Gram matrix numerically singular")
    c, low = scipy.linalg.cho_factor(theta)
    return scipy.linalg.cho_solve((c, low), rhs)


@dataclass
class Posterior:
    """Gaussian posterior of u = G f under white-noise f and observations psi."""

    mean: np.ndarray
    covariance: np.ndarray
    observation_matrix: np.ndarray
    observations: np.ndarray
    noise: float
    reconstruction_map: np.ndarray | None = None


def posterior(green, obs_matrix, psi, delta=0.0, size_guard=DENSE_BAYES_GUARD):
    """Condition the white-noise pushforward on observations M^T u = psi.

    delta > 0 adds i.i.d. Gaussian observation noise of variance delta;
    delta = 0 is exact interpolation of the observations and also returns
    the explicit linear reconstruction map.
    """
    green = _as_green(green, size_guard)
    n_dofs = green.shape[0]
    m = _as_obs_matrix(obs_matrix, n_dofs)
    psi = np.asarray(psi, dtype=float)
    if delta < 0:
        raise ValueError("observation noise must be nonnegative")

    cov_prior = green @ green.T
    if m.shape[1] == 0:
        return Posterior(np.zeros(n_dofs), cov_prior, m, psi, delta, np.zeros((n_dofs, 0)))

    k = m.T @ cov_prior  # (n_obs, N)
    theta = k @ m

    if delta == 0.0:
        sol = _solve_spd(theta, k, "posterior at delta = 0")
        recon = sol.T
        mean = recon @ psi
        cov = cov_prior - k.T @ sol
    else:
        shifted = theta + delta * np.eye(m.shape[1])
        c, low = scipy.linalg.cho_factor(shifted)
        mean = k.T @ scipy.linalg.cho_solve((c, low), psi)
        cov = cov_prior - k.T @ scipy.linalg.cho_solve((c, low), k)
        recon = None
    cov = 0.5 * (cov + cov.T)
    return Posterior(mean, cov, m, psi, delta, recon)


@dataclass
class TraceReport:
    """Split of the prior trace into captured and residual parts for one M."""

    objective: float
    residual_trace: float
    cross_covariance: np.ndarray
    observation_gram: np.ndarray

    @property
    def total_trace(self):
        return self.objective + self.residual_trace


def trace_objective(green, obs_matrix, size_guard=DENSE_BAYES_GUARD):
    """Captured-variance objective trace(K^T Theta^{-1} K) and its complement."""
    green = _as_green(green, size_guard)
    m = _as_obs_matrix(obs_matrix, green.shape[0])
    cov_prior = green @ green.T
    k = m.T @ cov_prior
    theta = k @ m
    captured = float(np.trace(_solve_spd(theta, k @ k.T, "trace objective")))
    residual = float(np.trace(cov_prior)) - captured
    return TraceReport(captured, residual, k, theta)


def check_reconstruction_bound(green, obs_matrix, f, size_guard=DENSE_BAYES_GUARD):
    """Verify ||u - W psi|| <= sqrt(trace(cov)) ||f|| for one source draw.

    Returns (error, bound) and raises BoundViolation if the inequality
    fails beyond roundoff.
    """
    green = _as_green(green, size_guard)
    f = np.asarray(f, dtype=float)
    u = green @ f
    m = _as_obs_matrix(obs_matrix, green.shape[0])
    post = posterior(green, m, m.T @ u, delta=0.0, size_guard=size_guard)
    error = float(np.linalg.norm(u - post.mean))
    residual_trace = max(float(np.trace(post.covariance)), 0.0)
    bound = float(np.sqrt(residual_trace) * np.linalg.norm(f))
    if error > bound * (1.0 + 1e-10) + 1e-12 * (1.0 + np.linalg.norm(u)):
        raise BoundViolation(
            f"reconstruction error {error:.6e} exceeds trace bound {bound:.6e}"
        )
    return error, bound


def weighted_operator(green, fx, fy):
    """Dense A = F_Y G F_X^{-1} for a given dense solution operator."""
    a = fy.apply(np.asarray(green, dtype=float))
    return fx.solve_t(a.T).T


def nwidth_eval(green, fx, fy, v_n, size_guard=DENSE_BAYES_GUARD):
    """Worst-case weighted error of approximating from span(v_n).

    Computes sigma_max((I - P) F_Y G F_X^{-1}) where P projects onto the
    image F_Y G v_n of the trial space.  An empty v_n returns the largest
    singular value of the weighted operator.
    """
    green = _as_green(green, size_guard)
    n_dofs = green.shape[0]
    v_n = np.asarray(v_n, dtype=float)
    if v_n.size == 0:
        v_n = v_n.reshape(n_dofs, 0)
    if v_n.ndim == 1:
        v_n = v_n[:, None]
    if v_n.shape[0] != n_dofs:
        raise DimensionMismatch(f"trial basis shape {v_n.shape} does not match N = {n_dofs}")

    a = weighted_operator(green, fx, fy)
    if v_n.shape[1] == 0:
        return float(scipy.linalg.svdvals(a)[0])

    diag = np.abs(np.diag(scipy.linalg.qr(v_n, mode="r", pivoting=True)[0]))
    if diag[0] == 0.0 or diag[-1] <= 1e-12 * diag[0]:
        raise RankDeficient("trial basis does not have full column rank")

    image = fy.apply(green @ v_n)
    q = np.linalg.qr(image, mode="reduced")[0]
    resid = a - q @ (q.T @ a)
    return float(scipy.linalg.svdvals(resid)[0])


def principal_angles(a, b):
    """Principal angles between the column spans, largest first (radians)."""
    return scipy.linalg.subspace_angles(np.asarray(a, float), np.asarray(b, float))


@dataclass
class EquivalenceReport:
    """Evidence that the width-optimal and inference-optimal subspaces agree.

    Clause a: the trace objective at the leading left singular subspace
    matches the closed form sum of leading squared singular values and
    dominates random candidates.  Clause b: the n-width at the leading
    right singular subspace matches singular value n+1 and is minimal over
    random candidates.  Clause c: candidates closer to the optimum in
    objective are closer to the optimal subspace in angle.
    """

    n: int
    objective_optimal: float
    objective_closed_form: float
    objective_best_random: float
    nwidth_optimal: float
    nwidth_closed_form: float
    nwidth_best_random: float
    angle_gap_correlation: float
    angle_best_random: float
    angle_worst_random: float
    clause_a: bool
    clause_b: bool
    clause_c: bool

    @property
    def all_clauses(self):
        return self.clause_a and self.clause_b and self.clause_c


def check_equivalence(green, fx=None, fy=None, n=1, n_random=200, seed=0, tol=1e-9,
                      size_guard=DENSE_BAYES_GUARD):
    """Cross-check the optimality theorems on one dense operator.

    The n-width side uses the weighted SVD built from (fx, fy); omitted
    factors default to the identity.  The Bayesian side is stated for the
    Euclidean inner products, so its optimum is the plain left singular
    subspace of G regardless of the weights passed in.
    """
    green = _as_green(green, size_guard)
    n_dofs = green.shape[0]
    if not 1 <= n < n_dofs:
        raise ValueError(f"need 1 <= n < N, got n = {n}, N = {n_dofs}")
    fx = fx if fx is not None else identity_weight(n_dofs)
    fy = fy if fy is not None else identity_weight(n_dofs)
    rng = np.random.Generator(np.random.Philox(seed))

    # Bayesian side, Euclidean inner products
    u_plain, s_plain, _ = np.linalg.svd(green)
    m_opt = u_plain[:, :n]
    objective_optimal = trace_objective(green, m_opt, size_guard).objective
    objective_closed = float(np.sum(s_plain[:n] ** 2))

    gaps = np.empty(n_random)
    angles = np.empty(n_random)
    for j in range(n_random):
        cand = rng.standard_normal((n_dofs, n))
        obj = trace_objective(green, cand, size_guard).objective
        gaps[j] = objective_optimal - obj
        angles[j] = principal_angles(cand, m_opt)[0]
    best_obj = objective_optimal - gaps.min()

    # n-width side, weighted
    oracle = dense_svd_oracle(factorize_dense(green), fx, fy, size_guard=size_guard)
    nwidth_optimal = nwidth_eval(green, fx, fy, oracle.right_vectors[:, :n], size_guard)
    nwidth_closed = float(oracle.singular_values[n])
    best_width = np.inf
    for _ in range(n_random):
        cand = rng.standard_normal((n_dofs, n))
        best_width = min(best_width, nwidth_eval(green, fx, fy, cand, size_guard))

    order = np.argsort(gaps)
    corr = float(np.corrcoef(gaps, angles)[0, 1]) if n_random > 1 else 0.0
    clause_a = (
        abs(objective_optimal - objective_closed) <= tol * max(1.0, objective_closed)
        and best_obj <= objective_optimal + tol
    )
    clause_b = (
        abs(nwidth_optimal - nwidth_closed) <= tol * max(1.0, nwidth_closed)
        and best_width >= nwidth_closed - tol
    )
    clause_c = corr > 0.0 and angles[order[0]] <= angles[order[-1]]
    return EquivalenceReport(
        n=n,
        objective_optimal=objective_optimal,
        objective_closed_form=objective_closed,
        objective_best_random=float(best_obj),
        nwidth_optimal=nwidth_optimal,
        nwidth_closed_form=nwidth_closed,
        nwidth_best_random=float(best_width),
        angle_gap_correlation=corr,
        angle_best_random=float(angles[order[0]]),
        angle_worst_random=float(angles[order[-1]]),
        clause_a=clause_a,
        clause_b=clause_b,
        clause_c=clause_c,
    )


class _DenseSolver:
    """Adapter letting the SVD oracles consume an explicit solution operator."""

    def __init__(self, green):
        self.green = np.asarray(green, dtype=float)
        self.n = self.green.shape[0]

    def solve(self, b):
        # the wrapped object is already G = L^{-1}, so "solving" applies it
        return self.green @ np.asarray(b, dtype=float)

    def solve_transpose(self, b):
        return self.green.T @ np.asarray(b, dtype=float)


def factorize_dense(green):
    """Wrap an explicit dense solution operator for use with the SVD oracles."""
    return _DenseSolver(green)
