"""Wiring from a validated configuration to assembled problems and error curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import SourceProjector, SVDBasis, compute_basis, dense_svd_oracle, reconstruct
from .config import ExperimentConfig
from .elliptic import EllipticMedium, assemble_elliptic, eval_source_elliptic
from .exceptions import ConfigInvalid
from .grids import Grid2D, PhaseGrid
from .linalg import factorize
from .nonlinear import CubicTerm, TwoPhotonTerm, fixed_point_solve, newton_reference
from .transport import RteCoefficients, assemble_rte, eval_source_rte
from .weights import build_rte_weight, build_sobolev_weight, energy_norm, identity_weight


@dataclass
class ProblemSetup:
    """Assembled operator, weights and source for one experiment."""

    config: ExperimentConfig
    operator: sp.csr_matrix
    fx: object
    fy: object
    source: np.ndarray
    grid: Grid2D
    phase_grid: PhaseGrid | None
    term: object | None

    @property
    def n_dofs(self):
        return self.operator.shape[0]


def build_problem(config: ExperimentConfig) -> ProblemSetup:
    """Assemble operator, weight factors, source and nonlinearity for a config."""
    grid = Grid2D(config.m_intervals, config.length)
    phase_grid = None
    term = None

    if config.family in ("elliptic", "semilinear_elliptic"):
        operator = assemble_elliptic(grid, EllipticMedium(config.eps))
        fx = build_sobolev_weight(config.p, grid)
        source = _grid_source(config, grid)
        if config.family == "semilinear_elliptic":
            term = CubicTerm()
    elif config.is_rte:
        phase_grid = PhaseGrid(grid, config.n_angles)
        coeff = RteCoefficients(config.eps1, config.eps2, config.g)
        operator = assemble_rte(phase_grid, coeff)
        fx = build_rte_weight(config.p, phase_grid)
        if config.source.kind == "beam":
            source = eval_source_rte(phase_grid, config.source.amplitude)
        else:  # zero
            source = np.zeros(phase_grid.n_dofs)
        if config.family == "semilinear_rte":
            term = TwoPhotonTerm(phase_grid, config.eps1)
    else:  # identity: diagnostic family with unit operator and unit weights
        operator = sp.identity(grid.n_interior, format="csr")
        fx = identity_weight(grid.n_interior)
        source = _grid_source(config, grid)

    fy = identity_weight(operator.shape[0])
    return ProblemSetup(config, operator, fx, fy, source, grid, phase_grid, term)


def _grid_source(config, grid):
    if config.source.kind == "sine":
        return eval_source_elliptic(grid, config.source.amplitude)
    if config.source.kind == "zero":
        return np.zeros(grid.n_interior)
    raise ConfigInvalid(
        f"source kind '{config.source.kind}' does not apply to family '{config.family}'"
    )


def basis_meta(setup: ProblemSetup):
    """Metadata entries describing the problem a basis came from."""
    config = setup.config
    meta = {"family": config.family, "m_intervals": config.m_intervals,
            "length": config.length, "p": config.p}
    if config.is_rte:
        meta.update(n_angles=config.n_angles, eps1=config.eps1, eps2=config.eps2,
                    g=config.g)
    elif config.family != "identity":
        meta["eps"] = config.eps
    return meta


def compute_problem_basis(setup: ProblemSetup, params=None, solver=None) -> SVDBasis:
    """Randomized basis for an assembled problem, tagged with the problem it came from."""
    solver = solver if solver is not None else factorize(setup.operator)
    params = params if params is not None else setup.config.rsvd
    return compute_basis(solver, setup.fx, setup.fy, params, meta=basis_meta(setup))


def oracle_problem_basis(setup: ProblemSetup, size_guard=None) -> SVDBasis:
    """Dense-oracle basis for an assembled problem (small sizes only)."""
    kwargs = {} if size_guard is None else {"size_guard": size_guard}
    return dense_svd_oracle(setup.operator, setup.fx, setup.fy,
                            meta=basis_meta(setup), **kwargs)


def reference_solution(setup: ProblemSetup, solver=None):
    """Direct solve for linear problems, damped Newton for semilinear ones."""
    if setup.term is None:
        solver = solver if solver is not None else factorize(setup.operator)
        return solver.solve(setup.source)
    return newton_reference(setup.operator, setup.term,
                            setup.source, tol=setup.config.nonlinear.tol)


def solve_linear_projection(basis: SVDBasis, fx, f, n):
    """Spectral solve of the linear problem truncated to the leading n triplets."""
    coeffs = SourceProjector(basis, fx, n).coefficients(f)
    return reconstruct(basis, coeffs, n)


@dataclass
class ErrorCurve:
    """Relative errors of reduced solutions against a reference, per basis size."""

    n_values: list
    rel_l2: list
    rel_energy: list | None = None

    def header(self):
        return "n,rel_l2,rel_energy" if self.rel_energy is not None else "n,rel_l2"

    def rows(self):
        if self.rel_energy is None:
            return [(n, l2) for n, l2 in zip(self.n_values, self.rel_l2)]
        return list(zip(self.n_values, self.rel_l2, self.rel_energy))


def error_curve(u_ref, basis: SVDBasis, fx, f, n_values, grid=None) -> ErrorCurve:
    """Linear projection errors over a range of truncation levels.

    Passing a Grid2D adds the relative energy seminorm column (spatial
    fields only).
    """
    u_ref = np.asarray(u_ref, dtype=float)
    ref_l2 = np.linalg.norm(u_ref)
    ref_energy = energy_norm(u_ref, grid) if grid is not None else None
    l2 = []
    energy = [] if grid is not None else None
    for n in n_values:
        u_n = solve_linear_projection(basis, fx, f, n)
        l2.append(float(np.linalg.norm(u_n - u_ref) / ref_l2))
        if grid is not None:
            energy.append(energy_norm(u_n - u_ref, grid) / ref_energy)
    return ErrorCurve(list(n_values), l2, energy)


def nonlinear_error_curve(u_ref, basis: SVDBasis, fx, f, term, n_values,
                          settings, grid=None) -> ErrorCurve:
    """Fixed-point solution errors over a range of truncation levels."""
    u_ref = np.asarray(u_ref, dtype=float)
    ref_l2 = np.linalg.norm(u_ref)
    ref_energy = energy_norm(u_ref, grid) if grid is not None else None
    l2 = []
    energy = [] if grid is not None else None
    for n in n_values:
        result = fixed_point_solve(basis, fx, f, term, n, tol=settings.tol,
                                   max_iter=settings.max_iter, relax=settings.relax)
        l2.append(float(np.linalg.norm(result.solution - u_ref) / ref_l2))
        if grid is not None:
            energy.append(energy_norm(result.solution - u_ref, grid) / ref_energy)
    return ErrorCurve(list(n_values), l2, energy)
