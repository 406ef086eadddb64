"""Difference operators, Sobolev weight factors and the phase-space weight."""

import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from optbasis.exceptions import DimensionMismatch, OrderTooHigh
from optbasis.grids import Grid2D, PhaseGrid
from optbasis.weights import (
    DiagonalWeightFactor,
    TensorWeightFactor,
    TriangularWeightFactor,
    build_rte_weight,
    build_sobolev_weight,
    energy_norm,
    fd_operator_1d,
    fd_operator_2d,
    identity_weight,
    sobolev_gram_matrix,
)


class TestGrids:
    def test_spacing_and_counts(self):
        g = Grid2D(4)
        assert g.h == 0.125
        assert g.n_per_dim == 3
        assert g.n_interior == 9
        np.testing.assert_allclose(g.interior_1d(), [0.125, 0.25, 0.375])

    def test_flat_layout_is_x_major(self):
        # x1 varies slowest: the first n_per_dim entries share x1 = h
        g = Grid2D(4)
        x1, x2 = g.interior_flat()
        np.testing.assert_allclose(x1[:3], [0.125, 0.125, 0.125])
        np.testing.assert_allclose(x2[:3], [0.125, 0.25, 0.375])

    def test_degenerate_grid_rejected(self):
        with pytest.raises(ValueError):
            Grid2D(1)
        with pytest.raises(ValueError):
            Grid2D(4, length=0.0)

    def test_phase_grid_angles_and_velocities(self):
        pg = PhaseGrid(Grid2D(4), 4)
        np.testing.assert_allclose(pg.theta, [0.0, np.pi / 2, np.pi, 3 * np.pi / 2])
        vx, vy = pg.velocities()
        np.testing.assert_allclose(vx, [1.0, 0.0, -1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(vy, [0.0, 1.0, 0.0, -1.0], atol=1e-15)
        assert pg.n_dofs == 36


class TestDifferenceOperators:
    def test_first_difference_stencil(self):
        d = fd_operator_1d(4, 1, 0.125)
        np.testing.assert_allclose(
            d.matrix.toarray(), [[-8.0, 8.0, 0.0], [0.0, -8.0, 8.0]]
        )

    def test_order_zero_is_identity(self):
        d = fd_operator_1d(5, 0, 0.1)
        assert (d.matrix != sp.identity(4)).nnz == 0

    def test_second_difference_stencil(self):
        d = fd_operator_1d(6, 2, 0.5)
        row = d.matrix.toarray()[0]
        np.testing.assert_allclose(row, [4.0, -8.0, 4.0, 0.0, 0.0])

    def test_kth_difference_annihilates_lower_degree_polynomials(self):
        h = 0.125
        x = h * np.arange(1, 8)
        for k in (1, 2, 3):
            d = fd_operator_1d(8, k, h)
            for deg in range(k):
                np.testing.assert_allclose(d.matrix @ x**deg, 0.0, atol=1e-10)

    def test_exact_on_monomial_of_matching_degree(self):
        # k-th forward difference of x^k / k! is exactly 1 in exact arithmetic
        h = 0.25
        x = h * np.arange(1, 10)
        for k in (1, 2, 3):
            d = fd_operator_1d(10, k, h)
            vals = d.matrix @ (x**k)
            np.testing.assert_allclose(vals, math.factorial(k), rtol=1e-9)

    def test_order_too_high_raises(self):
        with pytest.raises(OrderTooHigh):
            fd_operator_1d(3, 2, 0.1)

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            fd_operator_1d(4, -1, 0.1)

    def test_2d_operator_is_kron_of_1d(self):
        dx = fd_operator_1d(5, 1, 0.1).matrix
        dy = fd_operator_1d(5, 2, 0.1).matrix
        d2 = fd_operator_2d(5, 1, 2, 0.1)
        ref = sp.kron(dx, dy)
        assert abs(d2 - ref).max() == 0.0


class TestSobolevWeight:
    def test_order_zero_inner_product(self):
        # Pi = h^2 I on the 3x3 interior of a 4-interval grid: <1, 1> = 9 h^2
        w = build_sobolev_weight(0, Grid2D(4))
        ones = np.ones(9)
        assert w.inner(ones, ones) == pytest.approx(0.140625, abs=1e-15)

    def test_constant_field_sees_only_the_l2_part(self):
        # differences of a constant vanish, so p=1 gives the same value as p=0
        w = build_sobolev_weight(1, Grid2D(4))
        ones = np.ones(9)
        assert w.inner(ones, ones) == pytest.approx(0.140625, rel=1e-12)

    @pytest.mark.parametrize("p", [1, 2])
    def test_factor_reproduces_gram_matrix(self, p):
        grid = Grid2D(6)
        gram = sobolev_gram_matrix(6, p, grid.h).toarray()
        w = build_sobolev_weight(p, grid)
        f = w._factor.toarray()
        assert np.abs(f.T @ f - gram).max() <= 1e-10 * np.abs(gram).max()

    @pytest.mark.parametrize("p", [0, 1, 2])
    def test_weight_matrix_is_spd(self, p):
        w = build_sobolev_weight(p, Grid2D(5))
        eigs = np.linalg.eigvalsh(w.gram().toarray())
        assert eigs.min() > 0

    @pytest.mark.parametrize("p", [0, 1, 2])
    def test_apply_solve_roundtrips(self, p):
        w = build_sobolev_weight(p, Grid2D(5))
        rng = np.random.Generator(np.random.Philox(2))
        v = rng.normal(size=w.dim)
        np.testing.assert_allclose(w.solve(w.apply(v)), v, atol=1e-11)
        np.testing.assert_allclose(w.apply_t(w.solve_t(v)), v, atol=1e-11)

    def test_norm_is_consistent_with_inner(self):
        w = build_sobolev_weight(2, Grid2D(6))
        rng = np.random.Generator(np.random.Philox(4))
        v = rng.normal(size=w.dim)
        assert w.norm(v) == pytest.approx(np.sqrt(w.inner(v, v)), rel=1e-12)

    def test_matrix_argument_maps_columnwise(self):
        w = build_sobolev_weight(1, Grid2D(5))
        rng = np.random.Generator(np.random.Philox(6))
        block = rng.normal(size=(w.dim, 3))
        out = w.apply(block)
        for j in range(3):
            np.testing.assert_array_equal(out[:, j], w.apply(block[:, j]))

    def test_unsupported_order_rejected(self):
        with pytest.raises(ValueError):
            build_sobolev_weight(3, Grid2D(8))

    def test_order_exceeding_grid_rejected(self):
        with pytest.raises(OrderTooHigh):
            build_sobolev_weight(2, Grid2D(3))

    def test_dimension_mismatch_detected(self):
        w = build_sobolev_weight(1, Grid2D(4))
        with pytest.raises(DimensionMismatch):
            w.apply(np.ones(4))


class TestTriangularFactor:
    def test_rejects_asymmetric_matrix(self):
        bad = np.array([[2.0, 0.5], [0.0, 2.0]])
        with pytest.raises(ValueError, match="symmetric"):
            TriangularWeightFactor.from_gram(bad)

    def test_rejects_indefinite_matrix(self):
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(ValueError, match="positive definite"):
            TriangularWeightFactor.from_gram(bad)

    def test_factor_is_upper_triangular(self):
        gram = sobolev_gram_matrix(5, 1, 0.1)
        w = TriangularWeightFactor.from_gram(gram)
        f = w._factor.toarray()
        assert np.abs(np.tril(f, -1)).max() == 0.0

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=1000))
    def test_random_spd_matrices_factor_correctly(self, n, seed):
        rng = np.random.Generator(np.random.Philox(seed))
        b = rng.normal(size=(n, n))
        gram = b.T @ b + n * np.eye(n)
        w = TriangularWeightFactor.from_gram(sp.csr_matrix(gram))
        f = w._factor.toarray()
        np.testing.assert_allclose(f.T @ f, gram, rtol=1e-10, atol=1e-10)
        v = rng.normal(size=n)
        np.testing.assert_allclose(w.solve(w.apply(v)), v, atol=1e-9)
        assert w.inner(v, v) == pytest.approx(v @ gram @ v, rel=1e-10)


class TestPhaseSpaceWeight:
    def test_order_zero_is_scaled_identity(self):
        pg = PhaseGrid(Grid2D(4), 5)
        w = build_rte_weight(0, pg)
        gram = w.gram().toarray()
        expected = (pg.spatial.h**2 / 5) * np.eye(45)
        assert np.abs(gram - expected).max() < 1e-15

    def test_tensor_factor_matches_explicit_kron(self):
        pg = PhaseGrid(Grid2D(4), 5)
        w = build_rte_weight(1, pg)
        spatial = build_sobolev_weight(1, pg.spatial)
        dense = sp.kron(spatial._factor, sp.identity(5) / np.sqrt(5)).toarray()
        rng = np.random.Generator(np.random.Philox(3))
        v = rng.normal(size=45)
        np.testing.assert_allclose(w.apply(v), dense @ v, atol=1e-13)
        np.testing.assert_allclose(w.apply_t(v), dense.T @ v, atol=1e-13)

    def test_roundtrips_and_matrix_rhs(self):
        pg = PhaseGrid(Grid2D(4), 3)
        w = build_rte_weight(2, pg)
        rng = np.random.Generator(np.random.Philox(9))
        block = rng.normal(size=(w.dim, 2))
        np.testing.assert_allclose(w.solve(w.apply(block)), block, atol=1e-10)
        np.testing.assert_allclose(w.solve_t(w.apply_t(block)), block, atol=1e-10)

    def test_angular_average_normalization(self):
        # a field constant in angle has the same weighted norm as its spatial
        # part under the pure spatial weight
        pg = PhaseGrid(Grid2D(5), 7)
        w = build_rte_weight(1, pg)
        spatial = build_sobolev_weight(1, pg.spatial)
        rng = np.random.Generator(np.random.Philox(10))
        field = rng.normal(size=pg.spatial.n_interior)
        full = np.repeat(field, 7)
        assert w.norm(full) == pytest.approx(spatial.norm(field), rel=1e-12)


class TestEnergyNorm:
    def test_linear_field_has_exact_energy(self):
        # u = x1: forward differences are exactly 1 on all (m-2)(m-1) rows,
        # so the energy is sqrt(h^2 * (m-2)(m-1))
        g = Grid2D(4)
        x1, _ = g.interior_mesh()
        assert energy_norm(x1.ravel(), g) == pytest.approx(np.sqrt(0.09375), abs=1e-15)

    def test_constant_field_has_zero_energy(self):
        g = Grid2D(6)
        assert energy_norm(np.ones(g.n_interior), g) == 0.0

    def test_symmetric_in_the_two_directions(self):
        g = Grid2D(5)
        x1, x2 = g.interior_mesh()
        assert energy_norm(x1.ravel(), g) == pytest.approx(
            energy_norm(x2.ravel(), g), rel=1e-14
        )

    def test_wrong_size_rejected(self):
        with pytest.raises(DimensionMismatch):
            energy_norm(np.ones(5), Grid2D(4))


class TestDiagonalFactor:
    def test_identity_weight_is_plain_dot(self):
        w = identity_weight(4)
        a = np.array([1.0, 2.0, 0.0, -1.0])
        assert w.inner(a, a) == pytest.approx(6.0)
        assert w.norm(a) == pytest.approx(np.sqrt(6.0))

    def test_scale_enters_quadratically(self):
        w = DiagonalWeightFactor(0.5, 3)
        assert w.inner(np.ones(3), np.ones(3)) == pytest.approx(0.75)
        assert (w.gram() != 0.25 * sp.identity(3)).nnz == 0

    def test_nonpositive_scale_rejected(self):
        with pytest.raises(ValueError):
            DiagonalWeightFactor(0.0, 3)
