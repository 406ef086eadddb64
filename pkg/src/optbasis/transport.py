"""Steady radiative transport with Henyey-Greenstein scattering.

The model is v . grad_x u + (sigma_a + sigma_s) u = sigma_s K u + f on the
square with a discrete velocity circle.  Advection uses first-order upwind
differences with zero inflow from outside the domain; the scattering
average is (K u)(x, v_l) = (1 / n_angles) sum_l' K[l, l'] u(x, v_l'), with
the kernel rows normalized so that average equals one for constant input.

Unknown ordering is space-major: flat index = spatial_index * n_angles + l,
with the spatial index in the same x-major layout as the elliptic family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .elliptic import kappa
from .grids import PhaseGrid

# velocity components smaller than this are treated as exactly zero
_V_TOL = 1e-14


def hg_phase(mu, g):
    """Unnormalized Henyey-Greenstein phase value at scattering cosine mu."""
    denom = 1.0 + g * g - 2.0 * g * np.asarray(mu, dtype=float)
    return (1.0 - g * g) / denom ** 1.5


def hg_kernel_matrix(g, n_angles):
    """Discretely normalized scattering matrix on the equispaced velocity circle.

    Each row is scaled so that (1 / n_angles) sum_l' K[l, l'] = 1, making a
    constant-in-angle field invariant under the scattering average.
    """
    if not 0.0 <= g < 1.0:
        raise ValueError(f"anisotropy factor must be in [0, 1), got {g}")
    theta = 2.0 * np.pi * np.arange(n_angles) / n_angles
    mu = np.cos(theta[:, None] - theta[None, :])
    raw = hg_phase(mu, g)
    row_mean = raw.sum(axis=1) / n_angles
    return raw / row_mean[:, None]


def sigma_s(x1, x2, eps1, eps2):
    """Scattering cross section: the elliptic medium amplified by 1 / eps1."""
    return kappa(x1, x2, eps2) / eps1


def sigma_a(x1, x2, eps1, eps2):
    """Absorption cross section, positive and oscillatory on scale eps2."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    two_pi = 2.0 * np.pi
    t1 = np.sin(4.0 * x1 ** 2 * x2 ** 2)
    t2 = (1.1 + np.cos(two_pi * x1 / eps2)) / (1.1 + np.cos(two_pi * x2 / eps2))
    t3 = (1.1 + np.sin(np.pi * x2 / eps2)) / (1.1 + np.sin(np.pi * x1 / eps2))
    return eps1 * (1.0 + t1 + t2 + t3)


def sigma_b(x1, x2, eps1):
    """Two-photon absorption coefficient, smooth and O(eps1)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return 0.1 * eps1 * (2.0 + 0.5 * np.cos(x1) + 0.5 * np.sin(x2))


@dataclass(frozen=True)
class RteCoefficients:
    """Cross-section scales: eps1 sets the scattering regime, eps2 the medium scale."""

    eps1: float = 1.0
    eps2: float = 1.0
    g: float = 0.5


def _upwind_1d(n, h, positive):
    """First-order upwind difference with a zero ghost value at the inflow side."""
    if positive:
        return sp.diags([np.full(n, 1.0 / h), np.full(n - 1, -1.0 / h)],
                        offsets=[0, -1], format="csr")
    return sp.diags([np.full(n, -1.0 / h), np.full(n - 1, 1.0 / h)],
                    offsets=[0, 1], format="csr")


def assemble_rte_from_fields(pg: PhaseGrid, sigma_a_values, sigma_s_values, kernel):
    """Assemble the transport operator from explicit coefficient samples.

    Parameters
    ----------
    pg : PhaseGrid
    sigma_a_values, sigma_s_values : arrays of length (m-1)^2
        Cross sections at the interior spatial nodes, x-major order.
    kernel : (n_angles, n_angles) array
        Normalized scattering matrix.
    """
    n = pg.spatial.n_per_dim
    h = pg.spatial.h
    n_v = pg.n_angles
    sa = np.asarray(sigma_a_values, dtype=float)
    ss = np.asarray(sigma_s_values, dtype=float)
    eye_n = sp.identity(n, format="csr")
    eye_v = sp.identity(n_v, format="csr")

    cos_t, sin_t = pg.velocities()
    blocks = []
    for l in range(n_v):
        c, s = cos_t[l], sin_t[l]
        t_l = sp.csr_matrix((n * n, n * n))
        if abs(c) > _V_TOL:
            t_l = t_l + c * sp.kron(_upwind_1d(n, h, c > 0), eye_n)
        if abs(s) > _V_TOL:
            t_l = t_l + s * sp.kron(eye_n, _upwind_1d(n, h, s > 0))
        unit = sp.csr_matrix(([1.0], ([l], [l])), shape=(n_v, n_v))
        blocks.append(sp.kron(t_l, unit))
    transport = sum(blocks)

    collision = sp.kron(sp.diags(sa + ss), eye_v)
    scattering = sp.kron(sp.diags(ss), sp.csr_matrix(kernel) / n_v)
    return (transport + collision - scattering).tocsr()


def assemble_rte(pg: PhaseGrid, coeff: RteCoefficients):
    """Assemble the transport operator for the multiscale cross-section model."""
    x1, x2 = pg.spatial.interior_flat()
    sa = sigma_a(x1, x2, coeff.eps1, coeff.eps2)
    ss = sigma_s(x1, x2, coeff.eps1, coeff.eps2)
    kernel = hg_kernel_matrix(coeff.g, pg.n_angles)
    return assemble_rte_from_fields(pg, sa, ss, kernel)


def eval_source_rte(pg: PhaseGrid, scale=1.0):
    """Gaussian beam source centered in the domain and aimed along theta = 0."""
    length = pg.spatial.length
    x1, x2 = pg.spatial.interior_flat()
    width = (length / 4.0) ** 2
    spatial = np.exp(-((x1 - length / 2.0) ** 2 + (x2 - length / 2.0) ** 2) / width)
    cos_t, sin_t = pg.velocities()
    angular = np.exp(-((cos_t - 1.0) ** 2 + sin_t ** 2) / 0.2 ** 2)
    return scale * np.outer(spatial, angular).ravel()
