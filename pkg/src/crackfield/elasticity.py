"""Quasi-static anti-plane elasticity on the cell-centered grid.

Solves div((1-z)^2 grad u) = 0 with the surfing Dirichlet data on the top
and bottom boundaries and zero flux on the left and right sides.  The
five-point finite-volume system is assembled in flux form (equations are
scaled by dx^2, which the relative residual does not see) and solved by
Jacobi-preconditioned conjugate gradients.

Dirichlet data enters through ghost values u_ghost = 2 g - u_interior with
g evaluated at the boundary face midpoint.  Face coefficients are the
harmonic mean of the adjacent degraded stiffnesses, floored at eta, so a
fully cracked face transmits (almost) no stress.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NoConvergence
from .grid import GridSpec, ScalarField, SurfingBC, gradient, surfing_displacement
from .linalg import conjugate_gradient


def face_coefficient(zK, zL, eta):
    """Degraded stiffness on the face between cells with crack values zK, zL.

    Harmonic mean of (1-zK)^2 and (1-zL)^2 (zero when both vanish), floored
    at eta.  Vectorized over arrays.
    """
    p = (1.0 - np.asarray(zK, dtype=float)) ** 2
    q = (1.0 - np.asarray(zL, dtype=float)) ** 2
    s = p + q
    a = np.divide(2.0 * p * q, s, out=np.zeros_like(s), where=s > 0)
    out = np.maximum(eta, a)
    return out if out.ndim else float(out)


@dataclass
class ElasticProblem:
    grid: GridSpec
    z: ScalarField
    bc: SurfingBC
    t: float
    eta: float = 1e-6
    tol: float = 1e-8
    max_iter: int | None = None  # defaults to 20 (n1 + n2)

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.max_iter is None:
            self.max_iter = 20 * (self.grid.n1 + self.grid.n2)


def boundary_values(grid: GridSpec, bc: SurfingBC, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Surfing displacement at the bottom and top face midpoints, per column."""
    x1 = grid.x1_centers()
    g_bottom = surfing_displacement(bc, x1, 0.0, grid.H, t)
    g_top = surfing_displacement(bc, x1, grid.H, grid.H, t)
    return np.asarray(g_bottom), np.asarray(g_top)


def assemble_system(p: ElasticProblem) -> tuple[sp.csr_matrix, np.ndarray]:
    """Assemble the SPD system A u = b for the flattened (C-order) field.

    Exposed so tests can compare against a dense solve and probe symmetry
    and positive definiteness of the operator.
    """
    g = p.grid
    n1, n2 = g.n1, g.n2
    z = p.z.values
    eta = p.eta

    a = (1.0 - z) ** 2
    ax = face_coefficient(z[:-1, :], z[1:, :], eta)  # faces between (i, j) and (i+1, j)
    ay = face_coefficient(z[:, :-1], z[:, 1:], eta)  # faces between (i, j) and (i, j+1)
    ab = np.maximum(eta, a[:, 0])    # bottom boundary faces
    at = np.maximum(eta, a[:, -1])   # top boundary faces

    diag = np.zeros((n1, n2))
    diag[:-1, :] += ax
    diag[1:, :] += ax
    diag[:, :-1] += ay
    diag[:, 1:] += ay
    diag[:, 0] += 2.0 * ab   # ghost row: u_ghost = 2 g - u  =>  2 a (g - u)
    diag[:, -1] += 2.0 * at

    def flat(i, j):
        return i * n2 + j

    ii, jj = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    rows = [flat(ii, jj).ravel()]
    cols = [flat(ii, jj).ravel()]
    vals = [diag.ravel()]
    # east/west couplings
    rows += [flat(ii[:-1, :], jj[:-1, :]).ravel(), flat(ii[1:, :], jj[1:, :]).ravel()]
    cols += [flat(ii[1:, :], jj[1:, :]).ravel(), flat(ii[:-1, :], jj[:-1, :]).ravel()]
    vals += [-ax.ravel(), -ax.ravel()]
    # north/south couplings
    rows += [flat(ii[:, :-1], jj[:, :-1]).ravel(), flat(ii[:, 1:], jj[:, 1:]).ravel()]
    cols += [flat(ii[:, 1:], jj[:, 1:]).ravel(), flat(ii[:, :-1], jj[:, :-1]).ravel()]
    vals += [-ay.ravel(), -ay.ravel()]

    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n1 * n2, n1 * n2),
    )

    g_bottom, g_top = boundary_values(g, p.bc, p.t)
    b = np.zeros((n1, n2))
    b[:, 0] = 2.0 * ab * g_bottom
    b[:, -1] = 2.0 * at * g_top
    return A, b.ravel()


def solve_displacement(p: ElasticProblem, u_init: ScalarField | None = None):
    """Solve the elastic system to relative residual tol.

    Returns (u, iters, residual).  u_init is a warm start, typically the
    previous step's displacement.  Raises NoConvergence at the iteration cap.
    """
    A, b = assemble_system(p)
    x0 = None if u_init is None else u_init.values.ravel()
    x, iters, res, ok = conjugate_gradient(
        A, b, x0=x0, M_diag=A.diagonal(), tol=p.tol, max_iter=p.max_iter
    )
    if not ok:
        raise NoConvergence(iters, res)
    return ScalarField(p.grid, x.reshape(p.grid.shape)), iters, res


def strain_energy_density(u: ScalarField, z: ScalarField, mu: float) -> ScalarField:
    """W = (mu/2) (1-z)^2 |grad u|^2 per cell (one-sided gradient at edges)."""
    if u.grid != z.grid:
        raise ValueError("u and z live on different grids")
    d1, d2 = gradient(u.values, u.grid)
    w = 0.5 * mu * (1.0 - z.values) ** 2 * (d1**2 + d2**2)
    return ScalarField(u.grid, w)
