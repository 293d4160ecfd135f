"""Irreversible crack-field evolution and full simulation runs.

Both surface-energy variants evolve z by a gradient flow passed through
the plus operator:

    AT2:  alpha2 dz/dt = ( eps div(gamma grad z) - (gamma/eps) z
                           + mu |grad u|^2 (1 - z) )_+
    AT1:  alpha2 dz/dt = ( (3/4) eps div(gamma grad z) - (3/8) gamma/eps
                           + mu |grad u|^2 (1 - z) )_+

Time stepping is semi-implicit: the terms linear in z (diffusion, and the
-(gamma/eps) z reaction for AT2) are taken at the new time level, the
elastic driving force mu |grad u'|^2 (1 - z) at the old one.  A fully
explicit update at dt/alpha2 = 10 would violate the diffusion stability
bound by orders of magnitude.

The plus operator is realized as the obstacle constraint z* >= z on the
semi-implicit solve (a linear complementarity problem handled by a
primal-dual active-set loop).  Solving unconstrained and projecting
afterwards is not equivalent: wherever the pre-plus right-hand side is
strongly negative (all of the far field in AT1, where the constant
-(3/8) gamma/eps sink dominates), the unconstrained candidate plunges far
below z and the implicit diffusion then drags the crack band down with it,
freezing the crack.  The constrained solve keeps those cells pinned at z,
which is what the plus operator means, and reproduces the complementarity
conditions exactly: pinned cells have non-positive residual, advancing
cells satisfy the semi-implicit equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .elasticity import ElasticProblem, solve_displacement
from .errors import NoConvergence, NoCrack
from .linalg import conjugate_gradient
from .grid import (
    AT1,
    AT2,
    GridSpec,
    ModelParams,
    RhsField,
    ScalarField,
    SimState,
    SurfingBC,
    gradient,
)
from .toughness import ToughnessField, ToughnessScenario, rasterize


def _face_means(gamma: np.ndarray):
    """Arithmetic mean of gamma on interior x1- and x2-faces."""
    gx = 0.5 * (gamma[:-1, :] + gamma[1:, :])
    gy = 0.5 * (gamma[:, :-1] + gamma[:, 1:])
    return gx, gy


def div_gamma_grad(z: np.ndarray, gamma: np.ndarray, grid: GridSpec) -> np.ndarray:
    """FV divergence div(gamma grad z) with zero-flux boundaries everywhere."""
    gx, gy = _face_means(gamma)
    out = np.zeros_like(z)
    fx = gx * (z[1:, :] - z[:-1, :])
    fy = gy * (z[:, 1:] - z[:, :-1])
    out[:-1, :] += fx
    out[1:, :] -= fx
    out[:, :-1] += fy
    out[:, 1:] -= fy
    return out / grid.dx**2


def rhs_pre_plus(z: ScalarField, u: ScalarField, gamma: ToughnessField, p: ModelParams) -> RhsField:
    """Right-hand side of the crack evolution before the plus operator."""
    zv, uv, gv = z.values, u.values, gamma.values
    d1, d2 = gradient(uv, u.grid)
    drive = p.mu * (d1**2 + d2**2) * (1.0 - zv)
    diff = div_gamma_grad(zv, gv, z.grid)
    if p.variant == AT2:
        vals = p.epsilon * diff - (gv / p.epsilon) * zv + drive
    else:
        vals = 0.75 * p.epsilon * diff - 0.375 * gv / p.epsilon + drive
    return ScalarField(z.grid, vals)


class _PinnedOperator:
    """M with pinned cells replaced by identity rows/columns (stays SPD)."""

    def __init__(self, M, free: np.ndarray):
        self.M = M
        self.free = free

    def __matmul__(self, v):
        mv = self.M @ np.where(self.free, v, 0.0)
        return np.where(self.free, mv, v)


class ZSystem:
    """Semi-implicit system for the crack-field update.

    M z* = (alpha2/dt) z + S  with
    M = (alpha2/dt) I + [gamma/eps]_AT2 + c_d K,  K the SPD zero-flux
    diffusion operator with arithmetic face gamma, c_d = eps (AT2) or
    (3/4) eps (AT1).  The matrix depends only on gamma and the constants,
    so it is assembled once per run.
    """

    def __init__(self, grid: GridSpec, gamma: ToughnessField, params: ModelParams):
        self.grid = grid
        self.params = params
        self.gamma = gamma
        n1, n2 = grid.n1, grid.n2
        gv = gamma.values
        gx, gy = _face_means(gv)
        scale = 1.0 / grid.dx**2
        c_d = params.epsilon if params.variant == AT2 else 0.75 * params.epsilon

        diag = np.full((n1, n2), params.alpha2 / params.dt)
        if params.variant == AT2:
            diag += gv / params.epsilon
        diag[:-1, :] += c_d * gx * scale
        diag[1:, :] += c_d * gx * scale
        diag[:, :-1] += c_d * gy * scale
        diag[:, 1:] += c_d * gy * scale

        def flat(i, j):
            return i * n2 + j

        ii, jj = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
        rows = [flat(ii, jj).ravel()]
        cols = [flat(ii, jj).ravel()]
        vals = [diag.ravel()]
        off_x = -c_d * gx.ravel() * scale
        off_y = -c_d * gy.ravel() * scale
        rows += [flat(ii[:-1, :], jj[:-1, :]).ravel(), flat(ii[1:, :], jj[1:, :]).ravel()]
        cols += [flat(ii[1:, :], jj[1:, :]).ravel(), flat(ii[:-1, :], jj[:-1, :]).ravel()]
        vals += [off_x, off_x]
        rows += [flat(ii[:, :-1], jj[:, :-1]).ravel(), flat(ii[:, 1:], jj[:, 1:]).ravel()]
        cols += [flat(ii[:, 1:], jj[:, 1:]).ravel(), flat(ii[:, :-1], jj[:, :-1]).ravel()]
        vals += [off_y, off_y]
        self.matrix = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n1 * n2, n1 * n2),
        )
        self.diag = self.matrix.diagonal()

    def solve_constrained(
        self,
        z: np.ndarray,
        q: np.ndarray,
        tol: float = 1e-9,
        max_iter: int | None = None,
        max_active_set: int = 60,
    ) -> np.ndarray:
        """Solve min (1/2) w'Mw - q'w subject to w >= z (the plus operator).

        Primal-dual active-set iteration: pinned cells sit at the obstacle,
        free cells solve the reduced SPD system (by Jacobi-CG on the pinned
        operator).  M is an M-matrix, so the loop terminates finitely.
        """
        if max_iter is None:
            max_iter = 20 * (self.grid.n1 + self.grid.n2)
        psi = z.ravel()
        M = self.matrix
        # deadbands against float chatter where the complementarity is degenerate
        lam_tol = 1e-9 * max(1.0, float(np.max(np.abs(q))))
        w_tol = 1e-12
        # start by pinning wherever the pre-plus right-hand side pushes down
        free = (q - M @ psi) > 0.0
        w = psi.copy()
        for _ in range(max_active_set):
            w_prev = w
            if not free.any():
                w = psi.copy()
                lam = -(q - M @ w)
            else:
                op = _PinnedOperator(M, free)
                rhs = np.where(free, q - M @ np.where(free, 0.0, psi), psi)
                diag = np.where(free, self.diag, 1.0)
                w, _, res, ok = conjugate_gradient(
                    op, rhs, x0=np.where(free, w, psi), M_diag=diag,
                    tol=tol, max_iter=max_iter,
                )
                if not ok:
                    raise NoConvergence(max_iter, res, "crack-field subsystem solve stalled")
                w = np.where(free, w, psi)
                lam = np.where(free, 0.0, -(q - M @ w))
            release = ~free & (lam < -lam_tol)
            pin = free & (w < psi - w_tol)
            free_next = (free | release) & ~pin
            if np.array_equal(free_next, free) or float(np.max(np.abs(w - w_prev))) < 1e-13:
                break
            free = free_next
        else:
            raise NoConvergence(max_active_set, np.nan, "active-set loop did not settle")
        return np.maximum(w, psi).reshape(self.grid.shape)


def step(
    state: SimState,
    gamma: ToughnessField,
    p: ModelParams,
    bc: SurfingBC,
    zsystem: ZSystem | None = None,
    tip_threshold: float = 0.5,
    elastic_tol: float = 1e-8,
    elastic_max_iter: int | None = None,
    z_tol: float = 1e-9,
) -> SimState:
    """Advance the coupled state by one time step dt.

    Order: solve elasticity at t+dt with the current z (quasi-statics);
    solve the semi-implicit crack-field system under the irreversibility
    obstacle z* >= z (so z' = max(z, z*) holds by construction); clamp to
    [0, 1]; retrack the tip.
    """
    grid = state.z.grid
    t_new = state.t + p.dt
    problem = ElasticProblem(
        grid, state.z, bc, t_new, eta=p.eta, tol=elastic_tol, max_iter=elastic_max_iter
    )
    u_new, _, _ = solve_displacement(problem, u_init=state.u)

    if zsystem is None:
        zsystem = ZSystem(grid, gamma, p)
    zv = state.z.values
    d1, d2 = gradient(u_new.values, grid)
    drive = p.mu * (d1**2 + d2**2) * (1.0 - zv)
    q = (p.alpha2 / p.dt) * zv + drive
    if p.variant == AT1:
        q = q - 0.375 * gamma.values / p.epsilon
    z_star = zsystem.solve_constrained(zv, q.ravel(), tol=z_tol)

    z_new = np.maximum(zv, z_star)
    if p.z_clamp:
        np.clip(z_new, 0.0, 1.0, out=z_new)
    z_field = ScalarField(grid, z_new)
    tip = track_tip(z_field, tip_threshold)
    return SimState(t=t_new, z=z_field, u=u_new, tip=tip)


def track_tip(z: ScalarField, threshold: float = 0.5) -> tuple[float, float]:
    """Crack-tip position from the level set of z.

    x1 is the largest cell-center abscissa among cells with z >= threshold;
    x2 is the z-weighted centroid of the qualifying cells in that column.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    mask = z.values >= threshold
    cols = np.flatnonzero(mask.any(axis=1))
    if cols.size == 0:
        raise NoCrack(f"no cell reaches z >= {threshold}")
    i = int(cols[-1])
    g = z.grid
    rows = np.flatnonzero(mask[i, :])
    w = z.values[i, rows]
    x2 = float(np.dot(w, g.x2_centers()[rows]) / w.sum())
    x1 = float(g.x1_centers()[i])
    return (x1, x2)


def initial_crack(grid: GridSpec, p: ModelParams, notch_length: float = 0.25) -> ScalarField:
    """Initial crack field: a midline notch with the variant's 1-D optimal profile.

    dist is the distance to the segment {(s, H/2) : 0 <= s <= notch_length};
    AT2 uses exp(-dist/eps), AT1 the compactly supported (1 - dist/(2 eps))^2.
    """
    if not 0 < notch_length < grid.L:
        raise ValueError("notch_length must lie in (0, L)")
    x1c, x2c = grid.cell_centers()
    dx1 = np.maximum(0.0, x1c - notch_length)
    dist = np.hypot(dx1, x2c - 0.5 * grid.H)
    if p.variant == AT2:
        z0 = np.exp(-dist / p.epsilon)
    else:
        z0 = np.maximum(0.0, 1.0 - dist / (2.0 * p.epsilon)) ** 2
    return ScalarField(grid, np.clip(z0, 0.0, 1.0))


@dataclass
class Trajectory:
    """Recorded time series of a simulation run."""

    params: ModelParams
    scenario: ToughnessScenario
    bc: SurfingBC
    grid: GridSpec
    snapshots: list
    tip_series: np.ndarray  # rows (t, x1, x2), one per step including t=0
    notch_length: float
    record_every: int = 1
    tip_threshold: float = 0.5

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def snapshot_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def tip_at_step(self, n: int) -> tuple[float, float]:
        row = self.tip_series[n]
        return (float(row[1]), float(row[2]))

    @property
    def n_steps(self) -> int:
        return self.tip_series.shape[0] - 1

    def max_irreversibility_violation(self) -> float:
        """Largest pointwise decrease of z between consecutive snapshots (<= 0 is clean)."""
        worst = -np.inf
        for a, b in zip(self.snapshots[:-1], self.snapshots[1:]):
            worst = max(worst, float((a.z.values - b.z.values).max()))
        return worst


def run_simulation(
    scenario: ToughnessScenario,
    params: ModelParams,
    bc: SurfingBC,
    grid: GridSpec,
    n_steps: int,
    notch_length: float = 0.25,
    record_every: int = 1,
    tip_threshold: float = 0.5,
    elastic_tol: float = 1e-8,
    elastic_max_iter: int | None = None,
    progress=None,
) -> Trajectory:
    """Run the forward model from the initial notch for n_steps steps.

    Snapshots (u, z, tip) are recorded every ``record_every`` steps; the tip
    is recorded at every step.  ``progress`` is an optional callback
    progress(step, state).
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    gamma = rasterize(scenario, grid)
    zsystem = ZSystem(grid, gamma, params)

    z0 = initial_crack(grid, params, notch_length)
    problem = ElasticProblem(
        grid, z0, bc, 0.0, eta=params.eta, tol=elastic_tol, max_iter=elastic_max_iter
    )
    try:
        u0, _, _ = solve_displacement(problem)
    except NoConvergence as e:
        raise NoConvergence(e.iters, e.residual, f"initial elastic solve: {e}") from e
    state = SimState(t=0.0, z=z0, u=u0, tip=track_tip(z0, tip_threshold))

    snapshots = [state]
    tips = [(0.0, *state.tip)]
    for n in range(1, n_steps + 1):
        try:
            state = step(
                state,
                gamma,
                params,
                bc,
                zsystem=zsystem,
                tip_threshold=tip_threshold,
                elastic_tol=elastic_tol,
                elastic_max_iter=elastic_max_iter,
            )
        except NoConvergence as e:
            raise NoConvergence(e.iters, e.residual, f"step {n}: {e}") from e
        tips.append((state.t, *state.tip))
        if n % record_every == 0:
            snapshots.append(state)
        if progress is not None:
            progress(n, state)

    return Trajectory(
        params=params,
        scenario=scenario,
        bc=bc,
        grid=grid,
        snapshots=snapshots,
        tip_series=np.array(tips),
        notch_length=notch_length,
        record_every=record_every,
        tip_threshold=tip_threshold,
    )


def total_energy(z: ScalarField, u: ScalarField, gamma: ToughnessField, p: ModelParams) -> float:
    """Discrete total energy (elastic + surface) at fixed boundary data.

    Uses the same face-based gradient energy whose first variation is the
    implicit diffusion operator, so a pure semi-implicit z-update should
    not increase this quantity.
    """
    grid = z.grid
    dA = grid.dx * grid.dy
    d1, d2 = gradient(u.values, grid)
    e1 = 0.5 * p.mu * float(np.sum((1.0 - z.values) ** 2 * (d1**2 + d2**2))) * dA

    gx, gy = _face_means(gamma.values)
    zv = z.values
    grad_quad = float(np.sum(gx * (zv[1:, :] - zv[:-1, :]) ** 2)) + float(
        np.sum(gy * (zv[:, 1:] - zv[:, :-1]) ** 2)
    )
    if p.variant == AT2:
        e2 = 0.5 * p.epsilon * grad_quad + 0.5 / p.epsilon * float(
            np.sum(gamma.values * zv**2)
        ) * dA
    else:
        e2 = 0.375 * (p.epsilon * grad_quad + float(np.sum(gamma.values * zv)) * dA / p.epsilon)
    return e1 + e2
