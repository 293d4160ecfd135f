"""Grid, field containers, model parameters and the surfing boundary condition.

Everything is dimensionless.  Fields live at cell centers of a uniform
square mesh on the rectangle (0, L) x (0, H); boundary data enters through
ghost values, never through stored nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NonIntegralDivision

AT1 = "AT1"
AT2 = "AT2"


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centered rectangular mesh.

    Cell (i, j) has its center at ((i + 1/2) dx, (j + 1/2) dy),
    i = 0..n1-1, j = 0..n2-1.
    """

    L: float
    H: float
    dx: float
    dy: float
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 4 or self.n2 < 4:
            raise ValueError(f"need at least 4 cells per direction, got {self.n1}x{self.n2}")
        if abs(self.dx - self.dy) > 1e-12:
            raise ValueError("mesh must be square (dx == dy)")
        if abs(self.n1 * self.dx - self.L) > 1e-12 or abs(self.n2 * self.dy - self.H) > 1e-12:
            raise ValueError("cell counts and spacings do not tile the domain")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    def x1_centers(self) -> np.ndarray:
        return (np.arange(self.n1) + 0.5) * self.dx

    def x2_centers(self) -> np.ndarray:
        return (np.arange(self.n2) + 0.5) * self.dy

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (indexing='ij') of cell-center coordinates."""
        return np.meshgrid(self.x1_centers(), self.x2_centers(), indexing="ij")


def make_grid(L: float, H: float, dx: float) -> GridSpec:
    """Build a GridSpec, requiring L/dx and H/dx to be integers (within 1e-9)."""
    if L <= 0 or H <= 0 or dx <= 0:
        raise ValueError("L, H, dx must be positive")
    r1, r2 = L / dx, H / dx
    if abs(r1 - round(r1)) > 1e-9 or abs(r2 - round(r2)) > 1e-9:
        raise NonIntegralDivision(f"L/dx={r1}, H/dx={r2} are not near-integral")
    return GridSpec(L=L, H=H, dx=dx, dy=dx, n1=int(round(r1)), n2=int(round(r2)))


@dataclass(frozen=True)
class ScalarField:
    """Cell-centered scalar field (used for u, z, toughness, energy densities).

    Snapshots are immutable by convention: construct a new field instead of
    mutating ``values`` after the field has been handed out.
    """

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


# The pre-plus right-hand side of the crack evolution is just another
# cell-centered field; it shares the container.
RhsField = ScalarField


@dataclass(frozen=True)
class ModelParams:
    """Phase-field model parameters shared by both surface-energy variants.

    eta is the residual stiffness floor keeping the degraded elastic
    coefficient (1-z)^2 bounded away from zero.
    """

    variant: str = AT2
    epsilon: float = 0.02
    mu: float = 1.0
    alpha2: float = 1e-3
    dt: float = 1e-2
    eta: float = 1e-6
    z_clamp: bool = True

    def __post_init__(self):
        if self.variant not in (AT1, AT2):
            raise ValueError(f"variant must be {AT1!r} or {AT2!r}, got {self.variant!r}")
        if min(self.epsilon, self.mu, self.alpha2, self.dt) <= 0:
            raise ValueError("epsilon, mu, alpha2, dt must be positive")
        if not 0 <= self.eta < 1e-2:
            raise ValueError("eta must satisfy 0 <= eta << 1")

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class SurfingBC:
    """Translating antisymmetric boundary displacement.

    g(x, t) = (A/2) (1 - tanh((x1 - v t)/d)) sign(x2 - H/2)
    """

    A: float
    v: float = 1.0
    d: float = 0.5

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("ramp width d must be positive")
        if self.v < 0:
            raise ValueError("loading speed v must be non-negative")


def surfing_displacement(bc: SurfingBC, x1, x2, H: float, t: float):
    """Evaluate the surfing displacement g at (x1, x2) and time t.

    sign(0) := 0, so a point exactly on the midline gets zero displacement.
    Accepts scalars or arrays (broadcasting).
    """
    ramp = 0.5 * bc.A * (1.0 - np.tanh((np.asarray(x1, dtype=float) - bc.v * t) / bc.d))
    out = ramp * np.sign(np.asarray(x2, dtype=float) - 0.5 * H)
    return out if out.ndim else float(out)


def bilinear_sample(f: ScalarField, x: tuple[float, float]) -> float:
    """Bilinear interpolation of a cell-centered field at point x.

    Points outside the hull of cell centers are clamped onto it, so the
    returned value is constant in the half-cell boundary margin.
    """
    g = f.grid
    x1 = min(max(float(x[0]), 0.5 * g.dx), g.L - 0.5 * g.dx)
    x2 = min(max(float(x[1]), 0.5 * g.dy), g.H - 0.5 * g.dy)
    s = x1 / g.dx - 0.5
    r = x2 / g.dy - 0.5
    i0 = min(int(np.floor(s)), g.n1 - 2)
    j0 = min(int(np.floor(r)), g.n2 - 2)
    ws = s - i0
    wr = r - j0
    v = f.values
    return float(
        (1 - ws) * (1 - wr) * v[i0, j0]
        + ws * (1 - wr) * v[i0 + 1, j0]
        + (1 - ws) * wr * v[i0, j0 + 1]
        + ws * wr * v[i0 + 1, j0 + 1]
    )


def gradient(values: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Cell-centered gradient: centered differences inside, one-sided at edges.

    This is the one discrete gradient shared by the strain-energy density,
    the crack driving force and the boundary-contour integrands.
    """
    d1 = np.gradient(values, grid.dx, axis=0, edge_order=1)
    d2 = np.gradient(values, grid.dy, axis=1, edge_order=1)
    return d1, d2


@dataclass(frozen=True)
class SimState:
    """One snapshot of the coupled simulation: time, crack field, displacement, tip."""

    t: float
    z: ScalarField
    u: ScalarField
    tip: tuple[float, float]

    def __post_init__(self):
        g = self.z.grid
        x1, x2 = self.tip
        if not (0.0 <= x1 <= g.L and 0.0 <= x2 <= g.H):
            raise ValueError(f"tip {self.tip} outside the domain")
