"""Inverse estimation of the toughness field from recorded crack data.

Pipeline: sample space-time points away from (or right at) the crack,
fit local tensor-product Chebyshev polynomials to z and u around each
point, turn the fitted derivatives into regression pairs

    Y = alpha2 dZ/dt - mu |grad U|^2 (1 - Z)
    X = eps lap Z - Z/eps                      (AT2)
    X = (3/4) eps lap Z - 3/(8 eps)            (AT1)

and recover the toughness values as slopes of Y = gamma X, either by a
single through-origin regression (k = 1) or by the modified k-means that
clusters points by slope (k >= 2).  Spatial positions of each class locate
the inclusions.

SlopeKMeans and ToughnessEstimator expose the same machinery through the
scikit-learn estimator API (get_params / fit / predict).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import chebyshev as C
from sklearn.base import BaseEstimator

from .errors import Degenerate, EmptyWindow, RankDeficient, TipOutOfDomain
from .grid import AT1, AT2, ModelParams
from .evolution import Trajectory

# Relative floor on |X| below which a point's slope Y/X is meaningless;
# used only when scanning for the initial slope range.
X_FLOOR_REL = 1e-6


@dataclass(frozen=True)
class SamplePoint:
    """Interpolated field data at one space-time sample."""

    x: tuple[float, float]
    t: float
    Z: float
    Zt: float
    Zx1: float
    Zx2: float
    Zlap: float
    GradU2: float


@dataclass
class XYPoint:
    """One regression pair, with its source sample and (optional) class."""

    X: float
    Y: float
    origin: SamplePoint
    class_label: int | None = None


@dataclass
class EstimationReport:
    """Outcome of the toughness estimation."""

    k: int
    gamma_hat: np.ndarray            # ascending
    assignments: np.ndarray          # class per point, aligned with points
    spatial_map: dict                # class -> (m, 2) array of positions
    iterations: int
    restarts_used: int
    inertia: float
    points: list = field(default_factory=list)
    intercept_diagnostic: dict = field(default_factory=dict)

    def __post_init__(self):
        self.gamma_hat = np.asarray(self.gamma_hat, dtype=float)


# ---------------------------------------------------------------------------
# sampling


def sample_uncracked(traj: Trajectory, n0: int, n1: int, Nx1: int, Nx2: int):
    """Tensor sampling of the region ahead of the crack, per step in [n0, n1).

    Points are snapped to cell centers and de-duplicated within each step,
    so at most (n1 - n0) * Nx1 * Nx2 points come back.
    """
    if not 0 <= n0 < n1 <= traj.n_steps:
        raise ValueError(f"need 0 <= n0 < n1 <= {traj.n_steps}, got [{n0}, {n1})")
    if Nx1 < 2 or Nx2 < 2:
        raise ValueError("Nx1 and Nx2 must be at least 2")
    g = traj.grid
    x1c, x2c = g.x1_centers(), g.x2_centers()
    out = []
    for n in range(n0, n1):
        tip_x1 = traj.tip_series[n, 1]
        if tip_x1 >= g.L:
            raise EmptyWindow(f"crack tip at x1={tip_x1} leaves no region to sample at step {n}")
        ii = np.clip(np.round(np.linspace(tip_x1, g.L, Nx1) / g.dx - 0.5).astype(int), 0, g.n1 - 1)
        jj = np.clip(np.round(np.linspace(0.0, g.H, Nx2) / g.dy - 0.5).astype(int), 0, g.n2 - 1)
        t = n * traj.params.dt
        seen = set()
        for i in ii:
            for j in jj:
                if (i, j) in seen:
                    continue
                seen.add((i, j))
                out.append(((x1c[i], x2c[j]), t))
    return out


def sample_near_tip(traj: Trajectory, n0: int, n1: int):
    """The four cell centers in [x_tip, x_tip+dx] x [x2_tip, x2_tip+dy], per step."""
    if not 0 <= n0 < n1 <= traj.n_steps:
        raise ValueError(f"need 0 <= n0 < n1 <= {traj.n_steps}, got [{n0}, {n1})")
    g = traj.grid
    x1c, x2c = g.x1_centers(), g.x2_centers()
    out = []
    for n in range(n0, n1):
        tx1, tx2 = traj.tip_series[n, 1], traj.tip_series[n, 2]
        i = int(np.clip(round(tx1 / g.dx - 0.5), 0, g.n1 - 1))
        j = int(np.clip(round(tx2 / g.dy - 0.5), 0, g.n2 - 1))
        if i + 1 >= g.n1 or j + 1 >= g.n2:
            raise TipOutOfDomain(f"near-tip window at step {n} exits the domain (tip {tx1, tx2})")
        t = n * traj.params.dt
        for di in (0, 1):
            for dj in (0, 1):
                out.append(((x1c[i + di], x2c[j + dj]), t))
    return out


# ---------------------------------------------------------------------------
# local tensor-Chebyshev fits


def _window_start(center: int, width: int, total: int) -> int:
    return max(0, min(center - width // 2, total - width))


class PolyFit:
    """Least-squares tensor Chebyshev fit of z and u on a space-time window.

    Coefficient axes are ordered (x1, x2, t); evaluation defaults to the
    window's anchor point.  Derivatives are exact derivatives of the fitted
    polynomial.
    """

    def __init__(self, coef: dict, lows: tuple, spans: tuple, point):
        self.coef = coef
        self.lows = lows
        self.spans = spans
        self.point = point  # ((x1, x2), t)

    def _local(self, x=None, t=None):
        (px1, px2), pt = self.point
        x1 = px1 if x is None else x[0]
        x2 = px2 if x is None else x[1]
        tt = pt if t is None else t
        s = []
        for val, lo, span in zip((x1, x2, tt), self.lows, self.spans):
            s.append(2.0 * (val - lo) / span - 1.0 if span > 0 else 0.0)
        return s

    def value(self, name: str, x=None, t=None) -> float:
        s1, s2, s3 = self._local(x, t)
        return float(C.chebval3d(s1, s2, s3, self.coef[name]))

    def derivative(self, name: str, axis: int, order: int = 1, x=None, t=None) -> float:
        scl = 2.0 / self.spans[axis]
        c = C.chebder(self.coef[name], m=order, scl=scl, axis=axis)
        s1, s2, s3 = self._local(x, t)
        return float(C.chebval3d(s1, s2, s3, c))

    def laplacian(self, name: str, x=None, t=None) -> float:
        return self.derivative(name, 0, 2, x, t) + self.derivative(name, 1, 2, x, t)


class _LocalFitter:
    """Shared state for many local fits over one trajectory."""

    def __init__(self, traj: Trajectory, degree: int = 7, window=(9, 9, 9)):
        self.traj = traj
        self.degree = degree
        self.window = tuple(window)
        self.times = traj.times
        self._pinv_cache: dict[int, np.ndarray] = {}

    def _pinv(self, n_nodes: int) -> np.ndarray:
        p = self._pinv_cache.get(n_nodes)
        if p is None:
            s = np.linspace(-1.0, 1.0, n_nodes) if n_nodes > 1 else np.zeros(1)
            v = C.chebvander(s, self.degree)
            p = np.linalg.pinv(v)
            self._pinv_cache[n_nodes] = p
        return p

    def _axis_nodes(self, center: int, want: int, total: int):
        """Window start and length along one axis, auto-enlarging once if short."""
        n = min(want, total)
        if n < self.degree + 1:
            n = min(2 * want, total)
            if n < self.degree + 1:
                raise RankDeficient(
                    f"axis offers {n} samples for {self.degree + 1} coefficients"
                )
        return _window_start(center, n, total), n

    def fit(self, p) -> PolyFit:
        (x1, x2), t = p
        traj, g = self.traj, self.traj.grid
        i_c = int(np.clip(round(x1 / g.dx - 0.5), 0, g.n1 - 1))
        j_c = int(np.clip(round(x2 / g.dy - 0.5), 0, g.n2 - 1))
        m_c = int(np.argmin(np.abs(self.times - t)))

        i0, ni = self._axis_nodes(i_c, self.window[0], g.n1)
        j0, nj = self._axis_nodes(j_c, self.window[1], g.n2)
        m0, nm = self._axis_nodes(m_c, self.window[2], len(self.times))

        zb = np.empty((ni, nj, nm))
        ub = np.empty((ni, nj, nm))
        for a in range(nm):
            snap = traj.snapshots[m0 + a]
            zb[:, :, a] = snap.z.values[i0 : i0 + ni, j0 : j0 + nj]
            ub[:, :, a] = snap.u.values[i0 : i0 + ni, j0 : j0 + nj]

        p1, p2, p3 = self._pinv(ni), self._pinv(nj), self._pinv(nm)
        coef = {
            "z": np.einsum("ai,bj,ck,ijk->abc", p1, p2, p3, zb, optimize=True),
            "u": np.einsum("ai,bj,ck,ijk->abc", p1, p2, p3, ub, optimize=True),
        }
        x1c, x2c = g.x1_centers(), g.x2_centers()
        lows = (x1c[i0], x2c[j0], self.times[m0])
        spans = (
            x1c[i0 + ni - 1] - x1c[i0],
            x2c[j0 + nj - 1] - x2c[j0],
            self.times[m0 + nm - 1] - self.times[m0],
        )
        return PolyFit(coef, lows, spans, p)

    def sample_point(self, p) -> SamplePoint:
        f = self.fit(p)
        ux1 = f.derivative("u", 0)
        ux2 = f.derivative("u", 1)
        return SamplePoint(
            x=p[0],
            t=p[1],
            Z=f.value("z"),
            Zt=f.derivative("z", 2),
            Zx1=f.derivative("z", 0),
            Zx2=f.derivative("z", 1),
            Zlap=f.laplacian("z"),
            GradU2=ux1**2 + ux2**2,
        )


def fit_local_poly(traj: Trajectory, p, degree: int = 7, window=(9, 9, 9)) -> PolyFit:
    """Fit z and u on the window around p = ((x1, x2), t); see PolyFit."""
    return _LocalFitter(traj, degree, window).fit(p)


# ---------------------------------------------------------------------------
# regression pairs and slope clustering


def build_xy(samples, params: ModelParams):
    """Regression pairs for the model variant; dropped d(gamma)/dx terms stay
    available through each point's origin (Zx1, Zx2) for auditing."""
    eps, mu, a2 = params.epsilon, params.mu, params.alpha2
    out = []
    for s in samples:
        y = a2 * s.Zt - mu * s.GradU2 * (1.0 - s.Z)
        if params.variant == AT2:
            x = eps * s.Zlap - s.Z / eps
        else:
            x = 0.75 * eps * s.Zlap - 0.375 / eps
        out.append(XYPoint(X=x, Y=y, origin=s))
    return out


def _xy_arrays(points):
    x = np.array([p.X for p in points], dtype=float)
    y = np.array([p.Y for p in points], dtype=float)
    return x, y


def _regress_origin(x: np.ndarray, y: np.ndarray) -> float:
    sx2 = float(x @ x)
    if sx2 == 0.0:
        raise Degenerate("all regressors are zero; slope through origin undefined")
    return float(x @ y) / sx2


def regress_origin(points) -> float:
    """Least squares through the origin: gamma = sum(XY) / sum(X^2)."""
    x, y = _xy_arrays(points)
    return _regress_origin(x, y)


def _slope_kmeans_arrays(x, y, k, seed, max_iter=100, restarts=10, tol=1e-10):
    """Core slope k-means on arrays; returns (gammas, labels, iters, inertia).

    Start slopes are drawn uniformly between the smallest and largest
    per-point slope (guarded against X ~ 0); assignment minimizes
    (Y - gamma_m X)^2; the update is a through-origin regression per class;
    empty classes are re-seeded.  Best of `restarts` runs by total
    within-class distance.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    floor = X_FLOOR_REL * float(np.max(np.abs(x))) if x.size else 0.0
    usable = np.abs(x) > floor
    if not usable.any():
        raise Degenerate("all points have |X| at the floor; slopes are undefined")
    slopes = y[usable] / x[usable]
    g_min, g_max = float(slopes.min()), float(slopes.max())

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        gammas = rng.uniform(g_min, g_max, size=k)
        labels = np.zeros(x.size, dtype=int)
        iters = 0
        for iters in range(1, max_iter + 1):
            d = (y[None, :] - gammas[:, None] * x[None, :]) ** 2
            labels = np.argmin(d, axis=0)
            new = np.empty(k)
            for m in range(k):
                sel = labels == m
                sx2 = float(x[sel] @ x[sel]) if sel.any() else 0.0
                new[m] = float(x[sel] @ y[sel]) / sx2 if sx2 > 0 else rng.uniform(g_min, g_max)
            delta = float(np.max(np.abs(new - gammas)))
            gammas = new
            if delta < tol:
                break
        d = (y[None, :] - gammas[:, None] * x[None, :]) ** 2
        labels = np.argmin(d, axis=0)
        inertia = float(np.sum(d[labels, np.arange(x.size)]))
        if best is None or inertia < best[3]:
            best = (gammas, labels, iters, inertia)
    gammas, labels, iters, inertia = best
    order = np.argsort(gammas)
    remap = np.empty(k, dtype=int)
    remap[order] = np.arange(k)
    return gammas[order], remap[labels], iters, inertia


def slope_kmeans(points, k: int, seed: int = 0, max_iter: int = 100, restarts: int = 10
                 ) -> EstimationReport:
    """Cluster regression pairs by slope and estimate gamma per class."""
    x, y = _xy_arrays(points)
    gammas, labels, iters, inertia = _slope_kmeans_arrays(
        x, y, k, seed, max_iter=max_iter, restarts=restarts
    )
    for p, m in zip(points, labels):
        p.class_label = int(m)
    return EstimationReport(
        k=k,
        gamma_hat=gammas,
        assignments=labels,
        spatial_map=_spatial_map(points, labels, k),
        iterations=iters,
        restarts_used=restarts,
        inertia=inertia,
        points=points,
        intercept_diagnostic=_intercepts(x, y, labels, k),
    )


def _spatial_map(points, labels, k):
    pos = np.array([p.origin.x for p in points]).reshape(-1, 2)
    return {m: pos[labels == m] for m in range(k)}


def _intercepts(x, y, labels, k):
    """Free-intercept fit per class.  Diagnostic only, never used for gamma."""
    out = {}
    for m in range(k):
        sel = labels == m
        if sel.sum() >= 2 and np.ptp(x[sel]) > 0:
            slope, intercept = np.polyfit(x[sel], y[sel], 1)
            out[m] = (float(slope), float(intercept))
    return out


# ---------------------------------------------------------------------------
# full pipeline


@dataclass(frozen=True)
class EstimationConfig:
    """Windows and knobs of the estimation pipeline."""

    n0: int = 100
    n1: int = 200
    nx1: int = 20
    nx2: int = 20
    k: int = 2
    seed: int = 0
    degree: int = 7
    window_cells: int = 9
    window_steps: int = 9
    restarts: int = 10
    max_iter: int = 100
    sampling: str = "auto"  # auto | uncracked | near_tip

    def __post_init__(self):
        if self.sampling not in ("auto", "uncracked", "near_tip"):
            raise ValueError(f"unknown sampling route {self.sampling!r}")
        if self.k < 1 or self.degree < 1:
            raise ValueError("k and degree must be positive")


def estimate(traj: Trajectory, cfg: EstimationConfig) -> EstimationReport:
    """Run the full inverse pipeline on a recorded trajectory.

    The sampling route follows the model variant unless forced: the AT2
    route samples the whole uncracked region, the AT1 route only the four
    cells around the tip (everywhere else its plus operator is active and
    the regression relation does not hold).
    """
    route = cfg.sampling
    if route == "auto":
        route = "uncracked" if traj.params.variant == AT2 else "near_tip"
    if route == "uncracked":
        raw = sample_uncracked(traj, cfg.n0, cfg.n1, cfg.nx1, cfg.nx2)
    else:
        raw = sample_near_tip(traj, cfg.n0, cfg.n1)

    fitter = _LocalFitter(
        traj, cfg.degree, (cfg.window_cells, cfg.window_cells, cfg.window_steps)
    )
    samples = [fitter.sample_point(p) for p in raw]
    points = build_xy(samples, traj.params)

    if cfg.k == 1:
        gamma = regress_origin(points)
        x, y = _xy_arrays(points)
        labels = np.zeros(len(points), dtype=int)
        for p in points:
            p.class_label = 0
        return EstimationReport(
            k=1,
            gamma_hat=np.array([gamma]),
            assignments=labels,
            spatial_map=_spatial_map(points, labels, 1),
            iterations=1,
            restarts_used=0,
            inertia=float(np.sum((y - gamma * x) ** 2)),
            points=points,
            intercept_diagnostic=_intercepts(x, y, labels, 1),
        )
    return slope_kmeans(points, cfg.k, seed=cfg.seed, max_iter=cfg.max_iter,
                        restarts=cfg.restarts)


# ---------------------------------------------------------------------------
# scikit-learn facade


def _check_pairs(X, y):
    x = np.asarray(X, dtype=float).reshape(-1)
    yy = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != yy.shape:
        raise ValueError(f"X and y disagree in length: {x.shape} vs {yy.shape}")
    if x.size == 0:
        raise ValueError("need at least one (X, Y) pair")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(yy))):
        raise ValueError("X and y must be finite")
    return x, yy


class SlopeKMeans(BaseEstimator):
    """k-means over through-origin slopes of (X, Y) pairs.

    Fitted attributes: slopes_ (ascending), labels_, inertia_, n_iter_.
    """

    def __init__(self, n_clusters=2, seed=0, max_iter=100, restarts=10):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter
        self.restarts = restarts

    def fit(self, X, y):
        x, yy = _check_pairs(X, y)
        slopes, labels, iters, inertia = _slope_kmeans_arrays(
            x, yy, self.n_clusters, self.seed,
            max_iter=self.max_iter, restarts=self.restarts,
        )
        self.slopes_ = slopes
        self.labels_ = labels
        self.n_iter_ = iters
        self.inertia_ = inertia
        return self

    def predict(self, X, y):
        x, yy = _check_pairs(X, y)
        d = (yy[None, :] - self.slopes_[:, None] * x[None, :]) ** 2
        return np.argmin(d, axis=0)

    def fit_predict(self, X, y):
        return self.fit(X, y).labels_


class ToughnessEstimator(BaseEstimator):
    """Estimate toughness values and inclusion positions from a trajectory.

    fit(trajectory) runs the full pipeline; fitted attributes are
    gamma_hat_, labels_ and report_.
    """

    def __init__(self, k=2, n0=100, n1=200, nx1=20, nx2=20, degree=7,
                 window_cells=9, window_steps=9, seed=0, restarts=10,
                 max_iter=100, sampling="auto"):
        self.k = k
        self.n0 = n0
        self.n1 = n1
        self.nx1 = nx1
        self.nx2 = nx2
        self.degree = degree
        self.window_cells = window_cells
        self.window_steps = window_steps
        self.seed = seed
        self.restarts = restarts
        self.max_iter = max_iter
        self.sampling = sampling

    def _config(self) -> EstimationConfig:
        return EstimationConfig(
            n0=self.n0, n1=self.n1, nx1=self.nx1, nx2=self.nx2, k=self.k,
            seed=self.seed, degree=self.degree, window_cells=self.window_cells,
            window_steps=self.window_steps, restarts=self.restarts,
            max_iter=self.max_iter, sampling=self.sampling,
        )

    def fit(self, trajectory: Trajectory, y=None):
        report = estimate(trajectory, self._config())
        self.report_ = report
        self.gamma_hat_ = report.gamma_hat
        self.labels_ = report.assignments
        return self
