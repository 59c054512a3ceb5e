"""Marked point pattern simulators for circular plots.

Every simulator takes a :class:`ProcessSpec` and a numpy ``Generator`` and
returns a :class:`SimulatedPlot`: trees whose stem disc reaches the 10 m
plot, ordered for detection, plus the true stem count and basal area of
trees centred in the plot.  Patterns whose stems cover the plot centre are
redrawn.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numba
import numpy as np
from scipy import optimize, special

from .detect import OrderedPlot, plot_from_arrays
from .errors import InfeasibleCountError, InvalidInputError, InvalidPlotError, OptimizationError

log = logging.getLogger(__name__)

PLOT_RADIUS = 10.0
DISC_WINDOW_RADIUS = 11.0
SQUARE_HALF = 20.0
MAX_PATTERN_ATTEMPTS = 1000
MAX_INSERT_ATTEMPTS = 10000
LGCP_SPACING = 0.25
GAMMA_MAX = 100.0


def task_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based stream for the task identified by ``key``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# Diameter distribution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DbhDistribution:
    shape: float
    scale: float  # cm

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise InvalidInputError("Weibull shape and scale must be positive")

    def mean(self) -> float:
        return self.scale * special.gamma(1.0 + 1.0 / self.shape)

    def mean_square(self) -> float:
        return self.scale**2 * special.gamma(1.0 + 2.0 / self.shape)

    def basal_area_per_ha(self, intensity: float) -> float:
        """Expected basal area (m^2/ha) at ``intensity`` stems per hectare."""
        return intensity * math.pi * self.mean_square() / 40000.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.scale * rng.weibull(self.shape, n)


def _weibull_objective(x, D, msq):
    g, b = np.exp(x)
    return abs(b * special.gamma(1 + 1 / g) - D) + abs(b * b * special.gamma(1 + 2 / g) - msq)


def recover_weibull(D: float, G: float, N: float) -> DbhDistribution:
    """Weibull diameter law whose mean is ``D`` (cm) and whose basal area at
    ``N`` stems/ha is ``G`` (m^2/ha), as closely as the sum of absolute
    moment errors allows.

    When the implied quadratic mean diameter is below ``D`` no Weibull law
    fits both; the optimum then drifts to ever larger shapes, which are
    capped at ``GAMMA_MAX``.
    """
    if not (D > 0 and G > 0 and N > 0):
        raise InvalidInputError("D, G and N must be positive")
    msq = G / (N * math.pi / 40000.0)
    bounds = [(math.log(0.2), math.log(GAMMA_MAX)), (math.log(D / 10), math.log(D * 10))]
    best = None
    for g0 in (1.5, 3.0, 8.0, 30.0):
        b0 = math.sqrt(msq / special.gamma(1 + 2 / g0))
        x0 = np.clip([math.log(g0), math.log(b0)], [lo for lo, _ in bounds], [hi for _, hi in bounds])
        res = optimize.minimize(
            _weibull_objective,
            x0,
            args=(D, msq),
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-10, "fatol": 1e-8, "maxiter": 20000, "maxfev": 40000},
        )
        if np.all(np.isfinite(res.x)) and np.isfinite(res.fun):
            if best is None or res.fun < best.fun:
                best = res
    if best is None:
        raise OptimizationError(f"no Weibull fit for D={D}, G={G}, N={N}")
    g, b = np.exp(best.x)
    return DbhDistribution(float(g), float(b))


# ---------------------------------------------------------------------------
# Process description
# ---------------------------------------------------------------------------


class Variant(Enum):
    POISSON = "poisson"
    NONOVERLAPPING = "nonoverlapping"
    GIBBS = "gibbs"
    LGCP = "lgcp"


@dataclass(frozen=True)
class ProcessSpec:
    variant: Variant
    intensity: float  # stems per hectare
    dbh: DbhDistribution
    hardcore: float = 0.0  # metres, Gibbs only
    range: float = 0.0  # metres, LGCP only
    variance: float = 1.0  # LGCP field variance
    smoothness: float = 2.0
    scaling: str = "sqrt2nu"  # how LGCP range divides distance, see matern()

    def __post_init__(self):
        if not self.intensity > 0:
            raise InvalidInputError("intensity must be positive")
        if self.variant is Variant.GIBBS and not self.hardcore > 0:
            raise InvalidInputError("hard-core distance must be positive")
        if self.variant is Variant.LGCP and not self.range > 0:
            raise InvalidInputError("covariance range must be positive")
        if self.variance < 0:
            raise InvalidInputError("field variance must be non-negative")
        if self.scaling not in MATERN_SCALINGS:
            raise InvalidInputError(f"unknown Matérn scaling {self.scaling!r}")

    @property
    def window_area(self) -> float:
        """Simulation window area in square metres."""
        if self.variant in (Variant.POISSON, Variant.NONOVERLAPPING):
            return math.pi * DISC_WINDOW_RADIUS**2
        return (2 * SQUARE_HALF) ** 2

    @property
    def expected_count(self) -> float:
        return self.intensity * self.window_area / 10000.0


@dataclass
class SimulatedPlot:
    plot: OrderedPlot
    true_n: int
    true_g: float  # m^2 in the plot
    spec: Optional[ProcessSpec] = None
    attempts: int = 1
    drawn: int = 0
    truncated: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def points_in_window(self) -> np.ndarray:
        """Centres of trees inside the plot, as an ``(n, 2)`` array."""
        m = self.plot.in_window
        return np.column_stack([self.plot.x[m], self.plot.y[m]])


def crop_to_plot(x, y, dbh, R: float = PLOT_RADIUS) -> Optional[SimulatedPlot]:
    """Keep trees whose disc reaches the plot; ``None`` if a stem covers the centre."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dbh = np.asarray(dbh, dtype=float)
    rho = dbh / 200.0
    r = np.hypot(x, y)
    if np.any(r <= rho):
        return None
    keep = r - rho <= R
    plot = plot_from_arrays(x[keep], y[keep], dbh[keep], R)
    inside = plot.in_window
    g = float(np.sum(math.pi * plot.dbh[inside] ** 2 / 40000.0))
    return SimulatedPlot(plot=plot, true_n=int(inside.sum()), true_g=g)


# ---------------------------------------------------------------------------
# Location samplers
# ---------------------------------------------------------------------------


def _uniform_disc(rng, n, radius):
    r = radius * np.sqrt(rng.random(n))
    a = rng.random(n) * 2.0 * math.pi
    return r * np.cos(a), r * np.sin(a)


def _poisson_pattern(spec, rng):
    n = int(rng.poisson(spec.expected_count))
    x, y = _uniform_disc(rng, n, DISC_WINDOW_RADIUS)
    return x, y, spec.dbh.sample(rng, n), n, False


def _nonoverlapping_pattern(spec, rng, batch=64):
    n = int(rng.poisson(spec.expected_count))
    dbh = spec.dbh.sample(rng, n)
    rho = dbh / 200.0
    xs = np.empty(n)
    ys = np.empty(n)
    k = 0
    truncated = False
    for i in range(n):
        placed = False
        tries = 0
        while tries < MAX_INSERT_ATTEMPTS and not placed:
            m = min(batch, MAX_INSERT_ATTEMPTS - tries)
            cx, cy = _uniform_disc(rng, m, DISC_WINDOW_RADIUS)
            if k:
                gap = np.hypot(cx[:, None] - xs[:k], cy[:, None] - ys[:k]) - rho[:k] - rho[i]
                ok = np.flatnonzero((gap >= 0).all(axis=1))
            else:
                ok = np.arange(m)
            if ok.size:
                xs[k], ys[k] = cx[ok[0]], cy[ok[0]]
                rho[k] = rho[i]
                dbh[k] = dbh[i]
                k += 1
                placed = True
                tries += int(ok[0]) + 1
            else:
                tries += m
        if not placed:
            truncated = True
            log.info("nonoverlapping insertion stopped after %d of %d points", k, n)
            break
    return xs[:k], ys[:k], dbh[:k], n, truncated


# ---- hard core -------------------------------------------------------------


def _triangular_lattice(pitch, half):
    """Triangular lattice of the given pitch, centred in the square ``[-half, half]^2``."""
    dy = pitch * math.sqrt(3.0) / 2.0
    rows = int(math.floor(2 * half / dy + 1e-9)) + 1
    y0 = -0.5 * (rows - 1) * dy
    pts = []
    for i in range(rows):
        shift = 0.5 * pitch if i % 2 else 0.0
        cols = int(math.floor((2 * half - shift) / pitch + 1e-9)) + 1
        x0 = -half + shift + 0.5 * (2 * half - shift - (cols - 1) * pitch)
        xs = x0 + pitch * np.arange(cols)
        pts.append(np.column_stack([xs, np.full(cols, y0 + i * dy)]))
    return np.vstack(pts)


def lattice_capacity(h: float, half: float = SQUARE_HALF) -> int:
    return _triangular_lattice(h, half).shape[0]


def _initial_hardcore(rng, n, h, half):
    """Random subset of a jittered triangular lattice with spacing >= h."""
    if n > lattice_capacity(h, half):
        raise InfeasibleCountError(f"{n} points with hard core {h} m do not fit the window")
    lo, hi = h, 2.0 * half
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if lattice_capacity(mid, half) >= n:
            lo = mid
        else:
            hi = mid
    pitch = lo
    lat = _triangular_lattice(pitch, half)
    pick = rng.choice(lat.shape[0], size=n, replace=False)
    pts = lat[np.sort(pick)]
    jitter = 0.5 * (pitch - h)
    if jitter > 0:
        ang = rng.random(n) * 2 * math.pi
        rad = jitter * np.sqrt(rng.random(n))
        pts = pts + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        pts = np.clip(pts, -half, half)
    return np.ascontiguousarray(pts)


@numba.njit(cache=True)
def _mh_hardcore(pts, h, half, idx, mix, ua, ub, ga, gb):
    n = pts.shape[0]
    nc = max(1, int(2.0 * half / h))
    cs = 2.0 * half / nc
    cap = 16
    cells = np.empty((nc, nc, cap), dtype=np.int64)
    count = np.zeros((nc, nc), dtype=np.int64)
    where = np.empty((n, 2), dtype=np.int64)
    for i in range(n):
        cx = min(int((pts[i, 0] + half) / cs), nc - 1)
        cy = min(int((pts[i, 1] + half) / cs), nc - 1)
        cells[cx, cy, count[cx, cy]] = i
        count[cx, cy] += 1
        where[i, 0] = cx
        where[i, 1] = cy
    h2 = h * h
    accepted = 0
    for t in range(idx.shape[0]):
        i = idx[t]
        if mix[t] < 0.5:
            nx = -half + 2.0 * half * ua[t]
            ny = -half + 2.0 * half * ub[t]
        else:
            nx = pts[i, 0] + 0.5 * h * ga[t]
            ny = pts[i, 1] + 0.5 * h * gb[t]
            if nx < -half or nx > half or ny < -half or ny > half:
                continue
        cx = min(int((nx + half) / cs), nc - 1)
        cy = min(int((ny + half) / cs), nc - 1)
        ok = True
        for ax in range(max(cx - 1, 0), min(cx + 2, nc)):
            if not ok:
                break
            for ay in range(max(cy - 1, 0), min(cy + 2, nc)):
                for k in range(count[ax, ay]):
                    j = cells[ax, ay, k]
                    if j == i:
                        continue
                    dx = pts[j, 0] - nx
                    dy = pts[j, 1] - ny
                    if dx * dx + dy * dy < h2:
                        ok = False
                        break
                if not ok:
                    break
        if not ok:
            continue
        ox, oy = where[i, 0], where[i, 1]
        if ox != cx or oy != cy:
            if count[cx, cy] >= cap:
                continue
            for k in range(count[ox, oy]):
                if cells[ox, oy, k] == i:
                    count[ox, oy] -= 1
                    cells[ox, oy, k] = cells[ox, oy, count[ox, oy]]
                    break
            cells[cx, cy, count[cx, cy]] = i
            count[cx, cy] += 1
            where[i, 0] = cx
            where[i, 1] = cy
        pts[i, 0] = nx
        pts[i, 1] = ny
        accepted += 1
    return accepted


def hardcore_points(rng, n, h, half=SQUARE_HALF, sweeps=2000, chunk=200_000):
    """``n`` points in ``[-half, half]^2`` with pairwise distance at least ``h``,
    after ``sweeps * n`` Metropolis-Hastings relocation proposals."""
    pts = _initial_hardcore(rng, n, h, half)
    if n < 1:
        return pts
    total = sweeps * n
    done = 0
    while done < total:
        m = min(chunk, total - done)
        _mh_hardcore(
            pts,
            float(h),
            float(half),
            rng.integers(0, n, m),
            rng.random(m),
            rng.random(m),
            rng.random(m),
            rng.standard_normal(m),
            rng.standard_normal(m),
        )
        done += m
    return pts


def _gibbs_pattern(spec, rng):
    # counts that cannot be packed are redrawn, so the count is Poisson
    # conditioned on fitting the window
    mean = spec.intensity * (2 * SQUARE_HALF) ** 2 / 10000.0
    cap = lattice_capacity(spec.hardcore)
    for _ in range(MAX_PATTERN_ATTEMPTS):
        n = int(rng.poisson(mean))
        if n <= cap:
            break
    else:
        raise InfeasibleCountError(f"Poisson counts around {mean:.0f} exceed the packing limit {cap}")
    pts = hardcore_points(rng, n, spec.hardcore)
    return pts[:, 0], pts[:, 1], spec.dbh.sample(rng, n), n, False


# ---- log-Gaussian field ------------------------------------------------------


MATERN_SCALINGS = ("sqrt2nu", "plain")


def matern(h, scale, variance=1.0, nu=2.0, scaling="sqrt2nu"):
    """Matérn covariance with smoothness ``nu`` and distance scale ``scale``.

    With ``scaling="sqrt2nu"`` the Bessel argument is ``sqrt(2 nu) h / scale``
    (the form used by common geostatistics packages); ``"plain"`` uses
    ``h / scale``.
    """
    h = np.asarray(h, dtype=float)
    u = h / scale
    if scaling == "sqrt2nu":
        u = u * math.sqrt(2.0 * nu)
    with np.errstate(invalid="ignore"):
        c = variance * 2.0 ** (1 - nu) / special.gamma(nu) * u**nu * special.kv(nu, u)
    return np.where(u > 0, c, variance)


@functools.lru_cache(maxsize=16)
def _embedding_sqrt_eigs(n, spacing, scale, variance, nu, scaling):
    """Square roots of circulant eigenvalues for an ``n x n`` grid."""
    for pad in (2, 3, 4, 6, 8):
        m = pad * n
        k = np.minimum(np.arange(m), m - np.arange(m)) * spacing
        dist = np.hypot(k[:, None], k[None, :])
        lam = np.real(np.fft.fft2(matern(dist, scale, variance, nu, scaling)))
        if lam.min() >= -1e-8 * lam.max():
            return np.sqrt(np.maximum(lam, 0.0) / (m * m))
    log.warning(
        "circulant embedding not positive definite for scale %g; clipping %d negative eigenvalues",
        scale,
        int(np.sum(lam < 0)),
    )
    return np.sqrt(np.maximum(lam, 0.0) / (m * m))


def gaussian_field(rng, n, spacing, scale, variance=1.0, nu=2.0, scaling="sqrt2nu"):
    """Stationary zero-mean Gaussian field with Matérn covariance on an ``n x n`` grid."""
    if variance == 0:
        return np.zeros((n, n))
    s = _embedding_sqrt_eigs(n, spacing, float(scale), float(variance), float(nu), scaling)
    m = s.shape[0]
    w = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    z = np.fft.fft2(s * w)
    return np.real(z[:n, :n])


def _lgcp_pattern(spec, rng):
    cells = int(round(2 * SQUARE_HALF / LGCP_SPACING))
    z = gaussian_field(
        rng, cells, LGCP_SPACING, spec.range, spec.variance, spec.smoothness, spec.scaling
    )
    dens = np.exp(z - z.max()).ravel()
    n = int(rng.poisson(spec.intensity * (2 * SQUARE_HALF) ** 2 / 10000.0))
    counts = rng.multinomial(n, dens / dens.sum())
    cell = np.repeat(np.arange(dens.size), counts)
    ix, iy = np.divmod(cell, cells)
    x = -SQUARE_HALF + (ix + rng.random(n)) * LGCP_SPACING
    y = -SQUARE_HALF + (iy + rng.random(n)) * LGCP_SPACING
    return x, y, spec.dbh.sample(rng, n), n, False


_PATTERNS = {
    Variant.POISSON: _poisson_pattern,
    Variant.NONOVERLAPPING: _nonoverlapping_pattern,
    Variant.GIBBS: _gibbs_pattern,
    Variant.LGCP: _lgcp_pattern,
}


def simulate(spec: ProcessSpec, rng: np.random.Generator, R: float = PLOT_RADIUS) -> SimulatedPlot:
    """Draw patterns until no stem covers the plot centre, then crop."""
    make = _PATTERNS[spec.variant]
    for attempt in range(1, MAX_PATTERN_ATTEMPTS + 1):
        x, y, dbh, drawn, truncated = make(spec, rng)
        out = crop_to_plot(x, y, dbh, R)
        if out is not None:
            out.spec = spec
            out.attempts = attempt
            out.drawn = drawn
            out.truncated = truncated
            return out
    raise InvalidPlotError(f"plot centre covered in {MAX_PATTERN_ATTEMPTS} consecutive patterns")


def simulate_poisson(spec, rng):
    return simulate(_require(spec, Variant.POISSON), rng)


def simulate_nonoverlapping(spec, rng):
    return simulate(_require(spec, Variant.NONOVERLAPPING), rng)


def simulate_gibbs_hardcore(spec, rng):
    return simulate(_require(spec, Variant.GIBBS), rng)


def simulate_lgcp(spec, rng):
    return simulate(_require(spec, Variant.LGCP), rng)


def _require(spec, variant):
    if spec.variant is not variant:
        raise InvalidInputError(f"expected a {variant.value} process, got {spec.variant.value}")
    return spec
