"""Planar occlusion geometry seen from a scanner at the origin.

A stem disc casts a *shadow*: the closed set of points ``p`` for which the
segment ``[o, p]`` meets the disc.  The shadow is convex, bounded by the
front arc of the disc and the two tangent rays from the origin, and it is
closed under outward radial scaling.  The complement of any union of
shadows (the visible region) is therefore star-shaped about the origin.

Most routines work on a :class:`Shadows` container (a struct of arrays) so
they vectorise over many shadows at once; the single-object types
:class:`StemDisc` and :class:`ShadowSet` are thin conveniences on top.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import InvalidInputError

TWO_PI = 2.0 * math.pi

# Coverage gaps smaller than this (radians) are treated as rounding noise.
COVER_GAP_TOL = 1e-9


@dataclass(frozen=True)
class PlanePoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidInputError(f"non-finite coordinates ({self.x}, {self.y})")

    @property
    def r(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class StemDisc:
    center: PlanePoint
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidInputError(f"disc radius must be positive, got {self.radius}")
        if not self.center.r > self.radius:
            raise InvalidInputError(
                f"disc at ({self.center.x}, {self.center.y}) with radius "
                f"{self.radius} covers the origin"
            )


@dataclass(frozen=True)
class ShadowSet:
    """Shadow of one stem disc, with its polar summary cached."""

    occluder: StemDisc
    direction: float  # polar angle of the disc centre, in [0, 2pi)
    half_angle: float  # arcsin(radius / centre distance)
    near: float  # distance from the origin to the bark
    tangent: float  # distance from the origin to the tangent points


def shadow_of(disc: StemDisc) -> ShadowSet:
    """Build the shadow cast by ``disc``."""
    c = disc.center
    r = c.r
    if not r > disc.radius:
        raise InvalidInputError("disc covers the origin")
    return ShadowSet(
        occluder=disc,
        direction=math.atan2(c.y, c.x) % TWO_PI,
        half_angle=math.asin(disc.radius / r),
        near=r - disc.radius,
        tangent=math.sqrt(r * r - disc.radius * disc.radius),
    )


class Shadows:
    """Struct-of-arrays view of a list of shadows."""

    __slots__ = ("cx", "cy", "rho", "dist", "phi", "half", "near", "tangent")

    def __init__(self, cx, cy, rho):
        cx = np.asarray(cx, dtype=float).ravel()
        cy = np.asarray(cy, dtype=float).ravel()
        rho = np.asarray(rho, dtype=float).ravel()
        if not (cx.shape == cy.shape == rho.shape):
            raise InvalidInputError("shadow coordinate arrays differ in length")
        if not (np.all(np.isfinite(cx)) and np.all(np.isfinite(cy))):
            raise InvalidInputError("non-finite disc centre")
        if np.any(rho <= 0):
            raise InvalidInputError("disc radius must be positive")
        dist = np.hypot(cx, cy)
        if np.any(dist <= rho):
            raise InvalidInputError("a stem disc covers the origin")
        self.cx, self.cy, self.rho, self.dist = cx, cy, rho, dist
        self.phi = np.arctan2(cy, cx) % TWO_PI
        self.half = np.arcsin(rho / dist)
        self.near = dist - rho
        self.tangent = np.sqrt(dist * dist - rho * rho)

    def __len__(self):
        return self.cx.size

    def __getitem__(self, idx):
        out = Shadows.__new__(Shadows)
        for name in Shadows.__slots__:
            setattr(out, name, getattr(self, name)[idx])
        return out

    @classmethod
    def empty(cls):
        return cls(np.empty(0), np.empty(0), np.empty(0))


ShadowLike = Union[Shadows, Sequence[ShadowSet], Sequence[StemDisc]]


def as_shadows(shadows: ShadowLike) -> Shadows:
    if isinstance(shadows, Shadows):
        return shadows
    items = list(shadows)
    if not items:
        return Shadows.empty()
    discs = [s.occluder if isinstance(s, ShadowSet) else s for s in items]
    return Shadows(
        [d.center.x for d in discs], [d.center.y for d in discs], [d.radius for d in discs]
    )


class MorphKind(Enum):
    ERODE = "erode"
    IDENTITY = "identity"
    DILATE = "dilate"


@dataclass(frozen=True)
class MorphTransform:
    kind: MorphKind
    beta: float = 0.0

    def __post_init__(self):
        if self.beta < 0 or not math.isfinite(self.beta):
            raise InvalidInputError(f"morphological radius must be >= 0, got {self.beta}")
        if (self.beta == 0) != (self.kind is MorphKind.IDENTITY):
            raise InvalidInputError("beta == 0 is allowed only with the identity transform")

    @classmethod
    def identity(cls):
        return cls(MorphKind.IDENTITY, 0.0)

    @classmethod
    def dilate(cls, beta):
        return cls(MorphKind.DILATE, float(beta)) if beta > 0 else cls.identity()

    @classmethod
    def erode(cls, beta):
        return cls(MorphKind.ERODE, float(beta)) if beta > 0 else cls.identity()

    @classmethod
    def from_alpha(cls, alpha: float, stem_radius: float) -> "MorphTransform":
        """Transform used for a tree of stem radius ``stem_radius`` (m) at tuning ``alpha``."""
        beta = abs(alpha) * stem_radius
        if alpha > 0:
            return cls.dilate(beta)
        if alpha < 0:
            return cls.erode(beta)
        return cls.identity()


# ---------------------------------------------------------------------------
# Angular interval sets
# ---------------------------------------------------------------------------


def _split_arcs(center, halfwidth):
    """Arcs ``center +- halfwidth`` as non-wrapping [start, end] pairs in [0, 2pi].

    Returns arrays with twice the trailing length; the second half holds the
    part of an arc that wraps past 2pi (zero-length when there is none).
    """
    center = np.asarray(center, dtype=float)
    w = np.asarray(halfwidth, dtype=float)
    full = w >= math.pi
    s = np.mod(center - w, TWO_PI)
    e = s + 2.0 * w
    s1 = np.where(full, 0.0, s)
    e1 = np.where(full, TWO_PI, np.minimum(e, TWO_PI))
    e2 = np.where(full, 0.0, np.maximum(e - TWO_PI, 0.0))
    s2 = np.zeros_like(e2)
    return np.concatenate([s1, s2], axis=-1), np.concatenate([e1, e2], axis=-1)


def _union_measure(starts, ends):
    """Measure of the union of [start, end] intervals along the last axis."""
    if starts.shape[-1] == 0:
        return np.zeros(starts.shape[:-1])
    order = np.argsort(starts, axis=-1, kind="stable")
    s = np.take_along_axis(starts, order, -1)
    e = np.take_along_axis(ends, order, -1)
    run = np.maximum.accumulate(e, axis=-1)
    prev = np.concatenate([np.full(s.shape[:-1] + (1,), -np.inf), run[..., :-1]], axis=-1)
    return np.maximum(0.0, e - np.maximum(s, prev)).sum(axis=-1)


def _merge(starts, ends):
    starts = np.asarray(starts, dtype=float).ravel()
    ends = np.asarray(ends, dtype=float).ravel()
    keep = ends > starts
    starts, ends = starts[keep], ends[keep]
    if starts.size == 0:
        return np.empty((0, 2))
    order = np.argsort(starts, kind="stable")
    starts, ends = starts[order], ends[order]
    run = np.maximum.accumulate(ends)
    new = np.ones(starts.size, dtype=bool)
    new[1:] = starts[1:] > run[:-1]
    group = np.cumsum(new) - 1
    out_s = starts[new]
    out_e = np.zeros(out_s.size)
    np.maximum.at(out_e, group, ends)
    return np.column_stack([out_s, out_e])


class AngularIntervalSet:
    """Finite union of closed arcs on a circle, stored as sorted disjoint
    ``[start, end]`` rows inside ``[0, 2pi]``.  Arcs crossing angle 0 are
    kept as two rows."""

    __slots__ = ("intervals",)

    def __init__(self, intervals=None):
        if intervals is None:
            intervals = np.empty((0, 2))
        arr = np.asarray(intervals, dtype=float).reshape(-1, 2)
        self.intervals = _merge(np.clip(arr[:, 0], 0, TWO_PI), np.clip(arr[:, 1], 0, TWO_PI))

    @classmethod
    def empty(cls):
        return cls()

    @classmethod
    def full(cls):
        return cls([[0.0, TWO_PI]])

    @classmethod
    def from_arcs(cls, center, halfwidth):
        s, e = _split_arcs(np.atleast_1d(center), np.atleast_1d(halfwidth))
        return cls(np.column_stack([s, e]))

    @classmethod
    def from_bounds(cls, starts, ends):
        """Arcs running counter-clockwise from each start to the matching end."""
        starts = np.atleast_1d(np.asarray(starts, dtype=float))
        length = np.atleast_1d(np.asarray(ends, dtype=float)) - starts
        return cls.from_arcs(starts + 0.5 * length, 0.5 * length)

    def __len__(self):
        return self.intervals.shape[0]

    def __repr__(self):
        return f"AngularIntervalSet({self.intervals.tolist()!r})"

    def __eq__(self, other):
        if not isinstance(other, AngularIntervalSet):
            return NotImplemented
        return self.intervals.shape == other.intervals.shape and np.allclose(
            self.intervals, other.intervals, rtol=0, atol=1e-12
        )

    def measure(self) -> float:
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    def fraction(self) -> float:
        return self.measure() / TWO_PI

    def union(self, other: "AngularIntervalSet") -> "AngularIntervalSet":
        return AngularIntervalSet(np.vstack([self.intervals, other.intervals]))

    def complement(self) -> "AngularIntervalSet":
        if len(self) == 0:
            return AngularIntervalSet.full()
        edges = np.concatenate([[0.0], self.intervals.ravel(), [TWO_PI]])
        return AngularIntervalSet(edges.reshape(-1, 2))

    def intersection(self, other: "AngularIntervalSet") -> "AngularIntervalSet":
        return self.complement().union(other.complement()).complement()

    def difference(self, other: "AngularIntervalSet") -> "AngularIntervalSet":
        return self.intersection(other.complement())

    def contains(self, angles):
        a = np.mod(np.asarray(angles, dtype=float), TWO_PI)
        if len(self) == 0:
            return np.zeros(a.shape, dtype=bool)
        lo = self.intervals[:, 0]
        hi = self.intervals[:, 1]
        k = np.searchsorted(lo, a, side="right") - 1
        inside = (k >= 0) & (a <= hi[np.clip(k, 0, None)])
        # 2pi and 0 are the same angle
        if hi[-1] >= TWO_PI:
            inside |= a == 0.0
        return inside


def arc_fraction(s: AngularIntervalSet) -> float:
    """Proportion of the full circle covered by ``s``."""
    return s.fraction()


# ---------------------------------------------------------------------------
# Membership and distances
# ---------------------------------------------------------------------------


def _in_shadow(px, py, sh: Shadows):
    """Boolean array, broadcast of point arrays against the shadow axis (last)."""
    px = np.asarray(px, dtype=float)[..., None]
    py = np.asarray(py, dtype=float)[..., None]
    pp = px * px + py * py
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.clip((px * sh.cx + py * sh.cy) / pp, 0.0, 1.0)
    t = np.where(pp > 0, t, 0.0)
    dx = sh.cx - t * px
    dy = sh.cy - t * py
    return dx * dx + dy * dy <= sh.rho * sh.rho


def _distance_to_shadow(px, py, sh: Shadows):
    """Euclidean distance from points to each shadow (shadow axis last)."""
    inside = _in_shadow(px, py, sh)
    px = np.asarray(px, dtype=float)[..., None]
    py = np.asarray(py, dtype=float)[..., None]
    d_disc = np.hypot(px - sh.cx, py - sh.cy) - sh.rho
    best = d_disc
    for sign in (1.0, -1.0):
        ang = sh.phi + sign * sh.half
        ux, uy = np.cos(ang), np.sin(ang)
        s = np.maximum(px * ux + py * uy, sh.tangent)
        best = np.minimum(best, np.hypot(px - s * ux, py - s * uy))
    return np.where(inside, 0.0, np.maximum(best, 0.0))


def _points(p):
    arr = np.asarray(p, dtype=float)
    if isinstance(p, PlanePoint):
        arr = np.array([p.x, p.y])
    return arr[..., 0], arr[..., 1]


def occludes_point(shadow: Union[ShadowSet, Shadows], p) -> np.ndarray:
    """True where the segment from the origin to ``p`` meets the occluding disc."""
    sh = as_shadows([shadow]) if isinstance(shadow, ShadowSet) else shadow
    px, py = _points(p)
    res = _in_shadow(px, py, sh)
    if isinstance(shadow, ShadowSet):
        res = res[..., 0]
    return res if res.ndim else bool(res)


def union_membership(p, shadows: ShadowLike):
    sh = as_shadows(shadows)
    px, py = _points(p)
    if len(sh) == 0:
        return np.zeros(np.shape(px), dtype=bool) if np.ndim(px) else False
    res = _in_shadow(px, py, sh).any(axis=-1)
    return res if res.ndim else bool(res)


def distance_to_union(p, shadows: ShadowLike):
    sh = as_shadows(shadows)
    px, py = _points(p)
    if len(sh) == 0:
        return np.full(np.shape(px), np.inf) if np.ndim(px) else math.inf
    res = _distance_to_shadow(px, py, sh).min(axis=-1)
    return res if res.ndim else float(res)


def dilated_membership(p, shadows: ShadowLike, beta: float):
    """True where ``p`` lies within ``beta`` of the union of shadows."""
    if beta < 0:
        raise InvalidInputError("beta must be >= 0")
    d = distance_to_union(p, shadows)
    return d <= beta if np.ndim(d) else bool(d <= beta)


def _circle_cover_intervals(ox, oy, a, sh: Shadows, beta: float):
    """Arcs of the circles centred (ox, oy) with radius a that lie in the
    beta-dilated shadows.

    Arrays ox, oy, a share a leading shape ``L``; the return is a pair of
    (L + (7 * M,)) start/end arrays in the circle's own angle parameter.
    Boundary crossings are computed in closed form against the dilated disc
    circle and both offset tangent lines; every sub-arc between consecutive
    crossings is then classified by testing its midpoint.
    """
    ox = np.asarray(ox, dtype=float)[..., None]
    oy = np.asarray(oy, dtype=float)[..., None]
    a = np.asarray(a, dtype=float)[..., None]
    cands = []
    with np.errstate(invalid="ignore", divide="ignore"):
        # disc (dilated) circle
        vx, vy = sh.cx - ox, sh.cy - oy
        d = np.hypot(vx, vy)
        base = np.arctan2(vy, vx)
        rad = sh.rho + beta
        cosv = (a * a + d * d - rad * rad) / (2.0 * a * d)
        off = np.arccos(cosv)
        cands += [base + off, base - off]
        # offset tangent lines  n . q = beta
        for sign in (1.0, -1.0):
            nang = sh.phi + sign * (sh.half + 0.5 * math.pi)
            nx, ny = np.cos(nang), np.sin(nang)
            cosv = (beta - (nx * ox + ny * oy)) / a
            off = np.arccos(cosv)
            cands += [nang + off, nang - off]
    shape = np.broadcast_shapes(ox.shape, sh.cx.shape)
    c = np.stack([np.broadcast_to(x, shape) for x in cands], axis=-1)
    c = np.where(np.isfinite(c), np.mod(c, TWO_PI), 0.0)
    c = np.sort(c, axis=-1)
    zeros = np.zeros(shape + (1,))
    edges = np.concatenate([zeros, c, zeros + TWO_PI], axis=-1)
    lo, hi = edges[..., :-1], edges[..., 1:]
    mid = 0.5 * (lo + hi)
    qx = ox[..., None] + a[..., None] * np.cos(mid)
    qy = oy[..., None] + a[..., None] * np.sin(mid)
    sub = _ShadowBroadcast(sh)
    if beta > 0:
        inside = _distance_to_shadow_b(qx, qy, sub) <= beta
    else:
        inside = _in_shadow_b(qx, qy, sub)
    inside &= hi > lo
    lo = np.where(inside, lo, 0.0)
    hi = np.where(inside, hi, 0.0)
    return lo.reshape(shape[:-1] + (-1,)), hi.reshape(shape[:-1] + (-1,))


class _ShadowBroadcast:
    """Shadow arrays reshaped to (M, 1) for points laid out as (..., M, k)."""

    def __init__(self, sh: Shadows):
        for name in Shadows.__slots__:
            setattr(self, name, getattr(sh, name)[:, None])


def _in_shadow_b(qx, qy, sh):
    pp = qx * qx + qy * qy
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.clip((qx * sh.cx + qy * sh.cy) / pp, 0.0, 1.0)
    t = np.where(pp > 0, t, 0.0)
    dx = sh.cx - t * qx
    dy = sh.cy - t * qy
    return dx * dx + dy * dy <= sh.rho * sh.rho


def _distance_to_shadow_b(qx, qy, sh):
    inside = _in_shadow_b(qx, qy, sh)
    best = np.hypot(qx - sh.cx, qy - sh.cy) - sh.rho
    for sign in (1.0, -1.0):
        ang = sh.phi + sign * sh.half
        ux, uy = np.cos(ang), np.sin(ang)
        s = np.maximum(qx * ux + qy * uy, sh.tangent)
        best = np.minimum(best, np.hypot(qx - s * ux, qy - s * uy))
    return np.where(inside, 0.0, np.maximum(best, 0.0))


def circle_cover_arcs(center, radius: float, shadows: ShadowLike, beta: float = 0.0):
    """Arcs of the circle ``B(center, radius)`` boundary inside the union of the
    ``beta``-dilated shadows, parametrised by angle about ``center``."""
    sh = as_shadows(shadows)
    if len(sh) == 0:
        return AngularIntervalSet.empty()
    cx, cy = _points(center)
    lo, hi = _circle_cover_intervals(cx, cy, radius, sh, beta)
    return AngularIntervalSet(np.column_stack([lo.ravel(), hi.ravel()]))


def eroded_membership(p, shadows: ShadowLike, beta: float, chunk: int = 4096):
    """True where the closed disc ``B(p, beta)`` lies inside the union of shadows.

    Because the visible region is star-shaped about the origin and the origin
    is outside ``B(p, beta)``, containment of the disc is equivalent to its
    boundary circle being fully covered.
    """
    if beta < 0:
        raise InvalidInputError("beta must be >= 0")
    sh = as_shadows(shadows)
    px, py = _points(p)
    scalar = np.ndim(px) == 0
    px, py = np.atleast_1d(px).astype(float), np.atleast_1d(py).astype(float)
    if beta == 0:
        out = union_membership(np.stack([px, py], -1), sh)
        return bool(out[0]) if scalar else out
    out = np.zeros(px.shape, dtype=bool)
    if len(sh) == 0:
        return bool(out[0]) if scalar else out
    flat_x, flat_y = px.ravel(), py.ravel()
    res = out.ravel()
    for start in range(0, flat_x.size, chunk):
        sl = slice(start, start + chunk)
        qx, qy = flat_x[sl], flat_y[sl]
        dist = _distance_to_shadow(qx, qy, sh)
        # a disc holding the origin can never fit inside the shadows
        cand = (dist == 0.0).any(axis=1) & (np.hypot(qx, qy) > beta)
        if not cand.any():
            continue
        rel = dist[cand] <= beta
        idx = np.flatnonzero(cand)
        # only shadows touching the disc can cover part of its boundary
        width = int(rel.sum(axis=1).max())
        cols = np.argsort(~rel, axis=1, kind="stable")[:, :width]
        valid = np.take_along_axis(rel, cols, 1)
        sub = _GatheredShadows(sh, cols)
        lo, hi = _cover_gathered(qx[idx], qy[idx], beta, sub, valid)
        covered = _union_measure(lo, hi) >= TWO_PI - COVER_GAP_TOL
        res[start + idx] = covered
    res = res.reshape(px.shape)
    return bool(res[0]) if scalar else res


class _GatheredShadows:
    """Per-row subsets of shadows, laid out as (n, w) arrays."""

    def __init__(self, sh: Shadows, cols):
        for name in Shadows.__slots__:
            setattr(self, name, getattr(sh, name)[cols])


def _cover_gathered(ox, oy, a, sub, valid):
    """Like :func:`_circle_cover_intervals` for per-row shadow subsets."""
    ox = ox[:, None]
    oy = oy[:, None]
    cands = []
    with np.errstate(invalid="ignore", divide="ignore"):
        vx, vy = sub.cx - ox, sub.cy - oy
        d = np.hypot(vx, vy)
        base = np.arctan2(vy, vx)
        cosv = (a * a + d * d - sub.rho * sub.rho) / (2.0 * a * d)
        off = np.arccos(cosv)
        cands += [base + off, base - off]
        for sign in (1.0, -1.0):
            nang = sub.phi + sign * (sub.half + 0.5 * math.pi)
            cosv = -(np.cos(nang) * ox + np.sin(nang) * oy) / a
            off = np.arccos(cosv)
            cands += [nang + off, nang - off]
    c = np.stack(cands, axis=-1)
    c = np.where(np.isfinite(c), np.mod(c, TWO_PI), 0.0)
    c = np.sort(c, axis=-1)
    zeros = np.zeros(c.shape[:-1] + (1,))
    edges = np.concatenate([zeros, c, zeros + TWO_PI], axis=-1)
    lo, hi = edges[..., :-1], edges[..., 1:]
    mid = 0.5 * (lo + hi)
    qx = ox[..., None] + a * np.cos(mid)
    qy = oy[..., None] + a * np.sin(mid)
    sb = _GatheredBroadcast(sub)
    inside = _in_shadow_b(qx, qy, sb) & (hi > lo) & valid[..., None]
    lo = np.where(inside, lo, 0.0).reshape(lo.shape[0], -1)
    hi = np.where(inside, hi, 0.0).reshape(hi.shape[0], -1)
    return lo, hi


class _GatheredBroadcast:
    def __init__(self, sub):
        for name in Shadows.__slots__:
            setattr(self, name, getattr(sub, name)[..., None])


# ---------------------------------------------------------------------------
# Occluded arcs on origin-centred probe circles
# ---------------------------------------------------------------------------


def _half_widths(sh: Shadows, r, beta=0.0):
    """Half-width of each shadow's (dilated) arc on the probe circle of radius r.

    ``r`` and ``beta`` broadcast against a trailing shadow axis; the result has
    shape ``broadcast(r, beta) + (M,)``.  Each shadow meets an origin-centred
    circle in a single arc symmetric about its direction.
    """
    r = np.asarray(r, dtype=float)[..., None]
    beta = np.asarray(beta, dtype=float)[..., None]
    c = sh.dist
    with np.errstate(invalid="ignore", divide="ignore"):
        rad = sh.rho + beta
        cosv = (r * r + c * c - rad * rad) / (2.0 * r * c)
        w_disc = np.where(cosv > 1.0, 0.0, np.arccos(np.clip(cosv, -1.0, 1.0)))
        beyond = r >= sh.tangent
        lateral = np.minimum(beta, np.sqrt(np.maximum(r * r - sh.tangent**2, 0.0)))
        w_ray = np.where(beyond, sh.half + np.arcsin(np.clip(lateral / r, 0.0, 1.0)), 0.0)
    w = np.maximum(w_disc, w_ray)
    return np.where(r > 0, w, 0.0)


def _dilated_measure(sh: Shadows, r, beta=0.0, mask=None):
    """Occluded angle measure on probe circles (identity or dilation)."""
    r = np.asarray(r, dtype=float)
    if len(sh) == 0:
        return np.zeros(np.broadcast_shapes(r.shape, np.shape(beta)))
    w = _half_widths(sh, r, beta)
    if mask is not None:
        w = np.where(mask, w, -1.0)
    phi = np.broadcast_to(sh.phi, w.shape)
    s, e = _split_arcs(phi, np.maximum(w, 0.0))
    if mask is not None:
        m2 = np.concatenate([mask, mask], axis=-1)
        m2 = np.broadcast_to(m2, s.shape)
        s = np.where(m2, s, 0.0)
        e = np.where(m2, e, 0.0)
    return _union_measure(s, e)


# ---- erosion -----------------------------------------------------------------


def _near_at(sh: Shadows, idx, psi):
    """Depth of the front of shadow ``idx`` along direction ``psi`` (inf if outside)."""
    delta = np.mod(psi - sh.phi[idx] + math.pi, TWO_PI) - math.pi
    c = sh.dist[idx]
    rho = sh.rho[idx]
    s = np.sin(delta) * c
    return c * np.cos(delta) - np.sqrt(np.maximum(rho * rho - s * s, 0.0))


@dataclass
class Horizon:
    """Boundary of a union of shadows, as front-arc pieces and radial segments.

    The union is the epigraph ``{(s, psi): s >= h(psi)}`` of the horizon
    function ``h``; its boundary is the graph of ``h`` (pieces of front arcs)
    plus radial segments where ``h`` jumps at cone edges.
    """

    arc_owner: np.ndarray
    arc_ea: np.ndarray  # (k, 2) endpoint at the start angle
    arc_eb: np.ndarray  # (k, 2) endpoint at the end angle
    arc_ga: np.ndarray  # angle of arc_ea about the disc centre
    arc_span: np.ndarray  # counter-clockwise span (about the centre) from arc_eb to arc_ea
    seg_psi: np.ndarray
    seg_s1: np.ndarray
    seg_s2: np.ndarray
    shadows: Shadows

    def arc_depth_range(self):
        sh = self.shadows
        j = self.arc_owner
        return sh.near[j], sh.dist[j] + sh.rho[j]


def horizon_of(shadows: ShadowLike) -> Horizon:
    sh = as_shadows(shadows)
    m = len(sh)
    if m == 0:
        z = np.empty(0)
        return Horizon(np.empty(0, int), np.empty((0, 2)), np.empty((0, 2)), z, z, z, z, z, sh)
    pts = [np.zeros(1), np.mod(sh.phi - sh.half, TWO_PI), np.mod(sh.phi + sh.half, TWO_PI)]
    if m > 1:
        dx = sh.cx[None, :] - sh.cx[:, None]
        dy = sh.cy[None, :] - sh.cy[:, None]
        d = np.hypot(dx, dy)
        ri, rj = sh.rho[:, None], sh.rho[None, :]
        iu = np.triu(np.ones((m, m), dtype=bool), 1)
        hit = iu & (d < ri + rj) & (d > np.abs(ri - rj))
        if hit.any():
            ii, jj = np.nonzero(hit)
            dd = d[ii, jj]
            a = (dd * dd + sh.rho[ii] ** 2 - sh.rho[jj] ** 2) / (2.0 * dd)
            h = np.sqrt(np.maximum(sh.rho[ii] ** 2 - a * a, 0.0))
            ex, ey = dx[ii, jj] / dd, dy[ii, jj] / dd
            bx = sh.cx[ii] + a * ex
            by = sh.cy[ii] + a * ey
            for sgn in (1.0, -1.0):
                pts.append(np.mod(np.arctan2(by + sgn * h * ex, bx - sgn * h * ey), TWO_PI))
    bps = np.unique(np.concatenate(pts))
    bps = bps[bps < TWO_PI]
    hi = np.append(bps[1:], TWO_PI)
    mids = 0.5 * (bps + hi)
    delta = np.mod(mids[:, None] - sh.phi[None, :] + math.pi, TWO_PI) - math.pi
    incone = np.abs(delta) <= sh.half
    s = np.sin(delta) * sh.dist
    depth = sh.dist * np.cos(delta) - np.sqrt(np.maximum(sh.rho**2 - s * s, 0.0))
    depth = np.where(incone, depth, np.inf)
    owner = np.argmin(depth, axis=1)
    owner = np.where(np.isfinite(depth[np.arange(len(mids)), owner]), owner, -1)

    has = owner >= 0
    j = owner[has]
    psa, psb = bps[has], hi[has]
    da, db = _near_at(sh, j, psa), _near_at(sh, j, psb)
    ea = np.column_stack([da * np.cos(psa), da * np.sin(psa)])
    eb = np.column_stack([db * np.cos(psb), db * np.sin(psb)])
    ga = np.arctan2(ea[:, 1] - sh.cy[j], ea[:, 0] - sh.cx[j])
    gb = np.arctan2(eb[:, 1] - sh.cy[j], eb[:, 0] - sh.cx[j])
    span = np.mod(ga - gb, TWO_PI)

    # radial jumps at each breakpoint: compare the left and right owners
    left = np.roll(owner, 1)
    h_left = np.full(bps.size, np.inf)
    h_right = np.full(bps.size, np.inf)
    ok = left >= 0
    h_left[ok] = _near_at(sh, left[ok], bps[ok])
    ok = owner >= 0
    h_right[ok] = _near_at(sh, owner[ok], bps[ok])
    lo = np.minimum(h_left, h_right)
    up = np.maximum(h_left, h_right)
    with np.errstate(invalid="ignore"):
        jump = np.isfinite(lo) & ~(np.abs(up - lo) <= 1e-12 * np.maximum(1.0, lo))
    return Horizon(
        arc_owner=j,
        arc_ea=ea,
        arc_eb=eb,
        arc_ga=ga,
        arc_span=span,
        seg_psi=bps[jump],
        seg_s1=lo[jump],
        seg_s2=up[jump],
        shadows=sh,
    )


def _near_intervals(hz: Horizon, r: float, beta: float):
    """Intervals of the probe circle of radius r lying strictly within beta of
    the union boundary.  Returns (starts, ends) 1-D arrays."""
    sh = hz.shadows
    out_s, out_e = [], []
    # arc pieces
    if hz.arc_owner.size:
        dmin, dmax = hz.arc_depth_range()
        sel = (dmin <= r + beta) & (dmax >= r - beta)
        if sel.any():
            j = hz.arc_owner[sel]
            ea, eb = hz.arc_ea[sel], hz.arc_eb[sel]
            ga, span = hz.arc_ga[sel], hz.arc_span[sel]
            cx, cy, rho = sh.cx[j], sh.cy[j], sh.rho[j]
            cands = []
            with np.errstate(invalid="ignore", divide="ignore"):
                for ccx, ccy, rad in (
                    (cx, cy, rho + beta),
                    (cx, cy, np.where(rho > beta, rho - beta, np.nan)),
                    (ea[:, 0], ea[:, 1], np.full(j.size, beta)),
                    (eb[:, 0], eb[:, 1], np.full(j.size, beta)),
                ):
                    d = np.hypot(ccx, ccy)
                    base = np.arctan2(ccy, ccx)
                    off = np.arccos((r * r + d * d - rad * rad) / (2.0 * r * d))
                    cands += [base + off, base - off]
            lo, hi, mid = _sub_arcs(np.column_stack(cands))
            qx, qy = r * np.cos(mid), r * np.sin(mid)
            vx, vy = qx - cx[:, None], qy - cy[:, None]
            g = np.arctan2(vy, vx)
            gb = (ga - span)[:, None]
            inside = np.mod(g - gb, TWO_PI) <= span[:, None]
            d_arc = np.abs(np.hypot(vx, vy) - rho[:, None])
            d_end = np.minimum(
                np.hypot(qx - ea[:, :1], qy - ea[:, 1:]), np.hypot(qx - eb[:, :1], qy - eb[:, 1:])
            )
            near = np.where(inside, d_arc, d_end) < beta
            out_s.append(np.where(near, lo, 0.0).ravel())
            out_e.append(np.where(near, hi, 0.0).ravel())
    # radial segments
    if hz.seg_psi.size:
        sel = (hz.seg_s1 <= r + beta) & (hz.seg_s2 >= r - beta)
        if sel.any():
            psi, s1, s2 = hz.seg_psi[sel], hz.seg_s1[sel], hz.seg_s2[sel]
            cands = []
            with np.errstate(invalid="ignore", divide="ignore"):
                off = math.asin(min(beta / r, 1.0))
                cands += [psi + off, psi - off, psi + math.pi + off, psi + math.pi - off]
                for s in (s1, s2):
                    o2 = np.arccos((r * r + s * s - beta * beta) / (2.0 * r * s))
                    cands += [psi + o2, psi - o2]
            lo, hi, mid = _sub_arcs(np.column_stack(cands))
            ux, uy = np.cos(psi)[:, None], np.sin(psi)[:, None]
            qx, qy = r * np.cos(mid), r * np.sin(mid)
            s = np.clip(qx * ux + qy * uy, s1[:, None], s2[:, None])
            near = np.hypot(qx - s * ux, qy - s * uy) < beta
            out_s.append(np.where(near, lo, 0.0).ravel())
            out_e.append(np.where(near, hi, 0.0).ravel())
    if not out_s:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(out_s), np.concatenate(out_e)


def _sub_arcs(cands):
    c = np.where(np.isfinite(cands), np.mod(cands, TWO_PI), 0.0)
    c = np.sort(c, axis=-1)
    zeros = np.zeros(c.shape[:-1] + (1,))
    edges = np.concatenate([zeros, c, zeros + TWO_PI], axis=-1)
    lo, hi = edges[..., :-1], edges[..., 1:]
    return lo, hi, 0.5 * (lo + hi)


def _eroded_measure(hz: Horizon, r: float, beta: float, identity=None):
    """Measure of the eroded union on the probe circle of radius r."""
    sh = hz.shadows
    if len(sh) == 0 or r <= beta:
        return 0.0
    if identity is None:
        w = _half_widths(sh, r)
        identity = _split_arcs(sh.phi, w)
    s_i, e_i = identity
    s_n, e_n = _near_intervals(hz, r, beta)
    both = _union_measure(np.concatenate([s_i, s_n]), np.concatenate([e_i, e_n]))
    return float(both - _union_measure(s_n, e_n))


def _eroded_set(hz: Horizon, r: float, beta: float) -> AngularIntervalSet:
    sh = hz.shadows
    if len(sh) == 0 or r <= beta:
        return AngularIntervalSet.empty()
    ident = AngularIntervalSet.from_arcs(sh.phi, _half_widths(sh, r))
    s_n, e_n = _near_intervals(hz, r, beta)
    near = AngularIntervalSet(np.column_stack([s_n, e_n]))
    return ident.difference(near)


def _eroded_set_scan(sh: Shadows, r: float, beta: float, n_scan=4096, tol=1e-9):
    """Erosion arcs by scanning the exact membership test and bisecting transitions."""
    if len(sh) == 0 or r <= beta:
        return AngularIntervalSet.empty()
    ang = np.linspace(0.0, TWO_PI, n_scan, endpoint=False)
    inside = eroded_membership(np.column_stack([r * np.cos(ang), r * np.sin(ang)]), sh, beta)
    if inside.all():
        return AngularIntervalSet.full()
    if not inside.any():
        return AngularIntervalSet.empty()
    nxt = np.roll(inside, -1)
    k = np.flatnonzero(inside != nxt)
    lo = ang[k]
    hi = lo + TWO_PI / n_scan
    state_lo = inside[k]
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        m_in = eroded_membership(np.column_stack([r * np.cos(mid), r * np.sin(mid)]), sh, beta)
        same = m_in == state_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    t = 0.5 * (lo + hi)
    # entering transitions (outside -> inside) start an arc
    starts = t[~state_lo]
    ends = t[state_lo]
    # pair each start with the next end going counter-clockwise
    ends_sorted = np.sort(ends)
    idx = np.searchsorted(ends_sorted, starts) % ends_sorted.size
    matched = ends_sorted[idx]
    matched = np.where(matched < starts, matched + TWO_PI, matched)
    return AngularIntervalSet.from_bounds(starts, matched)


def occluded_arcs(shadows: ShadowLike, r: float, t: MorphTransform, method: str = "exact"):
    """Angles ``phi`` for which the point at radius ``r`` and angle ``phi``
    lies in ``t`` applied to the union of ``shadows``.

    Identity and dilation are exact per shadow (dilation distributes over
    unions).  Erosion subtracts from the plain union every direction whose
    point lies within ``beta`` of the union boundary; ``method="scan"`` uses
    the slower scan-and-bisect construction instead.
    """
    if not r > 0:
        raise InvalidInputError("probe radius must be positive")
    sh = as_shadows(shadows)
    if len(sh) == 0:
        return AngularIntervalSet.empty()
    if t.kind is MorphKind.ERODE:
        if not r - t.beta > 0:
            raise InvalidInputError("erosion needs r > beta")
        if method == "scan":
            return _eroded_set_scan(sh, r, t.beta)
        return _eroded_set(horizon_of(sh), r, t.beta)
    return AngularIntervalSet.from_arcs(sh.phi, _half_widths(sh, r, t.beta))


def occluded_fraction(shadows: ShadowLike, r: float, t: MorphTransform) -> float:
    """``arc_fraction(occluded_arcs(...))`` without building the interval set."""
    sh = as_shadows(shadows)
    if len(sh) == 0:
        return 0.0
    if t.kind is MorphKind.ERODE:
        if not r - t.beta > 0:
            raise InvalidInputError("erosion needs r > beta")
        return _eroded_measure(horizon_of(sh), r, t.beta) / TWO_PI
    return float(_dilated_measure(sh, r, t.beta)) / TWO_PI


# ---------------------------------------------------------------------------
# Areas
# ---------------------------------------------------------------------------


def _simpson_batch(f, a, b, tol, max_rounds=40):
    """Adaptive Simpson over many panels at once.

    ``f`` maps a 1-D array of abscissae to integrand values.  Each panel
    [a_k, b_k] is refined independently until the Richardson estimate
    falls below a tolerance proportional to its width.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    total_width = float(np.sum(b - a))
    if total_width <= 0:
        return 0.0
    m = 0.5 * (a + b)
    vals = f(np.concatenate([a, m, b]))
    fa, fm, fb = np.split(vals, 3)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    tol_k = tol * (b - a) / total_width
    result = 0.0
    for _ in range(max_rounds):
        if a.size == 0:
            break
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = np.split(f(np.concatenate([lm, rm])), 2)
        left = (m - a) / 6.0 * (fa + 4 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4 * frm + fb)
        err = left + right - whole
        done = np.abs(err) <= 15.0 * tol_k
        result += float(np.sum((left + right + err / 15.0)[done]))
        keep = ~done
        a, m, b = a[keep], m[keep], b[keep]
        fa, fm, fb = fa[keep], fm[keep], fb[keep]
        lm, rm, flm, frm = lm[keep], rm[keep], flm[keep], frm[keep]
        left, right, tol_k = left[keep], right[keep], tol_k[keep] / 2.0
        a, m, b, fa, fm, fb, whole = (
            np.concatenate([a, m]),
            np.concatenate([lm, rm]),
            np.concatenate([m, b]),
            np.concatenate([fa, fm]),
            np.concatenate([flm, frm]),
            np.concatenate([fm, fb]),
            np.concatenate([left, right]),
        )
        tol_k = np.concatenate([tol_k, tol_k])
    return result + float(np.sum(whole))


def _radial_area(integrand, breaks, R, tol):
    """Integrate ``2 pi r * fraction(r)`` over [0, R] split at ``breaks``.

    On every panel the substitution r = a + (b - a) u^2 removes the
    square-root onset of a shadow arc at the panel's left end.
    """
    pts = np.unique(np.clip(np.concatenate([[0.0, R], np.asarray(breaks, float)]), 0.0, R))
    a, b = pts[:-1], pts[1:]
    keep = b - a > 1e-12
    a, b = a[keep], b[keep]
    k = a.size
    if k == 0:
        return 0.0

    def g(u):
        # u in [panel, panel+1)
        panel = np.minimum(np.floor(u).astype(int), k - 1)
        frac = u - panel
        lo, width = a[panel], b[panel] - a[panel]
        r = lo + width * frac * frac
        return integrand(r) * r * 2.0 * width * frac

    ua = np.arange(k, dtype=float)
    return _simpson_batch(g, ua, ua + 1.0 - 1e-15, tol)


def morph_area(
    shadows: ShadowLike, t: MorphTransform, R: float, tol: float = 1e-4, method: str = "auto"
) -> float:
    """Area of ``t`` applied to the union of ``shadows``, inside the disc ``B(o, R)``.

    Identity and dilation use the exact boundary integral of
    :func:`dilated_union_areas`.  Erosion (or ``method="radial"``) integrates
    the occluded arc measure over the radius, with panel breaks at each
    shadow's onset and tangent radius, to absolute tolerance ``tol`` (m^2).
    """
    if not R > 0:
        raise InvalidInputError("window radius must be positive")
    sh = as_shadows(shadows)
    if len(sh) == 0:
        return 0.0
    if t.kind is not MorphKind.ERODE and method != "radial":
        return float(dilated_union_areas(sh, [t.beta], R)[0])
    beta = t.beta
    if t.kind is MorphKind.ERODE:
        hz = horizon_of(sh)

        def integrand(r):
            out = np.empty(r.shape)
            for k, rk in enumerate(r):
                out[k] = _eroded_measure(hz, rk, beta)
            return out

        lo, hi = hz.arc_depth_range()
        breaks = np.concatenate(
            [sh.near, sh.tangent, [beta], lo - beta, lo + beta, hz.seg_s1 - beta, hz.seg_s1 + beta]
        )
    else:
        order = np.argsort(sh.near - beta)
        sh = sh[order]
        onset = sh.near - beta

        def integrand(r):
            out = np.zeros(r.shape)
            # process in blocks to bound memory
            for start in range(0, r.size, 512):
                rr = r[start : start + 512]
                active = int(np.searchsorted(onset, rr.max(), side="right"))
                if active:
                    out[start : start + 512] = _dilated_measure(sh[:active], rr, beta)
            return out

        breaks = np.concatenate(
            [np.abs(onset), sh.tangent, np.sqrt(sh.tangent**2 + beta * beta), sh.dist + sh.rho + beta]
        )
    return float(_radial_area(integrand, breaks, R, tol))


# ---- exact area of a dilated union by boundary integration -----------------


def _sorted_pieces(lo, hi):
    """Disjoint pieces ``[a, b]`` (along the last axis) covering the union of
    the input intervals; empty pieces come back with ``a == b``."""
    order = np.argsort(lo, axis=-1, kind="stable")
    lo = np.take_along_axis(lo, order, -1)
    hi = np.take_along_axis(hi, order, -1)
    run = np.maximum.accumulate(hi, axis=-1)
    prev = np.concatenate([np.full(lo.shape[:-1] + (1,), -np.inf), run[..., :-1]], axis=-1)
    a = np.maximum(lo, prev)
    b = np.maximum(hi, a)
    return a, b


def _neighbours(sh: Shadows, beta_max: float):
    """Boolean matrix of shadow pairs whose dilated versions can meet.

    A dilated shadow lies inside the tangent cone of its dilated disc, so
    two of them can only meet when those cones overlap.
    """
    M = len(sh)
    ext = np.arcsin(np.minimum((sh.rho + beta_max) / sh.dist, 1.0))
    ext = np.where(sh.rho + beta_max >= sh.dist, math.pi, ext)
    gap = np.abs(np.mod(sh.phi[:, None] - sh.phi[None, :] + math.pi, TWO_PI) - math.pi)
    return (gap <= ext[:, None] + ext[None, :] + 1e-12) & ~np.eye(M, dtype=bool)


def _union_area_batch(sh: Shadows, rows, betas: np.ndarray, R: float, kidx, valid) -> np.ndarray:
    """Boundary-integral contribution of the dilated shadows ``rows``.

    Each dilated shadow is convex, bounded by a front arc of the circle
    ``(c, rho + beta)`` and two rays along the offset tangent lines.  The
    union area is half the integral of ``x dy - y dx`` over the pieces of
    these curves not covered by other shadows and inside the window, plus
    the covered arcs of the window circle (added by the caller).

    Arrays indexed ``[b, j, k]`` pair piece owner ``rows[j]`` with the
    neighbouring shadow ``kidx[j, k]``.
    """
    B = betas.size
    beta = betas[:, None]  # (B, 1)
    mx, my = np.cos(sh.phi), np.sin(sh.phi)
    npa = sh.phi + sh.half + 0.5 * math.pi
    nma = sh.phi - sh.half - 0.5 * math.pi
    npx, npy, nmx, nmy = np.cos(npa), np.sin(npa), np.cos(nma), np.sin(nma)
    rho_all = sh.rho + beta  # (B, M)
    gcut = sh.dist - rho_all * np.sin(sh.half)
    # neighbour quantities, shape (1, J, D) or (B, J, D)
    kx, ky = sh.cx[kidx][None], sh.cy[kidx][None]
    krho = rho_all[:, kidx]
    kg = gcut[:, kidx]
    knpx, knpy = npx[kidx][None], npy[kidx][None]
    knmx, knmy = nmx[kidx][None], nmy[kidx][None]
    kmx, kmy = mx[kidx][None], my[kidx][None]
    ok = valid[None]
    bk = beta[:, :, None]  # (B, 1, 1)
    # owner quantities
    sh = sh[rows]
    J = len(sh)
    npa, nma = npa[rows], nma[rows]
    npx, npy, nmx, nmy = npx[rows], npy[rows], nmx[rows], nmy[rows]
    rho_d = rho_all[:, rows]  # (B, J)
    total = np.zeros(B)

    # ---- rays -------------------------------------------------------------
    for sign, nx, ny in ((1.0, npx, npy), (-1.0, nmx, nmy)):
        ang = sh.phi + sign * sh.half
        ux, uy = np.cos(ang), np.sin(ang)
        px = sh.tangent * ux + beta * nx  # (B, M)
        py = sh.tangent * uy + beta * ny
        pu = px * ux + py * uy
        pp = px * px + py * py
        s_end = np.where(pp <= R * R, -pu + np.sqrt(np.maximum(pu * pu - pp + R * R, 0.0)), 0.0)
        Px, Py = px[:, :, None], py[:, :, None]
        Ux, Uy = ux[None, :, None], uy[None, :, None]
        vx, vy = Px - kx, Py - ky
        b = Ux * vx + Uy * vy
        disc = b * b - (vx * vx + vy * vy - krho**2)
        root = np.sqrt(np.maximum(disc, 0.0))
        d_lo = np.where(disc >= 0, -b - root, np.inf)
        d_hi = np.where(disc >= 0, -b + root, -np.inf)
        w_lo = np.full(disc.shape, -np.inf)
        w_hi = np.full(disc.shape, np.inf)
        for hx, hy, rhs in ((knpx, knpy, bk), (knmx, knmy, bk), (-kmx, -kmy, -kg)):
            den = Ux * hx + Uy * hy
            num = rhs - (Px * hx + Py * hy)
            with np.errstate(divide="ignore", invalid="ignore"):
                lim = num / den
            w_hi = np.where(den > 0, np.minimum(w_hi, lim), w_hi)
            w_lo = np.where(den < 0, np.maximum(w_lo, lim), w_lo)
            w_hi = np.where((den == 0) & (num < 0), -np.inf, w_hi)
        se = s_end[:, :, None]
        lo = np.clip(np.concatenate([d_lo, w_lo], axis=-1), 0.0, se)
        hi = np.clip(np.concatenate([d_hi, w_hi], axis=-1), 0.0, se)
        hi = np.where(np.concatenate([ok, ok], axis=-1) & (hi > lo), hi, lo)
        length = s_end - _union_measure(lo, hi)
        cross = px * uy - py * ux
        total += (-sign) * np.sum(cross * length, axis=-1)

    # ---- front arcs ---------------------------------------------------------
    a0 = npa  # start angle about the centre
    span = math.pi - 2.0 * sh.half
    rj = rho_d[:, :, None]  # (B, M, 1)
    cjx, cjy = sh.cx[None, :, None], sh.cy[None, :, None]
    cands = []
    with np.errstate(invalid="ignore", divide="ignore"):
        vx, vy = kx - cjx, ky - cjy
        d = np.hypot(vx, vy)
        base = np.arctan2(vy, vx)
        off = np.arccos((rj * rj + d * d - krho**2) / (2.0 * rj * d))
        cands += [base + off, base - off]
        for hx, hy in ((knpx, knpy), (knmx, knmy)):
            hang = np.arctan2(hy, hx)
            off = np.arccos((bk - (hx * cjx + hy * cjy)) / rj)
            cands += [hang + off, hang - off]
    shape = (B, J, kidx.shape[1])
    c = np.stack([np.broadcast_to(x, shape) for x in cands], axis=-1)
    A0 = a0[None, :, None, None]
    L = span[None, :, None, None]
    tau = np.mod(c - A0, TWO_PI)
    tau = np.where(np.isfinite(tau) & (tau < L), tau, 0.0)
    tau = np.sort(tau, axis=-1)
    edges = np.concatenate([np.zeros(shape + (1,)), tau, np.broadcast_to(L, shape + (1,))], -1)
    lo, hi = edges[..., :-1], edges[..., 1:]
    t_mid = A0 + 0.5 * (lo + hi)
    qx = cjx[..., None] + rj[..., None] * np.cos(t_mid)
    qy = cjy[..., None] + rj[..., None] * np.sin(t_mid)
    e = (Ellipsis, None)
    bb = bk[e]
    in_disc = (qx - kx[e]) ** 2 + (qy - ky[e]) ** 2 <= krho[e] ** 2
    in_wedge = (
        (qx * knpx[e] + qy * knpy[e] <= bb)
        & (qx * knmx[e] + qy * knmy[e] <= bb)
        & (qx * kmx[e] + qy * kmy[e] >= kg[e])
    )
    cov = (in_disc | in_wedge) & ok[e] & (hi > lo)
    lo = np.where(cov, lo, 0.0).reshape(B, J, -1)
    hi = np.where(cov, hi, 0.0).reshape(B, J, -1)
    # parts of the arc outside the window count as covered
    with np.errstate(invalid="ignore", divide="ignore"):
        cjd = sh.dist[None, :]
        cosv = (R * R - cjd**2 - rho_d**2) / (2.0 * cjd * rho_d)
        wo = np.arccos(np.clip(cosv, -1.0, 1.0))  # |t - phi| <= wo is inside
    Lb = np.broadcast_to(span, (B, J))
    wc = np.stack(
        [
            np.minimum(np.mod(sh.phi + wo - a0, TWO_PI), Lb),
            np.minimum(np.mod(sh.phi - wo - a0, TWO_PI), Lb),
        ],
        -1,
    )
    wc = np.sort(wc, axis=-1)
    e3 = np.concatenate([np.zeros((B, J, 1)), wc, Lb[..., None]], -1)
    wl, wh = e3[..., :-1], e3[..., 1:]
    tm = a0[None, :, None] + 0.5 * (wl + wh)
    qx = sh.cx[None, :, None] + rho_d[..., None] * np.cos(tm)
    qy = sh.cy[None, :, None] + rho_d[..., None] * np.sin(tm)
    outside = (qx * qx + qy * qy > R * R) & ~(cosv >= 1.0)[..., None] | (cosv <= -1.0)[..., None]
    lo = np.concatenate([lo, np.where(outside, wl, 0.0)], -1)
    hi = np.concatenate([hi, np.where(outside, wh, 0.0)], -1)
    pa, pb = _sorted_pieces(lo, hi)
    rr = rho_d[..., None]
    ccx, ccy = sh.cx[None, :, None], sh.cy[None, :, None]

    def green(t0, t1):
        return rr * rr * (t1 - t0) + rr * (
            ccx * (np.sin(t1) - np.sin(t0)) - ccy * (np.cos(t1) - np.cos(t0))
        )

    full = green(a0[None, :, None], (a0 + span)[None, :, None])[..., 0]
    cut = green(a0[None, :, None] + pa, a0[None, :, None] + pb).sum(-1)
    total += np.sum(full - cut, axis=-1)
    return total


def dilated_union_areas(shadows: ShadowLike, betas, R: float, chunk: int = 8) -> np.ndarray:
    """Exact area of the union of shadows dilated by each ``beta``, inside ``B(o, R)``."""
    if not R > 0:
        raise InvalidInputError("window radius must be positive")
    sh = as_shadows(shadows)
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    if np.any(betas < 0):
        raise InvalidInputError("beta must be >= 0")
    out = np.zeros(betas.size)
    if len(sh) == 0 or betas.size == 0:
        return out
    # shadows starting beyond the window cannot reach it
    sh = sh[sh.near - betas.max() < R]
    if len(sh) == 0:
        return out
    meet = _neighbours(sh, float(betas.max()))
    deg = meet.sum(axis=1)
    # group piece owners by neighbour count to keep the padding small
    groups = []
    for lo_deg, hi_deg in ((0, 8), (9, 32), (33, 128), (129, None)):
        rows = np.flatnonzero((deg >= lo_deg) & ((deg <= hi_deg) if hi_deg else True))
        if rows.size:
            D = max(int(deg[rows].max()), 1)
            kidx = np.argsort(~meet[rows], axis=1, kind="stable")[:, :D]
            groups.append((rows, kidx, np.take_along_axis(meet[rows], kidx, 1)))
    for start in range(0, betas.size, chunk):
        bs = betas[start : start + chunk]
        acc = R * R * _dilated_measure(sh, np.full(bs.size, R), bs)
        for rows, kidx, valid in groups:
            acc = acc + _union_area_batch(sh, rows, bs, R, kidx, valid)
        out[start : start + chunk] = 0.5 * acc
    return np.clip(out, 0.0, math.pi * R * R)
