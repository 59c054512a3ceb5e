import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from occlusion_ht import geom
from occlusion_ht.errors import InvalidInputError
from occlusion_ht.geom import (
    AngularIntervalSet,
    MorphKind,
    MorphTransform,
    PlanePoint,
    Shadows,
    StemDisc,
)

ID = MorphTransform.identity()


def disc(x, y, r):
    return StemDisc(PlanePoint(x, y), r)


def shadows_of(d):
    return Shadows(d[:, 0], d[:, 1], d[:, 2])


ONE = [disc(5.0, 0.0, 0.5)]


# ---- shadow_of and occludes_point ------------------------------------------


def test_shadow_of_disc_on_x_axis():
    s = geom.shadow_of(disc(5, 0, 0.5))
    assert s.half_angle == pytest.approx(0.1001674, abs=1e-7)
    assert s.direction == 0.0
    assert s.near == pytest.approx(4.5)
    assert s.tangent == pytest.approx(math.sqrt(25 - 0.25))


def test_shadow_of_disc_on_y_axis():
    s = geom.shadow_of(disc(0, 3, 0.3))
    assert s.direction == pytest.approx(math.pi / 2)
    assert s.half_angle == pytest.approx(math.asin(0.1))


def test_disc_touching_origin_rejected():
    with pytest.raises(InvalidInputError):
        disc(1.0, 0.0, 1.0)


def test_occludes_point_examples():
    s = geom.shadow_of(disc(5, 0, 0.5))
    assert geom.occludes_point(s, (8.0, 0.0))
    assert not geom.occludes_point(s, (2.0, 0.0))
    # centre sits 5 sin(atan2(0.9, 8)) = 0.559 from the ray
    assert not geom.occludes_point(s, (8.0, 0.9))


def test_occludes_point_matches_segment_oracle():
    rng = np.random.default_rng(3)
    d = oracles.random_discs(rng, 40)
    x, y = rng.uniform(-11, 11, (2, 50_000))
    got = geom.union_membership(np.column_stack([x, y]), shadows_of(d))
    assert np.array_equal(got, oracles.in_union(x, y, d))


def test_distance_matches_boundary_oracle():
    rng = np.random.default_rng(4)
    d = oracles.random_discs(rng, 25)
    x, y = rng.uniform(-11, 11, (2, 50_000))
    got = geom.distance_to_union(np.column_stack([x, y]), shadows_of(d))
    assert np.max(np.abs(got - oracles.distance_to_union(x, y, d))) < 1e-10


# ---- AngularIntervalSet -----------------------------------------------------


def test_arc_fraction_trivial_cases():
    assert geom.arc_fraction(AngularIntervalSet.empty()) == 0.0
    assert geom.arc_fraction(AngularIntervalSet.full()) == 1.0
    assert geom.arc_fraction(AngularIntervalSet.from_arcs([1.0], [math.pi / 2])) == pytest.approx(0.5)


def test_arc_crossing_zero_is_split():
    s = AngularIntervalSet.from_arcs([0.0], [0.3])
    assert len(s) == 2
    assert s.measure() == pytest.approx(0.6)
    assert s.contains([0.0, 0.29, 2 * math.pi - 0.29]).all()
    assert not s.contains([0.31, math.pi]).any()


arcs = st.lists(
    st.tuples(st.floats(0, 2 * math.pi, exclude_max=True), st.floats(0, 1.5)),
    max_size=8,
)


def _set(items):
    if not items:
        return AngularIntervalSet.empty()
    c, h = zip(*items)
    return AngularIntervalSet.from_arcs(np.array(c), np.array(h))


@given(arcs, arcs)
@settings(max_examples=200, deadline=None)
def test_interval_set_algebra(a, b):
    A, B = _set(a), _set(b)
    assert A.union(A) == A
    assert A.union(A.complement()).measure() == pytest.approx(2 * math.pi)
    assert A.complement().complement().measure() == pytest.approx(A.measure(), abs=1e-12)
    inter = A.intersection(B).measure()
    assert A.union(B).measure() == pytest.approx(A.measure() + B.measure() - inter, abs=1e-9)
    assert A.difference(B).measure() == pytest.approx(A.measure() - inter, abs=1e-9)


@given(arcs)
@settings(max_examples=100, deadline=None)
def test_interval_membership_matches_arcs(a):
    A = _set(a)
    phi = np.linspace(0, 2 * math.pi, 1000, endpoint=False) + 1e-4
    want = np.zeros(phi.size, bool)
    for c, h in a:
        want |= np.abs((phi - c + math.pi) % (2 * math.pi) - math.pi) <= h
    # skip angles within rounding of an endpoint
    ends = [(c + s * h) % (2 * math.pi) for c, h in a for s in (1, -1)]
    far = np.ones(phi.size, bool)
    for e in ends:
        far &= np.abs((phi - e + math.pi) % (2 * math.pi) - math.pi) > 1e-9
    assert np.array_equal(A.contains(phi)[far], want[far])


# ---- occluded_arcs: closed forms ----------------------------------------------


def test_identity_arc_behind_disc():
    s = geom.occluded_arcs(ONE, 8.0, ID)
    assert s.measure() == pytest.approx(2 * math.asin(0.1), abs=1e-12)
    assert geom.arc_fraction(s) == pytest.approx(0.0318843, abs=1e-7)


def test_identity_arc_through_disc():
    s = geom.occluded_arcs(ONE, 4.6, ID)
    want = 2 * math.acos((4.6**2 + 25 - 0.25) / (2 * 4.6 * 5))
    assert s.measure() == pytest.approx(want, abs=1e-12)
    assert want == pytest.approx(0.1251291, abs=1e-7)


def test_dilated_arc():
    s = geom.occluded_arcs(ONE, 8.0, MorphTransform.dilate(0.2))
    assert s.measure() == pytest.approx(2 * (math.asin(0.1) + math.asin(0.025)), abs=1e-12)


@pytest.mark.parametrize("method", ["exact", "scan"])
def test_eroded_arc(method):
    s = geom.occluded_arcs(ONE, 8.0, MorphTransform.erode(0.2), method=method)
    assert s.measure() == pytest.approx(2 * (math.asin(0.1) - math.asin(0.025)), abs=1e-8)
    assert s.measure() == pytest.approx(0.1503297, abs=1e-7)


def test_probe_radius_must_exceed_beta():
    with pytest.raises(InvalidInputError):
        geom.occluded_arcs(ONE, 0.1, MorphTransform.erode(0.2))


def test_empty_shadows_give_empty_arcs():
    assert geom.occluded_arcs([], 3.0, MorphTransform.dilate(0.3)).measure() == 0.0


# ---- occluded_arcs against pointwise membership -----------------------------


def _membership(kind, beta, x, y, d):
    if kind is MorphKind.IDENTITY:
        return oracles.in_union(x, y, d)
    if kind is MorphKind.DILATE:
        return oracles.distance_to_union(x, y, d) <= beta
    out = np.zeros(x.shape, bool)
    cand = np.flatnonzero(oracles.in_union(x, y, d))
    for i in cand:
        out[i] = oracles.disc_contained((x[i], y[i]), beta, d, n_ring=180)
    return out


@pytest.mark.parametrize("kind", list(MorphKind))
def test_occluded_fraction_matches_stratified_sampling(kind):
    rng = np.random.default_rng({"erode": 1, "identity": 2, "dilate": 3}[kind.value])
    n = 2000 if kind is MorphKind.ERODE else 20_000
    for _ in range(15):
        d = oracles.random_discs(rng, int(rng.integers(1, 30)))
        beta = 0.0 if kind is MorphKind.IDENTITY else float(rng.uniform(0.02, 0.4))
        t = MorphTransform(kind, beta)
        r = float(rng.uniform(max(beta, 0.5) + 0.1, 10.0))
        phi = oracles.stratified_angles(rng, n)
        hit = _membership(kind, beta, r * np.cos(phi), r * np.sin(phi), d)
        est = hit.mean()
        f = geom.occluded_fraction(shadows_of(d), r, t)
        se = max(math.sqrt(est * (1 - est) / n), 1.0 / n)
        assert abs(f - est) <= 3 * se, (kind, r, beta)


def test_dilation_arcs_agree_with_distance_pointwise():
    rng = np.random.default_rng(8)
    for _ in range(20):
        d = oracles.random_discs(rng, 10)
        beta, r = float(rng.uniform(0.05, 0.5)), float(rng.uniform(1, 10))
        s = geom.occluded_arcs(shadows_of(d), r, MorphTransform.dilate(beta))
        phi = rng.uniform(0, 2 * math.pi, 10_000)
        want = oracles.distance_to_union(r * np.cos(phi), r * np.sin(phi), d) <= beta
        ends = np.append(s.intervals.ravel(), np.inf)
        with np.errstate(invalid="ignore"):
            gap = np.nanmin(np.abs((phi[:, None] - ends[None, :] + math.pi) % (2 * math.pi) - math.pi), axis=1, initial=np.inf)
        far = gap > 1e-9
        assert np.array_equal(s.contains(phi)[far], want[far])


def test_exact_and_scan_erosion_agree():
    rng = np.random.default_rng(9)
    for _ in range(10):
        d = oracles.random_discs(rng, int(rng.integers(2, 20)), rho=(0.1, 0.6))
        beta, r = float(rng.uniform(0.05, 0.4)), float(rng.uniform(2, 10))
        t = MorphTransform.erode(beta)
        a = geom.occluded_arcs(shadows_of(d), r, t).measure()
        b = geom.occluded_arcs(shadows_of(d), r, t, method="scan").measure()
        assert a == pytest.approx(b, abs=1e-6)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.5), st.floats(1.0, 10.0))
@settings(max_examples=60, deadline=None)
def test_transform_monotone(seed, beta, r):
    rng = np.random.default_rng(seed)
    sh = shadows_of(oracles.random_discs(rng, int(rng.integers(1, 15))))
    e = geom.occluded_fraction(sh, r, MorphTransform.erode(beta)) if r > beta else 0.0
    i = geom.occluded_fraction(sh, r, ID)
    dl = geom.occluded_fraction(sh, r, MorphTransform.dilate(beta))
    assert e <= i + 1e-12
    assert i <= dl + 1e-12


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_visible_region_is_star_shaped(seed):
    rng = np.random.default_rng(seed)
    sh = shadows_of(oracles.random_discs(rng, 12))
    p = rng.uniform(-10, 10, (500, 2))
    vis = ~geom.union_membership(p, sh)
    lam = rng.random((500, 1))
    assert not geom.union_membership(lam[vis] * p[vis], sh).any()


# ---- membership --------------------------------------------------------------


def test_dilated_membership_examples():
    assert geom.dilated_membership((8.0, 0.0), ONE, 0.0)
    # distance to the upper tangent line through the origin
    want = math.hypot(8, 0.95) * math.sin(math.atan2(0.95, 8) - math.asin(0.1))
    assert geom.distance_to_union((8.0, 0.95), ONE) == pytest.approx(want, abs=1e-12)
    assert geom.dilated_membership((8.0, 0.95), ONE, 0.2)
    assert not geom.dilated_membership((2.0, 0.0), ONE, 0.2)


def test_eroded_membership_examples():
    assert geom.eroded_membership((8.0, 0.0), ONE, 0.1)
    # half-width of the shadow at depth 8 is 8 sin(asin .1) = 0.8 > 0.5
    assert geom.eroded_membership((8.0, 0.0), ONE, 0.5)
    assert oracles.disc_contained((8.0, 0.0), 0.5, np.array([[5.0, 0.0, 0.5]]))
    assert not geom.eroded_membership((8.0, 0.0), ONE, 0.9)
    assert not geom.eroded_membership((5.0, 0.0), ONE, 0.6)


def test_zero_erosion_is_union_membership():
    rng = np.random.default_rng(11)
    d = oracles.random_discs(rng, 10)
    p = rng.uniform(-10, 10, (2000, 2))
    got = geom.eroded_membership(p, shadows_of(d), 0.0)
    assert np.array_equal(got, oracles.in_union(p[:, 0], p[:, 1], d))


def _erosion_cases(rng, count, k_max=8):
    for _ in range(count):
        d = oracles.random_discs(rng, int(rng.integers(1, k_max + 1)), rho=(0.1, 0.6))
        j = int(rng.integers(len(d)))
        cx, cy, rho = d[j]
        dist = math.hypot(cx, cy)
        r = dist - rho + rng.uniform(0, 10 - dist + rho)
        a = math.atan2(cy, cx) + rng.uniform(-1.5, 1.5) * math.asin(rho / dist)
        yield d, (r * math.cos(a), r * math.sin(a)), float(rng.uniform(0.02, 0.5))


def check_erosion_against_sampling(rng, count, n_ring=360):
    """Disagreements between eroded_membership and dense sampling.

    Cases where the sampled answer flips between slightly smaller and
    slightly larger discs are too close to call and are left out.
    """
    bad, used = 0, 0
    for d, p, beta in _erosion_cases(rng, count):
        lo = oracles.disc_contained(p, beta * 0.995, d, n_ring)
        hi = oracles.disc_contained(p, beta * 1.005, d, n_ring)
        if lo != hi:
            continue
        used += 1
        bad += geom.eroded_membership(p, shadows_of(d), beta) != lo
    return bad, used


def test_eroded_membership_matches_containment_sampling():
    bad, used = check_erosion_against_sampling(np.random.default_rng(12), 800)
    assert used > 700
    assert bad == 0


def test_circle_cover_arcs_full_when_inside():
    s = geom.circle_cover_arcs((8.0, 0.0), 0.3, ONE)
    assert s.measure() == pytest.approx(2 * math.pi)
    s = geom.circle_cover_arcs((8.0, 0.8), 0.3, ONE)
    assert 0 < s.measure() < 2 * math.pi


# ---- areas -------------------------------------------------------------------


def test_morph_area_single_shadow():
    area = geom.morph_area(ONE, ID, 10.0)
    assert area == pytest.approx(7.88, abs=0.02)
    assert geom.morph_area(ONE, ID, 10.0, method="radial") == pytest.approx(area, abs=1e-4)


def test_morph_area_empty_and_full():
    assert geom.morph_area([], ID, 10.0) == 0.0
    ring = [disc(2 * math.cos(a), 2 * math.sin(a), 0.5) for a in np.linspace(0, 2 * math.pi, 40, endpoint=False)]
    full = math.pi * 100
    # a ring of discs hides everything beyond radius 2.5
    assert geom.morph_area(ring, ID, 10.0) == pytest.approx(full - math.pi * 1.5**2, rel=2e-2)
    assert geom.morph_area(ring, MorphTransform.dilate(2.0), 10.0) == pytest.approx(full, abs=1e-6)


def test_exact_and_radial_areas_agree():
    rng = np.random.default_rng(13)
    for _ in range(8):
        sh = shadows_of(oracles.random_discs(rng, int(rng.integers(1, 40))))
        betas = rng.uniform(0.0, 0.5, 3)
        exact = geom.dilated_union_areas(sh, betas, 10.0)
        for b, e in zip(betas, exact):
            t = MorphTransform.dilate(b)
            assert geom.morph_area(sh, t, 10.0, tol=1e-6, method="radial") == pytest.approx(e, abs=1e-3)


def area_by_sampling(rng, d, t, R, side):
    x, y, cell = oracles.stratified_disc_points(rng, R, side)
    if t.kind is MorphKind.IDENTITY:
        hit = oracles.in_union(x, y, d)
    elif t.kind is MorphKind.DILATE:
        hit = oracles.distance_to_union(x, y, d) <= t.beta
    else:
        hit = geom.eroded_membership(np.column_stack([x, y]), shadows_of(d), t.beta)
    n = x.size
    frac = hit.mean()
    area = math.pi * R * R
    return frac * area, area * math.sqrt(frac * (1 - frac) / n)


@pytest.mark.parametrize("kind", [MorphKind.IDENTITY, MorphKind.DILATE])
def test_morph_area_matches_hit_or_miss(kind):
    rng = np.random.default_rng(14)
    for _ in range(3):
        d = oracles.random_discs(rng, int(rng.integers(1, 25)))
        t = MorphTransform(kind, 0.0 if kind is MorphKind.IDENTITY else 0.3)
        est, se = area_by_sampling(rng, d, t, 10.0, 400)
        assert abs(geom.morph_area(shadows_of(d), t, 10.0) - est) <= 3 * se


def test_eroded_area_below_identity():
    rng = np.random.default_rng(15)
    sh = shadows_of(oracles.random_discs(rng, 6))
    a = geom.morph_area(sh, MorphTransform.erode(0.2), 10.0)
    assert 0 < a < geom.morph_area(sh, ID, 10.0)


def test_morph_transform_validation():
    with pytest.raises(InvalidInputError):
        MorphTransform(MorphKind.DILATE, 0.0)
    with pytest.raises(InvalidInputError):
        MorphTransform(MorphKind.ERODE, -1.0)
    assert MorphTransform.from_alpha(-1.0, 0.2) == MorphTransform.erode(0.2)
    assert MorphTransform.from_alpha(0.5, 0.2) == MorphTransform.dilate(0.1)
    assert MorphTransform.from_alpha(0.0, 0.2) == ID
