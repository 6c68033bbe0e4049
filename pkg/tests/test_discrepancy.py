import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capdisc.discrepancy import (
    SpherePointSet,
    cap_count,
    empty_polar_cap,
    estimate_discrepancy,
    exact_discrepancy,
    polar_certificate,
    separation_distance,
    standard_lattice_sphere,
)
from capdisc.errors import TooFew, TooLarge
from capdisc.lambert import NORTH_POLE, Cap, UnitVec3


def random_sphere(rng, n):
    g = rng.normal(size=(n, 3))
    return SpherePointSet(g / np.linalg.norm(g, axis=1)[:, None])


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def brute_force(points, trials, seed):
    """Independent oracle: random closed caps through a random point height."""
    rng = np.random.default_rng(seed)
    P = points.points
    N = len(P)
    best = 0.0
    for _ in range(trials):
        w = rng.normal(size=3)
        w /= np.linalg.norm(w)
        h = P @ w
        for t in h:
            inside = np.sum(h >= t)
            best = max(best, inside / N - (1 - t) / 2)
            above = np.sum(h > t)
            best = max(best, (1 - t) / 2 - above / N)
    return best


def check_witness(points, rep):
    count = cap_count(points, rep.witness)
    assert count == rep.points_in_witness
    assert abs(count / points.N - rep.witness.measure) == pytest.approx(rep.value, abs=1e-15)


# counting

def test_cap_count_examples():
    rng = np.random.default_rng(0)
    pts = random_sphere(rng, 17)
    assert cap_count(pts, Cap(NORTH_POLE, -1.0)) == 17
    assert cap_count(SpherePointSet([[0, 0, 1]]), Cap(NORTH_POLE, 0.5)) == 1
    anti = SpherePointSet([[1, 0, 0], [-1, 0, 0]])
    assert cap_count(anti, Cap(UnitVec3(0, 0, 1), 0.0)) == 2
    assert cap_count(anti, Cap(UnitVec3(0, 0, 1), 0.0, closed=False)) == 0
    assert cap_count(anti, Cap(UnitVec3.normalized((1, 1, 0)), 0.0)) == 1


def test_point_set_validation():
    with pytest.raises(ValueError):
        SpherePointSet([[1, 1, 0]])
    with pytest.raises(TooFew):
        SpherePointSet(np.empty((0, 3)))


# exact mode

def test_single_point():
    rep = exact_discrepancy(SpherePointSet([[0.6, 0.0, 0.8]]))
    assert rep.value == pytest.approx(1.0, abs=1e-15)


def test_antipodal_pair():
    pts = SpherePointSet([[0, 0, 1], [0, 0, -1]])
    rep = exact_discrepancy(pts)
    assert rep.value == pytest.approx(0.5, abs=1e-15)
    check_witness(pts, rep)
    assert brute_force(pts, 2000, 1) == pytest.approx(0.5, abs=1e-3)


def test_two_generic_points_need_midpoint_centres():
    # the best cap holding both points is centred between them
    a = np.array([1.0, 0.0, 0.0])
    b = np.array([math.cos(2.0), math.sin(2.0), 0.0])
    rep = exact_discrepancy(SpherePointSet([a, b]))
    half = math.cos(1.0)
    assert rep.value == pytest.approx(1.0 - (1 - half) / 2, abs=1e-12)


def test_standard_lattice_k8_sandwich():
    pts = standard_lattice_sphere(8)
    rep = exact_discrepancy(pts)
    assert 1 / 32 <= rep.value <= math.sqrt(18) / 8
    check_witness(pts, rep)


def test_exact_dominates_random_caps():
    rng = np.random.default_rng(2)
    for n in (3, 5, 8, 12):
        pts = random_sphere(rng, n)
        rep = exact_discrepancy(pts)
        check_witness(pts, rep)
        assert rep.value >= brute_force(pts, 3000, n) - 1e-12


def test_exact_limit():
    pts = random_sphere(np.random.default_rng(3), 30)
    with pytest.raises(TooLarge):
        exact_discrepancy(pts, limit=20)


def test_threads_do_not_change_result():
    pts = random_sphere(np.random.default_rng(4), 25)
    a = exact_discrepancy(pts, threads=1)
    b = exact_discrepancy(pts, threads=3)
    assert a == b


def test_rotation_invariance():
    rng = np.random.default_rng(5)
    for _ in range(20):
        pts = random_sphere(rng, int(rng.integers(2, 41)))
        base = exact_discrepancy(pts).value
        rot = exact_discrepancy(pts.rotated(random_rotation(rng))).value
        assert abs(base - rot) < 1e-9


# estimate mode

def test_estimate_antipodal():
    pts = SpherePointSet([[0, 0, 1], [0, 0, -1]])
    # a centre at height h above one point scores max(|h|, 1 - |h|) / 2, and
    # |h| is uniform for random centres, so the gap shrinks like 1 / (2 trials)
    est = estimate_discrepancy(pts, 1000, seed=0).value
    assert 0.5 - 2e-3 <= est <= 0.5


def test_estimate_dominated_by_exact():
    rng = np.random.default_rng(6)
    for _ in range(20):
        pts = random_sphere(rng, int(rng.integers(1, 41)))
        est = estimate_discrepancy(pts, 2000, seed=int(rng.integers(100)))
        check_witness(pts, est)
        assert est.value <= exact_discrepancy(pts).value + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 5000))
def test_estimate_monotone_in_trials(seed, trials):
    pts = random_sphere(np.random.default_rng(seed), 9)
    short = estimate_discrepancy(pts, trials, seed=seed).value
    assert estimate_discrepancy(pts, trials + 3000, seed=seed).value >= short


def test_estimate_prefix_one_vs_many():
    pts = standard_lattice_sphere(6)
    vals = [estimate_discrepancy(pts, t, seed=3).value for t in (1, 10, 100, 1000, 10_000)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_estimate_deterministic():
    pts = random_sphere(np.random.default_rng(7), 20)
    assert estimate_discrepancy(pts, 500, seed=9) == estimate_discrepancy(pts, 500, seed=9)


# certificates

def test_polar_certificate_examples():
    rep = polar_certificate(50)
    assert rep.value >= 1 / 200 - 1e-9
    assert math.sqrt(2500) * rep.value >= 0.25 - 5e-8
    assert polar_certificate(10).points_in_witness == 0
    one = polar_certificate(1)
    assert one.N == 1 and one.points_in_witness == 0
    assert one.value >= 0.25 - 1e-9


def test_empty_polar_cap_on_any_set():
    pts = random_sphere(np.random.default_rng(8), 50)
    rep = empty_polar_cap(pts)
    assert rep.points_in_witness == 0
    assert rep.value <= exact_discrepancy(pts).value
    # on the standard set it cuts right above the first ring at z = 1 - 1/K
    for K in (4, 10, 50):
        pts = standard_lattice_sphere(K)
        rep = empty_polar_cap(pts)
        assert rep.value == pytest.approx(1 / (2 * K), abs=1e-8)
        assert rep.value >= polar_certificate(K, points=pts).value


# separation

def test_separation_examples():
    assert separation_distance(SpherePointSet([[0, 0, 1], [0, 0, -1]])) == pytest.approx(2.0)
    tet = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / math.sqrt(3)
    assert abs(separation_distance(SpherePointSet(tet)) - math.sqrt(8 / 3)) <= 1e-12
    with pytest.raises(TooFew):
        separation_distance(SpherePointSet([[0, 0, 1]]))


def test_separation_scaling_k50():
    pts = standard_lattice_sphere(50)
    assert 4 <= separation_distance(pts) * pts.N ** 0.75 <= 13


def test_separation_tree_matches_brute_force():
    pts = random_sphere(np.random.default_rng(9), 3000)
    assert separation_distance(pts, brute_limit=10_000) == separation_distance(pts, brute_limit=10)
