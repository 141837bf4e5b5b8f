import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from forestgen import ipp

REGION = ipp.Region(0.0, 100.0, 0.0, 100.0)


def brute_force_min_distance_ok(points: np.ndarray, r: float) -> bool:
    """O(n^2) oracle: every retained pair at least r apart."""
    n = len(points)
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(points[i] - points[j]) < r:
                return False
    return True


def riemann_mass(field, region, cells=400):
    """Independent integral oracle: midpoint Riemann sum on a fine grid."""
    xs = np.linspace(region.x_min, region.x_max, cells + 1)
    ys = np.linspace(region.y_min, region.y_max, cells + 1)
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    gx, gy = np.meshgrid(cx, cy)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    cell_area = (xs[1] - xs[0]) * (ys[1] - ys[0])
    return float(field.rate_at(pts).sum() * cell_area)


# ---------------------------------------------------------------------------
# regions and intensity fields

def test_region_validation():
    with pytest.raises(ValueError):
        ipp.Region(0, 0, 0, 1)
    with pytest.raises(ValueError):
        ipp.Region(0, 1, 2, 1)


def test_integrate_constant():
    assert ipp.integrate_intensity(ipp.ConstantIntensity(0.01), REGION) == pytest.approx(100.0)
    assert ipp.integrate_intensity(ipp.ConstantIntensity(0.0), REGION) == 0.0


def test_integrate_two_cell_raster():
    # two cells of area 50 each with intensities 2 and 1 -> mass 150
    cell = math.sqrt(50.0)
    field = ipp.RasterIntensity(0.0, 0.0, cell, np.array([[2.0, 1.0]]))
    region = ipp.Region(0.0, 2 * cell, 0.0, cell)
    assert ipp.integrate_intensity(field, region) == pytest.approx(150.0, rel=1e-12)
    assert ipp.integrate_intensity(field, region) == pytest.approx(
        riemann_mass(field, region), rel=1e-9)


def test_integrate_raster_clips_to_region():
    field = ipp.RasterIntensity(0.0, 0.0, 10.0, np.array([[1.0, 3.0]]))
    # region covers the left cell plus half of the right one
    region = ipp.Region(0.0, 15.0, 0.0, 10.0)
    assert ipp.integrate_intensity(field, region) == pytest.approx(100.0 + 150.0)


def test_integrate_requires_coverage():
    field = ipp.RasterIntensity(0.0, 0.0, 10.0, np.array([[1.0]]))
    with pytest.raises(ipp.IntensityError, match="does not cover"):
        ipp.integrate_intensity(field, ipp.Region(0, 20, 0, 10))


def test_raster_rejects_negative_cell():
    with pytest.raises(ipp.IntensityError, match=r"\(i=1, j=0\)"):
        ipp.RasterIntensity(0, 0, 1.0, np.array([[1.0, -2.0]]))


def test_raster_max_rate_over_region_only():
    field = ipp.RasterIntensity(0, 0, 10.0, np.array([[1.0, 5.0]]))
    assert field.max_rate(ipp.Region(0, 10, 0, 10)) == 1.0
    assert field.max_rate(ipp.Region(0, 20, 0, 10)) == 5.0


# ---------------------------------------------------------------------------
# homogeneous sampling

def test_sample_rate_zero_always_empty():
    for seed in range(10):
        assert len(ipp.sample_homogeneous(REGION, 0.0, seed)) == 0


def test_sample_homogeneous_count_statistics():
    counts = np.array([len(ipp.sample_homogeneous(REGION, 0.01, s))
                       for s in ipp.replication_seeds(314, 2000)])
    se = math.sqrt(100.0 / 2000)
    assert abs(counts.mean() - 100.0) <= 3 * se
    dispersion = counts.var(ddof=1) / counts.mean()
    assert 0.8 <= dispersion <= 1.2


def test_sample_homogeneous_uniformity_ks():
    xs = np.concatenate([ipp.sample_homogeneous(REGION, 0.005, s).points[:, 0]
                         for s in ipp.replication_seeds(2718, 150)])
    assert len(xs) > 5000
    result = sps.kstest(xs / 100.0, "uniform")
    assert result.pvalue >= 0.01


def test_sample_points_inside_region():
    pattern = ipp.sample_homogeneous(ipp.Region(-5, 5, 10, 30), 1.0, seed=9)
    assert np.all(pattern.points[:, 0] >= -5) and np.all(pattern.points[:, 0] <= 5)
    assert np.all(pattern.points[:, 1] >= 10) and np.all(pattern.points[:, 1] <= 30)


def test_sample_deterministic_per_seed():
    a = ipp.sample_homogeneous(REGION, 0.02, seed=4)
    b = ipp.sample_homogeneous(REGION, 0.02, seed=4)
    assert np.array_equal(a.points, b.points)
    assert a.seed == b.seed == 4


def test_poisson_count_exactness_small_means():
    # inversion regime: empirical pmf against the analytic pmf
    rng = np.random.default_rng(1)
    draws = np.array([ipp.poisson_count(3.0, rng) for _ in range(20000)])
    for k in range(8):
        expected = math.exp(-3.0) * 3.0 ** k / math.factorial(k)
        assert abs((draws == k).mean() - expected) < 0.01


def test_poisson_count_large_mean_regime():
    rng = np.random.default_rng(2)
    draws = np.array([ipp.poisson_count(80.0, rng) for _ in range(3000)])
    assert abs(draws.mean() - 80.0) < 3 * math.sqrt(80.0 / 3000)
    assert 0.8 <= draws.var(ddof=1) / draws.mean() <= 1.2


# ---------------------------------------------------------------------------
# thinning

def test_thinning_constant_field_equals_homogeneous():
    field = ipp.ConstantIntensity(0.015)
    for seed in (0, 1, 99):
        thin = ipp.sample_ipp_thinning(field, REGION, seed)
        homog = ipp.sample_homogeneous(REGION, 0.015, seed)
        assert np.array_equal(thin.points, homog.points)


def test_thinning_zero_mass_returns_empty():
    assert len(ipp.sample_ipp_thinning(ipp.ConstantIntensity(0.0), REGION, 5)) == 0


def test_thinning_never_exceeds_envelope():
    field = ipp.RasterIntensity(0, 0, 50.0, np.array([[0.02, 0.005], [0.01, 0.03]]))
    for seed in range(20):
        thin = ipp.sample_ipp_thinning(field, REGION, seed)
        envelope = ipp.sample_homogeneous(REGION, field.max_rate(REGION), seed)
        assert len(thin) <= len(envelope)
        assert np.all(REGION.contains(thin.points))


def test_thinning_two_cell_conditional_fraction():
    # lambda1 = 2 * lambda2 over equal areas: a point lands in cell 1 with
    # probability 2/3 (oracle: Riemann masses of the two halves)
    field = ipp.RasterIntensity(0, 0, 50.0, np.array([[4.0, 2.0]]))
    region = ipp.Region(0, 100, 0, 50)
    left = ipp.Region(0, 50, 0, 50)
    expected = riemann_mass(field, left) / riemann_mass(field, region)
    assert expected == pytest.approx(2.0 / 3.0, rel=1e-9)
    pts = ipp.sample_ipp_thinning(field, region, seed=12345).points
    n = len(pts)
    assert n >= 10_000
    frac = float((pts[:, 0] < 50.0).mean())
    half_width = 2.576 * math.sqrt(expected * (1 - expected) / n)
    assert abs(frac - expected) <= half_width


def test_thinning_mean_count_matches_mass():
    field = ipp.RasterIntensity(0, 0, 50.0, np.array([[0.02, 0.01], [0.005, 0.04]]))
    mass = ipp.integrate_intensity(field, REGION)
    counts = np.array([len(ipp.sample_ipp_thinning(field, REGION, s))
                       for s in ipp.replication_seeds(55, 800)])
    se = math.sqrt(mass / 800)
    assert abs(counts.mean() - mass) <= 3 * se


# ---------------------------------------------------------------------------
# spacing filter

def test_filter_r_zero_unchanged():
    pattern = ipp.sample_homogeneous(REGION, 0.01, seed=8)
    out = ipp.min_distance_filter(pattern, 0.0)
    assert np.array_equal(out.points, pattern.points)


def test_filter_keeps_first_of_close_pair():
    pattern = ipp.PointPattern(np.array([[0.0, 0.0], [0.0, 0.5]]), seed=0)
    out = ipp.min_distance_filter(pattern, 1.0)
    assert np.array_equal(out.points, [[0.0, 0.0]])


def test_filter_thousand_points_against_oracle():
    rng = np.random.default_rng(3)
    pattern = ipp.PointPattern(rng.uniform(0, 100, size=(1000, 2)), seed=3)
    out = ipp.min_distance_filter(pattern, 4.0)
    assert brute_force_min_distance_ok(out.points, 4.0)
    # greedy keeps the earliest point of any conflicting set
    assert np.array_equal(out.points[0], pattern.points[0])


@given(seed=st.integers(0, 2**31), r=st.floats(0.0, 30.0))
@settings(max_examples=25, deadline=None)
def test_filter_property(seed, r):
    rng = np.random.default_rng(seed)
    pattern = ipp.PointPattern(rng.uniform(0, 100, size=(60, 2)), seed=seed)
    out = ipp.min_distance_filter(pattern, r)
    assert brute_force_min_distance_ok(out.points, r)
    assert len(out) <= len(pattern)


# ---------------------------------------------------------------------------
# serialization

def test_intensity_dict_round_trip():
    field = ipp.RasterIntensity(1.0, 2.0, 5.0, np.array([[1.0, 2.0], [3.0, 4.0]]))
    again = ipp.intensity_from_dict(ipp.intensity_to_dict(field))
    assert np.array_equal(again.values, field.values)
    assert (again.x_min, again.y_min, again.cell_size) == (1.0, 2.0, 5.0)


def test_intensity_dict_rejects_bad_bounds():
    data = ipp.intensity_to_dict(ipp.RasterIntensity(0, 0, 5.0, np.array([[1.0]])))
    data["x_max"] = 7.0
    with pytest.raises(ipp.IntensityError, match="does not match"):
        ipp.intensity_from_dict(data)


def test_pattern_csv():
    pattern = ipp.PointPattern(np.array([[1.5, 2.25]]), seed=0)
    assert ipp.pattern_to_csv(pattern) == "x,y\n1.5,2.25\n"
    empty = ipp.PointPattern(np.zeros((0, 2)), seed=0)
    assert ipp.pattern_to_csv(empty) == "x,y\n"
