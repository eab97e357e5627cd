"""Fractional sheet sampling tests.

fbs_cov is checked against an independent per-axis product formula and
frozen hand values; the min(t,s) identity pins the N=1, H=1/2 case
exactly.  Sampler tests cover determinism, zero hyperplanes, mixing
linearity, and rank-deficient grids.
"""

import math

import numpy as np
import pytest

from fieldcorrespond import (
    EXP_CLOCK_LIMIT,
    GRID_CAP,
    ConfigError,
    DimensionMismatchError,
    HurstSpec,
    NumericRangeError,
    SheetSampler,
    Window,
    build_cov_matrix,
    factor_covariance,
    fbs_cov,
    load_batch,
    sample_sheet_batch,
    sheet_points,
    substream,
)


def fbs_cov_reference(t, s, H):
    out = 1.0
    for tl, sl, h in zip(t, s, H):
        out *= abs(tl) ** (2 * h) + abs(sl) ** (2 * h) - abs(tl - sl) ** (2 * h)
    return out / 2.0 ** len(H)


def test_fbs_cov_frozen_values():
    assert fbs_cov([2.0], [3.0], [0.3]) == pytest.approx(1.2244493057210803, rel=1e-15)
    assert fbs_cov([1.0], [4.0], [0.7]) == pytest.approx(1.6544338923114568, rel=1e-15)


def test_fbs_cov_matches_reference(rng):
    for _ in range(40):
        nn = int(rng.integers(1, 4))
        t = rng.uniform(-3, 3, nn)
        s = rng.uniform(-3, 3, nn)
        h = rng.uniform(0.05, 1.0, nn)
        assert fbs_cov(t, s, h) == pytest.approx(
            fbs_cov_reference(t, s, h), rel=1e-13, abs=1e-15
        )


def test_fbs_cov_separable_product():
    t, s = (2.0, 1.0), (3.0, 4.0)
    h = (0.3, 0.7)
    assert fbs_cov(t, s, h) == pytest.approx(
        fbs_cov([t[0]], [s[0]], [h[0]]) * fbs_cov([t[1]], [s[1]], [h[1]]), rel=1e-14
    )


def test_fbs_cov_zero_at_origin():
    assert fbs_cov([0.0], [2.5], [0.4]) == 0.0
    assert fbs_cov([0.0, 1.0], [2.0, 3.0], [0.4, 0.6]) == 0.0


def test_fbs_cov_h_one_is_product():
    # H = 1: 0.5(t^2 + s^2 - (t-s)^2) = t s exactly.
    assert fbs_cov([3.0], [5.0], [1.0]) == pytest.approx(15.0, rel=1e-14)


def test_fbs_cov_h_half_is_min_on_positives():
    for t in range(5):
        for s in range(5):
            assert fbs_cov([float(t)], [float(s)], [0.5]) == pytest.approx(
                float(min(t, s)), abs=1e-12
            )


def test_fbs_cov_validates():
    with pytest.raises(DimensionMismatchError):
        fbs_cov([1.0, 2.0], [1.0], [0.5])
    with pytest.raises(ConfigError):
        fbs_cov([1.0], [1.0], [0.0])
    with pytest.raises(ConfigError):
        fbs_cov([1.0], [1.0], [1.5])


def test_hurst_spec_promotes_and_validates():
    h = HurstSpec([0.3, 0.7])
    assert (h.n, h.N) == (1, 2)
    np.testing.assert_array_equal(h.row(0), [0.3, 0.7])
    h2 = HurstSpec([[0.3], [0.9]])
    assert (h2.n, h2.N) == (2, 1)
    with pytest.raises(ConfigError, match="0 < H <= 1"):
        HurstSpec([[0.0, 0.5]])
    with pytest.raises(ConfigError, match="0 < H <= 1"):
        HurstSpec([[1.2]])


# ---------------------------------------------------------------------------
# Covariance matrices


def test_cov_matrix_min_identity_exact():
    # Integer N=1 grid at H = 1/2: covariance is exactly min(t, s).
    w = Window((0,), (6,))
    pts = sheet_points(w, "integer")
    cov = build_cov_matrix(pts, [0.5])
    ref = np.minimum.outer(np.arange(7.0), np.arange(7.0))
    assert np.array_equal(cov, ref)


def test_cov_matrix_symmetric_bit_exact(rng):
    w = Window((-2, -2), (2, 2))
    cov = build_cov_matrix(sheet_points(w, "integer"), [0.3, 0.8])
    assert np.array_equal(cov, cov.T)


def test_cov_matrix_matches_fbs_cov(rng):
    w = Window((-1, 0), (1, 2))
    pts = sheet_points(w, "integer")
    cov = build_cov_matrix(pts, [0.4, 0.9])
    for i in range(pts.shape[0]):
        for j in range(pts.shape[0]):
            assert cov[i, j] == pytest.approx(
                fbs_cov(pts[i], pts[j], [0.4, 0.9]), rel=1e-13, abs=1e-15
            )


def test_cov_matrix_grid_cap():
    pts = np.zeros((GRID_CAP + 1, 1))
    with pytest.raises(NumericRangeError, match="cap"):
        build_cov_matrix(pts, [0.5])


def test_sheet_points_exponential_clock():
    w = Window((-1,), (1,))
    np.testing.assert_allclose(
        sheet_points(w, "exponential")[:, 0],
        [math.exp(-1.0), 1.0, math.exp(1.0)],
        rtol=1e-15,
    )


def test_sheet_points_exponential_limit():
    w = Window((0,), (EXP_CLOCK_LIMIT + 1,))
    with pytest.raises(NumericRangeError, match="exponential clock"):
        sheet_points(w, "exponential")


def test_factor_covariance_reconstructs(rng):
    w = Window((0, 0), (3, 3))
    cov = build_cov_matrix(sheet_points(w, "integer"), [0.3, 0.7])
    l = factor_covariance(cov)
    np.testing.assert_allclose(l @ l.T, cov, atol=1e-12 * max(1.0, np.abs(cov).max()))


def test_factor_covariance_zero_rows_exact():
    cov = np.diag([0.0, 2.0, 0.0])
    l = factor_covariance(cov)
    assert np.all(l[0] == 0.0) and np.all(l[2] == 0.0)


def test_factor_covariance_rejects_asymmetric():
    with pytest.raises(DimensionMismatchError, match="not symmetric"):
        factor_covariance(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_factor_covariance_rejects_indefinite():
    with pytest.raises(NumericRangeError, match="indefinite"):
        factor_covariance(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_factor_covariance_clips_tiny_negatives():
    # Rank-deficient PSD matrix whose eigh output dips below zero at
    # rounding level: must factor, not raise.
    v = np.array([1.0, 1.0, 1.0])
    cov = np.outer(v, v)
    l = factor_covariance(cov)
    np.testing.assert_allclose(l @ l.T, cov, atol=1e-12)


# ---------------------------------------------------------------------------
# Streams and the sampler


def test_substream_deterministic():
    a = substream(7, 3, 1).standard_normal(5)
    b = substream(7, 3, 1).standard_normal(5)
    np.testing.assert_array_equal(a, b)


def test_substream_distinct_cells():
    a = substream(7, 0, 1).standard_normal(5)
    b = substream(7, 1, 0).standard_normal(5)
    assert not np.array_equal(a, b)


def test_sampler_zero_hyperplanes_exact():
    h = HurstSpec([[0.3, 0.7]])
    w = Window((0, 0), (3, 3))
    f = SheetSampler(np.eye(1), h, w, "integer").sample(seed=11)
    assert np.all(f.values[0, :, :] == 0.0)
    assert np.all(f.values[:, 0, :] == 0.0)
    assert not np.all(f.values == 0.0)


def test_sampler_determinism_across_instances():
    h = HurstSpec([[0.4], [0.8]])
    w = Window((0,), (4,))
    f1 = SheetSampler(np.eye(2), h, w, "integer").sample(seed=3, replication=2)
    f2 = SheetSampler(np.eye(2), h, w, "integer").sample(seed=3, replication=2)
    np.testing.assert_array_equal(f1.values, f2.values)
    assert f1.meta["seed"] == 3 and f1.meta["replication"] == 2


def test_sampler_mixing_linearity():
    # Doubling A doubles every sample exactly: the component draws are
    # identical, the mixing is applied afterwards.
    h = HurstSpec([[0.4], [0.8]])
    w = Window((0,), (4,))
    f1 = SheetSampler(np.eye(2), h, w, "integer").sample(seed=9)
    f2 = SheetSampler(2.0 * np.eye(2), h, w, "integer").sample(seed=9)
    np.testing.assert_array_equal(f2.values, 2.0 * f1.values)


def test_sampler_h_one_lies_on_line():
    # N = 1, H = 1: B_t = t B_1, so samples live on a one-dimensional
    # subspace up to factorization roundoff.
    h = HurstSpec([[1.0]])
    w = Window((0,), (5,))
    s = SheetSampler(np.eye(1), h, w, "integer")
    for rep in range(5):
        f = s.sample(seed=21, replication=rep)
        b1 = f.at((1,))[0]
        for t in range(6):
            assert f.at((t,))[0] == pytest.approx(t * b1, abs=1e-6 * max(1.0, abs(b1)))


def test_sampler_variance_matches_cov(rng):
    # Single-site second moment against the closed form, 4 SE margin.
    h = HurstSpec([[0.6]])
    w = Window((0,), (3,))
    s = SheetSampler(np.eye(1), h, w, "integer")
    reps = 3000
    vals = np.array([s.sample(seed=5, replication=r).at((3,))[0] for r in range(reps)])
    sq = vals ** 2
    ref = fbs_cov([3.0], [3.0], [0.6])
    se = sq.std(ddof=1) / math.sqrt(reps)
    assert abs(sq.mean() - ref) < 4.0 * se


def test_batch_save_load_roundtrip(tmp_path):
    h = HurstSpec([[0.3, 0.7]])
    w = Window((0, 0), (2, 2))
    batch = sample_sheet_batch(np.eye(1), h, w, "integer", seed=13, replications=4)
    batch.save(tmp_path)
    assert (tmp_path / "manifest.json").exists()
    assert (tmp_path / "rep_00003.csv").exists()
    back = load_batch(tmp_path)
    assert back.seed == 13
    assert back.replications == 4
    assert back.config["H"] == [[0.3, 0.7]]
    for a, b in zip(batch.fields, back.fields):
        np.testing.assert_array_equal(a.values, b.values)


def test_batch_threads_do_not_change_values():
    h = HurstSpec([[0.5], [0.9]])
    w = Window((-1,), (3,))
    b1 = sample_sheet_batch(np.eye(2), h, w, "integer", seed=2, replications=12, threads=1)
    b2 = sample_sheet_batch(np.eye(2), h, w, "integer", seed=2, replications=12, threads=3)
    for a, b in zip(b1.fields, b2.fields):
        np.testing.assert_array_equal(a.values, b.values)


def test_batch_rejects_zero_replications():
    h = HurstSpec([[0.5]])
    with pytest.raises(ConfigError, match="replications"):
        sample_sheet_batch(np.eye(1), h, Window((0,), (1,)), "integer", 0, 0)
