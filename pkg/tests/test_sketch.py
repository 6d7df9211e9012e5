import numpy as np
import pytest

from randne.errors import NotOrthonormal
from randne.linalg import thin_qr
from randne.rng import make_rng
from randne.sketch import (
    SampleSet,
    apply_sketch,
    coherence,
    dct2_apply,
    random_sign_diagonal,
    sample_count,
    sample_rows,
    smooth_and_sample,
)


def naive_dct2_matrix(m):
    """Orthonormal DCT-2 built entry by entry from the cosine definition."""
    j = np.arange(m)
    k = np.arange(m)[:, None]
    table = np.sqrt(2.0 / m) * np.cos(np.pi * (2 * j + 1) * k / (2.0 * m))
    table[0, :] /= np.sqrt(2.0)
    return table


@pytest.mark.parametrize("m", [1, 2, 4, 37, 512])
def test_dct2_orthogonality(m):
    f = dct2_apply(np.eye(m))
    assert np.linalg.norm(f @ f.T - np.eye(m), 2) <= 1e-12


@pytest.mark.parametrize("m", [1, 2, 4, 16, 100, 257])
def test_dct2_matches_naive_cosine_table(m):
    rng = np.random.default_rng(m)
    x = rng.standard_normal((m, 3))
    want = naive_dct2_matrix(m) @ x
    got = dct2_apply(x)
    assert np.allclose(got, want, rtol=0, atol=1e-12 * np.abs(want).max())


def test_dct2_first_row_is_constant():
    m = 16
    f = dct2_apply(np.eye(m))
    assert np.allclose(f[0], 1.0 / np.sqrt(m), rtol=0, atol=1e-15)


def test_dct2_preserves_norms():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((64, 5))
    y = dct2_apply(x)
    assert np.allclose(
        np.linalg.norm(y, axis=0), np.linalg.norm(x, axis=0), rtol=1e-13
    )


def test_random_sign_diagonal():
    d = random_sign_diagonal(1000, make_rng(0))
    assert d.shape == (1000,)
    assert set(np.unique(d)) == {-1.0, 1.0}
    # both signs occur with roughly equal frequency
    assert abs(d.mean()) < 0.2
    d2 = random_sign_diagonal(1000, make_rng(0))
    assert np.array_equal(d, d2)


def test_sample_rows_fields():
    s = sample_rows(100, 30, make_rng(7))
    assert isinstance(s, SampleSet)
    assert s.m == 100 and s.c == 30
    assert s.indices.shape == (30,)
    assert s.indices.min() >= 0 and s.indices.max() < 100
    assert np.isclose(s.scale, np.sqrt(100 / 30), rtol=1e-15)


def test_sample_rows_with_replacement_allows_more_than_m():
    s = sample_rows(4, 40, make_rng(1))
    assert s.indices.shape == (40,)
    assert s.indices.max() < 4


def test_apply_sketch_replays_deterministically():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((50, 6))
    d = random_sign_diagonal(50, make_rng(3))
    s = sample_rows(50, 18, make_rng(4))
    first = apply_sketch(a, d, s)
    second = apply_sketch(a, d, s)
    assert np.array_equal(first, second)
    assert first.shape == (18, 6)


def test_apply_sketch_is_row_selection_of_transform():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((32, 4))
    d = random_sign_diagonal(32, make_rng(9))
    s = sample_rows(32, 10, make_rng(10))
    full = dct2_apply(d[:, None] * a)
    want = full[s.indices] * s.scale
    assert np.array_equal(apply_sketch(a, d, s), want)


def test_smooth_and_sample_matches_manual_draw_order():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((40, 5))
    got = smooth_and_sample(a, 12, make_rng(77))
    replay = make_rng(77)
    d = random_sign_diagonal(40, replay)
    s = sample_rows(40, 12, replay)
    assert np.array_equal(got, apply_sketch(a, d, s))


def test_expected_sampling_gram_is_identity():
    # E[S'S] = I for the scaled uniform-with-replacement sampler; the
    # empirical mean over many draws lands within 5%
    m, c, draws = 8, 4, 10000
    rng = make_rng(0)
    counts = np.zeros(m)
    for t in range(draws):
        s = sample_rows(m, c, rng.spawn(t))
        np.add.at(counts, s.indices, s.scale**2)
    diag_mean = counts / draws
    assert np.all(np.abs(diag_mean - 1.0) < 0.05)


def test_coherence_range_and_determinism():
    q = thin_qr(np.random.default_rng(2).standard_normal((128, 8))).q
    mu = coherence(q, make_rng(5))
    m, n = q.shape
    assert n / m - 1e-12 <= mu <= 1.0 + 1e-12
    assert coherence(q, make_rng(5)) == mu


def test_coherence_matches_direct_row_norms():
    q = thin_qr(np.random.default_rng(6).standard_normal((64, 4))).q
    mu = coherence(q, make_rng(11))
    d = random_sign_diagonal(64, make_rng(11))
    fq = dct2_apply(d[:, None] * q)
    assert np.isclose(mu, (fq**2).sum(axis=1).max(), rtol=1e-13)


def test_coherence_rejects_non_orthonormal():
    with pytest.raises(NotOrthonormal):
        coherence(np.random.default_rng(0).standard_normal((20, 3)), make_rng(0))


def test_sample_count_frozen_example():
    # m=1000, n=10, mu=0.01, epsilon=0.5, delta=0.1:
    # 2*1000*0.01*(1+1/6)*ln(100)/0.25 = 429.8... -> 430
    assert sample_count(1000, 10, 0.01, 0.5, 0.1) == 430


def test_sample_count_never_below_n():
    # the count is floored at n so the sketch can still have full rank
    for n in (1, 2, 10, 50):
        for eps in (0.3, 0.9):
            for delta in (0.1, 0.9):
                assert sample_count(100, n, n / 100, eps, delta) >= n


def test_sample_count_monotone_in_epsilon():
    cs = [sample_count(1000, 10, 0.01, e, 0.1) for e in (0.25, 0.5, 0.75)]
    assert cs[0] > cs[1] > cs[2]


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(m=100, n=10, mu=0.05, epsilon=0.0, delta=0.1),
        dict(m=100, n=10, mu=0.05, epsilon=1.0, delta=0.1),
        dict(m=100, n=10, mu=0.05, epsilon=0.5, delta=0.0),
        dict(m=100, n=10, mu=0.05, epsilon=0.5, delta=1.0),
        dict(m=100, n=10, mu=0.01, epsilon=0.5, delta=0.1),  # mu < n/m
        dict(m=100, n=10, mu=1.5, epsilon=0.5, delta=0.1),
    ],
)
def test_sample_count_rejects_bad_inputs(kwargs):
    with pytest.raises(ValueError):
        sample_count(**kwargs)


def test_sketch_of_orthonormal_is_well_conditioned_typically():
    # at c = 3n the sketch of an orthonormal basis should be far from rank
    # deficient; check a straightforward draw
    q = thin_qr(np.random.default_rng(8).standard_normal((256, 16))).q
    a_s = smooth_and_sample(q, 48, make_rng(21))
    sv = np.linalg.svd(a_s, compute_uv=False)
    assert sv[-1] > 0.1
    assert sv[0] < 3.0
