import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vrresgld.diagnostics import (
    ReferencePosterior,
    SampleSet,
    build_reference,
    histogram,
    kept_window,
    mode_occupancy,
    w2_empirical_vs_reference,
    w2_samples,
    w2_series,
    write_metrics,
)
from vrresgld.errors import GridTooNarrowError
from vrresgld.model import MixtureModel, MixtureSpec

samples = st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=12)


@pytest.fixture(scope="module")
def ref(mixture_model):
    return build_reference(mixture_model)


def test_reference_prior_limit():
    model = MixtureModel.from_spec(MixtureSpec(n_data=1, noise_sd=1e4))
    r = build_reference(model, -80, 80, 4000)
    assert abs(r.mean()) < 0.5
    assert r.cdf[-1] == 1.0


def test_reference_flat_prior_symmetry():
    model = MixtureModel.from_spec(MixtureSpec(prior_var=1e12))
    r = build_reference(model)
    np.testing.assert_allclose(r.grid + r.grid[::-1], 20.0, atol=1e-12)
    dens = r.density
    # only compare where the density is representable well away from underflow
    ok = r.log_density > -600
    np.testing.assert_allclose(dens[ok], dens[::-1][ok], rtol=1e-6)


def test_reference_mass_split(ref):
    assert ref.cdf[-1] == 1.0
    low = ref.mass_between(-30, 10)
    # prior ratio between the modes is exp((625 - 25) / 200) = e^3
    assert low == pytest.approx(1 / (1 + math.exp(-3)), abs=2e-3)


def test_reference_cdf_is_trapezoid_integral(ref):
    h = np.diff(ref.grid)
    dens = ref.density
    cells = 0.5 * h * (dens[1:] + dens[:-1])
    total = cells.sum()
    assert np.max(np.abs(np.diff(ref.cdf) - cells / total)) < 1e-10


def test_grid_too_narrow(mixture_model):
    with pytest.raises(GridTooNarrowError):
        build_reference(mixture_model, 0.0, 20.0, 400)
    with pytest.raises(ValueError):
        build_reference(mixture_model, 5.0, 5.0)
    with pytest.raises(ValueError):
        build_reference(mixture_model, 0.0, 1.0, 50)


def test_reference_validation():
    with pytest.raises(ValueError):
        ReferencePosterior(np.array([0.0, 0.0]), np.zeros(2), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        ReferencePosterior(np.array([0.0, 1.0]), np.zeros(2), np.array([0.0, 0.9]))


def test_reference_csv_roundtrip(ref, tmp_path):
    ref.to_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "theta,log_density,cdf"
    back = ReferencePosterior.from_csv(tmp_path / "r.csv")
    assert back.grid.tobytes() == ref.grid.tobytes()
    assert back.cdf.tobytes() == ref.cdf.tobytes()


@pytest.mark.xfail(strict=True, reason=(
    "i.i.d. draws misallocate ~sqrt(p(1-p)/n) = 7e-4 of the mass between modes 30 apart, "
    "so W2 ~ 30 * sqrt(7e-4) ~ 0.8 regardless of implementation"))
def test_w2_self_distance_iid_bimodal(ref):
    draws = ref.sample(np.random.default_rng(0), 100000)
    assert w2_empirical_vs_reference(SampleSet(draws), ref) < 0.05


def test_w2_self_distance_explained_by_mode_mass(ref):
    rng = np.random.default_rng(0)
    p = ref.mass_between(-30, 10)
    for _ in range(4):
        draws = ref.sample(rng, 100000)
        delta = abs(np.mean(draws < 10) - p)
        w2 = w2_empirical_vs_reference(draws, ref)
        # moving mass delta across a gap of ~30 costs W2^2 ~ 30^2 * delta
        assert w2 == pytest.approx(30 * math.sqrt(delta), rel=0.25)


def test_w2_self_distance_within_mode(ref):
    # draws conditioned on fixed mode masses: only within-mode noise remains
    n = 100000
    p = ref.mass_between(-30, 10)
    n_low = int(round(p * n))
    rng = np.random.default_rng(0)
    low = ref.quantile(rng.random(n_low) * p)
    high = ref.quantile(p + rng.random(n - n_low) * (1 - p))
    assert w2_empirical_vs_reference(np.concatenate([low, high]), ref) < 0.05


def test_w2_self_distance_unimodal():
    model = MixtureModel.from_spec(MixtureSpec(sep=0.0, gen_theta=0.0))
    r = build_reference(model, -5, 5, 4000)
    draws = r.sample(np.random.default_rng(4), 100000)
    assert w2_empirical_vs_reference(draws, r) < 0.05


def test_w2_point_mass():
    point = ReferencePosterior(np.array([3.0, 3.0 + 1e-12]), np.zeros(2), np.array([0.0, 1.0]))
    assert w2_empirical_vs_reference(np.zeros(200), point) == pytest.approx(3.0, abs=1e-9)


def test_w2_hand_pairs():
    assert w2_samples([0.0, 2.0], [1.0, 3.0]) == 1.0
    assert w2_samples([2.0, 0.0], [3.0, 1.0]) == 1.0
    with pytest.raises(ValueError):
        w2_samples([], [1.0])
    with pytest.raises(ValueError):
        w2_empirical_vs_reference(np.array([]), None)


def _w2_by_replication(a, b):
    # equal-size W2 after repeating each set to a common length
    L = math.lcm(len(a), len(b))
    ra = np.sort(np.repeat(a, L // len(a)))
    rb = np.sort(np.repeat(b, L // len(b)))
    return math.sqrt(np.mean((ra - rb) ** 2))


@settings(max_examples=200, deadline=None)
@given(a=samples, b=samples)
def test_w2_unequal_sizes_match_replication(a, b):
    assert w2_samples(a, b) == pytest.approx(_w2_by_replication(a, b), rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(a=samples, b=samples, c=samples)
def test_w2_is_a_metric(a, b, c):
    assert w2_samples(a, a) == 0.0
    assert w2_samples(a, b) == pytest.approx(w2_samples(b, a), rel=1e-12, abs=1e-12)
    assert w2_samples(a, c) <= w2_samples(a, b) + w2_samples(b, c) + 1e-9


def test_mode_occupancy_examples():
    np.testing.assert_array_equal(mode_occupancy(np.full(10, -5.0), [-5, 25], 3), [1.0, 0.0])
    np.testing.assert_array_equal(mode_occupancy(np.array([-5.0, 25.0]), [-5, 25], 3), [0.5, 0.5])
    np.testing.assert_array_equal(mode_occupancy(np.array([]), [-5, 25], 3), [0.0, 0.0])
    with pytest.raises(ValueError):
        mode_occupancy(np.zeros(3), [0.0], 0.0)


def test_mode_occupancy_reference_draws(ref):
    draws = ref.sample(np.random.default_rng(1), 10000)
    occ = mode_occupancy(draws, [-5, 25], 3)
    for c, o in zip((-5, 25), occ):
        assert abs(o - ref.mass_between(c - 3, c + 3)) < 0.05


@settings(max_examples=100, deadline=None)
@given(x=samples, centers=st.lists(st.floats(-50, 50), min_size=1, max_size=5), seed=st.integers(0, 1000))
def test_mode_occupancy_permutation_equivariant(x, centers, seed):
    perm = np.random.default_rng(seed).permutation(len(centers))
    base = mode_occupancy(np.array(x), centers, 2.0)
    np.testing.assert_array_equal(mode_occupancy(np.array(x), np.array(centers)[perm], 2.0), base[perm])


def test_histogram_examples():
    h = histogram(np.array([0.0]), 0.0, 1.0, 4)
    assert h.counts[0] == 1 and h.counts.sum() == 1
    empty = histogram(np.array([]), 0.0, 1.0, 4)
    assert np.all(empty.counts == 0) and empty.underflow == 0 and empty.overflow == 0
    out = histogram(np.array([-1.0, 0.5, 2.0, 3.0]), 0.0, 1.0, 2)
    assert (out.underflow, out.overflow, int(out.counts.sum())) == (1, 2, 1)
    with pytest.raises(ValueError):
        histogram(np.zeros(2), 1.0, 0.0, 3)


def test_histogram_uniform():
    x = np.random.default_rng(2).uniform(-2, 3, 100000)
    h = histogram(x, -2, 3, 10)
    assert np.all(np.abs(h.counts - 10000) < 400)
    assert len(h.edges) == 11


def test_sample_set_rejects_non_finite():
    with pytest.raises(ValueError):
        SampleSet(np.array([1.0, math.inf]))
    assert len(SampleSet(np.zeros(4), 2, 3)) == 4


def test_w2_series_windows(ref):
    chain = ref.sample(np.random.default_rng(3), 20000)
    out = w2_series(chain, ref, every=5000, burn_frac=0.2, thinning=10)
    assert [s for s, _ in out] == [5000, 10000, 15000, 20000]
    start, stop = kept_window(10000, 0.2)
    assert (start, stop) == (2000, 10000)
    expected = w2_empirical_vs_reference(chain[start:stop][9::10], ref)
    assert out[1][1] == expected
    assert w2_series(chain[:500], ref, every=500, thinning=10) == []


def test_write_metrics_format():
    buf = io.StringIO()
    write_metrics(buf, [("w2", 5000, 0.25), ("occupancy_-5", 5000, 1.0)])
    lines = buf.getvalue().splitlines()
    assert lines == ["metric_name,step,value", "w2,5000,0.25", "occupancy_-5,5000,1"]
