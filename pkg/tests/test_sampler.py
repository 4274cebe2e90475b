import math

import numpy as np
import pytest
from scipy import integrate, stats
from scipy.special import erf

from cone_meander import sampler
from cone_meander.cones import Circular3D, HalfSpace, Wedge, contains, first_exit_index
from cone_meander.errors import DomainError, RejectionExhausted, SamplingError
from cone_meander.kernel import survival_probability
from cone_meander.rng import RngStreamSpec
from cone_meander.spectrum import spectral_basis

QUARTER = Wedge(math.pi / 2)


def quarter_survival(x):
    return float(np.prod(erf(np.asarray(x) / math.sqrt(2.0))))


# ---------------------------------------------------------------- Brownian motion


def test_bm_variance_at_one():
    x = sampler.bm_batch(100_000, 2, 1e-2, 1.0, [1.0], rng=3)[:, 0, :]
    r2 = np.sum(x**2, axis=1)
    se = r2.std(ddof=1) / math.sqrt(len(r2))
    assert abs(r2.mean() - 2.0) < 3 * se


def test_bm_reproducible():
    a = sampler.sample_bm(2, 1e-3, 1.0, rng=11)
    b = sampler.sample_bm(2, 1e-3, 1.0, rng=11)
    np.testing.assert_array_equal(a.points, b.points)
    assert not np.array_equal(a.points, sampler.sample_bm(2, 1e-3, 1.0, rng=12).points)


def test_bm_increments_normal():
    p = sampler.sample_bm(1, 1e-3, 5.0, rng=4)
    z = np.diff(p.points[:, 0]) / math.sqrt(1e-3)
    assert stats.kstest(z, "norm").pvalue > 0.01
    assert p.times[0] == 0 and np.allclose(np.diff(p.times), 1e-3)


def test_bm_start_point():
    p = sampler.sample_bm(3, 1e-2, 1.0, rng=1, start=[1.0, 2.0, 3.0])
    np.testing.assert_array_equal(p.points[0], [1.0, 2.0, 3.0])


def test_bm_rejects_bad_step():
    with pytest.raises(DomainError):
        sampler.sample_bm(1, 0.0, 1.0)
    with pytest.raises(DomainError):
        sampler.sample_bm(1, 0.5, 0.1)


def test_worker_count_invariance():
    spec = RngStreamSpec(7, 2)
    a = sampler.bm_batch(2500, 2, 1e-2, 1.0, [0.5, 1.0], rng=spec, workers=1)
    b = sampler.bm_batch(2500, 2, 1e-2, 1.0, [0.5, 1.0], rng=spec, workers=2)
    np.testing.assert_array_equal(a, b)
    c, ra = sampler.conditioned_batch(QUARTER, [0.5, 0.5], 2500, 1e-2, [1.0], rng=spec, workers=1)
    d, rb = sampler.conditioned_batch(QUARTER, [0.5, 0.5], 2500, 1e-2, [1.0], rng=spec, workers=2)
    np.testing.assert_array_equal(c, d)
    assert ra == rb


# ------------------------------------------------------------------ 1-D meander


def test_transform_meander_path_properties():
    p = sampler.sample_meander_transform(1e-3, rng=5)
    assert len(p) == 1001
    assert p.points[0, 0] == 0.0
    assert np.all(p.points[1:, 0] > 0)
    assert "redraws" in p.meta


def test_transform_meander_rayleigh_marginal():
    vals, _ = sampler.meander_transform_batch(100_000, 1e-3, [0.0, 0.5, 1.0], rng=21)
    assert np.all(vals[:, 0] == 0)
    assert np.all(vals[:, 1:] > 0)
    assert stats.kstest(vals[:, 2], "rayleigh").pvalue > 0.01


def meander_cdf(t):
    # exact meander marginal at time t: density proportional to x exp(-x^2 / 2t) erf(x / sqrt(2 (1 - t)))
    xs = np.linspace(0.0, 12.0 * math.sqrt(t), 8001)
    ys = xs * np.exp(-(xs**2) / (2 * t)) * erf(xs / math.sqrt(2 * (1 - t)))
    c = integrate.cumulative_trapezoid(ys, xs, initial=0.0)
    return lambda v: np.interp(v, xs, c / c[-1])


def test_transform_meander_early_marginals():
    vals, redraws = sampler.meander_transform_batch(100_000, 1e-3, [0.05, 0.25], rng=22)
    for i, t in enumerate((0.05, 0.25)):
        assert stats.kstest(vals[:, i], meander_cdf(t)).pvalue > 0.01
    assert redraws > 0


def test_section_meander_early_marginal():
    vals, _, _ = sampler.meander_section_batch(0.0, 10_000, 1e-3, [0.25], rng=23)
    assert stats.kstest(vals[:, 0], meander_cdf(0.25)).pvalue > 0.01


def test_transform_meander_min_span_domain():
    with pytest.raises(DomainError):
        sampler.meander_transform_batch(10, 1e-2, [1.0], min_span=1.0)


def test_transform_meander_rejects_times_outside_unit_interval():
    with pytest.raises(DomainError):
        sampler.meander_transform_batch(10, 1e-2, [1.5])


def test_section_meander_positive_and_starts_at_level():
    p = sampler.sample_meander_section(0.5, 1e-3, rng=8)
    assert p.points[0, 0] == 0.5
    assert np.all(p.points[1:, 0] > 0)
    assert p.meta["T_x"] >= 0


def test_section_meander_matches_rejection_sampler():
    n = 10_000
    sec, _, _ = sampler.meander_section_batch(0.5, n, 1e-3, [1.0], rng=31)
    rej, _ = sampler.conditioned_batch(HalfSpace(1), [0.5], n, 1e-3, [1.0], rng=32)
    assert stats.ks_2samp(sec[:, 0], rej[:, 0, 0]).pvalue > 0.01


def test_section_meander_horizon_cap():
    with pytest.raises(SamplingError):
        sampler.meander_section_batch(0.0, 50, 1e-2, [1.0], rng=2, max_horizon=1.05)
    with pytest.raises(DomainError):
        sampler.meander_section_batch(-0.1, 5, 1e-2, [1.0])


# ---------------------------------------------------------- rejection sampling


def test_halfline_acceptance_rate():
    _, rep = sampler.conditioned_batch(HalfSpace(1), [1.0], 68_270, 1e-3, [1.0], rng=41)
    target = 2 * stats.norm.cdf(1.0) - 1
    assert rep.attempts > 95_000
    assert abs(rep.acceptance_rate - target) < 3 * rep.stderr


def test_quarter_plane_acceptance_matches_series():
    basis = spectral_basis(QUARTER)
    target, _ = survival_probability(QUARTER, basis, [0.5, 0.5], 1.0, mode="series")
    assert target == pytest.approx(quarter_survival([0.5, 0.5]), rel=1e-8)
    _, rep = sampler.conditioned_batch(QUARTER, [0.5, 0.5], 4000, 1e-3, [1.0], rng=42)
    assert abs(rep.acceptance_rate - target) < 3 * rep.stderr


def test_accepted_paths_stay_inside():
    for cone, x in [(QUARTER, [0.3, 0.4]), (Circular3D(math.pi / 4), [1.0, 0.1, 0.0]), (HalfSpace(3), [0.5, 0, 0])]:
        path, rep = sampler.sample_conditioned(cone, x, dt=1e-3, rng=6)
        assert first_exit_index(path, cone) is None
        assert rep.accepted == 1
        np.testing.assert_allclose(path.points[0], x)


def test_acceptance_ratio_under_halving_epsilon():
    rates = {}
    for eps in (0.4, 0.2, 0.1):
        _, rep = sampler.cone_meander_batch(QUARTER, eps, 4000, 1e-3, [1.0], rng=50)
        rates[eps] = rep.acceptance_rate
    assert rates[0.4] > rates[0.2] > rates[0.1]
    # alpha1 - (d/2 - 1) = 2 for the quarter plane
    assert rates[0.2] / rates[0.1] == pytest.approx(4.0, rel=0.1)


def test_cone_meander_single_path():
    path, rep = sampler.sample_cone_meander_approx(QUARTER, 0.2, dt=1e-3, rng=9)
    assert first_exit_index(path, QUARTER) is None
    np.testing.assert_allclose(np.linalg.norm(path.points[0]), 0.2)
    assert rep.acceptance_rate > 0


def test_rejection_exhausted_carries_report():
    with pytest.raises(RejectionExhausted) as info:
        sampler.cone_meander_batch(QUARTER, 0.01, 5, 1e-3, [1.0], rng=1, max_attempts=200)
    assert info.value.report.attempts == 200
    assert "epsilon" in str(info.value)


def test_start_outside_cone_rejected():
    with pytest.raises(DomainError):
        sampler.conditioned_batch(QUARTER, [-0.1, 0.5], 5, 1e-2, [1.0])
    with pytest.raises(DomainError):
        sampler.cone_meander_batch(QUARTER, 0.0, 5, 1e-2, [1.0])


def test_report_arithmetic():
    a = sampler.RejectionReport(10, 4)
    b = sampler.RejectionReport(30, 6)
    assert (a + b).acceptance_rate == pytest.approx(0.25)
    assert set(a.as_dict()) >= {"attempts", "accepted", "acceptance_rate"}


# ---------------------------------------------------------- half-space meander


def test_d_meander_coordinates():
    x = sampler.d_meander_batch(2, 100_000, 1e-3, [0.5, 1.0], rng=61)
    assert np.all(x[:, :, 0] > 0)
    assert stats.kstest(x[:, 1, 1], "norm").pvalue > 0.01
    r = np.corrcoef(x[:, 1, 0], x[:, 1, 1])[0, 1]
    assert abs(r) < 3 / math.sqrt(len(x))


def test_d_meander_path_and_domain():
    p = sampler.sample_d_meander(3, 1e-3, rng=2)
    assert p.points.shape == (1001, 3)
    assert np.all(p.points[1:, 0] > 0)
    with pytest.raises(DomainError):
        sampler.d_meander_batch(1, 10, 1e-2, [1.0])


# ---------------------------------------------------------------- killed motion


def test_killed_survival_matches_closed_form():
    p, se = sampler.killed_survival(QUARTER, [0.6, 0.9], 1.0, n=20_000, dt=1e-3, rng=71)
    assert abs(p - quarter_survival([0.6, 0.9])) < 3 * se


def test_killed_batch_exit_times():
    times, final = sampler.killed_batch(HalfSpace(2), [[0.1, 0.0]] * 500, 1e-3, 1.0, rng=3)
    dead = np.isfinite(times)
    assert dead.any() and (~dead).any()
    assert np.all(times[dead] <= 1.0)
    assert all(contains(HalfSpace(2), f) for f in final[~dead])
