"""Acceptance criteria 1-10 at their stated sizes and tolerances.

Each test carries ``@pytest.mark.criterion(k, label)``; the conftest prints a
PASS/FAIL line per criterion.  Criterion 7 is also marked ``slow``.
"""

import math
import time

import numpy as np
import pytest
from scipy import special, stats

from cone_meander import sampler, verify
from cone_meander.cones import Circular3D, Wedge, from_polar
from cone_meander.kernel import entrance_law, entrance_mass, heat_kernel_wedge, leading_factors
from cone_meander.specfun import bessel_i, legendre_p, log_gamma
from cone_meander.spectrum import circular_cone_principal, wedge_spectrum

SEED = 7
QUARTER = Wedge(math.pi / 2)


def note(record_property, rep):
    record_property("note", ", ".join(f"{k}={v:.4g}" for k, v in rep.p_values.items()))


@pytest.mark.criterion(1, "spectral closed forms")
def test_spectral_closed_forms(record_property):
    start = time.perf_counter()
    assert wedge_spectrum(math.pi / 2, 1).alpha1 == pytest.approx(2.0, abs=1e-14)
    assert wedge_spectrum(math.pi, 1).alpha1 == pytest.approx(1.0, abs=1e-14)
    nu, lam, alpha = circular_cone_principal(math.pi / 2)
    assert alpha == pytest.approx(1.5, abs=1e-10)
    assert abs(float(legendre_p(1.0, 0.0))) <= 1e-10
    assert abs(float(legendre_p(nu, 0.0))) <= 1e-10
    elapsed = time.perf_counter() - start
    record_property("note", f"{elapsed:.3f}s")
    assert elapsed < 1.0


@pytest.mark.criterion(2, "density normalisation")
def test_density_normalisation(record_property):
    start = time.perf_counter()
    cones = [Wedge(math.pi / 4), QUARTER, Wedge(math.pi), Circular3D(math.pi / 4), Circular3D(math.pi / 2)]
    errs = [abs(entrance_mass(entrance_law(c)) - 1.0) for c in cones]
    elapsed = time.perf_counter() - start
    record_property("note", f"max |mass-1|={max(errs):.2e}, {elapsed:.2f}s")
    assert max(errs) <= 1e-6
    assert elapsed < 10.0


@pytest.mark.criterion(3, "entrance law")
def test_entrance_law(record_property):
    rep = verify.verify_entrance_density(QUARTER, epsilon=0.05, n=10_000, dt=1e-4, rng=SEED)
    note(record_property, rep)
    assert rep.p_values["radial"] > 0.01
    assert rep.p_values["angular"] > 0.01
    assert rep.control["rejected"]


@pytest.mark.criterion(4, "exit law")
@pytest.mark.parametrize("cone, exponent", [(QUARTER, -1.0), (Circular3D(math.pi / 2), -0.5)], ids=["wedge", "circular"])
def test_exit_law(record_property, cone, exponent):
    rep = verify.verify_exit_law(cone, epsilon=0.1, n=100_000, dt=1e-3, t_list=(2.0, 4.0), rng=SEED)
    note(record_property, rep)
    for t in (2, 4):
        key = f"survival_t{t}"
        assert abs(rep.estimates[key] - t**exponent) <= 3 * rep.stderr[key]
    assert abs(rep.estimates["slope"] - exponent) <= 2 * rep.stderr["slope"]
    assert rep.passed


@pytest.mark.criterion(5, "scaling identity")
def test_scaling_identity(record_property):
    rep = verify.verify_scaling(QUARTER, [1.0, 1.0], t=4.0, n=10_000, dt=1e-3, rng=SEED)
    note(record_property, rep)
    assert all(p > 0.01 for p in rep.p_values.values())
    assert rep.control["rejected"]


@pytest.mark.criterion(6, "meander cross-construction")
def test_meander_cross_construction(record_property):
    times = [0.25, 1.0]
    a, _ = sampler.meander_transform_batch(10_000, 1e-3, times, rng=sampler.RngStreamSpec(SEED, 0))
    b, _, cap = sampler.meander_section_batch(0.0, 10_000, 1e-3, times, rng=sampler.RngStreamSpec(SEED, 1))
    pv = [stats.ks_2samp(a[:, i], b[:, i]).pvalue for i in range(len(times))]
    record_property("note", f"p(t=0.25)={pv[0]:.4g}, p(t=1)={pv[1]:.4g}, cap frequency={cap:.3g}")
    assert min(pv) > 0.01


@pytest.mark.slow
@pytest.mark.criterion(7, "heat-kernel oracle")
def test_heat_kernel_oracle(record_property):
    probes = {
        (0.6, 0.3): [(0.8, 0.5), (1.2, 0.9), (0.5, 1.1)],
        (0.3, 0.3): [(1.0, 0.5), (0.7, 0.7)],
    }
    rep = verify.verify_heat_kernel(QUARTER, probes, t=1.0, n=1_000_000, dt=1e-4, rng=SEED)
    record_property("note", "max z={:.3g}".format(max(rep.test_stat.values())))
    assert all(z <= 3 for z in rep.test_stat.values())
    assert max(rep.details["symmetry_error"].values()) <= 1e-12
    assert rep.control["rejected"]


@pytest.mark.criterion(8, "leading asymptotic")
def test_leading_asymptotic(record_property):
    start = time.perf_counter()
    law = entrance_law(QUARTER)
    worst = 0.0
    for th in np.linspace(0.1, 1.45, 6):
        x = from_polar(QUARTER, 1e-3, th)
        for r in np.linspace(0.25, 3.0, 6):
            for eta in np.linspace(0.1, 1.45, 6):
                y = from_polar(QUARTER, r, eta)
                g, h = leading_factors(law, x, 1.0, y)
                worst = max(worst, abs(heat_kernel_wedge(law.basis, 1.0, x, y).value / (g * h) - 1.0))
    elapsed = time.perf_counter() - start
    record_property("note", f"max deviation={worst:.2e}, {elapsed:.2f}s")
    assert worst <= 0.02
    assert elapsed < 10.0


@pytest.mark.criterion(9, "ball estimate")
def test_ball_estimate(record_property):
    rep = verify.verify_ball_estimate((0.2, 0.1, 0.05), (0.1, 0.05, 0.01), n=10_000, dt=1e-4, rng=SEED, d=2)
    record_property("note", f"main={rep.main_passed}, control rejected={rep.control['rejected']}")
    assert rep.passed


@pytest.mark.criterion(10, "special functions")
def test_special_functions(record_property):
    start = time.perf_counter()
    # the closed forms themselves cancel badly for small x
    x = np.linspace(0.5, 40.0, 400)
    pref = np.sqrt(2.0 / (np.pi * x))
    closed = {
        0.5: pref * np.sinh(x),
        1.5: pref * (np.cosh(x) - np.sinh(x) / x),
        2.5: pref * ((1 + 3 / x**2) * np.sinh(x) - 3 * np.cosh(x) / x),
    }
    bessel_err = max(float(np.max(np.abs(bessel_i(nu, x) / ref - 1))) for nu, ref in closed.items())
    u = np.linspace(-0.9, 1.0, 400)
    leg_err = max(float(np.max(np.abs(legendre_p(float(n), u) - special.eval_legendre(n, u)))) for n in range(0, 11))
    assert log_gamma(1.0) == 0.0 and log_gamma(2.0) == 0.0
    assert log_gamma(4.0) == pytest.approx(math.log(6.0), rel=1e-15)
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-15)
    elapsed = time.perf_counter() - start
    record_property("note", f"bessel {bessel_err:.1e}, legendre {leg_err:.1e}, {elapsed:.2f}s")
    assert bessel_err <= 1e-10
    assert leg_err <= 1e-10
    assert elapsed < 1.0
