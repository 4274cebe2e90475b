"""Statistical checks tying the samplers to the analytic predictions.

Every check returns an :class:`McReport`.  Pass/fail is a pure function of
the reported statistics and a :class:`Thresholds` instance, and each check
also evaluates one perturbed target (negative control) that it is expected
to reject.  A report only passes when the main test passes *and* its control
is rejected, so a check that cannot tell right from wrong never passes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import kernel, quadrature, sampler
from .cones import Circular3D, ConeSpec, Wedge, angular_coordinate, cone_label, inside
from .errors import DomainError
from .rng import as_stream
from .spectrum import wedge_spectrum

__all__ = [
    "Thresholds",
    "DEFAULT_THRESHOLDS",
    "McReport",
    "ks_noise_floor",
    "exit_slope",
    "verify_entrance_density",
    "verify_exit_law",
    "verify_scaling",
    "verify_ball_estimate",
    "verify_fdd_trend",
    "verify_heat_kernel",
    "smoothed_kernel",
]

KS_CRIT_5 = 1.358  # asymptotic 5% critical value of sqrt(n) * D


@dataclass(frozen=True)
class Thresholds:
    """Declared pass thresholds of the checks."""

    p_min: float = 0.01
    z_max: float = 3.0
    slope_sigmas: float = 2.0
    spearman_p: float = 0.1
    floor_mult: float = 2.0
    ball_sigmas: float = 3.0
    ball_small_cell: float = 0.05


DEFAULT_THRESHOLDS = Thresholds()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, (ConeSpec.__args__)):
        return cone_label(v)
    return v


@dataclass
class McReport:
    """Outcome of one statistical check.

    ``estimates`` and ``stderr`` share their keys.  ``passed`` is the main
    test result combined with the rejection of the negative control; the
    control's own statistics sit in ``control``.
    """

    name: str
    estimates: dict
    stderr: dict
    test_stat: dict
    p_values: dict
    n: int
    passed: bool
    config: dict
    main_passed: bool = True
    control: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = set(self.estimates) - set(self.stderr)
        if missing:
            raise ValueError(f"estimates without stderr: {sorted(missing)}")

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def summary(self) -> str:
        ctl = self.control.get("rejected")
        ctl_txt = "" if ctl is None else f", control {'rejected' if ctl else 'NOT rejected'}"
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} (n={self.n}{ctl_txt})"


def _finish(name, est, se, stat, pv, n, main_ok, control_ok, config, th, details=None, control=None):
    control = dict(control or {})
    control["passed"] = bool(control_ok)
    control["rejected"] = not control_ok
    config = dict(config)
    config["thresholds"] = asdict(th)
    return McReport(
        name=name,
        estimates=est,
        stderr=se,
        test_stat=stat,
        p_values=pv,
        n=int(n),
        passed=bool(main_ok and not control_ok),
        config=config,
        main_passed=bool(main_ok),
        control=control,
        details=details or {},
    )


def ks_noise_floor(n: int) -> float:
    """KS distance a sample of size ``n`` exceeds with 5% probability."""
    return KS_CRIT_5 / math.sqrt(n)


def _ks_se(n: int) -> float:
    # spread of the KS statistic under the null, roughly 0.26 / sqrt(n)
    return 0.26 / math.sqrt(n)


# ---------------------------------------------------------------- entrance law


def _target_ks(law, pts, alpha1=None):
    """Radial and angular one-sample KS of points against ``e(1, .)``."""
    r = np.sqrt(np.sum(pts**2, axis=1))
    rad = stats.kstest(r, lambda v: kernel.radial_cdf(law, v, alpha1), method="asymp")
    if law.d == 1:
        return rad, None
    ang = angular_coordinate(law.cone, pts)
    angr = stats.kstest(ang, lambda v: kernel.angular_cdf(law, v), method="asymp")
    return rad, angr


def verify_entrance_density(
    cone: ConeSpec,
    epsilon: float = 0.05,
    n: int = 10_000,
    dt: float = 1e-4,
    rng=None,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    direction=None,
    max_attempts: int | None = None,
    workers: int = 1,
    control_scale: float = 1.1,
) -> McReport:
    """KS tests of ``X(1)`` of the approximate cone meander against ``e(1, .)``.

    Radial: ``|X(1)|`` against the radial marginal (``|X|^2/2`` is
    Gamma-distributed).  Angular: cap coordinate against the marginal
    proportional to ``m_1`` times the cap measure.  The control repeats the
    radial test with ``alpha1`` scaled by ``control_scale``.
    """
    th = thresholds
    spec = as_stream(rng)
    law = kernel.entrance_law(cone)
    pos, rep = sampler.cone_meander_batch(cone, epsilon, n, dt, [1.0], spec, direction, max_attempts, workers)
    pts = pos[:, 0, :]
    rad, ang = _target_ks(law, pts)
    ctl, _ = _target_ks(law, pts, alpha1=control_scale * law.alpha1)
    stat = {"radial_D": rad.statistic}
    pv = {"radial": rad.pvalue}
    if ang is not None:
        stat["angular_D"] = ang.statistic
        pv["angular"] = ang.pvalue
    r = np.sqrt(np.sum(pts**2, axis=1))
    est = {"mean_radius": float(r.mean()), "acceptance_rate": rep.acceptance_rate}
    se = {"mean_radius": float(r.std(ddof=1) / math.sqrt(n)), "acceptance_rate": rep.stderr}
    main_ok = all(p > th.p_min for p in pv.values())
    ctl_ok = ctl.pvalue > th.p_min
    config = {"cone": cone, "epsilon": epsilon, "n": n, "dt": dt, "rng": spec.as_dict()}
    control = {"alpha1": control_scale * law.alpha1, "radial_D": ctl.statistic, "radial_p": ctl.pvalue}
    return _finish("entrance_density", est, se, stat, pv, n, main_ok, ctl_ok, config, th,
                   {"rejection": rep.as_dict()}, control)


# -------------------------------------------------------------------- exit law


def exit_slope(t_list, p_hat, n: int):
    """Least-squares slope through the origin of ``log p_hat`` against ``log t``.

    Survival events are nested, so ``Cov(log p_a, log p_b) = (1 - p_a) / (n p_a)``
    for ``t_a <= t_b``.  Returns ``(slope, stderr)``.
    """
    lt = np.log(np.asarray(t_list, dtype=float))
    p = np.asarray(p_hat, dtype=float)
    if np.any(p <= 0):
        return float("nan"), float("inf")
    lp = np.log(p)
    w = lt / np.dot(lt, lt)
    slope = float(np.dot(w, lp))
    # index of the earlier time of each pair
    idx = np.where(lt[:, None] <= lt[None, :], np.arange(len(p))[:, None], np.arange(len(p))[None, :])
    pa = p[idx]
    cov = (1.0 - pa) / (n * pa)
    return slope, float(math.sqrt(max(w @ cov @ w, 0.0)))


def _exit_tests(t_arr, p_hat, n, exponent):
    pred = t_arr**exponent
    se = np.sqrt(np.maximum(p_hat * (1.0 - p_hat), 1e-300) / n)
    z = np.abs(p_hat - pred) / se
    return pred, se, z


def verify_exit_law(
    cone: ConeSpec,
    epsilon: float = 0.1,
    n: int = 100_000,
    dt: float = 1e-3,
    t_list=(2.0, 4.0),
    rng=None,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    direction=None,
    max_attempts: int | None = None,
    workers: int = 1,
    control_scale: float = 1.1,
) -> McReport:
    """Survival of the approximate cone meander past time 1 against ``t^(-alpha1/2 + (d-2)/4)``.

    Accepted paths are continued as free Brownian motion (same step and
    boundary test) up to ``max(t_list)``.  Per-time z-tests use the
    binomial standard error; the slope test uses :func:`exit_slope`.  The
    control uses ``alpha1`` scaled by ``control_scale``.
    """
    th = thresholds
    t_arr = np.asarray(sorted(float(t) for t in t_list))
    if t_arr.size == 0 or np.any(t_arr <= 1.0) or np.any(t_arr > 10.0):
        raise DomainError("t_list must be a non-empty subset of (1, 10]")
    spec = as_stream(rng)
    law = kernel.entrance_law(cone)
    pos, rep = sampler.cone_meander_batch(cone, epsilon, n, dt, [1.0], spec, direction, max_attempts, workers)
    steps = [sampler.steps_for(t - 1.0, dt) for t in t_arr]
    exit_t, _ = sampler.killed_batch(cone, pos[:, 0, :], dt, float(t_arr[-1] - 1.0), spec.substream(0), True, workers)
    p_hat = np.array([np.mean(exit_t > k * dt * (1 - 1e-12)) for k in steps])
    exponent = -0.5 * law.alpha1 + (law.d - 2) / 4.0
    pred, se, z = _exit_tests(t_arr, p_hat, n, exponent)
    slope, slope_se = exit_slope(t_arr, p_hat, n)
    slope_ok = abs(slope - exponent) <= th.slope_sigmas * slope_se
    main_ok = bool(np.all(z <= th.z_max) and slope_ok)
    c_exp = -0.5 * control_scale * law.alpha1 + (law.d - 2) / 4.0
    c_pred, _, c_z = _exit_tests(t_arr, p_hat, n, c_exp)
    c_ok = bool(np.all(c_z <= th.z_max) and abs(slope - c_exp) <= th.slope_sigmas * slope_se)
    est = {f"survival_t{t:g}": float(p) for t, p in zip(t_arr, p_hat)}
    sed = {f"survival_t{t:g}": float(s) for t, s in zip(t_arr, se)}
    est["slope"], sed["slope"] = slope, slope_se
    stat = {f"z_t{t:g}": float(v) for t, v in zip(t_arr, z)}
    stat["slope_z"] = abs(slope - exponent) / slope_se if slope_se > 0 else float("inf")
    pv = {k.replace("z_", "p_"): float(2 * stats.norm.sf(v)) for k, v in stat.items()}
    config = {"cone": cone, "epsilon": epsilon, "n": n, "dt": dt, "t_list": t_arr, "rng": spec.as_dict()}
    details = {
        "predicted": {f"t{t:g}": float(p) for t, p in zip(t_arr, pred)},
        "exponent": exponent,
        "rejection": rep.as_dict(),
    }
    control = {"exponent": c_exp, "z": {f"t{t:g}": float(v) for t, v in zip(t_arr, c_z)}}
    return _finish("exit_law", est, sed, stat, pv, n, main_ok, c_ok, config, th, details, control)


# --------------------------------------------------------------------- scaling


def _ks_columns(a: np.ndarray, b: np.ndarray):
    cols = [a[:, i] for i in range(a.shape[1])] + [np.linalg.norm(a, axis=1)]
    other = [b[:, i] for i in range(b.shape[1])] + [np.linalg.norm(b, axis=1)]
    names = [f"x{i + 1}" for i in range(a.shape[1])] + ["radius"]
    return {nm: stats.ks_2samp(u, v, method="asymp") for nm, u, v in zip(names, cols, other)}


def verify_scaling(
    cone: ConeSpec,
    x,
    t: float = 4.0,
    n: int = 10_000,
    dt: float = 1e-3,
    rng=None,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    max_attempts: int | None = None,
    workers: int = 1,
) -> McReport:
    """Brownian scaling of conditioned paths.

    Compares ``X(t/2)`` under conditioning on ``[0, t]`` from ``x`` with
    ``sqrt(t) X(1/2)`` under conditioning on ``[0, 1]`` from ``x / sqrt(t)``
    by two-sample KS per coordinate and on the radius.  The control drops
    the ``sqrt(t)`` factor.
    """
    th = thresholds
    if not (t > 0):
        raise DomainError(f"t must be > 0, got {t}")
    spec = as_stream(rng)
    x = np.asarray(x, dtype=float)
    st = math.sqrt(t)
    a, rep_a = sampler.conditioned_batch(cone, x, n, dt, [t / 2.0], spec.substream(0), t, max_attempts, True, workers)
    b, rep_b = sampler.conditioned_batch(cone, x / st, n, dt, [0.5], spec.substream(1), 1.0, max_attempts, True, workers)
    a, b = a[:, 0, :], b[:, 0, :]
    main = _ks_columns(a, st * b)
    ctl = _ks_columns(a, b)
    main_ok = all(r.pvalue > th.p_min for r in main.values())
    ctl_ok = all(r.pvalue > th.p_min for r in ctl.values())
    # both acceptance rates estimate the same survival probability
    est = {"acceptance_horizon_t": rep_a.acceptance_rate, "acceptance_rescaled": rep_b.acceptance_rate}
    se = {"acceptance_horizon_t": rep_a.stderr, "acceptance_rescaled": rep_b.stderr}
    config = {"cone": cone, "x": x, "t": t, "n": n, "dt": dt, "rng": spec.as_dict()}
    control = {"p_values": {k: r.pvalue for k, r in ctl.items()}}
    return _finish(
        "scaling",
        est,
        se,
        {k: r.statistic for k, r in main.items()},
        {k: r.pvalue for k, r in main.items()},
        n,
        main_ok,
        ctl_ok,
        config,
        th,
        {"rejection_t": rep_a.as_dict(), "rejection_1": rep_b.as_dict()},
        control,
    )


# ---------------------------------------------------------------- ball estimate


def _ball_exit_steps_meander(d, n, dt, check_steps, spec, workers):
    times = np.arange(check_steps + 1) * dt
    pos = sampler.d_meander_batch(d, n, dt, times, spec, workers)
    shifted = pos.copy()
    shifted[:, :, 0] -= 1.0
    out = np.sum(shifted[:, 1:, :] ** 2, axis=2) >= 1.0
    first = np.where(out.any(axis=1), out.argmax(axis=1) + 1, -1)
    return first


def _ball_exit_steps_halfspace(lam, d, n, dt, check_steps, spec, workers, max_attempts):
    def run(k, size):
        budget = max_attempts if max_attempts is not None else 10**6 * size
        return sampler._mc.halfspace_ball_batch(
            spec.generator(k), float(lam), d, dt, sampler.steps_for(1.0, dt), check_steps, size, budget, True
        )

    parts = sampler._map_chunks(run, sampler.chunk_sizes(n, sampler.CHUNK), 1)
    attempts = sum(int(p[1]) for p in parts)
    ex = np.concatenate([p[0] for p in parts])
    if len(ex) < n:
        raise sampler.RejectionExhausted(
            f"ball estimate at lambda={lam}: {len(ex)} of {n} accepted", sampler.RejectionReport(attempts, len(ex))
        )
    return ex, sampler.RejectionReport(attempts, len(ex))


def _free_ball_exit(lam, d, n, dt, check_steps, spec):
    times = np.arange(check_steps + 1) * dt
    start = np.zeros(d)
    start[0] = lam
    pos = sampler.bm_batch(n, d, dt, float(times[-1]), times, spec, start)
    pos[:, :, 0] -= 1.0
    out = np.sum(pos[:, 1:, :] ** 2, axis=2) >= 1.0
    return np.where(out.any(axis=1), out.argmax(axis=1) + 1, -1)


def verify_ball_estimate(
    lambda_list=(0.2, 0.1, 0.05),
    s_list=(0.1, 0.05, 0.01),
    n: int = 10_000,
    dt: float = 1e-4,
    rng=None,
    d: int = 2,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    max_attempts: int | None = None,
    workers: int = 1,
) -> McReport:
    """Exit probabilities of the unit ball ``B`` centred at ``e1`` by time ``s``.

    ``P(lam, s)`` is estimated for Brownian motion from ``lam e1``
    conditioned on ``x1 > 0`` up to time 1 (rejection with the bridge test
    in ``x1``), and ``P(0, s)`` for the half-space meander.  Each row shares
    its paths across ``s``.  Checks: (a) rows non-increasing as ``s``
    decreases, (b) ``P(lam, s) <= 2^(d-1) P(0, s)`` up to ``ball_sigmas``
    pooled stderr, (c) the cell with the smallest ``lam`` and ``s`` is below
    ``ball_small_cell``.  Control: (c) for unconditioned Brownian motion.
    """
    th = thresholds
    if d not in (2, 3):
        raise DomainError(f"d must be 2 or 3, got {d}")
    lams = [float(v) for v in lambda_list]
    ss = [float(v) for v in s_list]
    if any(b >= a for a, b in zip(lams, lams[1:])) or any(b >= a for a, b in zip(ss, ss[1:])):
        raise DomainError("lambda_list and s_list must be strictly decreasing")
    if min(lams) <= 0:
        raise DomainError("lambda_list entries must be > 0 (the lambda = 0 row is added)")
    spec = as_stream(rng)
    s_steps = [sampler.steps_for(s, dt) for s in ss]
    check = max(s_steps)
    rows = {0.0: _ball_exit_steps_meander(d, n, dt, check, spec.substream(0), workers)}
    reports = {}
    for i, lam in enumerate(lams):
        rows[lam], reports[lam] = _ball_exit_steps_halfspace(lam, d, n, dt, check, spec.substream(i + 1), workers, max_attempts)

    def prob(ex, k):
        p = float(np.mean((ex >= 1) & (ex <= k)))
        return p, math.sqrt(max(p * (1 - p), 1.0 / n) / n)

    grid = {lam: [prob(rows[lam], k) for k in s_steps] for lam in [0.0] + lams}
    monotone = all(all(b[0] <= a[0] for a, b in zip(r, r[1:])) for r in grid.values())
    factor = 2.0 ** (d - 1)
    margins = {}
    ineq = True
    for lam in lams:
        for (p, se), (p0, se0), s in zip(grid[lam], grid[0.0], ss):
            pooled = math.sqrt(se * se + (factor * se0) ** 2)
            slack = factor * p0 + th.ball_sigmas * pooled - p
            margins[f"lam{lam:g}_s{s:g}"] = slack
            ineq = ineq and slack >= 0
    small = grid[lams[-1]][-1][0]
    main_ok = monotone and ineq and small < th.ball_small_cell
    free = _free_ball_exit(lams[-1], d, n, dt, s_steps[-1], spec.substream(len(lams) + 1))
    free_p = float(np.mean((free >= 1) & (free <= s_steps[-1])))
    ctl_ok = free_p < th.ball_small_cell
    est, se = {}, {}
    for lam, row in grid.items():
        for s, (p, e) in zip(ss, row):
            est[f"P_lam{lam:g}_s{s:g}"] = p
            se[f"P_lam{lam:g}_s{s:g}"] = e
    config = {"lambda_list": lams, "s_list": ss, "n": n, "dt": dt, "d": d, "rng": spec.as_dict()}
    details = {
        "monotone": monotone,
        "inequality": ineq,
        "inequality_slack": margins,
        "smallest_cell": small,
        "rejection": {f"lam{lam:g}": r.as_dict() for lam, r in reports.items()},
    }
    stat = {"min_inequality_slack": min(margins.values()), "smallest_cell": small}
    return _finish("ball_estimate", est, se, stat, {}, n, main_ok, ctl_ok, config, th, details,
                   {"free_bm_smallest_cell": free_p})


# -------------------------------------------------------------------- fdd trend


def _control_cone(cone: ConeSpec) -> ConeSpec:
    if isinstance(cone, Wedge):
        return Wedge(0.75 * cone.beta)
    if isinstance(cone, Circular3D):
        return Circular3D(0.75 * cone.theta0)
    if cone.d == 2:
        return Wedge(0.75 * math.pi)
    if cone.d == 3:
        return Circular3D(0.375 * math.pi)
    raise DomainError(f"no control cone for {cone!r}")


def _target_distance(law, pts) -> float:
    rad, ang = _target_ks(law, pts)
    return float(rad.statistic if ang is None else max(rad.statistic, ang.statistic))


def _decrease_pvalue(eps, dist) -> float:
    """One-sided p-value that ``dist`` rises with ``eps`` (exact Spearman permutation for short ladders)."""
    eps = np.asarray(eps, dtype=float)
    dist = np.asarray(dist, dtype=float)
    rho = stats.spearmanr(eps, dist).statistic
    if not np.isfinite(rho):
        return 1.0
    if len(eps) <= 8:
        count = total = 0
        for perm in itertools.permutations(dist):
            r = stats.spearmanr(eps, perm).statistic
            total += 1
            count += np.isfinite(r) and r >= rho - 1e-12
        return count / total
    return float(stats.spearmanr(eps, dist, alternative="greater").pvalue)


def _trend_ok(eps, dist, floor, th) -> tuple[bool, float]:
    p = _decrease_pvalue(eps, dist)
    trend = p < th.spearman_p or all(v < th.floor_mult * floor for v in dist)
    return bool(trend and dist[-1] <= th.floor_mult * floor), p


def verify_fdd_trend(
    cone: ConeSpec,
    epsilon_list=(0.4, 0.2, 0.1, 0.05),
    t: float = 1.0,
    n: int = 10_000,
    dt: float = 1e-4,
    rng=None,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    max_attempts: int | None = None,
    workers: int = 1,
) -> McReport:
    """Distance of ``X(t)`` to ``e(t, .)`` along a decreasing ladder of start radii.

    The distance is the larger of the radial and angular one-sample KS
    statistics against ``e(1, .)``.  Pass: the distances fall with
    ``epsilon`` (exact Spearman permutation p below ``spearman_p``) or all
    stay under ``floor_mult`` times the KS noise floor, and the last one is
    under that bound.  No convergence rate is asserted.  The control repeats
    the rule against the entrance law of a narrower cone.
    """
    th = thresholds
    eps = [float(e) for e in epsilon_list]
    if len(eps) < 3 or any(b >= a for a, b in zip(eps, eps[1:])):
        raise DomainError("epsilon_list must be strictly decreasing with at least 3 entries")
    if t != 1.0:
        raise DomainError("the analytic target is available at t = 1 only")
    spec = as_stream(rng)
    law = kernel.entrance_law(cone)
    c_cone = _control_cone(cone)
    c_law = kernel.entrance_law(c_cone)
    samples, reports = [], []
    for i, e in enumerate(eps):
        pos, rep = sampler.cone_meander_batch(cone, e, n, dt, [t], spec.substream(i), None, max_attempts, workers)
        samples.append(pos[:, 0, :])
        reports.append(rep)
    dist = [_target_distance(law, p) for p in samples]
    c_dist = [_target_distance(c_law, p) for p in samples]
    pair = [float(stats.ks_2samp(np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1)).statistic)
            for a, b in zip(samples, samples[1:])]
    floor = ks_noise_floor(n)
    main_ok, p_main = _trend_ok(eps, dist, floor, th)
    ctl_ok, p_ctl = _trend_ok(eps, c_dist, floor, th)
    est = {f"D_eps{e:g}": v for e, v in zip(eps, dist)}
    se = {f"D_eps{e:g}": _ks_se(n) for e in eps}
    config = {"cone": cone, "epsilon_list": eps, "t": t, "n": n, "dt": dt, "rng": spec.as_dict()}
    details = {
        "noise_floor": floor,
        "consecutive_radial_D": pair,
        "acceptance": {f"eps{e:g}": r.as_dict() for e, r in zip(eps, reports)},
    }
    control = {"cone": cone_label(c_cone), "distances": c_dist, "spearman_p": p_ctl}
    return _finish("fdd_trend", est, se, {"final_D": dist[-1]}, {"spearman": p_main}, n, main_ok, ctl_ok,
                   config, th, details, control)


# ------------------------------------------------------------------ heat kernel


def smoothed_kernel(basis, t: float, x, y, h: float, nodes: int = 40, t_scale: float = 1.0) -> float:
    """Wedge heat kernel ``p(t, x, .)`` convolved with a Gaussian of width ``h``, at ``y``.

    Tensor Gauss-Legendre over ``y + h [-7, 7]^2``; the kernel is zero
    outside the wedge.  ``t_scale`` evaluates the kernel at ``t * t_scale``
    (negative controls).
    """
    u, w = quadrature.gauss_legendre(-7.0, 7.0, nodes)
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    W = np.outer(w, w) * np.exp(-0.5 * (U1**2 + U2**2)) / (2.0 * math.pi)
    z = np.stack([y[0] + h * U1, y[1] + h * U2], axis=-1).reshape(-1, 2)
    cone = basis.cone
    mask = inside(cone, z)
    vals = np.zeros(len(z))
    if mask.any():
        zz = z[mask]
        rho, th_x = math.hypot(*x), math.atan2(x[1], x[0])
        r = np.sqrt(np.sum(zz**2, axis=1))
        eta = angular_coordinate(cone, zz)
        vals[mask] = kernel.wedge_kernel_polar(basis, t * t_scale, rho, th_x, r, eta)
    return float(np.sum(W.ravel() * vals))


def verify_heat_kernel(
    cone: Wedge,
    probes,
    t: float = 1.0,
    n: int = 1_000_000,
    dt: float = 1e-4,
    h: float = 0.05,
    rng=None,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    workers: int = 1,
    control_scale: float = 1.2,
) -> McReport:
    """Series heat kernel against killed Brownian motion.

    For each start ``x`` in ``probes`` (a mapping ``x -> [y, ...]``), ``n``
    paths are killed on leaving the wedge and the survivors at ``t`` are
    smoothed with a Gaussian of width ``h``.  The estimate is compared with
    the same smoothing of the series, which removes the smoothing bias.
    Symmetry ``p(t, x, y) = p(t, y, x)`` of the series is checked to 1e-12.
    The control compares against the series at ``control_scale * t``.
    """
    th = thresholds
    if not isinstance(cone, Wedge):
        raise DomainError("the series heat kernel is implemented for wedges")
    spec = as_stream(rng)
    basis = wedge_spectrum(cone.beta)
    est, se, stat, pv = {}, {}, {}, {}
    c_z, sym, series = {}, {}, {}
    for i, (x, ys) in enumerate(probes.items()):
        x = np.asarray(x, dtype=float)
        exit_t, final = sampler.killed_batch(cone, np.tile(x, (n, 1)), dt, t, spec.substream(i), True, workers)
        alive = np.isinf(exit_t)
        for y in ys:
            y = np.asarray(y, dtype=float)
            key = f"x({x[0]:g},{x[1]:g})_y({y[0]:g},{y[1]:g})"
            g = np.zeros(n)
            diff = final[alive] - y
            g[alive] = np.exp(-0.5 * np.sum(diff**2, axis=1) / h**2) / (2.0 * math.pi * h * h)
            m, s = float(g.mean()), float(g.std(ddof=1) / math.sqrt(n))
            target = smoothed_kernel(basis, t, x, y, h)
            est[key], se[key] = m, s
            series[key] = target
            stat[key] = abs(m - target) / s
            pv[key] = float(2 * stats.norm.sf(stat[key]))
            c_z[key] = abs(m - smoothed_kernel(basis, t, x, y, h, t_scale=control_scale)) / s
            pxy = kernel.heat_kernel_wedge(basis, t, x, y).value
            pyx = kernel.heat_kernel_wedge(basis, t, y, x).value
            sym[key] = abs(pxy - pyx)
    main_ok = all(z <= th.z_max for z in stat.values()) and all(v <= 1e-12 for v in sym.values())
    ctl_ok = all(z <= th.z_max for z in c_z.values())
    config = {"cone": cone, "t": t, "n": n, "dt": dt, "h": h, "rng": spec.as_dict(),
              "probes": {str(tuple(k)): [list(map(float, y)) for y in v] for k, v in probes.items()}}
    details = {"smoothed_series": series, "symmetry_error": sym}
    return _finish("heat_kernel", est, se, stat, pv, n, main_ok, ctl_ok, config, th, details,
                   {"t_scale": control_scale, "z": c_z})
