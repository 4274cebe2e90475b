"""Command-line front end: ``cone-meander {spectrum,density,sample,verify}``.

Settings come from (lowest to highest precedence) built-in defaults, a
config file given with ``--config`` and command-line flags.  The config file
is either flat ``key = value`` text with ``#`` comments or a JSON run
manifest written by a previous run, which reproduces that run.

Exit codes: 0 success or passed check, 1 failed check or sampling failure,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from . import __version__, kernel, sampler, verify
from .cones import PathSample, Wedge, _atomic_write, cone_label, from_polar, parse_cone, write_path_csv
from .errors import ConeMeanderError, ConfigError, SamplingError
from .rng import RngStreamSpec, resolve_seed
from .spectrum import sphere_area

__all__ = ["RunConfig", "load_config", "run", "main"]

CHECKS = ("entrance-density", "exit-law", "scaling", "ball", "fdd", "heat-kernel")
SAMPLERS = ("cone-meander", "conditioned", "meander-transform", "meander-section", "d-meander", "bm")

# per-check defaults used when the setting is left unset
_CHECK_DEFAULTS = {
    "entrance-density": {"n": 10_000, "dt": 1e-4, "epsilon": 0.05},
    "exit-law": {"n": 100_000, "dt": 1e-3, "epsilon": 0.1},
    "scaling": {"n": 10_000, "dt": 1e-3, "t": 4.0},
    "ball": {"n": 10_000, "dt": 1e-4},
    "fdd": {"n": 10_000, "dt": 1e-4},
    "heat-kernel": {"n": 1_000_000, "dt": 1e-4},
}


def _floats(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())


@dataclass
class RunConfig:
    """All settings of one CLI run.  ``None`` means "use the command default"."""

    cone: str = "wedge:1.5707963267948966"
    dt: float | None = None
    n: int | None = None
    epsilon: float | None = None
    max_attempts: int | None = None
    seed: int | None = None
    workers: int = 1
    out: str = "cone_meander_out"
    t: float | None = None
    grid: str = "50x50"
    r_max: float = 8.0
    J: int = 50
    check: str = "entrance-density"
    sampler: str = "cone-meander"
    x: tuple | None = None
    horizon: float = 1.0
    t_list: tuple = (2.0, 4.0)
    epsilon_list: tuple = (0.4, 0.2, 0.1, 0.05)
    lambda_list: tuple = (0.2, 0.1, 0.05)
    s_list: tuple = (0.1, 0.05, 0.01)
    ball_d: int = 2
    h: float = 0.05
    p_min: float = verify.DEFAULT_THRESHOLDS.p_min
    z_max: float = verify.DEFAULT_THRESHOLDS.z_max
    slope_sigmas: float = verify.DEFAULT_THRESHOLDS.slope_sigmas

    _POSITIVE = ("dt", "n", "epsilon", "max_attempts", "workers", "t", "r_max", "J", "horizon", "ball_d", "h",
                 "p_min", "z_max", "slope_sigmas")
    _INTS = ("n", "max_attempts", "seed", "workers", "J", "ball_d")
    _LISTS = ("x", "t_list", "epsilon_list", "lambda_list", "s_list")

    def validate(self) -> "RunConfig":
        for name in self._INTS:
            v = getattr(self, name)
            if v is not None:
                fv = float(v)
                if fv != int(fv):
                    raise ConfigError(f"{name} must be an integer, got {v!r}")
                setattr(self, name, int(fv))
        for name in self._POSITIVE:
            v = getattr(self, name)
            if v is not None and not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        if self.seed is not None and self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        parse_cone(self.cone)
        if self.check not in CHECKS:
            raise ConfigError(f"check must be one of {CHECKS}, got {self.check!r}")
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"sampler must be one of {SAMPLERS}, got {self.sampler!r}")
        _grid_shape(self.grid)
        return self

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def keys(cls) -> set:
        return {f.name for f in fields(cls)}


def _coerce(key: str, raw):
    """Convert a raw config value (text or JSON) to the field's type."""
    if raw is None:
        return None
    if key in RunConfig._LISTS:
        return _floats(raw)
    if isinstance(raw, str):
        text = raw.strip()
        if text.lower() in ("none", "null", ""):
            return None
        if key in ("cone", "out", "grid", "check", "sampler"):
            return text
        try:
            return float(text) if key not in RunConfig._INTS else int(float(text))
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {raw!r} as a number") from None
    return raw


def _apply(cfg: RunConfig, values: dict, where: str) -> RunConfig:
    known = RunConfig.keys()
    for key, raw in values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r} in {where}")
        try:
            setattr(cfg, key, _coerce(key, raw))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    return cfg


def load_config(path) -> RunConfig:
    """Read a ``key = value`` file (or a JSON run manifest) into a validated :class:`RunConfig`."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
        values = data.get("params", data)
        return _apply(RunConfig(), values, str(path)).validate()
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, val = body.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        values[key.strip()] = val.strip()
    return _apply(RunConfig(), values, str(path)).validate()


def _grid_shape(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in str(text).lower().split("x"))
    except ValueError:
        raise ConfigError(f"grid must look like '50x50', got {text!r}") from None
    if a < 1 or b < 1:
        raise ConfigError(f"grid sizes must be positive, got {text!r}")
    return a, b


# ------------------------------------------------------------------- commands


def _write_json(path, data):
    _atomic_write(path, lambda fh: json.dump(verify._jsonable(data), fh, indent=2, sort_keys=True))


def _manifest(out, command, cfg, started, **extra):
    data = {"command": command, "params": cfg.as_dict(), "wall_time": time.time() - started, "version": __version__}
    data.update(extra)
    _write_json(f"{out}/manifest.json", data)
    return data


def _cmd_spectrum(cfg: RunConfig, started: float) -> int:
    cone = parse_cone(cfg.cone)
    law = kernel.entrance_law(cone, cfg.J)
    b = law.basis
    info = {
        "cone": cone_label(cone),
        "d": b.d,
        "lambda1": b.lambda1,
        "alpha1": b.alpha1,
        "nu": b.nu,
        "norm": b.norm,
        "m1_integral": b.m1_integral,
        "c": law.c,
        "exit_exponent": b.exit_exponent,
        "alphas": b.alphas[: min(b.J, 10)],
    }
    _write_json(f"{cfg.out}/spectrum.json", info)
    _manifest(cfg.out, "spectrum", cfg, started)
    print(json.dumps(verify._jsonable(info), indent=2))
    return 0


def _cap_cells(basis, n_ang: int):
    """Midpoints and cap measure of an angular grid over the cross-section."""
    top, d = basis.angular_max, basis.d
    if d == 1:
        return np.array([0.0]), np.array([1.0])
    edges = np.linspace(0.0, top, n_ang + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    if isinstance(basis.cone, Wedge):
        return mid, np.diff(edges)
    if d == 2:
        return mid, 2.0 * np.diff(edges)  # colatitude covers both sides of e1
    # exact cap measure of each colatitude band
    x, w = np.polynomial.legendre.leggauss(8)
    meas = []
    for a, b in zip(edges[:-1], edges[1:]):
        th = 0.5 * (b - a) * x + 0.5 * (a + b)
        meas.append(0.5 * (b - a) * np.dot(w, np.sin(th) ** (d - 2)))
    return mid, sphere_area(d - 2) * np.array(meas)


def _cmd_density(cfg: RunConfig, started: float) -> int:
    cone = parse_cone(cfg.cone)
    law = kernel.entrance_law(cone, cfg.J)
    t = cfg.t if cfg.t is not None else 1.0
    if not (0 < t <= 1):
        raise ConfigError(f"t must lie in (0, 1] for the density, got {t}")
    n_r, n_a = _grid_shape(cfg.grid)
    r_edges = np.linspace(0.0, cfg.r_max * math.sqrt(t), n_r + 1)
    r_mid = 0.5 * (r_edges[:-1] + r_edges[1:])
    r_meas = np.diff(r_edges ** law.d) / law.d
    a_mid, a_meas = _cap_cells(law.basis, n_a)
    seed = resolve_seed(cfg.seed)
    rows = []
    total = 0.0
    for i, r in enumerate(r_mid):
        for j, a in enumerate(a_mid):
            if t == 1.0:
                val = float(kernel.entrance_density_polar(law, 1.0, r, a))
            else:
                y = from_polar(cone, r, a)
                val = kernel.entrance_density(law, t, y, n=cfg.n or 10_000, dt=cfg.dt or 1e-3,
                                              rng=RngStreamSpec(seed, i * n_a + j))
            cell = r_meas[i] * a_meas[j]
            total += val * cell
            rows.append((r, a, val, cell))

    def _write(fh):
        fh.write("r,angular,e,cell_measure\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    _atomic_write(f"{cfg.out}/density.csv", _write)
    summary = {"cone": cone_label(cone), "t": t, "c": law.c, "alpha1": law.alpha1, "grid": cfg.grid,
               "total_mass": total}
    _write_json(f"{cfg.out}/density.json", summary)
    _manifest(cfg.out, "density", cfg, started, summary=summary)
    print(json.dumps(verify._jsonable(summary)))
    return 0


def _cmd_sample(cfg: RunConfig, started: float) -> int:
    cone = parse_cone(cfg.cone)
    n = cfg.n or 1
    dt = cfg.dt or 1e-3
    seed = resolve_seed(cfg.seed)
    spec = RngStreamSpec(seed)
    kind = cfg.sampler
    horizon = cfg.horizon if kind in ("conditioned", "bm") else 1.0
    times = np.arange(sampler.steps_for(horizon, dt) + 1) * dt
    report = None
    if kind == "cone-meander":
        eps = cfg.epsilon or 0.05
        pos, report = sampler.cone_meander_batch(cone, eps, n, dt, times, spec, cfg.x, cfg.max_attempts, cfg.workers)
    elif kind == "conditioned":
        x = np.asarray(cfg.x if cfg.x is not None else np.ones(cone.dim), dtype=float)
        pos, report = sampler.conditioned_batch(cone, x, n, dt, times, spec, horizon, cfg.max_attempts, True,
                                                cfg.workers)
    elif kind == "meander-transform":
        vals, redraws = sampler.meander_transform_batch(n, dt, times, spec, cfg.workers)
        pos = vals[:, :, None]
        report = {"redraws": redraws}
    elif kind == "meander-section":
        level = float(cfg.x[0]) if cfg.x is not None else 0.0
        vals, hits, rate = sampler.meander_section_batch(level, n, dt, times, spec, workers=cfg.workers)
        pos = vals[:, :, None]
        report = {"horizon_cap_frequency": rate, "mean_T_x": float(hits.mean())}
    elif kind == "d-meander":
        pos = sampler.d_meander_batch(cone.dim, n, dt, times, spec, cfg.workers)
    else:
        start = np.asarray(cfg.x, dtype=float) if cfg.x is not None else np.zeros(cone.dim)
        pos = sampler.bm_batch(n, cone.dim, dt, horizon, times, spec, start, cfg.workers)
    files = []
    for i in range(n):
        name = f"path_{i:05d}.csv"
        write_path_csv(PathSample(dt, times, pos[i], spec.as_dict()), f"{cfg.out}/{name}")
        files.append(name)
    acceptance = report.as_dict() if isinstance(report, sampler.RejectionReport) else report
    cfg.seed = seed
    _manifest(cfg.out, "sample", cfg, started, acceptance=acceptance, files=files)
    print(f"wrote {n} path(s) to {cfg.out}")
    return 0


def _cmd_verify(cfg: RunConfig, started: float) -> int:
    cone = parse_cone(cfg.cone)
    check = cfg.check
    dflt = _CHECK_DEFAULTS[check]
    n = cfg.n or dflt["n"]
    dt = cfg.dt or dflt["dt"]
    seed = resolve_seed(cfg.seed)
    spec = RngStreamSpec(seed)
    th = dataclasses.replace(verify.DEFAULT_THRESHOLDS, p_min=cfg.p_min, z_max=cfg.z_max, slope_sigmas=cfg.slope_sigmas)
    common = {"rng": spec, "thresholds": th, "workers": cfg.workers}
    if check == "entrance-density":
        rep = verify.verify_entrance_density(cone, cfg.epsilon or dflt["epsilon"], n, dt, max_attempts=cfg.max_attempts,
                                             **common)
    elif check == "exit-law":
        rep = verify.verify_exit_law(cone, cfg.epsilon or dflt["epsilon"], n, dt, cfg.t_list,
                                     max_attempts=cfg.max_attempts, **common)
    elif check == "scaling":
        x = np.asarray(cfg.x if cfg.x is not None else np.ones(cone.dim), dtype=float)
        rep = verify.verify_scaling(cone, x, cfg.t or dflt["t"], n, dt, max_attempts=cfg.max_attempts, **common)
    elif check == "ball":
        rep = verify.verify_ball_estimate(cfg.lambda_list, cfg.s_list, n, dt, d=cfg.ball_d,
                                          max_attempts=cfg.max_attempts, **common)
    elif check == "fdd":
        rep = verify.verify_fdd_trend(cone, cfg.epsilon_list, 1.0, n, dt, max_attempts=cfg.max_attempts, **common)
    else:
        if cfg.x is None:
            probes = {(0.6, 0.3): [(0.8, 0.5), (1.2, 0.9)]}
        else:
            probes = {(cfg.x[0], cfg.x[1]): [(1.0, 0.6)]}
        rep = verify.verify_heat_kernel(cone, probes, cfg.t or 1.0, n, dt, cfg.h, **common)
    _write_json(f"{cfg.out}/report.json", rep.to_dict())
    cfg.seed = seed
    _manifest(cfg.out, "verify", cfg, started, passed=rep.passed)
    print(rep.summary())
    return 0 if rep.passed else 1


_COMMANDS = {"spectrum": _cmd_spectrum, "density": _cmd_density, "sample": _cmd_sample, "verify": _cmd_verify}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key = value file or JSON run manifest")
    common.add_argument("--cone", help="wedge:<beta>, circular:<theta0> or halfspace:<d>")
    common.add_argument("--seed", type=int, help="RNG seed (default $CONE_MEANDER_SEED, else 0)")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--out", help="output directory")
    common.add_argument("--dt", type=float, help="time step")
    common.add_argument("--n", type=int, help="number of paths")
    common.add_argument("--J", type=int, help="wedge series length")

    p = argparse.ArgumentParser(prog="cone-meander", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], argument_default=argparse.SUPPRESS, help="print the principal spectral data of a cone")

    d = sub.add_parser("density", parents=[common], argument_default=argparse.SUPPRESS, help="tabulate the entrance density on a polar grid")
    d.add_argument("--t", type=float, help="time in (0, 1]")
    d.add_argument("--grid", help="radial x angular cell counts, e.g. 50x50")
    d.add_argument("--r-max", dest="r_max", type=float, help="outer radius of the grid at t = 1")

    s = sub.add_parser("sample", parents=[common], argument_default=argparse.SUPPRESS, help="write sample paths as CSV")
    s.add_argument("--sampler", choices=SAMPLERS)
    s.add_argument("--epsilon", type=float, help="start radius of the approximate cone meander")
    s.add_argument("--x", type=_floats, help="start point (comma-separated) or section level")
    s.add_argument("--horizon", type=float, help="conditioning horizon for 'conditioned' and 'bm'")
    s.add_argument("--max-attempts", dest="max_attempts", type=int)

    v = sub.add_parser("verify", parents=[common], argument_default=argparse.SUPPRESS, help="run a statistical check")
    v.add_argument("--check", choices=CHECKS)
    v.add_argument("--epsilon", type=float)
    v.add_argument("--x", type=_floats, help="start point (scaling, heat-kernel)")
    v.add_argument("--t", type=float, help="horizon (scaling) or time (heat-kernel)")
    v.add_argument("--t-list", dest="t_list", type=_floats)
    v.add_argument("--epsilon-list", dest="epsilon_list", type=_floats)
    v.add_argument("--lambda-list", dest="lambda_list", type=_floats)
    v.add_argument("--s-list", dest="s_list", type=_floats)
    v.add_argument("--ball-d", dest="ball_d", type=int)
    v.add_argument("--h", type=float, help="smoothing width of the heat-kernel check")
    v.add_argument("--max-attempts", dest="max_attempts", type=int)
    v.add_argument("--p-min", dest="p_min", type=float)
    v.add_argument("--z-max", dest="z_max", type=float)
    v.add_argument("--slope-sigmas", dest="slope_sigmas", type=float)
    return p


def run(argv=None) -> int:
    """Execute one CLI invocation and return its exit code."""
    parser = _parser()
    try:
        args = vars(parser.parse_args(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    command = args.pop("command")
    started = time.time()
    try:
        path = args.pop("config", None)
        cfg = load_config(path) if path else RunConfig()
        _apply(cfg, args, "command line").validate()
        return _COMMANDS[command](cfg, started)
    except ConfigError as exc:
        print(f"cone-meander: config error: {exc}", file=sys.stderr)
        return 2
    except (SamplingError, ConeMeanderError, ValueError, ArithmeticError) as exc:
        print(f"cone-meander: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ValueError) and not isinstance(exc, SamplingError) else 1


def main() -> None:
    sys.exit(run())
