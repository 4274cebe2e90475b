"""Cone geometry: membership, polar decomposition, exit detection, scaling.

Three convex cone families with vertex at the origin are supported:

* ``Wedge(beta)`` -- the planar sector of polar angles ``(0, beta)``,
  ``0 < beta <= pi``;
* ``Circular3D(theta0)`` -- points of R^3 whose angle to the ``e1`` axis is
  below ``theta0``, ``0 < theta0 <= pi/2``;
* ``HalfSpace(d)`` -- ``{x in R^d : x1 > 0}``.

All cones are open: boundary points count as outside.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "Wedge",
    "Circular3D",
    "HalfSpace",
    "ConeSpec",
    "PathSample",
    "parse_cone",
    "cone_label",
    "contains",
    "inside",
    "polar",
    "angular_coordinate",
    "from_polar",
    "first_exit_index",
    "scale_path",
    "default_direction",
    "write_path_csv",
    "read_path_csv",
]


@dataclass(frozen=True)
class Wedge:
    beta: float

    def __post_init__(self):
        b = float(self.beta)
        if not (math.isfinite(b) and 0.0 < b <= math.pi):
            raise DomainError(f"wedge angle must lie in (0, pi], got {self.beta!r}")

    @property
    def dim(self) -> int:
        return 2


@dataclass(frozen=True)
class Circular3D:
    theta0: float

    def __post_init__(self):
        t = float(self.theta0)
        if not (math.isfinite(t) and 0.0 < t <= math.pi / 2):
            raise DomainError(f"circular half-angle must lie in (0, pi/2], got {self.theta0!r}")

    @property
    def dim(self) -> int:
        return 3


@dataclass(frozen=True)
class HalfSpace:
    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"half-space dimension must be a positive integer, got {self.d!r}")

    @property
    def dim(self) -> int:
        return int(self.d)


ConeSpec = Union[Wedge, Circular3D, HalfSpace]


def parse_cone(text: str) -> ConeSpec:
    """Parse ``wedge:<beta>``, ``circular:<theta0>`` or ``halfspace:<d>``."""
    kind, sep, arg = str(text).strip().partition(":")
    kind = kind.lower()
    if not sep:
        raise ConfigError(f"cone must look like 'wedge:<beta>', got {text!r}")
    try:
        if kind == "wedge":
            return Wedge(float(arg))
        if kind == "circular":
            return Circular3D(float(arg))
        if kind == "halfspace":
            return HalfSpace(int(arg))
    except ValueError as exc:
        raise ConfigError(f"bad cone parameter in {text!r}: {exc}") from exc
    raise ConfigError(f"unknown cone family {kind!r} (expected wedge, circular or halfspace)")


def cone_label(cone: ConeSpec) -> str:
    """Inverse of :func:`parse_cone`."""
    if isinstance(cone, Wedge):
        return f"wedge:{cone.beta!r}"
    if isinstance(cone, Circular3D):
        return f"circular:{cone.theta0!r}"
    return f"halfspace:{cone.d}"


def _check_points(cone: ConeSpec, p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1:] != (cone.dim,):
        raise DomainError(f"expected points of dimension {cone.dim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("points must be finite")
    return arr


def _angle(cone: ConeSpec, arr: np.ndarray) -> np.ndarray:
    if isinstance(cone, Wedge):
        return np.arctan2(arr[..., 1], arr[..., 0])
    perp = np.sqrt(np.sum(arr[..., 1:] ** 2, axis=-1))
    return np.arctan2(perp, arr[..., 0])


def inside(cone: ConeSpec, points) -> np.ndarray:
    """Vectorised membership test for an array of points, shape ``(..., d)``."""
    arr = _check_points(cone, points)
    if isinstance(cone, HalfSpace):
        return arr[..., 0] > 0.0
    if isinstance(cone, Wedge):
        phi = _angle(cone, arr)
        nonzero = (arr[..., 0] != 0.0) | (arr[..., 1] != 0.0)
        return nonzero & (phi > 0.0) & (phi < cone.beta)
    # circular: colatitude below theta0, measured with atan2 for accuracy
    return (arr[..., 0] > 0.0) & (_angle(cone, arr) < cone.theta0)


def contains(cone: ConeSpec, p) -> bool:
    """True iff the point ``p`` lies in the open cone."""
    arr = _check_points(cone, p)
    if arr.ndim != 1:
        raise DomainError("contains() takes a single point; use inside() for arrays")
    return bool(inside(cone, arr))


def angular_coordinate(cone: ConeSpec, points) -> np.ndarray:
    """Cross-section coordinate of each point (polar angle or colatitude)."""
    return _angle(cone, _check_points(cone, points))


def polar(cone: ConeSpec, p) -> tuple[float, float]:
    """Return ``(r, angular)`` for a nonzero point.

    ``angular`` is the polar angle for wedges and the colatitude from ``e1``
    for circular cones and half-spaces (azimuth is dropped).
    """
    arr = _check_points(cone, p)
    r = float(np.linalg.norm(arr))
    if r == 0.0:
        raise DomainError("polar coordinates are undefined at the vertex")
    return r, float(_angle(cone, arr))


def from_polar(cone: ConeSpec, r, angular, azimuth_dir=None) -> np.ndarray:
    """Rebuild a point from ``(r, angular)``.

    For cones of dimension >= 3 (and half-spaces of dimension 2) the point is
    placed in the plane spanned by ``e1`` and the unit vector ``azimuth_dir``
    orthogonal to ``e1`` (default ``e2``).
    """
    r = np.asarray(r, dtype=float)
    a = np.asarray(angular, dtype=float)
    d = cone.dim
    if isinstance(cone, Wedge):
        return np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)
    if d == 1:
        return (r * np.cos(a))[..., None]
    if azimuth_dir is None:
        azimuth_dir = np.zeros(d)
        azimuth_dir[1] = 1.0
    u = np.asarray(azimuth_dir, dtype=float)
    e1 = np.zeros(d)
    e1[0] = 1.0
    return (r * np.cos(a))[..., None] * e1 + (r * np.sin(a))[..., None] * u


def default_direction(cone: ConeSpec) -> np.ndarray:
    """Unit vector where the principal eigenfunction peaks (bisector or axis)."""
    if isinstance(cone, Wedge):
        h = 0.5 * cone.beta
        return np.array([math.cos(h), math.sin(h)])
    e1 = np.zeros(cone.dim)
    e1[0] = 1.0
    return e1


@dataclass
class PathSample:
    """A path sampled on the uniform grid ``times[k] = k * dt``."""

    dt: float
    times: np.ndarray
    points: np.ndarray
    seed: dict | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        if not (self.dt > 0):
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if self.times.ndim != 1 or len(self.times) != len(self.points):
            raise DomainError("times and points must have the same length")
        k = np.arange(len(self.times))
        if not np.allclose(self.times, k * self.dt, rtol=1e-12, atol=1e-12 * max(1.0, self.dt)):
            raise DomainError("times must be the grid k * dt")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.times)


def first_exit_index(path: PathSample, cone: ConeSpec):
    """Smallest grid index ``k >= 1`` with ``points[k]`` outside the cone, else ``None``."""
    if len(path) < 2:
        return None
    ok = inside(cone, path.points[1:])
    bad = np.flatnonzero(~ok)
    return int(bad[0]) + 1 if bad.size else None


def scale_path(path: PathSample, t: float) -> PathSample:
    """Brownian scaling ``w -> sqrt(t) w(. / t)``: times times ``t``, points times ``sqrt(t)``."""
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"scale must be a positive finite number, got {t!r}")
    meta = dict(path.meta)
    meta["scaled_by"] = meta.get("scaled_by", 1.0) * t
    return PathSample(path.dt * t, path.times * t, path.points * math.sqrt(t), path.seed, meta)


def _atomic_write(dest, write_fn, mode="w"):
    dest = os.fspath(dest)
    folder = os.path.dirname(os.path.abspath(dest))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(dest))
    try:
        with os.fdopen(fd, mode, newline="") as fh:
            write_fn(fh)
        os.replace(tmp, dest)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_path_csv(path: PathSample, dest) -> None:
    """Write ``t,x1,...,xd`` rows with 17 significant digits (atomic)."""

    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(path.dim)])
        for t, p in zip(path.times, path.points):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in p])

    _atomic_write(dest, _write)


def read_path_csv(src, dt: float | None = None) -> PathSample:
    """Read a CSV written by :func:`write_path_csv`."""
    data = np.loadtxt(src, delimiter=",", skiprows=1, ndmin=2)
    times, points = data[:, 0], data[:, 1:]
    if dt is None:
        dt = float(times[1] - times[0]) if len(times) > 1 else 1.0
    return PathSample(dt, times, points)
