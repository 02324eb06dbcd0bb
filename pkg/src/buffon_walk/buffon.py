"""Buffon's needle and noodle on the line lattice ``{kL : k in Z}``.

Needle drops are sampled in the reduced coordinates (midpoint distance to
the nearest line, acute angle to the lines).  Noodles are arbitrary
polylines thrown rigidly: a uniform rotation and a uniform offset across
one lattice period, independent of each other.

Both samplers take two uniforms per drop from a PCG64 stream, in the
order given by ``sample_drop`` / ``drop_noodle``; the vectorised
estimators draw the same stream in blocks, so they agree draw-for-draw
with a loop over the single-drop functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numba
import numpy as np

from .errors import ConfigError, InvalidInputError, OutOfRegimeError
from .geometry import TWO_PI, Point
from .stats import DEFAULT_Z, EstimateRecord, Tally
from .walker import SEED_MODULUS, make_rng

CHUNK = 1 << 18
ARC_RTOL = 1e-6
SHAPE_KINDS = ("segment", "polyline", "arc", "semicircle", "circle")


@dataclass(frozen=True)
class NeedleDrop:
    d_m: float
    theta: float


@dataclass(frozen=True)
class DropConfig:
    L: float
    n_drops: int
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise ConfigError("L", f"line spacing must be > 0, got {self.L!r}")
        if not isinstance(self.n_drops, int) or self.n_drops < 1:
            raise ConfigError("n_drops", f"must be a positive integer, got {self.n_drops!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < SEED_MODULUS:
            raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {self.seed!r}")


def analytic_crossing_p(d_s: float, L: float) -> float:
    """Crossing probability ``2 d_s / (pi L)`` of a needle no longer than ``L``."""
    if L <= 0 or d_s < 0:
        raise InvalidInputError(f"need d_s >= 0 and L > 0, got d_s={d_s}, L={L}")
    if d_s > L:
        raise OutOfRegimeError(f"needle length {d_s} exceeds line spacing {L}")
    return 2.0 * d_s / (math.pi * L)


def needle_crosses(drop: NeedleDrop, d_s: float) -> bool:
    return drop.d_m <= 0.5 * d_s * math.sin(drop.theta)


def sample_drop(L: float, rng: np.random.Generator) -> NeedleDrop:
    u = rng.random(2)
    return NeedleDrop(float(u[0]) * (L / 2.0), float(u[1]) * (math.pi / 2.0))


def needle_tally(d_s: float, config: DropConfig) -> Tally:
    """0/1 crossing indicators of ``n_drops`` needles, as sufficient statistics."""
    if not (math.isfinite(d_s) and d_s > 0):
        raise ConfigError("d_s", f"must be > 0, got {d_s!r}")
    rng = make_rng(config.seed)
    hits = 0
    done = 0
    while done < config.n_drops:
        m = min(CHUNK, config.n_drops - done)
        u = rng.random((m, 2))
        d_m = u[:, 0] * (config.L / 2.0)
        theta = u[:, 1] * (math.pi / 2.0)
        hits += int(np.count_nonzero(d_m <= 0.5 * d_s * np.sin(theta)))
        done += m
    return Tally(config.n_drops, hits, hits)


def estimate_needle_p(d_s: float, config: DropConfig, z: float = DEFAULT_Z) -> EstimateRecord:
    """Fraction of needles that hit a line, with a Wilson interval.

    ``analytic`` is left empty when ``d_s > L``; no closed form is used there.
    """
    tally = needle_tally(d_s, config)
    analytic = analytic_crossing_p(d_s, config.L) if d_s <= config.L else None
    return tally.proportion_estimate(z, analytic)


@dataclass(frozen=True)
class NoodleShape:
    vertices: tuple[Point, ...]
    label: str = "polyline"

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise InvalidInputError("a shape needs at least two vertices")

    @cached_property
    def xy(self) -> np.ndarray:
        a = np.array([(p.x, p.y) for p in self.vertices], dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def total_length(self) -> float:
        d = np.diff(self.xy, axis=0)
        return math.fsum(np.hypot(d[:, 0], d[:, 1]))


def _points(xy) -> tuple[Point, ...]:
    return tuple(Point(float(x), float(y)) for x, y in xy)


def _arc_vertices(length: float, angle: float, closed: bool) -> np.ndarray:
    r = length / angle
    n = 4
    while True:
        chord_total = n * 2.0 * r * math.sin(angle / (2 * n))
        if abs(chord_total - length) <= ARC_RTOL * length:
            break
        n *= 2
    t = np.linspace(0.0, angle, n + 1)
    xy = np.column_stack((r * np.cos(t), r * np.sin(t)))
    if closed:
        xy[-1] = xy[0]
    return xy


def make_shape(
    kind: str,
    length: float,
    *,
    points: Optional[Sequence[tuple[float, float]]] = None,
    bend_deg: float = 90.0,
    angle: float = math.pi / 2,
) -> NoodleShape:
    """Build a noodle of total length ``length``.

    ``polyline`` takes explicit ``points`` (rescaled to ``length``) or, by
    default, a V of two equal legs turning by ``bend_deg``.  ``arc`` spans
    ``angle`` radians; ``semicircle`` and ``circle`` are arcs of pi and 2*pi.
    Arcs are refined by doubling the vertex count until the chord sum is
    within 1e-6 (relative) of ``length``.
    """
    if kind not in SHAPE_KINDS:
        raise InvalidInputError(f"unknown shape kind {kind!r}; expected one of {SHAPE_KINDS}")
    if not (math.isfinite(length) and length > 0):
        raise InvalidInputError(f"length must be > 0, got {length!r}")

    if kind == "segment":
        xy = np.array([[-length / 2.0, 0.0], [length / 2.0, 0.0]])
    elif kind == "polyline":
        if points is None:
            h = length / 2.0
            b = math.radians(bend_deg)
            xy = np.array([[0.0, 0.0], [h, 0.0], [h + h * math.cos(b), h * math.sin(b)]])
        else:
            xy = np.asarray(points, dtype=float)
            if xy.ndim != 2 or xy.shape[0] < 2 or xy.shape[1] != 2:
                raise InvalidInputError("points must be a sequence of at least two (x, y) pairs")
            d = np.diff(xy, axis=0)
            raw = math.fsum(np.hypot(d[:, 0], d[:, 1]))
            if raw <= 0:
                raise InvalidInputError("points must span a positive length")
            xy = xy * (length / raw)
    elif kind == "arc":
        if not 0 < angle <= TWO_PI:
            raise InvalidInputError(f"arc angle must lie in (0, 2*pi], got {angle}")
        xy = _arc_vertices(length, angle, closed=angle == TWO_PI)
    elif kind == "semicircle":
        xy = _arc_vertices(length, math.pi, closed=False)
    else:
        xy = _arc_vertices(length, TWO_PI, closed=True)
    return NoodleShape(_points(xy), label=kind)


@numba.njit(cache=True, nogil=True)
def _band(q, prev):
    # q = x / L; lines sit at integer q.  A vertex on a line keeps the
    # side it came from.
    f = math.floor(q)
    if q != f:
        return f
    if prev < f - 1:
        return f - 1
    if prev > f:
        return f
    return prev


@numba.njit(cache=True, nogil=True)
def _noodle_kernel(vx, vy, L, u, out):
    inv_L = 1.0 / L
    m = vx.shape[0]
    for i in range(u.shape[0]):
        phi = u[i, 0] * TWO_PI
        off = u[i, 1] * L
        c = math.cos(phi)
        s = math.sin(phi)
        q = (off + vx[0] * c - vy[0] * s) * inv_L
        f = math.floor(q)
        band = f - 1 if q == f else f
        count = 0
        for j in range(1, m):
            q = (off + vx[j] * c - vy[j] * s) * inv_L
            if band < q < band + 1:
                continue
            nb = _band(q, band)
            count += abs(nb - band)
            band = nb
        out[i] = count


def _drop_block(shape: NoodleShape, L: float, u: np.ndarray) -> np.ndarray:
    out = np.empty(u.shape[0], dtype=np.int64)
    xy = shape.xy
    _noodle_kernel(np.ascontiguousarray(xy[:, 0]), np.ascontiguousarray(xy[:, 1]), L, u, out)
    return out


def drop_noodle(shape: NoodleShape, L: float, rng: np.random.Generator) -> int:
    """Throw ``shape`` once and count its crossings with the lattice.

    Uses two uniforms: the rotation on [0, 2*pi), then the offset on [0, L).
    """
    if not L > 0:
        raise InvalidInputError(f"L must be > 0, got {L}")
    return int(_drop_block(shape, L, rng.random((1, 2)))[0])


def noodle_tally(shape: NoodleShape, config: DropConfig) -> Tally:
    rng = make_rng(config.seed)
    tally = Tally()
    done = 0
    while done < config.n_drops:
        m = min(CHUNK, config.n_drops - done)
        tally = tally + Tally.of(_drop_block(shape, config.L, rng.random((m, 2))))
        done += m
    return tally


def analytic_expected_crossings(length: float, L: float) -> float:
    """Mean crossings ``2 length / (pi L)`` of any curve of that length."""
    return 2.0 * length / (math.pi * L)


def estimate_expected_crossings(
    shape: NoodleShape, config: DropConfig, z: float = DEFAULT_Z
) -> EstimateRecord:
    if config.n_drops < 2:
        raise ConfigError("n_drops", "a mean interval needs at least 2 drops")
    tally = noodle_tally(shape, config)
    return tally.mean_estimate(z, analytic_expected_crossings(shape.total_length, config.L))
