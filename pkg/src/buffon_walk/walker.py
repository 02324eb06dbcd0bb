"""Markov random walk in a reflecting rectangular room.

At each step the heading is kept with probability ``p_theta`` and
otherwise redrawn uniformly from ``angle_range``; the walker then moves
``d_s`` along the heading, reflecting specularly off the walls, and every
pass over the link line ``x = x_l`` is counted.

Randomness comes from numpy's PCG64 generator seeded directly with the
64-bit ``seed``.  The stream is consumed as three uniforms for a random
initial state (only when none is given), then exactly two uniforms per
step: the persistence draw followed by the fresh-angle draw, whether or
not the latter is used.  ``step`` and the compiled kernel behind
``run_walk`` follow the same consumption order and arithmetic, so a walk
assembled step by step reproduces ``run_walk`` bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numba
import numpy as np

from .errors import ConfigError, InvalidInputError
from .geometry import (
    TWO_PI,
    Link,
    Point,
    Room,
    canonical_angle,
    count_link_crossings,
    direction,
    fold_step,
)
from .stats import DEFAULT_Z, Histogram, Tally

SEED_MODULUS = 2**64
CHUNK = 1 << 16


def replica_seed(seed: int, index: int) -> int:
    """Seed for replica ``index``: ``(seed + index) mod 2**64``."""
    return (seed + index) % SEED_MODULUS


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class WalkerState:
    x: float
    y: float
    theta: float
    step_index: int = 0


@dataclass(frozen=True)
class WalkConfig:
    d_s: float
    room: Room
    n_steps: int
    seed: int = 0
    p_theta: float = 0.0
    link: Optional[Link] = None
    angle_range: tuple[float, float] = (0.0, TWO_PI)
    initial_state: Optional[tuple[float, float, float]] = None
    burn_in: Optional[int] = None
    position_bins: int = 20
    angle_bins: int = 36

    def __post_init__(self):
        if not (isinstance(self.d_s, (int, float)) and math.isfinite(self.d_s) and self.d_s > 0):
            raise ConfigError("d_s", f"must be a finite number > 0, got {self.d_s!r}")
        if not isinstance(self.room, Room):
            raise ConfigError("room", "must be a Room")
        if not 0.0 <= self.p_theta <= 1.0:
            raise ConfigError("p_theta", f"must lie in [0, 1], got {self.p_theta!r}")
        if not isinstance(self.n_steps, int) or self.n_steps < 1:
            raise ConfigError("n_steps", f"must be a positive integer, got {self.n_steps!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < SEED_MODULUS:
            raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.link is None:
            object.__setattr__(self, "link", Link.centered(self.room))
        if not 0.0 < self.link.x_l < self.room.L:
            raise ConfigError("link", f"x_l must lie in (0, {self.room.L}), got {self.link.x_l}")
        a, b = self.angle_range
        if not (math.isfinite(a) and math.isfinite(b) and 0.0 <= b - a <= TWO_PI):
            raise ConfigError("angle_range", f"need a <= b <= a + 2*pi, got {self.angle_range!r}")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.n_steps // 100)
        if not isinstance(self.burn_in, int) or not 0 <= self.burn_in < self.n_steps:
            raise ConfigError("burn_in", f"must be an integer in [0, n_steps), got {self.burn_in!r}")
        if self.initial_state is not None:
            x, y, th = self.initial_state
            if not self.room.contains(Point(x, y)) or not math.isfinite(th):
                raise ConfigError("initial_state", f"{self.initial_state!r} is not inside the room")
        for name in ("position_bins", "angle_bins"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")

    @property
    def p_analytic(self) -> float:
        return 2.0 * self.d_s / (math.pi * self.room.L)


def _draw_angle(config: WalkConfig, u: float) -> float:
    a, b = config.angle_range
    return canonical_angle(a + u * (b - a))


def initial_state(config: WalkConfig, rng: np.random.Generator) -> WalkerState:
    if config.initial_state is not None:
        x, y, th = config.initial_state
        return WalkerState(float(x), float(y), canonical_angle(th), 0)
    u = rng.random(3)
    return WalkerState(
        float(u[0]) * config.room.L, float(u[1]) * config.room.B, _draw_angle(config, float(u[2])), 0
    )


def next_angle(theta_prev: float, config: WalkConfig, rng: np.random.Generator) -> float:
    u = rng.random(2)
    if u[0] < config.p_theta:
        return theta_prev
    return _draw_angle(config, float(u[1]))


def step(state: WalkerState, config: WalkConfig, rng: np.random.Generator) -> tuple[WalkerState, int]:
    theta = next_angle(state.theta, config, rng)
    path = fold_step(Point(state.x, state.y), theta, config.d_s, config.room)
    n = count_link_crossings(path, config.link)
    end = path.end
    return WalkerState(end.x, end.y, path.theta_out, state.step_index + 1), n


@numba.njit(cache=True, nogil=True)
def _canon(t):
    t = t % TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t


@numba.njit(cache=True, nogil=True)
def _fold(u, extent):
    r = u % (2.0 * extent)
    if r <= extent:
        return r, 1
    return 2.0 * extent - r, -1


@numba.njit(cache=True, nogil=True)
def _between(lo, hi):
    n = math.ceil(hi) - math.floor(lo) - 1
    return n if n > 0 else 0


@numba.njit(cache=True, nogil=True)
def _lattice_crossings(x0, x1, L, x_l):
    if x1 == x0:
        return 0
    lo, hi = (x0, x1) if x0 < x1 else (x1, x0)
    period = 2.0 * L
    n = _between((lo - x_l) / period, (hi - x_l) / period)
    n += _between((lo + x_l) / period, (hi + x_l) / period)
    if x0 == x_l and x1 > x0:
        n += 1
    return n


@numba.njit(cache=True, nogil=True)
def _walk_kernel(x, y, th, d_s, p_theta, a0, width, L, B, x_l, u, xs, ys, ths, cr):
    for i in range(u.shape[0]):
        if not u[i, 0] < p_theta:
            th = _canon(a0 + u[i, 1] * width)
        c, s = direction(th)
        rx = x + d_s * c
        ry = y + d_s * s
        cr[i] = _lattice_crossings(x, rx, L, x_l)
        x, px = _fold(rx, L)
        y, py = _fold(ry, B)
        if px < 0 and py < 0:
            th = _canon(th + math.pi)
        elif px < 0:
            th = _canon(math.pi - th)
        elif py < 0:
            th = _canon(-th)
        xs[i] = x
        ys[i] = y
        ths[i] = th
    return x, y, th


@dataclass(frozen=True)
class WalkSummary:
    n_steps: int
    burn_in: int
    crossings: Tally
    p_analytic: float
    x_histogram: Histogram
    y_histogram: Histogram
    angle_histogram: Histogram
    seeds: tuple[int, ...] = ()
    z: float = DEFAULT_Z
    final_states: tuple[WalkerState, ...] = ()

    @property
    def n_crossings(self) -> int:
        return self.crossings.total

    @property
    def n_counted(self) -> int:
        return self.crossings.n

    @property
    def p_hat(self) -> float:
        return self.crossings.mean

    @property
    def estimate(self):
        return self.crossings.estimate(self.z, self.p_analytic)

    @property
    def ci_low(self) -> float:
        return self.estimate.ci_low

    @property
    def ci_high(self) -> float:
        return self.estimate.ci_high


def _summarise(config, tally, hx, hy, ha, state, z):
    return WalkSummary(
        n_steps=config.n_steps,
        burn_in=config.burn_in,
        crossings=tally,
        p_analytic=config.p_analytic,
        x_histogram=hx,
        y_histogram=hy,
        angle_histogram=ha,
        seeds=(config.seed,),
        z=z,
        final_states=(state,),
    )


def _empty_histograms(config):
    return (
        Histogram.uniform(0.0, config.room.L, config.position_bins),
        Histogram.uniform(0.0, config.room.B, config.position_bins),
        Histogram.uniform(0.0, TWO_PI, config.angle_bins),
    )


def run_walk(config: WalkConfig, z: float = DEFAULT_Z) -> WalkSummary:
    """Run one walk and summarise the steps after burn-in."""
    rng = make_rng(config.seed)
    s = initial_state(config, rng)
    x, y, th = s.x, s.y, s.theta
    a, b = config.angle_range
    L, B = config.room.L, config.room.B
    hx, hy, ha = _empty_histograms(config)
    tally = Tally()
    done = 0
    while done < config.n_steps:
        m = min(CHUNK, config.n_steps - done)
        u = rng.random((m, 2))
        xs = np.empty(m)
        ys = np.empty(m)
        ths = np.empty(m)
        cr = np.empty(m, dtype=np.int64)
        x, y, th = _walk_kernel(
            x, y, th, config.d_s, config.p_theta, a, b - a, L, B, config.link.x_l, u, xs, ys, ths, cr
        )
        # local index j is global step done + j + 1; keep steps > burn_in
        first = max(0, config.burn_in - done)
        if first < m:
            hx.add(xs[first:])
            hy.add(ys[first:])
            ha.add(ths[first:])
            tally = tally + Tally.of(cr[first:])
        done += m
    return _summarise(config, tally, hx, hy, ha, WalkerState(x, y, th, config.n_steps), z)


def run_walk_stepwise(config: WalkConfig, z: float = DEFAULT_Z) -> WalkSummary:
    """Reference implementation of ``run_walk`` built from ``step``.

    Orders of magnitude slower; kept for cross-checking the kernel.
    """
    rng = make_rng(config.seed)
    state = initial_state(config, rng)
    hx, hy, ha = _empty_histograms(config)
    xs, ys, ths, crs = [], [], [], []
    for _ in range(config.n_steps):
        state, n = step(state, config, rng)
        if state.step_index > config.burn_in:
            xs.append(state.x)
            ys.append(state.y)
            ths.append(state.theta)
            crs.append(n)
    hx.add(xs)
    hy.add(ys)
    ha.add(ths)
    return _summarise(config, Tally.of(np.array(crs, dtype=np.int64)), hx, hy, ha, state, z)


def merge_walk_summaries(summaries: Sequence[WalkSummary]) -> WalkSummary:
    """Pool replica summaries; the result does not depend on their order."""
    if not summaries:
        raise InvalidInputError("nothing to merge")
    first = summaries[0]
    for s in summaries[1:]:
        if s.p_analytic != first.p_analytic:
            raise InvalidInputError("summaries come from different step lengths or rooms")
    tally = Tally()
    hx, hy, ha = first.x_histogram, first.y_histogram, first.angle_histogram
    hx = Histogram(hx.bin_edges.copy(), np.zeros_like(hx.counts))
    hy = Histogram(hy.bin_edges.copy(), np.zeros_like(hy.counts))
    ha = Histogram(ha.bin_edges.copy(), np.zeros_like(ha.counts))
    for s in summaries:
        tally = tally + s.crossings
        hx = hx.merged(s.x_histogram)
        hy = hy.merged(s.y_histogram)
        ha = ha.merged(s.angle_histogram)
    ordered = sorted(
        ((s.seeds, s.final_states) for s in summaries), key=lambda pair: pair[0]
    )
    return WalkSummary(
        n_steps=sum(s.n_steps for s in summaries),
        burn_in=sum(s.burn_in for s in summaries),
        crossings=tally,
        p_analytic=first.p_analytic,
        x_histogram=hx,
        y_histogram=hy,
        angle_histogram=ha,
        seeds=tuple(seed for seeds, _ in ordered for seed in seeds),
        z=first.z,
        final_states=tuple(st for _, states in ordered for st in states),
    )


def run_walk_replicas(
    config: WalkConfig, replicas: int, workers: int = 1, z: float = DEFAULT_Z
) -> list[WalkSummary]:
    """Independent walks seeded ``seed + i``, returned in replica order."""
    if replicas < 1:
        raise ConfigError("replicas", f"must be >= 1, got {replicas}")
    configs = [replace(config, seed=replica_seed(config.seed, i)) for i in range(replicas)]
    if workers <= 1:
        return [run_walk(c, z) for c in configs]
    # the kernel releases the GIL, so threads run replicas in parallel
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: run_walk(c, z), configs))
