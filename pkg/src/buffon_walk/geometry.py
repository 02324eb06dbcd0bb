"""Planar geometry of a walker in a rectangular room.

Reflection off the walls is handled by folding: a straight motion of
length ``d_s`` in the unbounded plane is mapped into the room with the
triangle wave ``fold_coordinate`` applied to each axis.  The same motion
can be viewed unfolded, as a straight segment crossing an infinite row of
mirror-image rooms, each carrying its own copy of the link.  The two views
give the same crossing count; ``unfold_crossings`` and
``count_link_crossings(fold_step(...))`` are the two sides of that
equivalence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba

from .errors import InvalidInputError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Room:
    L: float
    B: float

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise InvalidInputError(f"room length L must be > 0, got {self.L}")
        if not (math.isfinite(self.B) and self.B > 0):
            raise InvalidInputError(f"room width B must be > 0, got {self.B}")

    @property
    def eps(self) -> float:
        """Absolute slack used for wall-contact tests."""
        return 1e-12 * max(self.L, self.B)

    def contains(self, p: "Point") -> bool:
        e = self.eps
        return -e <= p.x <= self.L + e and -e <= p.y <= self.B + e


@dataclass(frozen=True)
class Link:
    """Vertical link line ``x = x_l`` spanning the room."""

    x_l: float

    @classmethod
    def centered(cls, room: Room) -> "Link":
        return cls(room.L / 2.0)

    def check(self, room: Room) -> None:
        if not 0.0 < self.x_l < room.L:
            raise InvalidInputError(
                f"link abscissa must lie in (0, {room.L}), got {self.x_l}"
            )


@dataclass(frozen=True)
class Point:
    x: float
    y: float


@dataclass(frozen=True)
class FoldedPath:
    """A reflected step: consecutive vertices joined by straight pieces.

    Interior vertices lie on the room boundary.  ``theta_out`` is the
    heading after all reflections.
    """

    vertices: tuple[Point, ...]
    theta_out: float

    @property
    def segments(self) -> list[tuple[Point, Point]]:
        v = self.vertices
        return list(zip(v[:-1], v[1:]))

    @property
    def length(self) -> float:
        return math.fsum(math.hypot(b.x - a.x, b.y - a.y) for a, b in self.segments)

    @property
    def end(self) -> Point:
        return self.vertices[-1]


@numba.njit(cache=True, nogil=True)
def direction(theta):
    """``(cos theta, sin theta)``.

    Compiled so that Python callers and the compiled walk kernel share
    bit-identical trigonometry.
    """
    return math.cos(theta), math.sin(theta)


def canonical_angle(theta: float) -> float:
    """Map an angle to [0, 2*pi)."""
    t = theta % TWO_PI
    # fmod rounding can land exactly on 2*pi for tiny negative inputs
    return 0.0 if t >= TWO_PI else t


def fold_coordinate(u_raw: float, extent: float) -> tuple[float, int]:
    """Fold ``u_raw`` into ``[0, extent]`` by repeated mirror reflection.

    Returns the folded value and the orientation parity: +1 where the
    folded axis runs the same way as the raw one, -1 where it is mirrored.

    >>> fold_coordinate(1.3, 1.0)
    (0.7, -1)
    """
    if not math.isfinite(u_raw) or not math.isfinite(extent):
        raise InvalidInputError(f"non-finite input: u={u_raw}, extent={extent}")
    if extent <= 0:
        raise InvalidInputError(f"extent must be > 0, got {extent}")
    r = u_raw % (2.0 * extent)
    if r <= extent:
        return r, 1
    return 2.0 * extent - r, -1


def reflect_heading(theta: float, parity_x: int, parity_y: int) -> float:
    """Heading after mirroring the x and/or y direction component."""
    if parity_x < 0 and parity_y < 0:
        theta = theta + math.pi
    elif parity_x < 0:
        theta = math.pi - theta
    elif parity_y < 0:
        theta = -theta
    return canonical_angle(theta)


def _check_step_args(start: Point, theta: float, d_s: float, room: Room) -> None:
    if not all(math.isfinite(v) for v in (start.x, start.y, theta, d_s)):
        raise InvalidInputError("start, theta and d_s must be finite")
    if d_s < 0:
        raise InvalidInputError(f"d_s must be >= 0, got {d_s}")
    if not room.contains(start):
        raise InvalidInputError(f"start {start} lies outside the {room.L} x {room.B} room")


def fold_step(start: Point, theta: float, d_s: float, room: Room) -> FoldedPath:
    """Trace a straight step of length ``d_s`` with specular wall reflections.

    The step is followed wall contact by wall contact, so every sub-segment
    stays inside the room.  The final vertex is pinned to the folded image
    of the unreflected endpoint so that walks built from this function and
    the vectorised walk kernel visit identical positions.
    """
    _check_step_args(start, theta, d_s, room)
    L, B, eps = room.L, room.B, room.eps
    c, s = direction(theta)
    dx, dy = c, s
    x = min(max(start.x, 0.0), L)
    y = min(max(start.y, 0.0), B)
    vertices = [Point(x, y)]
    remaining = d_s

    while remaining > eps:
        tx = (L - x) / dx if dx > 0 else (-x / dx if dx < 0 else math.inf)
        ty = (B - y) / dy if dy > 0 else (-y / dy if dy < 0 else math.inf)
        t = min(tx, ty)
        if t >= remaining:
            vertices.append(Point(x + remaining * dx, y + remaining * dy))
            remaining = 0.0
            break
        hit_x = tx <= t + eps
        hit_y = ty <= t + eps
        if t > 0:
            x = min(max(x + t * dx, 0.0), L)
            y = min(max(y + t * dy, 0.0), B)
            if hit_x:
                x = L if dx > 0 else 0.0
            if hit_y:
                y = B if dy > 0 else 0.0
            vertices.append(Point(x, y))
            remaining -= t
        # corner contact flips both components
        if hit_x:
            dx = -dx
        if hit_y:
            dy = -dy

    fx, px = fold_coordinate(start.x + d_s * c, L)
    fy, py = fold_coordinate(start.y + d_s * s, B)
    if len(vertices) == 1:
        vertices.append(Point(fx, fy))
    else:
        vertices[-1] = Point(fx, fy)
    return FoldedPath(tuple(vertices), reflect_heading(theta, px, py))


def _side(x: float, x_l: float, prev: int) -> int:
    if x > x_l:
        return 1
    if x < x_l:
        return -1
    return prev


def count_link_crossings(path: FoldedPath, link: Link) -> int:
    """Number of strict sign changes of ``x - x_l`` along the path.

    A vertex exactly on the link keeps the side of the piece before it;
    a path starting on the link counts as starting on the negative side.
    """
    x_l = link.x_l
    vs = path.vertices
    side = _side(vs[0].x, x_l, -1)
    n = 0
    for v in vs[1:]:
        s = _side(v.x, x_l, side)
        if s != side:
            n += 1
        side = s
    return n


def _integers_strictly_between(lo: float, hi: float) -> int:
    return max(0, math.ceil(hi) - math.floor(lo) - 1)


def lattice_crossings(x0: float, x1: float, L: float, x_l: float) -> int:
    """Crossings of the straight run ``x0 -> x1`` with the mirror lattice
    ``{2kL + x_l} U {2kL - x_l}``, using the same on-line conventions as
    ``count_link_crossings``."""
    if x1 == x0:
        return 0
    lo, hi = (x0, x1) if x0 < x1 else (x1, x0)
    period = 2.0 * L
    n = _integers_strictly_between((lo - x_l) / period, (hi - x_l) / period)
    n += _integers_strictly_between((lo + x_l) / period, (hi + x_l) / period)
    if x0 == x_l and x1 > x0:
        # starting on the link counts as the negative side
        n += 1
    return n


def unfold_crossings(
    start: Point, theta: float, d_s: float, room: Room, link: Link
) -> int:
    """Count crossings of the unreflected step against the mirrored links."""
    _check_step_args(start, theta, d_s, room)
    link.check(room)
    x1 = start.x + d_s * direction(theta)[0]
    return lattice_crossings(start.x, x1, room.L, link.x_l)
