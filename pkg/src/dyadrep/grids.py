"""Randomly shifted dyadic grids on the finite torus ``(Z / 2^L)^n``.

Lengths are measured in cells unless stated otherwise; one cell has side
``2**-L`` in torus units.  A cube of scale ``s`` has side ``2**s`` cells and
its canonical position ``p`` places it at ``p * 2**s + offset(s)`` where the
offset accumulates the binary shift vectors of all finer scales.

Only scales ``0 .. W`` exist.  Scale 0 cubes are the mesh cells.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

DEFAULT_ENUMERATION_CAP = 2**20


class EnumerationCapError(ValueError):
    """Raised when an exact enumeration would exceed the configured cap."""

    def __init__(self, required: int, cap: int):
        super().__init__(
            f"enumeration needs {required} elements but the cap is {cap}; "
            f"raise the cap to at least {required}"
        )
        self.required = required
        self.cap = cap


@dataclass(frozen=True)
class GridParams:
    """Parameters of the torus model.

    ``W`` is the number of participating scales above the mesh: cubes of
    side ``2**-L`` up to ``2**(W-L)`` exist.  ``badness_factor`` is the
    constant in the goodness threshold ``c * l(I)**gamma * l(J)**(1-gamma)``.
    """

    n: int = 1
    delta: float = 1.0
    r: int = 1
    L: int = 5
    W: int = 4
    badness_factor: float = 2.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension n must be positive")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.r < 1:
            raise ValueError("goodness radius r must be positive")
        if not 1 <= self.W <= self.L:
            raise ValueError("need 1 <= W <= L")
        if not self.badness_factor > 0:
            raise ValueError("badness_factor must be positive")

    @property
    def gamma(self) -> float:
        return self.delta / (2 * self.n + 2 * self.delta)

    @property
    def side(self) -> int:
        """Number of cells per axis."""
        return 2**self.L

    @property
    def cells(self) -> int:
        return 2 ** (self.n * self.L)

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.n * self.L)

    def to_dict(self) -> dict:
        d = {"n": self.n, "delta": self.delta, "r": self.r, "L": self.L, "W": self.W}
        if self.badness_factor != 2.0:
            d["badness_factor"] = self.badness_factor
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "GridParams":
        unknown = set(d) - {"n", "delta", "r", "L", "W", "badness_factor"}
        if unknown:
            raise ValueError(f"unknown GridParams keys: {sorted(unknown)}")
        return cls(
            n=int(d.get("n", 1)),
            delta=float(d.get("delta", 1.0)),
            r=int(d.get("r", 1)),
            L=int(d.get("L", 5)),
            W=int(d.get("W", 4)),
            badness_factor=float(d.get("badness_factor", 2.0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "GridParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GridShift:
    """Binary shift vectors ``bits[t]`` in ``{0,1}^n`` for ``t = 0 .. W-1``.

    ``bits[t]`` moves every cube of side larger than ``2**t`` cells by
    ``2**t`` cells in the directions where it is 1.
    """

    bits: tuple

    @classmethod
    def zero(cls, params: GridParams) -> "GridShift":
        return cls(tuple((0,) * params.n for _ in range(params.W)))

    def offset(self, scale: int, L: int) -> np.ndarray:
        n = len(self.bits[0]) if self.bits else 1
        off = np.zeros(n, dtype=np.int64)
        for t in range(min(scale, len(self.bits))):
            off += (2**t) * np.asarray(self.bits[t], dtype=np.int64)
        return off % (2**L)

    def toggled(self, t: int, d: int) -> "GridShift":
        bits = [list(b) for b in self.bits]
        bits[t][d] ^= 1
        return GridShift(tuple(tuple(b) for b in bits))


def sample_shift(rng_seed, params: GridParams) -> GridShift:
    """Draw every shift bit independently and uniformly.

    ``rng_seed`` may be an integer seed or a ``numpy.random.Generator``.
    """
    rng = np.random.default_rng(rng_seed)
    b = rng.integers(0, 2, size=(params.W, params.n))
    return GridShift(tuple(tuple(int(v) for v in row) for row in b))


def enumerate_shifts(
    params: GridParams, cap: int = DEFAULT_ENUMERATION_CAP
) -> list[GridShift]:
    """All ``2**(n W)`` shifts in a stable (lexicographic) order."""
    total = 2 ** (params.n * params.W)
    if total > cap:
        raise EnumerationCapError(total, cap)
    out = []
    for flat in itertools.product((0, 1), repeat=params.n * params.W):
        out.append(
            GridShift(
                tuple(
                    tuple(flat[t * params.n : (t + 1) * params.n])
                    for t in range(params.W)
                )
            )
        )
    return out


@dataclass(frozen=True)
class DyadicGrid:
    params: GridParams
    shift: GridShift

    @classmethod
    def standard(cls, params: GridParams) -> "DyadicGrid":
        return cls(params, GridShift.zero(params))

    def offset(self, scale: int) -> np.ndarray:
        return self.shift.offset(scale, self.params.L)

    def count(self, scale: int) -> int:
        """Cubes of a given scale per axis."""
        return 2 ** (self.params.L - scale)

    def cube(self, scale: int, position) -> "Cube":
        if not 0 <= scale <= self.params.W:
            raise ValueError(f"scale {scale} outside window 0..{self.params.W}")
        pos = tuple(int(p) % self.count(scale) for p in np.atleast_1d(position))
        if len(pos) != self.params.n:
            raise ValueError("position has wrong dimension")
        return Cube(self, scale, pos)

    def cubes(self, scale: int) -> list["Cube"]:
        m = self.count(scale)
        return [
            Cube(self, scale, p)
            for p in itertools.product(range(m), repeat=self.params.n)
        ]

    def starts(self, scale: int) -> np.ndarray:
        """Start corners of all cubes of ``scale`` in C order, shape (count**n, n)."""
        m = self.count(scale)
        pos = np.array(list(itertools.product(range(m), repeat=self.params.n)))
        pos = pos.reshape(-1, self.params.n)
        return (pos * 2**scale + self.offset(scale)) % self.params.side

    def containing(self, cell, scale: int) -> "Cube":
        """The cube of ``scale`` containing the mesh cell ``cell``."""
        cell = np.atleast_1d(np.asarray(cell, dtype=np.int64))
        pos = ((cell - self.offset(scale)) % self.params.side) // 2**scale
        return Cube(self, scale, tuple(int(p) for p in pos))


@dataclass(frozen=True)
class Cube:
    grid: DyadicGrid = field(repr=False)
    scale: int
    position: tuple

    @property
    def start(self) -> np.ndarray:
        p = np.asarray(self.position, dtype=np.int64)
        return (p * 2**self.scale + self.grid.offset(self.scale)) % self.grid.params.side

    @property
    def side(self) -> int:
        """Side length in cells."""
        return 2**self.scale

    @property
    def length(self) -> float:
        """Side length in torus units."""
        return 2.0 ** (self.scale - self.grid.params.L)

    @property
    def measure(self) -> float:
        return self.length**self.grid.params.n

    def cells(self) -> np.ndarray:
        """Boolean mask of the cube on the mesh, shape ``(2**L,)*n``."""
        N = self.grid.params.side
        mask = np.ones((N,) * self.grid.params.n, dtype=bool)
        for d, s0 in enumerate(self.start):
            ax = np.zeros(N, dtype=bool)
            ax[(s0 + np.arange(self.side)) % N] = True
            shape = [1] * self.grid.params.n
            shape[d] = N
            mask &= ax.reshape(shape)
        return mask

    def parent(self) -> Optional["Cube"]:
        if self.scale >= self.grid.params.W:
            return None
        return self.ancestor(self.scale + 1)

    def ancestor(self, scale: int) -> "Cube":
        if scale < self.scale:
            raise ValueError("ancestor scale below cube scale")
        return self.grid.containing(self.start, scale)

    def children(self) -> list["Cube"]:
        if self.scale == 0:
            return []
        s = self.scale - 1
        bit = np.asarray(self.grid.shift.bits[s], dtype=np.int64)
        base = np.asarray(self.position, dtype=np.int64) * 2 + bit
        out = []
        for delta in itertools.product((0, 1), repeat=self.grid.params.n):
            out.append(self.grid.cube(s, base + np.asarray(delta)))
        return out

    def contains(self, other: "Cube") -> bool:
        if other.scale > self.scale:
            return False
        return other.ancestor(self.scale) == self


def torus_gaps(start_a, side_a, start_b, side_b, N):
    """Per-axis closure gaps between boxes on a circle of ``N`` cells.

    Works elementwise on broadcastable integer arrays; returns cells.
    """
    rel = (np.asarray(start_b) - np.asarray(start_a)) % N
    touching = (rel <= side_a) | (rel + side_b >= N)
    gap = np.minimum(rel - side_a, N - (rel + side_b))
    return np.where(touching, 0, gap)


def cube_distance_cells(start_a, side_a, start_b, side_b, N):
    """ell-infinity set distance in cells; the last axis indexes dimensions."""
    return torus_gaps(start_a, side_a, start_b, side_b, N).max(axis=-1)


def boundary_distance_cells(start_c, side_c, start_t, side_t, N):
    """Distance from box ``c`` to the topological boundary of box ``t``.

    A box covering a full circle keeps its seam at its start corner.
    """
    rel = (np.asarray(start_c) - np.asarray(start_t)) % N
    inside_axis = rel + side_c <= side_t
    inside = inside_axis.all(axis=-1)
    wall = np.minimum(rel, side_t - (rel + side_c)).min(axis=-1)
    outside = cube_distance_cells(start_c, side_c, start_t, side_t, N)
    return np.where(inside, wall, outside)


def distance(a: Cube, b: Cube) -> float:
    """Torus ell-infinity distance between the closures, in torus units."""
    if a.grid.params.n != b.grid.params.n:
        raise ValueError("cubes live in different dimensions")
    N = a.grid.params.side
    d = cube_distance_cells(a.start, a.side, b.start, b.side, N)
    return float(d) * 2.0 ** (-a.grid.params.L)


def join(a: Cube, b: Cube) -> Optional[Cube]:
    """Smallest in-window cube containing both, or ``None`` if there is none."""
    if a.grid != b.grid:
        raise ValueError("cubes belong to different grids")
    s = max(a.scale, b.scale)
    for t in range(s, a.grid.params.W + 1):
        k = a.ancestor(t)
        if b.ancestor(t) == k:
            return k
    return None


def _badness_threshold(side_c, side_t, params: GridParams):
    g = params.gamma
    return params.badness_factor * side_c**g * side_t ** (1.0 - g)


def is_good(c: Cube, params: Optional[GridParams] = None) -> bool:
    """Goodness of ``c`` against every in-window cube at least ``2**r`` times larger."""
    params = params or c.grid.params
    N = params.side
    for s_big in range(c.scale + params.r, params.W + 1):
        starts = c.grid.starts(s_big)
        d = boundary_distance_cells(c.start[None, :], c.side, starts, 2**s_big, N)
        if np.any(d <= _badness_threshold(c.side, 2**s_big, params)):
            return False
    return True


def good_mask(grid: DyadicGrid, scale: int) -> np.ndarray:
    """Goodness of every cube of ``scale`` (C order of positions)."""
    p = grid.params
    N = p.side
    starts = grid.starts(scale)
    good = np.ones(len(starts), dtype=bool)
    for s_big in range(scale + p.r, p.W + 1):
        big = grid.starts(s_big)
        d = boundary_distance_cells(
            starts[:, None, :], 2**scale, big[None, :, :], 2**s_big, N
        )
        thr = _badness_threshold(2**scale, 2**s_big, p)
        good &= ~np.any(d <= thr, axis=1)
    return good


def pi_good(
    params: GridParams, scale: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> Fraction:
    """Exact probability that a cube of ``scale`` is good, by enumeration.

    Also asserts that goodness only depends on the shift bits at scales
    ``>= scale``.
    """
    shifts = enumerate_shifts(params, cap)
    hits = 0
    seen: dict = {}
    for w in shifts:
        g = is_good(DyadicGrid(params, w).cube(scale, (0,) * params.n), params)
        hits += g
        coarse = w.bits[scale:]
        if seen.setdefault(coarse, g) != g:
            raise AssertionError("goodness depends on fine shift bits")
    return Fraction(hits, len(shifts))


def pi_good_table(params: GridParams, cap: int = DEFAULT_ENUMERATION_CAP) -> dict:
    """``pi_good`` for every scale ``0 .. W``."""
    return {s: pi_good(params, s, cap) for s in range(params.W + 1)}


def enumerate_positions(params: GridParams, scale: int) -> Iterator[tuple]:
    m = 2 ** (params.L - scale)
    return itertools.product(range(m), repeat=params.n)
