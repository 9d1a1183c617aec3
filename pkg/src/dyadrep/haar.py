"""Tensor Haar system of a shifted dyadic grid on the torus mesh.

Mesh functions are plain numpy arrays: shape ``(2**L,)*n`` on one axis and
``(2**L,)*n + (2**L,)*m`` on the product.  The inner product is
``sum(f * conj(g)) * cell_volume``.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .grids import Cube, DyadicGrid, good_mask

SQRT_HALF = np.sqrt(0.5)


def signatures(n: int, cancellative: bool = True) -> list[tuple]:
    sigs = list(itertools.product((0, 1), repeat=n))
    return sigs[1:] if cancellative else sigs


@dataclass(frozen=True)
class HaarIndex:
    cube: Cube
    signature: tuple

    @property
    def cancellative(self) -> bool:
        return any(self.signature)


def _profile_1d(start: int, side: int, bit: int, N: int, length: float) -> np.ndarray:
    v = np.zeros(N)
    idx = (start + np.arange(side)) % N
    if bit == 0:
        v[idx] = 1.0
    else:
        v[idx[: side // 2]] = 1.0
        v[idx[side // 2 :]] = -1.0
    return v / np.sqrt(length)


def haar_function(idx: HaarIndex) -> np.ndarray:
    """The L2-normalized tensor Haar function ``h_I^eta`` on the mesh."""
    c = idx.cube
    p = c.grid.params
    if idx.cancellative and c.scale == 0:
        raise ValueError("a single mesh cell carries no cancellative Haar function")
    if len(idx.signature) != p.n:
        raise ValueError("signature length differs from dimension")
    out = np.ones(())
    for d in range(p.n):
        prof = _profile_1d(int(c.start[d]), c.side, idx.signature[d], p.side, c.length)
        out = np.multiply.outer(out, prof)
    return out


def inner(f: np.ndarray, g: np.ndarray, volume: float) -> complex | float:
    return np.sum(f * np.conj(g)) * volume


class HaarSystem:
    """Indexing of cubes and Haar functions of one grid.

    The extended index table lists first every cancellative Haar function of
    scales ``1..W`` (scale, then position, then signature), then the
    averaging function ``h^0`` of every cube of scales ``1..W``.  The
    orthonormal basis consists of the cancellative part plus the top-scale
    averaging functions.
    """

    def __init__(self, grid: DyadicGrid):
        self.grid = grid
        p = self.params = grid.params
        n = p.n
        scales, starts, poss = [], [], []
        self._cube_offset = {}
        for s in range(1, p.W + 1):
            self._cube_offset[s] = len(scales)
            pos = np.array(list(itertools.product(range(grid.count(s)), repeat=n)))
            pos = pos.reshape(-1, n)
            scales.extend([s] * len(pos))
            poss.append(pos)
            starts.append(grid.starts(s))
        self.cube_scale = np.array(scales, dtype=np.int64)
        self.cube_pos = np.concatenate(poss)
        self.cube_start = np.concatenate(starts)
        self.n_cubes = len(self.cube_scale)
        self.cube_side = 2**self.cube_scale
        self.cube_length = 2.0 ** (self.cube_scale - p.L)
        self.cube_measure = self.cube_length**n

        sigs = signatures(n)
        self.n_sigs = len(sigs)
        idx_cube, idx_sig = [], []
        for c in range(self.n_cubes):
            for sg in sigs:
                idx_cube.append(c)
                idx_sig.append(sg)
        self.n_cancellative = len(idx_cube)
        self._avg_offset = len(idx_cube)
        for c in range(self.n_cubes):
            idx_cube.append(c)
            idx_sig.append((0,) * n)
        self.index_cube = np.array(idx_cube, dtype=np.int64)
        self.index_sig = np.array(idx_sig, dtype=np.int64).reshape(-1, n)
        top = np.nonzero(self.cube_scale == p.W)[0]
        self.basis = np.concatenate(
            [np.arange(self.n_cancellative), self._avg_offset + top]
        )
        self.n_basis = len(self.basis)
        self.top_cubes = top

    # ----- cube helpers -------------------------------------------------
    def cube_id(self, scale: int, position) -> int:
        m = self.grid.count(scale)
        flat = 0
        for q in np.atleast_1d(position):
            flat = flat * m + int(q) % m
        return self._cube_offset[scale] + flat

    def cube(self, cid: int) -> Cube:
        return Cube(self.grid, int(self.cube_scale[cid]), tuple(int(v) for v in self.cube_pos[cid]))

    def cube_id_of(self, cube: Cube) -> int:
        return self.cube_id(cube.scale, cube.position)

    def averaging_id(self, cid) -> np.ndarray:
        return self._avg_offset + np.asarray(cid)

    def index(self, k: int) -> HaarIndex:
        return HaarIndex(self.cube(int(self.index_cube[k])), tuple(int(v) for v in self.index_sig[k]))

    def index_id(self, idx: HaarIndex) -> int:
        cid = self.cube_id_of(idx.cube)
        if not any(idx.signature):
            return int(self.averaging_id(cid))
        sigs = signatures(self.params.n)
        return cid * self.n_sigs + sigs.index(tuple(idx.signature))

    @cached_property
    def containment(self) -> np.ndarray:
        """``containment[a, b]`` is True iff cube ``b`` lies inside cube ``a``."""
        N = self.params.side
        s = self.cube_start
        rel = (s[None, :, :] - s[:, None, :]) % N
        inside = (rel + self.cube_side[None, :, None] <= self.cube_side[:, None, None]).all(-1)
        return inside & (self.cube_scale[None, :] <= self.cube_scale[:, None])

    @cached_property
    def cube_good(self) -> np.ndarray:
        return np.concatenate([good_mask(self.grid, s) for s in range(1, self.params.W + 1)])

    @cached_property
    def ancestors(self) -> np.ndarray:
        """``ancestors[c, s]``: id of the scale-``s`` cube containing cube ``c`` (-1 below its scale)."""
        p = self.params
        N = p.side
        out = np.full((self.n_cubes, p.W + 1), -1, dtype=np.int64)
        for s in range(1, p.W + 1):
            m = self.grid.count(s)
            pos = ((self.cube_start - self.grid.offset(s)) % N) // 2**s
            flat = np.zeros(self.n_cubes, dtype=np.int64)
            for d in range(p.n):
                flat = flat * m + pos[:, d]
            out[:, s] = np.where(self.cube_scale <= s, self._cube_offset[s] + flat, -1)
        return out

    @cached_property
    def cube_rows(self) -> np.ndarray:
        """Indicator of each cube on the flattened mesh, shape (n_cubes, cells)."""
        N = self.params.side
        n = self.params.n
        rows = []
        for c in range(self.n_cubes):
            m = np.ones(())
            for d in range(n):
                ax = np.zeros(N)
                ax[(self.cube_start[c, d] + np.arange(self.cube_side[c])) % N] = 1.0
                m = np.multiply.outer(m, ax)
            rows.append(m.ravel())
        return np.array(rows)

    @cached_property
    def rows(self) -> np.ndarray:
        """Every extended Haar function on the flattened mesh."""
        p = self.params
        N = p.side
        out = np.empty((len(self.index_cube), p.side**p.n))
        for k, (c, sg) in enumerate(zip(self.index_cube, self.index_sig)):
            m = np.ones(())
            for d in range(p.n):
                m = np.multiply.outer(
                    m,
                    _profile_1d(int(self.cube_start[c, d]), int(self.cube_side[c]), int(sg[d]), N, float(self.cube_length[c])),
                )
            out[k] = m.ravel()
        return out

    @property
    def basis_rows(self) -> np.ndarray:
        return self.rows[self.basis]

    @property
    def cell_volume(self) -> float:
        return self.params.cell_volume

    @property
    def mesh_shape(self) -> tuple:
        return (self.params.side,) * self.params.n


@dataclass
class HaarCoefficients:
    """Coefficients in the orthonormal basis of one axis or of a product.

    ``values`` has shape ``(n_basis,)`` or ``(n_basis_1, n_basis_2)``.
    """

    systems: tuple
    values: np.ndarray = field(repr=False)

    def cancellative_part(self) -> np.ndarray:
        v = self.values
        if len(self.systems) == 1:
            return v[: self.systems[0].n_cancellative]
        return v[: self.systems[0].n_cancellative, : self.systems[1].n_cancellative]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if len(self.systems) == 1:
            (sy,) = self.systems
            w.writerow(["scale", "position", "signature", "value"])
            for j, k in enumerate(sy.basis):
                w.writerow(_describe(sy, k) + [repr(float(self.values[j]))])
        else:
            s1, s2 = self.systems
            w.writerow(["scale1", "position1", "signature1", "scale2", "position2", "signature2", "value"])
            for a, k1 in enumerate(s1.basis):
                for b, k2 in enumerate(s2.basis):
                    w.writerow(_describe(s1, k1) + _describe(s2, k2) + [repr(float(self.values[a, b]))])
        return buf.getvalue()


def _describe(sy: HaarSystem, k: int) -> list:
    c = sy.index_cube[k]
    pos = " ".join(str(int(v)) for v in sy.cube_pos[c])
    sig = "".join(str(int(v)) for v in sy.index_sig[k])
    return [int(sy.cube_scale[c]), pos, sig]


# ----- fast transforms -------------------------------------------------------

def _analysis(arr: np.ndarray, grid: DyadicGrid) -> np.ndarray:
    """Cascade over the last ``n`` axes; returns coefficients in basis order."""
    p = grid.params
    n = p.n
    batch = arr.shape[: arr.ndim - n]
    approx = arr * np.sqrt(p.cell_volume)
    blocks = []
    sigs = signatures(n)
    for s in range(1, p.W + 1):
        bit = grid.shift.bits[s - 1]
        a = approx
        for d in range(n):
            a = np.roll(a, -bit[d], axis=len(batch) + d)
        parts = {(): a}
        for d in range(n):
            ax = len(batch) + d
            new = {}
            for key, v in parts.items():
                ev = np.take(v, np.arange(0, v.shape[ax], 2), axis=ax)
                od = np.take(v, np.arange(1, v.shape[ax], 2), axis=ax)
                new[key + (0,)] = (ev + od) * SQRT_HALF
                new[key + (1,)] = (ev - od) * SQRT_HALF
            parts = new
        block = np.stack([parts[sg] for sg in sigs], axis=-1)
        blocks.append(block.reshape(batch + (-1,)))
        approx = parts[(0,) * n]
    blocks.append(approx.reshape(batch + (-1,)))
    return np.concatenate(blocks, axis=-1)


def _synthesis(coef: np.ndarray, grid: DyadicGrid) -> np.ndarray:
    p = grid.params
    n = p.n
    batch = coef.shape[:-1]
    sigs = signatures(n)
    sizes = [2 ** (n * (p.L - s)) * len(sigs) for s in range(1, p.W + 1)]
    bounds = np.cumsum([0] + sizes)
    m_top = 2 ** (p.L - p.W)
    approx = coef[..., bounds[-1] :].reshape(batch + (m_top,) * n)
    for s in range(p.W, 0, -1):
        m = 2 ** (p.L - s)
        block = coef[..., bounds[s - 1] : bounds[s]].reshape(batch + (m,) * n + (len(sigs),))
        parts = {(0,) * n: approx}
        for j, sg in enumerate(sigs):
            parts[sg] = block[..., j]
        for d in reversed(range(n)):
            ax = len(batch) + d
            new = {}
            for key in {k[:-1] for k in parts}:
                lo, hi = parts[key + (0,)], parts[key + (1,)]
                shape = list(lo.shape)
                shape[ax] *= 2
                v = np.empty(shape, dtype=np.result_type(lo, hi))
                even = [slice(None)] * len(shape)
                odd = [slice(None)] * len(shape)
                even[ax] = slice(0, None, 2)
                odd[ax] = slice(1, None, 2)
                v[tuple(even)] = (lo + hi) * SQRT_HALF
                v[tuple(odd)] = (lo - hi) * SQRT_HALF
                new[key] = v
            parts = new
        a = parts[()]
        bit = grid.shift.bits[s - 1]
        for d in range(n):
            a = np.roll(a, bit[d], axis=len(batch) + d)
        approx = a
    return approx / np.sqrt(p.cell_volume)


def _move_first_axis_last(f: np.ndarray, n: int) -> np.ndarray:
    return np.moveaxis(f, list(range(n)), list(range(f.ndim - n, f.ndim)))


def forward_transform(f: np.ndarray, system1: HaarSystem, system2: HaarSystem | None = None) -> HaarCoefficients:
    """Fast Haar analysis, ``O(N log N)`` per axis."""
    f = np.asarray(f)
    if system2 is None:
        if f.shape != system1.mesh_shape:
            raise ValueError("mesh mismatch")
        return HaarCoefficients((system1,), _analysis(f, system1.grid))
    n, m = system1.params.n, system2.params.n
    if f.shape != system1.mesh_shape + system2.mesh_shape:
        raise ValueError("mesh mismatch")
    c2 = _analysis(f, system2.grid)                       # (N1..., b)
    c2 = _move_first_axis_last(c2, n)                     # (b, N1...)
    c12 = _analysis(c2, system1.grid)                     # (b, a)
    return HaarCoefficients((system1, system2), np.moveaxis(c12, -1, 0))


def inverse_transform(c: HaarCoefficients) -> np.ndarray:
    if len(c.systems) == 1:
        return _synthesis(np.asarray(c.values), c.systems[0].grid)
    s1, s2 = c.systems
    v = np.moveaxis(np.asarray(c.values), 0, -1)          # (b, a)
    f1 = _synthesis(v, s1.grid)                           # (b, N1...)
    f1 = np.moveaxis(f1, 0, -1)                           # (N1..., b)
    return _synthesis(f1, s2.grid)


def coefficients_from_cancellative(
    cancellative: np.ndarray, system1: HaarSystem, system2: HaarSystem
) -> HaarCoefficients:
    """Embed a cancellative coefficient matrix into the full basis (means zero)."""
    v = np.zeros((system1.n_basis, system2.n_basis), dtype=np.result_type(cancellative, float))
    v[: system1.n_cancellative, : system2.n_cancellative] = cancellative
    return HaarCoefficients((system1, system2), v)


def slice_pair(f: np.ndarray, idx: HaarIndex, axis: int = 0) -> np.ndarray:
    """Partial pairing ``<f, h>_axis``: integrate out one parameter against ``h``."""
    p = idx.cube.grid.params
    h = haar_function(idx)
    n = p.n
    if axis == 0:
        if f.shape[:n] != h.shape:
            raise ValueError("index does not live on the first axis mesh")
        return np.tensordot(h, f, axes=(list(range(n)), list(range(n)))) * p.cell_volume
    if axis == 1:
        if f.shape[f.ndim - n :] != h.shape:
            raise ValueError("index does not live on the second axis mesh")
        k = f.ndim - n
        return np.tensordot(f, h, axes=(list(range(k, f.ndim)), list(range(n)))) * p.cell_volume
    raise ValueError("axis must be 0 or 1")
