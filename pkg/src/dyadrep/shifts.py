"""Bi-parameter dyadic shifts and paraproducts on the torus mesh.

A shift is stored as parallel arrays of entries ``(K, V, I1, I2, J1, J2, a)``.
``K``/``V`` are cube ids and ``I*``/``J*`` extended Haar ids of the two
:class:`HaarSystem` objects, so averaging slots ``h^0`` are ordinary ids.
Operators act on product mesh functions with the volume-weighted inner product.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .haar import HaarSystem

NORM_TOL = 1e-8


@dataclass(frozen=True)
class ShiftType:
    i1: int
    i2: int
    j1: int
    j2: int
    # which of (I1, I2, J1, J2) carry cancellative Haar functions
    cancellative: tuple = (True, True, True, True)

    def __post_init__(self):
        if min(self.i1, self.i2, self.j1, self.j2) < 0:
            raise ValueError("shift complexities must be non-negative")
        c = self.cancellative
        if (not all(c[:2]) and (self.i1, self.i2) != (0, 0)) or (not all(c[2:]) and (self.j1, self.j2) != (0, 0)):
            raise ValueError("non-cancellative slots need (i1, i2) = (0, 0) or (j1, j2) = (0, 0)")

    @property
    def is_cancellative(self) -> bool:
        return all(self.cancellative)

    def to_list(self) -> list:
        return [self.i1, self.i2, self.j1, self.j2, [bool(v) for v in self.cancellative]]


class GeometryError(ValueError):
    pass


@dataclass
class ShiftCoefficients:
    systems: tuple
    stype: ShiftType
    K: np.ndarray
    V: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    a: np.ndarray = field(repr=False)

    def __post_init__(self):
        arrs = [np.asarray(x, dtype=np.int64).ravel() for x in (self.K, self.V, self.I1, self.I2, self.J1, self.J2)]
        a = np.asarray(self.a).ravel()
        if any(len(x) != len(a) for x in arrs):
            raise ValueError("entry arrays differ in length")
        order = np.lexsort(arrs[::-1]) if len(a) else np.arange(0)
        self.K, self.V, self.I1, self.I2, self.J1, self.J2 = (x[order] for x in arrs)
        self.a = a[order]
        self._validate_geometry()
        self._matrix = None

    def __len__(self) -> int:
        return len(self.a)

    def _validate_geometry(self) -> None:
        s1, s2 = self.systems
        t = self.stype
        for ids, cubes, sy, i, canc in (
            (self.I1, self.K, s1, t.i1, t.cancellative[0]),
            (self.I2, self.K, s1, t.i2, t.cancellative[1]),
            (self.J1, self.V, s2, t.j1, t.cancellative[2]),
            (self.J2, self.V, s2, t.j2, t.cancellative[3]),
        ):
            if not len(ids):
                continue
            c = sy.index_cube[ids]
            if np.any(sy.cube_scale[c] != sy.cube_scale[cubes] - i):
                raise GeometryError("Haar cube has the wrong side length relative to its ancestor")
            if not np.all(sy.containment[cubes, c]):
                raise GeometryError("Haar cube is not contained in its ancestor")
            cancellative = ids < sy.n_cancellative
            if np.any(cancellative != canc):
                raise GeometryError("cancellativity of an entry disagrees with the shift type")

    # ----- normalization -------------------------------------------------
    def bounds(self) -> np.ndarray:
        """Per-entry bound ``|I1|^1/2 |I2|^1/2 / |K| * |J1|^1/2 |J2|^1/2 / |V|``."""
        s1, s2 = self.systems
        m1, m2 = s1.cube_measure, s2.cube_measure
        b1 = np.sqrt(m1[s1.index_cube[self.I1]] * m1[s1.index_cube[self.I2]]) / m1[self.K]
        b2 = np.sqrt(m2[s2.index_cube[self.J1]] * m2[s2.index_cube[self.J2]]) / m2[self.V]
        return b1 * b2

    def normalization_ratio(self) -> float:
        return float(np.max(np.abs(self.a) / self.bounds())) if len(self) else 0.0

    def is_normalized(self, rtol: float = 1e-12) -> bool:
        return self.normalization_ratio() <= 1 + rtol

    # ----- derived shifts ------------------------------------------------
    def _replace(self, mask=None, a=None, **kw) -> "ShiftCoefficients":
        sel = slice(None) if mask is None else np.asarray(mask)
        vals = self.a if a is None else a
        return ShiftCoefficients(
            kw.get("systems", self.systems), kw.get("stype", self.stype),
            self.K[sel], self.V[sel], kw.get("I1", self.I1)[sel], kw.get("I2", self.I2)[sel],
            kw.get("J1", self.J1)[sel], kw.get("J2", self.J2)[sel], vals[sel],
        )

    def scaled(self, factor: complex | float) -> "ShiftCoefficients":
        return self._replace(a=self.a * factor)

    def subshift(self, cubes1, cubes2) -> "ShiftCoefficients":
        """Restriction to ``K in cubes1`` and ``V in cubes2``."""
        return self._replace(mask=np.isin(self.K, list(cubes1)) & np.isin(self.V, list(cubes2)))

    def adjoint(self) -> "ShiftCoefficients":
        t = self.stype
        c = t.cancellative
        st = ShiftType(t.i2, t.i1, t.j2, t.j1, (c[1], c[0], c[3], c[2]))
        return self._replace(a=np.conj(self.a), stype=st, I1=self.I2, I2=self.I1, J1=self.J2, J2=self.J1)

    # ----- operator ------------------------------------------------------
    def haar_matrix(self) -> sp.csr_matrix:
        """Sparse map from input coefficients ``(I1, J1)`` to output ``(I2, J2)``."""
        if self._matrix is None:
            s1, s2 = self.systems
            n2 = len(s2.index_cube)
            size = len(s1.index_cube) * n2
            self._matrix = sp.csr_matrix(
                (self.a, (self.I2 * n2 + self.J2, self.I1 * n2 + self.J1)), shape=(size, size)
            )
        return self._matrix

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["K", "V", "I1", "I2", "J1", "J2", "a"])
        for row in zip(self.K, self.V, self.I1, self.I2, self.J1, self.J2, self.a):
            w.writerow([int(v) for v in row[:6]] + [repr(float(np.real(row[6])))])
        return buf.getvalue()

    def dumps(self) -> str:
        s1, s2 = self.systems
        header = {
            "type": self.stype.to_list(),
            "grids": [
                {"params": json.loads(s.params.to_json()), "bits": [list(b) for b in s.grid.shift.bits]}
                for s in (s1, s2)
            ],
        }
        return json.dumps(header, sort_keys=True) + "\n" + self.to_csv()

    @classmethod
    def loads(cls, text: str, systems: tuple) -> "ShiftCoefficients":
        head, _, body = text.partition("\n")
        header = json.loads(head)
        i1, i2, j1, j2, canc = header["type"]
        rows = list(csv.reader(io.StringIO(body)))[1:]
        cols = np.array([[float(v) for v in r] for r in rows]).reshape(-1, 7)
        ints = cols[:, :6].astype(np.int64)
        return cls(systems, ShiftType(i1, i2, j1, j2, tuple(canc)), *ints.T, cols[:, 6])


def _coeff_rows(system: HaarSystem) -> np.ndarray:
    return system.rows * system.cell_volume


class ProductOperator:
    """Linear map on product mesh functions given by ``F -> R1^T A(R1 F R2^T) R2``."""

    def __init__(self, systems: tuple, forward, backward):
        self.systems = systems
        self._forward = forward
        self._backward = backward

    @property
    def shape(self) -> tuple:
        s1, s2 = self.systems
        return (s1.params.side ** s1.params.n, s2.params.side ** s2.params.n)

    def apply(self, f) -> np.ndarray:
        return self._forward(np.asarray(f).reshape(self.shape))

    def apply_adjoint(self, g) -> np.ndarray:
        return self._backward(np.asarray(g).reshape(self.shape))

    def to_matrix(self) -> np.ndarray:
        """Dense matrix in an orthonormal cell basis (so singular values are operator norms)."""
        c1, c2 = self.shape
        eye = np.eye(c1 * c2).reshape(c1 * c2, c1, c2)
        cols = np.stack([self.apply(e).ravel() for e in eye], axis=1)
        return cols


def shift_operator(S: ShiftCoefficients) -> ProductOperator:
    s1, s2 = S.systems
    R1, R2 = s1.rows, s2.rows
    C1, C2 = _coeff_rows(s1), _coeff_rows(s2)
    M = S.haar_matrix()
    MT = M.conj().T.tocsr()
    n1, n2 = len(R1), len(R2)

    def fwd(F):
        c = (C1 @ F @ C2.T).ravel()
        return R1.T @ (M @ c).reshape(n1, n2) @ R2

    def bwd(G):
        c = (C1 @ G @ C2.T).ravel()
        return R1.T @ (MT @ c).reshape(n1, n2) @ R2

    return ProductOperator(S.systems, fwd, bwd)


def apply_shift(S: ShiftCoefficients, f) -> np.ndarray:
    s1, s2 = S.systems
    return shift_operator(S).apply(f).reshape(s1.mesh_shape + s2.mesh_shape)


def bilinear(S: ShiftCoefficients, f, g) -> complex | float:
    s1, s2 = S.systems
    out = shift_operator(S).apply(f)
    return np.sum(out * np.conj(np.asarray(g).reshape(out.shape))) * s1.cell_volume * s2.cell_volume


# ----- norms -----------------------------------------------------------------

@dataclass(frozen=True)
class NormEstimate:
    value: float
    iterations: int
    converged: bool


def power_norm(op: ProductOperator, seed: int = 0, tol: float = NORM_TOL, max_iter: int = 5000) -> NormEstimate:
    """Largest singular value by power iteration on ``T* T``.

    The volume weight cancels in the Rayleigh quotient, so plain Euclidean
    norms of mesh arrays suffice.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.shape)
    v /= np.linalg.norm(v)
    est = 0.0
    for it in range(1, max_iter + 1):
        w = op.apply_adjoint(op.apply(v))
        nw = np.linalg.norm(w)
        if nw == 0:
            return NormEstimate(0.0, it, True)
        new = float(np.sqrt(np.real(np.vdot(v, w))))
        v = w / nw
        if abs(new - est) <= tol * max(new, 1e-300):
            # one more step: Rayleigh quotient on the refined vector
            w = op.apply_adjoint(op.apply(v))
            return NormEstimate(float(np.sqrt(max(np.real(np.vdot(v, w)), 0.0))), it + 1, True)
        est = new
    return NormEstimate(est, max_iter, False)


def dense_norm(op: ProductOperator) -> float:
    return float(np.linalg.norm(op.to_matrix(), 2))


def shift_norm(
    S: ShiftCoefficients, subsets: int = 0, seed: int = 0, tol: float = NORM_TOL, blocks: bool = True
) -> dict:
    """Norm of ``S`` and of subshifts.

    Subsets: the full shift, every singleton ``(K, V)`` block (when
    ``blocks``), plus ``subsets`` random selections ``A x B`` (each cube kept
    with probability 1/2, seeded).
    """
    full = power_norm(shift_operator(S), seed, tol)
    ks, vs = np.unique(S.K), np.unique(S.V)
    rng = np.random.default_rng(seed)
    sub = []
    for _ in range(subsets):
        A = ks[rng.random(len(ks)) < 0.5]
        B = vs[rng.random(len(vs)) < 0.5]
        piece = S.subshift(A, B)
        sub.append(power_norm(shift_operator(piece), seed, tol).value if len(piece) else 0.0)
    single = 0.0
    if blocks:
        pairs = sorted({(int(k), int(v)) for k, v in zip(S.K, S.V)})
        single = max((power_norm(shift_operator(S.subshift([k], [v])), seed, tol).value for k, v in pairs), default=0.0)
    return {
        "norm": full.value,
        "converged": full.converged,
        "subshift_norms": sub,
        "max_subshift_norm": max(sub + [single, full.value]),
        "max_block_norm": single,
    }


# ----- construction helpers ---------------------------------------------------

def descendants(system: HaarSystem, cube: int, depth: int) -> np.ndarray:
    """Cube ids of scale ``scale(cube) - depth`` inside ``cube`` (ascending)."""
    s = system.cube_scale[cube] - depth
    if s < 1:
        return np.zeros(0, dtype=np.int64)
    cand = np.nonzero(system.cube_scale == s)[0]
    return cand[system.containment[cube, cand]]


def _slot_ids(system: HaarSystem, cubes: np.ndarray, cancellative: bool) -> np.ndarray:
    """Extended ids for Haar functions on ``cubes`` (all cancellative signatures, or h^0)."""
    if not cancellative:
        return system.averaging_id(cubes)
    return (cubes[:, None] * system.n_sigs + np.arange(system.n_sigs)[None, :]).ravel()


def random_shift(
    systems: tuple,
    stype: ShiftType,
    seed: int,
    signs: str = "rank_one",
    fill: float = 1.0,
) -> ShiftCoefficients:
    """Shift with every admissible entry at ``fill`` times its normalization bound.

    ``signs="rank_one"`` gives each block a sign pattern ``e(I1) e(I2) e(J1) e(J2)``
    (block norm exactly ``fill`` for ``n = m = 1``); ``"random"`` draws
    independent signs; ``"uniform"`` draws magnitudes in ``[0, 1]`` too.
    """
    s1, s2 = systems
    rng = np.random.default_rng(seed)
    t = stype
    cols = {k: [] for k in ("K", "V", "I1", "I2", "J1", "J2")}
    for K in range(s1.n_cubes):
        i1s = _slot_ids(s1, descendants(s1, K, t.i1), t.cancellative[0])
        i2s = _slot_ids(s1, descendants(s1, K, t.i2), t.cancellative[1])
        if not len(i1s) or not len(i2s):
            continue
        for V in range(s2.n_cubes):
            j1s = _slot_ids(s2, descendants(s2, V, t.j1), t.cancellative[2])
            j2s = _slot_ids(s2, descendants(s2, V, t.j2), t.cancellative[3])
            if not len(j1s) or not len(j2s):
                continue
            g = np.meshgrid(i1s, i2s, j1s, j2s, indexing="ij")
            for key, arr in zip(("I1", "I2", "J1", "J2"), g):
                cols[key].append(arr.ravel())
            cols["K"].append(np.full(g[0].size, K))
            cols["V"].append(np.full(g[0].size, V))
    if not cols["K"]:
        z = np.zeros(0, dtype=np.int64)
        return ShiftCoefficients(systems, stype, z, z, z, z, z, z, np.zeros(0))
    arrays = {k: np.concatenate(v) for k, v in cols.items()}
    n = len(arrays["K"])
    if signs == "rank_one":
        e1 = rng.choice((-1.0, 1.0), len(s1.index_cube))
        e2 = rng.choice((-1.0, 1.0), len(s1.index_cube))
        e3 = rng.choice((-1.0, 1.0), len(s2.index_cube))
        e4 = rng.choice((-1.0, 1.0), len(s2.index_cube))
        sign = e1[arrays["I1"]] * e2[arrays["I2"]] * e3[arrays["J1"]] * e4[arrays["J2"]]
    elif signs == "random":
        sign = rng.choice((-1.0, 1.0), n)
    elif signs == "uniform":
        sign = rng.uniform(-1.0, 1.0, n)
    else:
        raise ValueError(f"unknown sign mode {signs!r}")
    S = ShiftCoefficients(systems, stype, arrays["K"], arrays["V"], arrays["I1"], arrays["I2"], arrays["J1"], arrays["J2"], np.ones(n))
    return S._replace(a=S.bounds() * sign * fill)


# ----- kernel of a shift -------------------------------------------------------

def shift_kernel_bound(S: ShiftCoefficients) -> dict:
    """Max of ``|K_S(x, y)| |x1 - y1|^n |x2 - y2|^m`` over cells off both diagonals.

    ``K_S`` is the cell-constant kernel with ``Sf(x) = sum_y K_S(x, y) f(y) vol``.
    Distances are torus ``l_inf`` distances between cell corners.
    """
    s1, s2 = S.systems
    op = shift_operator(S)
    c1, c2 = op.shape
    vol = s1.cell_volume * s2.cell_volume
    ker = op.to_matrix().reshape(c1, c2, c1, c2) / vol
    d1 = _cell_distances(s1)
    d2 = _cell_distances(s2)
    w = (d1 ** s1.params.n)[:, None, :, None] * (d2 ** s2.params.n)[None, :, None, :]
    val = np.abs(ker) * w
    if not val.size or not np.any(val):
        return {"max": 0.0, "argmax": None}
    idx = np.unravel_index(int(np.argmax(val)), val.shape)
    return {"max": float(val[idx]), "argmax": [int(i) for i in idx]}


def _cell_distances(system: HaarSystem) -> np.ndarray:
    p = system.params
    N = p.side
    coords = np.array(np.unravel_index(np.arange(N**p.n), (N,) * p.n)).T
    diff = np.abs(coords[:, None, :] - coords[None, :, :])
    diff = np.minimum(diff, N - diff)
    return diff.max(axis=-1) / N


# ----- paraproducts --------------------------------------------------------------

PARAPRODUCT_KINDS = ("half_first", "half_second", "full", "mixed")


@dataclass
class ParaproductSymbol:
    """Paraproduct symbol data.

    * ``half_first``: entries ``(K, I1, I2)`` on the first axis with one
      second-axis symbol each (cancellative coefficient rows of ``b_{I1 I2}``).
    * ``half_second``: the mirror image, entries ``(V, J1, J2)``.
    * ``full`` / ``mixed``: one product symbol, a cancellative coefficient matrix.
    """

    kind: str
    systems: tuple
    coefficients: np.ndarray
    K: np.ndarray | None = None
    I1: np.ndarray | None = None
    I2: np.ndarray | None = None
    bmo_norms: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in PARAPRODUCT_KINDS:
            raise ValueError(f"unknown paraproduct kind {self.kind!r}")
        self.coefficients = np.asarray(self.coefficients)
        if self.bmo_norms is None:
            from .analysis import one_param_bmo_rows, product_bmo_proxy

            s1, s2 = self.systems
            if self.kind in ("full", "mixed"):
                self.bmo_norms = np.array([product_bmo_proxy(self.coefficients, s1, s2).value])
            else:
                other = s2 if self.kind == "half_first" else s1
                self.bmo_norms = np.array([b.value for b in one_param_bmo_rows(self.coefficients, other)])


def _require(sym: ParaproductSymbol, *kinds: str) -> None:
    if sym.kind not in kinds:
        raise ValueError(f"paraproduct kind {sym.kind!r} where {kinds} was expected")


def _half_operator(sym: ParaproductSymbol, adjoint: bool) -> ProductOperator:
    """``f -> sum h_I2 (x) Pi*_b(<f, h_I1>_1)`` (or with ``Pi_b`` when ``adjoint``)."""
    s1, s2 = sym.systems
    swap = sym.kind == "half_second"
    a1, a2 = (s2, s1) if swap else (s1, s2)
    R1, C1 = a1.rows, _coeff_rows(a1)
    U = a2.rows[: a2.n_cancellative]
    Uc = _coeff_rows(a2)[: a2.n_cancellative]
    avg = a2.cube_rows[a2.index_cube[: a2.n_cancellative]] / a2.cube_measure[a2.index_cube[: a2.n_cancellative], None]
    B = sym.coefficients
    I1, I2 = np.asarray(sym.I1), np.asarray(sym.I2)

    def pi_star(x, b):  # x: (e, c2) -> sum_V conj(b_V) <x, u_V> chi_V / |V|
        return ((x @ Uc.T) * np.conj(b)) @ avg

    def pi(x, b):  # sum_V <x>_V b_V u_V
        return ((x @ (avg.T * a2.cell_volume)) * b) @ U

    fwd_op, bwd_op = (pi, pi_star) if adjoint else (pi_star, pi)

    def make(op, src, dst):
        def run(F):
            F = F.T if swap else F
            slices = C1 @ F                      # <F, h_k>_1 for every k
            out = np.zeros((len(R1), F.shape[1]), dtype=np.result_type(F, B))
            np.add.at(out, dst, op(slices[src], B))
            res = R1.T @ out
            return res.T if swap else res

        return run

    return ProductOperator(sym.systems, make(fwd_op, I1, I2), make(bwd_op, I2, I1))


def _product_operator(sym: ParaproductSymbol, adjoint: bool) -> ProductOperator:
    s1, s2 = sym.systems
    b = sym.coefficients
    v1, v2 = s1.cell_volume, s2.cell_volume
    h1, h2 = s1.rows[: s1.n_cancellative], s2.rows[: s2.n_cancellative]
    if sym.kind == "full":
        # <f>_{K x V} h_K (x) u_V
        in1 = s1.cube_rows[s1.index_cube[: s1.n_cancellative]] / s1.cube_measure[s1.index_cube[: s1.n_cancellative], None]
        in2 = s2.cube_rows[s2.index_cube[: s2.n_cancellative]] / s2.cube_measure[s2.index_cube[: s2.n_cancellative], None]
        o1, o2 = h1, h2
    else:
        # <f, h_K (x) u_V^2> h_K^2 (x) u_V, squares taken pointwise
        in1, in2, o1, o2 = h1, h2**2, h1**2, h2

    def forward(a1, a2, p1, p2, coef):
        def run(F):
            c = (a1 * v1) @ F @ (a2 * v2).T
            return p1.T @ (c * coef) @ p2

        return run

    fwd = forward(in1, in2, o1, o2, b)
    bwd = forward(o1, o2, in1, in2, np.conj(b))
    return ProductOperator(sym.systems, bwd, fwd) if adjoint else ProductOperator(sym.systems, fwd, bwd)


def half_paraproduct_operator(sym: ParaproductSymbol, adjoint: bool = False) -> ProductOperator:
    _require(sym, "half_first", "half_second")
    return _half_operator(sym, adjoint)


def full_paraproduct_operator(sym: ParaproductSymbol, adjoint: bool = False) -> ProductOperator:
    _require(sym, "full")
    return _product_operator(sym, adjoint)


def mixed_paraproduct_operator(sym: ParaproductSymbol, adjoint: bool = False) -> ProductOperator:
    _require(sym, "mixed")
    return _product_operator(sym, adjoint)


def _shaped(sym: ParaproductSymbol, arr: np.ndarray) -> np.ndarray:
    s1, s2 = sym.systems
    return arr.reshape(s1.mesh_shape + s2.mesh_shape)


def apply_half_paraproduct(sym: ParaproductSymbol, f, adjoint: bool = False) -> np.ndarray:
    return _shaped(sym, half_paraproduct_operator(sym, adjoint).apply(f))


def apply_full_paraproduct(sym: ParaproductSymbol, f, adjoint: bool = False) -> np.ndarray:
    return _shaped(sym, full_paraproduct_operator(sym, adjoint).apply(f))


def apply_mixed_paraproduct(sym: ParaproductSymbol, f, adjoint: bool = False) -> np.ndarray:
    return _shaped(sym, mixed_paraproduct_operator(sym, adjoint).apply(f))


CARLESON = 2.0  # ||Pi_b|| <= 2 sup_I (|I|^-1 sum_{J in I} |b_J|^2)^(1/2) for dyadic martingales


def half_paraproduct_from_oracle(o, systems: tuple, i1: int, i2: int, carleson: float = CARLESON) -> ParaproductSymbol:
    """Half paraproduct on the first axis with symbols ``<T(h_I1 (x) u_J), h_I2 (x) 1>``.

    Entries range over window cubes ``K`` and descendants ``I1, I2`` at depths
    ``i1, i2``; each symbol row is divided by ``carleson`` times its BMO proxy
    and multiplied by ``sqrt(|I1||I2|) / |K|``, so the operator norm is at most 1.
    """
    from .analysis import one_param_bmo_rows

    s1, s2 = systems
    K, I1, I2 = [], [], []
    for k in range(s1.n_cubes):
        a = _slot_ids(s1, descendants(s1, k, i1), True)
        b = _slot_ids(s1, descendants(s1, k, i2), True)
        g = np.meshgrid(a, b, indexing="ij")
        K.append(np.full(g[0].size, k))
        I1.append(g[0].ravel())
        I2.append(g[1].ravel())
    K, I1, I2 = (np.concatenate(x).astype(np.int64) for x in (K, I1, I2))
    U = s2.rows[: s2.n_cancellative]
    ones = np.ones((1, U.shape[1]))
    rows = np.empty((len(K), len(U)))
    for e in range(len(K)):
        rows[e] = o.pair_families(s1.rows[I2[e]], s1.rows[I1[e]], ones, U)[0]
    bmo = np.array([b.value for b in one_param_bmo_rows(rows, s2)])
    m = s1.cube_measure
    bound = np.sqrt(m[s1.index_cube[I1]] * m[s1.index_cube[I2]]) / m[K]
    scale = np.divide(bound, carleson * bmo, out=np.zeros_like(bmo), where=bmo > 0)
    return ParaproductSymbol("half_first", systems, rows * scale[:, None], K, I1, I2)


def random_paraproduct_symbol(kind: str, systems: tuple, seed, density: float = 1.0) -> ParaproductSymbol:
    """Product symbol with Gaussian coefficients ``g_KV sqrt(|K||V|)``, kept with probability ``density``."""
    if kind not in ("full", "mixed"):
        raise ValueError("random product symbols are full or mixed")
    s1, s2 = systems
    rng = np.random.default_rng(seed)
    m1 = s1.cube_measure[s1.index_cube[: s1.n_cancellative]]
    m2 = s2.cube_measure[s2.index_cube[: s2.n_cancellative]]
    w = np.sqrt(np.outer(m1, m2))
    b = rng.standard_normal(w.shape) * w
    if density < 1.0:
        b = b * (rng.random(w.shape) < density)
    return ParaproductSymbol(kind, systems, b)
