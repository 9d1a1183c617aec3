"""Pairing oracles for bi-parameter operators on the torus mesh.

An oracle is a pairing table ``P[x, y]`` over mesh cells with
``<Tf, g> = sum_{x, y} P[x, y] f[y] conj(g[x])``.  It is stored either
dense, with axes ``(x1, x2, y1, y2)``, or as a sum of Kronecker terms
``P = sum_r A_r (x) B_r`` (from separable kernels).
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass

import numpy as np

from . import kernels as _k
from .haar import HaarIndex, HaarSystem, HaarCoefficients, haar_function

PAIR_CHUNK = 64


class OperatorOracle:
    """Exact pairing oracle.

    ``mode`` is ``"matrix"`` for tabulated operators and ``"kernel"`` when
    the table was produced by cell quadrature of a :class:`KernelSpec`.
    """

    def __init__(self, cells1: int, cells2: int, *, dense=None, terms=None, mode="matrix", label="", kernel=None):
        if (dense is None) == (terms is None):
            raise ValueError("give exactly one of dense or terms")
        self.cells1, self.cells2 = cells1, cells2
        if dense is not None:
            dense = np.asarray(dense)
            if dense.shape != (cells1, cells2, cells1, cells2):
                raise ValueError(f"dense table has shape {dense.shape}")
        else:
            terms = [(np.asarray(a), np.asarray(b)) for a, b in terms]
            for a, b in terms:
                if a.shape != (cells1, cells1) or b.shape != (cells2, cells2):
                    raise ValueError("Kronecker factor shape mismatch")
        self.dense = dense
        self.terms = terms
        self.mode = mode
        self.label = label
        self.kernel = kernel
        self._memo: dict = {}
        self._lock = threading.Lock()

    # ----- construction --------------------------------------------------
    @classmethod
    def from_kernel(cls, k: _k.KernelSpec, L: int, closed_form: bool = False) -> "OperatorOracle":
        """Cell-quadrature oracle; ``closed_form`` uses exact cell integrals when available."""
        N = 2**L
        mode = "matrix" if closed_form else "kernel"
        if not k.terms:
            return cls.zero(N, N)
        return cls(N, N, terms=_k.kernel_tables(k, L, closed_form), mode=mode, label=k.name, kernel=k)

    @classmethod
    def identity(cls, cells1: int, cells2: int) -> "OperatorOracle":
        v1, v2 = 1.0 / cells1, 1.0 / cells2
        return cls(cells1, cells2, terms=[(v1 * np.eye(cells1), v2 * np.eye(cells2))], label="identity")

    @classmethod
    def zero(cls, cells1: int, cells2: int) -> "OperatorOracle":
        return cls(cells1, cells2, terms=[(np.zeros((cells1, cells1)), np.zeros((cells2, cells2)))], label="zero")

    @classmethod
    def random(cls, cells1: int, cells2: int, seed: int = 0, odd_symmetric: bool = False) -> "OperatorOracle":
        """Gaussian dense table scaled by the cell volumes.

        ``odd_symmetric`` applies ``Q - Q o R`` in every slot, ``R`` the cell
        reflection, so all four of ``T1, T*1, T_1(1), T_1^*(1)`` vanish.
        """
        rng = np.random.default_rng(seed)
        q = rng.standard_normal((cells1, cells2, cells1, cells2)) / (cells1 * cells2)
        if odd_symmetric:
            for ax in range(4):
                q = q - np.flip(q, axis=ax)
        return cls(cells1, cells2, dense=q, label="odd_symmetric" if odd_symmetric else "random")

    # ----- table access --------------------------------------------------
    def to_dense(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        out = 0
        for a, b in self.terms:
            out = out + np.einsum("ac,bd->abcd", a, b)
        return np.asarray(out)

    def save_table(self, path, n: int = 1, m: int = 1, L: int | None = None) -> None:
        if L is None:
            L = int(round(np.log2(self.cells1) / n))
        header = json.dumps({"n": n, "m": m, "L": L}, sort_keys=True)
        with open(path, "wb") as fh:
            fh.write(header.encode() + b"\n")
            fh.write(np.ascontiguousarray(self.to_dense(), dtype="<f8").tobytes())

    @classmethod
    def load_table(cls, path) -> "OperatorOracle":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode())
            raw = fh.read()
        c1 = 2 ** (header["L"] * header["n"])
        c2 = 2 ** (header["L"] * header["m"])
        data = np.frombuffer(raw, dtype="<f8")
        if data.size != (c1 * c2) ** 2:
            raise ValueError(f"table holds {data.size} values, header implies {(c1 * c2) ** 2}")
        return cls(c1, c2, dense=data.reshape(c1, c2, c1, c2).copy(), label="table")

    # ----- pairings ------------------------------------------------------
    def _check(self, f) -> np.ndarray:
        f = np.asarray(f)
        if f.size != self.cells1 * self.cells2:
            raise ValueError("mesh mismatch")
        return f.reshape(self.cells1, self.cells2)

    def pair(self, f, g) -> complex | float:
        f, g = self._check(f), np.conj(self._check(g))
        if self.dense is not None:
            return np.einsum("abxy,xy,ab->", self.dense, f, g)[()]
        return sum(np.sum(g * (a @ f @ b.T)) for a, b in self.terms)

    def apply(self, f) -> np.ndarray:
        """``Tf`` as a mesh function, i.e. ``<Tf, g>`` equals the mesh inner product."""
        f = self._check(f)
        if self.dense is not None:
            out = np.tensordot(self.dense, f, axes=([2, 3], [0, 1]))
        else:
            out = sum(a @ f @ b.T for a, b in self.terms)
        return out * (self.cells1 * self.cells2)

    def pair_families(self, out1, in1, out2, in2) -> np.ndarray:
        """``G[p, q] = <T(in1[p] (x) in2[q]), out1[p] (x) out2[q]>`` for row families."""
        out1, in1 = np.conj(np.atleast_2d(out1)), np.atleast_2d(in1)
        out2, in2 = np.conj(np.atleast_2d(out2)), np.atleast_2d(in2)
        if self.terms is not None:
            g = 0
            for a, b in self.terms:
                r1 = np.einsum("pa,pa->p", out1, in1 @ a.T)
                r2 = np.einsum("qb,qb->q", out2, in2 @ b.T)
                g = g + np.outer(r1, r2)
            return np.asarray(g)
        res = np.empty((len(out1), len(out2)), dtype=np.result_type(self.dense, out1, in1, out2, in2))
        for s in range(0, len(out1), PAIR_CHUNK):
            o, i = out1[s : s + PAIR_CHUNK], in1[s : s + PAIR_CHUNK]
            m = np.tensordot(o, self.dense, axes=(1, 0))              # (p, x2, y1, y2)
            m = np.einsum("pbxy,px->pby", m, i)
            res[s : s + PAIR_CHUNK] = (np.matmul(out2[None], m) * in2[None]).sum(-1)
        return res

    def haar_matrix(self, rows1: np.ndarray, rows2: np.ndarray) -> np.ndarray:
        """``M[k1, k2, l1, l2] = <T(h_l1 (x) h_l2), h_k1 (x) h_k2>`` for given Haar rows."""
        r1, r2 = np.asarray(rows1), np.asarray(rows2)
        if self.terms is not None:
            out = 0
            for a, b in self.terms:
                out = out + np.einsum("ac,bd->abcd", np.conj(r1) @ a @ r1.T, np.conj(r2) @ b @ r2.T)
            return np.asarray(out)
        m = np.tensordot(np.conj(r1), self.dense, axes=(1, 0))
        m = np.tensordot(np.conj(r2), m, axes=(1, 1))                # (k2, k1, y1, y2)
        m = np.tensordot(m, r1, axes=(2, 1))                          # (k2, k1, y2, l1)
        m = np.tensordot(m, r2, axes=(2, 1))                          # (k2, k1, l1, l2)
        return m.transpose(1, 0, 2, 3)

    def matrix_element(self, in1: HaarIndex, in2: HaarIndex, out1: HaarIndex, out2: HaarIndex):
        """``<T(h_in1 (x) u_in2), h_out1 (x) u_out2>``, memoized on a canonical key."""
        key = tuple(_key(i) for i in (in1, in2, out1, out2))
        with self._lock:
            if key in self._memo:
                return self._memo[key]
        val = self.pair_families(
            haar_function(out1).ravel(), haar_function(in1).ravel(),
            haar_function(out2).ravel(), haar_function(in2).ravel(),
        )[0, 0]
        with self._lock:
            return self._memo.setdefault(key, val)

    # ----- adjoints ------------------------------------------------------
    def adjoint(self) -> "OperatorOracle":
        if self.terms is not None:
            t = [(np.conj(a.T), np.conj(b.T)) for a, b in self.terms]
            return OperatorOracle(self.cells1, self.cells2, terms=t, mode=self.mode, label=self.label + "*")
        d = np.conj(self.dense.transpose(2, 3, 0, 1))
        return OperatorOracle(self.cells1, self.cells2, dense=d, mode=self.mode, label=self.label + "*")

    def partial_adjoint(self) -> "OperatorOracle":
        """``T_1``: ``<T_1(f1 (x) f2), g1 (x) g2> = <T(g1 (x) f2), f1 (x) g2>``."""
        if self.terms is not None:
            t = [(a.T, b) for a, b in self.terms]
            return OperatorOracle(self.cells1, self.cells2, terms=t, mode=self.mode, label=self.label + "_1")
        d = self.dense.transpose(2, 1, 0, 3)
        return OperatorOracle(self.cells1, self.cells2, dense=d, mode=self.mode, label=self.label + "_1")

    def adjoints(self) -> tuple["OperatorOracle", "OperatorOracle", "OperatorOracle"]:
        t1 = self.partial_adjoint()
        return self.adjoint(), t1, t1.adjoint()


def _key(idx: HaarIndex) -> tuple:
    c = idx.cube
    return (c.grid.shift.bits, c.scale, tuple(c.position), tuple(idx.signature))


# ----- hypothesis checks -----------------------------------------------------

@dataclass
class CheckReport:
    name: str
    max_ratio: float
    argmax: list
    constant: float
    samples: int

    @property
    def passed(self) -> bool:
        return bool(self.max_ratio <= self.constant)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_ratio": self.max_ratio,
            "argmax": self.argmax,
            "constant": self.constant,
            "samples": self.samples,
            "passed": self.passed,
        }


def _ratio_report(name, g, meas1, meas2, constant) -> CheckReport:
    ratio = np.abs(g) / np.outer(meas1, meas2)
    k, v = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return CheckReport(name, float(ratio[k, v]), [int(k), int(v)], constant, int(ratio.size))


def check_wbp(o: OperatorOracle, sys1: HaarSystem, sys2: HaarSystem, constant: float = 1.0) -> CheckReport:
    """Sup of ``|<T(chi_K (x) chi_V), chi_K (x) chi_V>| / (|K||V|)`` over all window cubes."""
    c1, c2 = sys1.cube_rows, sys2.cube_rows
    g = o.pair_families(c1, c1, c2, c2)
    return _ratio_report("wbp", g, sys1.cube_measure, sys2.cube_measure, constant)


def validate_adapted(a: np.ndarray, support: np.ndarray, zero_mean: bool = True, atol: float = 1e-12) -> None:
    """Reject functions that are not ``K``-adapted with zero mean."""
    a = np.asarray(a)
    if np.any(np.abs(a[~support]) > atol):
        raise ValueError("adapted function leaves its cube")
    if np.any(np.abs(a) > 1 + atol):
        raise ValueError("adapted function exceeds 1 in absolute value")
    if zero_mean and abs(np.sum(a)) > atol * max(1, a.size):
        raise ValueError("adapted function must have zero mean")


def adapted_family(system: HaarSystem, seed: int, kind: str = "random") -> np.ndarray:
    """One zero-mean adapted function per window cube.

    ``kind="random"`` halves a random sign pattern to zero mean;
    ``kind="haar"`` uses the first cancellative Haar function scaled to sup 1.
    """
    rng = np.random.default_rng(seed)
    rows = system.cube_rows
    out = np.zeros_like(rows)
    for c in range(system.n_cubes):
        cells = np.nonzero(rows[c])[0]
        if kind == "haar":
            k = c * system.n_sigs
            h = system.rows[k]
            out[c] = h / np.max(np.abs(h))
        else:
            signs = np.repeat([1.0, -1.0], len(cells) // 2)
            out[c, cells] = rng.permutation(signs)
    return out


def check_diagonal_bmo(
    o: OperatorOracle,
    sys1: HaarSystem,
    sys2: HaarSystem,
    constant: float = 1.0,
    seed: int = 0,
    kind: str = "random",
    a_family: np.ndarray | None = None,
    b_family: np.ndarray | None = None,
) -> dict:
    """Ratios for the four diagonal BMO conditions (i)-(iv) over all window cube pairs."""
    c1, c2 = sys1.cube_rows, sys2.cube_rows
    a = adapted_family(sys1, seed, kind) if a_family is None else np.asarray(a_family)
    b = adapted_family(sys2, seed + 1, kind) if b_family is None else np.asarray(b_family)
    for fam, rows in ((a, c1), (b, c2)):
        for row, sup in zip(fam, rows):
            validate_adapted(row, sup > 0)
    m1, m2 = sys1.cube_measure, sys2.cube_measure
    return {
        "i": _ratio_report("i", o.pair_families(c1, a, c2, c2), m1, m2, constant),
        "ii": _ratio_report("ii", o.pair_families(a, c1, c2, c2), m1, m2, constant),
        "iii": _ratio_report("iii", o.pair_families(c1, c1, c2, b), m1, m2, constant),
        "iv": _ratio_report("iv", o.pair_families(c1, c1, b, c2), m1, m2, constant),
    }


T1_FAMILY = ("T1", "T*1", "T_1(1)", "T_1*(1)")


def t1_coefficients(o: OperatorOracle, which: str, sys1: HaarSystem, sys2: HaarSystem) -> HaarCoefficients:
    """``<b, h_K (x) u_V>`` on the orthonormal basis for ``b`` in the ``T1`` family.

    The constant ``1`` is the constant function on the torus, so these are
    finite sums with no truncation tail.
    """
    star, t1, t1star = o.adjoints()
    op = {"T1": o, "T*1": star, "T_1(1)": t1, "T_1*(1)": t1star}.get(which)
    if op is None:
        raise ValueError(f"which must be one of {T1_FAMILY}")
    r1, r2 = sys1.basis_rows, sys2.basis_rows
    one1 = np.ones((len(r1), o.cells1))
    one2 = np.ones((len(r2), o.cells2))
    return HaarCoefficients((sys1, sys2), op.pair_families(r1, one1, r2, one2))
