"""Case splitting of the good-restricted Haar expansion into weighted dyadic shifts.

For one grid pair the good-restricted sum is split per axis by orientation:
``le`` (input cube no larger than output cube, goodness on the input) and
``gt`` (output strictly smaller, goodness on the output).  Each axis pair
``(small, big)`` is classified as separated, inside, equal or nearby and
turned into one or two *axis parts*:

* a ``C`` part whose Haar slots are the original pair, placed in the cube
  ``K`` (the join for separated/nearby, the cube itself for equal, the big
  cube for inside, where the big Haar function is replaced by ``s``);
* for inside pairs, one ``P`` part per small cube collecting, through
  ``h_big = s + <h_big>_small`` summed over all larger cubes, the average
  ``<g>_small`` into a non-cancellative slot ``h^0`` on the small cube.

Products of axis parts give the shift coefficients.  Pairs without an
in-window join form a remainder that is kept exactly but carries no shift.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .analysis import one_param_bmo_rows
from .grids import Cube, distance, torus_gaps
from .haar import HaarIndex, HaarSystem, haar_function
from .operator import OperatorOracle
from .shifts import ShiftCoefficients, ShiftType, bilinear

CLASSES = ("separated", "inside", "equal", "nearby")
SEPARATED, INSIDE, EQUAL, NEARBY = range(4)
KINDS = ("C", "P")
ORIENTATIONS = ("le", "gt")
BLOCKS = tuple((a, b) for a in ORIENTATIONS for b in ORIENTATIONS)
ONE = -1  # test-function id of the constant function


# ----- per-pair primitives ----------------------------------------------------

def classify(small: Cube, big: Cube, params=None) -> str:
    """Class of the pair ``(small, big)`` with ``l(small) <= l(big)``."""
    if small.grid != big.grid:
        raise ValueError("cubes belong to different grids")
    if small.scale > big.scale:
        raise ValueError("first cube must not be larger than the second")
    p = params or small.grid.params
    g = p.gamma
    if distance(small, big) > small.length**g * big.length ** (1 - g):
        return "separated"
    if small == big:
        return "equal"
    if big.contains(small):
        return "inside"
    return "nearby"


def build_s_function(small: Cube, big: Cube, signature: tuple | None = None) -> np.ndarray:
    """``s = chi_{B1^c} (h_big - <h_big>_{B1})`` with ``B1`` the child of ``big`` containing ``small``."""
    if small == big or not big.contains(small):
        raise ValueError("first cube must lie strictly inside the second")
    n = big.grid.params.n
    sig = tuple(signature) if signature is not None else (1,) * n
    h = haar_function(HaarIndex(big, sig))
    child = small.ancestor(big.scale - 1).cells()
    return np.where(child, 0.0, h - h[child].mean())


def _class_codes(system: HaarSystem, small: np.ndarray, big: np.ndarray) -> np.ndarray:
    N = system.params.side
    g = system.params.gamma
    ss, sb = system.cube_side[small], system.cube_side[big]
    gap = np.max(
        torus_gaps(system.cube_start[small], ss[:, None], system.cube_start[big], sb[:, None], N), axis=-1
    )
    sep = gap > ss.astype(float) ** g * sb.astype(float) ** (1 - g)
    equal = small == big
    inside = system.containment[big, small] & ~equal
    return np.select([sep, equal, inside], [SEPARATED, EQUAL, INSIDE], NEARBY)


def join_ids(system: HaarSystem, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Smallest common in-window ancestor of cube pairs, ``-1`` where none exists."""
    anc = system.ancestors
    out = np.full(len(a), -1, dtype=np.int64)
    for s in range(1, system.params.W + 1):
        x, y = anc[a, s], anc[b, s]
        hit = (out < 0) & (x >= 0) & (x == y)
        out[hit] = x[hit]
    return out


# ----- axis parts -------------------------------------------------------------

@dataclass
class AxisParts:
    system: HaarSystem
    orientation: str
    cls: np.ndarray
    kind: np.ndarray
    slot_in: np.ndarray
    slot_out: np.ndarray
    test_in: np.ndarray
    test_out: np.ndarray
    s_side: np.ndarray    # 0 none, 1 input test is s, 2 output test is s
    s_child: np.ndarray
    K: np.ndarray         # -1 marks the window remainder
    mult: np.ndarray
    small: np.ndarray

    def __len__(self) -> int:
        return len(self.cls)

    @property
    def remainder(self) -> np.ndarray:
        return self.K < 0

    @property
    def label(self) -> np.ndarray:
        return self.cls * 2 + self.kind

    def _cube(self, ids):
        return self.system.index_cube[ids]

    @property
    def gen_in(self) -> np.ndarray:
        sy = self.system
        return np.where(self.remainder, -1, sy.cube_scale[self.K] - sy.cube_scale[self._cube(self.slot_in)])

    @property
    def gen_out(self) -> np.ndarray:
        sy = self.system
        return np.where(self.remainder, -1, sy.cube_scale[self.K] - sy.cube_scale[self._cube(self.slot_out)])

    @property
    def bound(self) -> np.ndarray:
        m = self.system.cube_measure
        k = np.where(self.remainder, 0, self.K)
        return np.sqrt(m[self._cube(self.slot_in)] * m[self._cube(self.slot_out)]) / m[k]

    @property
    def decay(self) -> np.ndarray:
        g = np.maximum(self.gen_in, self.gen_out)
        return np.where(self.remainder, 1.0, 2.0 ** (-np.maximum(g, 0) * self.system.params.delta / 2))

    @property
    def norm_factor(self) -> np.ndarray:
        """``mult / (decay * bound)``: turns pairings into normalized ratios."""
        return self.mult / (self.decay * self.bound)

    def rows(self, which: str, idx=None) -> np.ndarray:
        """Test functions on the flattened axis mesh for the input or output side."""
        sy = self.system
        idx = np.arange(len(self)) if idx is None else np.asarray(idx)
        tid = (self.test_in if which == "in" else self.test_out)[idx]
        out = np.where((tid >= 0)[:, None], sy.rows[np.maximum(tid, 0)], 1.0)
        side = 1 if which == "in" else 2
        sel = self.s_side[idx] == side
        if np.any(sel):
            chi = sy.cube_rows[self.s_child[idx][sel]]
            base = out[sel]
            mean = (base * chi).sum(1) / chi.sum(1)
            out[sel] = (base - mean[:, None]) * (1.0 - chi)
        return out


def _pairs(system: HaarSystem, orientation: str):
    sc = system.cube_scale
    a, b = np.meshgrid(np.arange(system.n_cubes), np.arange(system.n_cubes), indexing="ij")
    a, b = a.ravel(), b.ravel()                     # a: input cube, b: output cube
    if orientation == "le":
        keep = sc[a] <= sc[b]
        small, big = a, b
    elif orientation == "gt":
        keep = sc[a] > sc[b]
        small, big = b, a
    else:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")
    keep &= system.cube_good[small]
    return a[keep], b[keep], small[keep], big[keep]


def axis_parts(system: HaarSystem, orientation: str) -> AxisParts:
    ns = system.n_sigs
    cin, cout, small, big = _pairs(system, orientation)
    cls = _class_codes(system, small, big)
    joins = join_ids(system, small, big)
    K = np.select([cls == INSIDE, cls == EQUAL], [big, small], joins)
    child = system.ancestors[small, np.maximum(system.cube_scale[big] - 1, 0)]
    s_side = np.where(cls == INSIDE, 2 if orientation == "le" else 1, 0)

    # expand over signature pairs (one pair when n = 1)
    si, so = np.meshgrid(np.arange(ns), np.arange(ns), indexing="ij")
    si, so = si.ravel(), so.ravel()
    rep = lambda x: np.repeat(x, ns * ns)  # noqa: E731
    til = lambda x: np.tile(x, len(cin))  # noqa: E731
    slot_in = rep(cin) * ns + til(si)
    slot_out = rep(cout) * ns + til(so)
    c_cls, c_K, c_side, c_child, c_small = rep(cls), rep(K), rep(s_side), rep(child), rep(small)

    # P parts: one per good small cube below the top scale and per signature
    smalls = np.nonzero(system.cube_good & (system.cube_scale < system.params.W))[0]
    p_h = (smalls[:, None] * ns + np.arange(ns)[None, :]).ravel()
    p_small = np.repeat(smalls, ns)
    p_avg = system.averaging_id(p_small)
    ones = np.full(len(p_h), ONE)
    if orientation == "le":
        p_in, p_out, t_in, t_out = p_h, p_avg, p_h, ones
    else:
        p_in, p_out, t_in, t_out = p_avg, p_h, ones, p_h
    nc, npart = len(slot_in), len(p_h)
    return AxisParts(
        system,
        orientation,
        cls=np.concatenate([c_cls, np.full(npart, INSIDE)]),
        kind=np.concatenate([np.zeros(nc, dtype=np.int64), np.ones(npart, dtype=np.int64)]),
        slot_in=np.concatenate([slot_in, p_in]),
        slot_out=np.concatenate([slot_out, p_out]),
        test_in=np.concatenate([slot_in, t_in]),
        test_out=np.concatenate([slot_out, t_out]),
        s_side=np.concatenate([c_side, np.zeros(npart, dtype=np.int64)]),
        s_child=np.concatenate([c_child, np.zeros(npart, dtype=np.int64)]),
        K=np.concatenate([c_K, p_small]),
        mult=np.concatenate([np.ones(nc), system.cube_measure[p_small] ** -0.5]),
        small=np.concatenate([c_small, p_small]),
    )


def pair_class_matrix(system: HaarSystem, orientation: str) -> np.ndarray:
    """``M[k_out, k_in]``: class code of a cancellative index pair in the block, ``-1`` outside."""
    parts = axis_parts(system, orientation)
    c = parts.kind == 0
    out = np.full((system.n_cancellative, system.n_cancellative), -1, dtype=np.int64)
    out[parts.slot_out[c], parts.slot_in[c]] = parts.cls[c]
    return out


def case_counts(sys1: HaarSystem, sys2: HaarSystem) -> np.ndarray:
    """4x4 table of good-restricted ordered index pairs per (axis-1 class, axis-2 class)."""
    per_axis = []
    for sy in (sys1, sys2):
        counts = np.zeros(4, dtype=np.int64)
        for o in ORIENTATIONS:
            m = pair_class_matrix(sy, o)
            counts += np.bincount(m[m >= 0], minlength=4)
        per_axis.append(counts)
    return np.outer(*per_axis)


# ----- decomposition ------------------------------------------------------------

def _case_key(block, c1, k1, c2, k2) -> str:
    return f"{block[0]}-{block[1]}:{CLASSES[c1]}/{CLASSES[c2]}:{KINDS[k1]}{KINDS[k2]}"


@dataclass
class ShiftGroup:
    block: tuple
    case: tuple          # (class1, class2) names
    kinds: tuple         # ("C" | "P", "C" | "P")
    calibration: float
    max_ratio: float
    entries: int
    shifts: list = field(default_factory=list)   # [(ShiftCoefficients, weight)]

    @property
    def key(self) -> str:
        return f"{self.block[0]}-{self.block[1]}:{self.case[0]}/{self.case[1]}:{''.join(self.kinds)}"


@dataclass
class Remainder:
    case: tuple
    in1: np.ndarray
    in2: np.ndarray
    out1: np.ndarray
    out2: np.ndarray
    value: np.ndarray


@dataclass
class DecompositionReport:
    systems: tuple
    groups: list
    remainders: list

    def constants(self) -> dict:
        return {g.key: g.calibration for g in self.groups}

    def shift_types(self) -> list:
        return sorted({(g.key, s.stype.to_list().__repr__()) for g in self.groups for s, _ in g.shifts})

    def to_dict(self) -> dict:
        groups = {}
        for g in sorted(self.groups, key=lambda g: g.key):
            groups[g.key] = {
                "calibration": g.calibration,
                "max_ratio": g.max_ratio,
                "entries": g.entries,
                "shift_types": [
                    {"type": s.stype.to_list(), "weight": w, "entries": len(s), "normalization_ratio": s.normalization_ratio()}
                    for s, w in g.shifts
                ],
            }
        return {
            "groups": groups,
            "remainder_entries": int(sum(len(r.value) for r in self.remainders)),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def constants_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group", "calibration", "max_ratio", "entries"])
        for g in sorted(self.groups, key=lambda g: g.key):
            w.writerow([g.key, repr(g.calibration), repr(g.max_ratio), g.entries])
        return buf.getvalue()


def _block_pairings(oracle: OperatorOracle, P1: AxisParts, P2: AxisParts) -> np.ndarray:
    return oracle.pair_families(P1.rows("out"), P1.rows("in"), P2.rows("out"), P2.rows("in"))


def decompose_block(oracle: OperatorOracle, sys1: HaarSystem, sys2: HaarSystem, block=("le", "le")) -> DecompositionReport:
    """Shifts and remainder of one orientation block for a fixed grid pair.

    Calibration constants are the largest normalized ratio per
    (class, part kind) group, so every emitted coefficient is normalized.
    """
    P1, P2 = axis_parts(sys1, block[0]), axis_parts(sys2, block[1])
    G = _block_pairings(oracle, P1, P2)
    raw = G * P1.mult[:, None] * P2.mult[None, :]
    groups, rems = [], []
    lab1, lab2 = P1.label, P2.label
    for l1 in np.unique(lab1):
        for l2 in np.unique(lab2):
            p_all = np.nonzero(lab1 == l1)[0]
            q_all = np.nonzero(lab2 == l2)[0]
            c1, k1, c2, k2 = l1 // 2, l1 % 2, l2 // 2, l2 % 2
            case = (CLASSES[c1], CLASSES[c2])
            # remainder: either axis lacks an in-window join
            pr, qr = P1.remainder[p_all], P2.remainder[q_all]
            rem = pr[:, None] | qr[None, :]
            if np.any(rem):
                pi, qi = np.nonzero(rem)
                pp, qq = p_all[pi], q_all[qi]
                rems.append(Remainder(case, P1.slot_in[pp], P2.slot_in[qq], P1.slot_out[pp], P2.slot_out[qq], raw[pp, qq]))
            p, q = p_all[~pr], q_all[~qr]
            if not len(p) or not len(q):
                continue
            ratio = np.abs(G[np.ix_(p, q)]) * np.abs(P1.norm_factor[p])[:, None] * np.abs(P2.norm_factor[q])[None, :]
            cmax = float(ratio.max())
            group = ShiftGroup(block, case, (KINDS[k1], KINDS[k2]), cmax, cmax, int(ratio.size))
            groups.append(group)
            if cmax == 0.0:
                continue
            a = raw[np.ix_(p, q)] / (P1.decay[p][:, None] * P2.decay[q][None, :] * cmax)
            _emit_shifts(group, P1, P2, p, q, a)
    return DecompositionReport((sys1, sys2), groups, rems)


def _emit_shifts(group: ShiftGroup, P1: AxisParts, P2: AxisParts, p, q, a) -> None:
    s1, s2 = P1.system, P2.system
    t1 = np.stack([P1.gen_in[p], P1.gen_out[p], P1.slot_in[p] < s1.n_cancellative, P1.slot_out[p] < s1.n_cancellative], 1)
    t2 = np.stack([P2.gen_in[q], P2.gen_out[q], P2.slot_in[q] < s2.n_cancellative, P2.slot_out[q] < s2.n_cancellative], 1)
    u1, inv1 = np.unique(t1, axis=0, return_inverse=True)
    u2, inv2 = np.unique(t2, axis=0, return_inverse=True)
    inv1, inv2 = inv1.ravel(), inv2.ravel()
    delta = s1.params.delta, s2.params.delta
    for x, (i1, i2, ci1, ci2) in enumerate(u1):
        pp = np.nonzero(inv1 == x)[0]
        for y, (j1, j2, cj1, cj2) in enumerate(u2):
            qq = np.nonzero(inv2 == y)[0]
            vals = a[np.ix_(pp, qq)]
            pi, qi = np.nonzero(vals != 0)
            if not len(pi):
                continue
            P, Q = p[pp[pi]], q[qq[qi]]
            st = ShiftType(int(i1), int(i2), int(j1), int(j2), (bool(ci1), bool(ci2), bool(cj1), bool(cj2)))
            S = ShiftCoefficients(
                (s1, s2), st, P1.K[P], P2.K[Q], P1.slot_in[P], P1.slot_out[P], P2.slot_in[Q], P2.slot_out[Q], vals[pi, qi]
            )
            weight = group.calibration * 2.0 ** (-max(i1, i2) * delta[0] / 2) * 2.0 ** (-max(j1, j2) * delta[1] / 2)
            group.shifts.append((S, float(weight)))


def decompose(oracle: OperatorOracle, sys1: HaarSystem, sys2: HaarSystem, blocks=BLOCKS) -> DecompositionReport:
    groups, rems = [], []
    for b in blocks:
        r = decompose_block(oracle, sys1, sys2, b)
        groups += r.groups
        rems += r.remainders
    return DecompositionReport((sys1, sys2), groups, rems)


# ----- reassembly ---------------------------------------------------------------

def _extended_coefficients(f, sys1: HaarSystem, sys2: HaarSystem) -> np.ndarray:
    f = np.asarray(f).reshape(sys1.rows.shape[1], sys2.rows.shape[1])
    return (sys1.rows @ f @ sys2.rows.T) * sys1.cell_volume * sys2.cell_volume


def reassemble(report: DecompositionReport, f, g, drop=()) -> complex | float:
    """``sum_groups weight <S f, g>`` plus the remainder, skipping cases in ``drop``.

    ``drop`` holds ``(class1, class2)`` name pairs.
    """
    s1, s2 = report.systems
    drop = {tuple(d) for d in drop}
    total = 0.0
    for grp in report.groups:
        if grp.case in drop:
            continue
        for S, w in grp.shifts:
            total = total + w * bilinear(S, f, g)
    if report.remainders:
        fc = _extended_coefficients(f, s1, s2)
        gc = np.conj(_extended_coefficients(g, s1, s2))
        for r in report.remainders:
            if r.case in drop:
                continue
            total = total + np.sum(r.value * fc[r.in1, r.in2] * gc[r.out1, r.out2])
    return total


def raw_case_contribution(
    oracle: OperatorOracle, sys1: HaarSystem, sys2: HaarSystem, f, g, case: tuple, blocks=BLOCKS
) -> complex | float:
    """Direct good-restricted sum over one ``(class1, class2)`` bucket from the full Haar matrix."""
    r1, r2 = sys1.rows[: sys1.n_cancellative], sys2.rows[: sys2.n_cancellative]
    M = oracle.haar_matrix(r1, r2)
    fc = _extended_coefficients(f, sys1, sys2)[: sys1.n_cancellative, : sys2.n_cancellative]
    gc = np.conj(_extended_coefficients(g, sys1, sys2)[: sys1.n_cancellative, : sys2.n_cancellative])
    c1, c2 = CLASSES.index(case[0]), CLASSES.index(case[1])
    total = 0.0
    for o1, o2 in blocks:
        m1 = (pair_class_matrix(sys1, o1) == c1).astype(float)
        m2 = (pair_class_matrix(sys2, o2) == c2).astype(float)
        total = total + np.einsum("abcd,ac,bd,cd,ab->", M, m1, m2, fc, gc)
    return total


# ----- decay ----------------------------------------------------------------------

@dataclass
class DecayGroup:
    key: str
    max_ratio: float
    table: dict          # {(max(i1, i2), max(j1, j2)): max ratio}
    bmo_ratio: float | None
    pairs: int


@dataclass
class DecayReport:
    block: tuple
    W: tuple
    groups: dict

    def to_dict(self) -> dict:
        return {
            "block": list(self.block),
            "W": list(self.W),
            "groups": {
                k: {
                    "max_ratio": g.max_ratio,
                    "bmo_ratio": g.bmo_ratio,
                    "pairs": g.pairs,
                    "table": {f"{a},{b}": v for (a, b), v in sorted(g.table.items())},
                }
                for k, g in sorted(self.groups.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group", "gen1", "gen2", "max_ratio"])
        for k, g in sorted(self.groups.items()):
            for (a, b), v in sorted(g.table.items()):
                w.writerow([k, a, b, repr(v)])
        return buf.getvalue()


def _axis_pairings(parts: AxisParts, factor: np.ndarray, chunk: int = 4096) -> np.ndarray:
    out = np.empty(len(parts), dtype=np.result_type(factor, float))
    for s in range(0, len(parts), chunk):
        idx = np.arange(s, min(s + chunk, len(parts)))
        o, i = np.conj(parts.rows("out", idx)), parts.rows("in", idx)
        out[idx] = np.einsum("pa,pa->p", o, i @ factor.T)
    return out


def _p_symbol_bmo(parts: AxisParts, values: np.ndarray, sel: np.ndarray) -> float:
    """One-parameter BMO proxy of a P-part symbol ``sum <b, h_small> h_small``."""
    sy = parts.system
    cid = np.where(parts.test_in[sel] >= 0, parts.test_in[sel], parts.test_out[sel])
    vec = np.zeros((values.shape[0], sy.n_cancellative), dtype=values.dtype)
    vec[:, cid] = values
    return np.array([b.value for b in one_param_bmo_rows(vec, sy)])


def verify_decay(oracle: OperatorOracle, sys1: HaarSystem, sys2: HaarSystem, block=("le", "le")) -> DecayReport:
    """Normalized ratios ``|coefficient| / (decay * bound)`` per (class, part) group.

    Remainder pairs are excluded.  For groups with a ``P`` part the BMO proxy
    of the paraproduct symbol, divided by the other axis' decay and bound, is
    reported as ``bmo_ratio``.  Single-term Kronecker oracles factor per axis;
    other oracles pair every product of axis parts.
    """
    P1, P2 = axis_parts(sys1, block[0]), axis_parts(sys2, block[1])
    rank_one = oracle.terms is not None and len(oracle.terms) == 1
    if rank_one:
        A, B = oracle.terms[0]
        r1, r2 = _axis_pairings(P1, A), _axis_pairings(P2, B)
        G = None
    else:
        G = _block_pairings(oracle, P1, P2)
    n1, n2 = np.abs(P1.norm_factor), np.abs(P2.norm_factor)
    g1 = np.maximum(P1.gen_in, P1.gen_out)
    g2 = np.maximum(P2.gen_in, P2.gen_out)
    groups = {}
    for l1 in np.unique(P1.label):
        for l2 in np.unique(P2.label):
            p = np.nonzero((P1.label == l1) & ~P1.remainder)[0]
            q = np.nonzero((P2.label == l2) & ~P2.remainder)[0]
            if not len(p) or not len(q):
                continue
            key = f"{CLASSES[l1 // 2]}/{CLASSES[l2 // 2]}:{KINDS[l1 % 2]}{KINDS[l2 % 2]}"
            table = {}
            if rank_one:
                a1 = np.abs(r1[p]) * n1[p]
                a2 = np.abs(r2[q]) * n2[q]
                for x in np.unique(g1[p]):
                    for y in np.unique(g2[q]):
                        table[(int(x), int(y))] = float(a1[g1[p] == x].max() * a2[g2[q] == y].max())
            else:
                ratio = np.abs(G[np.ix_(p, q)]) * n1[p][:, None] * n2[q][None, :]
                for x in np.unique(g1[p]):
                    for y in np.unique(g2[q]):
                        table[(int(x), int(y))] = float(ratio[np.ix_(g1[p] == x, g2[q] == y)].max())
            bmo = None
            if l1 % 2 == 1 or l2 % 2 == 1:
                bmo = _group_bmo(P1, P2, p, q, l1 % 2 == 1, rank_one, r1 if rank_one else None, r2 if rank_one else None, G)
            groups[key] = DecayGroup(key, max(table.values()), table, bmo, int(len(p) * len(q)))
    return DecayReport(tuple(block), (sys1.params.W, sys2.params.W), groups)


def _group_bmo(P1, P2, p, q, p_on_first, rank_one, r1, r2, G) -> float:
    """Max over symbols of ``BMO(symbol) / (decay * bound)`` of the other axis."""
    if p_on_first:
        P, other, sel, osel = P1, P2, p, q
    else:
        P, other, sel, osel = P2, P1, q, p
    other_nf = 1.0 / (other.decay[osel] * other.bound[osel]) * np.abs(other.mult[osel])
    if rank_one:
        rp = (r1 if p_on_first else r2)[sel]
        ro = (r2 if p_on_first else r1)[osel]
        base = _p_symbol_bmo(P, rp[None, :], sel)[0]
        return float(base * np.max(np.abs(ro) * other_nf))
    vals = G[np.ix_(p, q)]
    vals = vals.T if p_on_first else vals             # rows: one symbol per other-axis part
    bmo = _p_symbol_bmo(P, vals, sel)
    return float(np.max(bmo * other_nf))


# ----- goodness consequences ----------------------------------------------------

def goodness_bounds(system: HaarSystem) -> dict:
    """Empirical geometry constants of good small cubes.

    ``c_emp`` is the largest ``l(small)^g l(join)^(1-g) / d(small, big)`` over
    separated pairs with an in-window join; ``nearby_gap`` is the largest
    ``scale(join) - scale(small)`` over nearby pairs.
    """
    g = system.params.gamma
    N = system.params.side
    c_emp, gap_max = 0.0, 0
    for o in ORIENTATIONS:
        _, _, small, big = _pairs(system, o)
        cls = _class_codes(system, small, big)
        K = join_ids(system, small, big)
        ok = K >= 0
        sep = ok & (cls == SEPARATED)
        if np.any(sep):
            s, b, k = small[sep], big[sep], K[sep]
            d = np.max(
                torus_gaps(system.cube_start[s], system.cube_side[s][:, None], system.cube_start[b], system.cube_side[b][:, None], N),
                axis=-1,
            )
            lhs = system.cube_side[s].astype(float) ** g * system.cube_side[k].astype(float) ** (1 - g)
            c_emp = max(c_emp, float(np.max(lhs / d)))
        near = ok & (cls == NEARBY)
        if np.any(near):
            sc = system.cube_scale
            gap_max = max(gap_max, int(np.max(sc[K[near]] - sc[small[near]])))
    return {"c_emp": c_emp, "nearby_gap": gap_max}
