"""Exact and Monte Carlo checks of the good-restricted averaging identity."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .grids import DyadicGrid, GridParams, enumerate_shifts, pi_good_table, sample_shift
from .haar import HaarSystem
from .operator import OperatorOracle


def goodness_weights(system: HaarSystem, pi: dict | None = None) -> np.ndarray:
    """``w[k, l] = chi_good(smaller(l, k)) / pi(scale of smaller)`` over basis indices.

    ``l`` is the input index; ties go to it.  With ``pi=None`` only the
    indicator is returned.
    """
    cubes = system.index_cube[system.basis]
    sc = system.cube_scale[cubes]
    good = system.cube_good[cubes]
    in_small = sc[None, :] <= sc[:, None]
    w = np.where(in_small, good[None, :], good[:, None]).astype(float)
    if pi is not None:
        small_scale = np.where(in_small, sc[None, :], sc[:, None])
        p = np.array([float(pi[s]) for s in range(system.params.W + 1)])
        ps = p[small_scale]
        w = np.divide(w, ps, out=np.zeros_like(w), where=ps > 0)
    return w


def _coefficients(f, sys1: HaarSystem, sys2: HaarSystem) -> np.ndarray:
    r1, r2 = sys1.basis_rows, sys2.basis_rows
    f = np.asarray(f).reshape(r1.shape[1], r2.shape[1])
    return r1 @ f @ r2.T * (sys1.cell_volume * sys2.cell_volume)


def good_restricted_sum(
    o: OperatorOracle, sys1: HaarSystem, sys2: HaarSystem, f, g, pi1: dict | None = None, pi2: dict | None = None
) -> complex | float:
    """Goodness-weighted Haar expansion of ``<T f, g>`` for one grid pair.

    Runs over the window basis (cancellative Haars plus top-scale averages)
    on both axes; passing ``pi1``/``pi2`` divides each term by the scale
    resolved good probability of its smaller cubes.
    """
    w1, w2 = goodness_weights(sys1, pi1), goodness_weights(sys2, pi2)
    fc = _coefficients(f, sys1, sys2)
    gc = np.conj(_coefficients(g, sys1, sys2))
    r1, r2 = sys1.basis_rows, sys2.basis_rows
    if o.terms is not None:
        total = 0.0
        for a, b in o.terms:
            m1 = (np.conj(r1) @ a @ r1.T) * w1           # (k1, l1)
            m2 = (np.conj(r2) @ b @ r2.T) * w2
            total = total + np.sum((m1 @ fc @ m2.T) * gc)
        return total
    M = o.haar_matrix(r1, r2)
    return np.einsum("abcd,ac,bd,cd,ab->", M, w1, w2, fc, gc)


def _pi_factors(params: GridParams, uniform: bool, cap: int) -> dict:
    table = pi_good_table(params, cap)
    if uniform:
        return {s: table[1] for s in table}
    return table


def _fmt_pi(table: dict) -> dict:
    return {str(s): str(v) for s, v in sorted(table.items())}


@dataclass
class AveragingReport:
    residual: float
    relative: bool
    estimate: complex | float
    exact: complex | float
    pi_good_n: dict
    pi_good_m: dict
    grid_pairs: int
    uniform_pi: bool
    finite: bool

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "relative": self.relative,
            "estimate": _num(self.estimate),
            "exact": _num(self.exact),
            "pi_good_n": _fmt_pi(self.pi_good_n),
            "pi_good_m": _fmt_pi(self.pi_good_m),
            "grid_pairs": self.grid_pairs,
            "uniform_pi": self.uniform_pi,
            "finite": self.finite,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _num(z):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _systems(params: GridParams, shifts) -> list[HaarSystem]:
    return [HaarSystem(DyadicGrid(params, w)) for w in shifts]


def _pairwise_sum(vals: list):
    while len(vals) > 1:
        vals = [vals[i] + vals[i + 1] if i + 1 < len(vals) else vals[i] for i in range(0, len(vals), 2)]
    return vals[0] if vals else 0.0


def verify_averaging_exact(
    o: OperatorOracle,
    params1: GridParams,
    f,
    g,
    params2: GridParams | None = None,
    uniform_pi: bool = False,
    cap: int = 2**20,
    workers: int = 1,
) -> AveragingReport:
    """Average the corrected good-restricted sum over every shift pair and compare with ``<T f, g>``.

    A scale whose good probability is 0 contributes nothing; the report
    then carries ``finite = False`` and the residual shows what is lost.
    """
    params2 = params2 or params1
    if 2 ** (params1.n * params1.W) * 2 ** (params2.n * params2.W) > cap:
        raise ValueError("shift-pair enumeration exceeds the cap")
    pi1, pi2 = _pi_factors(params1, uniform_pi, cap), _pi_factors(params2, uniform_pi, cap)
    finite = all(v > 0 for v in pi1.values()) and all(v > 0 for v in pi2.values())
    A = _systems(params1, enumerate_shifts(params1, cap))
    B = _systems(params2, enumerate_shifts(params2, cap))
    jobs = [(a, b) for a in A for b in B]

    def term(pair):
        return good_restricted_sum(o, pair[0], pair[1], f, g, pi1, pi2)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
        vals = list(ex.map(term, jobs))
    est = _pairwise_sum(vals) / len(jobs)
    exact = o.pair(f, g)
    err = abs(est - exact)
    rel = abs(exact) > 0
    return AveragingReport(
        float(err / abs(exact)) if rel else float(err), rel, est, exact, pi1, pi2, len(jobs), uniform_pi, finite
    )


@dataclass
class MonteCarloReport:
    estimate: complex | float
    stderr: float
    z: float
    exact: complex | float
    samples: int

    def to_dict(self) -> dict:
        return {
            "estimate": _num(self.estimate),
            "stderr": self.stderr,
            "z": self.z,
            "exact": _num(self.exact),
            "samples": self.samples,
        }


def verify_averaging_mc(
    o: OperatorOracle,
    params: GridParams,
    f,
    g,
    samples: int,
    seed: int = 0,
    params2: GridParams | None = None,
    workers: int = 1,
    cap: int = 2**20,
) -> MonteCarloReport:
    """Sample shift pairs independently; report mean, standard error and z-score.

    Sample ``i`` draws its two shifts from child ``i`` of ``SeedSequence(seed)``,
    so results do not depend on ``workers``.
    """
    params2 = params2 or params
    pi1, pi2 = pi_good_table(params, cap), pi_good_table(params2, cap)
    children = np.random.SeedSequence(seed).spawn(samples)

    def term(ss):
        a, b = ss.spawn(2)
        s1 = HaarSystem(DyadicGrid(params, sample_shift(np.random.default_rng(a), params)))
        s2 = HaarSystem(DyadicGrid(params2, sample_shift(np.random.default_rng(b), params2)))
        return good_restricted_sum(o, s1, s2, f, g, pi1, pi2)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
        vals = np.array(list(ex.map(term, children)))
    est = vals.mean()
    se = float(np.sqrt(np.sum(np.abs(vals - est) ** 2) / (samples * max(samples - 1, 1))))
    exact = o.pair(f, g)
    z = float(abs(est - exact) / se) if se > 0 else (0.0 if abs(est - exact) == 0 else math.inf)
    return MonteCarloReport(est, se, z, exact, samples)


def independence_covariance(params: GridParams, scale: int, cap: int = 2**20) -> Fraction:
    """Exact covariance of a cube's start cell and its goodness over all shifts.

    The cube at position zero of ``scale`` is followed across every shift.
    """
    from .grids import is_good

    starts, goods = [], []
    for w in enumerate_shifts(params, cap):
        c = DyadicGrid(params, w).cube(scale, (0,) * params.n)
        starts.append(int(c.start[0]))
        goods.append(int(is_good(c, params)))
    n = len(starts)
    ms, mg = Fraction(sum(starts), n), Fraction(sum(goods), n)
    return sum((Fraction(s) - ms) * (Fraction(gd) - mg) for s, gd in zip(starts, goods)) / n
