"""Separable bi-parameter kernels, cell quadrature, and sampled condition audits.

A kernel here is a finite sum ``K(x, y) = sum_r c_r p_r(x1 - y1) q_r(x2 - y2)``
of products of one-variable profiles (``n = m = 1``).  Separability is what
lets cell integrals of ``K`` factor into two circulant tables per term.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)
PV_RTOL = 1e-9
PV_MAX_DEPTH = 12


class SingularityError(ValueError):
    """Kernel evaluated on the singular set ``x1 = y1`` or ``x2 = y2``."""


class PVDivergenceError(ArithmeticError):
    """Cell quadrature did not settle: the singularity is not principal-value integrable."""


@dataclass(frozen=True)
class Profile:
    """A one-variable factor ``p(t)``.

    ``singular`` marks a singularity at ``t = 0`` (and at integers when
    ``periodic``); ``odd`` marks antisymmetry, which is what makes the
    diagonal cell integral a principal value.  ``cell_integral`` optionally
    gives ``I(t0, h) = int_{-h}^{h} (h - |s|) p(t0 + s) ds`` in closed form.
    """

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    periodic: bool
    singular: bool
    odd: bool
    cell_integral: Callable[[np.ndarray, float], np.ndarray] | None = None

    def __call__(self, t):
        return self.value(np.asarray(t, dtype=float))

    def distance(self, t) -> np.ndarray:
        t = np.abs(np.asarray(t, dtype=float))
        if self.periodic:
            t = t % 1.0
            t = np.minimum(t, 1.0 - t)
        return t


def _cot(t):
    return np.pi * np.cos(np.pi * t) / np.sin(np.pi * t)


def _recip(t):
    return 1.0 / t


def _recip_sq(t):
    return 1.0 / t**2


def _recip_cells(t0, h):
    # exact antiderivative pairing of 1/t over two cells at offset t0 = k h
    k = np.rint(np.asarray(t0) / h)

    def xlogx(v):
        a = np.abs(v)
        return np.where(a == 0, 0.0, v * np.log(np.where(a == 0, 1.0, a)))

    return h * (xlogx(k + 1) - 2 * xlogx(k) + xlogx(k - 1))


def _trig_profile(kind: str, k: int) -> Profile:
    w = 2 * np.pi * k
    fac = (lambda h: (math.sin(np.pi * k * h) / (np.pi * k)) ** 2) if k else (lambda h: h * h)
    if kind == "cos":
        return Profile(
            f"cos{k}", lambda t: np.cos(w * t), True, False, False,
            lambda t0, h: np.cos(w * np.asarray(t0)) * fac(h),
        )
    return Profile(
        f"sin{k}", lambda t: np.sin(w * t), True, False, k != 0,
        lambda t0, h: np.sin(w * np.asarray(t0)) * fac(h),
    )


HILBERT_PERIODIC = Profile("pi_cot", _cot, True, True, True)
HILBERT_LINE = Profile("recip", _recip, False, True, True, _recip_cells)
BROKEN = Profile("recip_sq", _recip_sq, False, True, False)


@dataclass(frozen=True)
class KernelSpec:
    name: str
    terms: tuple  # ((coef, Profile, Profile), ...)
    delta: float = 1.0
    C: float = 1.0
    n: int = 1
    m: int = 1

    def __post_init__(self):
        if (self.n, self.m) != (1, 1):
            raise ValueError("separable kernels are provided for n = m = 1 only")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")

    @property
    def periodic(self) -> bool:
        return all(p.periodic and q.periodic for _, p, q in self.terms)

    def singular_axes(self) -> tuple[bool, bool]:
        return (
            any(p.singular for _, p, _ in self.terms),
            any(q.singular for _, _, q in self.terms),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "delta": self.delta,
            "C": self.C,
            "terms": [[c, p.name, q.name] for c, p, q in self.terms],
        }


def product_hilbert(C: float = 16.0) -> KernelSpec:
    """Periodized product Hilbert kernel ``pi cot(pi t1) * pi cot(pi t2)`` on the torus."""
    return KernelSpec("product_hilbert", ((1.0, HILBERT_PERIODIC, HILBERT_PERIODIC),), 1.0, C)


def product_hilbert_line(C: float = 4.0) -> KernelSpec:
    """Non-periodic ``1/(t1 t2)`` on the line."""
    return KernelSpec("product_hilbert_line", ((1.0, HILBERT_LINE, HILBERT_LINE),), 1.0, C)


def smooth_fixture(C: float = 64.0) -> KernelSpec:
    """Trigonometric fixture with closed-form cell integrals.

    The constant terms make ``T1`` and its partial adjoints nonzero, so the
    paraproduct parts of a decomposition are exercised.
    """
    cos, sin = _trig_profile("cos", 1), _trig_profile("sin", 1)
    cos2, sin2 = _trig_profile("cos", 2), _trig_profile("sin", 2)
    one = _trig_profile("cos", 0)
    terms = (
        (1.0, sin, sin),
        (0.5, cos, sin2),
        (0.75, sin2, cos),
        (0.3, cos2, cos2),
        (0.4, sin, one),
        (0.25, one, sin2),
        (0.2, one, one),
    )
    return KernelSpec("smooth_fixture", terms, 1.0, C)


def broken_kernel(C: float = 16.0) -> KernelSpec:
    """Negative control ``1/(t1^2 t2^2)``: violates size and is not PV integrable."""
    return KernelSpec("broken", ((1.0, BROKEN, BROKEN),), 1.0, C)


def zero_kernel() -> KernelSpec:
    return KernelSpec("zero", (), 1.0, 0.0)


BUILTIN_KERNELS = {
    "product_hilbert": product_hilbert,
    "product_hilbert_line": product_hilbert_line,
    "smooth_fixture": smooth_fixture,
    "broken": broken_kernel,
    "zero": zero_kernel,
}


def get_kernel(name: str) -> KernelSpec:
    try:
        return BUILTIN_KERNELS[name]()
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(BUILTIN_KERNELS)}") from None


def _on_singular_set(p: Profile, t) -> np.ndarray:
    if not p.singular:
        return np.zeros(np.shape(t), dtype=bool)
    return p.distance(t) == 0


def eval(k: KernelSpec, x, y):  # noqa: A001 - mirrors the mathematical name
    """``K(x, y)`` for points ``x = (x1, x2)`` and ``y = (y1, y2)`` (broadcasts)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t1 = x[..., 0] - y[..., 0]
    t2 = x[..., 1] - y[..., 1]
    if not k.terms:
        return np.zeros(np.broadcast(t1, t2).shape)[()]
    s1, s2 = k.singular_axes()
    if (s1 and np.any(t1 == 0)) or (s2 and np.any(t2 == 0)):
        raise SingularityError("kernel evaluated on the diagonal")
    for _, p, q in k.terms:
        if np.any(_on_singular_set(p, t1)) or np.any(_on_singular_set(q, t2)):
            raise SingularityError("kernel evaluated on the diagonal")
    out = 0.0
    for c, p, q in k.terms:
        out = out + c * p(t1) * q(t2)
    return out


# ----- cell quadrature -------------------------------------------------------

def _composite(func, a: float, b: float, depth: int) -> np.ndarray:
    panels = 2**depth
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (b - a) / panels
    nodes = (mid[:, None] + half * GAUSS_NODES[None, :]).ravel()
    w = np.tile(GAUSS_WEIGHTS * half, panels)
    return func(nodes) @ w


def pv_cell_integrals(p: Profile, offsets: np.ndarray, h: float) -> np.ndarray:
    """``I(t0) = int_{-h}^{h} (h - |s|) p(t0 + s) ds`` for each offset.

    At ``t0 = 0`` the two sides are paired as ``p(s) + p(-s)`` so an odd
    profile cancels exactly.  Panels double until successive estimates agree
    to ``PV_RTOL``; raises ``PVDivergenceError`` after ``PV_MAX_DEPTH``.
    """
    offsets = np.asarray(offsets, dtype=float)
    out = np.empty(len(offsets))
    for i, t0 in enumerate(offsets):
        if p.singular and p.distance(t0) == 0:
            f = lambda s: (h - s)[None, :] * (p(s) + p(-s))[None, :]  # noqa: E731
            parts = [(f, 0.0, h)]
        else:
            f_l = lambda s, t0=t0: ((h + s) * p(t0 + s))[None, :]  # noqa: E731
            f_r = lambda s, t0=t0: ((h - s) * p(t0 + s))[None, :]  # noqa: E731
            parts = [(f_l, -h, 0.0), (f_r, 0.0, h)]
        prev = None
        for depth in range(PV_MAX_DEPTH + 1):
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                est = sum(float(_composite(g, a, b, depth)[0]) for g, a, b in parts)
            if not np.isfinite(est):
                raise PVDivergenceError(f"{p.name}: non-finite cell integral at offset {t0}")
            if prev is not None and abs(est - prev) <= PV_RTOL * abs(est):
                break
            if prev is not None and est == prev == 0.0:
                break
            prev = est
        else:
            raise PVDivergenceError(f"{p.name}: cell integral at offset {t0} did not settle")
        out[i] = est
    return out


def profile_table(p: Profile, L: int, closed_form: bool = True) -> np.ndarray:
    """Table ``T[i, j] = int_{cell i} int_{cell j} p(x - y) dy dx``.

    Periodic profiles give a circulant table on the torus; other profiles
    are restricted to ``[0, 1)`` without wrapping (a Toeplitz table).
    """
    N = 2**L
    h = 1.0 / N
    diff = np.arange(N)[:, None] - np.arange(N)[None, :]
    if p.periodic:
        ks, idx = np.arange(N), diff % N
    else:
        ks, idx = np.arange(-(N - 1), N), diff + N - 1
    offsets = ks * h
    if closed_form and p.cell_integral is not None:
        col = np.asarray(p.cell_integral(offsets, h), dtype=float)
    else:
        col = pv_cell_integrals(p, offsets, h)
    return col[idx]


def kernel_tables(k: KernelSpec, L: int, closed_form: bool = True) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-term factor tables ``(A_r, B_r)`` with ``A_r`` carrying the coefficient."""
    cache: dict = {}

    def tab(p):
        if p.name not in cache:
            cache[p.name] = profile_table(p, L, closed_form)
        return cache[p.name]

    return [(c * tab(p), tab(q)) for c, p, q in k.terms]


# ----- audits ----------------------------------------------------------------

CONDITIONS = (
    "size",
    "holder_y1_y2",
    "holder_x1_x2",
    "holder_y1_x2",
    "holder_x1_y2",
    "mixed_x1",
    "mixed_y1",
    "mixed_x2",
    "mixed_y2",
)


@dataclass(frozen=True)
class AuditConfig:
    samples_per_level: int = 2000
    levels: int = 10
    seed: int = 0
    chunks: int = 8


@dataclass
class ConditionResult:
    max_ratio: float
    argmax_sample: list
    samples: int
    per_level: list

    def to_dict(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "argmax_sample": self.argmax_sample,
            "samples": self.samples,
            "per_level": self.per_level,
        }


@dataclass
class AuditReport:
    kernel: str
    constant: float
    conditions: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.max_ratio <= self.constant for c in self.conditions.values())

    def condition_passed(self, name: str) -> bool:
        return self.conditions[name].max_ratio <= self.constant

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel,
            "constant": self.constant,
            "passed": self.passed,
            "conditions": {
                k: dict(v.to_dict(), passed=self.condition_passed(k)) for k, v in self.conditions.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _kernel_distance(k: KernelSpec):
    periodic = k.periodic if k.terms else True

    def dist(t):
        t = np.abs(t)
        if periodic:
            t = t % 1.0
            t = np.minimum(t, 1.0 - t)
        return t

    return dist


def _sample_chunk(k: KernelSpec, level: int, count: int, seed_seq: np.random.SeedSequence):
    rng = np.random.default_rng(seed_seq)
    lo, hi = 2.0 ** -(level + 1), 2.0**-level
    d = np.exp(rng.uniform(np.log(lo), np.log(hi), (count, 2))) * rng.choice((-1.0, 1.0), (count, 2))
    y = rng.uniform(0.0, 1.0, (count, 2))
    x = y + d
    dist1 = _kernel_distance(k)(d[:, 0])
    dist2 = _kernel_distance(k)(d[:, 1])
    e = rng.uniform(-0.5, 0.5, (count, 2)) * np.abs(d)  # |prime shift| <= |x - y| / 2
    x1p = x.copy()
    x1p[:, 0] += e[:, 0]
    x2p = x.copy()
    x2p[:, 1] += e[:, 1]
    y1p = y.copy()
    y1p[:, 0] += e[:, 0]
    y2p = y.copy()
    y2p[:, 1] += e[:, 1]
    xp = x + e
    yp = y + e
    K = lambda a, b: eval(k, a, b)  # noqa: E731
    dl = k.delta
    s1 = 1.0 / dist1
    s2 = 1.0 / dist2
    h1 = (np.abs(e[:, 0]) / dist1) ** dl * s1
    h2 = (np.abs(e[:, 1]) / dist2) ** dl * s2
    with np.errstate(divide="ignore", invalid="ignore"):
        kxy = K(x, y)
        lhs = {
            "size": np.abs(kxy) / (s1 * s2),
            "holder_y1_y2": np.abs(kxy - K(x, y2p) - K(x, y1p) + K(x, yp)) / (h1 * h2),
            "holder_x1_x2": np.abs(kxy - K(x2p, y) - K(x1p, y) + K(xp, y)) / (h1 * h2),
            "holder_y1_x2": np.abs(kxy - K(x2p, y) - K(x, y1p) + K(x2p, y1p)) / (h1 * h2),
            "holder_x1_y2": np.abs(kxy - K(x, y2p) - K(x1p, y) + K(x1p, y2p)) / (h1 * h2),
            "mixed_x1": np.abs(kxy - K(x1p, y)) / (h1 * s2),
            "mixed_y1": np.abs(kxy - K(x, y1p)) / (h1 * s2),
            "mixed_x2": np.abs(kxy - K(x2p, y)) / (s1 * h2),
            "mixed_y2": np.abs(kxy - K(x, y2p)) / (s1 * h2),
        }
    out = {}
    for name, r in lhs.items():
        r = np.nan_to_num(np.asarray(r, dtype=float) * np.ones(count), nan=np.inf)
        i = int(np.argmax(r))
        out[name] = (float(r[i]), [x[i].tolist(), y[i].tolist(), e[i].tolist()])
    return out


def audit_conditions(k: KernelSpec, config: AuditConfig = AuditConfig(), workers: int = 1) -> AuditReport:
    """Largest sampled ratio ``LHS / bound`` for the size, Hoelder and mixed conditions.

    Level ``j`` samples ``|x - y|`` log-uniformly in ``[2^-(j+1), 2^-j]``
    per axis; primed points move by at most half the displacement.  Chunks
    get fixed child seeds, so results do not depend on ``workers``.
    """
    root = np.random.SeedSequence(config.seed)
    jobs = []
    per_chunk = -(-config.samples_per_level // config.chunks)
    level_seeds = root.spawn(config.levels)
    for level in range(1, config.levels + 1):
        for ss in level_seeds[level - 1].spawn(config.chunks):
            jobs.append((level, ss))
    run = lambda job: _sample_chunk(k, job[0], per_chunk, job[1])  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    report = AuditReport(k.name, k.C)
    for name in CONDITIONS:
        best, arg = -1.0, None
        per_level = [0.0] * config.levels
        for (level, _), res in zip(jobs, results):
            val, sample = res[name]
            per_level[level - 1] = max(per_level[level - 1], val)
            if val > best:
                best, arg = val, sample
        report.conditions[name] = ConditionResult(best, arg, per_chunk * len(jobs), per_level)
    return report


# ----- partial kernels -------------------------------------------------------

@dataclass
class PartialKernel:
    """``K_{f2,g2}(x1, y1) = sum_r c_r p_r(x1 - y1) <Q_r f2, g2>``."""

    weights: tuple  # ((beta_r, Profile), ...)
    constant: float

    def __call__(self, x1, y1):
        t = np.asarray(x1, dtype=float) - np.asarray(y1, dtype=float)
        for _, p in self.weights:
            if np.any(_on_singular_set(p, t)):
                raise SingularityError("partial kernel evaluated on the diagonal")
        out = 0.0
        for b, p in self.weights:
            out = out + b * p(t)
        return out


def partial_kernel(
    k: KernelSpec, f2: np.ndarray, g2: np.ndarray, L: int, samples: int = 4096, seed: int = 0
) -> PartialKernel:
    """Second-axis quadrature of ``K`` against ``f2`` and ``g2``; estimates ``C(f2, g2)``.

    Raises ``PVDivergenceError`` when a second-axis profile has a singularity
    that is not principal-value integrable.
    """
    vol = 2.0**-L
    weights = []
    cache: dict = {}
    for c, p, q in k.terms:
        if q.name not in cache:
            cache[q.name] = profile_table(q, L)
        beta = c * np.sum(cache[q.name] * np.outer(np.conj(g2), f2))
        weights.append((complex(beta) if np.iscomplexobj(beta) else float(beta), p))
    pk = PartialKernel(tuple(weights), 0.0)
    rng = np.random.default_rng(seed)
    t = np.exp(rng.uniform(np.log(vol), np.log(0.5), samples)) * rng.choice((-1.0, 1.0), samples)
    dist = _kernel_distance(k)(t)
    vals = np.abs(pk(t, 0.0)) * dist if weights else np.zeros(1)
    pk.constant = float(np.max(vals))
    return pk
