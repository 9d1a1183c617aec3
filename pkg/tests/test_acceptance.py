"""The ten acceptance criteria, each at its stated tolerance and time budget."""
import json
import time
from pathlib import Path

import numpy as np
import pytest

from dyadrep.cli import SUBCOMMANDS, main
from dyadrep.decomposition import pair_class_matrix, case_counts
from dyadrep.averaging import goodness_weights
from dyadrep.grids import GridParams
from dyadrep.haar import forward_transform, inverse_transform

from helpers import record, shifted_pair

TINY = Path(__file__).resolve().parents[1] / "demos" / "configs" / "tiny.json"


def run(tmp_path, command, config=None, *extra):
    args = [command, "--out-dir", str(tmp_path)]
    if config is not None:
        cfg = tmp_path / f"{command}-config.json"
        cfg.write_text(json.dumps(config))
        args += ["--config", str(cfg)]
    code = main(args + list(extra))
    return code, json.loads((tmp_path / f"{command}.json").read_text())


def test_1_haar_system():
    t0 = time.perf_counter()
    s1, s2 = shifted_pair(GridParams(L=4, W=4), seed=1)
    rows = np.kron(s1.basis_rows, s2.basis_rows)
    gram = rows @ rows.T * s1.cell_volume * s2.cell_volume
    gram_err = float(np.abs(gram - np.eye(len(gram))).max())
    rng = np.random.default_rng(0)
    trip = 0.0
    for _ in range(100):
        f = rng.standard_normal((16, 16))
        trip = max(trip, float(np.abs(inverse_transform(forward_transform(f, s1, s2)) - f).max()))
    dt = time.perf_counter() - t0
    ok = gram_err <= 1e-12 and trip <= 1e-12 and dt < 5
    assert record(1, ok, f"gram {gram_err:.1e}, round trip {trip:.1e}, {dt:.1f}s")


@pytest.mark.xfail(strict=True, reason="r=1 with badness factor 2 leaves no good cubes below the top scale")
def test_2_averaging_identity_as_stated(tmp_path):
    t0 = time.perf_counter()
    code, rep = run(tmp_path, "verify-averaging", {"grid": {"L": 5, "W": 3, "r": 1}})
    dt = time.perf_counter() - t0
    ok = code == 0 and rep["residual"] <= 1e-9 and dt < 120
    record(2, ok, f"L=5 W=3 r=1 as stated: residual {rep['residual']:.3g}, finite={rep['finite']}, {dt:.1f}s")
    assert ok


def test_2_averaging_identity_with_positive_probabilities(tmp_path):
    t0 = time.perf_counter()
    grid = {"L": 5, "W": 3, "r": 2, "badness_factor": 0.25}
    code, rep = run(tmp_path, "verify-averaging", {"grid": grid})
    dt = time.perf_counter() - t0
    ok = code == 0 and rep["residual"] <= 1e-9 and len(rep["residuals"]) == 20 and dt < 120
    assert record(2, ok, f"companion r=2 c=0.25: residual {rep['residual']:.1e}, {dt:.1f}s")


@pytest.mark.parametrize("grid", [dict(L=6, W=4, r=2, badness_factor=0.25), dict(L=6, W=5, r=3, badness_factor=0.5)])
def test_3_case_partition(grid):
    t0 = time.perf_counter()
    s1, s2 = shifted_pair(GridParams(**grid), seed=5)
    ok = True
    good = []
    for sy in (s1, s2):
        nc = sy.n_cancellative
        le, gt = pair_class_matrix(sy, "le"), pair_class_matrix(sy, "gt")
        mask = goodness_weights(sy)[:nc, :nc] > 0
        ok &= not np.any((le >= 0) & (gt >= 0))
        ok &= np.array_equal((le >= 0) | (gt >= 0), mask)
        good.append(int(mask.sum()))
    counts = case_counts(s1, s2)
    ok &= counts.shape == (4, 4) and int(counts.sum()) == good[0] * good[1]
    dt = time.perf_counter() - t0
    ok &= dt < 30
    assert record(3, bool(ok), f"{grid}: {int(counts.sum())} pairs in 16 buckets, {dt:.1f}s")


def test_4_reassembly(tmp_path):
    t0 = time.perf_counter()
    grid = {"L": 5, "W": 4, "r": 2, "badness_factor": 0.25}
    code, rep = run(tmp_path, "reassemble", {"grid": grid})
    dt = time.perf_counter() - t0
    cases = {a["case"] for a in rep["ablation"]}
    ok = code == 0 and len(rep["residuals"]) == 20 and len(cases) == 16 and rep["max_residual"] <= 1e-10
    ok &= rep["max_ablation_mismatch"] <= 1e-10 and dt < 300
    assert record(
        4, ok, f"residual {rep['max_residual']:.1e}, ablation mismatch {rep['max_ablation_mismatch']:.1e}, {dt:.1f}s"
    )


def test_5_decay(tmp_path):
    t0 = time.perf_counter()
    code, rep = run(tmp_path, "verify-decay")
    dt = time.perf_counter() - t0
    growth = [g["growth"] for g in rep["groups"].values() if g["growth"] is not None]
    ok = code == 0 and rep["L"] == 8 and rep["windows"] == [4, 6] and max(growth) <= 1.5 and dt < 900
    assert record(5, ok, f"{len(rep['groups'])} groups, worst growth W4->W6 {max(growth):.3f}, {dt:.1f}s")


def test_6_shift_norms(tmp_path):
    t0 = time.perf_counter()
    code, rep = run(tmp_path, "shift-norms")
    dt = time.perf_counter() - t0
    ok = code == 0 and len(rep["shifts"]) == 200 and len(rep["subshift_norms"]) == 64
    ok &= rep["max_norm"] <= 1 + 1e-9 and rep["max_subshift_norm"] <= 1 + 1e-9
    ok &= all(s["rejected"] for s in rep["scaled_x2"]) and dt < 300
    assert record(6, ok, f"max norm {rep['max_norm']:.12f}, subshifts {rep['max_subshift_norm']:.12f}, {dt:.1f}s")


def test_7_half_paraproducts(tmp_path):
    t0 = time.perf_counter()
    code, rep = run(tmp_path, "paraproduct-norms")
    dt = time.perf_counter() - t0
    worst = max(h["norm"] for h in rep["half"])
    ok = rep["half_passed"] and worst <= 1 + 1e-6 and dt < 300
    assert record(7, ok, f"max half-paraproduct norm {worst:.3f}, {dt:.1f}s")


def test_8_product_paraproducts(tmp_path):
    t0 = time.perf_counter()
    code, rep = run(tmp_path, "paraproduct-norms")
    dt = time.perf_counter() - t0
    ok = code == 0 and dt < 600
    parts = []
    for kind in ("full", "mixed"):
        c = rep["product"][kind]
        vals = list(c["constants"].values())
        ok &= sorted(c["constants"]) == ["4", "5", "6"]
        ok &= all(abs(v - c["mean"]) <= 0.5 * c["mean"] for v in vals)
        parts.append(f"{kind} " + "/".join(f"{v:.2f}" for v in vals))
    assert record(8, ok, f"{', '.join(parts)}, {dt:.1f}s")


def test_9_hypothesis_audits(tmp_path):
    t0 = time.perf_counter()
    ok = True
    for kernel in ("product_hilbert", "product_hilbert_line"):
        _, rep = run(tmp_path, "check-hypotheses", None, "--oracle", kernel)
        ok &= rep["wbp"]["passed"] and all(r["passed"] for r in rep["diagonal_bmo"].values())
        code, bad = run(tmp_path, "check-hypotheses", None, "--oracle", kernel, "--negative-control")
        ok &= code == 1 and not bad["passed"]
    code, audit = run(tmp_path, "audit-kernel")
    ok &= code == 0 and set(audit["kernels"]) == {"product_hilbert", "product_hilbert_line"}
    code, neg = run(tmp_path, "audit-kernel", None, "--negative-control")
    ok &= code == 1
    dt = time.perf_counter() - t0
    ok &= dt < 300
    assert record(9, bool(ok), f"both kernels pass, negative control fails, {dt:.1f}s")


def test_10_determinism(tmp_path):
    t0 = time.perf_counter()
    ok = True
    for command in SUBCOMMANDS:
        outputs = []
        for i, workers in enumerate(("1", "1", "3")):
            d = tmp_path / command / str(i)
            main([command, "--config", str(TINY), "--out-dir", str(d), "--workers", workers])
            outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        ok &= outputs[0] == outputs[1] == outputs[2]
    dt = time.perf_counter() - t0
    assert record(10, bool(ok), f"{len(SUBCOMMANDS)} subcommands byte-identical across runs and workers, {dt:.1f}s")
