import numpy as np

from dyadrep.grids import DyadicGrid, GridParams, GridShift
from dyadrep.haar import HaarSystem


def make_system(params: GridParams, bits=None) -> HaarSystem:
    shift = GridShift.zero(params) if bits is None else GridShift(tuple(tuple(b) for b in bits))
    return HaarSystem(DyadicGrid(params, shift))


def shifted_pair(params: GridParams, seed: int = 0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(2):
        b = rng.integers(0, 2, size=(params.W, params.n))
        out.append(make_system(params, b.tolist()))
    return tuple(out)


ACCEPTANCE: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> bool:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok
