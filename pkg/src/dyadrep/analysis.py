"""Square function, product Hardy norm, and dyadic BMO proxies over the window."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .haar import HaarCoefficients, HaarSystem, forward_transform


@dataclass(frozen=True)
class BmoProxyNorm:
    value: float
    kind: str  # "one_parameter" | "product_rectangle"
    witness: tuple

    def to_json(self) -> str:
        return json.dumps({"value": self.value, "kind": self.kind, "witness": list(self.witness)}, sort_keys=True)


def _cancellative_indicators(system: HaarSystem) -> np.ndarray:
    """``chi_K / |K|`` for the cube of every cancellative index."""
    cubes = system.index_cube[: system.n_cancellative]
    return system.cube_rows[cubes] / system.cube_measure[cubes, None]


def _product_coefficients(b, sys1: HaarSystem, sys2: HaarSystem) -> np.ndarray:
    if isinstance(b, HaarCoefficients):
        return b.cancellative_part()
    b = np.asarray(b)
    if b.shape == (sys1.n_cancellative, sys2.n_cancellative):
        return b
    return forward_transform(b.reshape(sys1.mesh_shape + sys2.mesh_shape), sys1, sys2).cancellative_part()


def square_function(f, sys1: HaarSystem, sys2: HaarSystem) -> np.ndarray:
    """``S f`` on the product mesh."""
    c = _product_coefficients(f, sys1, sys2)
    s2 = _cancellative_indicators(sys1).T @ np.abs(c) ** 2 @ _cancellative_indicators(sys2)
    return np.sqrt(s2).reshape(sys1.mesh_shape + sys2.mesh_shape)


def h1_norm(f, sys1: HaarSystem, sys2: HaarSystem) -> float:
    return float(np.sum(square_function(f, sys1, sys2)) * sys1.cell_volume * sys2.cell_volume)


def product_bmo_proxy(b, sys1: HaarSystem, sys2: HaarSystem) -> BmoProxyNorm:
    """Rectangle proxy ``sup_{K0 x V0} (|K0 x V0|^-1 sum_{K in K0, V in V0} |b_KV|^2)^(1/2)``.

    A lower bound for the open-set product BMO norm.
    """
    c = np.abs(_product_coefficients(b, sys1, sys2)) ** 2
    d1 = sys1.containment[:, sys1.index_cube[: sys1.n_cancellative]].astype(float)
    d2 = sys2.containment[:, sys2.index_cube[: sys2.n_cancellative]].astype(float)
    mass = d1 @ c @ d2.T / np.outer(sys1.cube_measure, sys2.cube_measure)
    k, v = np.unravel_index(int(np.argmax(mass)), mass.shape)
    return BmoProxyNorm(float(np.sqrt(mass[k, v])), "product_rectangle", (int(k), int(v)))


def one_param_bmo(b, system: HaarSystem) -> BmoProxyNorm:
    """``sup_{I0} (|I0|^-1 sum_{J in I0} |<b, h_J>|^2)^(1/2)`` over window cubes.

    ``b`` is a mesh function or its cancellative coefficient vector.
    """
    b = np.asarray(b)
    if b.shape == (system.n_cancellative,):
        c = b
    else:
        c = forward_transform(b.reshape(system.mesh_shape), system).values[: system.n_cancellative]
    return one_param_bmo_rows(np.atleast_2d(c), system)[0]


def one_param_bmo_rows(coeffs: np.ndarray, system: HaarSystem) -> list[BmoProxyNorm]:
    """Vectorized :func:`one_param_bmo` over rows of cancellative coefficients."""
    d = system.containment[:, system.index_cube[: system.n_cancellative]].astype(float)
    mass = (np.abs(coeffs) ** 2) @ d.T / system.cube_measure[None, :]
    arg = np.argmax(mass, axis=1)
    vals = np.sqrt(mass[np.arange(len(mass)), arg])
    return [BmoProxyNorm(float(v), "one_parameter", (int(a),)) for v, a in zip(vals, arg)]
