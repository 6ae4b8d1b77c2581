"""Seeded Kelvin-Helmholtz initial data and debug initial states.

The double shear layer lives between two perturbed interfaces

    I_j(x) = J_j + amp * Y_j(x),   Y_j(x) = sum_k a_j^k cos(b_j^k + 2 k pi x)

with J_1 = 0.25, J_2 = 0.75; the inner strip carries (rho, u, v, p) =
(2, -0.5, 0, 2.5), the outside (1, 0.5, 0, 2.5).  The a_j^k are normalized
to sum to one per interface so |I_j - J_j| <= amp.

Coefficients come from a portable SplitMix64 stream so any implementation
seeded identically draws the same numbers; the draw order is documented on
``draw_coefficients`` and the drawn values are dumped into run metadata.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .eos import GasParams, total_energy
from .grid import ConservativeField, Mesh, cell_centers

INNER_STATE = (2.0, -0.5, 0.0, 2.5)  # (rho, u, v, p) between the interfaces
OUTER_STATE = (1.0, 0.5, 0.0, 2.5)

_MASK64 = (1 << 64) - 1
_SM64_GAMMA = 0x9E3779B97F4A7C15
_SM64_MUL1 = 0xBF58476D1CE4E5B9
_SM64_MUL2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 PRNG (Steele/Lea/Flood constants), exact 64-bit arithmetic."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _SM64_GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _SM64_MUL1) & _MASK64
        z = ((z ^ (z >> 27)) * _SM64_MUL2) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        # top 53 bits -> uniform double in [0, 1)
        return (self.next_u64() >> 11) * 2.0 ** -53


@dataclass(frozen=True)
class KhCoefficients:
    """Cosine amplitudes (rows sum to 1) and phases, shape (2, modes)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if a.shape != b.shape or a.ndim != 2 or a.shape[0] != 2:
            raise ValueError("coefficient arrays must both have shape (2, modes)")
        if np.any(a < 0.0) or np.any(np.abs(a.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("amplitudes must be nonnegative and sum to 1 per interface")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class KhSpec:
    modes: int = 10
    amp: float = 0.01
    j1: float = 0.25
    j2: float = 0.75
    seed: int = 42
    coeffs: Optional[KhCoefficients] = None

    def __post_init__(self):
        if self.modes < 1:
            raise ValueError("need at least one mode")
        if not 0.0 <= self.amp < min(self.j1, 0.5 * (self.j2 - self.j1)):
            raise ValueError(f"amplitude {self.amp} lets interfaces touch")

    def coefficients(self) -> KhCoefficients:
        if self.coeffs is not None:
            return self.coeffs
        return draw_coefficients(self.seed, self.modes)


def draw_coefficients(seed: int, modes: int) -> KhCoefficients:
    """Draw (a, b) from one SplitMix64 stream.

    Draw order, fixed for cross-implementation agreement: for each
    interface j = 1 then j = 2, first the ``modes`` raw amplitudes (uniform
    on [0,1], normalized to unit sum afterwards), then the ``modes`` phases
    (uniform on [0, 2 pi)).
    """
    rng = SplitMix64(seed)
    a = np.empty((2, modes))
    b = np.empty((2, modes))
    for j in range(2):
        for k in range(modes):
            a[j, k] = rng.next_float()
        for k in range(modes):
            b[j, k] = 2.0 * np.pi * rng.next_float()
        a[j] /= a[j].sum()
    return KhCoefficients(a, b)


def kh_interface(spec: KhSpec, j: int, x):
    """Interface height I_j(x) for j in {1, 2}; periodic in x with period 1."""
    if j not in (1, 2):
        raise ValueError(f"interface index must be 1 or 2, got {j}")
    coeffs = spec.coefficients()
    base = spec.j1 if j == 1 else spec.j2
    x = np.asarray(x, dtype=np.float64)
    k = np.arange(1, spec.modes + 1)
    y = np.cos(coeffs.b[j - 1] + 2.0 * np.pi * np.multiply.outer(x, k)) @ coeffs.a[j - 1]
    out = base + spec.amp * y
    return float(out) if np.ndim(out) == 0 else out


def kh_initial_field(spec: KhSpec, mesh: Mesh, gas: GasParams) -> ConservativeField:
    """Sample the KH data at cell centers; deterministic for a given seed."""
    xc, yc = cell_centers(mesh)
    i1 = kh_interface(spec, 1, xc[:, 0])[:, None]
    i2 = kh_interface(spec, 2, xc[:, 0])[:, None]
    inner = (yc >= i1) & (yc <= i2)

    def pick(idx):
        return np.where(inner, INNER_STATE[idx], OUTER_STATE[idx])

    rho = pick(0)
    ux = pick(1)
    uy = pick(2)
    p = pick(3)
    data = np.stack([rho, rho * ux, rho * uy, total_energy(rho, ux, uy, p, gas)])
    return ConservativeField(mesh, 0.0, data)


def uniform_field(mesh: Mesh, rho: float, vel_x: float, vel_y: float, pressure: float,
                  gas: GasParams, time: float = 0.0) -> ConservativeField:
    """Constant-state debug field."""
    shape = (mesh.n, mesh.n)
    data = np.stack([
        np.full(shape, rho),
        np.full(shape, rho * vel_x),
        np.full(shape, rho * vel_y),
        np.full(shape, total_energy(rho, vel_x, vel_y, pressure, gas)),
    ])
    return ConservativeField(mesh, time, data)


def entropy_floor_from_field(fld: ConservativeField, gas: GasParams) -> float:
    """s_floor = min over cells of S/rho, evaluated on the given field."""
    from .eos import entropy_from_conservative

    s = entropy_from_conservative(fld.rho, fld.mom_x, fld.mom_y, fld.energy, gas)
    return float(np.min(s / fld.rho))
