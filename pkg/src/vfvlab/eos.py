"""Polytropic-gas thermodynamics in conservative variables (rho, m, E).

All functions take scalars or numpy arrays (they broadcast) and work in
float64.  The total functions ``kinetic_energy`` and
``entropy_from_conservative`` extend to the closure of the physical domain
with IEEE +/-inf sentinels; the sentinels never enter arithmetic, only
comparisons.  ``pressure_from_conservative`` raises instead, because a
non-positive internal energy inside the solver is always a blow-up.

The entropy normalization is s = log(p / rho^gamma), so that

    S(rho, m, E) = rho * log((gamma-1) * (E - |m|^2/(2 rho)) / rho^gamma)
    p(rho, S)    = rho^gamma * exp(S / rho)

invert each other exactly.  S is concave u.s.c. in (rho, m, E); the total
energy E(rho, m, S) is convex l.s.c. in (rho, m, S).  Both facts are load
bearing for the defect diagnostics and are covered by property tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError

# Relative internal-energy floor below which a state is treated as invalid.
# States this close to vacuum are rejected, never clamped.
INTERNAL_ENERGY_REL_FLOOR = 1e-13


@dataclass(frozen=True)
class GasParams:
    """Ratio of specific heats and the entropy lower-bound constant."""

    gamma: float = 1.4
    s_floor: float = 0.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if not np.isfinite(self.s_floor):
            raise ValueError("s_floor must be finite")

    @property
    def c_v(self) -> float:
        return 1.0 / (self.gamma - 1.0)


@dataclass(frozen=True)
class ConservativeCell:
    """Single-cell conservative state (rho, m, E)."""

    rho: float
    mom: tuple
    energy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.rho, self.mom[0], self.mom[1], self.energy])


@dataclass(frozen=True)
class PrimitiveCell:
    """Single-cell primitive state (rho, u, p)."""

    rho: float
    vel: tuple
    pressure: float


def _maybe_scalar(a):
    return float(a) if np.ndim(a) == 0 else a


def kinetic_energy(rho, mom_x, mom_y):
    """Kinetic energy density |m|^2 / (2 rho), extended l.s.c. to rho = 0."""
    rho = np.asarray(rho, dtype=np.float64)
    msq = np.asarray(mom_x, dtype=np.float64) ** 2 + np.asarray(mom_y, dtype=np.float64) ** 2
    pos = rho > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ke = np.where(pos, 0.5 * msq / np.where(pos, rho, 1.0),
                      np.where(msq == 0.0, 0.0, np.inf))
    return _maybe_scalar(ke)


def internal_energy(rho, mom_x, mom_y, energy):
    """Internal energy density rho*e = E - |m|^2/(2 rho)."""
    return _maybe_scalar(np.asarray(energy, dtype=np.float64) - kinetic_energy(rho, mom_x, mom_y))


def is_valid_state(rho, mom_x, mom_y, energy):
    """Positivity predicate: rho > 0 and rho*e above the relative floor."""
    rho = np.asarray(rho, dtype=np.float64)
    energy = np.asarray(energy, dtype=np.float64)
    rho_e = internal_energy(rho, mom_x, mom_y, energy)
    ok = (rho > 0.0) & (rho_e > INTERNAL_ENERGY_REL_FLOOR * np.abs(energy))
    return bool(ok) if np.ndim(ok) == 0 else ok


def pressure_from_conservative(rho, mom_x, mom_y, energy, gas: GasParams):
    """Pressure p = (gamma - 1) * (E - |m|^2/(2 rho)).

    Raises
    ------
    InvalidStateError
        If any state has rho <= 0 or non-positive internal energy.
    """
    ok = is_valid_state(rho, mom_x, mom_y, energy)
    if not np.all(ok):
        bad = np.argmax(~np.atleast_1d(ok))
        raise InvalidStateError("vacuum/invalid state", cell=_flat_index_context(ok, bad))
    rho_e = internal_energy(rho, mom_x, mom_y, energy)
    return _maybe_scalar((gas.gamma - 1.0) * np.asarray(rho_e))


def _flat_index_context(ok, flat):
    if np.ndim(ok) == 0:
        return None
    return np.unravel_index(flat, np.shape(ok))


def entropy_from_conservative(rho, mom_x, mom_y, energy, gas: GasParams):
    """Total entropy density S = rho * log((gamma-1) rho e / rho^gamma).

    Total function: returns -inf for states with non-positive internal
    energy, 0 for the vacuum state (rho = 0, m = 0, E >= 0), per the
    u.s.c. extension.
    """
    rho = np.asarray(rho, dtype=np.float64)
    energy = np.asarray(energy, dtype=np.float64)
    rho_e = np.asarray(internal_energy(rho, mom_x, mom_y, energy))
    interior = (rho > 0.0) & (rho_e > 0.0)
    safe_rho = np.where(interior, rho, 1.0)
    safe_e = np.where(interior, rho_e, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = safe_rho * np.log((gas.gamma - 1.0) * safe_e / safe_rho ** gas.gamma)
    msq = np.asarray(mom_x, dtype=np.float64) ** 2 + np.asarray(mom_y, dtype=np.float64) ** 2
    vacuum = (rho == 0.0) & (msq == 0.0) & (energy >= 0.0)
    out = np.where(interior, s, np.where(vacuum, 0.0, -np.inf))
    return _maybe_scalar(out)


def pressure_from_entropy(rho, entropy, gas: GasParams):
    """Pressure p(rho, S) = rho^gamma * exp(S / rho); inverse of the entropy map.

    The rho = 0 branches return the sentinel values 0 (S <= 0) and +inf
    (S > 0).
    """
    rho = np.asarray(rho, dtype=np.float64)
    entropy = np.asarray(entropy, dtype=np.float64)
    if np.any(rho < 0.0):
        raise InvalidStateError("negative density")
    pos = rho > 0.0
    safe_rho = np.where(pos, rho, 1.0)
    with np.errstate(over="ignore"):
        p = np.where(pos, safe_rho ** gas.gamma * np.exp(entropy / safe_rho),
                     np.where(entropy <= 0.0, 0.0, np.inf))
    return _maybe_scalar(p)


def total_energy(rho, vel_x, vel_y, pressure, gas: GasParams):
    """E = p/(gamma-1) + rho |u|^2 / 2 from primitive variables."""
    rho = np.asarray(rho, dtype=np.float64)
    ke = 0.5 * rho * (np.asarray(vel_x) ** 2 + np.asarray(vel_y) ** 2)
    return _maybe_scalar(np.asarray(pressure) / (gas.gamma - 1.0) + ke)


def sound_speed(rho, pressure, gas: GasParams):
    """c = sqrt(gamma p / rho)."""
    return _maybe_scalar(np.sqrt(gas.gamma * np.asarray(pressure) / np.asarray(rho)))


def entropy_floor_margin(rho, mom_x, mom_y, energy, gas: GasParams):
    """S - s_floor * rho; the minimum principle requires this to stay >= 0."""
    s = entropy_from_conservative(rho, mom_x, mom_y, energy, gas)
    return _maybe_scalar(np.asarray(s) - gas.s_floor * np.asarray(rho, dtype=np.float64))


def conservative_from_primitive(prim: PrimitiveCell, gas: GasParams) -> ConservativeCell:
    if not (prim.rho > 0.0 and prim.pressure > 0.0):
        raise InvalidStateError("primitive state needs rho > 0 and p > 0")
    ux, uy = prim.vel
    en = total_energy(prim.rho, ux, uy, prim.pressure, gas)
    return ConservativeCell(prim.rho, (prim.rho * ux, prim.rho * uy), en)


def primitive_from_conservative(cell: ConservativeCell, gas: GasParams) -> PrimitiveCell:
    p = pressure_from_conservative(cell.rho, cell.mom[0], cell.mom[1], cell.energy, gas)
    return PrimitiveCell(cell.rho, (cell.mom[0] / cell.rho, cell.mom[1] / cell.rho), p)
