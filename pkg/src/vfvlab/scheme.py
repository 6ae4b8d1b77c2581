"""Viscous finite-volume spatial operator with SSP-RK3 time stepping.

``vfv_rhs`` dispatches to the compiled kernels; ``upwind_flux`` is the
single-face reference implementation used by tests and by the brute-force
assembly oracle.  The flux-form construction makes the scheme exactly
conservative under periodic closure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .eos import GasParams, ConservativeCell, INTERNAL_ENERGY_REL_FLOOR, sound_speed
from .errors import InvalidStateError, PositivityError
from .grid import PERIODIC, ConservativeField

AVERAGED = "averaged"
AS_PRINTED = "as_printed"


@dataclass(frozen=True)
class SchemeParams:
    """Numerical diffusion exponents, Courant number and flux variant."""

    alpha: float = 1.0
    eps_visc: float = 2.0
    cfl: float = 0.4
    pressure_work_form: str = AVERAGED

    def __post_init__(self):
        if not (self.alpha > 0.0 and self.eps_visc > 0.0):
            raise ValueError("viscosity exponents must be positive")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")
        if self.pressure_work_form not in (AVERAGED, AS_PRINTED):
            raise ValueError(f"unknown pressure_work_form {self.pressure_work_form!r}")


@dataclass(frozen=True)
class FaceFlux:
    """Per-unit-length flux of (rho, m, E) through one face."""

    rho: float
    mom: tuple
    energy: float


def _check_cell(cell: ConservativeCell):
    rho_e = cell.energy - 0.5 * (cell.mom[0] ** 2 + cell.mom[1] ** 2) / cell.rho
    if not (cell.rho > 0.0 and rho_e > INTERNAL_ENERGY_REL_FLOOR * abs(cell.energy)):
        raise InvalidStateError("vacuum/invalid state")


def upwind_flux(left: ConservativeCell, right: ConservativeCell, normal,
                h: float, sp: SchemeParams, gas: GasParams) -> FaceFlux:
    """Viscous upwind flux through a single face with unit normal ``normal``.

    Transport upwinds on the face-average velocity, every conserved
    component carries the h^eps jump diffusion, momentum adds the average
    pressure and the h^(alpha-1) velocity-jump viscosity, and the energy
    pressure work follows ``sp.pressure_work_form``.  Reduces exactly to
    the Euler flux when both traces agree.
    """
    _check_cell(left)
    _check_cell(right)
    nx, ny = float(normal[0]), float(normal[1])
    uL = (left.mom[0] / left.rho, left.mom[1] / left.rho)
    uR = (right.mom[0] / right.rho, right.mom[1] / right.rho)
    g1 = gas.gamma - 1.0
    pL = g1 * (left.energy - 0.5 * (left.mom[0] ** 2 + left.mom[1] ** 2) / left.rho)
    pR = g1 * (right.energy - 0.5 * (right.mom[0] ** 2 + right.mom[1] ** 2) / right.rho)
    aux = 0.5 * (uL[0] + uR[0])
    auy = 0.5 * (uL[1] + uR[1])
    un = aux * nx + auy * ny
    absun = abs(un)
    heps = h ** sp.eps_visc
    hal = h ** (sp.alpha - 1.0)
    pav = 0.5 * (pL + pR)

    def transport(qL, qR):
        return 0.5 * (qL + qR) * un - 0.5 * absun * (qR - qL) - heps * (qR - qL)

    f_rho = transport(left.rho, right.rho)
    f_mx = transport(left.mom[0], right.mom[0]) + pav * nx - hal * (uR[0] - uL[0])
    f_my = transport(left.mom[1], right.mom[1]) + pav * ny - hal * (uR[1] - uL[1])
    if sp.pressure_work_form == AS_PRINTED:
        pw = 0.5 * pav * un + 0.25 * ((pL * uL[0] + pR * uR[0]) * nx
                                      + (pL * uL[1] + pR * uR[1]) * ny)
    else:
        pw = pav * un
    f_en = (transport(left.energy, right.energy) + pw
            - hal * ((uR[0] - uL[0]) * aux + (uR[1] - uL[1]) * auy))
    return FaceFlux(f_rho, (f_mx, f_my), f_en)


def find_invalid_cell(data: np.ndarray):
    """Index of the worst invalid cell, or None if the whole field is valid."""
    rho = data[0]
    rho_e = data[3] - 0.5 * (data[1] ** 2 + data[2] ** 2) / np.where(rho > 0, rho, 1.0)
    margin = np.where(rho > 0.0, rho_e - INTERNAL_ENERGY_REL_FLOOR * np.abs(data[3]), -np.inf)
    if np.all(margin > 0.0):
        return None
    return np.unravel_index(int(np.argmin(margin)), rho.shape)


def vfv_rhs(fld: ConservativeField, sp: SchemeParams, gas: GasParams) -> np.ndarray:
    """Tendency dU/dt: minus the face-flux divergence, shape (4, n, n)."""
    bad = find_invalid_cell(fld.data)
    if bad is not None:
        raise InvalidStateError("vacuum/invalid state", cell=bad)
    return kernels.rhs(fld.data, fld.mesh.h, sp.alpha, sp.eps_visc, gas.gamma,
                       sp.pressure_work_form == AS_PRINTED, fld.mesh.bc == PERIODIC)


def cfl_dt(fld: ConservativeField, sp: SchemeParams, gas: GasParams) -> float:
    """dt = cfl * h / max(|u| + c)."""
    bad = find_invalid_cell(fld.data)
    if bad is not None:
        raise InvalidStateError("vacuum/invalid state", cell=bad)
    return sp.cfl * fld.mesh.h / kernels.max_signal_speed(fld.data, gas.gamma)


def ssp_rk3_step(fld: ConservativeField, dt: float, sp: SchemeParams, gas: GasParams,
                 rhs=None) -> ConservativeField:
    """One three-stage SSP-RK3 step; aborts on positivity failure.

    The stages are evaluated in increment form

        u1 = u0 + dt L(u0)
        u2 = u0 + (1/4) ((u1 - u0) + dt L(u1))
        u3 = u0 + (2/3) ((u2 - u0) + dt L(u2))

    which equals the usual convex-combination writing exactly but keeps
    steady states (zero tendency) bitwise fixed points.  ``rhs`` may
    override the spatial operator (field -> tendency array); the default
    is ``vfv_rhs``.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if rhs is None:
        rhs = lambda f: vfv_rhs(f, sp, gas)

    def stage(data, stage_no):
        bad = find_invalid_cell(data)
        if bad is not None:
            raise PositivityError("positivity failure", cell=bad, stage=stage_no)
        return fld.with_data(data)

    u0 = fld.data
    u1 = stage(u0 + dt * rhs(fld), 1)
    u2 = stage(u0 + 0.25 * ((u1.data - u0) + dt * rhs(u1)), 2)
    u3 = stage(u0 + (2.0 / 3.0) * ((u2.data - u0) + dt * rhs(u2)), 3)
    return u3.at_time(fld.time + dt)


def run_to_time(fld: ConservativeField, t_end: float, sp: SchemeParams, gas: GasParams,
                sink=None, fixed_dt=None) -> ConservativeField:
    """Advance to ``t_end`` exactly, calling ``sink`` after every accepted step.

    The final step is clipped to land on ``t_end`` and the landing time is
    assigned exactly, so co-running meshes can be synchronized bitwise.
    """
    if t_end < fld.time:
        raise ValueError(f"t_end={t_end} lies before field time {fld.time}")
    while fld.time < t_end:
        dt = fixed_dt if fixed_dt is not None else cfl_dt(fld, sp, gas)
        landing = fld.time + dt >= t_end
        if landing:
            dt = t_end - fld.time
        fld = ssp_rk3_step(fld, dt, sp, gas)
        if landing:
            fld = fld.at_time(t_end)
        if sink is not None:
            sink(fld)
    return fld
