"""Measure-valued diagnostics: Cesaro ensembles, defects, entropy rates,
the entropy-bump concatenation, and weak-form consistency residuals.

An ensemble holds N co-registered snapshots restricted to their common
(coarsest) mesh.  Member entropies are computed from the conservative
variables per member *before* averaging; the entropy of the averaged state
minus the averaged entropy is exactly the entropy defect, and analogously
for energy.  All defect integrands evaluate both the member side and the
averaged side through the same code path so Jensen gaps are computed
against the machine versions of the convex/concave functions: degenerate
ensembles then give exact zeros.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .eos import (
    GasParams,
    entropy_from_conservative,
    pressure_from_conservative,
    pressure_from_entropy,
)
from .errors import ExperimentPreconditionError, InvalidStateError
from .grid import ConservativeField, Mesh, cell_centers, restrict, totals

A_PRECEDES_B = "a_precedes_b"
B_PRECEDES_A = "b_precedes_a"
INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class CesaroEnsemble:
    """N member fields on a common mesh plus their running Cesaro average."""

    mesh: Mesh
    time: float
    members: tuple
    mean_data: np.ndarray      # (4, n, n): (rho~, m~_x, m~_y, E~)
    mean_entropy: np.ndarray   # (n, n): S~ = mean of member entropies

    @property
    def size(self) -> int:
        return len(self.members)


def _mean_exact_on_ties(arrays) -> np.ndarray:
    # baseline-shifted mean: identical inputs average to themselves bitwise,
    # which the degenerate-ensemble exact-zero guarantee relies on
    base = arrays[0]
    if len(arrays) == 1:
        return np.array(base)
    acc = np.zeros_like(base)
    for a in arrays[1:]:
        acc += a - base
    return base + acc / len(arrays)


def cesaro_build(runs: Sequence[ConservativeField], gas: GasParams) -> CesaroEnsemble:
    """Restrict all members to the coarsest mesh and average.

    Member entropies are taken of the restricted conservative states, then
    averaged; the order matters and is the per-run S_h definition.
    """
    if len(runs) == 0:
        raise ValueError("need at least one member run")
    times = np.array([f.time for f in runs])
    if times.max() - times.min() > 1e-12:
        raise ValueError(f"member times differ: {times}")
    coarsest = min(runs, key=lambda f: f.mesh.n).mesh
    members = []
    for f in runs:
        if f.mesh.n % coarsest.n != 0:
            raise ValueError(f"meshes not nested: {f.mesh.n} onto {coarsest.n}")
        members.append(restrict(f, coarsest))
    mean_data = _mean_exact_on_ties([m.data for m in members])
    mean_entropy = _mean_exact_on_ties([
        entropy_from_conservative(m.rho, m.mom_x, m.mom_y, m.energy, gas) for m in members
    ])
    return CesaroEnsemble(coarsest, float(times[0]), tuple(members),
                          mean_data, mean_entropy)


def _member_pressure(member: ConservativeField, gas: GasParams) -> np.ndarray:
    # p(rho, S(U)): same functional as the averaged side, so Jensen gaps
    # vanish exactly for degenerate ensembles
    s = entropy_from_conservative(member.rho, member.mom_x, member.mom_y, member.energy, gas)
    return pressure_from_entropy(member.rho, s, gas)


def _flux_tensor(rho, mx, my, p):
    return np.stack([mx * mx / rho + p, mx * my / rho, mx * my / rho, my * my / rho + p])


def _tensor_l1(t, h2: float) -> float:
    # entrywise absolute sum per cell, integrated over the domain
    return float(np.abs(t).sum() * h2)


def reynolds_defect(ens: CesaroEnsemble, gas: GasParams):
    """L1 norms (R1, R2, R) of the convective-plus-pressure tensor fields.

    R1 integrates the member average of T(U) = m (x) m / rho + p I, R2 the
    tensor of the Cesaro state with p(rho~, S~), and R their difference;
    R > 0 detects oscillations.
    """
    h2 = ens.mesh.h ** 2
    mean_t = _mean_exact_on_ties([
        _flux_tensor(m.rho, m.mom_x, m.mom_y, _member_pressure(m, gas)) for m in ens.members
    ])
    rho, mx, my = ens.mean_data[0], ens.mean_data[1], ens.mean_data[2]
    if np.any(rho <= 0.0):
        raise InvalidStateError("vacuum in Cesaro state")
    p_avg = pressure_from_entropy(rho, ens.mean_entropy, gas)
    cesaro_t = _flux_tensor(rho, mx, my, p_avg)
    return (_tensor_l1(mean_t, h2), _tensor_l1(cesaro_t, h2), _tensor_l1(mean_t - cesaro_t, h2))


def energy_defect(ens: CesaroEnsemble, gas: GasParams):
    """(E1, E2, D_E): member-averaged energy, energy of the Cesaro state,
    and their nonnegative difference (Jensen, convexity of E)."""
    h2 = ens.mesh.h ** 2

    def energy_of(rho, mx, my, s):
        return 0.5 * (mx * mx + my * my) / rho + pressure_from_entropy(rho, s, gas) / (gas.gamma - 1.0)

    member_energies = []
    for m in ens.members:
        s = entropy_from_conservative(m.rho, m.mom_x, m.mom_y, m.energy, gas)
        member_energies.append(energy_of(m.rho, m.mom_x, m.mom_y, s))
    e1_field = _mean_exact_on_ties(member_energies)
    rho, mx, my = ens.mean_data[0], ens.mean_data[1], ens.mean_data[2]
    if np.any(rho <= 0.0):
        raise InvalidStateError("vacuum in Cesaro state")
    e2_field = energy_of(rho, mx, my, ens.mean_entropy)
    e1 = float(e1_field.sum() * h2)
    e2 = float(e2_field.sum() * h2)
    return e1, e2, e1 - e2


def entropy_defect(ens: CesaroEnsemble, gas: GasParams):
    """(S_tot, D_Ent): integral of S~ and the Jensen gap of the concave
    entropy evaluated on the Cesaro conservative state."""
    h2 = ens.mesh.h ** 2
    rho, mx, my, en = ens.mean_data
    s_of_mean = entropy_from_conservative(rho, mx, my, en, gas)
    if not np.all(np.isfinite(s_of_mean)):
        raise InvalidStateError("invalid Cesaro state in entropy defect")
    s_tot = float(ens.mean_entropy.sum() * h2)
    d_ent = float((s_of_mean - ens.mean_entropy).sum() * h2)
    return s_tot, d_ent


@dataclass(frozen=True)
class DefectRow:
    t: float
    r1: float
    r2: float
    r: float
    e1: float
    e2: float
    d_e: float
    s_tot: float
    d_ent: float


DEFECT_HEADER = ("t", "R1", "R2", "R", "E1", "E2", "DE", "S", "DEnt")


def defect_row(ens: CesaroEnsemble, gas: GasParams) -> DefectRow:
    r1, r2, r = reynolds_defect(ens, gas)
    e1, e2, d_e = energy_defect(ens, gas)
    s_tot, d_ent = entropy_defect(ens, gas)
    return DefectRow(ens.time, r1, r2, r, e1, e2, d_e, s_tot, d_ent)


def write_defect_series(rows: Sequence[DefectRow], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(DEFECT_HEADER)
        for row in rows:
            w.writerow([f"{v:.17g}" for v in
                        (row.t, row.r1, row.r2, row.r, row.e1, row.e2,
                         row.d_e, row.s_tot, row.d_ent)])


def read_defect_series(path) -> List[DefectRow]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(header) != DEFECT_HEADER:
            raise ValueError(f"{path}: unexpected defect CSV header {header}")
        return [DefectRow(*(float(v) for v in row)) for row in reader]


# ---------------------------------------------------------------------------
# entropy production rates and the Dafermos comparison

@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be equal-length 1D arrays")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def index_at(self, t: float, tol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol:
            raise ValueError(f"time {t} not in series (nearest {self.times[i]})")
        return i


def entropy_production_rate(series: TimeSeries, t: float, window: int = 8) -> float:
    """Forward-difference right-rate over ``window`` samples from time t."""
    i = series.index_at(t)
    j = i + window
    if j >= len(series.times):
        raise ValueError(f"series too short for window {window} at t={t}")
    dt = series.times[j] - series.times[i]
    return float((series.values[j] - series.values[i]) / dt)


@dataclass(frozen=True)
class DafermosVerdict:
    verdict: str
    rate_a: float
    rate_b: float
    t_match: float


def dafermos_compare(a: TimeSeries, b: TimeSeries, t_match: float, tol: float,
                     window: int = 8) -> DafermosVerdict:
    """Order two total-entropy histories at t_match.

    The verdict requires state agreement up to t_match (both series within
    ``tol`` at all shared sample times) and a strict right-rate inequality
    at t_match; otherwise the series are incomparable.
    """
    ia = a.index_at(t_match)
    ib = b.index_at(t_match)
    prefix_a = a.times[:ia + 1]
    prefix_b = b.times[:ib + 1]
    agree = (len(prefix_a) == len(prefix_b)
             and np.allclose(prefix_a, prefix_b, rtol=0, atol=1e-12)
             and np.all(np.abs(a.values[:ia + 1] - b.values[:ib + 1]) <= tol))
    rate_a = entropy_production_rate(a, t_match, window)
    rate_b = entropy_production_rate(b, t_match, window)
    if not agree:
        return DafermosVerdict(INCOMPARABLE, rate_a, rate_b, t_match)
    if rate_b > rate_a:
        return DafermosVerdict(A_PRECEDES_B, rate_a, rate_b, t_match)
    if rate_a > rate_b:
        return DafermosVerdict(B_PRECEDES_A, rate_a, rate_b, t_match)
    return DafermosVerdict(INCOMPARABLE, rate_a, rate_b, t_match)


# ---------------------------------------------------------------------------
# entropy-bump concatenation

def concat_with_entropy_bump(fld: ConservativeField, initial_energy_budget: float,
                             gas: GasParams) -> ConservativeField:
    """Raise the per-cell entropy by a uniform delta > 0 spending the defect.

    Keeps (rho, m), recomputes E from (rho, S + delta); delta is the
    largest value (bisection to 1e-12) whose new total energy stays within
    the budget.  Errors out when the field has no defect to spend.
    """
    h2 = fld.mesh.h ** 2
    s = entropy_from_conservative(fld.rho, fld.mom_x, fld.mom_y, fld.energy, gas)
    if not np.all(np.isfinite(s)):
        raise InvalidStateError("invalid state in entropy bump")
    kinetic = 0.5 * (fld.mom_x ** 2 + fld.mom_y ** 2) / fld.rho

    def total_energy_after(delta: float) -> float:
        rho_e = pressure_from_entropy(fld.rho, s + delta, gas) / (gas.gamma - 1.0)
        return float((kinetic + rho_e).sum() * h2)

    current = total_energy_after(0.0)
    if not initial_energy_budget > current:
        raise ExperimentPreconditionError(
            f"nothing to bump: budget {initial_energy_budget} <= current energy {current}")
    lo, hi = 0.0, 1.0
    while total_energy_after(hi) <= initial_energy_budget:
        hi *= 2.0
        if hi > 1e6:
            raise ExperimentPreconditionError("entropy bump failed to bracket the budget")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if total_energy_after(mid) <= initial_energy_budget:
            lo = mid
        else:
            hi = mid
    delta = lo
    if delta <= 0.0:
        raise ExperimentPreconditionError("energy defect too small to realize a positive bump")
    rho_e = pressure_from_entropy(fld.rho, s + delta, gas) / (gas.gamma - 1.0)
    data = np.stack([fld.rho, fld.mom_x, fld.mom_y, kinetic + rho_e])
    return ConservativeField(fld.mesh, fld.time, data)


# ---------------------------------------------------------------------------
# weak-form consistency residuals

@dataclass(frozen=True)
class TestFunction:
    """phi(x, y) = cos(2 pi k x) cos(2 pi l y); periodic-compatible."""

    k: int
    l: int

    @property
    def label(self) -> str:
        return f"cos{self.k}{self.l}"

    @property
    def nonnegative(self) -> bool:
        return self.k == 0 and self.l == 0

    def value(self, x, y):
        return np.cos(2 * np.pi * self.k * x) * np.cos(2 * np.pi * self.l * y)

    def grad(self, x, y):
        tkx = 2 * np.pi * self.k
        tly = 2 * np.pi * self.l
        gx = -tkx * np.sin(tkx * x) * np.cos(tly * y)
        gy = -tly * np.cos(tkx * x) * np.sin(tly * y)
        return gx, gy


def phi_library() -> List[TestFunction]:
    return [TestFunction(k, l) for k in range(3) for l in range(3)]


@dataclass(frozen=True)
class ConsistencyResidual:
    h: float
    phi: str
    tau1: float
    tau2: float
    e2: float
    e3: float
    e4: float


CONSISTENCY_HEADER = ("h", "phi", "tau1", "tau2", "e2", "e3", "e4")


class ConsistencyAccumulator:
    """Streams per-step spatial integrals needed by the weak-form residuals.

    Feed every accepted step (and the initial state) through ``observe``;
    ``residual`` then evaluates the continuity/momentum/entropy residuals
    over any recorded [tau1, tau2] with a trapezoid time integral over the
    nonuniform steps.
    """

    def __init__(self, mesh: Mesh, gas: GasParams, phis: Optional[Sequence[TestFunction]] = None):
        self.mesh = mesh
        self.gas = gas
        self.phis = list(phis) if phis is not None else phi_library()
        xc, yc = cell_centers(mesh)
        self._phi_vals = [phi.value(xc, yc) for phi in self.phis]
        self._phi_grads = [phi.grad(xc, yc) for phi in self.phis]
        self.times: List[float] = []
        self._rows: List[np.ndarray] = []

    def observe(self, fld: ConservativeField) -> None:
        if fld.mesh.n != self.mesh.n:
            raise ValueError("field mesh does not match the accumulator mesh")
        h2 = self.mesh.h ** 2
        rho, mx, my, en = fld.data
        p = pressure_from_conservative(rho, mx, my, en, self.gas)
        s = entropy_from_conservative(rho, mx, my, en, self.gas)
        ux, uy = mx / rho, my / rho
        txx = mx * ux + p
        txy = mx * uy
        tyy = my * uy + p
        row = np.empty((len(self.phis), 8))
        for q, (pv, (gx, gy)) in enumerate(zip(self._phi_vals, self._phi_grads)):
            row[q, 0] = (rho * pv).sum() * h2                 # mass moment
            row[q, 1] = (mx * gx + my * gy).sum() * h2        # mass flux
            row[q, 2] = (mx * pv).sum() * h2                  # x-momentum moment
            row[q, 3] = (txx * gx + txy * gy).sum() * h2      # x-momentum flux
            row[q, 4] = (my * pv).sum() * h2                  # y-momentum moment
            row[q, 5] = (txy * gx + tyy * gy).sum() * h2      # y-momentum flux
            row[q, 6] = (s * pv).sum() * h2                   # entropy moment
            row[q, 7] = (s * (ux * gx + uy * gy)).sum() * h2  # entropy flux
        self.times.append(fld.time)
        self._rows.append(row)

    def _phi_index(self, phi) -> int:
        label = phi.label if isinstance(phi, TestFunction) else str(phi)
        for q, candidate in enumerate(self.phis):
            if candidate.label == label:
                return q
        raise KeyError(f"unknown test function {label!r}")

    def residual(self, phi, tau1: float, tau2: float) -> ConsistencyResidual:
        if len(self.times) < 2:
            raise ValueError("accumulator holds fewer than two steps")
        if not tau1 < tau2:
            raise ValueError("need tau1 < tau2")
        times = np.asarray(self.times)
        i1 = int(np.argmin(np.abs(times - tau1)))
        i2 = int(np.argmin(np.abs(times - tau2)))
        if i1 == i2:
            raise ValueError("tau1 and tau2 resolve to the same recorded step")
        q = self._phi_index(phi)
        block = np.stack([r[q] for r in self._rows[i1:i2 + 1]])
        tt = times[i1:i2 + 1]

        def residual_of(moment_col, flux_col):
            change = block[-1, moment_col] - block[0, moment_col]
            flux = float(np.trapezoid(block[:, flux_col], tt))
            return change - flux

        e2 = residual_of(0, 1)
        e3 = float(np.hypot(residual_of(2, 3), residual_of(4, 5)))
        e4 = residual_of(6, 7)
        return ConsistencyResidual(self.mesh.h, self.phis[q].label,
                                   float(tt[0]), float(tt[-1]), abs(e2), e3, e4)


def consistency_residual(snapshots: Sequence[ConservativeField], phi: TestFunction,
                         tau1: float, tau2: float, gas: GasParams) -> ConsistencyResidual:
    """Residual from an in-memory history (convenience over the accumulator)."""
    acc = ConsistencyAccumulator(snapshots[0].mesh, gas, [phi])
    for fld in snapshots:
        acc.observe(fld)
    return acc.residual(phi, tau1, tau2)


def write_consistency_csv(rows: Sequence[ConsistencyResidual], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CONSISTENCY_HEADER)
        for r in rows:
            w.writerow([f"{r.h:.17g}", r.phi, f"{r.tau1:.17g}", f"{r.tau2:.17g}",
                        f"{r.e2:.17g}", f"{r.e3:.17g}", f"{r.e4:.17g}"])


def boundedness_monitor(fields: Sequence[ConservativeField]) -> np.ndarray:
    """max |U| per component over an ensemble's members (concentration guard)."""
    return np.max(np.stack([np.abs(f.data).max(axis=(1, 2)) for f in fields]), axis=0)


def initial_total_energy(fields: Sequence[ConservativeField]) -> float:
    """Member-averaged total energy; the concatenation budget."""
    return float(np.mean([totals(f)[3] for f in fields]))
