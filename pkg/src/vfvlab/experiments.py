"""Experiment orchestration: single runs, hierarchy defect pipelines, the
entropy-bump concatenation experiment, the consistency study, and report
emission.

Every experiment is a pure function of its RunConfig: member runs land
exactly on the shared output-time grid (so ensembles can be built without
temporal interpolation), the KH coefficients are drawn from the configured
seed, and everything needed to regenerate a CSV is dumped into the sibling
``metadata.json``.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import __version__, kernels
from .diagnostics import (
    ConsistencyAccumulator,
    ConsistencyResidual,
    DafermosVerdict,
    DefectRow,
    TimeSeries,
    boundedness_monitor,
    cesaro_build,
    concat_with_entropy_bump,
    dafermos_compare,
    defect_row,
    initial_total_energy,
    phi_library,
    write_consistency_csv,
    write_defect_series,
)
from .eos import GasParams, entropy_from_conservative, pressure_from_entropy
from .errors import ExperimentPreconditionError
from .grid import (
    ConservativeField,
    Mesh,
    restrict,
    totals,
    write_density_pgm,
    write_snapshot,
)
from .initdata import KhSpec, entropy_floor_from_field, kh_initial_field
from .scheme import SchemeParams, run_to_time

DESK_MESHES = (16, 32, 64, 128)
PAPER_MESHES = (64, 128, 256, 512, 1024)


@dataclass(frozen=True)
class RunConfig:
    gas: GasParams = GasParams(1.4)
    scheme: SchemeParams = SchemeParams()
    kh: KhSpec = KhSpec()
    meshes: Tuple[int, ...] = DESK_MESHES
    t_end: float = 2.0
    output_dt: float = 0.02
    out_dir: Path = Path("out")
    bc: str = "periodic"
    tau: float = 1.0
    rate_window: int = 1
    paper_scale: bool = False

    def __post_init__(self):
        if len(self.meshes) == 0 or list(self.meshes) != sorted(set(self.meshes)):
            raise ValueError("meshes must be strictly increasing")
        for n in self.meshes:
            if n < 4 or (n & (n - 1)) != 0:
                raise ValueError(f"mesh sizes must be powers of two >= 4, got {n}")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if not 0.0 < self.output_dt <= self.t_end:
            raise ValueError("output_dt must lie in (0, t_end]")
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.paper_scale:
            object.__setattr__(self, "meshes", PAPER_MESHES)


def load_config(path) -> RunConfig:
    """Parse a TOML config; every key is optional and defaults to the paper
    values (gamma=1.4, alpha=1, eps=2, T=2, desk meshes)."""
    try:
        import tomllib
    except ImportError:
        import tomli as tomllib
    with open(path, "rb") as f:
        doc = tomllib.load(f)
    gas = GasParams(**doc.get("gas", {}))
    scheme = SchemeParams(**doc.get("scheme", {}))
    kh = KhSpec(**doc.get("kh", {}))
    run = dict(doc.get("run", {}))
    if "meshes" in run:
        run["meshes"] = tuple(int(v) for v in run["meshes"])
    return RunConfig(gas=gas, scheme=scheme, kh=kh, **run)


def output_times(t_end: float, output_dt: float) -> np.ndarray:
    """Strictly increasing sample times in (0, t_end], ending exactly at t_end."""
    count = int(np.floor(t_end / output_dt + 1e-9))
    times = output_dt * np.arange(1, count + 1)
    if len(times) == 0 or abs(times[-1] - t_end) > 1e-12:
        times = np.append(times, t_end)
    else:
        times[-1] = t_end
    return times


def _config_metadata(config: RunConfig) -> Dict:
    coeffs = config.kh.coefficients()
    meta = {
        "version": __version__,
        "backend": kernels.backend(),
        "gas": {"gamma": config.gas.gamma, "s_floor": config.gas.s_floor},
        "scheme": asdict(config.scheme),
        "kh": {
            "modes": config.kh.modes,
            "amp": config.kh.amp,
            "j1": config.kh.j1,
            "j2": config.kh.j2,
            "seed": config.kh.seed,
            "coefficients_a": coeffs.a.tolist(),
            "coefficients_b": coeffs.b.tolist(),
        },
        "run": {
            "meshes": list(config.meshes),
            "t_end": config.t_end,
            "output_dt": config.output_dt,
            "bc": config.bc,
            "tau": config.tau,
            "rate_window": config.rate_window,
            "paper_scale": config.paper_scale,
        },
        "conventions": {
            "matrix_l1": "entrywise absolute sum per cell times h^2",
            "wasserstein": "per-component 1D W1; Cauchy distances between "
                           "successive ensembles substitute for the unknown limit measure",
            "boundary": "paper section 8 is silent on the boundary condition; "
                        "periodic is the shear-layer benchmark convention",
        },
    }
    return meta


def _write_json(obj, path) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)


def _audit(initial: np.ndarray, final: np.ndarray) -> Dict:
    scale = np.maximum(np.abs(initial), 1.0)
    drift = np.abs(final - initial) / scale
    return {
        "initial_totals": initial.tolist(),
        "final_totals": final.tolist(),
        "relative_drift": drift.tolist(),
        "max_relative_drift": float(drift.max()),
    }


# ---------------------------------------------------------------------------
# single-mesh run

@dataclass
class SingleRunResult:
    out_dir: Path
    final: ConservativeField
    audit: Dict
    snapshots: List[Path]


def cmd_run(config: RunConfig) -> SingleRunResult:
    """Simulate the first configured mesh, emitting VFV1 snapshots and PGM
    quicklooks at every output time plus a metadata/conservation audit."""
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    n = config.meshes[0]
    mesh = Mesh(n, bc=config.bc)
    fld = kh_initial_field(config.kh, mesh, config.gas)
    gas = replace(config.gas, s_floor=entropy_floor_from_field(fld, config.gas))
    t0_totals = totals(fld)
    paths: List[Path] = []

    def emit(f: ConservativeField, index: int) -> None:
        snap = out / f"snap_{index:04d}.vfv1"
        write_snapshot(f, snap, gas.gamma)
        write_density_pgm(f, out / f"rho_{index:04d}.pgm")
        paths.append(snap)

    emit(fld, 0)
    meta = _config_metadata(config)
    meta["gas"]["s_floor"] = gas.s_floor
    try:
        for k, t_out in enumerate(output_times(config.t_end, config.output_dt), start=1):
            fld = run_to_time(fld, float(t_out), config.scheme, gas)
            emit(fld, k)
    except Exception:
        # keep partial outputs plus the audit of what completed
        meta["audit"] = _audit(t0_totals, totals(fld))
        meta["status"] = "aborted"
        _write_json(meta, out / "metadata.json")
        raise
    audit = _audit(t0_totals, totals(fld))
    meta["audit"] = audit
    meta["status"] = "completed"
    _write_json(meta, out / "metadata.json")
    return SingleRunResult(out, fld, audit, paths)


# ---------------------------------------------------------------------------
# hierarchy pipeline

@dataclass
class HierarchyResult:
    config: RunConfig
    gas: GasParams                      # with the measured entropy floor
    times: np.ndarray                   # includes t = 0
    members: List[List[ConservativeField]]  # [time][member] on the coarse mesh
    rows: List[DefectRow]
    integrals: Dict[str, float]
    bounds: np.ndarray                  # (times, 4) max |U| over members
    budget: float                       # initial total energy (averaged)
    finals: List[ConservativeField]     # full-resolution final snapshots
    audits: List[Dict]

    def series(self, name: str) -> TimeSeries:
        values = np.array([getattr(r, name) for r in self.rows])
        return TimeSeries(self.times, values)

    def ensemble_at(self, index: int):
        return cesaro_build(self.members[index], self.gas)


def run_hierarchy(config: RunConfig) -> HierarchyResult:
    """Run every mesh, co-register snapshots on the coarsest mesh at the
    shared output times, and evaluate the full defect block per time."""
    if len(config.meshes) < 2:
        raise ExperimentPreconditionError("hierarchy needs at least two meshes")
    coarse = Mesh(config.meshes[0], bc=config.bc)
    t_out = output_times(config.t_end, config.output_dt)
    times = np.concatenate([[0.0], t_out])
    init_coarse = kh_initial_field(config.kh, coarse, config.gas)
    gas = replace(config.gas, s_floor=entropy_floor_from_field(init_coarse, config.gas))

    members: List[List[ConservativeField]] = [[] for _ in times]
    audits: List[Dict] = []
    initial_fields: List[ConservativeField] = []
    finals: List[ConservativeField] = []
    for n in config.meshes:
        mesh = Mesh(n, bc=config.bc)
        fld = kh_initial_field(config.kh, mesh, gas)
        initial_fields.append(fld)
        t0_totals = totals(fld)
        members[0].append(restrict(fld, coarse))
        for k, t in enumerate(t_out, start=1):
            fld = run_to_time(fld, float(t), config.scheme, gas)
            members[k].append(restrict(fld, coarse))
        finals.append(fld)
        audits.append({"n": n, **_audit(t0_totals, totals(fld))})

    rows: List[DefectRow] = []
    bounds = np.empty((len(times), 4))
    ensembles_cache = []
    for k in range(len(times)):
        ens = cesaro_build(members[k], gas)
        rows.append(defect_row(ens, gas))
        bounds[k] = boundedness_monitor(members[k])
        ensembles_cache.append(ens)

    tt = times
    integrals = {
        "int_E1": float(np.trapezoid([r.e1 for r in rows], tt)),
        "int_E2": float(np.trapezoid([r.e2 for r in rows], tt)),
        "int_DE": float(np.trapezoid([r.d_e for r in rows], tt)),
        "int_S": float(np.trapezoid([r.s_tot for r in rows], tt)),
        "int_DEnt": float(np.trapezoid([r.d_ent for r in rows], tt)),
    }
    budget = initial_total_energy(initial_fields)
    return HierarchyResult(config, gas, times, members, rows, integrals, bounds,
                           budget, finals, audits)


def cmd_hierarchy(config: RunConfig) -> HierarchyResult:
    """run_hierarchy plus the file outputs (defects.csv, integrals.csv,
    bounds.csv, ensemble.npz, final snapshots, metadata.json)."""
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    result = run_hierarchy(config)
    write_defect_series(result.rows, out / "defects.csv")
    with open(out / "integrals.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("quantity", "value"))
        for key, value in result.integrals.items():
            w.writerow((key, f"{value:.17g}"))
    with open(out / "bounds.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("t", "max_rho", "max_mx", "max_my", "max_E"))
        for t, row in zip(result.times, result.bounds):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
    np.savez_compressed(
        out / "ensemble.npz",
        times=result.times,
        members=np.stack([np.stack([m.data for m in row]) for row in result.members]),
        meshes=np.array(result.config.meshes),
        coarse_n=result.members[0][0].mesh.n,
        budget=result.budget,
        s_floor=result.gas.s_floor,
    )
    # figure inputs: per-mesh final snapshots and the final cesaro average
    for fld in result.finals:
        write_snapshot(fld, out / f"final_n{fld.mesh.n}.vfv1", result.gas.gamma)
        write_density_pgm(fld, out / f"final_n{fld.mesh.n}.pgm")
    final_ens = result.ensemble_at(len(result.times) - 1)
    cesaro_field = ConservativeField(final_ens.mesh, final_ens.time, final_ens.mean_data)
    write_snapshot(cesaro_field, out / "cesaro_final.vfv1", result.gas.gamma)
    write_density_pgm(cesaro_field, out / "cesaro_final.pgm")
    meta = _config_metadata(config)
    meta["gas"]["s_floor"] = result.gas.s_floor
    meta["audits"] = result.audits
    meta["initial_energy_budget"] = result.budget
    meta["integrals"] = result.integrals
    _write_json(meta, out / "metadata.json")
    return result


# ---------------------------------------------------------------------------
# concatenation experiment

@dataclass
class ConcatResult:
    verdict: DafermosVerdict
    delta: float
    defect_at_tau: float
    budget: float
    baseline: TimeSeries
    concatenated: TimeSeries
    out_dir: Optional[Path]


def _entropy_total(fld: ConservativeField, gas: GasParams) -> float:
    s = entropy_from_conservative(fld.rho, fld.mom_x, fld.mom_y, fld.energy, gas)
    return float(s.sum() * fld.mesh.h ** 2)


def run_concat(config: RunConfig, baseline: Optional[HierarchyResult] = None) -> ConcatResult:
    """Entropy-bump restart at config.tau against the hierarchy baseline.

    The restart state carries the Cesaro (rho, m) with energy recomputed
    from the averaged entropy (the dissipative-solution description whose
    energy shortfall is exactly D_E); the bump spends that defect.  Both
    histories then run to t_end and are ordered by dafermos_compare.
    """
    if baseline is None:
        baseline = run_hierarchy(config)
    gas = baseline.gas
    tau = config.tau
    k_tau = int(np.argmin(np.abs(baseline.times - tau)))
    if abs(baseline.times[k_tau] - tau) > 1e-9:
        raise ExperimentPreconditionError(
            f"tau={tau} is not on the output grid (nearest {baseline.times[k_tau]})")
    if k_tau == len(baseline.times) - 1:
        raise ExperimentPreconditionError("tau must lie strictly before t_end")
    row = baseline.rows[k_tau]
    if not row.d_e > 0.0:
        raise ExperimentPreconditionError(f"nothing to bump: zero energy defect at tau={tau}")

    ens = baseline.ensemble_at(k_tau)
    rho, mx, my = ens.mean_data[0], ens.mean_data[1], ens.mean_data[2]
    rho_e = pressure_from_entropy(rho, ens.mean_entropy, gas) / (gas.gamma - 1.0)
    energy = 0.5 * (mx * mx + my * my) / rho + rho_e
    state_tau = ConservativeField(ens.mesh, ens.time, np.stack([rho, mx, my, energy]))

    bumped = concat_with_entropy_bump(state_tau, baseline.budget, gas)
    s_before = float(ens.mean_entropy.sum() * ens.mesh.h ** 2)
    s_after = _entropy_total(bumped, gas)
    delta = (s_after - s_before)  # = per-cell bump * |Omega|

    # continue the bumped restart, sampling its total entropy every step
    step_times = [tau]
    step_values = [s_after]

    def sink(f: ConservativeField) -> None:
        step_times.append(f.time)
        step_values.append(_entropy_total(f, gas))

    run_to_time(bumped, config.t_end, config.scheme, gas, sink=sink)

    base_series = baseline.series("s_tot")
    # concatenated history: baseline prefix through tau (cagllad: the value
    # AT tau is the pre-jump baseline value), then the bumped run per step
    concat_times = np.concatenate([baseline.times[:k_tau + 1], step_times[1:]])
    concat_values = np.concatenate([base_series.values[:k_tau + 1], step_values[1:]])
    concat_series = TimeSeries(concat_times, concat_values)
    verdict = dafermos_compare(base_series, concat_series, tau, tol=1e-9,
                               window=config.rate_window)
    return ConcatResult(verdict, delta, row.d_e, baseline.budget,
                        base_series, concat_series, None)


def cmd_concat(config: RunConfig, baseline: Optional[HierarchyResult] = None) -> ConcatResult:
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    result = run_concat(config, baseline=baseline)
    report = {
        "verdict": result.verdict.verdict,
        "baseline_right_rate": result.verdict.rate_a,
        "bumped_right_rate": result.verdict.rate_b,
        "tau": result.verdict.t_match,
        "entropy_jump_delta_total": result.delta,
        "energy_defect_at_tau": result.defect_at_tau,
        "energy_budget": result.budget,
        "rate_window": config.rate_window,
    }
    _write_json(report, out / "concat_report.json")
    for name, series in (("baseline_entropy.csv", result.baseline),
                         ("concat_entropy.csv", result.concatenated)):
        with open(out / name, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(("t", "S"))
            for t, v in zip(series.times, series.values):
                w.writerow((f"{t:.17g}", f"{v:.17g}"))
    meta = _config_metadata(config)
    meta["report"] = report
    _write_json(meta, out / "metadata.json")
    return ConcatResult(result.verdict, result.delta, result.defect_at_tau,
                        result.budget, result.baseline, result.concatenated, out)


# ---------------------------------------------------------------------------
# consistency study

@dataclass
class ConsistencyStudy:
    residuals: List[ConsistencyResidual]
    decay: Dict[str, Dict[str, bool]]


def run_consistency(config: RunConfig) -> ConsistencyStudy:
    """Weak-form residuals over [0, t_end] for every mesh and test function,
    with a per-function monotone-decay verdict across the mesh list."""
    if len(config.meshes) < 3:
        raise ExperimentPreconditionError("consistency study needs at least three meshes")
    phis = phi_library()
    residuals: List[ConsistencyResidual] = []
    for n in config.meshes:
        mesh = Mesh(n, bc=config.bc)
        fld = kh_initial_field(config.kh, mesh, config.gas)
        gas = replace(config.gas, s_floor=entropy_floor_from_field(fld, config.gas))
        acc = ConsistencyAccumulator(mesh, gas, phis)
        acc.observe(fld)
        run_to_time(fld, config.t_end, config.scheme, gas, sink=acc.observe)
        for phi in phis:
            residuals.append(acc.residual(phi, 0.0, config.t_end))
    decay: Dict[str, Dict[str, bool]] = {}
    for phi in phis:
        per_phi = [r for r in residuals if r.phi == phi.label]
        per_phi.sort(key=lambda r: -r.h)
        e2s = [r.e2 for r in per_phi]
        e3s = [r.e3 for r in per_phi]
        decay[phi.label] = {
            "e2_decreasing": all(a > b for a, b in zip(e2s, e2s[1:])),
            "e3_decreasing": all(a > b for a, b in zip(e3s, e3s[1:])),
        }
    return ConsistencyStudy(residuals, decay)


def cmd_consistency(config: RunConfig) -> ConsistencyStudy:
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    study = run_consistency(config)
    write_consistency_csv(study.residuals, out / "consistency.csv")
    with open(out / "decay.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("phi", "e2_decreasing", "e3_decreasing"))
        for label, verdict in study.decay.items():
            w.writerow((label, verdict["e2_decreasing"], verdict["e3_decreasing"]))
    meta = _config_metadata(config)
    meta["decay"] = study.decay
    _write_json(meta, out / "metadata.json")
    return study


# ---------------------------------------------------------------------------
# report

def cmd_report(out_dir: Path, stream=None) -> str:
    """Human-readable summary of a finished run directory."""
    stream = stream or sys.stdout
    out = Path(out_dir)
    lines = [f"run directory: {out}"]
    meta_path = out / "metadata.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        run = meta.get("run", {})
        lines.append(f"version {meta.get('version')} backend {meta.get('backend')}")
        lines.append(f"meshes {run.get('meshes')} t_end {run.get('t_end')} bc {run.get('bc')}")
        if "audit" in meta:
            lines.append(f"conservation drift {meta['audit']['max_relative_drift']:.3e}")
        for audit in meta.get("audits", []):
            lines.append(f"  n={audit['n']}: drift {audit['max_relative_drift']:.3e}")
        if "integrals" in meta:
            for key, value in meta["integrals"].items():
                lines.append(f"  {key} = {value:.6g}")
        if "report" in meta:
            rep = meta["report"]
            lines.append(f"concat verdict: {rep['verdict']} "
                         f"(rates {rep['baseline_right_rate']:.4g} vs "
                         f"{rep['bumped_right_rate']:.4g})")
        if "decay" in meta:
            bad = [k for k, v in meta["decay"].items()
                   if not (v["e2_decreasing"] and v["e3_decreasing"])]
            lines.append(f"consistency decay: {'all monotone' if not bad else 'violations: ' + ', '.join(bad)}")
    defects = out / "defects.csv"
    if defects.exists():
        from .diagnostics import read_defect_series

        rows = read_defect_series(defects)
        last = rows[-1]
        lines.append(f"final defects at t={last.t:g}: R={last.r:.4g} "
                     f"D_E={last.d_e:.4g} D_Ent={last.d_ent:.4g}")
    text = "\n".join(lines)
    print(text, file=stream)
    return text
