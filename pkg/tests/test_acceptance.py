"""Acceptance suite: one test per acceptance criterion, each printing a
PASS/FAIL line (run with ``pytest -s tests/test_acceptance.py`` to see them
live).  Expensive runs are shared through module-scoped fixtures.

The paper-scale Table-1 check is opt-in: set VFVLAB_PAPER_SCALE=1 (multi-
hour runtime, excluded from CI).
"""

import os
import time
from dataclasses import replace

import numpy as np
import pytest

from vfvlab.diagnostics import (
    ConsistencyAccumulator,
    cesaro_build,
    defect_row,
    energy_defect,
    entropy_defect,
    phi_library,
    reynolds_defect,
)
from vfvlab.eos import (
    GasParams,
    PrimitiveCell,
    conservative_from_primitive,
    entropy_from_conservative,
    total_energy,
)
from vfvlab.experiments import RunConfig, run_concat, run_hierarchy
from vfvlab.grid import ConservativeField, Mesh, cell_centers, totals
from vfvlab.initdata import KhSpec, kh_initial_field
from vfvlab.measures import w1_samples
from vfvlab.scheme import AS_PRINTED, AVERAGED, SchemeParams, run_to_time, upwind_flux, vfv_rhs

from conftest import random_field, random_valid_states
from test_scheme import rhs_by_faces
from test_measures import brute_force_w1

GAS = GasParams(1.4)
SP = SchemeParams()


def check(name, ok, detail=""):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{name} failed: {detail}"


@pytest.fixture(scope="module")
def kh64_run():
    """Full n=64 KH run to T=2 with per-step entropy and floor monitors."""
    fld = kh_initial_field(KhSpec(seed=42), Mesh(64), GAS)
    s0 = entropy_from_conservative(fld.rho, fld.mom_x, fld.mom_y, fld.energy, GAS)
    s_floor = float(np.min(s0 / fld.rho))
    h2 = fld.mesh.h ** 2

    monitors = {
        "s_tot": [float(s0.sum() * h2)],
        "floor_margin": [float(np.min(s0 - s_floor * fld.rho))],
        "steps": 0,
    }

    def sink(f):
        s = entropy_from_conservative(f.rho, f.mom_x, f.mom_y, f.energy, GAS)
        monitors["s_tot"].append(float(s.sum() * h2))
        monitors["floor_margin"].append(float(np.min(s - s_floor * f.rho)))
        monitors["steps"] += 1

    start = time.perf_counter()
    final = run_to_time(fld, 2.0, SP, GAS, sink=sink)
    monitors["runtime"] = time.perf_counter() - start
    return fld, final, monitors


@pytest.fixture(scope="module")
def hierarchy_run():
    config = RunConfig(meshes=(16, 32, 64, 128), t_end=2.0, output_dt=0.02,
                       kh=KhSpec(seed=42))
    start = time.perf_counter()
    result = run_hierarchy(config)
    runtime = time.perf_counter() - start
    return config, result, runtime


def smooth_field(mesh):
    """Generic smooth periodic state exciting every library mode."""
    x, y = cell_centers(mesh)
    tp = 2 * np.pi
    rho = (1.0 + 0.15 * np.sin(tp * x + 0.5) * np.sin(tp * y + 1.7)
           + 0.10 * np.cos(2 * tp * x + 0.9) * np.cos(tp * y)
           + 0.07 * np.cos(tp * x) * np.cos(2 * tp * y + 0.6))
    ux = (0.3 + 0.08 * np.cos(tp * y + 0.4) + 0.06 * np.sin(tp * x + 2.0)
          + 0.04 * np.cos(2 * tp * x + 1.3) * np.sin(tp * y))
    uy = (-0.2 + 0.07 * np.sin(tp * x + 0.8) + 0.05 * np.cos(2 * tp * y + 2.2)
          + 0.04 * np.sin(tp * x + 0.3) * np.cos(tp * y))
    p = (1.0 + 0.12 * np.cos(tp * x + 1.9) * np.cos(tp * y + 0.25)
         + 0.08 * np.sin(2 * tp * x) + 0.06 * np.sin(2 * tp * y + 1.0))
    data = np.stack([rho, rho * ux, rho * uy, total_energy(rho, ux, uy, p, GAS)])
    return ConservativeField(mesh, 0.0, data)


def residual_table(make_field, t_end, meshes=(16, 32, 64)):
    table = {}
    for n in meshes:
        mesh = Mesh(n)
        fld = make_field(mesh)
        acc = ConsistencyAccumulator(mesh, GAS)
        acc.observe(fld)
        run_to_time(fld, t_end, SP, GAS, sink=acc.observe)
        table[n] = {phi.label: acc.residual(phi, 0.0, t_end) for phi in phi_library()}
    return table


# ---------------------------------------------------------------------------
# criteria

def test_conservation_kh64(kh64_run):
    init, final, monitors = kh64_run
    t0, t1 = totals(init), totals(final)
    drift = np.abs(t1 - t0) / np.maximum(np.abs(t0), 1.0)
    check("conservation-n64-T2",
          bool(np.all(drift <= 1e-11)) and monitors["runtime"] <= 600.0,
          f"drift={drift.max():.2e} runtime={monitors['runtime']:.1f}s "
          f"steps={monitors['steps']}")


def test_flux_constant_state_exactness():
    rng = np.random.default_rng(100)
    worst = 0.0
    for form in (AVERAGED, AS_PRINTED):
        sp = SchemeParams(pressure_work_form=form)
        for _ in range(1000):
            rho, ux, uy, p = (float(v) for v in random_valid_states(rng, ()))
            cell = conservative_from_primitive(PrimitiveCell(rho, (ux, uy), p), GAS)
            theta = rng.uniform(0, 2 * np.pi)
            normal = (np.cos(theta), np.sin(theta))
            flux = upwind_flux(cell, cell, normal, 1.0 / 64, sp, GAS)
            un = ux * normal[0] + uy * normal[1]
            exact = np.array([rho * un,
                              cell.mom[0] * un + p * normal[0],
                              cell.mom[1] * un + p * normal[1],
                              (cell.energy + p) * un])
            got = np.array([flux.rho, flux.mom[0], flux.mom[1], flux.energy])
            err = np.max(np.abs(got - exact) / np.maximum(1.0, np.abs(exact)))
            worst = max(worst, err)
    check("flux-constant-state", worst <= 1e-14, f"worst rel err={worst:.2e}")


def test_rhs_matches_brute_force_oracle():
    rng = np.random.default_rng(101)
    worst = 0.0
    for form in (AVERAGED, AS_PRINTED):
        sp = SchemeParams(pressure_work_form=form)
        for _ in range(5):
            fld = random_field(rng, Mesh(8), GAS)
            got = vfv_rhs(fld, sp, GAS)
            want = rhs_by_faces(fld, sp, GAS)
            scale = max(1.0, float(np.abs(want).max()))
            worst = max(worst, float(np.abs(got - want).max()) / scale)
    check("rhs-oracle-n8", worst <= 1e-13, f"worst rel err={worst:.2e}")


def test_entropy_monotonicity_and_minimum_principle(kh64_run):
    _, _, monitors = kh64_run
    s_tot = np.array(monitors["s_tot"])
    min_step = float(np.min(np.diff(s_tot)))
    floor_margin = float(np.min(monitors["floor_margin"]))
    check("entropy-monotone-n64", min_step >= -1e-10, f"worst step delta={min_step:.2e}")
    check("entropy-minimum-principle-n64", floor_margin >= -1e-10,
          f"min(S - s_floor rho)={floor_margin:.2e}")


def test_jensen_defect_suite():
    rng = np.random.default_rng(102)
    worst_de, worst_dent, worst_r = 0.0, 0.0, 0.0
    for _ in range(1000):
        k = int(rng.integers(1, 6))
        members = [random_field(rng, Mesh(4), GAS) for _ in range(k)]
        ens = cesaro_build(members, GAS)
        r1, r2, r = reynolds_defect(ens, GAS)
        _, _, d_e = energy_defect(ens, GAS)
        _, d_ent = entropy_defect(ens, GAS)
        worst_de = min(worst_de, d_e)
        worst_dent = min(worst_dent, d_ent)
        worst_r = min(worst_r, r, r1 - r2)
    ok = worst_de >= -1e-12 and worst_dent >= -1e-12 and worst_r >= -1e-12
    # degenerate ensembles: exact zeros
    fld = random_field(rng, Mesh(4), GAS)
    exact = True
    for count in (1, 2, 4, 8):
        ens = cesaro_build([fld] * count, GAS)
        row = defect_row(ens, GAS)
        exact = exact and row.r == 0.0 and row.d_e == 0.0 and row.d_ent == 0.0
    check("jensen-defect-suite", ok and exact,
          f"worst d_e={worst_de:.2e} d_ent={worst_dent:.2e} r-margin={worst_r:.2e} "
          f"degenerate-exact={exact}")


def test_qualitative_defect_trends(hierarchy_run):
    _, result, runtime = hierarchy_run
    last = result.rows[-1]
    e1 = np.array([r.e1 for r in result.rows])
    s_tot = np.array([r.s_tot for r in result.rows])
    e1_var = float((e1.max() - e1.min()) / abs(e1[0]))
    s_min_step = float(np.min(np.diff(s_tot)))
    check("fig3-energy-defect", last.d_e > 1e-4, f"D_E(2)={last.d_e:.3e}")
    check("fig4-entropy-defect", last.d_ent > 1e-5, f"D_Ent(2)={last.d_ent:.3e}")
    check("cesaro-energy-constancy", e1_var <= 1e-10, f"relative variation={e1_var:.2e}")
    check("total-entropy-monotone", s_min_step >= -1e-10, f"worst step={s_min_step:.2e}")
    check("hierarchy-runtime", runtime <= 1800.0, f"runtime={runtime:.1f}s")


def test_dafermos_non_maximality(hierarchy_run):
    config, result, _ = hierarchy_run
    concat = run_concat(replace(config, tau=1.0, rate_window=1), baseline=result)
    v = concat.verdict
    margin = v.rate_b - v.rate_a
    ok = v.verdict == "a_precedes_b" and margin > 10.0 * abs(v.rate_a)
    check("dafermos-concat-tau1", ok,
          f"verdict={v.verdict} rate_base={v.rate_a:.4g} rate_bumped={v.rate_b:.4g} "
          f"margin={margin:.4g} needed>{10 * abs(v.rate_a):.4g}")


def test_consistency_decay():
    # Def 4.1 decay needs residuals above roundoff on every mode; the KH data
    # leave coarse members exactly x-uniform (amp 0.01 < h/2 for n <= 32), so
    # the decay sweep runs on a generic smooth state, and the KH runs are
    # asserted for the modes their symmetry feeds (e2 of the y-modes).
    table = residual_table(smooth_field, 0.5)
    bad = []
    for phi in phi_library():
        if phi.k == 0 and phi.l == 0:
            continue
        e2s = [table[n][phi.label].e2 for n in (16, 32, 64)]
        e3s = [table[n][phi.label].e3 for n in (16, 32, 64)]
        if not all(a > b for a, b in zip(e2s, e2s[1:])):
            bad.append(f"{phi.label}:e2={e2s}")
        if not all(a > b for a, b in zip(e3s, e3s[1:])):
            bad.append(f"{phi.label}:e3={e3s}")
    check("consistency-decay-smooth", not bad, "; ".join(bad) or "all 8 modes decay")

    kh_table = residual_table(lambda mesh: kh_initial_field(KhSpec(seed=42), mesh, GAS), 2.0)
    for label in ("cos01", "cos02"):
        e2s = [kh_table[n][label].e2 for n in (16, 32, 64)]
        check(f"consistency-kh-e2-{label}", all(a > b for a, b in zip(e2s, e2s[1:])),
              f"e2={['%.3e' % v for v in e2s]}")
    e4s = [kh_table[n]["cos00"].e4 for n in (16, 32, 64)]
    e4s += [table[n]["cos00"].e4 for n in (16, 32, 64)]
    check("consistency-e4-sign", all(v >= -1e-8 for v in e4s),
          f"min e4={min(e4s):.2e}")


def test_wasserstein_matches_brute_force():
    pytest.importorskip("scipy")
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(1000):
        ka, kb = rng.integers(1, 6, 2)
        va, vb = rng.normal(0, 3, ka), rng.normal(0, 3, kb)
        wa = np.abs(rng.normal(1, 0.5, ka)) + 0.1
        wb = np.abs(rng.normal(1, 0.5, kb)) + 0.1
        wa, wb = wa / wa.sum(), wb / wb.sum()
        worst = max(worst, abs(w1_samples(va, wa, vb, wb) - brute_force_w1(va, wa, vb, wb)))
    check("wasserstein-oracle", worst <= 1e-9, f"worst abs err={worst:.2e}")


@pytest.mark.paper_scale
@pytest.mark.skipif(os.environ.get("VFVLAB_PAPER_SCALE") != "1",
                    reason="paper-scale hierarchy is a multi-hour opt-in run")
def test_paper_scale_table1_order_of_magnitude():
    config = RunConfig(paper_scale=True, t_end=2.0, output_dt=0.02, kh=KhSpec(seed=42))
    start = time.perf_counter()
    result = run_hierarchy(config)
    runtime = time.perf_counter() - start
    int_de = result.integrals["int_DE"]
    int_dent = result.integrals["int_DEnt"]
    ok_de = 0.0264 / 3.0 <= int_de <= 0.0264 * 3.0
    ok_dent = 0.0144 / 3.0 <= int_dent <= 0.0144 * 3.0
    check("paper-scale-table1", ok_de and ok_dent,
          f"int_DE={int_de:.4f} (target 0.0264/3x) int_DEnt={int_dent:.4f} "
          f"(target 0.0144/3x) runtime={runtime / 3600:.2f}h")
