import numpy as np
import pytest

from vfvlab.diagnostics import cesaro_build
from vfvlab.eos import GasParams
from vfvlab.grid import Mesh
from vfvlab.measures import (
    EmpiricalMeasure,
    measure_distance_field,
    sliced_wasserstein,
    w1_samples,
    wasserstein1_scalar,
    write_distance_field_csv,
    young_measure_at,
)

from conftest import random_field


def brute_force_w1(values_a, weights_a, values_b, weights_b):
    """LP optimal transport with |x - y| cost (scipy HiGHS)."""
    from scipy.optimize import linprog

    na, nb = len(values_a), len(values_b)
    cost = np.abs(np.subtract.outer(values_a, values_b)).ravel()
    a_eq = []
    b_eq = []
    for i in range(na):
        row = np.zeros(na * nb)
        row[i * nb:(i + 1) * nb] = 1.0
        a_eq.append(row)
        b_eq.append(weights_a[i])
    for j in range(nb):
        row = np.zeros(na * nb)
        row[j::nb] = 1.0
        a_eq.append(row)
        b_eq.append(weights_b[j])
    res = linprog(cost, A_eq=np.array(a_eq), b_eq=np.array(b_eq), bounds=(0, None),
                  method="highs")
    assert res.success
    return res.fun


def measure_from(values, weights=None):
    k = len(values)
    atoms = np.zeros((k, 4))
    atoms[:, 0] = values
    w = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, float)
    return EmpiricalMeasure(atoms, w)


def test_measure_validation():
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.zeros((2, 4)), np.array([0.6, 0.6]))
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.zeros((2, 4)), np.array([-0.2, 1.2]))
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.zeros((2, 3)), np.array([0.5, 0.5]))


def test_young_measure_atoms_match_members(gas):
    rng = np.random.default_rng(30)
    members = [random_field(rng, Mesh(4), gas) for _ in range(3)]
    members = [members[0], members[0], members[1]]  # duplicates retained
    ens = cesaro_build(members, gas)
    m = young_measure_at(ens, 1, 2)
    assert m.atoms.shape == (3, 4)
    np.testing.assert_array_equal(m.weights, [1 / 3, 1 / 3, 1 / 3])
    for k, member in enumerate(ens.members):
        np.testing.assert_array_equal(m.atoms[k], member.data[:, 1, 2])
    assert np.array_equal(m.atoms[0], m.atoms[1])
    with pytest.raises(IndexError):
        young_measure_at(ens, 4, 0)


def test_w1_simple_cases():
    a = measure_from([1.0])
    b = measure_from([3.5])
    assert wasserstein1_scalar(a, a) == 0.0
    assert wasserstein1_scalar(a, b) == pytest.approx(2.5, abs=1e-15)
    # uniform atoms {0, 1} vs {0, 2} -> 0.5 (brute-force coupling)
    c = measure_from([0.0, 1.0])
    d = measure_from([0.0, 2.0])
    assert wasserstein1_scalar(c, d) == pytest.approx(0.5, abs=1e-15)


def test_w1_metric_axioms():
    rng = np.random.default_rng(31)
    for _ in range(300):
        ka, kb, kc = rng.integers(1, 6, 3)
        va, vb, vc = (rng.normal(0, 2, k) for k in (ka, kb, kc))
        wa, wb, wc = (np.abs(rng.normal(1, 0.3, k)) + 0.05 for k in (ka, kb, kc))
        wa, wb, wc = wa / wa.sum(), wb / wb.sum(), wc / wc.sum()
        dab = w1_samples(va, wa, vb, wb)
        dba = w1_samples(vb, wb, va, wa)
        assert dab == dba  # symmetry, exactly
        assert w1_samples(va, wa, va, wa) <= 1e-14
        dac = w1_samples(va, wa, vc, wc)
        dcb = w1_samples(vc, wc, vb, wb)
        assert dab <= dac + dcb + 1e-12


def test_w1_matches_brute_force_ot():
    pytest.importorskip("scipy")
    rng = np.random.default_rng(32)
    for _ in range(100):
        ka, kb = rng.integers(1, 6, 2)
        va, vb = rng.normal(0, 3, ka), rng.normal(0, 3, kb)
        wa = np.abs(rng.normal(1, 0.5, ka)) + 0.1
        wb = np.abs(rng.normal(1, 0.5, kb)) + 0.1
        wa, wb = wa / wa.sum(), wb / wb.sum()
        fast = w1_samples(va, wa, vb, wb)
        slow = brute_force_w1(va, wa, vb, wb)
        assert fast == pytest.approx(slow, abs=1e-9)


def test_distance_field_zero_for_identical(gas):
    rng = np.random.default_rng(33)
    members = [random_field(rng, Mesh(4), gas) for _ in range(2)]
    ens = cesaro_build(members, gas)
    dist, agg = measure_distance_field(ens, ens, component="rho")
    assert np.all(dist == 0.0) and agg == 0.0


def test_distance_field_single_cell_difference(gas):
    base = random_field(np.random.default_rng(34), Mesh(4), gas)
    data = np.array(base.data)
    data[0, 2, 2] += 0.75
    other = base.with_data(data)
    ens_a = cesaro_build([base], gas)
    ens_b = cesaro_build([other], gas)
    dist, agg = measure_distance_field(ens_a, ens_b, component=0)
    assert dist[2, 2] == pytest.approx(0.75, abs=1e-15)
    mask = np.ones_like(dist, dtype=bool)
    mask[2, 2] = False
    assert np.all(dist[mask] == 0.0)
    assert agg == pytest.approx(0.75 * ens_a.mesh.h ** 2, rel=1e-14)
    with pytest.raises(ValueError):
        bigger = cesaro_build([random_field(np.random.default_rng(1), Mesh(8), gas)], gas)
        measure_distance_field(ens_a, bigger)


def test_sliced_variant_seeded(gas):
    rng = np.random.default_rng(35)
    a = EmpiricalMeasure(rng.normal(size=(3, 4)), np.full(3, 1 / 3))
    b = EmpiricalMeasure(rng.normal(size=(4, 4)), np.full(4, 0.25))
    d1 = sliced_wasserstein(a, b, seed=7)
    d2 = sliced_wasserstein(a, b, seed=7)
    assert d1 == d2 and d1 > 0.0
    assert sliced_wasserstein(a, a, seed=7) <= 1e-14


def test_distance_field_csv(tmp_path, gas):
    rng = np.random.default_rng(36)
    ens = cesaro_build([random_field(rng, Mesh(4), gas) for _ in range(2)], gas)
    dist, agg = measure_distance_field(ens, ens)
    path = tmp_path / "dist.csv"
    write_distance_field_csv(dist, agg, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "i,j,dist"
    assert lines[-1].startswith("aggregate,q=1,")
    assert len(lines) == 1 + 16 + 1
