"""Empirical Young measures over the mesh hierarchy and W1 diagnostics.

The per-cell measure is the uniform mixture of the member states; the
convergence certificate uses exact one-dimensional W1 distances computed
on scalar projections (state components, or seeded random directions for
the sliced variant).  W1 in 1D is the integral of |F_a - F_b| between the
two empirical CDFs, evaluated exactly on the merged support.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .diagnostics import CesaroEnsemble

COMPONENT_INDEX = {"rho": 0, "m_x": 1, "m_y": 2, "E": 3}


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted atoms in conservative state space (rho, m_x, m_y, E)."""

    atoms: np.ndarray    # (k, 4)
    weights: np.ndarray  # (k,)

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=np.float64))
        weights = np.asarray(self.weights, dtype=np.float64)
        if atoms.shape != (len(weights), 4):
            raise ValueError("atoms must be (k, 4) with k matching the weights")
        if np.any(weights < 0.0) or abs(weights.sum() - 1.0) > 1e-14:
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    def project(self, component) -> np.ndarray:
        idx = COMPONENT_INDEX.get(component, component)
        return self.atoms[:, idx]


def young_measure_at(ens: CesaroEnsemble, i: int, j: int) -> EmpiricalMeasure:
    """Uniform mixture of the member states at one cell; duplicates kept."""
    n = ens.mesh.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"cell ({i}, {j}) out of range for n={n}")
    atoms = np.stack([m.data[:, i, j] for m in ens.members])
    k = len(ens.members)
    return EmpiricalMeasure(atoms, np.full(k, 1.0 / k))


def w1_samples(values_a, weights_a, values_b, weights_b) -> float:
    """Exact W1 between two weighted 1D samples via the CDF integral."""
    va = np.asarray(values_a, dtype=np.float64)
    vb = np.asarray(values_b, dtype=np.float64)
    wa = np.asarray(weights_a, dtype=np.float64)
    wb = np.asarray(weights_b, dtype=np.float64)
    if len(va) == 0 or len(vb) == 0:
        raise ValueError("measures must be nonempty")
    oa = np.argsort(va, kind="stable")
    ob = np.argsort(vb, kind="stable")
    va, wa = va[oa], wa[oa]
    vb, wb = vb[ob], wb[ob]
    grid = np.union1d(va, vb)
    if len(grid) == 1:
        return 0.0
    cdf_a = np.cumsum(wa)
    cdf_b = np.cumsum(wb)
    fa = _cdf_at(va, cdf_a, grid[:-1])
    fb = _cdf_at(vb, cdf_b, grid[:-1])
    return float(np.sum(np.abs(fa - fb) * np.diff(grid)))


def _cdf_at(values, cdf, x):
    idx = np.searchsorted(values, x, side="right")
    out = np.zeros_like(x)
    nz = idx > 0
    out[nz] = cdf[idx[nz] - 1]
    return out


def wasserstein1_scalar(a: EmpiricalMeasure, b: EmpiricalMeasure, component=0) -> float:
    """W1 between two measures projected to one state component."""
    return w1_samples(a.project(component), a.weights, b.project(component), b.weights)


def sliced_wasserstein(a: EmpiricalMeasure, b: EmpiricalMeasure,
                       n_dirs: int = 16, seed: int = 0) -> float:
    """Mean W1 over fixed seeded random unit directions in state space."""
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_dirs, 4))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return float(np.mean([
        w1_samples(a.atoms @ d, a.weights, b.atoms @ d, b.weights) for d in dirs
    ]))


def measure_distance_field(ens_a: CesaroEnsemble, ens_b: CesaroEnsemble,
                           component=0, q: float = 1.0,
                           sliced_seed: int = 0):
    """Per-cell W1 between two ensembles plus the L^q domain aggregate.

    ``component`` selects a conservative component (index or name) or
    "sliced" for the seeded random-projection average.
    """
    if ens_a.mesh.n != ens_b.mesh.n:
        raise ValueError("ensembles live on different meshes")
    n = ens_a.mesh.n
    dist = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            ma = young_measure_at(ens_a, i, j)
            mb = young_measure_at(ens_b, i, j)
            if component == "sliced":
                dist[i, j] = sliced_wasserstein(ma, mb, seed=sliced_seed)
            else:
                dist[i, j] = wasserstein1_scalar(ma, mb, component)
    h2 = ens_a.mesh.h ** 2
    aggregate = float((dist ** q).sum() * h2) ** (1.0 / q)
    return dist, aggregate


def write_distance_field_csv(dist: np.ndarray, aggregate: float, path, q: float = 1.0) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("i", "j", "dist"))
        n = dist.shape[0]
        for i in range(n):
            for j in range(n):
                w.writerow((i, j, f"{dist[i, j]:.17g}"))
        w.writerow(("aggregate", f"q={q:g}", f"{aggregate:.17g}"))
