"""Uniform structured mesh on [0,1]^2, face maps, restriction and snapshot I/O.

Fields hold their four conservative components in a single (4, n, n)
float64 array; component index order is (rho, m_x, m_y, E), spatial index
(i, j) maps to the cell centered at ((i+0.5)h, (j+0.5)h).  Fields are
snapshots: their arrays are frozen after construction and every operation
returns a new field.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np

RHO, MX, MY, EN = 0, 1, 2, 3
COMPONENT_NAMES = ("rho", "m_x", "m_y", "E")

PERIODIC = "periodic"
REFLECTING = "reflecting"


@dataclass(frozen=True)
class Mesh:
    """n-by-n grid of square cells of size h = 1/n."""

    n: int
    bc: str = PERIODIC

    def __post_init__(self):
        if self.n < 4 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"mesh size must be a power of two >= 4, got {self.n}")
        if self.bc not in (PERIODIC, REFLECTING):
            raise ValueError(f"unknown boundary mode {self.bc!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def num_cells(self) -> int:
        return self.n * self.n

    @property
    def num_faces(self) -> int:
        if self.bc == PERIODIC:
            return 2 * self.n * self.n
        return 2 * self.n * (self.n + 1)


@dataclass(frozen=True)
class ConservativeField:
    """Immutable snapshot of the conservative state at one time level."""

    mesh: Mesh
    time: float
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.mesh.n
        if self.data.shape != (4, n, n):
            raise ValueError(f"field data must have shape (4, {n}, {n}), got {self.data.shape}")
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def rho(self) -> np.ndarray:
        return self.data[RHO]

    @property
    def mom_x(self) -> np.ndarray:
        return self.data[MX]

    @property
    def mom_y(self) -> np.ndarray:
        return self.data[MY]

    @property
    def energy(self) -> np.ndarray:
        return self.data[EN]

    def with_data(self, data: np.ndarray, time=None) -> "ConservativeField":
        return ConservativeField(self.mesh, self.time if time is None else time, data)

    def at_time(self, time: float) -> "ConservativeField":
        return replace(self, time=time)


def totals(fld: ConservativeField) -> np.ndarray:
    """Domain integrals (sum * h^2) of the four conserved quantities."""
    h2 = fld.mesh.h ** 2
    return fld.data.sum(axis=(1, 2)) * h2


def cell_center(mesh: Mesh, i: int, j: int):
    if not (0 <= i < mesh.n and 0 <= j < mesh.n):
        raise IndexError(f"cell index ({i}, {j}) out of range for n={mesh.n}")
    return ((i + 0.5) * mesh.h, (j + 0.5) * mesh.h)


def cell_centers(mesh: Mesh):
    """Meshgrid arrays (n, n) of the cell-center coordinates."""
    c = (np.arange(mesh.n) + 0.5) * mesh.h
    return np.meshgrid(c, c, indexing="ij")


def face_neighbors(mesh: Mesh, face: int):
    """Left/right cells and unit normal of one face.

    Faces are enumerated x-normal first, then y-normal; the unit normal
    always points from the left cell to the right cell (+x or +y).  Under
    periodic closure both sides are real cells (the wrap supplies the
    neighbor); under reflecting closure a wall face has ``None`` on its
    outside and the flux uses the mirror ghost of the inner cell.
    """
    n = mesh.n
    if not (0 <= face < mesh.num_faces):
        raise IndexError(f"face index {face} out of range")
    if mesh.bc == PERIODIC:
        if face < n * n:
            i, j = divmod(face, n)
            return (i, j), ((i + 1) % n, j), (1.0, 0.0)
        i, j = divmod(face - n * n, n)
        return (i, j), (i, (j + 1) % n), (0.0, 1.0)
    # reflecting: n+1 face lines per direction, the outermost are walls
    per_dir = n * (n + 1)
    if face < per_dir:
        line, j = divmod(face, n)
        left = (line - 1, j) if line > 0 else None
        right = (line, j) if line < n else None
        return left, right, (1.0, 0.0)
    line, i = divmod(face - per_dir, n)
    left = (i, line - 1) if line > 0 else None
    right = (i, line) if line < n else None
    return left, right, (0.0, 1.0)


def restrict(fine: ConservativeField, coarse_mesh: Mesh) -> ConservativeField:
    """Conservative block average of a fine field onto a nested coarse mesh.

    Each coarse cell is the arithmetic mean of its k x k fine children,
    which preserves the four domain totals exactly up to summation
    roundoff.
    """
    nf, nc = fine.mesh.n, coarse_mesh.n
    if nf % nc != 0:
        raise ValueError(f"meshes not nested: fine n={nf}, coarse n={nc}")
    k = nf // nc
    if k == 1:
        return ConservativeField(coarse_mesh, fine.time, fine.data)
    blocks = fine.data.reshape(4, nc, k, nc, k)
    return ConservativeField(coarse_mesh, fine.time, blocks.mean(axis=(2, 4)))


# ---------------------------------------------------------------------------
# Snapshot file format (VFV1): one ASCII header line, then the raw field.
#   VFV1 n=<n> t=<time> gamma=<g>\n
# followed by n^2 * 4 little-endian float64, component planes (rho, m_x,
# m_y, E) each stored row-major (i slow, j fast).

def write_snapshot(fld: ConservativeField, path, gamma: float) -> None:
    header = f"VFV1 n={fld.mesh.n} t={fld.time!r} gamma={gamma!r}\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(np.ascontiguousarray(fld.data, dtype="<f8").tobytes())


def read_snapshot(path, bc: str = PERIODIC):
    """Read a VFV1 file; returns (field, gamma).

    Raises ValueError naming the byte offset when the header is malformed.
    """
    with open(path, "rb") as f:
        header = f.readline()
        if not header.startswith(b"VFV1 "):
            raise ValueError(f"{path}: not a VFV1 snapshot (bad magic at byte 0)")
        try:
            fields = dict(tok.split(b"=", 1) for tok in header.split()[1:])
            n = int(fields[b"n"])
            t = float(fields[b"t"])
            gamma = float(fields[b"gamma"])
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{path}: malformed VFV1 header before byte {len(header)}: {exc}") from None
        raw = f.read(4 * n * n * 8)
        if len(raw) != 4 * n * n * 8:
            raise ValueError(f"{path}: truncated payload at byte {len(header) + len(raw)}")
    data = np.frombuffer(raw, dtype="<f8").reshape(4, n, n)
    return ConservativeField(Mesh(n, bc=bc), t, data), gamma


def write_density_pgm(fld: ConservativeField, path) -> None:
    """16-bit binary PGM quicklook of the density (y up, x right)."""
    rho = fld.rho
    lo, hi = float(rho.min()), float(rho.max())
    span = hi - lo
    if span <= 0.0:
        scaled = np.full_like(rho, 32768.0)
    else:
        scaled = (rho - lo) * (65535.0 / span)
    # image rows run top to bottom; row 0 is y = 1
    img = np.flipud(scaled.T).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{fld.mesh.n} {fld.mesh.n}\n65535\n".encode("ascii"))
        f.write(img.tobytes())
