"""Measured topology: 1-D zero counts, sign grids, and cubical Z2 homology.

Sets are discretized by cell-center sampling on axis-aligned boxes.  The
homology of a flagged region is computed from the cubical complex spanned
by the flagged top cells and all their faces, reducing boundary matrices
over Z2 (bit-packed Gaussian elimination).  Connected components are also
available through an independent union-find pass, which doubles as an
oracle for b_0.

Betti numbers and zero counts are what the architecture-only bounds
control, so the measuring code keeps to pedestrian, auditable numerics:
plain bisection for roots, exact integer ranks mod 2 for homology.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetError, DomainError, ShapeError

DEFAULT_CELL_BUDGET = 1 << 22


# -- grids -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SignGrid:
    """One bit per cell of a regular grid over an axis-aligned box."""

    box: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]
    flags: np.ndarray

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        res = tuple(int(n) for n in self.resolution)
        if len(box) != len(res):
            raise ShapeError("box and resolution dimensions differ")
        if any(not lo < hi for lo, hi in box):
            raise ShapeError("box axes must be nonempty intervals")
        if any(n < 2 for n in res):
            raise ShapeError("resolution must be >= 2 per axis")
        flags = np.asarray(self.flags, dtype=bool)
        if flags.shape != res:
            raise ShapeError(f"flags shape {flags.shape} != resolution {res}")
        flags = flags.copy()
        flags.flags.writeable = False
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "resolution", res)
        object.__setattr__(self, "flags", flags)

    @property
    def dim(self) -> int:
        return len(self.resolution)

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.resolution))

    def flagged_count(self) -> int:
        return int(np.count_nonzero(self.flags))


def cell_centers(
    box: Sequence[tuple[float, float]], resolution: Sequence[int]
) -> np.ndarray:
    """Centers of all grid cells in C order, shape (prod(res), d)."""
    axes = []
    for (lo, hi), n in zip(box, resolution):
        width = (hi - lo) / n
        axes.append(lo + width * (np.arange(n) + 0.5))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel(order="C") for m in mesh], axis=1)


def sign_grid(
    f: Callable[[np.ndarray], np.ndarray],
    box: Sequence[tuple[float, float]],
    resolution: int | Sequence[int],
    tau: float = 0.0,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> SignGrid:
    """Flag cells with f(center) >= tau.  ``f`` maps (N, d) -> (N,).

    Evaluation failures are re-raised with the offending cell index.
    """
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    if isinstance(resolution, int):
        resolution = (resolution,) * len(box)
    resolution = tuple(int(n) for n in resolution)
    cells = int(np.prod(resolution))
    if cells > cell_budget:
        raise BudgetError(f"{cells} cells exceed the budget {cell_budget}")
    centers = cell_centers(box, resolution)
    try:
        vals = np.asarray(f(centers), dtype=float)
    except DomainError:
        _raise_with_cell(f, centers, resolution)
        raise
    if vals.shape != (cells,):
        raise ShapeError("evaluator must map (N, d) to (N,)")
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = np.unravel_index(int(np.flatnonzero(bad)[0]), resolution)
        raise DomainError(f"non-finite value at cell {tuple(int(i) for i in idx)}")
    return SignGrid(box, resolution, (vals >= tau).reshape(resolution))


def _raise_with_cell(f, centers, resolution):
    for j in range(centers.shape[0]):
        try:
            f(centers[j : j + 1])
        except DomainError as exc:
            idx = np.unravel_index(j, resolution)
            raise DomainError(
                f"evaluation failed at cell {tuple(int(i) for i in idx)}: {exc}"
            ) from exc


# -- connected components ----------------------------------------------------------


class _UnionFind:
    __slots__ = ("parent", "count")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.count = n

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra
            self.count -= 1


def components(grid: SignGrid) -> int:
    """Number of face-adjacent connected components of the flagged cells."""
    flags = grid.flags
    n_flagged = int(np.count_nonzero(flags))
    if n_flagged == 0:
        return 0
    labels = -np.ones(grid.resolution, dtype=np.int64)
    labels[flags] = np.arange(n_flagged)
    uf = _UnionFind(n_flagged)
    d = grid.dim
    for axis in range(d):
        lo = [slice(None)] * d
        hi = [slice(None)] * d
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        both = flags[tuple(lo)] & flags[tuple(hi)]
        a = labels[tuple(lo)][both]
        b = labels[tuple(hi)][both]
        for i, j in zip(a.tolist(), b.tolist()):
            uf.union(i, j)
    return uf.count


# -- cubical complex and Z2 homology --------------------------------------------------


def _pack_rows(n_rows: int, n_cols: int, row_idx: np.ndarray, col_idx: np.ndarray):
    width = (n_cols + 7) // 8
    packed = np.zeros((n_rows, width), dtype=np.uint8)
    bits = (np.uint8(1) << (7 - (col_idx & 7)).astype(np.uint8)).astype(np.uint8)
    np.bitwise_or.at(packed, (row_idx, col_idx >> 3), bits)
    return packed


def gf2_rank(n_rows: int, n_cols: int, row_idx, col_idx) -> int:
    """Rank over Z2 of the 0/1 matrix with ones at (row_idx, col_idx).

    Bit-packed Gaussian elimination over the orientation with fewer columns
    (rank is transpose-invariant).  Columns are swept in chunks whose bytes
    are cached over the active rows, so each pivot search touches a short
    contiguous block; pivot rows leave the active set at chunk boundaries.
    """
    if n_rows == 0 or n_cols == 0:
        return 0
    row_idx = np.asarray(row_idx, dtype=np.intp)
    col_idx = np.asarray(col_idx, dtype=np.intp)
    if n_cols > n_rows:
        n_rows, n_cols = n_cols, n_rows
        row_idx, col_idx = col_idx, row_idx
    rows = _pack_rows(n_rows, n_cols, row_idx, col_idx)
    rank = 0
    limit = min(n_rows, n_cols)
    for lb in range((n_cols + 7) // 8):
        # One scan of the byte column serves its 8 bit columns; zeroed pivot
        # rows drop out of every later scan.
        nz = np.flatnonzero(rows[:, lb])
        if nz.size == 0:
            continue
        for b in range(8):
            col = lb * 8 + b
            if col >= n_cols:
                break
            bit = np.uint8(1 << (7 - b))
            sub = nz[(rows[nz, lb] & bit) != 0]
            if sub.size == 0:
                continue
            piv = sub[0]
            if sub.size > 1:
                rows[sub[1:]] ^= rows[piv]
            rows[piv] = 0
            rank += 1
            if rank == limit:
                return rank
    return rank


class CubicalComplex:
    """Cubical complex of the flagged cells of a grid plus all their faces.

    A cell is a tuple per axis of (coordinate, extent) with extent 1 for a
    full interval [i, i+1] and 0 for the degenerate vertex {i}; its dimension
    is the number of extended axes.  Boundaries are mod-2: each face of a
    j-cell appears exactly once.
    """

    def __init__(self, grid: SignGrid):
        d = grid.dim
        self.dim = d
        by_dim: list[set] = [set() for _ in range(d + 1)]
        top = [
            tuple((int(i), 1) for i in idx) for idx in np.argwhere(grid.flags)
        ]
        by_dim[d].update(top)
        for j in range(d, 0, -1):
            for cell in by_dim[j]:
                for face in _cell_faces(cell):
                    by_dim[j - 1].add(face)
        self.cells = [sorted(by_dim[j]) for j in range(d + 1)]
        self.index = [
            {cell: i for i, cell in enumerate(level)} for level in self.cells
        ]

    def n_cells(self, j: int) -> int:
        return len(self.cells[j])

    def boundary_pairs(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Incidence of the boundary map C_j -> C_{j-1}: (face_rows, cell_cols)."""
        rows, cols = [], []
        lower = self.index[j - 1]
        for ci, cell in enumerate(self.cells[j]):
            for face in _cell_faces(cell):
                rows.append(lower[face])
                cols.append(ci)
        return np.asarray(rows, dtype=np.intp), np.asarray(cols, dtype=np.intp)

    def boundary_rank(self, j: int) -> int:
        if j < 1 or j > self.dim or not self.cells[j]:
            return 0
        rows, cols = self.boundary_pairs(j)
        # Eliminate over the transpose: one row per j-cell, bits over faces.
        return gf2_rank(self.n_cells(j), self.n_cells(j - 1), cols, rows)

    def euler_characteristic(self) -> int:
        return sum((-1) ** j * self.n_cells(j) for j in range(self.dim + 1))


def _cell_faces(cell):
    for axis, (coord, extent) in enumerate(cell):
        if extent:
            low = cell[:axis] + ((coord, 0),) + cell[axis + 1 :]
            high = cell[:axis] + ((coord + 1, 0),) + cell[axis + 1 :]
            yield low
            yield high


@dataclass(frozen=True)
class BettiVector:
    """Z2 homology ranks b_0..b_k of a sampled set."""

    b: tuple[int, ...]

    def __post_init__(self):
        if any(x < 0 for x in self.b):
            raise ValueError("Betti numbers are nonnegative")

    @property
    def total(self) -> int:
        return sum(self.b)

    def __getitem__(self, i: int) -> int:
        return self.b[i]


def betti_z2(grid: SignGrid, cell_budget: int = DEFAULT_CELL_BUDGET) -> BettiVector:
    """Betti numbers of the flagged region via boundary reduction over Z2.

    Full vector for dim <= 3; dim 4 returns b_0 only (union-find path).
    """
    d = grid.dim
    if d > 4:
        raise ShapeError("homology supported up to dimension 4 (b_0 only at 4)")
    if d == 4:
        return BettiVector((components(grid),))
    if grid.flagged_count() > cell_budget:
        raise BudgetError("flagged cell count exceeds the budget")
    complex_ = CubicalComplex(grid)
    ranks = [complex_.boundary_rank(j) for j in range(d + 2)]  # ranks[0] = 0 pad
    b = []
    for j in range(d + 1):
        nj = complex_.n_cells(j)
        rank_j = ranks[j] if j >= 1 else 0
        rank_next = ranks[j + 1] if j + 1 <= d else 0
        b.append(nj - rank_j - rank_next)
    return BettiVector(tuple(b))


@dataclass(frozen=True, eq=False)
class StabilityReport:
    """Betti vectors at a resolution and its double; stable when they agree."""

    betti: BettiVector
    doubled: BettiVector
    stable: bool


def betti_with_stability(
    f: Callable[[np.ndarray], np.ndarray],
    box: Sequence[tuple[float, float]],
    resolution: int | Sequence[int],
    tau: float = 0.0,
) -> StabilityReport:
    if isinstance(resolution, int):
        resolution = (resolution,) * len(box)
    base = betti_z2(sign_grid(f, box, resolution, tau))
    doubled = betti_z2(sign_grid(f, box, tuple(2 * n for n in resolution), tau))
    return StabilityReport(base, doubled, base.b == doubled.b)


# -- 1-D zeros and superlevel intervals --------------------------------------------------


@dataclass(frozen=True)
class ZeroSearchOptions:
    """Sampling and refinement controls for 1-D zero counting."""

    initial_samples: int = 4097
    refine_tol: float = 1e-10
    tangential_floor: float = 1e-9
    identity_floor: float = 1e-13
    dip_samples: int = 65
    dip_rounds: int = 3


@dataclass(frozen=True)
class ZeroCount:
    """Transversal zeros found on an interval; tangential candidates listed apart."""

    count: int
    locations: tuple[float, ...]
    tangential: tuple[float, ...]
    identically_zero: bool


def _bisect_many(f, los: np.ndarray, his: np.ndarray, tol: float) -> np.ndarray:
    if los.size == 0:
        return los
    flo = np.asarray(f(los), dtype=float)
    for _ in range(80):
        if np.max(his - los) <= tol:
            break
        mids = 0.5 * (los + his)
        fm = np.asarray(f(mids), dtype=float)
        same = (np.sign(fm) == np.sign(flo)) & (fm != 0.0)
        los = np.where(same, mids, los)
        flo = np.where(same, fm, flo)
        his = np.where(same, his, mids)
    return 0.5 * (los + his)


def count_zeros_1d(
    f: Callable[[np.ndarray], np.ndarray],
    interval: tuple[float, float],
    opts: ZeroSearchOptions | None = None,
) -> ZeroCount:
    """Count distinct sign-change zeros of an analytic scalar map on an interval.

    Sign changes on an initial uniform sample are bisected to width
    ``refine_tol``.  Dips of |f| without a sign change are re-sampled at
    finer scale (``dip_rounds`` levels) to catch close zero pairs; a dip
    that bottoms out below ``tangential_floor * max|f|`` is reported as a
    tangential candidate but never counted.  If every sample is below
    ``identity_floor``, the result flags an identically-zero candidate.
    """
    opts = opts or ZeroSearchOptions()
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ValueError("empty interval")
    pad = (hi - lo) * 1e-9
    xs = np.linspace(lo + pad, hi - pad, opts.initial_samples)
    fx = np.asarray(f(xs), dtype=float)
    if fx.shape != xs.shape:
        raise ShapeError("evaluator must be vectorized: (N,) -> (N,)")
    scale = float(np.max(np.abs(fx)))
    if scale <= opts.identity_floor:
        return ZeroCount(0, (), (), True)
    floor = opts.tangential_floor * scale

    zeros: list[float] = [float(x) for x in xs[fx == 0.0]]
    nz = fx != 0.0
    xs_nz, fx_nz = xs[nz], fx[nz]
    sgn = np.sign(fx_nz)
    flips = np.flatnonzero(sgn[:-1] * sgn[1:] < 0)
    roots = _bisect_many(f, xs_nz[flips], xs_nz[flips + 1], opts.refine_tol)
    zeros.extend(float(x) for x in roots)

    # Zoom into every dip of |f|; re-found zeros are removed by the dedupe
    # pass, so no adjacency bookkeeping is needed.
    tangential: list[float] = []
    absf = np.abs(fx)
    interior = np.flatnonzero(
        (absf[1:-1] < absf[:-2]) & (absf[1:-1] <= absf[2:])
    ) + 1
    for i in interior:
        if fx[i] == 0.0:
            continue
        found, touch = _refine_dip(f, float(xs[i - 1]), float(xs[i + 1]), floor, opts)
        zeros.extend(found)
        if touch is not None:
            tangential.append(touch)

    zeros.sort()
    merged: list[float] = []
    min_sep = max(4.0 * opts.refine_tol, (hi - lo) * 1e-14)
    for z in zeros:
        if not merged or z - merged[-1] > min_sep:
            merged.append(z)
    return ZeroCount(len(merged), tuple(merged), tuple(sorted(tangential)), False)


def _refine_dip(f, a: float, b: float, floor: float, opts):
    """Zoom into a |f| dip: return (new zeros, tangential location or None)."""
    zeros: list[float] = []
    lo, hi = a, b
    for _ in range(opts.dip_rounds):
        xs = np.linspace(lo, hi, opts.dip_samples)
        fx = np.asarray(f(xs), dtype=float)
        sgn = np.sign(fx)
        flips = np.flatnonzero(sgn[:-1] * sgn[1:] < 0)
        if flips.size:
            roots = _bisect_many(f, xs[flips], xs[flips + 1], opts.refine_tol)
            zeros.extend(float(x) for x in roots)
            exact = xs[fx == 0.0]
            zeros.extend(float(x) for x in exact)
            return zeros, None
        j = int(np.argmin(np.abs(fx)))
        if fx[j] == 0.0:
            zeros.append(float(xs[j]))
            return zeros, None
        lo = xs[max(j - 1, 0)]
        hi = xs[min(j + 1, len(xs) - 1)]
    xs = np.linspace(lo, hi, opts.dip_samples)
    fx = np.asarray(f(xs), dtype=float)
    j = int(np.argmin(np.abs(fx)))
    if abs(fx[j]) <= floor:
        return zeros, float(xs[j])
    return zeros, None


def superlevel_intervals_1d(
    f: Callable[[np.ndarray], np.ndarray],
    interval: tuple[float, float],
    opts: ZeroSearchOptions | None = None,
) -> list[tuple[float, float]]:
    """Maximal subintervals of {f >= 0}, endpoints at zeros or the boundary.

    Zeros belong to the set, so the returned pieces are closed at interior
    zero endpoints and open at the interval boundary; adjacent nonnegative
    pieces are merged across a shared zero.
    """
    lo, hi = float(interval[0]), float(interval[1])
    zc = count_zeros_1d(f, (lo, hi), opts)
    if zc.identically_zero:
        return [(lo, hi)]
    cuts = [lo, *zc.locations, hi]
    kept: list[list[float]] = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        val = float(np.asarray(f(np.array([mid])), dtype=float)[0])
        if val >= 0.0:
            if kept and kept[-1][1] == a:
                kept[-1][1] = b
            else:
                kept.append([a, b])
    return [(a, b) for a, b in kept]


# -- reference scalar fields ---------------------------------------------------------


def scalar_fixture(name: str) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized 2-D reference fields with known superlevel-set topology.

    disk:      unit disk (contractible);
    annulus:   0.5 <= radius <= 1 (one loop);
    two_disks: two disjoint radius-0.5 disks at x = +/-0.9.
    """
    if name == "disk":
        return lambda X: 1.0 - X[:, 0] ** 2 - X[:, 1] ** 2
    if name == "annulus":
        def annulus(X):
            r2 = X[:, 0] ** 2 + X[:, 1] ** 2
            return np.minimum(r2 - 0.25, 1.0 - r2)

        return annulus
    if name == "two_disks":
        def two_disks(X):
            left = 0.25 - (X[:, 0] + 0.9) ** 2 - X[:, 1] ** 2
            right = 0.25 - (X[:, 0] - 0.9) ** 2 - X[:, 1] ** 2
            return np.maximum(left, right)

        return two_disks
    raise ValueError(f"unknown fixture {name!r}")


# -- run-length-encoded CSV export -------------------------------------------------------


def signgrid_to_rle(grid: SignGrid, metadata: dict | None = None) -> str:
    """Deterministic RLE text form: '# key=value' header lines, then runs.

    Runs are (offset, length) pairs over the C-order flattening of the
    flags.  ``box`` and ``resolution`` always appear in the header.
    """
    meta = dict(metadata or {})
    meta["box"] = [list(b) for b in grid.box]
    meta["resolution"] = list(grid.resolution)
    lines = [f"# {key}={json.dumps(meta[key], sort_keys=True)}" for key in sorted(meta)]
    lines.append("offset,length")
    flat = grid.flags.ravel(order="C").astype(np.int8)
    edges = np.flatnonzero(np.diff(flat, prepend=0, append=0))
    for start, stop in zip(edges[::2], edges[1::2]):
        lines.append(f"{int(start)},{int(stop - start)}")
    return "\n".join(lines) + "\n"


def signgrid_from_rle(text: str) -> tuple[SignGrid, dict]:
    meta: dict = {}
    runs: list[tuple[int, int]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line == "offset,length":
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = json.loads(value)
            continue
        off, length = (int(v) for v in line.split(","))
        runs.append((off, length))
    box = tuple((float(lo), float(hi)) for lo, hi in meta["box"])
    resolution = tuple(int(n) for n in meta["resolution"])
    flat = np.zeros(int(np.prod(resolution)), dtype=bool)
    for off, length in runs:
        flat[off : off + length] = True
    return SignGrid(box, resolution, flat.reshape(resolution)), meta
