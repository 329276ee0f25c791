"""Vector field families, iterated Lie brackets, and rank-drop loci.

A family holds m fields on a box in R^d whose coordinate components are
either networks of one shared architecture or polynomial fixtures.  Bracket
values come from truncated Taylor jets: the coordinate formula

    [X, Y]_a = sum_b (X_b * d_b Y_a  -  Y_b * d_b X_a)

consumes one jet order per nesting level, so a bracket of length lambda
evaluated to jet order w needs component jets of order w + lambda - 1.
Columns of the bracket matrix A_k(z) are the bracket values at z in the
enumeration order (by length, then lexicographic), which makes the column
list at depth k a prefix of the list at depth k+1.

The rank-drop locus {rank A_k(z) <= rho} is sampled on a grid either via
singular values (relative tolerance) or via the max absolute (rho+1)-minor
(threshold epsilon).  Since a measure-zero locus generically misses all
cell centers, epsilon="auto" widens the test to cell scale: half the
largest adjacent-cell increment among the minors, i.e. a first-order test
for "the locus could cross this cell".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import BudgetError, ShapeError
from .jets import TaylorSeries, jet_space
from .network import NetworkSpec, _jet_series, network_from_json, network_to_json
from .polynomials import SparsePoly
from .topology import SignGrid, cell_centers

MAX_BRACKET_DEPTH = 5
MAX_AMBIENT_DIM = 4
DEFAULT_CELL_BUDGET = 1 << 22


# -- bracket terms ---------------------------------------------------------------


def _tree_length(tree) -> int:
    if isinstance(tree, int):
        return 1
    return _tree_length(tree[0]) + _tree_length(tree[1])


def _tree_str(tree) -> str:
    if isinstance(tree, int):
        return f"X{tree}"
    return f"[{_tree_str(tree[0])},{_tree_str(tree[1])}]"


@dataclass(frozen=True)
class BracketTerm:
    """A formal iterated bracket: a binary tree with generator leaves 1..m."""

    tree: int | tuple

    @property
    def length(self) -> int:
        return _tree_length(self.tree)

    def __str__(self) -> str:
        return _tree_str(self.tree)


def _lyndon_words(m: int, maxlen: int) -> list[tuple[int, ...]]:
    # Duval's generator: all Lyndon words over {1..m} of length <= maxlen, lex order.
    out: list[tuple[int, ...]] = []
    w = [0]
    while w:
        w[-1] += 1
        out.append(tuple(w))
        base = len(w)
        while len(w) < maxlen:
            w.append(w[len(w) - base])
        while w and w[-1] == m:
            w.pop()
    return out


def _is_lyndon(word: tuple[int, ...]) -> bool:
    return all(word < word[i:] for i in range(1, len(word)))


def _standard_bracketing(word: tuple[int, ...]):
    if len(word) == 1:
        return word[0]
    # Split at the longest proper suffix that is itself Lyndon.
    for i in range(1, len(word)):
        if _is_lyndon(word[i:]):
            return (_standard_bracketing(word[:i]), _standard_bracketing(word[i:]))
    raise AssertionError(f"not a Lyndon word: {word}")


@lru_cache(maxsize=None)
def _all_trees(m: int, length: int) -> tuple:
    if length == 1:
        return tuple(range(1, m + 1))
    out = []
    for split in range(1, length):
        for left in _all_trees(m, split):
            for right in _all_trees(m, length - split):
                out.append((left, right))
    return tuple(out)


def enumerate_brackets(m: int, k: int, mode: str = "hall") -> list[BracketTerm]:
    """The bracket set of length <= k, deterministic (length, lex) order.

    "hall" gives the standard bracketings of Lyndon words (a basis whose
    span agrees with the full bracket set); "all_trees" gives every formal
    bracketing of every generator word.
    """
    if m < 1 or k < 1:
        raise ValueError("need m >= 1 and k >= 1")
    if mode == "hall":
        words = sorted(_lyndon_words(m, k), key=lambda w: (len(w), w))
        return [BracketTerm(_standard_bracketing(w)) for w in words]
    if mode == "all_trees":
        out = []
        for length in range(1, k + 1):
            out.extend(BracketTerm(t) for t in _all_trees(m, length))
        return out
    raise ValueError(f"unknown bracket mode {mode!r}")


# -- families ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VectorFieldFamily:
    """m vector fields on R^d with network or polynomial components.

    ``components[i][p]`` provides the p-th coordinate of field i+1.  Network
    components must share one architecture and activation; polynomial
    components (fixtures) are plain polynomials in the ambient coordinates.
    Kinds cannot be mixed.
    """

    d: int
    m: int
    components: tuple[tuple[object, ...], ...]

    def __post_init__(self):
        if self.d < 1 or self.m < 1:
            raise ShapeError("need d >= 1 and m >= 1")
        if len(self.components) != self.m or any(
            len(row) != self.d for row in self.components
        ):
            raise ShapeError("components must form an m x d grid")
        flat = [c for row in self.components for c in row]
        if all(isinstance(c, NetworkSpec) for c in flat):
            arch = None
            for net in flat:
                sig = (net.d, net.L, net.widths, net.activation.name)
                if net.d != self.d:
                    raise ShapeError("component networks must take d inputs")
                if arch is None:
                    arch = sig
                elif sig != arch:
                    raise ShapeError("component networks must share one architecture")
            object.__setattr__(self, "_kind", "network")
        elif all(isinstance(c, SparsePoly) for c in flat):
            for poly in flat:
                if poly.nx != self.d or poly.ny != 0:
                    raise ShapeError("fixture polynomials must use the d ambient variables")
            object.__setattr__(self, "_kind", "polynomial")
        else:
            raise ShapeError("components must be all networks or all polynomials")

    @property
    def kind(self) -> str:
        return self._kind


def polynomial_family(d: int, component_polys: Sequence[Sequence[SparsePoly]]) -> VectorFieldFamily:
    return VectorFieldFamily(d, len(component_polys), tuple(tuple(r) for r in component_polys))


def sampled_network_family(
    d: int,
    m: int,
    L: int,
    widths: Sequence[int],
    activation,
    *,
    seed: int,
    scale: float = 1.0,
) -> VectorFieldFamily:
    """m*d component networks of one architecture, seeds seed*10000 + i*d + p."""
    from .network import sample_network

    rows = []
    for i in range(m):
        row = []
        for p in range(d):
            row.append(
                sample_network(
                    d, L, widths, activation,
                    seed=seed * 10_000 + i * d + p, scale=scale,
                )
            )
        rows.append(tuple(row))
    return VectorFieldFamily(d, m, tuple(rows))


def grushin_family() -> VectorFieldFamily:
    """X1 = d/dx, X2 = x d/dy on R^2; rank drops exactly on {x = 0} at depth 1."""
    one = SparsePoly.constant(2, 0, 1.0)
    zero = SparsePoly.zero(2, 0)
    x = SparsePoly.x_var(2, 0, 0)
    return polynomial_family(2, [[one, zero], [zero, x]])


def heisenberg_family() -> VectorFieldFamily:
    """X1 = d/dx - (y/2) d/dt, X2 = d/dy + (x/2) d/dt on R^3; full rank at depth 2."""
    one = SparsePoly.constant(3, 0, 1.0)
    zero = SparsePoly.zero(3, 0)
    x = SparsePoly.x_var(3, 0, 0)
    y = SparsePoly.x_var(3, 0, 1)
    return polynomial_family(
        3,
        [[one, zero, -0.5 * y], [zero, one, 0.5 * x]],
    )


# -- jet evaluation of brackets -------------------------------------------------------


def _poly_series(poly: SparsePoly, order: int, Z: np.ndarray) -> TaylorSeries:
    space = jet_space(poly.nx, order)
    coeffs = np.zeros((len(space), Z.shape[0]))
    derivs: dict[tuple[int, ...], SparsePoly] = {(0,) * poly.nx: poly}
    import math as _math

    for pos, alpha in enumerate(space.indices):
        if alpha not in derivs:
            # Differentiate from the predecessor along the last raised axis.
            axis = max(i for i, a in enumerate(alpha) if a > 0)
            prev = list(alpha)
            prev[axis] -= 1
            derivs[alpha] = derivs[tuple(prev)].derivative(axis)
        fact = 1
        for a in alpha:
            fact *= _math.factorial(a)
        coeffs[pos] = derivs[alpha].evaluate(Z) / fact
    return TaylorSeries(space, coeffs)


def _component_series(
    family: VectorFieldFamily, i: int, order: int, Z: np.ndarray
) -> list[TaylorSeries]:
    """Jets of all d components of field i (0-based), payload (N,)."""
    out = []
    for p in range(family.d):
        comp = family.components[i][p]
        if isinstance(comp, NetworkSpec):
            series, _ = _jet_series(comp, Z, order)
            out.append(TaylorSeries(series.space, series.coeffs))
        else:
            out.append(_poly_series(comp, order, Z))
    return out


def _field_series(family, tree, order: int, Z: np.ndarray, cache: dict) -> list[TaylorSeries]:
    cached = cache.get(tree)
    if cached is not None and cached[0] >= order:
        return [s.truncated(order) for s in cached[1]]
    if isinstance(tree, int):
        comps = _component_series(family, tree - 1, order, Z)
    else:
        left = _field_series(family, tree[0], order + 1, Z, cache)
        right = _field_series(family, tree[1], order + 1, Z, cache)
        comps = []
        for a in range(family.d):
            acc = None
            for b in range(family.d):
                term = left[b].truncated(order) * right[a].derivative(b) - right[
                    b
                ].truncated(order) * left[a].derivative(b)
                acc = term if acc is None else acc + term
            comps.append(acc)
    cache[tree] = (order, comps)
    return comps


def bracket_eval(family: VectorFieldFamily, term: BracketTerm, z) -> np.ndarray:
    """Coordinate vector of the iterated bracket at a point z."""
    Z = np.asarray(z, dtype=float)
    if Z.shape != (family.d,):
        raise ShapeError(f"point shape {Z.shape} != ({family.d},)")
    comps = _field_series(family, term.tree, 0, Z[None, :], {})
    return np.array([float(c.value[0]) for c in comps])


@dataclass(frozen=True, eq=False)
class BracketMatrix:
    """Bracket values at one point, one column per enumerated term."""

    point: np.ndarray
    columns: np.ndarray  # (d, |B_k|)
    terms: tuple[BracketTerm, ...]

    def __post_init__(self):
        if not np.all(np.isfinite(self.columns)):
            raise ValueError("bracket matrix entries must be finite")


def _bracket_columns(
    family: VectorFieldFamily, terms: Sequence[BracketTerm], Z: np.ndarray
) -> np.ndarray:
    """Batched bracket matrix: returns (N, d, len(terms))."""
    cache: dict = {}
    out = np.empty((Z.shape[0], family.d, len(terms)))
    # Longest terms first so subtrees get cached at their highest order.
    for j in sorted(range(len(terms)), key=lambda j: -terms[j].length):
        comps = _field_series(family, terms[j].tree, 0, Z, cache)
        for p in range(family.d):
            out[:, p, j] = comps[p].value
    return out


def bracket_matrix(
    family: VectorFieldFamily, k: int, z, mode: str = "hall"
) -> BracketMatrix:
    if k > MAX_BRACKET_DEPTH:
        raise BudgetError(f"bracket depth {k} exceeds the cap {MAX_BRACKET_DEPTH}")
    terms = enumerate_brackets(family.m, k, mode)
    Z = np.asarray(z, dtype=float)
    if Z.shape != (family.d,):
        raise ShapeError(f"point shape {Z.shape} != ({family.d},)")
    cols = _bracket_columns(family, terms, Z[None, :])
    return BracketMatrix(Z.copy(), cols[0], tuple(terms))


# -- minors and rank ---------------------------------------------------------------


def _det_batch(M: np.ndarray) -> np.ndarray:
    """Determinants of a (..., n, n) stack; cofactor expansion for n <= 4."""
    n = M.shape[-1]
    if n == 1:
        return M[..., 0, 0]
    if n == 2:
        return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    if n <= 4:
        out = np.zeros(M.shape[:-2])
        cols = list(range(n))
        for j in range(n):
            rest = cols[:j] + cols[j + 1 :]
            minor = _det_batch(M[..., 1:, :][..., :, rest])
            out = out + ((-1.0) ** j) * M[..., 0, j] * minor
        return out
    return np.linalg.det(M)


def _minor_batch(cols: np.ndarray, rho: int) -> tuple[np.ndarray, list]:
    """All (rho+1)-minors for a batch of matrices (N, d, nB).

    Returns (values (N, s), subsets) with subsets in canonical order: row
    subsets outer, column subsets inner, both lexicographic.
    """
    n, d, nB = cols.shape
    size = rho + 1
    subsets = [
        (rows, cs)
        for rows in itertools.combinations(range(d), size)
        for cs in itertools.combinations(range(nB), size)
    ]
    if not subsets:
        return np.zeros((n, 0)), []
    vals = np.empty((n, len(subsets)))
    for idx, (rows, cs) in enumerate(subsets):
        sub = cols[:, np.ix_(rows, cs)[0], np.ix_(rows, cs)[1]]
        vals[:, idx] = _det_batch(sub)
    return vals, subsets


def minors(A: BracketMatrix, rho: int) -> list[float]:
    """All (rho+1) x (rho+1) minors of the bracket matrix, canonical order.

    Empty when rho+1 exceeds either dimension (zero minors by convention).
    """
    if rho < 0:
        raise ValueError("rho must be >= 0")
    vals, _ = _minor_batch(A.columns[None, :, :], rho)
    return [float(v) for v in vals[0]]


def rank_at(A: BracketMatrix | np.ndarray, tol: float = 1e-8) -> int:
    """Numerical rank: singular values above tol * (largest + machine floor)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = A.columns if isinstance(A, BracketMatrix) else np.asarray(A, dtype=float)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0:
        return 0
    thr = tol * (sv[0] + np.finfo(float).eps)
    return int(np.sum(sv > thr))


# -- locus sampling ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LocusSample:
    """Grid sample of a rank-drop locus with a three-way cell label.

    ``grid.flags`` marks "in" cells; ``margin`` marks cells whose decision
    flips when the threshold is relaxed tenfold (genuinely ambiguous under
    floating arithmetic).  Cells in neither set are "out".
    """

    grid: SignGrid
    margin: np.ndarray
    criterion: str
    threshold: float
    k: int
    rho: int
    mode: str
    n_columns: int


def _auto_epsilon(minor_vals: np.ndarray, shape: tuple[int, ...]) -> float:
    """Half the largest adjacent-cell increment over all minors.

    First-order cell test: the locus {all minors = 0} can cross a cell only
    if the center value of every minor is within (cell radius) * gradient,
    estimated by neighbor differences.
    """
    grids = minor_vals.reshape(shape + (-1,))
    best = 0.0
    for axis in range(len(shape)):
        diff = np.abs(np.diff(grids, axis=axis))
        if diff.size:
            best = max(best, float(np.max(diff)))
    return 0.5 * best


def locus_sample(
    family: VectorFieldFamily,
    k: int,
    rho: int,
    box: Sequence[tuple[float, float]],
    resolution: int | Sequence[int],
    criterion: str = "minor",
    *,
    epsilon: float | str | None = "auto",
    tol: float = 1e-8,
    mode: str = "hall",
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> LocusSample:
    """Flag grid cells where the bracket span has rank <= rho at the center.

    criterion "minor": max |(rho+1)-minor| <= epsilon, with epsilon a float,
    "auto" (cell-aware, see ``_auto_epsilon``), or None for the relative
    default 1e-6 * (max sampled minor + floor).  criterion "svd": numerical
    rank via ``rank_at`` at relative tolerance ``tol``.  A fixed float
    epsilon shared across depths k guarantees the sampled nesting
    Z^(k+1) within Z^k cell-for-cell, because the minor set at depth k is a
    subset of the minor set at depth k+1.
    """
    if family.d > MAX_AMBIENT_DIM:
        raise BudgetError(f"ambient dimension {family.d} exceeds {MAX_AMBIENT_DIM}")
    if k > MAX_BRACKET_DEPTH:
        raise BudgetError(f"bracket depth {k} exceeds the cap {MAX_BRACKET_DEPTH}")
    if isinstance(resolution, int):
        resolution = (resolution,) * family.d
    resolution = tuple(int(n) for n in resolution)
    cells = int(np.prod(resolution))
    if cells > cell_budget:
        raise BudgetError(f"{cells} cells exceed the budget {cell_budget}")
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    centers = cell_centers(box, resolution)
    terms = enumerate_brackets(family.m, k, mode)
    cols = _bracket_columns(family, terms, centers)
    if criterion == "minor":
        vals, _ = _minor_batch(cols, rho)
        mm = np.max(np.abs(vals), axis=1) if vals.shape[1] else np.zeros(cells)
        if epsilon == "auto":
            eps = _auto_epsilon(vals, resolution) if vals.shape[1] else 0.0
        elif epsilon is None:
            eps = 1e-6 * (float(np.max(mm)) + np.finfo(float).tiny)
        else:
            eps = float(epsilon)
        flags = mm <= eps
        wide = mm <= 10.0 * eps
        threshold = eps
    elif criterion == "svd":
        sv = np.linalg.svd(cols, compute_uv=False)
        smax = sv[:, 0] + np.finfo(float).eps
        ranks = np.sum(sv > tol * smax[:, None], axis=1)
        ranks_wide = np.sum(sv > 10.0 * tol * smax[:, None], axis=1)
        flags = ranks <= rho
        wide = ranks_wide <= rho
        threshold = tol
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    margin = wide & ~flags
    grid = SignGrid(box, resolution, flags.reshape(resolution))
    return LocusSample(
        grid=grid,
        margin=margin.reshape(resolution),
        criterion=criterion,
        threshold=float(threshold),
        k=k,
        rho=rho,
        mode=mode,
        n_columns=len(terms),
    )


# -- declaration files ------------------------------------------------------------------


def family_to_json(family: VectorFieldFamily, mode: str = "hall") -> dict:
    rows = []
    for row in family.components:
        cells = []
        for comp in row:
            if isinstance(comp, NetworkSpec):
                cells.append({"kind": "network", "network": network_to_json(comp)})
            else:
                cells.append({"kind": "polynomial", "terms": comp.to_pairs()})
        rows.append(cells)
    return {"d": family.d, "m": family.m, "mode": mode, "components": rows}


def family_from_json(doc: Mapping) -> tuple[VectorFieldFamily, str]:
    try:
        d = int(doc["d"])
        m = int(doc["m"])
        mode = str(doc.get("mode", "hall"))
        rows = doc["components"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeError(f"malformed family document: {exc}") from exc
    if len(rows) != m:
        raise ShapeError("components must list m rows")
    comps = []
    for row in rows:
        if len(row) != d:
            raise ShapeError("each component row must list d entries")
        cells = []
        for cell in row:
            kind = cell.get("kind")
            if kind == "network":
                cells.append(network_from_json(cell["network"]))
            elif kind == "polynomial":
                cells.append(SparsePoly.from_pairs(d, 0, cell["terms"]))
            else:
                raise ShapeError(f"unknown component kind {kind!r}")
        comps.append(tuple(cells))
    return VectorFieldFamily(d, m, tuple(comps)), mode
