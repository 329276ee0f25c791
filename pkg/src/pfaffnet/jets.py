"""Dense truncated Taylor arithmetic in several variables.

A series is a coefficient vector over the multi-indices of total degree
<= order, sorted by (degree, lexicographic).  Coefficients use the Taylor
normalization T_alpha = (d^alpha f) / alpha!, so multiplication is plain
truncated polynomial convolution and composition reduces to Horner steps.

The leading axis of the coefficient array runs over multi-indices; any
trailing axes are payload and broadcast through every operation, which lets
one series hold a batch of evaluation points (or neurons x points).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import BudgetError

# Bracket depth is capped at 5 downstream, which needs jets to order 4.
MAX_ORDER = 4


def multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """All exponent tuples with total degree <= order, graded order.

    Within a degree the first coordinate is major, so positions 1..dim are
    the unit indices e_1..e_dim in coordinate order; sorting by degree first
    makes every lower-order index list a prefix of the higher-order ones.
    """
    out = []
    for total in range(order + 1):
        for comb in itertools.combinations_with_replacement(range(dim), total):
            alpha = [0] * dim
            for v in comb:
                alpha[v] += 1
            out.append(tuple(alpha))
    out.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    return out


class JetSpace:
    """Shared index bookkeeping for series of a fixed (dim, order)."""

    __slots__ = ("dim", "order", "indices", "position", "_mul", "_diff")

    def __init__(self, dim: int, order: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if order < 0:
            raise ValueError("order must be >= 0")
        if order > MAX_ORDER:
            raise BudgetError(f"jet order {order} exceeds the supported cap {MAX_ORDER}")
        self.dim = dim
        self.order = order
        self.indices = tuple(multi_indices(dim, order))
        self.position = {alpha: i for i, alpha in enumerate(self.indices)}
        self._mul = None
        self._diff = [None] * dim

    def __len__(self):
        return len(self.indices)

    def _mul_table(self):
        if self._mul is None:
            pairs = []
            degs = [sum(a) for a in self.indices]
            for i, a in enumerate(self.indices):
                for j, b in enumerate(self.indices):
                    if degs[i] + degs[j] <= self.order:
                        out = tuple(x + y for x, y in zip(a, b))
                        pairs.append((self.position[out], i, j))
            pairs.sort()
            out_pos = np.array([p[0] for p in pairs], dtype=np.intp)
            ii = np.array([p[1] for p in pairs], dtype=np.intp)
            jj = np.array([p[2] for p in pairs], dtype=np.intp)
            starts = np.flatnonzero(np.diff(out_pos, prepend=-1))
            keys = out_pos[starts]
            self._mul = (ii, jj, starts, keys)
        return self._mul

    def multiply(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        ii, jj, starts, keys = self._mul_table()
        prod = a[ii] * b[jj]
        sums = np.add.reduceat(prod, starts, axis=0)
        out = np.zeros((len(self.indices),) + prod.shape[1:], dtype=float)
        out[keys] = sums
        return out

    def _diff_table(self, p: int):
        if self._diff[p] is None:
            lower = jet_space(self.dim, self.order - 1)
            srcs = np.empty(len(lower), dtype=np.intp)
            factors = np.empty(len(lower), dtype=float)
            for t, alpha in enumerate(lower.indices):
                shifted = list(alpha)
                shifted[p] += 1
                srcs[t] = self.position[tuple(shifted)]
                factors[t] = alpha[p] + 1
            self._diff[p] = (srcs, factors)
        return self._diff[p]

    def differentiate(self, coeffs: np.ndarray, p: int) -> "TaylorSeries":
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 series")
        srcs, factors = self._diff_table(p)
        shape = (1,) * coeffs.ndim
        out = coeffs[srcs] * factors.reshape((-1,) + shape[1:])
        return TaylorSeries(jet_space(self.dim, self.order - 1), out)


@lru_cache(maxsize=None)
def jet_space(dim: int, order: int) -> JetSpace:
    return JetSpace(dim, order)


@dataclass(eq=False)
class TaylorSeries:
    """Coefficient vector over a JetSpace, payload axes trailing."""

    space: JetSpace
    coeffs: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def copy(self) -> "TaylorSeries":
        return TaylorSeries(self.space, self.coeffs.copy())

    def __add__(self, other):
        if isinstance(other, TaylorSeries):
            if other.space is not self.space:
                raise ValueError("series spaces differ")
            return TaylorSeries(self.space, self.coeffs + other.coeffs)
        out = self.coeffs.copy()
        out[0] = out[0] + other
        return TaylorSeries(self.space, out)

    def __sub__(self, other):
        if isinstance(other, TaylorSeries):
            if other.space is not self.space:
                raise ValueError("series spaces differ")
            return TaylorSeries(self.space, self.coeffs - other.coeffs)
        out = self.coeffs.copy()
        out[0] = out[0] - other
        return TaylorSeries(self.space, out)

    def __mul__(self, other):
        if isinstance(other, TaylorSeries):
            if other.space is not self.space:
                raise ValueError("series spaces differ")
            return TaylorSeries(self.space, self.space.multiply(self.coeffs, other.coeffs))
        return TaylorSeries(self.space, self.coeffs * other)

    __rmul__ = __mul__

    def __neg__(self):
        return TaylorSeries(self.space, -self.coeffs)

    def derivative(self, p: int) -> "TaylorSeries":
        """Partial derivative along coordinate p; drops one order."""
        return self.space.differentiate(self.coeffs, p)

    def truncated(self, order: int) -> "TaylorSeries":
        """Restriction to total degree <= order (indices are degree-sorted)."""
        if order == self.space.order:
            return self
        if order > self.space.order:
            raise ValueError("cannot extend a series by truncation")
        target = jet_space(self.space.dim, order)
        return TaylorSeries(target, self.coeffs[: len(target)])


def constant_series(space: JetSpace, value, payload_shape: tuple[int, ...] = ()) -> TaylorSeries:
    coeffs = np.zeros((len(space),) + payload_shape, dtype=float)
    coeffs[0] = value
    return TaylorSeries(space, coeffs)


def compose_univariate(outer: Sequence[np.ndarray], inner: TaylorSeries) -> TaylorSeries:
    """Series of g(s(x)) from Taylor coefficients of g at the value of s.

    ``outer[j]`` must equal g^(j)(s0) / j! and broadcast against the payload.
    Evaluated by Horner over the zero-constant part of ``inner``.
    """
    space = inner.space
    if len(outer) != space.order + 1:
        raise ValueError("need exactly order+1 outer coefficients")
    hat = inner.coeffs.copy()
    hat[0] = 0.0
    shat = TaylorSeries(space, hat)
    payload = inner.coeffs.shape[1:]
    res = constant_series(space, outer[-1], payload)
    for j in range(space.order - 1, -1, -1):
        res = res * shat
        res.coeffs[0] = res.coeffs[0] + outer[j]
    return res


@dataclass(frozen=True)
class Jet:
    """Partial derivatives of a scalar map at a point, up to a total order.

    ``coefficients`` maps each multi-index alpha (|alpha| <= order) to the
    plain derivative value d^alpha f; the zero index holds the value itself.
    """

    dim: int
    order: int
    coefficients: dict[tuple[int, ...], float]

    @property
    def value(self) -> float:
        return self.coefficients[(0,) * self.dim]

    def derivative(self, alpha: Sequence[int]) -> float:
        return self.coefficients[tuple(int(a) for a in alpha)]

    def gradient(self) -> np.ndarray:
        basis = np.eye(self.dim, dtype=int)
        return np.array([self.derivative(basis[p]) for p in range(self.dim)])


def jet_from_series(series: TaylorSeries) -> Jet:
    """Convert Taylor coefficients to derivative values (multiply by alpha!)."""
    coeffs = np.asarray(series.coeffs, dtype=float)
    if coeffs.ndim != 1:
        raise ValueError("jet_from_series expects a scalar payload")
    out = {}
    for pos, alpha in enumerate(series.space.indices):
        fact = 1
        for a in alpha:
            fact *= math.factorial(a)
        out[alpha] = float(coeffs[pos]) * fact
    return Jet(series.space.dim, series.space.order, out)
