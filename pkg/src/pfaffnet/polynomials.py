"""Sparse real polynomials in input variables x_1..x_nx and chain variables y_1..y_ny.

Exponent vectors have fixed length nx + ny (x block first).  Coefficients
are doubles; zero coefficients are never stored.  Evaluation is vectorized
over a batch of points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class SparsePoly:
    nx: int
    ny: int
    terms: dict[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        nvars = self.nx + self.ny
        cleaned: dict[tuple[int, ...], float] = {}
        for exp, coeff in self.terms.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent vector {exp} for {nvars} variables")
            c = float(coeff)
            if c != 0.0:
                cleaned[exp] = cleaned.get(exp, 0.0) + c
        object.__setattr__(self, "terms", {e: c for e, c in cleaned.items() if c != 0.0})

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, nx: int, ny: int = 0) -> "SparsePoly":
        return cls(nx, ny, {})

    @classmethod
    def constant(cls, nx: int, ny: int, value: float) -> "SparsePoly":
        return cls(nx, ny, {(0,) * (nx + ny): float(value)})

    @classmethod
    def x_var(cls, nx: int, ny: int, index: int) -> "SparsePoly":
        exp = [0] * (nx + ny)
        exp[index] = 1
        return cls(nx, ny, {tuple(exp): 1.0})

    @classmethod
    def y_var(cls, nx: int, ny: int, index: int) -> "SparsePoly":
        exp = [0] * (nx + ny)
        exp[nx + index] = 1
        return cls(nx, ny, {tuple(exp): 1.0})

    # -- structure -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; 0 for the zero polynomial."""
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def max_chain_var(self) -> int:
        """Largest y index (0-based) appearing, or -1 if none."""
        best = -1
        for exp in self.terms:
            for j in range(self.ny - 1, best, -1):
                if exp[self.nx + j]:
                    best = j
                    break
        return best

    def _check_compatible(self, other: "SparsePoly"):
        if (self.nx, self.ny) != (other.nx, other.ny):
            raise ValueError("polynomials live over different variable sets")

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, SparsePoly):
            return self + SparsePoly.constant(self.nx, self.ny, other)
        self._check_compatible(other)
        terms = dict(self.terms)
        for exp, coeff in other.terms.items():
            terms[exp] = terms.get(exp, 0.0) + coeff
        return SparsePoly(self.nx, self.ny, terms)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly(self.nx, self.ny, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, SparsePoly):
            other = SparsePoly.constant(self.nx, self.ny, other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, SparsePoly):
            return SparsePoly(
                self.nx, self.ny, {e: c * float(other) for e, c in self.terms.items()}
            )
        self._check_compatible(other)
        terms: dict[tuple[int, ...], float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                terms[exp] = terms.get(exp, 0.0) + c1 * c2
        return SparsePoly(self.nx, self.ny, terms)

    __rmul__ = __mul__

    def pow(self, e: int) -> "SparsePoly":
        if e < 0:
            raise ValueError("negative powers unsupported")
        out = SparsePoly.constant(self.nx, self.ny, 1.0)
        for _ in range(e):
            out = out * self
        return out

    def derivative(self, var: int) -> "SparsePoly":
        """Partial derivative with respect to variable ``var`` (x block first)."""
        terms: dict[tuple[int, ...], float] = {}
        for exp, coeff in self.terms.items():
            e = exp[var]
            if e == 0:
                continue
            new = list(exp)
            new[var] = e - 1
            key = tuple(new)
            terms[key] = terms.get(key, 0.0) + coeff * e
        return SparsePoly(self.nx, self.ny, terms)

    # -- evaluation ------------------------------------------------------------

    def evaluate(self, x=None, y=None) -> np.ndarray:
        """Evaluate on a batch: x of shape (N, nx), y of shape (N, ny)."""
        cols = []
        if self.nx:
            x = np.asarray(x, dtype=float)
            if x.ndim == 1:
                x = x[:, None]
            if x.shape[1] != self.nx:
                raise ValueError(f"x has {x.shape[1]} columns, expected {self.nx}")
            cols.append(x)
        if self.ny:
            y = np.asarray(y, dtype=float)
            if y.ndim == 1:
                y = y[:, None]
            if y.shape[1] != self.ny:
                raise ValueError(f"y has {y.shape[1]} columns, expected {self.ny}")
            cols.append(y)
        vals = np.concatenate(cols, axis=1) if cols else np.zeros((1, 0))
        n = vals.shape[0]
        out = np.zeros(n)
        for exp, coeff in self.terms.items():
            term = np.full(n, coeff)
            for var, e in enumerate(exp):
                if e == 1:
                    term = term * vals[:, var]
                elif e > 1:
                    term = term * vals[:, var] ** e
            out += term
        return out

    def __call__(self, x=None, y=None):
        return self.evaluate(x, y)

    # -- serialization -----------------------------------------------------------

    def to_pairs(self) -> list[list]:
        """Sorted [exponent-vector, coefficient] pairs (deterministic order)."""
        return [[list(exp), self.terms[exp]] for exp in sorted(self.terms)]

    @classmethod
    def from_pairs(cls, nx: int, ny: int, pairs: Iterable[Sequence]) -> "SparsePoly":
        return cls(nx, ny, {tuple(int(e) for e in exp): float(c) for exp, c in pairs})

    def __repr__(self):
        if not self.terms:
            return "SparsePoly(0)"
        bits = []
        for exp in sorted(self.terms):
            mono = []
            for var, e in enumerate(exp):
                if not e:
                    continue
                name = f"x{var + 1}" if var < self.nx else f"y{var - self.nx + 1}"
                mono.append(name if e == 1 else f"{name}^{e}")
            lead = f"{self.terms[exp]:g}"
            bits.append(lead + ("*" + "*".join(mono) if mono else ""))
        return "SparsePoly(" + " + ".join(bits) + ")"
