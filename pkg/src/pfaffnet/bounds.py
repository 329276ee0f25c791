"""Exact evaluation of the architecture-only topological complexity bounds.

All values are exact arbitrary-precision integers, computed after ceiling
against a rational constant C.  The domain constant in the underlying
theory is unspecified, so every result carries a constant tag stating the
C it was computed with; C = 1 is the default and reports are to be read
modulo that constant.

Formulas:

    zeros (d=1):       ceil(C * 2^(R(R+1)/2) * (1+L)^(R+1))
    superlevel Betti:  ceil(C * 2^(R(R-1)/2) * (d + min(d,R)(1+2L))^(d+R))
    general semi-Pfaffian (s sign conditions, format (d, R, alpha, beta)):
                       ceil(C * 2^(R(R-1)/2) * s^d * (d beta + min(d,R) alpha)^(d+R))

The rank-drop bound instantiates the general form with constants produced
by the chain module's format calculus; those (R_k, alpha_k, beta_k) values
are implementation-derived and flagged as such in the provenance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .chain import (
    PfaffianFormat,
    compute_format,
    format_combine,
    format_concat,
    iterated_bracket_format,
)

RationalLike = int | float | str | Fraction


def _as_fraction(C: RationalLike) -> Fraction:
    frac = Fraction(C)
    if frac <= 0:
        raise ValueError("constant C must be positive")
    return frac


@dataclass(frozen=True, eq=False)
class BigBound:
    """Exact bound value with float log10 and full provenance.

    ``value`` assumes the stated constant C; ``constant_tag`` records that
    the true bound additionally carries an unspecified domain constant.
    """

    value: int
    log10: float
    formula: str
    inputs: dict
    constant_tag: str

    def __post_init__(self):
        if self.value < 1:
            raise ValueError("bound values are cardinalities >= 1")

    def decimal(self) -> str:
        return str(self.value)


def _make(formula: str, inputs: dict, core: int, C: RationalLike) -> BigBound:
    frac = _as_fraction(C)
    value = math.ceil(frac * core)
    return BigBound(
        value=value,
        log10=math.log10(value),
        formula=formula,
        inputs=dict(inputs),
        constant_tag=f"modulo unspecified domain constant; computed with C={frac}",
    )


def zero_bound(R: int, L: int, C: RationalLike = 1) -> BigBound:
    """Zero-count / interval-count bound for 1-D outputs."""
    if R < 0 or L < 1:
        raise ValueError("need R >= 0 and L >= 1")
    core = 2 ** (R * (R + 1) // 2) * (1 + L) ** (R + 1)
    return _make("zeros_1d", {"R": R, "L": L, "C": str(Fraction(C))}, core, C)


def betti_bound(d: int, R: int, L: int, C: RationalLike = 1) -> BigBound:
    """Total Betti bound for the superlevel set of a network output."""
    if d < 1 or R < 0 or L < 1:
        raise ValueError("need d >= 1, R >= 0, L >= 1")
    core = 2 ** (R * (R - 1) // 2) * (d + min(d, R) * (1 + 2 * L)) ** (d + R)
    return _make("superlevel_betti", {"d": d, "R": R, "L": L, "C": str(Fraction(C))}, core, C)


def gv_bound(
    d: int, s: int, R: int, alpha: int, beta: int, C: RationalLike = 1
) -> BigBound:
    """Total Betti bound for a set cut out by s sign conditions of one format.

    Specializing to s = 1, alpha = 1+2L, beta = 1 reproduces ``betti_bound``.
    """
    if d < 1 or s < 1 or R < 0 or alpha < 1 or beta < 0:
        raise ValueError("invalid bound inputs")
    core = 2 ** (R * (R - 1) // 2) * s**d * (d * beta + min(d, R) * alpha) ** (d + R)
    return _make(
        "semi_pfaffian_betti",
        {"d": d, "s": s, "R": R, "alpha": alpha, "beta": beta, "C": str(Fraction(C))},
        core,
        C,
    )


# -- bracket-set counting --------------------------------------------------------


def _mobius(n: int) -> int:
    if n == 1:
        return 1
    out = 1
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            out = -out
        p += 1
    if m > 1:
        out = -out
    return out


def witt_dimension(m: int, j: int) -> int:
    """Number of degree-j basis brackets over m generators (Witt formula)."""
    if m < 1 or j < 1:
        raise ValueError("need m >= 1 and j >= 1")
    total = 0
    for e in range(1, j + 1):
        if j % e == 0:
            total += _mobius(e) * m ** (j // e)
    assert total % j == 0
    return total // j


def bracket_count(m: int, k: int, mode: str = "hall") -> int:
    """Size of the bracket set of length <= k over m generator fields.

    "hall" counts a Hall/Lyndon basis (spans agree with the full bracket
    set); "all_trees" counts every formal bracketing, sum of
    m^j * Catalan(j-1) over lengths j <= k.
    """
    if m < 1 or k < 1:
        raise ValueError("need m >= 1 and k >= 1")
    if mode == "hall":
        return sum(witt_dimension(m, j) for j in range(1, k + 1))
    if mode == "all_trees":
        total = 0
        for j in range(1, k + 1):
            catalan = math.comb(2 * (j - 1), j - 1) // j
            total += m**j * catalan
        return total
    raise ValueError(f"unknown bracket counting mode {mode!r}")


def s_count(d: int, rho: int, Bk: int) -> int:
    """Number of (rho+1) x (rho+1) minors of a d x Bk matrix."""
    if d < 1 or rho < 0 or Bk < 0:
        raise ValueError("invalid inputs")
    return math.comb(d, rho + 1) * math.comb(Bk, rho + 1)


def rankdrop_format(
    d: int, m: int, k: int, rho: int, L: int, widths: Sequence[int], r: int
) -> PfaffianFormat:
    """Format of the rank-drop minors, derived through the format calculus.

    The shared chain concatenates the chains of all d*m component networks
    (R_k = d*m*(r+2)*sum(widths), alpha_k = 1+2L); bracket coefficients at
    depth k have beta = 1 + (k-1)*alpha_k and a (rho+1)-minor multiplies
    that by rho+1.
    """
    component = compute_format(d, L, widths, r)
    shared = format_concat([component] * (d * m))
    generator = PfaffianFormat(shared.d, shared.R, shared.alpha, 1)
    bracket = iterated_bracket_format(generator, k)
    return format_combine("minor", [bracket], size=rho + 1)


def rankdrop_bound(
    d: int,
    m: int,
    k: int,
    rho: int,
    L: int,
    widths: Sequence[int],
    r: int,
    C: RationalLike = 1,
    mode: str = "hall",
) -> BigBound:
    """Total Betti bound for the locus where the bracket span has rank <= rho."""
    if m < 1 or k < 1 or rho < 0:
        raise ValueError("invalid inputs")
    fmt = rankdrop_format(d, m, k, rho, L, widths, r)
    Bk = bracket_count(m, k, mode)
    s = s_count(d, rho, Bk)
    if s < 1:
        # Rank can never exceed d (or the column count): the locus is all of V
        # and one trivially true sign condition describes it.
        s = 1
    bound = gv_bound(d, s, fmt.R, fmt.alpha, fmt.beta, C)
    inputs = dict(bound.inputs)
    inputs.update(
        {
            "m": m,
            "k": k,
            "rho": rho,
            "L": L,
            "widths": list(widths),
            "r": r,
            "mode": mode,
            "bracket_set_size": Bk,
            "derived_constants": {
                "R_k": fmt.R,
                "alpha_k": fmt.alpha,
                "beta_k": fmt.beta,
                "note": "implementation-derived via the format calculus",
            },
        }
    )
    return BigBound(
        value=bound.value,
        log10=bound.log10,
        formula="rankdrop_betti",
        inputs=inputs,
        constant_tag=bound.constant_tag,
    )
