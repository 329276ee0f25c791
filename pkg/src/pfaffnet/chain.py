"""Ordered chain construction and polynomial derivative certificates.

For a network with activation index r, each neuron (l, k) contributes the
block of scalar functions

    s^(l)_k,  u^(l)_{k,r},  u^(l)_{k,r-1}, ..., u^(l)_{k,0},

where u^(l)_{k,q}(x) = sigma^(q)(s^(l)_k(x)); blocks are concatenated layer
by layer, neurons in increasing order.  The list (f_1, ..., f_R) with
R = (r+2) * sum(n_l) is triangular: every partial derivative d_p f_i equals
an explicit polynomial P_{i,p}(x, f_1, ..., f_i), namely

    d_p s^(1)_k   = W^(1)_{k,p}
    d_p s^(l)_k   = sum_m W^(l)_{k,m} * d_p u^(l-1)_{m,0}    (expanded recursively)
    d_p u_{k,q}   = u_{k,q+1} * d_p s^(l)_k                  (q < r)
    d_p u_{k,r}   = (a0 + a1 u_{k,r} + a2 u_{k,r}^2) * d_p s^(l)_k.

Total degrees obey the layer schedule 1 + 2l, so the whole chain has degree
alpha = 1 + 2L and the output F = c0 + c . h^(L) is degree-1 over it, giving
the format (d, R, 1 + 2L, 1).

``derive_certificates`` builds the P_{i,p} as sparse polynomials (weights
embedded as double coefficients; exponents exact), ``verify_chain`` checks
them numerically against jet-propagated derivatives, and ``format_combine``
implements the degree calculus for sums, products, powers, derivatives,
bracket coefficients, and minors over a shared chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .activations import eval_derivative
from .jets import TaylorSeries, compose_univariate
from .network import NetworkSpec, _jet_series
from .polynomials import SparsePoly

AFFINE = "affine"
JET_DERIV = "jet_deriv"


@dataclass(frozen=True)
class ChainFunction:
    """One entry of the ordered chain.

    ``kind`` is "affine" for s^(l)_k and "jet_deriv" for u^(l)_{k,q};
    ``order`` is q for jet entries and None for affine ones.  ``position``
    is the 0-based index in the chain list (the math convention f_{i} with
    i = position + 1).
    """

    kind: str
    layer: int
    neuron: int
    order: int | None
    position: int

    def label(self) -> str:
        if self.kind == AFFINE:
            return f"s[{self.layer},{self.neuron}]"
        return f"u[{self.layer},{self.neuron},{self.order}]"


@dataclass(frozen=True)
class PfaffianFormat:
    """Format tuple (d, R, alpha, beta): ambient dimension, chain length,
    chain degree, and the degree of the defining polynomial over the chain."""

    d: int
    R: int
    alpha: int
    beta: int

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.beta < 0 or self.R < 0:
            raise ValueError("R and beta must be nonnegative")

    def astuple(self) -> tuple[int, int, int, int]:
        return (self.d, self.R, self.alpha, self.beta)


def build_chain(net: NetworkSpec) -> list[ChainFunction]:
    """The ordered chain entries for a network; length (r+2) * sum(widths)."""
    r = net.activation.r
    out: list[ChainFunction] = []
    pos = 0
    for l in range(1, net.L + 1):
        for k in range(1, net.widths[l - 1] + 1):
            out.append(ChainFunction(AFFINE, l, k, None, pos))
            pos += 1
            for q in range(r, -1, -1):
                out.append(ChainFunction(JET_DERIV, l, k, q, pos))
                pos += 1
    return out


def chain_length(widths: Sequence[int], r: int) -> int:
    return (r + 2) * sum(widths)


def compute_format(d: int, L: int, widths: Sequence[int], r: int) -> PfaffianFormat:
    """Architecture-only format of the network output: (d, (r+2)*sum(n), 1+2L, 1)."""
    if d < 1 or L < 1 or len(widths) != L or any(n < 1 for n in widths):
        raise ValueError("invalid architecture")
    if r < 0:
        raise ValueError("r must be nonnegative")
    return PfaffianFormat(d, chain_length(widths, r), 1 + 2 * L, 1)


def chain_values(net: NetworkSpec, xs) -> np.ndarray:
    """Values (f_1(x), ..., f_R(x)) for a batch of points, shape (N, R)."""
    X = np.asarray(xs, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    entries = build_chain(net)
    h = X
    cols = np.empty((X.shape[0], len(entries)))
    pos = 0
    r = net.activation.r
    for l in range(net.L):
        s = h @ net.weights[l].T + net.biases[l]
        for k in range(net.widths[l]):
            cols[:, pos] = s[:, k]
            pos += 1
            for q in range(r, -1, -1):
                cols[:, pos] = eval_derivative(net.activation, s[:, k], q)
                pos += 1
        h = eval_derivative(net.activation, s, 0)
    return cols


def _positions(chain: Iterable[ChainFunction]) -> dict[tuple, int]:
    table = {}
    for entry in chain:
        table[(entry.kind, entry.layer, entry.neuron, entry.order)] = entry.position
    return table


def derive_certificates(net: NetworkSpec) -> dict[tuple[int, int], SparsePoly]:
    """Certificates P_{i,p} with d_p f_i = P_{i,p}(x, f_1..f_i), all (i, p).

    Keys are (position, coordinate), both 0-based.  The expansion of
    d_p s^(l)_k through earlier layers is memoized per (l, k, p); layer-l
    entries come out with total degree <= 1 + 2l.
    """
    chain = build_chain(net)
    pos = _positions(chain)
    d, R, r = net.d, len(chain), net.activation.r
    a0, a1, a2 = net.activation.a0, net.activation.a1, net.activation.a2

    def yvar(position: int) -> SparsePoly:
        return SparsePoly.y_var(d, R, position)

    certs: dict[tuple[int, int], SparsePoly] = {}
    ds: dict[tuple[int, int, int], SparsePoly] = {}

    for l in range(1, net.L + 1):
        W = net.weights[l - 1]
        for k in range(1, net.widths[l - 1] + 1):
            s_pos = pos[(AFFINE, l, k, None)]
            top_pos = pos[(JET_DERIV, l, k, r)]
            quad = (
                SparsePoly.constant(d, R, a0)
                + a1 * yvar(top_pos)
                + a2 * (yvar(top_pos) * yvar(top_pos))
            )
            for p in range(d):
                if l == 1:
                    grad_s = SparsePoly.constant(d, R, W[k - 1, p])
                else:
                    grad_s = SparsePoly.zero(d, R)
                    for m in range(1, net.widths[l - 2] + 1):
                        coeff = W[k - 1, m - 1]
                        if coeff == 0.0:
                            continue
                        prev = certs[(pos[(JET_DERIV, l - 1, m, 0)], p)]
                        grad_s = grad_s + coeff * prev
                ds[(l, k, p)] = grad_s
                certs[(s_pos, p)] = grad_s
                certs[(top_pos, p)] = quad * grad_s
                for q in range(r - 1, -1, -1):
                    upper = yvar(pos[(JET_DERIV, l, k, q + 1)])
                    certs[(pos[(JET_DERIV, l, k, q)], p)] = upper * grad_s
    return certs


@dataclass(frozen=True, eq=False)
class ChainVerification:
    """Outcome of a numerical certificate check over sampled points."""

    ok: bool
    max_residual: float
    worst_entry: int
    worst_coordinate: int
    worst_point: np.ndarray
    checked: int
    tol: float


def _chain_values_and_gradients(net: NetworkSpec, X: np.ndarray):
    """Values (N, R) and gradients (N, R, d) of every chain entry.

    Derivatives come from order-1 jet propagation through the network plus
    generic univariate composition for the u entries; the polynomial
    certificates are never consulted here.
    """
    chain = build_chain(net)
    R = len(chain)
    n = X.shape[0]
    d = net.d
    r = net.activation.r
    _, affine = _jet_series(net, X, order=1)
    vals = np.empty((n, R))
    grads = np.empty((n, R, d))
    pos = 0
    for l in range(net.L):
        series = affine[l]  # coeffs (1+d, n_l, N)
        s0 = series.coeffs[0]
        for k in range(net.widths[l]):
            vals[:, pos] = s0[k]
            grads[:, pos, :] = series.coeffs[1:, k, :].T
            pos += 1
            for q in range(r, -1, -1):
                inner = TaylorSeries(series.space, series.coeffs[:, k, :])
                outer = [
                    np.asarray(eval_derivative(net.activation, s0[k], q), dtype=float),
                    np.asarray(eval_derivative(net.activation, s0[k], q + 1), dtype=float),
                ]
                composed = compose_univariate(outer, inner)
                vals[:, pos] = composed.coeffs[0]
                grads[:, pos, :] = composed.coeffs[1:].T
                pos += 1
    return vals, grads


def verify_chain(
    net: NetworkSpec,
    certificates: Mapping[tuple[int, int], SparsePoly],
    points,
    tol: float = 1e-8,
) -> ChainVerification:
    """Compare jet-propagated d_p f_i against P_{i,p}(x, f(x)) at each point.

    Residuals are scaled by 1 + |d_p f_i|; the report carries the worst
    (entry, coordinate, point) triple.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    vals, grads = _chain_values_and_gradients(net, X)
    worst = (-1.0, 0, 0, 0)
    checked = 0
    for (i, p), poly in sorted(certificates.items()):
        lhs = grads[:, i, p]
        rhs = poly.evaluate(X, vals)
        resid = np.abs(lhs - rhs) / (1.0 + np.abs(lhs))
        j = int(np.argmax(resid))
        checked += X.shape[0]
        if resid[j] > worst[0]:
            worst = (float(resid[j]), i, p, j)
    return ChainVerification(
        ok=bool(worst[0] <= tol),
        max_residual=worst[0],
        worst_entry=worst[1],
        worst_coordinate=worst[2],
        worst_point=X[worst[3]].copy(),
        checked=checked,
        tol=tol,
    )


# -- format calculus -----------------------------------------------------------


def format_concat(formats: Sequence[PfaffianFormat]) -> PfaffianFormat:
    """Concatenate chains over the same ambient space: lengths add, degrees max."""
    if not formats:
        raise ValueError("need at least one format")
    d = formats[0].d
    if any(f.d != d for f in formats):
        raise ValueError("ambient dimensions differ")
    return PfaffianFormat(
        d,
        sum(f.R for f in formats),
        max(f.alpha for f in formats),
        max(f.beta for f in formats),
    )


def format_combine(
    op: str,
    inputs: Sequence[PfaffianFormat],
    *,
    exponent: int | None = None,
    size: int | None = None,
) -> PfaffianFormat:
    """Degree rules for operations over one shared chain.

    sum:            beta = max(beta_1, beta_2)
    product:        beta = beta_1 + beta_2
    power (e):      beta = e * beta_1
    derivative:     beta = beta_1 - 1 + alpha   (certificates are already
                    polynomial over the chain, so R and alpha are unchanged)
    bracket_coeff:  beta = beta_X + beta_Y + alpha - 1
    minor (size m): beta = m * beta_entries
    """
    fmts = list(inputs)
    if not fmts:
        raise ValueError("need at least one input format")
    base = fmts[0]
    for f in fmts[1:]:
        if (f.d, f.R, f.alpha) != (base.d, base.R, base.alpha):
            raise ValueError("formats must share one chain (same d, R, alpha)")
    d, R, alpha = base.d, base.R, base.alpha
    if op == "sum":
        beta = max(f.beta for f in fmts)
    elif op == "product":
        beta = sum(f.beta for f in fmts)
    elif op == "power":
        if exponent is None or exponent < 0 or len(fmts) != 1:
            raise ValueError("power takes one format and a nonnegative exponent")
        beta = exponent * base.beta
    elif op == "derivative":
        if len(fmts) != 1:
            raise ValueError("derivative takes one format")
        beta = max(base.beta - 1 + alpha, 0)
    elif op == "bracket_coeff":
        if len(fmts) != 2:
            raise ValueError("bracket_coeff takes two formats")
        beta = fmts[0].beta + fmts[1].beta + alpha - 1
    elif op == "minor":
        if size is None or size < 1 or len(fmts) != 1:
            raise ValueError("minor takes one entry format and a size >= 1")
        beta = size * base.beta
    else:
        raise ValueError(f"unknown format operation {op!r}")
    return PfaffianFormat(d, R, alpha, beta)


def iterated_bracket_format(generator: PfaffianFormat, depth: int) -> PfaffianFormat:
    """Coefficient format of a depth-k iterated bracket of degree-beta generators."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    fmt = generator
    for _ in range(depth - 1):
        fmt = format_combine("bracket_coeff", [fmt, generator])
    return fmt


# -- certificate dump -----------------------------------------------------------


def certificates_to_json(
    net: NetworkSpec,
    certificates: Mapping[tuple[int, int], SparsePoly] | None = None,
) -> dict:
    """Audit document: ordered chain entries plus every P_{i,p} as sparse pairs.

    Positions and coordinates are 0-based; exponent vectors concatenate the
    x block (length d) and the chain block (length R).
    """
    chain = build_chain(net)
    if certificates is None:
        certificates = derive_certificates(net)
    entries = [
        {
            "position": e.position,
            "kind": e.kind,
            "layer": e.layer,
            "neuron": e.neuron,
            "order": e.order,
        }
        for e in chain
    ]
    certs = [
        {
            "i": i,
            "p": p,
            "degree": poly.degree(),
            "terms": poly.to_pairs(),
        }
        for (i, p), poly in sorted(certificates.items())
    ]
    return {
        "d": net.d,
        "R": len(chain),
        "activation": net.activation.name,
        "riccati_index": net.activation.r,
        "chain": entries,
        "certificates": certs,
    }
