"""Feedforward networks: forward traces, higher-order jets, sampling, I/O.

A network is the map

    h^(0) = x,   s^(l) = W^(l) h^(l-1) + b^(l),   h^(l) = sigma(s^(l)),
    F(x)  = c0 + c . h^(L),

with a scalar head and one shared Riccati-class activation.  Everything
here is weight-agnostic plumbing: evaluation at points (with the full layer
trace), truncated-Taylor jets for partial derivatives up to total order 4,
deterministic weight sampling, an analyticity margin report, and a JSON
wire format.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .activations import RiccatiActivation, eval_derivative, get_activation
from .errors import ShapeError
from .jets import Jet, TaylorSeries, compose_univariate, jet_from_series, jet_space


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """Immutable architecture + parameters of a scalar-output network."""

    d: int
    L: int
    widths: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    c0: float
    c: np.ndarray
    activation: RiccatiActivation

    def __post_init__(self):
        if self.d < 1:
            raise ShapeError("input dimension d must be >= 1")
        if self.L < 1:
            raise ShapeError("depth L must be >= 1")
        widths = tuple(int(n) for n in self.widths)
        if len(widths) != self.L or any(n < 1 for n in widths):
            raise ShapeError("widths must list L integers >= 1")
        weights = tuple(np.array(w, dtype=float) for w in self.weights)
        biases = tuple(np.array(b, dtype=float) for b in self.biases)
        if len(weights) != self.L or len(biases) != self.L:
            raise ShapeError("need one weight matrix and one bias vector per layer")
        fan_in = self.d
        for l, (w, b) in enumerate(zip(weights, biases), start=1):
            if w.shape != (widths[l - 1], fan_in):
                raise ShapeError(
                    f"layer {l}: weight shape {w.shape} != {(widths[l - 1], fan_in)}"
                )
            if b.shape != (widths[l - 1],):
                raise ShapeError(f"layer {l}: bias shape {b.shape} != {(widths[l - 1],)}")
            fan_in = widths[l - 1]
        c = np.array(self.c, dtype=float)
        if c.shape != (widths[-1],):
            raise ShapeError(f"head shape {c.shape} != {(widths[-1],)}")
        for arr in (*weights, *biases, c):
            if not np.all(np.isfinite(arr)):
                raise ShapeError("network parameters must be finite")
            arr.flags.writeable = False
        if not math.isfinite(self.c0):
            raise ShapeError("c0 must be finite")
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "c0", float(self.c0))

    @property
    def total_width(self) -> int:
        return sum(self.widths)


@dataclass(frozen=True, eq=False)
class LayerTrace:
    """Per-layer affine inputs and activations from one forward pass."""

    affine_inputs: tuple[np.ndarray, ...]
    activations: tuple[np.ndarray, ...]
    output: float


def _forward_arrays(net: NetworkSpec, X: np.ndarray):
    h = X
    affine, acts = [], []
    for l in range(net.L):
        s = h @ net.weights[l].T + net.biases[l]
        h = eval_derivative(net.activation, s, 0)
        affine.append(s)
        acts.append(h)
    F = net.c0 + acts[-1] @ net.c
    return affine, acts, F


def _as_batch(net: NetworkSpec, x) -> np.ndarray:
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != net.d:
        raise ShapeError(f"input shape {np.shape(x)} incompatible with d={net.d}")
    return X


def forward(net: NetworkSpec, x) -> LayerTrace:
    """Evaluate at one point, returning the full layer trace."""
    X = np.asarray(x, dtype=float)
    if X.shape != (net.d,):
        raise ShapeError(f"input shape {X.shape} != ({net.d},)")
    affine, acts, F = _forward_arrays(net, X[None, :])
    return LayerTrace(
        affine_inputs=tuple(s[0] for s in affine),
        activations=tuple(h[0] for h in acts),
        output=float(F[0]),
    )


def forward_batch(net: NetworkSpec, xs) -> np.ndarray:
    """Outputs F(x) for a batch of points, shape (N, d) -> (N,)."""
    X = _as_batch(net, xs)
    return _forward_arrays(net, X)[2]


def _jet_series(net: NetworkSpec, X: np.ndarray, order: int):
    """Taylor series of F (and of every affine input) at a batch of points.

    Returns (output_series, affine_series) where affine_series[l] has
    payload (n_l, N): one series coefficient vector per neuron per point.
    """
    space = jet_space(net.d, order)
    n_points = X.shape[0]
    coeffs = np.zeros((len(space), net.d, n_points))
    coeffs[0] = X.T
    if order >= 1:
        unit = np.eye(net.d, dtype=int)
        for p in range(net.d):
            coeffs[space.position[tuple(unit[p])], p, :] = 1.0
    h = TaylorSeries(space, coeffs)
    affine_series = []
    act = net.activation
    for l in range(net.L):
        sc = np.einsum("km,imN->ikN", net.weights[l], h.coeffs)
        sc[0] += net.biases[l][:, None]
        s = TaylorSeries(space, sc)
        affine_series.append(s)
        s0 = sc[0]
        outer = [
            np.asarray(eval_derivative(act, s0, j), dtype=float) / math.factorial(j)
            for j in range(order + 1)
        ]
        h = compose_univariate(outer, s)
    out = np.einsum("k,ikN->iN", net.c, h.coeffs)
    out[0] += net.c0
    return TaylorSeries(space, out), affine_series


def jet_forward(net: NetworkSpec, x, order: int, return_layer_jets: bool = False):
    """Partial derivatives of F at x up to total order ``order``.

    With ``return_layer_jets`` also returns {(layer, neuron): Jet} for every
    affine input s^(l)_k (layers and neurons 1-based).
    """
    X = np.asarray(x, dtype=float)
    if X.shape != (net.d,):
        raise ShapeError(f"input shape {X.shape} != ({net.d},)")
    out, affine = _jet_series(net, X[None, :], order)
    jet = jet_from_series(TaylorSeries(out.space, out.coeffs[:, 0]))
    if not return_layer_jets:
        return jet
    layer_jets: dict[tuple[int, int], Jet] = {}
    for l, series in enumerate(affine, start=1):
        for k in range(series.coeffs.shape[1]):
            layer_jets[(l, k + 1)] = jet_from_series(
                TaylorSeries(series.space, series.coeffs[:, k, 0])
            )
    return jet, layer_jets


def sample_network(
    d: int,
    L: int,
    widths: Sequence[int],
    activation: str | RiccatiActivation,
    *,
    seed: int,
    scale: float = 1.0,
) -> NetworkSpec:
    """Deterministic i.i.d. uniform(-scale, scale) draw of all parameters.

    The draw order is fixed (per layer: weights then bias; then head c,
    then c0), so identical inputs give bitwise-identical networks.
    """
    act = get_activation(activation) if isinstance(activation, str) else activation
    rng = np.random.default_rng(seed)
    widths = tuple(int(n) for n in widths)
    weights, biases = [], []
    fan_in = d
    for n in widths:
        weights.append(rng.uniform(-scale, scale, size=(n, fan_in)))
        biases.append(rng.uniform(-scale, scale, size=n))
        fan_in = n
    c = rng.uniform(-scale, scale, size=widths[-1])
    c0 = float(rng.uniform(-scale, scale))
    return NetworkSpec(d, L, widths, tuple(weights), tuple(biases), c0, c, act)


def _halton(box: Sequence[tuple[float, float]], n: int, offset: int = 1) -> np.ndarray:
    primes = [2, 3, 5, 7, 11, 13, 17, 19]
    d = len(box)
    if d > len(primes):
        raise ShapeError("halton sampler supports at most 8 axes")
    pts = np.empty((n, d))
    for axis, (lo, hi) in enumerate(box):
        base = primes[axis]
        vals = np.empty(n)
        for i in range(n):
            k = offset + i
            f, r = 1.0, 0.0
            while k > 0:
                f /= base
                r += f * (k % base)
                k //= base
            vals[i] = r
        pts[:, axis] = lo + (hi - lo) * vals
    return pts


@dataclass(frozen=True, eq=False)
class AnalyticityReport:
    """Worst-case margin of affine inputs to the activation's interval."""

    ok: bool
    margin: float
    worst_layer: int | None = None
    worst_neuron: int | None = None
    worst_point: np.ndarray | None = None


def analyticity_check(
    net: NetworkSpec,
    box: Sequence[tuple[float, float]],
    samples: int = 512,
    seed: int = 0,
) -> AnalyticityReport:
    """Probe quasi-random points and report the minimum interval margin.

    Report-only: the forward pass here skips the domain guard so that a
    violation is reported instead of raised.
    """
    if len(box) != net.d or any(not lo < hi for lo, hi in box):
        raise ShapeError("box must give a nonempty (lo, hi) per input coordinate")
    lo, hi = net.activation.analytic_interval
    pts = _halton(box, samples, offset=seed * samples + 1)
    h = pts
    margin = math.inf
    worst = (None, None, None)
    for l in range(net.L):
        s = h @ net.weights[l].T + net.biases[l]
        if math.isfinite(lo) or math.isfinite(hi):
            m = np.minimum(s - lo, hi - s)  # inf-aware: stays inf if unbounded
            idx = np.unravel_index(np.argmin(m), m.shape)
            if m[idx] < margin:
                margin = float(m[idx])
                worst = (l + 1, int(idx[1]) + 1, pts[idx[0]])
        inside = np.clip(s, *_safe_clip(lo, hi))
        h = np.asarray(net.activation.closed_forms[0](inside), dtype=float)
    return AnalyticityReport(
        ok=bool(margin > 0.0),
        margin=margin,
        worst_layer=worst[0],
        worst_neuron=worst[1],
        worst_point=worst[2],
    )


def _safe_clip(lo: float, hi: float):
    span = hi - lo if math.isfinite(hi - lo) else None
    eps = 1e-12 * span if span else 0.0
    clo = lo + eps if math.isfinite(lo) else -math.inf
    chi = hi - eps if math.isfinite(hi) else math.inf
    return clo, chi


# -- JSON wire format ---------------------------------------------------------


def network_to_json(net: NetworkSpec) -> dict:
    """Plain-JSON document; weights stored row-major per layer."""
    return {
        "d": net.d,
        "L": net.L,
        "widths": list(net.widths),
        "activation": net.activation.name,
        "weights": [w.ravel(order="C").tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "head": {"c0": net.c0, "c": net.c.tolist()},
    }


def network_from_json(doc: Mapping) -> NetworkSpec:
    """Load and validate a network document; rejects non-finite entries."""
    try:
        d = int(doc["d"])
        L = int(doc["L"])
        widths = [int(n) for n in doc["widths"]]
        act = get_activation(str(doc["activation"]))
        flat_weights = doc["weights"]
        biases = [np.asarray(b, dtype=float) for b in doc["biases"]]
        head = doc["head"]
        c0 = float(head["c0"])
        c = np.asarray(head["c"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeError(f"malformed network document: {exc}") from exc
    if len(widths) != L or len(flat_weights) != L:
        raise ShapeError("widths/weights length must equal L")
    weights = []
    fan_in = d
    for l, flat in enumerate(flat_weights):
        arr = np.asarray(flat, dtype=float)
        expect = widths[l] * fan_in
        if arr.size != expect:
            raise ShapeError(f"layer {l + 1}: expected {expect} weights, got {arr.size}")
        weights.append(arr.reshape(widths[l], fan_in))
        fan_in = widths[l]
    return NetworkSpec(d, L, tuple(widths), tuple(weights), tuple(biases), c0, c, act)


def save_network(net: NetworkSpec, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_json(net), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_network(path) -> NetworkSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return network_from_json(json.load(fh))
