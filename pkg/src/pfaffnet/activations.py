"""Riccati-class activation functions.

An activation ``sigma`` carries a *Riccati index* ``r`` when its r-th
derivative ``zeta = sigma^(r)`` solves the constant-coefficient quadratic ODE

    zeta'(t) = a0 + a1*zeta(t) + a2*zeta(t)**2,      a2 != 0,

on the open interval where sigma is analytic.  Once zeta satisfies the ODE,
every higher derivative of sigma is a polynomial in zeta:

    sigma^(r+j) = Q_j(zeta),   Q_1(y) = a0 + a1*y + a2*y**2,
                               Q_{j+1} = Q_j' * Q_1.

That polynomial recurrence is what makes the chain construction and the jet
propagation in the rest of the package work, so instances are certified at
construction time: monotonicity and the ODE residual are checked numerically
on a sample grid, with the residual derivative estimated by finite
differences (independent of the recurrence above).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DomainError

# Residual ceiling used to certify the ODE property in double precision.
RESIDUAL_TOL = 1e-10

# Slack allowed when checking that sampled values are nondecreasing.
MONOTONE_SLACK = 1e-12

Interval = tuple[float, float]


def logistic(t):
    """Numerically stable logistic function 1 / (1 + exp(-t))."""
    t = np.asarray(t, dtype=float)
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def softplus(t):
    """Numerically stable softplus log(1 + exp(t))."""
    t = np.asarray(t, dtype=float)
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


@lru_cache(maxsize=None)
def _ode_poly(a0: float, a1: float, a2: float, j: int) -> tuple[float, ...]:
    # Coefficients (ascending) of Q_j with zeta^(j) = Q_j(zeta).
    if j == 1:
        return (a0, a1, a2)
    prev = _ode_poly(a0, a1, a2, j - 1)
    return tuple(float(c) for c in npoly.polymul(npoly.polyder(prev), (a0, a1, a2)))


def ode_derivative_coefficients(act: "RiccatiActivation", j: int) -> tuple[float, ...]:
    """Ascending coefficients of the polynomial Q_j with zeta^(j) = Q_j(zeta)."""
    if j < 1:
        raise ValueError("j must be >= 1")
    return _ode_poly(act.a0, act.a1, act.a2, j)


@dataclass(frozen=True, eq=False)
class RiccatiActivation:
    """A nondecreasing activation whose r-th derivative solves the quadratic ODE.

    ``closed_forms`` holds one vectorized evaluator per derivative order
    0..r; orders above r come from the ODE recurrence and never need a
    closed form.  ``analytic_interval`` is the open interval on which the
    activation (and the ODE solution) is analytic; evaluation outside it
    raises :class:`DomainError`.
    """

    name: str
    r: int
    a0: float
    a1: float
    a2: float
    closed_forms: tuple[Callable[[np.ndarray], np.ndarray], ...]
    analytic_interval: Interval = (-math.inf, math.inf)
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if self.r < 0 or int(self.r) != self.r:
            raise ValueError("Riccati index r must be a nonnegative integer")
        if self.a2 == 0.0:
            raise ValueError("a2 must be nonzero")
        if len(self.closed_forms) != self.r + 1:
            raise ValueError(
                f"need closed forms for orders 0..{self.r}, got {len(self.closed_forms)}"
            )
        lo, hi = self.analytic_interval
        if not lo < hi:
            raise ValueError("analytic_interval must be a nonempty open interval")
        if self.validate:
            self._certify()

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        return eval_derivative(self, t, 0)

    def derivative(self, t, q: int):
        return eval_derivative(self, t, q)

    # -- certification ------------------------------------------------------

    def certification_grid(self, n: int = 100) -> np.ndarray:
        """Interior sample grid used for construction-time checks."""
        lo, hi = self.analytic_interval
        lo = max(lo, -5.0)
        hi = min(hi, 5.0)
        span = hi - lo
        return np.linspace(lo + 1e-2 * span, hi - 1e-2 * span, n)

    def _certify(self):
        grid = self.certification_grid()
        vals = eval_derivative(self, grid, 0)
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"{self.name}: non-finite values on the analytic interval")
        if np.any(np.diff(vals) < -MONOTONE_SLACK):
            raise ValueError(f"{self.name}: sampled values are not nondecreasing")
        res = riccati_residual(self, grid)
        if res > RESIDUAL_TOL:
            raise ValueError(
                f"{self.name}: ODE residual {res:.3e} exceeds {RESIDUAL_TOL:.1e}"
            )


def _require_inside(act: RiccatiActivation, t: np.ndarray):
    lo, hi = act.analytic_interval
    if np.any(t <= lo) or np.any(t >= hi):
        bad = t[(t <= lo) | (t >= hi)]
        raise DomainError(
            f"argument {float(np.ravel(bad)[0])!r} outside the analytic interval "
            f"({lo}, {hi}) of {act.name!r}"
        )


def eval_derivative(act: RiccatiActivation, t, q: int):
    """Evaluate sigma^(q) at t.

    Orders 0..r use the registered closed forms; order r+1 is the ODE
    right-hand side; higher orders use the polynomial recurrence
    Q_{j+1} = Q_j' * Q_1 applied to zeta = sigma^(r).
    """
    if q < 0:
        raise ValueError("derivative order must be nonnegative")
    arr = np.asarray(t, dtype=float)
    _require_inside(act, arr)
    if q <= act.r:
        fn = act.closed_forms[q]
        if fn is None:
            raise ValueError(f"{act.name}: closed form for order {q} is missing")
        out = np.asarray(fn(arr), dtype=float)
    else:
        zeta = np.asarray(act.closed_forms[act.r](arr), dtype=float)
        coeffs = np.asarray(_ode_poly(act.a0, act.a1, act.a2, q - act.r))
        out = npoly.polyval(zeta, coeffs)
    if np.ndim(t) == 0:
        return float(out)
    return out


def riccati_residual(
    act: RiccatiActivation,
    samples: Sequence[float] | np.ndarray,
    coefficients: tuple[float, float, float] | None = None,
    step: float = 1e-3,
) -> float:
    """Max deviation of zeta' from the quadratic a0 + a1*zeta + a2*zeta**2.

    zeta' is estimated by a fourth-order central difference of the closed
    form for zeta, so the check does not reuse the ODE recurrence it
    certifies.  ``coefficients`` overrides (a0, a1, a2), which is how a
    wrong registry entry is detected.
    """
    a0, a1, a2 = coefficients if coefficients is not None else (act.a0, act.a1, act.a2)
    t = np.asarray(samples, dtype=float)
    if t.ndim == 0:
        t = t[None]
    _require_inside(act, t)
    lo, hi = act.analytic_interval
    h = step
    if math.isfinite(lo):
        h = min(h, 0.2 * float(np.min(t - lo)))
    if math.isfinite(hi):
        h = min(h, 0.2 * float(np.min(hi - t)))
    if h <= 0:
        raise DomainError("samples too close to the interval boundary for differencing")
    zfun = act.closed_forms[act.r]
    zeta = np.asarray(zfun(t), dtype=float)
    dz = (
        -np.asarray(zfun(t + 2 * h), dtype=float)
        + 8.0 * np.asarray(zfun(t + h), dtype=float)
        - 8.0 * np.asarray(zfun(t - h), dtype=float)
        + np.asarray(zfun(t - 2 * h), dtype=float)
    ) / (12.0 * h)
    rhs = a0 + a1 * zeta + a2 * zeta * zeta
    return float(np.max(np.abs(dz - rhs)))


# -- registry ----------------------------------------------------------------

_REGISTRY: dict[str, RiccatiActivation] = {}


def register_activation(act: RiccatiActivation, overwrite: bool = False):
    if act.name in _REGISTRY and not overwrite:
        raise ValueError(f"activation {act.name!r} already registered")
    _REGISTRY[act.name] = act


def get_activation(name: str) -> RiccatiActivation:
    try:
        return _REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise KeyError(f"unknown activation {name!r}; registered: {known}") from None


def registered_names() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def builtins() -> list[RiccatiActivation]:
    """The shipped activations: logistic, tanh, softplus."""
    return [_REGISTRY[n] for n in ("logistic", "tanh", "softplus")]


def _riccati_flow(a0: float, a1: float, a2: float, t0: float, z0: float) -> Callable:
    """Closed-form solution of zeta' = a0 + a1 zeta + a2 zeta^2 with zeta(t0) = z0.

    The quadratic has constant coefficients, so the solution is logistic-type
    (two real equilibria), rational (double equilibrium), or tangent-type
    (complex pair).  Blow-ups, where present, must lie outside the declared
    analytic interval; construction-time certification rejects declarations
    that violate this.
    """
    disc = a1 * a1 - 4.0 * a0 * a2
    if disc > 0.0:
        root = math.sqrt(disc)
        y1 = (-a1 + root) / (2.0 * a2)
        y2 = (-a1 - root) / (2.0 * a2)
        if z0 == y1 or z0 == y2:
            const = float(z0)
            return lambda t: np.full_like(np.asarray(t, dtype=float), const)
        ratio0 = (z0 - y1) / (z0 - y2)
        rate = a2 * (y1 - y2)

        def flow(t):
            t = np.asarray(t, dtype=float)
            with np.errstate(over="ignore"):
                g = ratio0 * np.exp(rate * (t - t0))
            return y2 + (y1 - y2) / (1.0 - g)

        return flow
    if disc == 0.0:
        ystar = -a1 / (2.0 * a2)
        if z0 == ystar:
            return lambda t: np.full_like(np.asarray(t, dtype=float), float(ystar))

        def flow(t):
            t = np.asarray(t, dtype=float)
            return ystar - 1.0 / (a2 * (t - t0) + 1.0 / (z0 - ystar))

        return flow
    w = math.sqrt(-disc)
    ystar = -a1 / (2.0 * a2)
    phase = math.atan((z0 - ystar) * 2.0 * a2 / w)

    def flow(t):
        t = np.asarray(t, dtype=float)
        return ystar + (w / (2.0 * a2)) * np.tan(0.5 * w * (t - t0) + phase)

    return flow


def custom_from_declaration(decl: Mapping) -> RiccatiActivation:
    """Build a custom activation from a plain declaration record.

    Custom entries are restricted to index r = 0, where zeta equals the
    activation itself, so the record pins the function down completely:

        {"name": str, "r": 0, "a0": float, "a1": float, "a2": float,
         "interval": [lo, hi], "init": [t0, z0]}

    ``init`` supplies the initial condition zeta(t0) = z0, and the value is
    computed from the closed-form solution of the constant-coefficient ODE.
    The usual certification (monotone, residual <= 1e-10) runs on the
    declared interval.
    """
    required = ("name", "r", "a0", "a1", "a2", "interval", "init")
    missing = [k for k in required if k not in decl]
    if missing:
        raise ValueError(f"custom activation declaration missing fields: {missing}")
    if decl["r"] != 0:
        raise ValueError("custom activations are restricted to Riccati index r = 0")
    lo, hi = (float(v) for v in decl["interval"])
    t0, z0 = (float(v) for v in decl["init"])
    if not lo < t0 < hi:
        raise ValueError("init point t0 must lie inside the declared interval")
    a0, a1, a2 = float(decl["a0"]), float(decl["a1"]), float(decl["a2"])
    flow = _riccati_flow(a0, a1, a2, t0, z0)
    return RiccatiActivation(
        name=str(decl["name"]),
        r=0,
        a0=a0,
        a1=a1,
        a2=a2,
        closed_forms=(flow,),
        analytic_interval=(lo, hi),
    )


def _install_builtins():
    register_activation(
        RiccatiActivation("logistic", 0, 0.0, 1.0, -1.0, (logistic,))
    )
    register_activation(
        RiccatiActivation("tanh", 0, 1.0, 0.0, -1.0, (np.tanh,))
    )
    register_activation(
        RiccatiActivation("softplus", 1, 0.0, 1.0, -1.0, (softplus, logistic))
    )


_install_builtins()
