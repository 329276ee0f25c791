import math

import numpy as np
import pytest

from pfaffnet.activations import (
    RESIDUAL_TOL,
    RiccatiActivation,
    builtins,
    custom_from_declaration,
    eval_derivative,
    get_activation,
    logistic,
    riccati_residual,
)
from pfaffnet.errors import DomainError

from .helpers import fd_derivative

GRID = np.linspace(-5.0, 5.0, 100)


def test_builtin_registry_contents():
    table = {a.name: a for a in builtins()}
    assert set(table) == {"logistic", "tanh", "softplus"}
    assert table["logistic"].r == 0
    assert (table["logistic"].a0, table["logistic"].a1, table["logistic"].a2) == (0.0, 1.0, -1.0)
    assert table["tanh"].r == 0
    assert (table["tanh"].a0, table["tanh"].a1, table["tanh"].a2) == (1.0, 0.0, -1.0)
    assert table["softplus"].r == 1
    assert (table["softplus"].a0, table["softplus"].a1, table["softplus"].a2) == (0.0, 1.0, -1.0)


@pytest.mark.parametrize("name", ["logistic", "tanh", "softplus"])
def test_builtin_residual_certified(name):
    act = get_activation(name)
    assert riccati_residual(act, GRID) <= RESIDUAL_TOL


def test_softplus_ode_applies_to_first_derivative():
    softplus = get_activation("softplus")
    # zeta = softplus' = logistic; its finite-difference derivative must match
    # the quadratic with the declared coefficients.
    zeta = lambda t: eval_derivative(softplus, t, 1)
    dz = fd_derivative(zeta, GRID)
    rhs = zeta(GRID) - zeta(GRID) ** 2
    assert np.max(np.abs(dz - rhs)) < 1e-10


def test_point_values():
    assert eval_derivative(get_activation("logistic"), 0.0, 0) == pytest.approx(0.5, abs=1e-15)
    assert eval_derivative(get_activation("softplus"), 0.0, 0) == pytest.approx(
        math.log(2.0), abs=1e-15
    )
    # recurrence at the first non-closed-form order: 1 + 0*tanh(0) - tanh(0)^2
    assert eval_derivative(get_activation("tanh"), 0.0, 1) == pytest.approx(1.0, abs=1e-15)


def test_tanh_residual_at_zero_is_rounding_level():
    assert riccati_residual(get_activation("tanh"), [0.0]) < 1e-12


@pytest.mark.parametrize("name", ["logistic", "tanh", "softplus"])
@pytest.mark.parametrize("q", range(1, 7))
def test_derivatives_match_finite_differences(name, q):
    act = get_activation(name)
    ts = np.linspace(-4.0, 4.0, 41)
    got = eval_derivative(act, ts, q)
    ref = fd_derivative(lambda t: eval_derivative(act, t, q - 1), ts)
    scale = 1.0 + np.abs(ref)
    assert np.max(np.abs(got - ref) / scale) < 1e-6


@pytest.mark.parametrize("name", ["logistic", "tanh", "softplus"])
def test_monotone_on_sorted_samples(name, rng):
    act = get_activation(name)
    ts = np.sort(rng.uniform(-8.0, 8.0, size=1000))
    vals = eval_derivative(act, ts, 0)
    assert np.all(np.diff(vals) >= -1e-12)


@pytest.mark.parametrize("name", ["logistic", "tanh", "softplus"])
def test_recurrence_matches_symbolic_next_order(name):
    sympy = pytest.importorskip("sympy")
    act = get_activation(name)
    y = sympy.Symbol("y")
    q1 = act.a0 + act.a1 * y + act.a2 * y**2
    q2 = sympy.expand(sympy.diff(q1, y) * q1)
    f2 = sympy.lambdify(y, q2, "numpy")
    ts = np.linspace(-4.0, 4.0, 100)
    zeta = eval_derivative(act, ts, act.r)
    got = eval_derivative(act, ts, act.r + 2)
    assert np.max(np.abs(got - f2(zeta))) < 1e-9


def test_perturbed_coefficients_detected():
    act = get_activation("logistic")
    res = riccati_residual(act, GRID, coefficients=(act.a0 + 0.1, act.a1, act.a2))
    assert res > 0.05
    # the constant offset shows up exactly
    assert res == pytest.approx(0.1, abs=1e-10)


def test_constructor_rejects_wrong_coefficients():
    with pytest.raises(ValueError, match="residual"):
        RiccatiActivation("bad-logistic", 0, 0.25, 1.0, -1.0, (logistic,))


def test_constructor_rejects_zero_a2():
    with pytest.raises(ValueError, match="a2"):
        RiccatiActivation("linear", 0, 0.0, 1.0, 0.0, (lambda t: np.asarray(t),))


def test_constructor_rejects_decreasing():
    with pytest.raises(ValueError, match="nondecreasing"):
        RiccatiActivation(
            "neg-logistic",
            0,
            0.0,
            -1.0,
            1.0,
            (lambda t: -logistic(np.asarray(t)),),
            validate=True,
        )


def test_custom_declaration_reproduces_logistic():
    decl = {
        "name": "custom-logistic",
        "r": 0,
        "a0": 0.0,
        "a1": 1.0,
        "a2": -1.0,
        "interval": [-30.0, 30.0],
        "init": [0.0, 0.5],
    }
    act = custom_from_declaration(decl)
    ts = np.linspace(-8.0, 8.0, 200)
    ref = eval_derivative(get_activation("logistic"), ts, 0)
    assert np.max(np.abs(eval_derivative(act, ts, 0) - ref)) < 1e-12
    assert riccati_residual(act, np.linspace(-5, 5, 100)) <= RESIDUAL_TOL


def test_custom_declaration_tangent_type():
    # a0 = a2 = 1, a1 = 0: zeta' = 1 + zeta^2, zeta = tan(t): analytic on
    # (-pi/2, pi/2) and increasing there.
    decl = {
        "name": "custom-tan",
        "r": 0,
        "a0": 1.0,
        "a1": 0.0,
        "a2": 1.0,
        "interval": [-0.9, 0.9],
        "init": [0.0, 0.0],
    }
    act = custom_from_declaration(decl)
    ts = np.linspace(-1.4, 1.4, 100)
    assert np.max(np.abs(eval_derivative(act, ts, 0) - np.tan(ts))) < 1e-9


def test_custom_requires_r0():
    with pytest.raises(ValueError, match="r = 0"):
        custom_from_declaration(
            {
                "name": "x", "r": 1, "a0": 0.0, "a1": 1.0, "a2": -1.0,
                "interval": [-1, 1], "init": [0.0, 0.5],
            }
        )


def test_custom_missing_fields():
    with pytest.raises(ValueError, match="missing"):
        custom_from_declaration({"name": "x", "r": 0})


def test_domain_error_outside_interval():
    decl = {
        "name": "custom-tan2", "r": 0, "a0": 1.0, "a1": 0.0, "a2": 1.0,
        "interval": [-0.9, 0.9], "init": [0.0, 0.0],
    }
    act = custom_from_declaration(decl)
    with pytest.raises(DomainError):
        eval_derivative(act, 2.0, 0)
    with pytest.raises(DomainError):
        eval_derivative(act, np.array([0.0, -1.6]), 1)


def test_eval_derivative_rejects_negative_order():
    with pytest.raises(ValueError):
        eval_derivative(get_activation("tanh"), 0.0, -1)


def test_scalar_and_array_agree():
    act = get_activation("softplus")
    ts = np.linspace(-2, 2, 7)
    arr = eval_derivative(act, ts, 3)
    for t, v in zip(ts, arr):
        assert eval_derivative(act, float(t), 3) == pytest.approx(v, abs=0.0)
