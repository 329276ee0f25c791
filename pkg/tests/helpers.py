"""Independent oracles shared by the test modules.

Everything here deliberately avoids the code paths under test: finite
differences instead of jets, a dense uniform grid instead of the adaptive
zero search, textbook row reduction instead of the packed eliminator, and
repeated multiplication instead of Python's built-in pow.
"""

import numpy as np


def fd_derivative(f, t, h=1e-3):
    """Fourth-order central difference of a vectorized scalar map."""
    t = np.asarray(t, dtype=float)
    return (-f(t + 2 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2 * h)) / (12.0 * h)


def fd_gradient(f, x, h=1e-6):
    """Central-difference gradient of f: R^d -> R at one point."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for p in range(x.size):
        e = np.zeros_like(x)
        e[p] = h
        out[p] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def fd_hessian_entry(f, x, p, q, h=1e-4):
    x = np.asarray(x, dtype=float)
    ep = np.zeros_like(x)
    eq = np.zeros_like(x)
    ep[p] = h
    eq[q] = h
    if p == q:
        return (f(x + ep) - 2.0 * f(x) + f(x - ep)) / h**2
    return (
        f(x + ep + eq) - f(x + ep - eq) - f(x - ep + eq) + f(x - ep - eq)
    ) / (4.0 * h**2)


def dense_zero_locations(f, lo, hi, n=10**6, tol=1e-10):
    """Zeros by brute force: n uniform samples, sign changes, bisection."""
    xs = np.linspace(lo, hi, n)
    fx = np.asarray(f(xs), dtype=float)
    zeros = [float(x) for x in xs[fx == 0.0]]
    nz = fx != 0.0
    xsn, fxn = xs[nz], fx[nz]
    sg = np.sign(fxn)
    flips = np.flatnonzero(sg[:-1] * sg[1:] < 0)
    los, his = xsn[flips], xsn[flips + 1]
    flo = np.asarray(f(los), dtype=float)
    for _ in range(60):
        if los.size == 0 or np.max(his - los) <= tol:
            break
        mid = 0.5 * (los + his)
        fm = np.asarray(f(mid), dtype=float)
        same = (np.sign(fm) == np.sign(flo)) & (fm != 0.0)
        los = np.where(same, mid, los)
        flo = np.where(same, fm, flo)
        his = np.where(same, his, mid)
    zeros.extend(float(x) for x in 0.5 * (los + his))
    return sorted(zeros)


def naive_gf2_rank(M):
    """Textbook Gaussian elimination over Z2 on a dense 0/1 matrix."""
    M = (np.asarray(M) % 2).astype(np.uint8).copy()
    rows, cols = M.shape
    rank = 0
    pivot_row = 0
    for c in range(cols):
        piv = None
        for r in range(pivot_row, rows):
            if M[r, c]:
                piv = r
                break
        if piv is None:
            continue
        M[[pivot_row, piv]] = M[[piv, pivot_row]]
        for r in range(rows):
            if r != pivot_row and M[r, c]:
                M[r] ^= M[pivot_row]
        pivot_row += 1
        rank += 1
    return rank


def naive_pow(base: int, exponent: int) -> int:
    """Plain repeated multiplication, independent of pow/**."""
    out = 1
    for _ in range(exponent):
        out *= base
    return out


def sympy_bracket(components_a, components_b, variables):
    """Lie bracket of two polynomial vector fields, fully symbolic."""
    import sympy

    d = len(variables)
    out = []
    for a in range(d):
        expr = sympy.Integer(0)
        for b in range(d):
            expr += components_a[b] * sympy.diff(components_b[a], variables[b])
            expr -= components_b[b] * sympy.diff(components_a[a], variables[b])
        out.append(sympy.expand(expr))
    return out


def sparsepoly_to_sympy(poly, variables):
    import sympy

    expr = sympy.Integer(0)
    for exp, coeff in poly.terms.items():
        term = sympy.Float(coeff, 17)
        for var, e in zip(variables, exp):
            if e:
                term *= var**e
        expr += term
    return sympy.expand(expr)
