"""Slow, obviously-correct reference computations used only by the tests.

None of these import the package under test.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog


def brute_force_min_cover(dist: np.ndarray, r: float, atol: float = 1e-12) -> int:
    """Size of a minimum set of centres covering every point within ``r`` (exhaustive)."""
    n = dist.shape[0]
    covers = dist <= r + atol
    for k in range(1, n + 1):
        for subset in itertools.combinations(range(n), k):
            if covers[list(subset)].any(axis=0).all():
                return k
    raise AssertionError("unreachable: the full set covers")


def box_count(points: np.ndarray, eps: float) -> int:
    """Number of grid cells of side ``eps`` (anchored at 0) met by 1-D ``points``."""
    cells = np.floor(np.asarray(points, dtype=float) / eps + 1e-9).astype(np.int64)
    return len(np.unique(cells))


def box_dimension(points: np.ndarray, exponents) -> float:
    """Least-squares slope of ``log N(eps)`` against ``-log eps`` for ``eps = 3**-k``."""
    xs = np.array([k * math.log(3) for k in exponents])
    ys = np.array([math.log(box_count(points, 3.0 ** -k)) for k in exponents])
    return float(np.polyfit(xs, ys, 1)[0])


def metric_axioms_ok(d: np.ndarray, rtol: float = 1e-9) -> bool:
    n = d.shape[0]
    for i in range(n):
        if d[i, i] != 0:
            return False
        for j in range(n):
            if d[i, j] != d[j, i] or (i != j and d[i, j] <= 0):
                return False
            for k in range(n):
                if d[i, k] > d[i, j] + d[j, k] + rtol * d[i, k]:
                    return False
    return True


def floyd_warshall(n: int, edges) -> np.ndarray:
    """All-pairs shortest paths for undirected ``(a, b, w)`` edges."""
    d = np.full((n, n), math.inf)
    np.fill_diagonal(d, 0.0)
    for a, b, w in edges:
        if w < d[a, b]:
            d[a, b] = d[b, a] = w
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    return d


def lipschitz_sup_lp(n: int, edges, s: int, t: int) -> float:
    """``max f(t) - f(s)`` subject to ``|f(a) - f(b)| <= w`` per edge, ``f(s) = 0`` (LP)."""
    if s == t:
        return 0.0
    rows, rhs = [], []
    for a, b, w in edges:
        for sign in (1, -1):
            row = np.zeros(n)
            row[a], row[b] = sign, -sign
            rows.append(row)
            rhs.append(w)
    c = np.zeros(n)
    c[t] = -1.0
    bounds = [(None, None)] * n
    bounds[s] = (0, 0)
    res = linprog(c, A_ub=np.array(rows) if rows else None, b_ub=rhs or None,
                  bounds=bounds, method="highs")
    if res.status == 3:
        return math.inf
    assert res.status == 0, res.message
    return -res.fun


def counting_scan(magnitudes, lam) -> int:
    """Eigenvalues of ``D`` with ``|eig| <= lam`` from raw per-block magnitudes."""
    return sum(2 for v in magnitudes if v <= lam)


def dyadic_centres(n: int) -> list[Fraction]:
    """``T_n`` of the interval example as exact fractions."""
    if n == 1:
        return [Fraction(1, 2)]
    return [Fraction(2 * j + 1, 2 ** (n - 1)) for j in range(2 ** (n - 2))]


def interval_modules(n_min: int, n_max: int):
    """All ``(level, x, y, d)`` of the interval example by an O(N^2) scan per level."""
    out = []
    for n in range(n_min - 1, n_max + 1):
        tn, tn1 = dyadic_centres(n), dyadic_centres(n + 1)
        same = Fraction(8, 2 ** n)
        cross = Fraction(3, 2 ** n)
        if n >= n_min:
            for i, x in enumerate(tn):
                for y in tn[i + 1:]:
                    if abs(x - y) <= same:
                        out.append((n, x, y, abs(x - y)))
        for x in tn:
            for y in tn1:
                if abs(x - y) <= cross:
                    out.append((n, x, y, abs(x - y)))
    return out


def closed_form_multiplicities(n: int) -> tuple[int, int]:
    """|D| multiplicities of ``2**n`` and ``2**n / 3`` when levels ``n .. n+3`` are present.

    Level-``n`` next-level pairs at distance ``2**-n`` (``2**(n-1)`` of them),
    level-``n+2`` neighbours at ``4 * 2**-(n+2)`` (``2**n - 1``), level-``n+3``
    second neighbours at ``8 * 2**-(n+3)`` (``2**(n+1) - 2``); ``2**n / 3``
    comes from level-``n`` pairs at ``3 * 2**-n`` (``2**(n-1) - 2``). Two
    eigenvalues per module.
    """
    pow_mods = 2 ** (n - 1) + (2 ** n - 1) + (2 ** (n + 1) - 2)
    third_mods = 2 ** (n - 1) - 2
    return 2 * pow_mods, 2 * third_mods
