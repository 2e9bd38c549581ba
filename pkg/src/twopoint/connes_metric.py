"""Metric induced on point states by a sum of two-point modules.

For point evaluations the supremum of ``|f(s) - f(t)|`` over functions with
``||[D, pi(f)]|| <= 1`` is a supremum over functions with
``|f(x) - f(y)| <= d(x, y)`` on every module ``{x, y}``. That is the linear
programming dual of a shortest path problem, so the induced distance is the
geodesic distance of the module graph (infinite across components).
:func:`induced_metric` uses that reduction; :func:`lp_oracle` solves the
supremum directly for small supports so the two can be compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from twopoint.errors import OracleSizeError
from twopoint.triple_builder import SpectralTripleSum

ORACLE_MAX_SUPPORT = 64
SANDWICH_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class InducedMetricReport:
    support: list
    d_induced: np.ndarray
    d_true: Optional[np.ndarray] = None
    max_ratio: float = math.nan
    min_ratio: float = math.nan
    violations: list = field(default_factory=list)
    mode: str = "none"
    tol: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def index(self, p: Hashable) -> int:
        return self.support.index(p)

    def distance(self, s: Hashable, t: Hashable) -> float:
        """Induced distance; points outside the support are isolated (0 to themselves, inf otherwise)."""
        if s == t:
            return 0.0
        if s not in self.support or t not in self.support:
            return math.inf
        return float(self.d_induced[self.index(s), self.index(t)])

    def rows(self):
        """``(s, t, d, d_induced, ratio)`` for every support pair ``s < t``."""
        n = len(self.support)
        for a in range(n):
            for b in range(a + 1, n):
                d = float(self.d_true[a, b]) if self.d_true is not None else math.nan
                di = float(self.d_induced[a, b])
                yield self.support[a], self.support[b], d, di, di / d

    def write_csv(self, fh, sep: str = ",") -> None:
        fh.write(sep.join(["s-id", "t-id", "d", "d_induced", "ratio"]) + "\n")
        for s, t, d, di, r in self.rows():
            fh.write(sep.join([str(s), str(t), f"{d:.15g}", f"{di:.15g}", f"{r:.15g}"]) + "\n")
        fh.write(f"# min_ratio{sep}{self.min_ratio:.15g}\n")
        fh.write(f"# max_ratio{sep}{self.max_ratio:.15g}\n")
        fh.write(f"# violations{sep}{len(self.violations)}\n")


SMALL_SUPPORT = 16


def _module_graph(triple: SpectralTripleSum):
    support = triple.support()
    index = {p: i for i, p in enumerate(support)}
    n = len(support)
    weight: dict[tuple[int, int], float] = {}
    for m in triple.modules:
        a, b = index[m.x], index[m.y]
        key = (a, b) if a < b else (b, a)
        w = float(m.d)
        if key not in weight or w < weight[key]:
            weight[key] = w
    return support, index, n, weight


def induced_metric(triple: SpectralTripleSum) -> InducedMetricReport:
    """Geodesic distance of the module graph between all support points."""
    support, _, n, weight = _module_graph(triple)
    if n == 0:
        return InducedMetricReport(support=[], d_induced=np.zeros((0, 0)))
    if n <= SMALL_SUPPORT:
        # dense min-plus closure; avoids sparse-matrix setup on tiny graphs
        dist = np.full((n, n), math.inf)
        np.fill_diagonal(dist, 0.0)
        for (a, b), w in weight.items():
            dist[a, b] = dist[b, a] = w
        for k in range(n):
            np.minimum(dist, dist[:, k:k + 1] + dist[k:k + 1, :], out=dist)
        dist.setflags(write=False)
        return InducedMetricReport(support=support, d_induced=dist)
    if weight:
        rows, cols = zip(*weight)
        graph = coo_matrix((list(weight.values()), (rows, cols)), shape=(n, n)).tocsr()
    else:  # pragma: no cover - nonempty support implies an edge
        graph = coo_matrix((n, n)).tocsr()
    dist = shortest_path(graph, method="D", directed=False)
    dist.setflags(write=False)
    return InducedMetricReport(support=support, d_induced=dist)


def lp_oracle(triple: SpectralTripleSum, s: Hashable, t: Hashable) -> float:
    """``sup |f(s) - f(t)|`` over ``f`` with ``|f(x) - f(y)| <= d(x, y)`` per module.

    Starting from ``f(s) = 0`` and ``f = +inf`` elsewhere, each sweep lowers
    ``f`` to the tightest value the constraints allow; the fixed point is
    the largest admissible function vanishing at ``s``, and its value at
    ``t`` is the supremum (``inf`` when ``t`` is unconstrained).
    """
    support, index, n, weight = _module_graph(triple)
    if n > ORACLE_MAX_SUPPORT:
        raise OracleSizeError(f"oracle support {n} exceeds {ORACLE_MAX_SUPPORT}")
    if s == t:
        return 0.0
    if s not in index or t not in index:
        return math.inf
    f = [math.inf] * n
    f[index[s]] = 0.0
    edges = [(a, b, w) for (a, b), w in weight.items()]
    for _ in range(n + 1):
        changed = False
        for a, b, w in edges:
            if f[a] + w < f[b]:
                f[b] = f[a] + w
                changed = True
            if f[b] + w < f[a]:
                f[a] = f[b] + w
                changed = True
        if not changed:
            break
    return f[index[t]]


def metric_report(triple: SpectralTripleSum, mode: str = "exact",
                  delta: Optional[float] = None) -> InducedMetricReport:
    """Compare the induced metric with the true one on all support pairs.

    ``mode="exact"`` flags pairs with ``|d_induced - d| > tol``;
    ``mode="sandwich"`` flags pairs outside ``[d - tol, (1 + delta) d + tol]``.
    ``tol = 1e-9 * diam`` of the support.
    """
    if mode not in ("exact", "sandwich"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "sandwich" and delta is None:
        delta = triple.params.get("delta")
        if delta is None:
            raise ValueError("sandwich mode needs delta")
    base = induced_metric(triple)
    support = base.support
    n = len(support)
    if n == 0:
        return InducedMetricReport(support=[], d_induced=base.d_induced,
                                   d_true=np.zeros((0, 0)), mode=mode)
    true = np.array(triple.distance_matrix(support), dtype=float)
    tol = SANDWICH_RTOL * float(true.max())
    iu = np.triu_indices(n, 1)
    dt, di = true[iu], base.d_induced[iu]
    if dt.size:
        ratios = di / dt
        max_r, min_r = float(ratios.max()), float(ratios.min())
    else:
        max_r = min_r = math.nan
    if mode == "exact":
        bad = np.abs(di - dt) > tol
    else:
        bad = (di < dt - tol) | (di > (1 + delta) * dt + tol)
    violations = [(support[iu[0][k]], support[iu[1][k]], float(dt[k]), float(di[k]))
                  for k in np.nonzero(bad)[0]]
    true.setflags(write=False)
    return InducedMetricReport(support=support, d_induced=base.d_induced, d_true=true,
                               max_ratio=max_r, min_ratio=min_r, violations=violations,
                               mode=mode, tol=tol)
