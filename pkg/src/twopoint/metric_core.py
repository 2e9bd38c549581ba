"""Finite metric spaces, covering chains and box-counting dimension."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from os import PathLike
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from twopoint.dyadic import DyadicRational
from twopoint.errors import (
    InsufficientDataError,
    InvalidArgument,
    MetricAxiomError,
    ParseError,
    SizeLimitError,
)

TRIANGLE_RTOL = 1e-9
COVER_ATOL = 1e-12
MAX_CANTOR_LEVEL = 15


def _norms(diff: np.ndarray) -> np.ndarray:
    """Euclidean norms along the last axis, scaled so tiny differences do not underflow."""
    scale = np.abs(diff).max(axis=-1)
    safe = np.where(scale > 0, scale, 1.0)
    unit = diff / safe[..., None]
    return scale * np.sqrt(np.einsum("...k,...k->...", unit, unit))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


class FiniteMetricSpace:
    """A finite set of points with a validated metric.

    Spaces built from coordinates keep only the coordinates and compute the
    Euclidean distance matrix on first use; spaces built from a matrix keep
    the matrix. ``generator`` records how the space was produced
    (``("interval", m)``, ``("cantor", level)``) so that covering chains can
    use the exact centre sets of those spaces. ``exact`` marks spaces whose
    coordinates are dyadic rationals with small denominators; their float
    distances are exact and are handed out as :class:`DyadicRational`.

    Instances are immutable.
    """

    __slots__ = ("points", "label", "coords", "generator", "exact", "_dist", "_diam")

    def __init__(self, points, dist=None, label: str = "", coords=None,
                 generator: Optional[tuple] = None, exact: bool = False):
        points = tuple(points)
        n = len(points)
        if coords is not None:
            coords = _frozen(coords)
            if coords.ndim == 1:
                coords = coords.reshape(-1, 1)
                coords.setflags(write=False)
            if coords.shape[0] != n:
                raise InvalidArgument(f"{coords.shape[0]} coordinate rows for {n} points")
        if dist is not None:
            dist = _frozen(dist)
            if dist.shape != (n, n):
                raise InvalidArgument(
                    f"distance matrix shape {dist.shape} does not match {n} points")
        elif coords is None:
            raise InvalidArgument("a space needs a distance matrix or coordinates")
        for name, value in (("points", points), ("label", label), ("coords", coords),
                            ("generator", generator), ("exact", exact), ("_dist", dist),
                            ("_diam", None)):
            object.__setattr__(self, name, value)

    def __setattr__(self, name, value):
        raise AttributeError("FiniteMetricSpace is immutable")

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"FiniteMetricSpace({self.label!r}, {len(self)} points)"

    @property
    def dist(self) -> np.ndarray:
        if self._dist is None:
            c = self.coords
            if c.shape[1] == 1:
                d = np.abs(c[:, 0][:, None] - c[:, 0][None, :])
            else:
                d = _norms(c[:, None, :] - c[None, :, :])
            d.setflags(write=False)
            object.__setattr__(self, "_dist", d)
        return self._dist

    def row(self, i: int) -> np.ndarray:
        """Distances from point ``i`` to every point."""
        if self._dist is not None:
            return self._dist[i]
        return _norms(self.coords - self.coords[i])

    @property
    def diam(self) -> float:
        if self._diam is None:
            if len(self) == 0:
                val = 0.0
            elif self._dist is None and self.coords.shape[1] == 1:
                val = float(np.ptp(self.coords[:, 0]))
            else:
                val = float(self.dist.max())
            object.__setattr__(self, "_diam", val)
        return self._diam

    def distance(self, i: int, j: int):
        """Distance between points ``i`` and ``j``; a DyadicRational on exact spaces."""
        if self._dist is not None:
            d = float(self._dist[i, j])
        else:
            d = float(_norms(self.coords[i] - self.coords[j]))
        return DyadicRational.from_float(d) if self.exact else d

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        rows, cols = np.asarray(rows, dtype=int), np.asarray(cols, dtype=int)
        if self._dist is not None:
            return self._dist[np.ix_(rows, cols)]
        a, b = self.coords[rows], self.coords[cols]
        return _norms(a[:, None, :] - b[None, :, :])

    def coordinate(self, i: int) -> float:
        """First coordinate of point ``i`` (its position for 1-D spaces)."""
        if self.coords is None:
            raise InvalidArgument(f"space {self.label!r} has no coordinates")
        return float(self.coords[i, 0])

    def relabel(self, perm: Sequence[int]) -> FiniteMetricSpace:
        """Return the space whose point ``k`` is point ``perm[k]`` of this one."""
        perm = np.asarray(perm)
        return FiniteMetricSpace(
            points=[self.points[p] for p in perm],
            dist=None if self._dist is None else self._dist[np.ix_(perm, perm)],
            label=self.label + " (relabelled)",
            coords=None if self.coords is None else self.coords[perm],
            exact=self.exact,
        )


def check_metric(dist: np.ndarray, rtol: float = TRIANGLE_RTOL) -> None:
    """Raise MetricAxiomError on the first violated axiom.

    Triangle violations are searched in lexicographic ``(i, j, k)`` order for
    ``d[i][k] > d[i][j] + d[j][k]``.
    """
    d = np.asarray(dist, dtype=float)
    n = d.shape[0]
    if d.ndim != 2 or d.shape[1] != n:
        raise MetricAxiomError("distance matrix must be square", ())
    if not np.all(np.isfinite(d)):
        i, j = np.argwhere(~np.isfinite(d))[0]
        raise MetricAxiomError(f"non-finite distance at ({i}, {j})", (int(i), int(j)))
    diag = np.nonzero(np.diag(d) != 0)[0]
    if diag.size:
        i = int(diag[0])
        raise MetricAxiomError(f"d[{i}][{i}] = {d[i, i]} is not zero", (i,))
    bad = np.argwhere(d < 0)
    if bad.size:
        i, j = map(int, bad[0])
        raise MetricAxiomError(f"negative distance d[{i}][{j}] = {d[i, j]}", (i, j))
    bad = np.argwhere(d != d.T)
    if bad.size:
        i, j = map(int, bad[0])
        raise MetricAxiomError(f"asymmetric distances at ({i}, {j})", (i, j))
    off = d + np.eye(n)
    bad = np.argwhere(off == 0)
    if bad.size:
        i, j = map(int, bad[0])
        raise MetricAxiomError(f"points {i} and {j} coincide (distance 0)", (i, j))
    for i in range(n):
        # via[j, k] = d[i][j] + d[j][k]
        via = d[i][:, None] + d
        excess = d[i][None, :] - via
        viol = excess > rtol * np.maximum(d[i][None, :], np.finfo(float).tiny)
        if viol.any():
            j, k = map(int, np.argwhere(viol)[0])
            raise MetricAxiomError(
                f"triangle inequality violated at ({i}, {j}, {k}): "
                f"d[{i}][{k}] = {d[i, k]} > d[{i}][{j}] + d[{j}][{k}] = {via[j, k]}",
                (i, j, k),
            )


def from_points(coords, label: str = "point cloud", **kw) -> FiniteMetricSpace:
    """Euclidean metric space on the rows of ``coords``."""
    c = np.asarray(coords, dtype=float)
    if c.ndim == 1:
        c = c.reshape(-1, 1)
    if c.ndim != 2 or c.shape[0] == 0:
        raise InvalidArgument("point cloud must be a non-empty 2-D array")
    if not np.all(np.isfinite(c)):
        raise InvalidArgument("point cloud has non-finite coordinates")
    _, first, counts = np.unique(c, axis=0, return_index=True, return_counts=True)
    if (counts > 1).any():
        row = c[first[np.argmax(counts > 1)]]
        i, j = np.nonzero((c == row).all(axis=1))[0][:2]
        raise MetricAxiomError(f"points {i} and {j} coincide (distance 0)", (int(i), int(j)))
    return FiniteMetricSpace(points=range(len(c)), label=label, coords=c, **kw)


def from_matrix(dist, label: str = "distance matrix", validate: bool = True) -> FiniteMetricSpace:
    d = np.asarray(dist, dtype=float)
    if validate:
        check_metric(d)
    return FiniteMetricSpace(points=range(d.shape[0]), dist=d, label=label)


def build_interval_grid(m: int) -> FiniteMetricSpace:
    """``m`` equally spaced points ``0, 1/(m-1), ..., 1`` with ``|x - y|``."""
    if not isinstance(m, (int, np.integer)) or m < 2:
        raise InvalidArgument(f"interval grid needs m >= 2, got {m!r}")
    m = int(m)
    xs = np.arange(m) / (m - 1)
    dyadic = (m - 1) & (m - 2) == 0 and m - 1 <= 1 << 50
    return from_points(xs, label=f"interval grid m={m}",
                       generator=("interval", m), exact=dyadic)


def cantor_points(level: int) -> list[float]:
    """Left endpoints of the ``2**level`` middle-third construction intervals, ascending."""
    pts = [0]
    for k in range(1, level + 1):
        step = 2 * 3 ** (level - k)
        pts = [p for q in pts for p in (q, q + step)]
    scale = 3 ** level
    return [p / scale for p in pts]


def build_cantor(level: int) -> FiniteMetricSpace:
    if level < 0:
        raise InvalidArgument(f"Cantor level must be >= 0, got {level}")
    if level > MAX_CANTOR_LEVEL:
        raise SizeLimitError(
            f"Cantor level {level} exceeds the limit {MAX_CANTOR_LEVEL} (2^level points)")
    return from_points(cantor_points(level), label=f"Cantor level {level}",
                       generator=("cantor", level))


def random_cloud(n: int, dim: int = 2, seed: int = 0) -> FiniteMetricSpace:
    """Seeded uniform sample of the unit cube."""
    rng = np.random.default_rng(seed)
    return from_points(rng.random((n, dim)), label=f"random cloud n={n} dim={dim} seed={seed}")


def load_space(path: str | PathLike, format: str = "distance-matrix",
               header: bool = False) -> FiniteMetricSpace:
    """Read a CSV file as a distance matrix or as a Euclidean point cloud.

    Lines starting with ``#`` are comments; ``header=True`` skips the first
    non-comment row.
    """
    if format not in ("distance-matrix", "point-cloud"):
        raise InvalidArgument(f"unknown space format {format!r}")
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    rows = [[v.strip() for v in r] for r in csv.reader(lines)]
    if header and rows:
        rows = rows[1:]
    try:
        arr = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if arr.size == 0:
        raise ParseError(f"{path}: no data rows")
    label = str(path)
    if format == "point-cloud":
        return from_points(arr, label=label)
    if arr.shape[0] != arr.shape[1]:
        raise ParseError(f"{path}: distance matrix is {arr.shape[0]}x{arr.shape[1]}")
    return from_matrix(arr, label=label)


@dataclass(frozen=True, eq=False)
class CoveringChain:
    """Centre sets ``levels[n-1] = T_n`` covering the space at radius ``theta * rho**(n-1)``."""

    space: FiniteMetricSpace
    theta: float
    rho: float
    levels: tuple[tuple[int, ...], ...]
    method: str = "greedy"
    radii: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(tuple(int(c) for c in t) for t in self.levels))
        object.__setattr__(self, "radii",
                           tuple(self.theta * self.rho ** n for n in range(len(self.levels))))

    @property
    def n_max(self) -> int:
        return len(self.levels)

    def centers(self, n: int) -> tuple[int, ...]:
        """``T_n`` for ``1 <= n <= n_max``."""
        if not 1 <= n <= self.n_max:
            raise IndexError(f"level {n} outside 1..{self.n_max}")
        return self.levels[n - 1]

    def radius(self, n: int) -> float:
        return self.radii[n - 1]

    def sizes(self) -> list[int]:
        return [len(t) for t in self.levels]

    def covering_radius(self, n: int) -> float:
        """Largest distance from a point to its nearest centre in ``T_n``."""
        t = list(self.centers(n))
        every = range(len(self.space))
        return float(self.space.submatrix(every, t).min(axis=1).max())

    def relabel(self, perm: Sequence[int]) -> CoveringChain:
        """Chain on ``space.relabel(perm)`` with the same centres."""
        inv = np.empty(len(perm), dtype=int)
        inv[np.asarray(perm)] = np.arange(len(perm))
        return CoveringChain(self.space.relabel(perm), self.theta, self.rho,
                             tuple(tuple(int(inv[c]) for c in t) for t in self.levels),
                             self.method)


def farthest_point_order(space: FiniteMetricSpace, r_min: float, start: int = 0):
    """Farthest-point ordering until the covering radius drops to ``r_min``.

    Returns ``(order, radii)`` with ``radii[k]`` the covering radius of the
    first ``k + 1`` points of ``order``. Ties go to the lowest index.
    """
    n = len(space)
    order = [start]
    mind = np.array(space.row(start), dtype=float)
    radii = [float(mind.max())]
    while radii[-1] > r_min and len(order) < n:
        nxt = int(np.argmax(mind))
        order.append(nxt)
        np.minimum(mind, space.row(nxt), out=mind)
        radii.append(float(mind.max()))
    return order, radii


def min_cover(dist: np.ndarray, r: float) -> list[int]:
    """Exact minimum set of centres covering every point within ``r`` (MILP)."""
    n = dist.shape[0]
    a = (dist <= r + COVER_ATOL).astype(float)
    res = milp(c=np.ones(n), constraints=LinearConstraint(a, lb=1, ub=np.inf),
               integrality=np.ones(n), bounds=Bounds(0, 1))
    if not res.success:  # pragma: no cover - every point covers itself
        raise RuntimeError(f"set-cover MILP failed: {res.message}")
    return [int(i) for i in np.nonzero(res.x > 0.5)[0]]


def _interval_centers(space: FiniteMetricSpace, theta: float, rho: float, n_max: int):
    if theta != 1 or rho != 0.5:
        raise InvalidArgument("the dyadic interval chain needs theta=1, rho=1/2")
    m = space.generator[1]
    levels = []
    for n in range(1, n_max + 1):
        if n == 1:
            # (2j+1) 2^(1-n) degenerates at n = 1; T_1 = T_2 = {1/2}
            numer, k = [1], 1
        else:
            numer, k = [2 * j + 1 for j in range(1 << (n - 2))], n - 1
        idx = []
        for p in numer:
            q, rem = divmod(p * (m - 1), 1 << k)
            if rem:
                raise InvalidArgument(
                    f"interval grid m={m} does not contain the level-{n} centres "
                    f"(needs spacing 2^-{k})")
            idx.append(q)
        levels.append(idx)
    return levels


def _cantor_centers(space: FiniteMetricSpace, theta: float, rho: float, n_max: int):
    if abs(theta - 0.5) > 1e-15 or abs(rho - 1 / 3) > 1e-15:
        raise InvalidArgument("the Cantor chain needs theta=1/2, rho=1/3")
    level = space.generator[1]
    npts = len(space)
    levels = []
    for n in range(1, n_max + 1):
        # one centre (its left endpoint) per level-n construction interval
        step = 1 << max(level - n, 0)
        levels.append(list(range(0, npts, step)))
    return levels


def covering_chain(space: FiniteMetricSpace, theta: float, rho: float, n_max: int,
                   method: str = "greedy", structured: bool = False) -> CoveringChain:
    """Centre sets ``T_1..T_{n_max}`` covering ``space`` at radii ``theta * rho**(n-1)``.

    ``method="greedy"`` takes prefixes of one farthest-point ordering started
    at point 0, so ``T_n`` is contained in ``T_{n+1}``. ``method="exact"``
    solves each level's set cover as a MILP (small spaces only).
    ``structured=True`` uses the known minimal centre sets of the generated
    interval grid (dyadic centres) and Cantor set instead.
    """
    if len(space) == 0:
        raise InvalidArgument("covering chain of an empty space")
    if not theta > 0:
        raise InvalidArgument(f"theta must be > 0, got {theta}")
    if not 0 < rho < 1:
        raise InvalidArgument(f"rho must lie in (0, 1), got {rho}")
    if n_max < 1:
        raise InvalidArgument(f"n_max must be >= 1, got {n_max}")
    radii = [theta * rho ** n for n in range(n_max)]
    if structured:
        kind = space.generator[0] if space.generator else None
        if kind == "interval":
            levels = _interval_centers(space, theta, rho, n_max)
        elif kind == "cantor":
            levels = _cantor_centers(space, theta, rho, n_max)
        else:
            raise InvalidArgument(f"no structured centre sets for space {space.label!r}")
        method = "structured"
    elif method == "greedy":
        tol = COVER_ATOL * max(1.0, space.diam)
        order, cover = farthest_point_order(space, radii[-1] + tol)
        levels = []
        for r in radii:
            k = next(i for i, c in enumerate(cover) if c <= r + tol)
            levels.append(order[: k + 1])
    elif method == "exact":
        levels = [min_cover(space.dist, r) for r in radii]
    else:
        raise InvalidArgument(f"unknown covering method {method!r}")
    return CoveringChain(space, theta, rho, levels, method)


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    per_level: list[float]
    fit_levels: list[int]


def minkowski_estimate(chain: CoveringChain) -> DimensionEstimate:
    """Upper box-counting dimension proxy from a covering chain.

    ``per_level[n-1] = log|T_n| / -log r_n`` (NaN where ``r_n = 1``). The
    slope is the least-squares fit of ``log|T_n|`` against ``-log r_n`` over
    the finest half of the levels.
    """
    if chain.n_max < 3:
        raise InsufficientDataError(f"need at least 3 levels, got {chain.n_max}")
    logs = np.log(np.array(chain.sizes(), dtype=float))
    neg_log_r = -np.log(np.array(chain.radii))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(neg_log_r != 0, logs / np.where(neg_log_r != 0, neg_log_r, 1), np.nan)
    half = chain.n_max // 2
    xs, ys = neg_log_r[half:], logs[half:]
    slope = float(np.polyfit(xs, ys, 1)[0]) if np.ptp(ys) > 0 else 0.0
    return DimensionEstimate(slope, [float(r) for r in ratios],
                             list(range(half + 1, chain.n_max + 1)))
