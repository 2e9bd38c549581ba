"""Spectral triples built as direct sums of two-point modules.

Two constructions are provided:

* :func:`build_st_d` pairs every two points of a finite space and shifts the
  diagonal of the n-th block by ``2**n``; the induced metric is the original
  one.
* :func:`build_st_delta` pairs centres of a covering chain whose distance is
  below a level-dependent threshold; the induced metric is within a factor
  ``1 + delta`` of the original one and the spectrum sees the box-counting
  dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping, Optional, TextIO, Union

import numpy as np

from twopoint.dyadic import DyadicRational, format_number
from twopoint.errors import (
    DegeneratePairError,
    EmptyTripleError,
    InsufficientChainError,
    InvalidArgument,
)
from twopoint.metric_core import CoveringChain, FiniteMetricSpace

Distance = Union[float, DyadicRational]


def _as_fraction(x) -> Fraction:
    if isinstance(x, DyadicRational):
        return x.to_fraction()
    return Fraction(x)


@dataclass(frozen=True, slots=True)
class TwoPointModule:
    """One 2x2 summand ``[[diag, 1/d], [1/d, -diag]]`` acting on ``C^2``.

    ``role`` is ``"pair"`` for all-pairs blocks, ``"same"`` when both
    centres sit in ``T_level`` and ``"cross"`` when ``x`` is in ``T_level``
    and ``y`` in ``T_{level+1}``.
    """

    x: Hashable
    y: Hashable
    d: Distance
    diag: int = 0
    level: int = 0
    role: str = "pair"

    def magnitude(self) -> Union[Fraction, float]:
        """``sqrt(diag**2 + d**-2)``; exact (a Fraction) when ``diag == 0`` and ``d`` is dyadic."""
        if self.diag == 0:
            if isinstance(self.d, DyadicRational):
                return self.d.reciprocal()
            return 1.0 / float(self.d)
        n = self.diag.bit_length() - 1
        if self.diag != 1 << n:
            return math.hypot(float(self.diag), 1.0 / float(self.d))
        inv = 1.0 / float(self.d)
        try:
            # 2^n * sqrt(1 + (d^-1 / 2^n)^2) without forming 4^n
            return math.ldexp(math.hypot(1.0, math.ldexp(inv, -n)), n)
        except OverflowError:
            return math.inf

    def eigenvalues(self) -> tuple:
        m = self.magnitude()
        return (-m, m)

    def squared_magnitude(self) -> Fraction:
        """Exact ``diag**2 + d**-2``."""
        return Fraction(self.diag) ** 2 + 1 / _as_fraction(self.d) ** 2

    def matrix(self) -> np.ndarray:
        """The block as a float array (small ``diag`` only)."""
        inv = 1.0 / float(self.d)
        s = float(self.diag)
        return np.array([[s, inv], [inv, -s]])


def two_point_module(x: Hashable, y: Hashable, d: Distance) -> TwoPointModule:
    """Block carrying the distance ``d`` between two distinct points."""
    if x == y or not d > 0:
        raise DegeneratePairError(
            f"pair ({x!r}, {y!r}) with distance {d} carries the zero Hilbert space")
    return TwoPointModule(x, y, d)


@dataclass(frozen=True, eq=False)
class SpectralTripleSum:
    """Direct sum of two-point modules.

    Point ids are space indices for triples built on a
    :class:`FiniteMetricSpace`; triples without a space (the dyadic interval
    example) use the points' exact positions as ids and supply
    ``distance_fn``/``coordinate_fn``.
    """

    modules: tuple[TwoPointModule, ...]
    kind: str
    space: Optional[FiniteMetricSpace] = None
    params: Mapping = field(default_factory=dict)
    distance_fn: Optional[Callable[[Hashable, Hashable], float]] = None
    coordinate_fn: Optional[Callable[[Hashable], float]] = None

    def __post_init__(self):
        object.__setattr__(self, "modules", tuple(self.modules))
        object.__setattr__(self, "params", dict(self.params))

    def __len__(self) -> int:
        return len(self.modules)

    def support(self) -> list:
        """Points that appear in at least one module, sorted."""
        pts = {m.x for m in self.modules} | {m.y for m in self.modules}
        return sorted(pts)

    def levels(self) -> dict[int, list[TwoPointModule]]:
        out: dict[int, list[TwoPointModule]] = {}
        for m in self.modules:
            out.setdefault(m.level, []).append(m)
        return dict(sorted(out.items()))

    def true_distance(self, a: Hashable, b: Hashable) -> float:
        if self.distance_fn is not None:
            return float(self.distance_fn(a, b))
        if self.space is None and self.coordinate_fn is not None:
            return abs(self.coordinate(a) - self.coordinate(b))
        if self.space is None:
            raise InvalidArgument("triple has no underlying space")
        return float(self.space.distance(a, b))

    def distance_matrix(self, points: list) -> np.ndarray:
        """True distances between ``points``."""
        if self.space is not None and self.distance_fn is None:
            return self.space.submatrix(points, points)
        if self.distance_fn is None and self.coordinate_fn is not None:
            c = np.array([self.coordinate(p) for p in points])
            return np.abs(c[:, None] - c[None, :])
        n = len(points)
        out = np.zeros((n, n))
        for a in range(n):
            for b in range(a + 1, n):
                out[a, b] = out[b, a] = self.true_distance(points[a], points[b])
        return out

    def coordinate(self, p: Hashable) -> float:
        if self.coordinate_fn is not None:
            return float(self.coordinate_fn(p))
        if self.space is None:
            raise InvalidArgument("triple has no underlying space")
        return self.space.coordinate(p)

    def dump(self, fh: TextIO) -> None:
        """One tab-separated line per module: level, x, y, d, diag."""
        for m in self.modules:
            fh.write(f"{m.level}\t{m.x}\t{m.y}\t{format_number(m.d)}\t{m.diag}\n")


def single_pair_triple(space: FiniteMetricSpace, i: int, j: int) -> SpectralTripleSum:
    return SpectralTripleSum((two_point_module(i, j, space.distance(i, j)),),
                             kind="two_point", space=space)


def build_st_d(space: FiniteMetricSpace) -> SpectralTripleSum:
    """All unordered pairs ``i < j`` in lexicographic order; block ``n`` has diagonal ``2**n``."""
    if len(space) < 2:
        raise EmptyTripleError("the all-pairs triple needs at least 2 points")
    mods = []
    n = 0
    for i in range(len(space)):
        for j in range(i + 1, len(space)):
            n += 1
            mods.append(TwoPointModule(i, j, space.distance(i, j), diag=1 << n, level=n))
    return SpectralTripleSum(tuple(mods), kind="st_d", space=space)


@dataclass(frozen=True)
class InteractionParams:
    k0: int
    l: int


def interaction_params(theta: float, rho: float, delta: float, diam: float) -> InteractionParams:
    """Scale index ``k0`` of the diameter and the interaction length ``l``.

    ``k0`` is the integer with ``theta*rho**(k0+1) < diam <= theta*rho**k0``.
    ``l`` is ``max(0, -k0)`` when ``4/(1-rho) < delta``, otherwise the least
    ``l >= -k0`` with ``4*rho**l/(1-rho) < delta``. All comparisons are exact
    on the rational values of the (float) arguments.
    """
    if not theta > 0 or not 0 < rho < 1 or not delta > 0 or not diam > 0:
        raise InvalidArgument(
            f"need theta > 0, 0 < rho < 1, delta > 0, diam > 0; got "
            f"theta={theta}, rho={rho}, delta={delta}, diam={diam}")
    th, r, de, dm = (_as_fraction(v) for v in (theta, rho, delta, diam))
    k = math.floor(math.log(float(dm / th)) / math.log(float(r)))
    for _ in range(10_000):
        if not dm <= th * r ** k:
            k -= 1
        elif not th * r ** (k + 1) < dm:
            k += 1
        else:
            break
    else:  # pragma: no cover
        raise RuntimeError("k0 search did not converge")
    if 4 / (1 - r) < de:
        return InteractionParams(k, max(0, -k))
    l = max(0, -k)
    while not 4 * r ** l / (1 - r) < de:
        l += 1
    return InteractionParams(k, l)


def pair_thresholds(theta: float, rho: float, l: int, n: int) -> tuple[Fraction, Fraction]:
    """Largest admissible distances for same-level and next-level pairs at level ``n``."""
    th, r = _as_fraction(theta), _as_fraction(rho)
    base = th * r ** (n - 1)
    return (2 + r ** -(l + 1)) * base, (1 + r) * base


def _le_exact(vals: np.ndarray, thr: Fraction) -> np.ndarray:
    """Mask ``vals <= thr`` evaluated exactly for float ``vals``."""
    t = float(thr)
    if Fraction(t) > thr:
        t = np.nextafter(t, -np.inf)
    return vals <= t


def build_st_delta(space: FiniteMetricSpace, chain: CoveringChain, delta: float,
                   n_min: int = 1, n_max: Optional[int] = None) -> SpectralTripleSum:
    """Pairs of chain centres admitted by the interaction-length rules.

    For each level ``n_min <= n <= n_max``: pairs of distinct centres of
    ``T_n`` within ``(2 + rho**-(l+1)) * theta * rho**(n-1)`` and pairs
    ``x in T_n``, ``y in T_{n+1}`` within ``(1 + rho) * theta * rho**(n-1)``.
    A point pair admitted twice at the same level is kept once; coincident
    centres (distance 0) are skipped.
    """
    if chain.space is not space:
        raise InvalidArgument("chain was built on a different space")
    if n_max is None:
        n_max = chain.n_max - 1
    if n_min < 1:
        raise InvalidArgument(f"n_min must be >= 1, got {n_min}")
    if not delta > 0:
        raise InvalidArgument(f"delta must be > 0, got {delta}")
    ip = interaction_params(chain.theta, chain.rho, delta, space.diam) if len(space) > 1 \
        else InteractionParams(0, 0)
    params = dict(theta=chain.theta, rho=chain.rho, delta=delta, k0=ip.k0, l=ip.l,
                  n_min=n_min, n_max=n_max)
    if n_max < n_min:
        return SpectralTripleSum((), kind="st_delta", space=space, params=params)
    if chain.n_max < n_max + 1:
        raise InsufficientChainError(
            f"chain has {chain.n_max} levels; levels up to {n_max + 1} are needed")
    mods = []
    for n in range(n_min, n_max + 1):
        same_thr, cross_thr = pair_thresholds(chain.theta, chain.rho, ip.l, n)
        tn = np.array(chain.centers(n), dtype=int)
        tn1 = np.array(chain.centers(n + 1), dtype=int)
        seen = set()
        dd = space.submatrix(tn, tn)
        ok = _le_exact(dd, same_thr) & (dd > 0)
        for a, b in np.argwhere(np.triu(ok, 1)):
            x, y = int(tn[a]), int(tn[b])
            key = (min(x, y), max(x, y))
            if key in seen:
                continue
            seen.add(key)
            mods.append(TwoPointModule(key[0], key[1], space.distance(*key), level=n, role="same"))
        dd = space.submatrix(tn, tn1)
        ok = _le_exact(dd, cross_thr) & (dd > 0)
        for a, b in np.argwhere(ok):
            x, y = int(tn[a]), int(tn1[b])
            key = (min(x, y), max(x, y))
            if key in seen:
                continue
            seen.add(key)
            mods.append(TwoPointModule(x, y, space.distance(x, y), level=n, role="cross"))
    return SpectralTripleSum(tuple(mods), kind="st_delta", space=space, params=params)


def spectral_gap_bounds(theta: float, rho: float, l: int, n: int) -> tuple[Fraction, Fraction]:
    """Lower bounds on ``|eigenvalue|`` for same-level and next-level blocks at level ``n``."""
    same_thr, cross_thr = pair_thresholds(theta, rho, l, n)
    return 1 / same_thr, 1 / cross_thr


def modules_from_pairs(pairs: Iterable[tuple[Hashable, Hashable, Distance]],
                       **kw) -> SpectralTripleSum:
    """Triple from explicit ``(x, y, d)`` triples (testing and ad-hoc use)."""
    mods = tuple(two_point_module(x, y, d) for x, y, d in pairs)
    return SpectralTripleSum(mods, kind=kw.pop("kind", "custom"), **kw)
