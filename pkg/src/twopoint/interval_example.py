"""The dyadic interval construction with delta = 9, theta = 1, rho = 1/2.

Centres of level ``n >= 2`` are ``(2j + 1) * 2**(1 - n)`` for
``0 <= j < 2**(n-2)`` and ``T_1 = {1/2}``. With these parameters ``k0 = 0``
and ``l = 0``, so a level-``n`` centre is paired with the other level-``n``
centres within ``8 * 2**-n`` and with level-``n+1`` centres within
``3 * 2**-n``. Levels start at ``n_min = 5``; level-4 centres only appear as
partners of level-5 centres (those pairs are tagged level 4).

Positions are handled as integers: a level-``n`` module stores its points
and distance in units of ``2**-(n+1)``, where level-``n`` centres are
``8j + 4`` and level-``n+1`` centres are ``4j + 2``. Every eigenvalue is then
the exact rational ``2**(n+1) / units``.

Two evaluation paths exist. The explicit path enumerates every module
(feasible up to ``n_max = 16``). The aggregate path never materialises
modules: per level it uses the slot pattern of a regular centre times the
number of regular centres plus an exact scan of the few centres next to
0 and 1.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from twopoint.dyadic import DyadicRational
from twopoint.errors import InvalidArgument, SizeLimitError
from twopoint.triple_builder import (
    SpectralTripleSum,
    TwoPointModule,
    interaction_params,
    pair_thresholds,
)

N_MIN = 5
N_MAX_RANGE = (6, 30)
EXPLICIT_MAX = 16
DEFAULT_N_MAX = 20
THETA = Fraction(1)
RHO = Fraction(1, 2)
DELTA = Fraction(9)

TestFunction = Union[Callable, Mapping]


class PartialLevelWarning(UserWarning):
    """A multiplicity was requested for a level whose contributing neighbours are truncated."""


def _thresholds_units(n: int, l: int) -> tuple[int, int]:
    """Same-level and next-level thresholds at level ``n`` in units of ``2**-(n+1)``."""
    same, cross = pair_thresholds(THETA, RHO, l, n)
    scale = 2 ** (n + 1)
    same_u, cross_u = same * scale, cross * scale
    # the centre lattice is integral in these units, so flooring is exact
    return math.floor(same_u), math.floor(cross_u)


def centre_units(n: int, unit_exp: int) -> np.ndarray:
    """Level-``n`` centres as integers in units of ``2**-unit_exp``."""
    if n < 1 or unit_exp < n - 1:
        raise InvalidArgument(f"cannot express level {n} in units of 2^-{unit_exp}")
    if n == 1:
        return np.array([1 << (unit_exp - 1)], dtype=np.int64)
    step = 1 << (unit_exp + 2 - n)
    return np.arange(step // 2, 1 << unit_exp, step, dtype=np.int64)


def _ragged_pairs(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cnt = hi - lo
    rows = np.repeat(np.arange(len(lo)), cnt)
    offs = np.cumsum(cnt) - cnt
    cols = np.arange(int(cnt.sum())) - np.repeat(offs, cnt) + np.repeat(lo, cnt)
    return rows, cols


@dataclass(frozen=True)
class LevelModules:
    """Modules of one level as integer arrays in units of ``2**-(level+1)``."""

    level: int
    x: np.ndarray
    y: np.ndarray
    units: np.ndarray
    same: np.ndarray  # bool: True for same-level pairs

    def __len__(self) -> int:
        return len(self.x)


def enumerate_level(n: int, l: int = 0, same_level: bool = True) -> LevelModules:
    """All admitted pairs owned by level ``n``, found by threshold search."""
    same_thr, cross_thr = _thresholds_units(n, l)
    a = centre_units(n, n + 1)
    b = centre_units(n + 1, n + 1)
    xs, ys, us, ss = [], [], [], []
    if same_level:
        hi = np.searchsorted(a, a + same_thr, side="right")
        lo = np.arange(1, len(a) + 1)
        r, c = _ragged_pairs(lo, np.maximum(hi, lo))
        xs.append(a[r]); ys.append(a[c]); us.append(a[c] - a[r])
        ss.append(np.ones(len(r), dtype=bool))
    lo = np.searchsorted(b, a - cross_thr, side="left")
    hi = np.searchsorted(b, a + cross_thr, side="right")
    r, c = _ragged_pairs(lo, hi)
    xs.append(a[r]); ys.append(b[c]); us.append(np.abs(b[c] - a[r]))
    ss.append(np.zeros(len(r), dtype=bool))
    return LevelModules(n, np.concatenate(xs), np.concatenate(ys),
                        np.concatenate(us), np.concatenate(ss))


def _owned_slots(n: int, x: int, l: int = 0, same_level: bool = True) -> list[tuple[bool, int]]:
    """``(same, units)`` of the modules owned by the level-``n`` centre at ``x``.

    Same-level pairs are owned by their left point. Plain integer scan,
    independent of :func:`enumerate_level`.
    """
    same_thr, cross_thr = _thresholds_units(n, l)
    top_n = (1 << (n + 1)) - 4
    out = []
    if same_level:
        y = x + 8
        while y - x <= same_thr and y <= top_n:
            out.append((True, y - x))
            y += 8
    # level n+1 centres are 2 mod 4; start at the first one >= x - cross_thr
    y = x - cross_thr
    y += (2 - y) % 4
    while y <= x + cross_thr:
        if 2 <= y <= (1 << (n + 1)) - 2:
            out.append((False, abs(y - x)))
        y += 4
    return out


def pattern_counts(n: int, l: int = 0, same_level: bool = True) -> Counter:
    """``{(same, units): count}`` for level ``n`` from the regular pattern plus boundary scan."""
    size = 1 << (n - 2)
    boundary = sorted({j for j in (0, 1, size - 2, size - 1) if 0 <= j < size})
    counts: Counter = Counter()
    for j in boundary:
        counts.update(_owned_slots(n, 8 * j + 4, l, same_level))
    regular = size - len(boundary)
    if regular > 0:
        for slot, k in Counter(_owned_slots(n, 8 * 2 + 4, l, same_level)).items():
            counts[slot] += k * regular
    return counts


def _function_values(f: TestFunction, units: np.ndarray, unit_exp: int) -> np.ndarray:
    if isinstance(f, Mapping):
        return np.array([float(f[DyadicRational(int(u), unit_exp)]) for u in units])
    xs = np.ldexp(units.astype(float), -unit_exp)
    try:
        vals = np.asarray(f(xs), dtype=float)
        return np.broadcast_to(vals, xs.shape).astype(float)
    except (TypeError, ValueError):
        return np.array([float(f(float(v))) for v in xs])


@dataclass(frozen=True)
class CentreSlots:
    """The |D| eigenvalues of the modules incident to one centre."""

    level: int
    index: int
    position: DyadicRational
    down: tuple[Fraction, ...]
    same: tuple[Fraction, ...]
    up: tuple[Fraction, ...]

    @property
    def eigenvalues(self) -> list[Fraction]:
        return sorted(self.down + self.same + self.up)

    @property
    def degree(self) -> int:
        return len(self.down) + len(self.same) + len(self.up)

    def trace(self) -> Fraction:
        """``tr(Q |D|^-1)``: the sum of the incident distances."""
        return sum((1 / v for v in self.eigenvalues), Fraction(0))


@dataclass(frozen=True, eq=False)
class IntervalTriple:
    n_max: int
    n_min: int = N_MIN
    l: int = 0
    k0: int = 0
    _dix_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @property
    def params(self) -> dict:
        return dict(theta=float(THETA), rho=float(RHO), delta=float(DELTA), k0=self.k0,
                    l=self.l, n_min=self.n_min, n_max=self.n_max)

    @property
    def module_levels(self) -> range:
        """Levels that own modules; ``n_min - 1`` only carries the partner pairs."""
        return range(self.n_min - 1, self.n_max + 1)

    @property
    def explicit_ok(self) -> bool:
        return self.n_max <= EXPLICIT_MAX

    def _same_level(self, n: int) -> bool:
        return n >= self.n_min

    def centres(self, n: int) -> list[DyadicRational]:
        return [DyadicRational(int(u), n + 1) for u in centre_units(n, n + 1)]

    # explicit path -------------------------------------------------------

    def level_modules(self, n: int) -> LevelModules:
        if n not in self.module_levels:
            raise InvalidArgument(f"level {n} outside {self.n_min - 1}..{self.n_max}")
        return enumerate_level(n, self.l, self._same_level(n))

    def modules(self) -> list[TwoPointModule]:
        if not self.explicit_ok:
            raise SizeLimitError(
                f"explicit modules are limited to n_max <= {EXPLICIT_MAX}; got {self.n_max}")
        out = []
        for n in self.module_levels:
            lm = self.level_modules(n)
            e = n + 1
            for x, y, u, s in zip(lm.x.tolist(), lm.y.tolist(), lm.units.tolist(),
                                  lm.same.tolist()):
                out.append(TwoPointModule(DyadicRational(x, e), DyadicRational(y, e),
                                          DyadicRational(u, e), level=n,
                                          role="same" if s else "cross"))
        return out

    def as_triple(self) -> SpectralTripleSum:
        return SpectralTripleSum(tuple(self.modules()), kind="st_delta", space=None,
                                 params=self.params, coordinate_fn=float)

    # aggregate path ------------------------------------------------------

    def level_counts(self, n: int, path: str = "aggregate") -> Counter:
        """``{(same, units): count}`` for level ``n`` by either path."""
        if path == "aggregate":
            return pattern_counts(n, self.l, self._same_level(n))
        if path == "explicit":
            lm = self.level_modules(n)
            return Counter(zip(lm.same.tolist(), lm.units.tolist()))
        raise InvalidArgument(f"unknown path {path!r}")

    def spectrum(self, path: Optional[str] = None):
        from twopoint.spectral import histogram_from_counts

        if path is None:
            path = "explicit" if self.explicit_ok else "aggregate"
        if path == "explicit" and not self.explicit_ok:
            raise SizeLimitError(f"explicit spectrum needs n_max <= {EXPLICIT_MAX}")
        counts = Counter()
        for n in self.module_levels:
            for (_, u), k in self.level_counts(n, path).items():
                counts[Fraction(1 << (n + 1), u)] += 2 * k
        return histogram_from_counts(counts.items())

    def level_power_sums(self, s: float) -> dict[int, float]:
        """``sum d**s`` over the modules owned by each level."""
        out = {}
        for n in self.module_levels:
            out[n] = math.fsum(k * math.ldexp(u, -(n + 1)) ** s
                               for (_, u), k in self.level_counts(n).items())
        return out

    def _class_sums(self, f: TestFunction) -> list[tuple[Fraction, float, float]]:
        """``(eigenvalue, distance, sum of f(x) + f(y))`` per level and distance class."""
        key = id(f)
        hit = self._dix_cache.get(key)
        if hit is not None and hit[0] is f:
            return hit[1]
        out = []
        for n in self.module_levels:
            lm = self.level_modules(n)
            fx = _function_values(f, lm.x, n + 1) + _function_values(f, lm.y, n + 1)
            for u in np.unique(lm.units).tolist():
                sel = lm.units == u
                out.append((Fraction(1 << (n + 1), u), math.ldexp(u, -(n + 1)),
                            float(np.sum(fx[sel]))))
        self._dix_cache.clear()
        self._dix_cache[key] = (f, out)
        return out

    def dixmier_traces(self, f: TestFunction, lams: Iterable[float]) -> list[float]:
        """``tr(|D|^-1 P_lam pi(f))`` for each ``lam``."""
        classes = self._class_sums(f)
        return [math.fsum(d * fs for v, d, fs in classes if v <= lam) for lam in lams]

    def dixmier_trace(self, f: TestFunction, lam: float) -> float:
        return self.dixmier_traces(f, [lam])[0]

    # single centres ------------------------------------------------------

    def centre_slots(self, n: int, j: int) -> CentreSlots:
        """Incident modules of the ``j``-th centre of level ``n`` (scan in units of ``2**-(n+1)``)."""
        if not self.n_min <= n <= self.n_max:
            raise InvalidArgument(f"centre level {n} outside {self.n_min}..{self.n_max}")
        size = 1 << (n - 2)
        if not 0 <= j < size:
            raise InvalidArgument(f"centre index {j} outside 0..{size - 1}")
        x = 8 * j + 4
        e = n + 1
        same_thr, cross_thr = _thresholds_units(n, self.l)
        _, down_thr = _thresholds_units(n - 1, self.l)  # in units of 2^-n
        down = []
        # level n-1 centres in units 2^-(n+1) are 16k + 8; the threshold doubles
        for c in range(8, 1 << e, 16):
            if abs(c - x) <= 2 * down_thr:
                down.append(Fraction(1 << e, abs(c - x)))
        same = [Fraction(1 << e, abs(c - x)) for c in range(4, 1 << e, 8)
                if c != x and abs(c - x) <= same_thr]
        up = [Fraction(1 << e, abs(c - x)) for c in range(2, 1 << e, 4)
              if abs(c - x) <= cross_thr]
        return CentreSlots(n, j, DyadicRational(x, e), tuple(sorted(down)),
                           tuple(sorted(same)), tuple(sorted(up)))


def build_interval_st9(n_max: int = DEFAULT_N_MAX) -> IntervalTriple:
    lo, hi = N_MAX_RANGE
    if not isinstance(n_max, int) or not lo <= n_max <= hi:
        raise InvalidArgument(f"n_max must be an integer in [{lo}, {hi}], got {n_max!r}")
    ip = interaction_params(THETA, RHO, DELTA, 1)
    return IntervalTriple(n_max=n_max, l=ip.l, k0=ip.k0)


@dataclass(frozen=True)
class MultiplicityRow:
    n: int
    mult_pow: int
    ideal_pow: int
    mult_third: int
    ideal_third: int
    complete: bool

    @property
    def deficit_pow(self) -> int:
        return self.ideal_pow - self.mult_pow

    @property
    def deficit_third(self) -> int:
        return self.ideal_third - self.mult_third


def multiplicity_table(triple: IntervalTriple, levels: Optional[Iterable[int]] = None,
                       path: Optional[str] = None) -> list[MultiplicityRow]:
    """Exact ``|D|`` multiplicities of ``2**n`` and ``2**n / 3`` with the idealised ``7 * 2**n`` and ``2**n``.

    Levels outside ``[n_min + 4, n_max - 4]`` miss some contributing
    neighbour levels; they are reported with ``complete=False`` and a
    :class:`PartialLevelWarning`.
    """
    lo, hi = triple.n_min + 4, triple.n_max - 4
    if levels is None:
        levels = range(lo, hi + 1)
    spec = triple.spectrum(path)
    rows = []
    for n in levels:
        complete = lo <= n <= hi
        if not complete:
            warnings.warn(f"level {n} is outside the fully realised range [{lo}, {hi}]",
                          PartialLevelWarning, stacklevel=2)
        p = Fraction(1 << n) if n >= 0 else Fraction(1, 1 << -n)
        rows.append(MultiplicityRow(n, spec.multiplicity(p), 7 * (1 << n),
                                    spec.multiplicity(p / 3), 1 << n, complete))
    return rows


# report ------------------------------------------------------------------

def _const1(x):
    return np.ones_like(np.asarray(x, dtype=float))


def _linear(x):
    return np.asarray(x, dtype=float)


def _square(x):
    return np.asarray(x, dtype=float) ** 2


DEFAULT_TEST_FUNCTIONS = {"const1": (_const1, 1.0), "linear": (_linear, 0.5),
                          "square": (_square, 1.0 / 3.0)}


@dataclass
class ItemResult:
    item: str
    passed: bool
    details: dict
    rows: list = field(default_factory=list)
    header: tuple = ()


@dataclass
class ExampleReport:
    n_max: int
    items: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.items.values())

    def summary_rows(self) -> list[tuple[str, bool]]:
        return [(k, r.passed) for k, r in self.items.items()]


def centre_level(p: DyadicRational) -> int:
    """Level ``n`` of the centre ``p = odd * 2**(1 - n)``."""
    return p.log2_den + 1


def _item_a(n_max_metric: int) -> ItemResult:
    """Induced metric against ``|u - v|`` on the truncated triple.

    A truncated module graph cannot see that a coarse centre is the limit
    of finer centres (that needs continuity of the functions), so two
    centres whose levels differ by two or more can be much further apart
    in the graph than on the line. The check is therefore: the induced
    distance never undercuts ``|u - v|`` (any pair), and it equals ``|u - v|``
    for every pair of centres from the same or adjacent levels among the
    levels that own same-level modules (``n_min .. n_max``).
    """
    from twopoint.connes_metric import induced_metric

    t = build_interval_st9(n_max_metric).as_triple()
    rep = induced_metric(t)
    sup = rep.support
    true = t.distance_matrix(sup)
    tol = 1e-9 * float(true.max())
    lv = np.array([centre_level(p) for p in sup])
    iu = np.triu_indices(len(sup), 1)
    d, di = true[iu], rep.d_induced[iu]
    inner = (lv >= N_MIN) & (lv <= n_max_metric)
    near = (np.abs(lv[iu[0]] - lv[iu[1]]) <= 1) & inner[iu[0]] & inner[iu[1]]
    below = int(np.sum(di < d - tol))
    near_err = float(np.max(np.abs(di[near] - d[near])))
    ratios = di / d
    passed = below == 0 and near_err <= tol
    return ItemResult("a", passed, dict(
        n_max=n_max_metric, support=len(sup), pairs=len(d), near_level_pairs=int(near.sum()),
        below_true=below, near_level_max_error=near_err, min_ratio=float(ratios.min()),
        max_ratio_near=float(ratios[near].max()), max_ratio_all=float(ratios.max())))


def _item_b(triple: IntervalTriple, s_values: Sequence[float]) -> ItemResult:
    from twopoint.spectral import summability_probe

    levels = list(range(max(8, triple.n_min), min(18, triple.n_max) + 1))
    rows, ok = [], True
    for probe in summability_probe(triple, s_values, levels):
        target = 2.0 ** (1 - probe.s)
        good = abs(probe.tail_ratio - target) <= 0.05
        ok &= good
        rows.append((probe.s, probe.tail_ratio, target, good))
    return ItemResult("b", ok, dict(levels=f"{levels[0]}..{levels[-1]}"), rows,
                      ("s", "tail_ratio", "target", "pass"))


def _item_c(triple: IntervalTriple, window: tuple[float, float]) -> ItemResult:
    from twopoint.spectral import counting_sweep

    sweep = counting_sweep(triple.spectrum("aggregate"), window[0], window[1], 16)
    spreads = sweep.octave_spreads()
    passed = (9.8 <= sweep.min_ratio <= 13.2 and 16.8 <= sweep.max_ratio <= 20.2
              and all(s >= 3 for _, _, s in spreads))
    rows = [(lo, hi, s) for lo, hi, s in spreads]
    return ItemResult("c", passed, dict(window=f"{window[0]:g}..{window[1]:g}",
                                        min_ratio=sweep.min_ratio, max_ratio=sweep.max_ratio),
                      rows, ("octave_lo", "octave_hi", "spread"))


def _item_d(triple: IntervalTriple, functions: Mapping[str, tuple]) -> ItemResult:
    from twopoint.spectral import dixmier_slope

    hi = min(18, triple.n_max - 3)
    ms = list(range(10, hi + 1))
    rows, ok = [], True
    for name, (f, integral) in functions.items():
        fit = dixmier_slope(triple, f, ms)
        target = 10 * integral
        good = abs(fit.slope - target) <= 0.04 * max(abs(target), 1.0)
        ok &= good
        raw = fit.traces[-1] / (ms[-1] * math.log(2))
        rows.append((name, integral, fit.slope, target, raw, target / math.log(2), good))
    return ItemResult("d", ok, dict(exponents=f"{ms[0]}..{ms[-1]}"), rows,
                      ("function", "integral", "slope", "target_slope", "raw_quotient",
                       "limit", "pass"))


def example_report(n_max: int = DEFAULT_N_MAX,
                   lambda_window: tuple[float, float] = (2.0 ** 9, 2.0 ** 13),
                   test_functions: Optional[Mapping[str, tuple]] = None,
                   s_values: Sequence[float] = (1.0, 1.2, 1.5),
                   n_max_metric: int = 10) -> ExampleReport:
    """Checks for items (a) to (e).

    ``test_functions`` maps names to ``(f, integral of f over [0, 1])``.
    Item (a) runs on the explicit triple truncated at ``n_max_metric``.
    """
    triple = build_interval_st9(n_max)
    funcs = DEFAULT_TEST_FUNCTIONS if test_functions is None else test_functions
    items = {"a": _item_a(min(n_max_metric, n_max)), "b": _item_b(triple, s_values),
             "c": _item_c(triple, lambda_window), "d": _item_d(triple, funcs)}
    items["e"] = ItemResult("e", items["d"].passed,
                            dict(note="the Dixmier trace equals the limit estimated in item d"))
    return ExampleReport(n_max, items)
