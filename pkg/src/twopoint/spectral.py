"""Spectral statistics of sums of two-point modules.

A block with diagonal shift ``s`` and distance ``d`` has eigenvalues
``+-sqrt(s**2 + d**-2)`` and ``|D|`` acts on it as that scalar, so ``|D|``
has the value with multiplicity 2 per block. :class:`SpectrumHistogram`
stores these ``|D|`` multiplicities; the count of eigenvalues of ``D`` with
``|lambda| <= L`` is then the plain cumulative multiplicity.

Functions here take a :class:`SpectralTripleSum` or any object exposing
``spectrum()``, ``level_power_sums(s)`` and ``dixmier_trace(f, lam)`` (the
aggregated interval triple does).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from twopoint.errors import EmptyTripleError, InsufficientDataError, InvalidArgument
from twopoint.triple_builder import SpectralTripleSum

GROUP_RTOL = 1e-12

Value = Union[Fraction, float]
TestFunction = Union[Callable[[float], float], Mapping]


@dataclass(frozen=True)
class SpectrumHistogram:
    """Ascending ``(value, multiplicity)`` pairs of ``|D|``."""

    entries: tuple[tuple[Value, int], ...]
    symmetric: bool = True
    _cum: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _vals: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((v, int(m)) for v, m in self.entries))
        object.__setattr__(self, "_cum", tuple(accumulate(m for _, m in self.entries)))
        object.__setattr__(self, "_vals", tuple(v for v, _ in self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def values(self) -> list[Value]:
        return [v for v, _ in self.entries]

    @property
    def multiplicities(self) -> list[int]:
        return [m for _, m in self.entries]

    @property
    def total_multiplicity(self) -> int:
        return self._cum[-1] if self._cum else 0

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v, _ in self.entries)

    def multiplicity(self, value: Value) -> int:
        for v, m in self.entries:
            if v == value:
                return m
        return 0

    def count_le(self, lam: float) -> int:
        k = bisect_right(self._vals, float(lam))
        return self._cum[k - 1] if k else 0

    def signed(self) -> list[tuple[Value, int]]:
        """Spectrum of ``D``: each ``|D|`` value split evenly between ``+v`` and ``-v``."""
        neg = [(-v, m // 2) for v, m in reversed(self.entries)]
        return neg + [(v, m - m // 2) for v, m in self.entries]

    def write_csv(self, fh, sep: str = ",") -> None:
        fh.write(sep.join(["value", "multiplicity"]) + "\n")
        for v, m in self.entries:
            fh.write(f"{_fmt_value(v)}{sep}{m}\n")


def _fmt_value(v: Value) -> str:
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    return f"{v:.15g}"


def histogram_from_counts(counts: Iterable[tuple[Value, int]]) -> SpectrumHistogram:
    """Group ``(value, multiplicity)`` pairs: exactly for Fractions, by relative 1e-12 otherwise."""
    items = [(v, m) for v, m in counts if m]
    if any(not isinstance(v, Fraction) for v, _ in items):
        items = [(float(v), m) for v, m in items]
        items.sort(key=lambda vm: vm[0])
        grouped: list[list] = []
        for v, m in items:
            if grouped and (v == grouped[-1][0] or
                            v <= grouped[-1][0] * (1 + GROUP_RTOL)):
                grouped[-1][1] += m
            else:
                grouped.append([v, m])
        return SpectrumHistogram(tuple((v, m) for v, m in grouped))
    exact = Counter()
    for v, m in items:
        exact[v] += m
    return SpectrumHistogram(tuple(sorted(exact.items())))


def spectrum(triple) -> SpectrumHistogram:
    """``|D|`` eigenvalues with multiplicities (two per module)."""
    if not isinstance(triple, SpectralTripleSum):
        return triple.spectrum()
    if not triple.modules:
        raise EmptyTripleError("spectrum of an empty triple")
    return histogram_from_counts((m.magnitude(), 2) for m in triple.modules)


def counting(spec: SpectrumHistogram, lam: float, positive_only: bool = False) -> int:
    """``N(lam)``: eigenvalues of ``D`` with absolute value at most ``lam``.

    ``positive_only`` counts only the positive half of the spectrum.
    """
    n = spec.count_le(lam)
    return n // 2 if positive_only else n


@dataclass(frozen=True)
class CountingSweep:
    grid: np.ndarray
    counts: np.ndarray
    ratios: np.ndarray
    min_ratio: float
    max_ratio: float

    def octave_spreads(self) -> list[tuple[float, float, float]]:
        """``(lo, hi, max - min of N/L)`` over each full octave ``[lo, 2 lo]`` of the grid."""
        lo = self.grid[0]
        out = []
        while 2 * lo <= self.grid[-1] * (1 + 1e-12):
            sel = (self.grid >= lo) & (self.grid <= 2 * lo)
            r = self.ratios[sel]
            out.append((float(lo), float(2 * lo), float(r.max() - r.min())))
            lo *= 2
        return out

    def write_csv(self, fh, sep: str = ",") -> None:
        fh.write(sep.join(["lambda", "N", "N/lambda"]) + "\n")
        for g, c, r in zip(self.grid, self.counts, self.ratios):
            fh.write(f"{g:.15g}{sep}{int(c)}{sep}{r:.15g}\n")


def _float_bracket(v: Value) -> tuple[float, float]:
    """Largest float below ``v`` and smallest float at or above it."""
    f = float(v)
    if isinstance(v, Fraction) and Fraction(f) < v:
        f = float(np.nextafter(f, math.inf))
    return float(np.nextafter(f, -math.inf)), f


def counting_sweep(spec: SpectrumHistogram, lambda_min: float, lambda_max: float,
                   points_per_octave: int = 16) -> CountingSweep:
    """``N(L)/L`` on a geometric grid refined at every jump of ``N``.

    Each eigenvalue ``v`` inside the window contributes ``v`` itself (where
    ``N/L`` peaks) and the float just below it (where it bottoms out), so
    the reported extrema are those of the step function on the window.
    """
    if not 0 < lambda_min < lambda_max:
        raise InvalidArgument(f"need 0 < lambda_min < lambda_max, got {lambda_min}, {lambda_max}")
    if points_per_octave < 8:
        raise InvalidArgument(f"points_per_octave must be >= 8, got {points_per_octave}")
    octaves = math.log2(lambda_max / lambda_min)
    steps = int(math.floor(octaves * points_per_octave))
    grid = {lambda_min * 2.0 ** (k / points_per_octave) for k in range(steps + 1)}
    grid |= {float(lambda_min), float(lambda_max)}
    for v in spec.values:
        if lambda_min <= v <= lambda_max:
            below, at = _float_bracket(v)
            grid.update(g for g in (below, at) if lambda_min <= g <= lambda_max)
    g = np.array(sorted(grid))
    counts = np.array([spec.count_le(x) for x in g], dtype=float)
    ratios = counts / g
    return CountingSweep(g, counts, ratios, float(ratios.min()), float(ratios.max()))


def zeta(spec: SpectrumHistogram, s: float, form: str = "abs") -> float:
    """``tr |D|^-s`` (``form="abs"``) or ``tr (1 + D^2)^(-s/2)`` (``form="resolvent"``)."""
    if not s > 0:
        raise InvalidArgument(f"zeta needs s > 0, got {s}")
    total = 0.0
    if form == "abs":
        for v, m in spec.entries:
            total += m * float(v) ** -s
    elif form == "resolvent":
        for v, m in spec.entries:
            fv = float(v)
            # (1 + v^2)^(-s/2) = v^-s (1 + v^-2)^(-s/2), safe for large v
            total += m * fv ** -s * (1.0 + fv ** -2) ** (-s / 2) if fv > 1 \
                else m * (1.0 + fv * fv) ** (-s / 2)
    else:
        raise InvalidArgument(f"unknown zeta form {form!r}")
    return total


def level_power_sums(triple, s: float) -> dict[int, float]:
    """``sum d(x, y)**s`` over the modules of each level."""
    if not isinstance(triple, SpectralTripleSum):
        return triple.level_power_sums(s)
    out: dict[int, float] = {}
    for m in triple.modules:
        out[m.level] = out.get(m.level, 0.0) + float(m.d) ** s
    return dict(sorted(out.items()))


def tail_ratio(sums: Mapping[int, float], levels: Sequence[int] | None = None) -> float:
    """Geometric growth factor per level: ``exp`` of the LSQ slope of ``log sum`` vs level."""
    ns = sorted(sums) if levels is None else list(levels)
    ns = [n for n in ns if n in sums and sums[n] > 0]
    if len(ns) < 4:
        raise InsufficientDataError(f"need at least 4 nonzero levels, got {len(ns)}")
    y = np.log([sums[n] for n in ns])
    return float(math.exp(np.polyfit(np.array(ns, dtype=float), y, 1)[0]))


@dataclass(frozen=True)
class SummabilityProbe:
    s: float
    level_sums: dict[int, float]
    tail_ratio: float

    @property
    def trace_contributions(self) -> dict[int, float]:
        """Per-level contribution to ``tr |D|^-s`` (two eigenvalues per module)."""
        return {n: 2 * v for n, v in self.level_sums.items()}


def summability_probe(triple, s_values: Iterable[float],
                      levels: Sequence[int] | None = None) -> list[SummabilityProbe]:
    out = []
    for s in s_values:
        sums = level_power_sums(triple, s)
        if levels is not None:
            sums = {n: sums[n] for n in levels if n in sums}
        out.append(SummabilityProbe(float(s), sums, tail_ratio(sums)))
    return out


def _point_values(triple: SpectralTripleSum, f: TestFunction, points) -> dict:
    if isinstance(f, Mapping):
        return {p: float(f[p]) for p in points}
    return {p: float(f(triple.coordinate(p))) for p in points}


def dixmier_trace(triple, f: TestFunction, lam: float) -> float:
    """``tr(|D|^-1 P_lam pi(f))``: blocks with ``|eigenvalue| <= lam`` add ``(f(x)+f(y))/|eigenvalue|``."""
    if not isinstance(triple, SpectralTripleSum):
        return triple.dixmier_trace(f, lam)
    kept = [(m, m.magnitude()) for m in triple.modules]
    kept = [(m, v) for m, v in kept if v <= lam]
    fv = _point_values(triple, f, {p for m, _ in kept for p in (m.x, m.y)})
    return math.fsum((fv[m.x] + fv[m.y]) / float(v) for m, v in kept)


def dixmier_estimate(triple, f: TestFunction, lam: float) -> float:
    """``tr(|D|^-1 P_lam pi(f)) / log(lam)``."""
    if not lam > 1:
        raise InvalidArgument(f"lambda must exceed 1 (log lambda > 0), got {lam}")
    return dixmier_trace(triple, f, lam) / math.log(lam)


@dataclass(frozen=True)
class DixmierFit:
    exponents: list[int]
    traces: list[float]
    slope: float
    intercept: float

    @property
    def limit(self) -> float:
        """Estimated ``lim tr(|D|^-1 P_L pi(f)) / log L`` (slope per factor 2 over log 2)."""
        return self.slope / math.log(2)


def dixmier_slope(triple, f: TestFunction, exponents: Iterable[int]) -> DixmierFit:
    """Least-squares fit of ``S(M) = tr(|D|^-1 P_{2^M} pi(f))`` against ``M``.

    The slope removes the constant offset that makes the raw quotient
    ``S(M) / (M log 2)`` converge like ``1/M``.
    """
    ms = list(exponents)
    if len(ms) < 2:
        raise InsufficientDataError("slope fit needs at least two exponents")
    if hasattr(triple, "dixmier_traces"):
        traces = triple.dixmier_traces(f, [2.0 ** m for m in ms])
    else:
        traces = [dixmier_trace(triple, f, 2.0 ** m) for m in ms]
    slope, intercept = np.polyfit(np.array(ms, dtype=float), np.array(traces), 1)
    return DixmierFit(ms, [float(t) for t in traces], float(slope), float(intercept))
