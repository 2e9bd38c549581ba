"""Acceptance suite: one PASS/FAIL line per criterion (1 to 11).

Run under pytest (lines are written straight to the terminal) or directly
with ``python3 tests/test_acceptance.py``. Each criterion returns
``(passed, detail, elapsed_seconds)``; the runtime budget is part of the
criterion.
"""

from __future__ import annotations

import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from scipy.spatial.distance import cdist

sys.path.insert(0, str(Path(__file__).resolve().parent))

from oracles import (  # noqa: E402
    box_dimension,
    closed_form_multiplicities,
    lipschitz_sup_lp,
)
from twopoint import spectral  # noqa: E402
from twopoint.connes_metric import induced_metric, lp_oracle, metric_report  # noqa: E402
from twopoint.interval_example import build_interval_st9, multiplicity_table  # noqa: E402
from twopoint.metric_core import (  # noqa: E402
    build_cantor,
    build_interval_grid,
    covering_chain,
    from_points,
    minkowski_estimate,
    random_cloud,
)
from twopoint.triple_builder import (  # noqa: E402
    build_st_d,
    build_st_delta,
    interaction_params,
    modules_from_pairs,
    single_pair_triple,
)

LN2 = math.log(2)


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def c1():
    sp = from_points([[0.0, 0.0], [0.6, 0.8], [5.0, 0.0]])
    triple = single_pair_triple(sp, 0, 1)
    with Clock() as clk:
        rep = induced_metric(triple)
    expected = {(0, 0): 0.0, (1, 1): 0.0, (2, 2): 0.0, (0, 1): 1.0, (1, 0): 1.0,
                (0, 2): math.inf, (2, 0): math.inf, (1, 2): math.inf, (2, 1): math.inf}
    got = {k: rep.distance(*k) for k in expected}
    ok = got == expected and clk.elapsed < 1e-3
    return ok, f"table {'matches' if got == expected else got}", clk.elapsed, 1e-3


def c2():
    with Clock() as clk:
        sp = random_cloud(50, 2, seed=11)
        rep = metric_report(build_st_d(sp))
    truth = cdist(sp.coords, sp.coords)
    err = float(np.abs(rep.d_induced - truth).max())
    diam = float(truth.max())
    return err <= 1e-9 * diam, f"max |d_induced - d| = {err:.3g} (diam {diam:.3f})", clk.elapsed, 1.0


def c3():
    with Clock() as clk:
        sp = random_cloud(12, 2, seed=5)
        triple = build_st_d(sp)
        spec = spectral.spectrum(triple)
        # exact: |eig|^2 = 4^n + d^-2 as a Fraction, compared with (2^n)^2
        bounds_ok = all(m.squared_magnitude() > 4 ** k
                        for k, m in enumerate(triple.modules, start=1))
        n_blocks = len(triple.modules)
        zeta_ok = []
        for s in (0.5, 1.0, 2.0):
            bound = 2 * math.fsum(2.0 ** (-k * s) for k in range(1, n_blocks + 1))
            zeta_ok.append(spectral.zeta(spec, s, "resolvent") <= bound)
    ok = bounds_ok and all(zeta_ok)
    return ok, f"{n_blocks} blocks, |eig| > 2^n: {bounds_ok}, zeta bounds: {zeta_ok}", \
        clk.elapsed, 1.0


def c4():
    sp = build_interval_grid(257)
    truth = np.abs(sp.coords[:, 0][:, None] - sp.coords[:, 0][None, :])
    parts, ok = [], True
    with Clock() as clk:
        chain = covering_chain(sp, 1.0, 0.5, 10)
        for delta in (1, 9):
            l = interaction_params(1.0, 0.5, delta, sp.diam).l
            triple = build_st_delta(sp, chain, delta, n_min=1, n_max=9)
            rep = induced_metric(triple)
            idx = np.array(rep.support)
            dt = truth[np.ix_(idx, idx)]
            iu = np.triu_indices(len(idx), 1)
            di, dtu = rep.d_induced[iu], dt[iu]
            bad = int(np.sum((di < dtu - 1e-9) | (di > (1 + delta) * dtu + 1e-9)))
            ok &= bad == 0 and len(idx) == 257
            if delta == 1:
                ok &= l > 0
            parts.append(f"delta={delta}: l={l}, violations={bad}, "
                         f"max ratio={float((di / dtu).max()):.4f}")
    return ok and clk.elapsed < 5, "; ".join(parts), clk.elapsed, 5.0


def c5():
    rng = np.random.default_rng(2024)
    worst, lp_worst = 0.0, 0.0
    with Clock() as clk:
        for _ in range(200):
            n = int(rng.integers(2, 9))
            pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
            k = int(rng.integers(1, len(pairs) + 1))
            chosen = rng.choice(len(pairs), size=k, replace=False)
            edges = [(pairs[c][0], pairs[c][1], float(rng.uniform(0.05, 2))) for c in chosen]
            triple = modules_from_pairs(edges)
            rep = induced_metric(triple)
            for s in rep.support:
                for t in rep.support:
                    a, b = rep.distance(s, t), lp_oracle(triple, s, t)
                    if math.isinf(a) or math.isinf(b):
                        worst = max(worst, 0.0 if a == b else math.inf)
                    else:
                        worst = max(worst, abs(a - b))
            s, t = rep.support[0], rep.support[-1]
            lp = lipschitz_sup_lp(n, edges, s, t)
            a = rep.distance(s, t)
            lp_worst = max(lp_worst, 0.0 if a == lp else abs(a - lp))
    ok = worst <= 1e-12 and lp_worst <= 1e-9
    return ok, f"max |induced - lp_oracle| = {worst:.3g}, vs scipy LP {lp_worst:.3g}", \
        clk.elapsed, 5.0


def c6():
    with Clock() as clk:
        rows = multiplicity_table(build_interval_st9(16), levels=range(10, 13))
    ok, parts = True, []
    for r in rows:
        p = 2 ** r.n
        exact_pow, exact_third = closed_form_multiplicities(r.n)
        ok &= (abs(r.mult_pow - 7 * p) <= 160 and abs(r.mult_third - p) <= 160
               and 6.8 <= r.mult_pow / p <= 7.0
               and (r.mult_pow, r.mult_third) == (exact_pow, exact_third))
        parts.append(f"n={r.n}: {r.mult_pow} (7*2^n={7 * p}), {r.mult_third} (2^n={p})")
    return ok and clk.elapsed < 10, "; ".join(parts), clk.elapsed, 10.0


def _window_extremes(spec, lo, hi):
    """Min and max of N(x)/x over [lo, hi]: N is a right-continuous step function."""
    vals = sorted((Fraction(v), m) for v, m in spec.entries)
    jumps = [v for v, _ in vals if lo < v <= hi]
    count_le = lambda x: sum(m for v, m in vals if v <= x)  # noqa: E731
    count_lt = lambda x: sum(m for v, m in vals if v < x)  # noqa: E731
    ratios = [Fraction(count_le(lo)) / lo, Fraction(count_le(hi)) / hi]
    for v in jumps:
        ratios.append(Fraction(count_le(v)) / v)    # top of a jump
        ratios.append(Fraction(count_lt(v)) / v)    # limit from the left
    return float(min(ratios)), float(max(ratios))


def c7():
    lo, hi = 2 ** 9, 2 ** 13
    with Clock() as clk:
        spec = build_interval_st9(20).spectrum("aggregate")
        sweep = spectral.counting_sweep(spec, lo, hi, 16)
        spreads = [s for _, _, s in sweep.octave_spreads()]
    o_min, o_max = _window_extremes(spec, Fraction(lo), Fraction(hi))
    ok = (9.8 <= sweep.min_ratio <= 13.2 and 16.8 <= sweep.max_ratio <= 20.2
          and len(spreads) == 4 and all(s >= 3 for s in spreads)
          and math.isclose(o_min, sweep.min_ratio, rel_tol=1e-3)
          and math.isclose(o_max, sweep.max_ratio, rel_tol=1e-9))
    return ok and clk.elapsed < 10, (
        f"min {sweep.min_ratio:.3f} (scan {o_min:.3f}), max {sweep.max_ratio:.3f} "
        f"(scan {o_max:.3f}), octave spreads {[round(s, 2) for s in spreads]}"), clk.elapsed, 10.0


def _geometric_ratio(sums):
    ns = np.array(sorted(sums), dtype=float)
    return math.exp(np.polyfit(ns, np.log([sums[int(n)] for n in ns]), 1)[0])


def c8():
    levels = range(8, 19)
    with Clock() as clk:
        triple = build_interval_st9(18)
        r1 = _geometric_ratio({n: v for n, v in triple.level_power_sums(1.0).items()
                               if n in levels})
        r15 = _geometric_ratio({n: v for n, v in triple.level_power_sums(1.5).items()
                                if n in levels})
    # s = 1 level sums have the closed form (5 * 2^n - 26) * 2^-n from the boundary scan
    closed = _geometric_ratio({n: (5 * 2 ** n - 26) / 2 ** n for n in levels})
    ok = 0.95 <= r1 <= 1.05 and 0.66 <= r15 <= 0.76 and abs(r1 - closed) < 1e-9
    return ok and clk.elapsed < 5, f"s=1: {r1:.4f} (closed form {closed:.4f}); " \
        f"s=1.5: {r15:.4f} (target {2 ** -0.5:.4f})", clk.elapsed, 5.0


def c9():
    funcs = [("const1", lambda x: np.ones_like(np.asarray(x, dtype=float)), 1.0, (9.8, 10.2)),
             ("linear", lambda x: np.asarray(x, dtype=float), 0.5, (4.85, 5.15)),
             ("square", lambda x: np.asarray(x, dtype=float) ** 2, 1 / 3, (3.2, 3.47))]
    ms = list(range(10, 19))
    ok, parts = True, []
    with Clock() as clk:
        triple = build_interval_st9(22)
        for name, f, integral, (lo, hi) in funcs:
            traces = triple.dixmier_traces(f, [2.0 ** m for m in ms])
            slope = float(np.polyfit(ms, traces, 1)[0])
            ok &= lo <= slope <= hi
            parts.append(f"{name}: slope {slope:.4f}")
            if name == "const1":
                quotients = [t / (m * LN2) for t, m in
                             zip(triple.dixmier_traces(f, [2.0 ** m for m in range(12, 19)]),
                                 range(12, 19))]
                limit = 10 / LN2 * integral
                ok &= abs(quotients[-1] - limit) <= 0.3 * limit
                ok &= all(b > a for a, b in zip(quotients, quotients[1:]))
                parts.append(f"raw quotient at 2^18 {quotients[-1]:.3f} vs {limit:.3f}")
    return ok and clk.elapsed < 30, "; ".join(parts), clk.elapsed, 30.0


def c10():
    with Clock() as clk:
        interval = minkowski_estimate(covering_chain(build_interval_grid(4097), 1, 0.5, 11)).slope
        cantor_sp = build_cantor(10)
        cantor = minkowski_estimate(covering_chain(cantor_sp, 0.5, 1 / 3, 10)).slope
    oracle = box_dimension(np.array(cantor_sp.coords[:, 0]), range(3, 10))
    ok = 0.95 <= interval <= 1.05 and 0.58 <= cantor <= 0.68 and abs(cantor - oracle) < 0.03
    return ok and clk.elapsed < 5, f"interval {interval:.4f}; Cantor {cantor:.4f} " \
        f"(box count {oracle:.4f}, log2/log3 {math.log(2) / math.log(3):.4f})", clk.elapsed, 5.0


def c11():
    dim = math.log(2) / math.log(3)
    levels = range(3, 10)
    with Clock() as clk:
        sp = build_cantor(10)
        triple = build_st_delta(sp, covering_chain(sp, 0.5, 1 / 3, 11), 9, n_max=10)
        hi_s = 2 * 0.631 + 0.3
        r_hi = _geometric_ratio({n: v for n, v in spectral.level_power_sums(triple, hi_s).items()
                                 if n in levels})
        r_lo = _geometric_ratio({n: v for n, v in spectral.level_power_sums(triple, 0.4).items()
                                 if n in levels})
    info = "consistent" if r_lo >= 1 else "not >= 1"
    return r_hi < 1 and clk.elapsed < 5, (
        f"s={hi_s:.3f}: tail ratio {r_hi:.4f} < 1; informational s=0.4 < {dim:.3f}: "
        f"{r_lo:.4f} ({info})"), clk.elapsed, 5.0


CRITERIA = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11]


def _line(k, ok, detail, elapsed, budget):
    return (f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail} "
            f"[{elapsed:.3g} s, budget {budget:g} s]")


@pytest.mark.parametrize("k", range(1, len(CRITERIA) + 1))
def test_criterion(k, capsys):
    ok, detail, elapsed, budget = CRITERIA[k - 1]()
    with capsys.disabled():
        print("\n" + _line(k, ok, detail, elapsed, budget))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for k, fn in enumerate(CRITERIA, start=1):
        ok, *rest = fn()
        results.append(ok)
        print(_line(k, ok, *rest), flush=True)
    sys.exit(0 if all(results) else 1)
