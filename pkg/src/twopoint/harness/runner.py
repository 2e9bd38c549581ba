"""Execute a :class:`RunConfig` and write report files."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional

from twopoint import connes_metric, spectral
from twopoint.errors import InsufficientDataError, TwopointError
from twopoint.harness.config import RunConfig, config_hash
from twopoint.harness.functions import get_function
from twopoint.interval_example import example_report
from twopoint.metric_core import (
    FiniteMetricSpace,
    build_cantor,
    build_interval_grid,
    covering_chain,
    from_matrix,
    load_space,
    random_cloud,
)
from twopoint.triple_builder import SpectralTripleSum, build_st_d, build_st_delta

THREADS_ENV = "TWOPOINT_THREADS"
ANALYSES = ("metric", "spectrum", "sweep", "zeta", "dixmier", "interval-example")
TIMESTAMP_PREFIX = "# generated: "


class AnalysisError(TwopointError):
    def __init__(self, analysis: str, exc: Exception):
        super().__init__(f"{analysis}: {exc}")
        self.analysis = analysis


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def build_space(cfg: RunConfig) -> FiniteMetricSpace:
    s = cfg.space
    if s.generator == "interval":
        return build_interval_grid(s.m)
    if s.generator == "cantor":
        return build_cantor(s.level)
    if s.generator == "random":
        return random_cloud(s.n, s.dim, s.seed)
    if s.generator == "two-point":
        return from_matrix([[0.0, 1.0], [1.0, 0.0]], label="two-point space")
    return load_space(s.path, s.format, s.header)


def build_triple(cfg: RunConfig, space: Optional[FiniteMetricSpace] = None) -> SpectralTripleSum:
    space = build_space(cfg) if space is None else space
    c = cfg.construction
    if c.kind == "st_d":
        return build_st_d(space)
    chain = covering_chain(space, c.theta, c.rho, c.n_max + 1,
                           method="greedy" if c.chain == "structured" else c.chain,
                           structured=c.chain == "structured")
    return build_st_delta(space, chain, c.delta, n_min=c.n_min, n_max=c.n_max)


@dataclass
class RunResult:
    status: int = 0
    files: list[Path] = field(default_factory=list)
    checks: dict[str, bool] = field(default_factory=dict)


class ReportWriter:
    def __init__(self, out_dir: Path, cfg: RunConfig, timestamp: Optional[str] = None):
        self.out_dir = Path(out_dir)
        self.sep = "\t" if cfg.output.format == "tsv" else ","
        self.ext = cfg.output.format
        self.hash = config_hash(cfg)
        self.timestamp = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")

    def open(self, name: str, ext: Optional[str] = None):
        path = self.out_dir / f"{name}.{ext or self.ext}"
        path.parent.mkdir(parents=True, exist_ok=True)
        fh = open(path, "w", encoding="utf-8", newline="\n")
        fh.write(f"# config-sha256: {self.hash}\n")
        fh.write(f"{TIMESTAMP_PREFIX}{self.timestamp}\n")
        return path, fh


def _g(x: float) -> str:
    return f"{x:.15g}"


def _metric(triple: SpectralTripleSum, cfg: RunConfig, w: ReportWriter) -> tuple[list[Path], bool]:
    mode = "exact" if triple.kind == "st_d" else "sandwich"
    rep = connes_metric.metric_report(triple, mode=mode,
                                      delta=cfg.construction.delta if mode == "sandwich" else None)
    path, fh = w.open("metric")
    with fh:
        rep.write_csv(fh, w.sep)
    return [path], rep.ok


def _spectrum(triple, cfg, w):
    spec = spectral.spectrum(triple)
    path, fh = w.open("spectrum")
    with fh:
        fh.write(w.sep.join(["eigenvalue", "multiplicity"]) + "\n")
        for v, m in spec.signed():
            fh.write(f"{spectral._fmt_value(v)}{w.sep}{m}\n")
    return [path], True


def _sweep(triple, cfg, w):
    lo, hi = cfg.analyses.sweep
    sweep = spectral.counting_sweep(spectral.spectrum(triple), lo, hi,
                                    cfg.analyses.points_per_octave)
    path, fh = w.open("sweep")
    with fh:
        sweep.write_csv(fh, w.sep)
    return [path], True


def _zeta(triple, cfg, w):
    spec = spectral.spectrum(triple)
    path, fh = w.open("zeta")
    with fh:
        fh.write(w.sep.join(["s", "form", "value", "tail_ratio"]) + "\n")
        for s in cfg.analyses.zeta:
            try:
                tr = spectral.tail_ratio(spectral.level_power_sums(triple, s)) \
                    if triple.kind == "st_delta" else math.nan
            except InsufficientDataError:
                tr = math.nan
            for form in ("abs", "resolvent"):
                fh.write(w.sep.join([_g(s), form, _g(spectral.zeta(spec, s, form)), _g(tr)]) + "\n")
    return [path], True


def _dixmier(triple, cfg, w):
    lam = cfg.analyses.dixmier_lambda
    path, fh = w.open("dixmier")
    with fh:
        fh.write(w.sep.join(["function", "lambda", "trace", "estimate"]) + "\n")
        for name in cfg.analyses.dixmier:
            f = get_function(name)
            trace = spectral.dixmier_trace(triple, f, lam)
            fh.write(w.sep.join([name, _g(lam), _g(trace), _g(trace / math.log(lam))]) + "\n")
    return [path], True


def write_example_report(report, w: ReportWriter, prefix: str = "interval_example/") -> list[Path]:
    files = []
    for key, item in report.items.items():
        path, fh = w.open(f"{prefix}item_{key}")
        with fh:
            for k, v in item.details.items():
                fh.write(f"# {k}{w.sep}{v}\n")
            fh.write(f"# pass{w.sep}{str(item.passed).lower()}\n")
            if item.header:
                fh.write(w.sep.join(item.header) + "\n")
                for row in item.rows:
                    fh.write(w.sep.join(_g(x) if isinstance(x, float) else str(x).lower()
                                        if isinstance(x, bool) else str(x) for x in row) + "\n")
        files.append(path)
    path, fh = w.open(f"{prefix}summary")
    with fh:
        fh.write(w.sep.join(["item", "pass"]) + "\n")
        for key, ok in report.summary_rows():
            fh.write(f"{key}{w.sep}{str(ok).lower()}\n")
    files.append(path)
    return files


def _interval(triple, cfg, w):
    funcs = {n: (get_function(n), get_function(n).integral)
             for n in (cfg.analyses.dixmier or ("const1", "linear", "square"))}
    rep = example_report(cfg.analyses.interval_n_max, test_functions=funcs)
    return write_example_report(rep, w), rep.passed


_RUNNERS: dict[str, Callable] = {"metric": _metric, "spectrum": _spectrum, "sweep": _sweep,
                                 "zeta": _zeta, "dixmier": _dixmier,
                                 "interval-example": _interval}


def enabled_analyses(cfg: RunConfig) -> list[str]:
    a = cfg.analyses
    flags = {"metric": a.metric, "spectrum": a.spectrum, "sweep": bool(a.sweep),
             "zeta": bool(a.zeta), "dixmier": bool(a.dixmier),
             "interval-example": a.interval_example}
    return [k for k in ANALYSES if flags[k]]


def run(cfg: RunConfig, out_dir: Optional[str | Path] = None,
        analyses: Optional[Iterable[str]] = None, dump_triple: bool = False,
        timestamp: Optional[str] = None) -> RunResult:
    """Build the configured triple and run ``analyses`` (default: those enabled in ``cfg``).

    Status is 0 when every check passes and 1 when a metric or example
    check reports violations. Analysis failures raise :class:`AnalysisError`.
    """
    w = ReportWriter(Path(out_dir or cfg.output.dir), cfg, timestamp)
    names = list(enabled_analyses(cfg) if analyses is None else analyses)
    result = RunResult()
    triple = None
    if dump_triple or not names or any(n != "interval-example" for n in names):
        try:
            triple = build_triple(cfg)
        except TwopointError as exc:
            raise AnalysisError("build", exc) from exc
        path, fh = w.open("triple", "txt")
        with fh:
            fh.write(f"kind: {triple.kind}\nmodules: {len(triple)}\n"
                     f"support: {len(triple.support())}\n")
            for k, v in triple.params.items():
                fh.write(f"{k}: {v}\n")
        result.files.append(path)
        if dump_triple:
            path, fh = w.open("triple_dump", "tsv")
            with fh:
                triple.dump(fh)
            result.files.append(path)

    def task(name):
        try:
            return name, _RUNNERS[name](triple, cfg, w)
        except TwopointError as exc:
            raise AnalysisError(name, exc) from exc

    with ThreadPoolExecutor(max_workers=min(thread_count(), max(1, len(names)))) as pool:
        outcomes = list(pool.map(task, names))
    for name, (files, ok) in outcomes:
        result.files.extend(files)
        result.checks[name] = ok
        if not ok:
            result.status = 1
    path, fh = w.open("summary")
    with fh:
        fh.write(w.sep.join(["analysis", "pass"]) + "\n")
        for name in names:
            fh.write(f"{name}{w.sep}{str(result.checks[name]).lower()}\n")
    result.files.append(path)
    return result
