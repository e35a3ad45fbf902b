"""The three packaged experiments: convergence curves and horizon scatter.

fig1 runs every method on a shared noisy system with no corruption, fig2
adds large sparse corruption to the same setup, and fig3 sweeps the
corruption scale to relate an identifiability ratio of the realized
error vector to the empirical error horizon.

Fairness and determinism: within one trial every method sees the
identical problem, all randomness derives from the experiment seed, and
results are sorted canonically before emission, so a rerun (at any
thread count) reproduces every output file byte for byte.  fig1 is the
corruption-free special case of fig2; running fig2 with corruption scale
zero and the same seed yields bit-identical data and plot files.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import stats as _scipy_stats

from .linalg import feasible_level
from .problems import (
    ENSEMBLES,
    CorruptedProblem,
    GenSpec,
    InvalidSpecError,
    generate,
    ordered_magnitude,
)
from .serialize import fmt_float
from .solvers import DEFAULT_HORIZON_WINDOW, SolverConfig, horizon_estimate, run
from . import svgplot

__all__ = [
    "FIGURES",
    "METHOD_ORDER",
    "ExperimentSpec",
    "ExperimentResult",
    "Fig3Point",
    "desk_profile",
    "paper_profile",
    "run_fig1",
    "run_fig2",
    "run_fig3",
    "run_experiment",
    "fig3_trend",
    "emit",
    "load_result",
]

FIGURES = ("fig1", "fig2", "fig3")
METHOD_ORDER = ("rk", "qrk", "dqrk")
DEFAULT_SCALES = (1.0, 3.0, 10.0, 30.0, 100.0)


@dataclass(frozen=True)
class ExperimentSpec:
    """Resolved parameters of one experiment run.

    Ensembles and methods default by figure: the curve figures use both
    matrix ensembles and all three methods, the scatter figure a single
    ensemble and (rk, dqrk).  All levels must give integer counts
    against m.
    """

    figure: str
    m: int = 1000
    n: int = 200
    beta: Fraction = Fraction(1, 20)
    q: Fraction = Fraction(4, 5)
    q0: Fraction = Fraction(3, 5)
    ensembles: tuple[str, ...] | None = None
    methods: tuple[str, ...] | None = None
    iterations: int = 20_000
    trials: int = 15
    scales: tuple[float, ...] = DEFAULT_SCALES
    corruption_scale: float = 100.0
    noise_stddev: float = 1.0
    horizon_window: int = DEFAULT_HORIZON_WINDOW
    seed: int = 0

    def __post_init__(self) -> None:
        if self.figure not in FIGURES:
            raise InvalidSpecError(f"unknown figure {self.figure!r}")
        if self.ensembles is None:
            default = ENSEMBLES if self.figure != "fig3" else (ENSEMBLES[0],)
            object.__setattr__(self, "ensembles", tuple(default))
        else:
            object.__setattr__(self, "ensembles", tuple(self.ensembles))
        if self.methods is None:
            default = METHOD_ORDER if self.figure != "fig3" else ("rk", "dqrk")
            object.__setattr__(self, "methods", tuple(default))
        else:
            object.__setattr__(self, "methods", tuple(self.methods))
        if not self.methods:
            raise InvalidSpecError("methods must be nonempty")
        bad = [x for x in self.methods if x not in METHOD_ORDER]
        if bad:
            raise InvalidSpecError(f"unknown methods {bad}")
        if len(set(self.methods)) != len(self.methods):
            raise InvalidSpecError("duplicate methods")
        if not self.ensembles:
            raise InvalidSpecError("ensembles must be nonempty")
        bad = [x for x in self.ensembles if x not in ENSEMBLES]
        if bad:
            raise InvalidSpecError(f"unknown ensembles {bad}")
        if self.figure == "fig3":
            if self.trials < 1:
                raise InvalidSpecError("fig3 requires trials >= 1")
            if not self.scales:
                raise InvalidSpecError("fig3 requires a nonempty scale grid")
            if len(self.ensembles) != 1:
                raise InvalidSpecError("fig3 takes exactly one ensemble")
            object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        if self.iterations < 1:
            raise InvalidSpecError("iterations must be positive")
        if not 1 <= self.horizon_window <= self.iterations + 1:
            raise InvalidSpecError("horizon_window must fit inside the trace")
        # snap-or-raise happens in the CLI; here the levels must be exact
        for name, lvl in (("beta", self.beta), ("q0", self.q0), ("q", self.q)):
            object.__setattr__(self, name, feasible_level(lvl, self.m))
        if not self.beta < self.q0 < self.q:
            raise InvalidSpecError(
                f"need beta < q0 < q, got {self.beta}, {self.q0}, {self.q}"
            )
        if self.noise_stddev < 0 or self.corruption_scale < 0:
            raise InvalidSpecError("scales must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "figure": self.figure,
            "m": self.m,
            "n": self.n,
            "beta": str(self.beta),
            "q": str(self.q),
            "q0": str(self.q0),
            "ensembles": list(self.ensembles),
            "methods": list(self.methods),
            "iterations": self.iterations,
            "trials": self.trials,
            "scales": list(self.scales),
            "corruption_scale": self.corruption_scale,
            "noise_stddev": self.noise_stddev,
            "horizon_window": self.horizon_window,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "ExperimentSpec":
        return ExperimentSpec(
            figure=d["figure"],
            m=d["m"],
            n=d["n"],
            beta=Fraction(d["beta"]),
            q=Fraction(d["q"]),
            q0=Fraction(d["q0"]),
            ensembles=tuple(d["ensembles"]),
            methods=tuple(d["methods"]),
            iterations=d["iterations"],
            trials=d["trials"],
            scales=tuple(d["scales"]),
            corruption_scale=d["corruption_scale"],
            noise_stddev=d["noise_stddev"],
            horizon_window=d["horizon_window"],
            seed=d["seed"],
        )


def desk_profile(figure: str, *, seed: int = 0, **overrides) -> ExperimentSpec:
    """Small instance runnable in minutes: m=1000, n=200, 2e4 steps."""
    base = dict(m=1000, n=200, iterations=20_000, seed=seed)
    base.update(overrides)
    return ExperimentSpec(figure=figure, **base)


def paper_profile(figure: str, *, seed: int = 0, **overrides) -> ExperimentSpec:
    """Full-size instance: m=5000, n=2500, 5e4 steps."""
    base = dict(m=5000, n=2500, iterations=50_000, seed=seed)
    base.update(overrides)
    return ExperimentSpec(figure=figure, **base)


@dataclass(frozen=True)
class Fig3Point:
    scale: float
    trial: int
    method: str
    ratio: float
    horizon: float


@dataclass(frozen=True)
class ExperimentResult:
    """Either per-method error curves (fig1/2) or scatter points (fig3).

    ``wall_clock`` is informational only and never serialized into
    result.json, keeping reruns byte-identical.
    """

    spec: ExperimentSpec
    curves: dict | None = None  # ensemble -> method -> sq_error array
    horizons: dict | None = None  # ensemble -> method -> float
    points: tuple[Fig3Point, ...] | None = None
    wall_clock: float = 0.0

    def to_dict(self) -> dict:
        out: dict = {"schema_version": 1, "spec": self.spec.to_dict()}
        if self.curves is not None:
            out["curves"] = {
                ens: {meth: [float(v) for v in arr] for meth, arr in per.items()}
                for ens, per in self.curves.items()
            }
            out["horizons"] = {
                ens: dict(per) for ens, per in (self.horizons or {}).items()
            }
        if self.points is not None:
            out["points"] = [
                {
                    "scale": p.scale,
                    "trial": p.trial,
                    "method": p.method,
                    "ratio": p.ratio,
                    "horizon": p.horizon,
                }
                for p in self.points
            ]
        return out

    @staticmethod
    def from_dict(d: dict) -> "ExperimentResult":
        spec = ExperimentSpec.from_dict(d["spec"])
        curves = horizons = points = None
        if "curves" in d:
            curves = {
                ens: {meth: np.asarray(vals, dtype=np.float64) for meth, vals in per.items()}
                for ens, per in d["curves"].items()
            }
            horizons = {ens: dict(per) for ens, per in d.get("horizons", {}).items()}
        if "points" in d:
            points = tuple(
                Fig3Point(
                    scale=p["scale"],
                    trial=p["trial"],
                    method=p["method"],
                    ratio=p["ratio"],
                    horizon=p["horizon"],
                )
                for p in d["points"]
            )
        return ExperimentResult(spec=spec, curves=curves, horizons=horizons, points=points)


def _child_seed(*keys: int) -> int:
    """Derive a decorrelated integer seed from a key path."""
    a, b = np.random.SeedSequence(list(keys)).generate_state(2)
    return (int(a) << 32) | int(b)


def _solver_config(spec: ExperimentSpec, method: str, seed: int) -> SolverConfig:
    if method == "rk":
        return SolverConfig(method="rk", iterations=spec.iterations, seed=seed)
    if method == "qrk":
        return SolverConfig(method="qrk", q=spec.q, iterations=spec.iterations, seed=seed)
    return SolverConfig(
        method="dqrk", q=spec.q, q0=spec.q0, iterations=spec.iterations, seed=seed
    )


def _gen_spec(spec: ExperimentSpec, ensemble: str, scale: float, seed: int) -> GenSpec:
    return GenSpec(
        m=spec.m,
        n=spec.n,
        beta=spec.beta,
        corruption_scale=scale,
        noise_stddev=spec.noise_stddev,
        ensemble=ensemble,
        seed=seed,
    )


def _pool_map(fn, jobs, threads: int):
    if threads <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def _run_curves(spec: ExperimentSpec, scale: float, threads: int) -> ExperimentResult:
    t0 = time.perf_counter()
    problems: dict[str, CorruptedProblem] = {}
    for ei, ens in enumerate(spec.ensembles):
        problems[ens] = generate(_gen_spec(spec, ens, scale, _child_seed(spec.seed, 1, ei, 0, 0)))

    jobs = [
        (ei, ens, mi, meth)
        for ei, ens in enumerate(spec.ensembles)
        for mi, meth in enumerate(spec.methods)
    ]

    def one(job):
        ei, ens, mi, meth = job
        cfg = _solver_config(spec, meth, _child_seed(spec.seed, 2, ei, 0, 0, mi))
        trace = run(problems[ens], cfg)
        return ens, meth, trace

    curves: dict = {ens: {} for ens in spec.ensembles}
    horizons: dict = {ens: {} for ens in spec.ensembles}
    for ens, meth, trace in _pool_map(one, jobs, threads):
        curves[ens][meth] = trace.sq_errors
        horizons[ens][meth] = horizon_estimate(trace, spec.horizon_window).value
    return ExperimentResult(
        spec=spec,
        curves=curves,
        horizons=horizons,
        wall_clock=time.perf_counter() - t0,
    )


def run_fig1(spec: ExperimentSpec, *, threads: int = 1) -> ExperimentResult:
    """Noise only: all methods on one shared problem per ensemble."""
    if spec.figure != "fig1":
        raise InvalidSpecError(f"spec is for {spec.figure!r}, not fig1")
    return _run_curves(spec, 0.0, threads)


def run_fig2(spec: ExperimentSpec, *, threads: int = 1) -> ExperimentResult:
    """Noise plus sparse corruption of magnitude corruption_scale."""
    if spec.figure != "fig2":
        raise InvalidSpecError(f"spec is for {spec.figure!r}, not fig2")
    return _run_curves(spec, spec.corruption_scale, threads)


def _identifiability_ratio(problem: CorruptedProblem, q: Fraction) -> float:
    """Largest error magnitude over the ((1-q)m + 1)-th largest."""
    eps = problem.eta + problem.xi
    top = ordered_magnitude(eps, 1)
    k = int((1 - q) * problem.m) + 1
    denom = ordered_magnitude(eps, k)
    if denom == 0.0:
        return 1.0 if top == 0.0 else math.inf
    return top / denom


def run_fig3(spec: ExperimentSpec, *, threads: int = 1) -> ExperimentResult:
    """Corruption-scale sweep: one point per (scale, trial, method)."""
    if spec.figure != "fig3":
        raise InvalidSpecError(f"spec is for {spec.figure!r}, not fig3")
    t0 = time.perf_counter()
    ens = spec.ensembles[0]
    jobs = [
        (si, scale, trial)
        for si, scale in enumerate(spec.scales)
        for trial in range(spec.trials)
    ]

    def one(job) -> list[Fig3Point]:
        si, scale, trial = job
        problem = generate(_gen_spec(spec, ens, scale, _child_seed(spec.seed, 1, 0, si, trial)))
        ratio = _identifiability_ratio(problem, spec.q)
        pts = []
        for mi, meth in enumerate(spec.methods):
            cfg = _solver_config(spec, meth, _child_seed(spec.seed, 2, 0, si, trial, mi))
            trace = run(problem, cfg)
            h = horizon_estimate(trace, spec.horizon_window).value
            pts.append(Fig3Point(scale=scale, trial=trial, method=meth, ratio=ratio, horizon=h))
        return pts

    points = [p for batch in _pool_map(one, jobs, threads) for p in batch]
    points.sort(key=lambda p: (p.scale, p.trial, METHOD_ORDER.index(p.method)))
    return ExperimentResult(
        spec=spec, points=tuple(points), wall_clock=time.perf_counter() - t0
    )


def run_experiment(spec: ExperimentSpec, *, threads: int = 1) -> ExperimentResult:
    runner = {"fig1": run_fig1, "fig2": run_fig2, "fig3": run_fig3}[spec.figure]
    return runner(spec, threads=threads)


def fig3_trend(result: ExperimentResult) -> dict:
    """Trend statistics of a fig3 result.

    Spearman rank correlation between corruption scale and the rk
    horizon over all points, plus the max/min ratio of the per-scale
    median dqrk horizon.
    """
    if result.points is None:
        raise InvalidSpecError("trend statistics need a fig3 result")
    out: dict = {}
    rk = [(p.scale, p.horizon) for p in result.points if p.method == "rk"]
    if rk:
        rho = _scipy_stats.spearmanr([s for s, _ in rk], [h for _, h in rk]).statistic
        out["spearman_scale_rk_horizon"] = float(rho)
    dq = [p for p in result.points if p.method == "dqrk"]
    if dq:
        scales = sorted({p.scale for p in dq})
        medians = [
            float(np.median([p.horizon for p in dq if p.scale == s])) for s in scales
        ]
        out["dqrk_horizon_max_min_ratio"] = max(medians) / min(medians)
    return out


def _write_csv(path: Path, header: list[str], rows) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _curve_rows(per_method: dict, methods: tuple[str, ...]):
    present = [meth for meth in METHOD_ORDER if meth in methods]
    length = max(len(per_method[meth]) for meth in present)
    for k in range(length):
        row = [str(k)]
        for meth in present:
            arr = per_method[meth]
            row.append(fmt_float(float(arr[k])) if k < len(arr) else "")
        yield row


def _curves_svg(result: ExperimentResult) -> str:
    series = []
    for ens in result.spec.ensembles:
        for meth in METHOD_ORDER:
            if meth not in result.spec.methods:
                continue
            arr = result.curves[ens][meth]
            series.append(
                svgplot.Series(
                    label=f"{ens} {meth}",
                    x=np.arange(len(arr), dtype=np.float64),
                    y=np.asarray(arr, dtype=np.float64),
                )
            )
    return svgplot.chart(
        series,
        title="squared error by iteration",
        xlabel="iteration",
        ylabel="squared error",
        ylog=True,
    )


def _scatter_svg(result: ExperimentResult) -> str:
    series = []
    for meth in METHOD_ORDER:
        pts = [p for p in result.points if p.method == meth]
        if not pts:
            continue
        series.append(
            svgplot.Series(
                label=meth,
                x=np.array([p.ratio for p in pts]),
                y=np.array([p.horizon for p in pts]),
                marker="circle",
            )
        )
    return svgplot.chart(
        series,
        title="error horizon by corruption ratio",
        xlabel="max error over bulk error",
        ylabel="empirical horizon",
        xlog=True,
        ylog=True,
    )


def emit(
    result: ExperimentResult,
    out_dir,
    formats: tuple[str, ...] = ("csv", "svg", "json"),
) -> list[Path]:
    """Write the result files; CSV is the source of truth.

    Curve results produce one CSV per ensemble plus a combined one;
    scatter results a single CSV.  result.json embeds everything needed
    to re-emit the other files byte-identically.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    spec = result.spec
    for fmt in formats:
        if fmt not in ("csv", "svg", "json"):
            raise InvalidSpecError(f"unknown format {fmt!r}")

    if "csv" in formats:
        if result.curves is not None:
            present = [meth for meth in METHOD_ORDER if meth in spec.methods]
            for ens in spec.ensembles:
                path = out / f"data_{ens}.csv"
                _write_csv(path, ["k", *present], _curve_rows(result.curves[ens], spec.methods))
                written.append(path)
            path = out / "data.csv"
            combined = (
                [ens, *row]
                for ens in spec.ensembles
                for row in _curve_rows(result.curves[ens], spec.methods)
            )
            _write_csv(path, ["ensemble", "k", *present], combined)
            written.append(path)
        else:
            path = out / "data.csv"
            _write_csv(
                path,
                ["scale", "trial", "method", "ratio", "horizon"],
                (
                    [fmt_float(p.scale), str(p.trial), p.method, fmt_float(p.ratio), fmt_float(p.horizon)]
                    for p in result.points
                ),
            )
            written.append(path)

    if "svg" in formats:
        svg = _curves_svg(result) if result.curves is not None else _scatter_svg(result)
        path = out / "plot.svg"
        svgplot.write_svg(path, svg)
        written.append(path)

    if "json" in formats:
        path = out / "result.json"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)

    return written


def load_result(path) -> ExperimentResult:
    """Read back a result.json written by emit()."""
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentResult.from_dict(json.load(fh))
