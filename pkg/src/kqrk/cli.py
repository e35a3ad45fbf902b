"""Command-line entry point: gen, solve, bounds, experiment, verify.

Every command writes a manifest next to its outputs with the tool
version, a build hash over the package sources, the full resolved
parameter set, the seeds, and content checksums, so any output can be
reproduced byte-identically on the same build.  Wall-clock timing is the
one manifest field allowed to differ between identical runs.

Levels (beta, q, q0) given on the command line are snapped to the
nearest value whose product with m is an integer; a snap is reported on
stderr and recorded in the manifest.  A config file of ``key = value``
lines (# comments allowed) can supply any flag; explicit command-line
flags win.
"""
from __future__ import annotations

import argparse
import functools
import hashlib
import json
import sys
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import build_report, robust_params, spectral_summary
from .experiments import (
    ExperimentSpec,
    desk_profile,
    emit,
    load_result,
    paper_profile,
    run_experiment,
)
from .linalg import (
    NonIntegerQuantileError,
    TooManySubsetsError,
    ZeroRowError,
    snap_level,
)
from .problems import (
    GenSpec,
    InvalidSpecError,
    generate,
    ordered_magnitude,
)
from .serialize import (
    ContainerFormatError,
    load_problem,
    save_problem,
    save_trace_csv,
    sha256_file,
    spec_from_dict,
)
from .solvers import InvalidRegimeError, SolverConfig, run

__all__ = ["main", "build_hash"]

TOOL_NAME = "kqrk"


class UsageError(Exception):
    """Bad flags or config: reported on stderr, exit code 2."""


class VerificationError(Exception):
    """An artifact failed re-verification: exit code 1."""


_VALIDATION_ERRORS = (
    UsageError,
    InvalidSpecError,
    InvalidRegimeError,
    NonIntegerQuantileError,
    ZeroRowError,
    ContainerFormatError,
    FileNotFoundError,
    NotADirectoryError,
)


@functools.lru_cache(maxsize=1)
def build_hash() -> str:
    """12-hex digest over the package's own source files."""
    root = Path(__file__).resolve().parent
    h = hashlib.sha256()
    for path in sorted(root.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:12]


# ---------------------------------------------------------------- config


def load_config(path: str | Path) -> dict[str, str]:
    """Parse a key = value file; '#' starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


@dataclass(frozen=True)
class Opt:
    name: str
    conv: object  # str -> value
    default: object = None
    required: bool = False
    help: str = ""


def _conv_int(s: str) -> int:
    return int(s)


def _conv_float(s: str) -> float:
    return float(s)


def _conv_str(s: str) -> str:
    return s


def _conv_level(s: str) -> Fraction:
    # accepts decimals ("0.05") and explicit rationals ("1/20")
    return Fraction(s)


def _conv_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _conv_list(s: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in s.split(",") if part.strip())


def _conv_float_list(s: str) -> tuple[float, ...]:
    return tuple(float(part) for part in _conv_list(s))


def _conv_sigma_mode(s: str) -> tuple[str, int | None]:
    if s == "exact":
        return "exact", None
    if s.startswith("sampled:"):
        count = int(s.split(":", 1)[1])
        if count < 1:
            raise ValueError("sample count must be positive")
        return "sampled", count
    raise ValueError(f"expected 'exact' or 'sampled:N', got {s!r}")


def resolve_opts(ns: argparse.Namespace, opts: list[Opt]) -> dict:
    """Merge CLI > config file > defaults, converting as we go."""
    config: dict[str, str] = {}
    if getattr(ns, "config", None):
        config = load_config(ns.config)
        unknown = set(config) - {o.name for o in opts}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for opt in opts:
        raw = getattr(ns, opt.name, None)
        if raw is None and opt.name in config:
            raw = config[opt.name]
        if raw is None:
            if opt.required:
                raise UsageError(f"--{opt.name.replace('_', '-')} is required")
            out[opt.name] = opt.default
            continue
        try:
            out[opt.name] = opt.conv(raw) if isinstance(raw, str) else raw
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"--{opt.name.replace('_', '-')}: {exc}") from exc
    return out


def _add_opts(parser: argparse.ArgumentParser, opts: list[Opt]) -> None:
    parser.add_argument("--config", default=None, help="key = value defaults file")
    for opt in opts:
        parser.add_argument(
            f"--{opt.name.replace('_', '-')}",
            dest=opt.name,
            default=None,
            help=opt.help,
        )


def _snap(
    name: str, value: Fraction | None, m: int, snaps: dict
) -> Fraction | None:
    if value is None:
        return None
    snapped = snap_level(value, m)
    if snapped != value:
        print(
            f"{name}*m must be an integer; nearest feasible {name} = "
            f"{float(snapped):.6g} (requested {value})",
            file=sys.stderr,
        )
        snaps[name] = {"requested": str(value), "used": str(snapped)}
    return snapped


# ---------------------------------------------------------------- manifest


def _manifest(
    subcommand: str,
    argv: list[str],
    parameters: dict,
    seeds: dict,
    outputs: dict[str, str],
    *,
    snapped: dict | None = None,
    wall_clock: float = 0.0,
) -> dict:
    doc = {
        "schema_version": 1,
        "tool": {
            "name": TOOL_NAME,
            "version": __version__,
            "build_hash": build_hash(),
        },
        "subcommand": subcommand,
        "argv": list(argv),
        "parameters": parameters,
        "seeds": seeds,
        "outputs": outputs,
        "timing": {"wall_clock_s": wall_clock},
    }
    if snapped:
        doc["snapped"] = snapped
    return doc


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _checksums(paths: list[Path], base: Path) -> dict[str, str]:
    return {str(p.relative_to(base)): sha256_file(p) for p in sorted(paths)}


# ---------------------------------------------------------------- commands


_GEN_OPTS = [
    Opt("m", _conv_int, required=True, help="rows"),
    Opt("n", _conv_int, required=True, help="columns"),
    Opt("beta", _conv_level, default=Fraction(0), help="corrupted fraction"),
    Opt("scale", _conv_float, default=0.0, help="corruption magnitude"),
    Opt("noise", _conv_float, default=1.0, help="noise stddev"),
    Opt("ensemble", _conv_str, default="gaussian", help="gaussian|uniform"),
    Opt("disjoint", _conv_bool, default=False, help="corruption rows get no noise"),
    Opt("signed", _conv_bool, default=False, help="random corruption signs"),
    Opt("seed", _conv_int, default=0),
    Opt("out", _conv_str, required=True, help="output directory"),
]


def cmd_gen(ns: argparse.Namespace, argv: list[str]) -> int:
    t0 = time.perf_counter()
    opt = resolve_opts(ns, _GEN_OPTS)
    snaps: dict = {}
    beta = _snap("beta", opt["beta"], opt["m"], snaps)
    spec = GenSpec(
        m=opt["m"],
        n=opt["n"],
        beta=beta,
        corruption_scale=opt["scale"],
        noise_stddev=opt["noise"],
        ensemble=opt["ensemble"],
        disjoint_support=opt["disjoint"],
        signed_corruption=opt["signed"],
        seed=opt["seed"],
    )
    problem = generate(spec)
    out = Path(opt["out"])
    run_doc = _manifest(
        "gen",
        argv,
        {
            "m": spec.m,
            "n": spec.n,
            "beta": str(spec.beta),
            "scale": spec.corruption_scale,
            "noise": spec.noise_stddev,
            "ensemble": spec.ensemble,
            "disjoint": spec.disjoint_support,
            "signed": spec.signed_corruption,
        },
        {"seed": spec.seed},
        {},
        snapped=snaps,
        wall_clock=time.perf_counter() - t0,
    )
    save_problem(out, problem, spec, extra_manifest={"run": run_doc})
    return 0


_SOLVE_OPTS = [
    Opt("problem", _conv_str, required=True, help="problem bundle directory"),
    Opt("method", _conv_str, required=True, help="rk|qrk|dqrk"),
    Opt("q", _conv_level, help="upper quantile level"),
    Opt("q0", _conv_level, help="lower quantile level (dqrk)"),
    Opt("iters", _conv_int, default=10_000),
    Opt("seed", _conv_int, default=0),
    Opt("x0", _conv_str, default="default", help="zero|project_first|default"),
    Opt("residual_mode", _conv_str, default="full", help="full|incremental"),
    Opt("trace", _conv_str, required=True, help="trace CSV output path"),
]


def cmd_solve(ns: argparse.Namespace, argv: list[str]) -> int:
    t0 = time.perf_counter()
    opt = resolve_opts(ns, _SOLVE_OPTS)
    problem, _ = load_problem(opt["problem"])
    snaps: dict = {}
    q = _snap("q", opt["q"], problem.m, snaps)
    q0 = _snap("q0", opt["q0"], problem.m, snaps)
    config = SolverConfig(
        method=opt["method"],
        q=q,
        q0=q0,
        iterations=opt["iters"],
        seed=opt["seed"],
        x0=opt["x0"],
        residual_mode=opt["residual_mode"],
    )
    trace = run(problem, config)
    trace_path = Path(opt["trace"])
    trace_path.parent.mkdir(parents=True, exist_ok=True)
    save_trace_csv(trace_path, trace)
    manifest_path = trace_path.with_suffix(".manifest.json")
    doc = _manifest(
        "solve",
        argv,
        {
            "problem": str(opt["problem"]),
            "method": config.method,
            "q": None if q is None else str(q),
            "q0": None if q0 is None else str(q0),
            "iters": config.iterations,
            "x0": config.x0 if isinstance(config.x0, str) else "explicit",
            "residual_mode": config.residual_mode,
        },
        {"seed": config.seed},
        _checksums([trace_path], trace_path.parent),
        snapped=snaps,
        wall_clock=time.perf_counter() - t0,
    )
    _write_json(manifest_path, doc)
    return 0


_BOUNDS_OPTS = [
    Opt("problem", _conv_str, required=True, help="problem bundle directory"),
    Opt("beta", _conv_level, help="assumed corruption level (default: bundle)"),
    Opt("q", _conv_level, required=True, help="upper quantile level"),
    Opt("q0", _conv_level, help="lower quantile level (dqrk records)"),
    Opt("sigma_mode", _conv_sigma_mode, default=("exact", None), help="exact|sampled:N"),
    Opt("seed", _conv_int, default=0, help="seed for sampled mode"),
    Opt("out", _conv_str, required=True, help="report JSON path"),
]


def cmd_bounds(ns: argparse.Namespace, argv: list[str]) -> int:
    t0 = time.perf_counter()
    opt = resolve_opts(ns, _BOUNDS_OPTS)
    problem, bundle = load_problem(opt["problem"])
    snaps: dict = {}
    beta = opt["beta"]
    if beta is None:
        spec_doc = bundle.get("spec")
        beta = (
            Fraction(spec_doc["beta"])
            if spec_doc is not None
            else problem.minimal_beta()
        )
    beta = _snap("beta", beta, problem.m, snaps)
    q = _snap("q", opt["q"], problem.m, snaps)
    q0 = _snap("q0", opt["q0"], problem.m, snaps)
    params = robust_params(beta, q, q0)
    mode, samples = opt["sigma_mode"]
    try:
        summary = spectral_summary(
            problem.system, params, sigma_mode=mode, samples=samples, seed=opt["seed"]
        )
    except TooManySubsetsError as exc:
        raise UsageError(f"{exc}; use --sigma-mode sampled:N instead") from exc
    epsilon = problem.eta + problem.xi
    eta_inf = ordered_magnitude(epsilon, int(beta * problem.m) + 1)
    report = build_report(summary, params, eta_inf=eta_inf, epsilon=epsilon)
    out = Path(opt["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_json(out, report.to_dict())
    doc = _manifest(
        "bounds",
        argv,
        {
            "problem": str(opt["problem"]),
            "beta": str(beta),
            "q": str(q),
            "q0": None if q0 is None else str(q0),
            "sigma_mode": mode if samples is None else f"{mode}:{samples}",
        },
        {"seed": opt["seed"]},
        _checksums([out], out.parent),
        snapped=snaps,
        wall_clock=time.perf_counter() - t0,
    )
    _write_json(out.with_suffix(".manifest.json"), doc)
    return 0


_EXPERIMENT_OPTS = [
    Opt("profile", _conv_str, help="desk|paper (default desk)"),
    Opt("m", _conv_int),
    Opt("n", _conv_int),
    Opt("beta", _conv_level),
    Opt("q", _conv_level),
    Opt("q0", _conv_level),
    Opt("iters", _conv_int),
    Opt("trials", _conv_int),
    Opt("scales", _conv_float_list, help="comma-separated corruption scales"),
    Opt("ensembles", _conv_list, help="comma-separated subset of gaussian,uniform"),
    Opt("methods", _conv_list, help="comma-separated subset of rk,qrk,dqrk"),
    Opt("scale", _conv_float, help="fig2 corruption magnitude"),
    Opt("noise", _conv_float, help="noise stddev"),
    Opt("window", _conv_int, help="horizon window"),
    Opt("seed", _conv_int, default=0),
    Opt("threads", _conv_int, default=1),
    Opt("out", _conv_str, required=True, help="output directory"),
]

_EXPERIMENT_FIELD_MAP = {
    "m": "m",
    "n": "n",
    "beta": "beta",
    "q": "q",
    "q0": "q0",
    "iters": "iterations",
    "trials": "trials",
    "scales": "scales",
    "ensembles": "ensembles",
    "methods": "methods",
    "scale": "corruption_scale",
    "noise": "noise_stddev",
    "window": "horizon_window",
}


def cmd_experiment(ns: argparse.Namespace, argv: list[str]) -> int:
    t0 = time.perf_counter()
    opt = resolve_opts(ns, _EXPERIMENT_OPTS)
    figure = ns.figure
    profile = opt["profile"] or ("desk" if not ns.paper else "paper")
    if ns.desk and ns.paper:
        raise UsageError("--desk and --paper are mutually exclusive")
    if ns.paper:
        profile = "paper"
    if ns.desk:
        profile = "desk"
    if profile not in ("desk", "paper"):
        raise UsageError(f"unknown profile {profile!r}")
    factory = desk_profile if profile == "desk" else paper_profile
    overrides = {
        field: opt[key]
        for key, field in _EXPERIMENT_FIELD_MAP.items()
        if opt[key] is not None
    }
    # find m first so levels can be snapped against it
    probe = factory(figure, seed=opt["seed"])
    m = overrides.get("m", probe.m)
    snaps: dict = {}
    for key in ("beta", "q", "q0"):
        if key in overrides:
            overrides[key] = _snap(key, overrides[key], m, snaps)
    spec = factory(figure, seed=opt["seed"], **overrides)
    if opt["threads"] < 1:
        raise UsageError("--threads must be >= 1")
    print(
        f"running {figure} ({profile}, m={spec.m}, n={spec.n}, "
        f"iterations={spec.iterations})",
        file=sys.stderr,
    )
    result = run_experiment(spec, threads=opt["threads"])
    out = Path(opt["out"])
    written = emit(result, out)
    doc = _manifest(
        "experiment",
        argv,
        {"figure": figure, "profile": profile, **spec.to_dict()},
        {"seed": spec.seed},
        _checksums(written, out),
        snapped=snaps,
        wall_clock=time.perf_counter() - t0,
    )
    _write_json(out / "manifest.json", doc)
    return 0


_VERIFY_OPTS = [
    Opt("problem", _conv_str, help="problem bundle directory"),
    Opt("experiment", _conv_str, help="experiment output directory"),
]


def _verify_checksums(base: Path, sums: dict[str, str]) -> None:
    for rel, expected in sums.items():
        path = base / rel
        if not path.is_file():
            raise VerificationError(f"missing output file {path}")
        actual = sha256_file(path)
        if actual != expected:
            raise VerificationError(
                f"checksum mismatch for {path}: {actual} != {expected}"
            )


def _verify_problem(directory: Path) -> None:
    problem, manifest = load_problem(directory)  # re-runs all invariants
    sums = manifest.get("checksums")
    if sums:
        _verify_checksums(directory, sums)
    spec_doc = manifest.get("spec")
    if spec_doc is not None:
        regen = generate(spec_from_dict(spec_doc))
        pairs = [
            ("matrix", regen.system.data, problem.system.data),
            ("x_star", regen.x_star, problem.x_star),
            ("b_t", regen.b_t, problem.b_t),
            ("eta", regen.eta, problem.eta),
            ("xi", regen.xi, problem.xi),
            ("b", regen.b, problem.b),
        ]
        for name, fresh, stored in pairs:
            if not np.array_equal(fresh, stored):
                raise VerificationError(
                    f"{name} does not reproduce bit-identically from its spec"
                )


def _verify_experiment(directory: Path) -> None:
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise VerificationError(f"{directory}: no manifest.json")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    _verify_checksums(directory, manifest.get("outputs", {}))
    result = load_result(directory / "result.json")
    with tempfile.TemporaryDirectory() as tmp:
        fresh = emit(result, tmp)
        for path in fresh:
            stored = directory / path.name
            if stored.read_bytes() != path.read_bytes():
                raise VerificationError(
                    f"{stored.name} does not re-emit byte-identically"
                )


def cmd_verify(ns: argparse.Namespace, argv: list[str]) -> int:
    opt = resolve_opts(ns, _VERIFY_OPTS)
    targets = [t for t in (opt["problem"], opt["experiment"]) if t]
    if len(targets) != 1:
        raise UsageError("pass exactly one of --problem or --experiment")
    # An artifact that exists but no longer loads cleanly is a failed
    # verification, not a usage error; only a missing path stays usage.
    try:
        if opt["problem"]:
            _verify_problem(Path(opt["problem"]))
        else:
            _verify_experiment(Path(opt["experiment"]))
    except (FileNotFoundError, NotADirectoryError, VerificationError):
        raise
    except (InvalidSpecError, ContainerFormatError, ZeroRowError) as exc:
        raise VerificationError(str(exc)) from exc
    target = opt["problem"] or opt["experiment"]
    kind = "problem bundle" if opt["problem"] else "experiment"
    print(f"ok: {kind} {target}")
    return 0


# ---------------------------------------------------------------- dispatch


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="corrupted linear systems: generate, solve, certify, reproduce",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"{TOOL_NAME} {__version__}+{build_hash()}",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_gen = sub.add_parser("gen", help="generate a corrupted problem bundle")
    _add_opts(p_gen, _GEN_OPTS)
    p_gen.set_defaults(func=cmd_gen)

    p_solve = sub.add_parser("solve", help="run a solver on a bundle")
    _add_opts(p_solve, _SOLVE_OPTS)
    p_solve.set_defaults(func=cmd_solve)

    p_bounds = sub.add_parser("bounds", help="evaluate certificates for a bundle")
    _add_opts(p_bounds, _BOUNDS_OPTS)
    p_bounds.set_defaults(func=cmd_bounds)

    p_exp = sub.add_parser("experiment", help="run a packaged experiment")
    p_exp.add_argument("figure", choices=("fig1", "fig2", "fig3"))
    p_exp.add_argument("--desk", action="store_true", help="desk-scale profile")
    p_exp.add_argument("--paper", action="store_true", help="full-scale profile")
    _add_opts(p_exp, _EXPERIMENT_OPTS)
    p_exp.set_defaults(func=cmd_experiment)

    p_verify = sub.add_parser("verify", help="re-verify an output directory")
    _add_opts(p_verify, _VERIFY_OPTS)
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = make_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns, argv)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
