"""Command-line front end: JSON configuration in, CSV series and JSON summaries out.

    rmcurve <analyze|evolve|sample|verify-bulk|verify-edge|rh-check> --config PATH [--out DIR] [--seed U64]

Exit codes: 0 success, 1 invalid configuration (including samples too small
for a check), 2 numerical failure (degenerate curve, tracking or scan
failure), 3 failed statistical check.
Every run writes ``summary.json`` with the fully resolved configuration, the
tool version and, on failure, a machine-readable error code.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DegenerateCurveError,
    RmcurveError,
    SampleSizeError,
    ScanResolutionError,
    SpecError,
    UnsupportedConfigurationError,
)

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config",
    "run",
    "main",
    "format_float",
    "COMMANDS",
    "EXIT_OK",
    "EXIT_INVALID",
    "EXIT_NUMERICAL",
    "EXIT_STATISTICAL",
]

COMMANDS = ("analyze", "evolve", "sample", "verify-bulk", "verify-edge", "rh-check")
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_STATISTICAL = 0, 1, 2, 3

DEFAULT_N = 200
DEFAULT_OUT = "rmcurve-out"
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = "", code: str = "INVALID_CONFIG"):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.code = code


@dataclass
class Endpoint:
    a: float
    num: int
    den: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.num, self.den)


@dataclass
class Sampling:
    N: int = DEFAULT_N
    draws: int = 200
    seed: int = 0
    bins: int = 100


@dataclass
class Analysis:
    points_per_cut: int = 200
    bulk_window: list[float] | None = None
    edges: list[int] | None = None
    convention: str = "paper"
    ks_threshold: float = 0.02
    edge_tolerance: float = 0.1
    rh_tolerance: float = 1e-7
    critical_tol: float = 1e-9


@dataclass
class RunConfig:
    endpoints: list[Endpoint]
    time: dict | None = None
    sampling: Sampling = field(default_factory=Sampling)
    analysis: Analysis = field(default_factory=Analysis)
    output_dir: str = DEFAULT_OUT
    formats: list[str] = field(default_factory=lambda: list(FORMATS))

    def to_dict(self) -> dict:
        """Resolved configuration in the input layout, with every default filled in."""
        return {
            "model": {
                "endpoints": [{"a": e.a, "fraction": {"num": e.num, "den": e.den}} for e in self.endpoints]
            },
            "time": self.time,
            "sampling": asdict(self.sampling),
            "analysis": asdict(self.analysis),
            "output": {"dir": self.output_dir, "formats": list(self.formats)},
        }

    def curve_spec(self):
        from .curve import validate_spec

        return validate_spec([e.a for e in self.endpoints], [e.fraction for e in self.endpoints])

    def bridge(self):
        from .evolution import BridgeSpec

        return BridgeSpec(
            tuple(e.a for e in self.endpoints), tuple(e.fraction for e in self.endpoints), self.sampling.N
        )


def _type_error(path, expected, value):
    return ConfigError(f"expected {expected}, got {json.dumps(value)}", path)


def _integer(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise _type_error(path, "an integer", value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}", path)
    return value


def _real(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise _type_error(path, "a finite number", value)
    return float(value)


def _object(value, path, allowed):
    if not isinstance(value, dict):
        raise _type_error(path, "an object", value)
    unknown = sorted(set(value) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown field {unknown[0]!r}", f"{path}.{unknown[0]}" if path else unknown[0])
    return value


def _fraction(value, path) -> tuple[int, int]:
    if isinstance(value, str):
        try:
            f = Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise _type_error(path, "a fraction such as '1/2'", value) from exc
        return f.numerator, f.denominator
    value = _object(value, path, ("num", "den"))
    if "num" not in value or "den" not in value:
        raise ConfigError("needs both 'num' and 'den'", path)
    num = _integer(value["num"], f"{path}.num", 1)
    den = _integer(value["den"], f"{path}.den", 1)
    f = Fraction(num, den)
    return f.numerator, f.denominator


def _time(value, path):
    if value is None:
        return None
    value = _object(value, path, ("t", "grid"))
    out = {}
    if "t" in value:
        t = _real(value["t"], f"{path}.t")
        if not 0 < t < 1:
            raise ConfigError("must lie in (0, 1)", f"{path}.t")
        out["t"] = t
    if "grid" in value:
        grid = value["grid"]
        if not isinstance(grid, list):
            raise _type_error(f"{path}.grid", "a list", grid)
        ts = [_real(v, f"{path}.grid[{i}]") for i, v in enumerate(grid)]
        for i, t in enumerate(ts):
            if not 0 < t < 1:
                raise ConfigError("must lie in (0, 1)", f"{path}.grid[{i}]")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigError("must be strictly increasing", f"{path}.grid")
        out["grid"] = ts
    return out or None


def parse_config(doc) -> RunConfig:
    """Validate a configuration document; a summary written by a previous run is also accepted.

    Raises
    ------
    ConfigError
        With the dotted path of the first invalid field.
    """
    if isinstance(doc, dict) and "config" in doc and "model" not in doc:
        doc = doc["config"]
    doc = _object(doc, "", ("model", "time", "sampling", "analysis", "output"))
    if "model" not in doc:
        raise ConfigError("missing", "model")
    model = _object(doc["model"], "model", ("endpoints",))
    raw = model.get("endpoints")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("needs a non-empty list", "model.endpoints")
    endpoints = []
    for i, item in enumerate(raw):
        p = f"model.endpoints[{i}]"
        item = _object(item, p, ("a", "fraction"))
        if "a" not in item or "fraction" not in item:
            raise ConfigError("needs 'a' and 'fraction'", p)
        num, den = _fraction(item["fraction"], f"{p}.fraction")
        endpoints.append(Endpoint(_real(item["a"], f"{p}.a"), num, den))
    total = sum(e.fraction for e in endpoints)
    if total != 1:
        raise ConfigError(f"fractions sum to {total}, not 1", "model.endpoints")
    if len({e.a for e in endpoints}) != len(endpoints):
        raise ConfigError("endpoint positions must be distinct", "model.endpoints")

    s = _object(doc.get("sampling") or {}, "sampling", ("N", "draws", "seed", "bins"))
    lcm = math.lcm(*(e.den for e in endpoints))
    default_n = lcm * math.ceil(DEFAULT_N / lcm)
    sampling = Sampling(
        N=_integer(s.get("N", default_n), "sampling.N", 1),
        draws=_integer(s.get("draws", Sampling.draws), "sampling.draws", 1),
        seed=_integer(s.get("seed", Sampling.seed), "sampling.seed", 0),
        bins=_integer(s.get("bins", Sampling.bins), "sampling.bins", 1),
    )
    if sampling.seed >= 2**64:
        raise ConfigError("must fit in 64 bits", "sampling.seed")
    for e in endpoints:
        if sampling.N % e.den:
            raise ConfigError(f"N = {sampling.N} is not a multiple of {e.den}", "sampling.N")

    a = _object(
        doc.get("analysis") or {},
        "analysis",
        tuple(Analysis.__dataclass_fields__),
    )
    window = a.get("bulk_window")
    if window is not None:
        if not isinstance(window, list) or len(window) != 2:
            raise _type_error("analysis.bulk_window", "[lo, hi]", window)
        window = [_real(v, f"analysis.bulk_window[{i}]") for i, v in enumerate(window)]
        if not window[0] < window[1]:
            raise ConfigError("lo must be below hi", "analysis.bulk_window")
    edges = a.get("edges")
    if edges is not None:
        if not isinstance(edges, list) or not edges:
            raise _type_error("analysis.edges", "a non-empty list of edge indices", edges)
        edges = [_integer(v, f"analysis.edges[{i}]", 1) for i, v in enumerate(edges)]
    convention = a.get("convention", Analysis.convention)
    if convention not in ("paper", "sqrt"):
        raise ConfigError("must be 'paper' or 'sqrt'", "analysis.convention")
    analysis = Analysis(
        points_per_cut=_integer(a.get("points_per_cut", Analysis.points_per_cut), "analysis.points_per_cut", 2),
        bulk_window=window,
        edges=edges,
        convention=convention,
        ks_threshold=_real(a.get("ks_threshold", Analysis.ks_threshold), "analysis.ks_threshold"),
        edge_tolerance=_real(a.get("edge_tolerance", Analysis.edge_tolerance), "analysis.edge_tolerance"),
        rh_tolerance=_real(a.get("rh_tolerance", Analysis.rh_tolerance), "analysis.rh_tolerance"),
        critical_tol=_real(a.get("critical_tol", Analysis.critical_tol), "analysis.critical_tol"),
    )
    if not analysis.critical_tol > 0:
        raise ConfigError("must be positive", "analysis.critical_tol")

    o = _object(doc.get("output") or {}, "output", ("dir", "formats"))
    out_dir = o.get("dir", DEFAULT_OUT)
    if not isinstance(out_dir, str) or not out_dir:
        raise _type_error("output.dir", "a non-empty path string", out_dir)
    formats = o.get("formats", list(FORMATS))
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        raise ConfigError(f"must be a subset of {list(FORMATS)}", "output.formats")
    return RunConfig(
        endpoints=endpoints,
        time=_time(doc.get("time"), "time"),
        sampling=sampling,
        analysis=analysis,
        output_dir=out_dir,
        formats=sorted(set(formats), key=FORMATS.index),
    )


def load_config(path) -> RunConfig:
    """Read and validate a UTF-8 JSON configuration (or a previous run's summary.json).

    Raises
    ------
    ConfigError
        ``PARSE_ERROR`` with line and column for malformed JSON, ``INVALID_CONFIG``
        with the field path otherwise.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", code="CONFIG_NOT_FOUND") from exc
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path} is not UTF-8 (byte {exc.start})", code="PARSE_ERROR") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: {exc.msg} at line {exc.lineno} column {exc.colno}", code="PARSE_ERROR"
        ) from exc
    return parse_config(doc)


def format_float(v) -> str:
    """17 significant digits, '.' decimal point, lowercase exponent; round-trips exactly."""
    return "%.17g" % float(v)


def _write_csv(path: Path, header, columns) -> None:
    cols = [np.asarray(c) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(
            ",".join(str(int(v)) if np.issubdtype(type(v), np.integer) else format_float(v) for v in row)
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def _complex_pair(z) -> list[float]:
    return [float(z.real), float(z.imag)]


class _StatisticalFailure(Exception):
    def __init__(self, message, results):
        super().__init__(message)
        self.results = results


class _Context:
    def __init__(self, config: RunConfig, out: Path):
        self.config = config
        self.out = out

    @property
    def csv(self) -> bool:
        return "csv" in self.config.formats

    @property
    def json(self) -> bool:
        return "json" in self.config.formats


def _analyze(ctx: _Context) -> dict:
    from .curve import branch_points, cut_structure, density_profile

    spec = ctx.config.curve_spec()
    bps = branch_points(spec)
    cs = cut_structure(spec)
    prof = density_profile(spec, ctx.config.analysis.points_per_cut)
    if ctx.csv:
        _write_csv(ctx.out / "density.csv", ("x", "rho"), (prof.grid, prof.rho))
    return {
        "branch_points": {
            "real_y": list(bps.y_real),
            "real_x": list(bps.x_real),
            "complex_x": [[_complex_pair(w), _complex_pair(wb)] for w, wb in bps.x_pairs],
            "min_separation": bps.min_separation,
        },
        "cuts": [list(c) for c in cs.cuts],
        "masses": list(cs.masses),
        "total_mass": float(sum(cs.masses)),
        "edge_constants": list(cs.edge_constants),
        "sheet_groups": [list(g) for g in cs.sheet_groups],
        "gamma_crossings": [list(g) for g in cs.gamma_crossings],
    }


def _evolve(ctx: _Context) -> dict:
    from .evolution import bridge_density, cut_count_timeline, scan_grid, spec_at

    cfg = ctx.config
    bridge = cfg.bridge()
    time = cfg.time or {}
    grid = time.get("grid") or list(scan_grid())
    timeline = cut_count_timeline(bridge, grid, cfg.analysis.critical_tol)
    crit = [
        {"time": c.time, "bracket": list(c.bracket), "cuts_before": c.before, "cuts_after": c.after}
        for c in timeline.critical_times
    ]
    if ctx.csv:
        known = [(t, l) for t, l in zip(timeline.times, timeline.cut_counts) if l is not None]
        _write_csv(
            ctx.out / "timeline.csv",
            ("t", "l"),
            (np.array([t for t, _ in known]), np.array([l for _, l in known], dtype=np.int64)),
        )
    if ctx.json:
        _write_json(ctx.out / "critical_times.json", [c["time"] for c in crit])
    result = {
        "critical_times": crit,
        "skipped_times": list(timeline.skipped),
        "monotone": timeline.is_monotone,
        "monotone_violations": [list(v) for v in timeline.monotone_violations],
    }
    if "t" in time:
        from .curve import branch_points

        t = time["t"]
        from .evolution import rescaling

        s = rescaling(t, cfg.analysis.convention)
        z = np.array(branch_points(spec_at(bridge, t)).x_real) * s
        span = z[-1] - z[0]
        x = np.linspace(z[0] - 0.05 * span, z[-1] + 0.05 * span, 801)
        if ctx.csv:
            _write_csv(ctx.out / "bridge_density.csv", ("x", "density"), (x, bridge_density(bridge, t, x, cfg.analysis.convention)))
        result["at_time"] = {"t": t, "convention": cfg.analysis.convention, "support": z.tolist()}
    return result


def _sample(ctx: _Context):
    from .mc import sample_matrix

    cfg = ctx.config
    s = cfg.sampling
    return sample_matrix(cfg.curve_spec(), s.N, s.seed, s.draws)


def _sample_cmd(ctx: _Context) -> dict:
    from .curve import density_profile
    from .mc import cut_occupancy, density_distance, empirical_density, trace_moments

    cfg = ctx.config
    spec = cfg.curve_spec()
    prof = density_profile(spec, cfg.analysis.points_per_cut)
    sample = _sample(ctx)
    lo, hi = prof.cuts[0][0], prof.cuts[-1][1]
    pad = 0.1 * (hi - lo)
    hist = empirical_density(sample, cfg.sampling.bins, (lo - pad, hi + pad))
    mean_rho = np.diff(prof.cdf(hist.edges)) / np.diff(hist.edges)
    if ctx.csv:
        _write_csv(
            ctx.out / "histogram.csv",
            ("x_lo", "x_hi", "density", "rho_bin_average"),
            (hist.edges[:-1], hist.edges[1:], hist.density, mean_rho),
        )
    m = trace_moments(sample)
    occ, occ_se = cut_occupancy(sample)
    moments = {
        "trace_moments": asdict(m),
        "occupancy": occ.tolist(),
        "occupancy_se": occ_se.tolist(),
        "cut_masses": list(prof.cut_masses),
        "density_sup_distance": density_distance(hist, prof),
        "outside_histogram": hist.outside,
    }
    if ctx.json:
        _write_json(ctx.out / "moments.json", moments)
    return moments


def _verify_bulk(ctx: _Context) -> dict:
    from .curve import density_profile
    from .mc import bulk_statistics, default_bulk_window, unfold_draws

    cfg = ctx.config
    spec = cfg.curve_spec()
    prof = density_profile(spec, cfg.analysis.points_per_cut)
    window = cfg.analysis.bulk_window or list(default_bulk_window(spec))
    sample = _sample(ctx)
    parts = unfold_draws(sample, prof, window)
    stats = bulk_statistics(parts)
    if ctx.csv:
        draw = np.concatenate([np.full(p.size, d, dtype=np.int64) for d, p in enumerate(parts)])
        _write_csv(ctx.out / "spacings.csv", ("draw", "s"), (draw, stats.spacings))
        _write_csv(
            ctx.out / "pair_correlation.csv", ("r", "r2"), (stats.pair_r, stats.pair_correlation)
        )
    result = {
        "window": list(window),
        "spacings": int(stats.spacings.size),
        "mean_spacing": stats.mean_spacing,
        "ks_wigner_surmise": stats.ks_bulk,
        "ks_threshold": cfg.analysis.ks_threshold,
        "passed": bool(stats.ks_bulk < cfg.analysis.ks_threshold),
    }
    if not result["passed"]:
        raise _StatisticalFailure(
            f"KS distance {stats.ks_bulk:.4g} is not below {cfg.analysis.ks_threshold}", result
        )
    return result


def _verify_edge(ctx: _Context) -> dict:
    from .curve import cut_structure
    from .mc import edge_statistics, tracy_widom_reference

    cfg = ctx.config
    spec = cfg.curve_spec()
    cs = cut_structure(spec)
    edges = cfg.analysis.edges or [1, 2 * cs.l]
    ref = tracy_widom_reference()
    sample = _sample(ctx)
    tol = cfg.analysis.edge_tolerance
    per_edge = []
    rows_e, rows_d, rows_u = [], [], []
    for i in edges:
        st = edge_statistics(sample, i)
        ok = abs(st.edge_mean - ref["mean"]) <= tol and abs(st.edge_var - ref["var"]) <= tol
        per_edge.append({"edge": i, "mean": st.edge_mean, "var": st.edge_var, "draws": int(st.edge_values.size), "passed": bool(ok)})
        rows_e.append(np.full(st.edge_values.size, i, dtype=np.int64))
        rows_d.append(np.arange(st.edge_values.size, dtype=np.int64))
        rows_u.append(st.edge_values)
    if ctx.csv:
        _write_csv(ctx.out / "edge.csv", ("edge", "draw", "u"), (np.concatenate(rows_e), np.concatenate(rows_d), np.concatenate(rows_u)))
    result = {
        "reference": {"mean": ref["mean"], "var": ref["var"], "N": ref["N"], "draws": ref["draws"]},
        "tolerance": tol,
        "edges": per_edge,
        "passed": all(e["passed"] for e in per_edge),
    }
    if not result["passed"]:
        raise _StatisticalFailure("edge moments differ from the Tracy-Widom reference", result)
    return result


def _rh_check(ctx: _Context) -> dict:
    from .rh import verify_model_rh

    cfg = ctx.config
    rep = verify_model_rh(cfg.curve_spec())
    report = asdict(rep)
    report["residual_per_cut"] = list(rep.residual_per_cut)
    report["tolerance"] = cfg.analysis.rh_tolerance
    report["passed"] = bool(rep.max_residual < cfg.analysis.rh_tolerance and abs(rep.decay_slope + 1.0) <= 0.05)
    if ctx.json:
        _write_json(ctx.out / "rh_report.json", report)
    if not report["passed"]:
        raise RmcurveError(f"model solution check failed: residual {rep.max_residual:.3g}, slope {rep.decay_slope:.3f}")
    return report


_HANDLERS = {
    "analyze": _analyze,
    "evolve": _evolve,
    "sample": _sample_cmd,
    "verify-bulk": _verify_bulk,
    "verify-edge": _verify_edge,
    "rh-check": _rh_check,
}


def _error_code(exc) -> tuple[int, str]:
    if isinstance(exc, ConfigError):
        return EXIT_INVALID, exc.code
    if isinstance(exc, DegenerateCurveError):
        return EXIT_NUMERICAL, "DEGENERATE_CURVE"
    if isinstance(exc, UnsupportedConfigurationError):
        return EXIT_NUMERICAL, "UNSUPPORTED_CONFIGURATION"
    if isinstance(exc, ScanResolutionError):
        return EXIT_NUMERICAL, "SCAN_RESOLUTION"
    if isinstance(exc, SampleSizeError):
        return EXIT_INVALID, "INSUFFICIENT_SAMPLE"
    if isinstance(exc, (SpecError, ValueError)):
        return EXIT_INVALID, "INVALID_CONFIG"
    if isinstance(exc, (RmcurveError, ArithmeticError, np.linalg.LinAlgError)):
        return EXIT_NUMERICAL, "NUMERICAL_FAILURE"
    raise exc


def run(command: str, config: RunConfig, out: Path | str | None = None) -> int:
    """Run one subcommand, write its outputs and summary.json, return the exit code."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    out = Path(out if out is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"tool": "rmcurve", "version": __version__, "command": command, "config": config.to_dict()}
    try:
        summary["results"] = _HANDLERS[command](_Context(config, out))
        summary["status"] = "ok"
        code = EXIT_OK
    except _StatisticalFailure as exc:
        summary["results"] = exc.results
        summary["status"] = "failed"
        summary["error"] = {"code": "STATISTICAL_CHECK_FAILED", "message": str(exc)}
        code = EXIT_STATISTICAL
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes, re-raised if unknown
        code, name = _error_code(exc)
        summary["status"] = "error"
        summary["error"] = {"code": name, "message": str(exc)}
    _write_json(out / "summary.json", summary)
    return code


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rmcurve", description="Spectral curve analysis and Monte Carlo checks.")
    p.add_argument("--version", action="version", version=f"rmcurve {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON configuration or a previous summary.json")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int, help="master seed (overrides sampling.seed)")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("must be an unsigned 64-bit integer", "--seed")
            config.sampling.seed = args.seed
    except ConfigError as exc:
        out = Path(args.out or DEFAULT_OUT)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(
            out / "summary.json",
            {
                "tool": "rmcurve",
                "version": __version__,
                "command": args.command,
                "status": "error",
                "error": {"code": exc.code, "message": str(exc), "path": exc.path},
            },
        )
        print(f"rmcurve: {exc}", file=sys.stderr)
        return EXIT_INVALID
    code = run(args.command, config, args.out)
    if code != EXIT_OK:
        out = Path(args.out or config.output_dir)
        err = json.loads((out / "summary.json").read_text(encoding="utf-8")).get("error", {})
        print(f"rmcurve: {err.get('code')}: {err.get('message')}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
