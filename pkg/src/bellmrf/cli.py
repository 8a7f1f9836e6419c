"""Command-line harness: angle scans, model comparisons and grid oracle checks.

Subcommands::

    bellmrf scan    --experiment bell --models mrf1,kqed --sweep phi:0:3.1:32
    bellmrf compare --experiment triphoton --models collapse,conjecture \\
                    --sweep theta_a:0:3:20 --sweep theta_b:0:3:20 --sweep theta_c:0:3:20
    bellmrf oracle  --models mrf1 --theta-a 0 --theta-b 0.785 --grid-n 720
    bellmrf export  --in curve.json --format csv --out curve.csv

Exit codes: 0 success, 1 comparison outside tolerance, 2 usage error,
3 normalization failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import logging
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bell import DOUBLE, KLYSHKO_ABSORB, SUBSETS, BellConfig, bell_rates, grid_rates
from .mrf import PI, Angle, GridSpec, NormalizationError
from .triphoton import conjectured_mrf_triple_rate, triple_rate_collapse

log = logging.getLogger("bellmrf")

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_NORMALIZATION = 3
EXIT_IO = 4

EXPERIMENT_MODELS = {
    "bell": ("mrf1", "mrf2", "kqed"),
    "triphoton": ("collapse", "conjecture"),
}
SWEEP_VARS = {
    "bell": ("theta_a", "theta_b", "phi"),
    "triphoton": ("theta_a", "theta_b", "theta_c"),
}
DEFAULT_ALPHA = 1e-3
DEFAULT_K = 0.5
DEFAULT_GRID_N = 720
DEFAULT_TOLERANCE = 1e-9
COARSE_GRID_N = 32
ORACLE_ALPHA_SCALE = 2.0
RATE_SLACK = 1e-12


class UsageError(ValueError):
    """Bad request: unknown model, malformed sweep, and the like."""


# ---------------------------------------------------------------------------
# requests and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sweep:
    var: str
    start: float
    stop: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    def as_dict(self) -> dict:
        return {"var": self.var, "start": self.start, "stop": self.stop, "count": self.count}


@dataclass
class ScanRequest:
    experiment: str
    models: tuple[str, ...]
    sweeps: tuple[Sweep, ...]
    theta_a: float = 0.0
    theta_b: float = 0.0
    theta_c: float = 0.0
    alpha: float = DEFAULT_ALPHA
    grid_n: int = DEFAULT_GRID_N
    k: float = DEFAULT_K
    fmt: str = "csv"
    out: str | None = None

    def validate(self, single_sweep: bool = True) -> None:
        if self.experiment not in EXPERIMENT_MODELS:
            raise UsageError(f"unknown experiment {self.experiment!r}")
        allowed = EXPERIMENT_MODELS[self.experiment]
        if not self.models:
            raise UsageError("no models requested")
        for m in self.models:
            if m not in allowed:
                raise UsageError(f"model {m!r} does not apply to {self.experiment}; choose from {allowed}")
        if not self.sweeps:
            raise UsageError("a --sweep is required")
        if single_sweep and len(self.sweeps) != 1:
            raise UsageError("scan takes exactly one swept variable")
        names = [s.var for s in self.sweeps]
        if len(set(names)) != len(names):
            raise UsageError(f"variable swept twice: {names}")
        for s in self.sweeps:
            if s.var not in SWEEP_VARS[self.experiment]:
                raise UsageError(f"cannot sweep {s.var!r} in {self.experiment}")
            if s.count < 2:
                raise UsageError(f"sweep count must be at least 2, got {s.count}")
            if not (0.0 <= s.start < s.stop < PI):
                raise UsageError(f"sweep range [{s.start}, {s.stop}] must be increasing within [0, pi)")
        if self.experiment == "bell" and not 0 < self.alpha <= 0.1:
            raise UsageError(f"alpha must lie in (0, 0.1], got {self.alpha}")
        if not self.k > 0:
            raise UsageError(f"k must be positive, got {self.k}")
        if self.grid_n < 4:
            raise UsageError(f"grid n must be at least 4, got {self.grid_n}")

    def metadata(self) -> dict:
        meta = {
            "tool": "bellmrf",
            "version": __version__,
            "experiment": self.experiment,
            "models": list(self.models),
            "sweeps": [s.as_dict() for s in self.sweeps],
            "fixed": {"theta_a": self.theta_a, "theta_b": self.theta_b},
        }
        if self.experiment == "triphoton":
            meta["fixed"]["theta_c"] = self.theta_c
        if self.experiment == "bell":
            meta["alpha"] = self.alpha
        if "conjecture" in self.models:
            meta["k"] = self.k
        return meta


@dataclass
class RateCurve:
    swept_names: tuple[str, ...]
    models: tuple[str, ...]
    points: list[tuple[tuple[float, ...], tuple[float, ...]]]
    metadata: dict = field(default_factory=dict)

    def column(self, model: str) -> list[float]:
        i = self.models.index(model)
        return [rates[i] for _, rates in self.points]


@dataclass
class ComparisonReport:
    """Per-point |a - b| for one quantity under two labelled routes."""

    swept_names: tuple[str, ...]
    labels: tuple[str, str]
    points: list[tuple[tuple[float, ...], str, float, float]]
    tolerance: float
    metadata: dict = field(default_factory=dict)

    @property
    def diffs(self) -> list[float]:
        return [abs(a - b) for _, _, a, b in self.points]

    @property
    def max_diff(self) -> float:
        return max(self.diffs, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_diff <= self.tolerance


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _angles_at(request: ScanRequest, point: dict) -> tuple[float, float, float]:
    ta = point.get("theta_a", request.theta_a)
    tb = point.get("theta_b", request.theta_b)
    tc = point.get("theta_c", request.theta_c)
    if "phi" in point:
        tb = ta + point["phi"]
    return ta, tb, tc


def _check_rate(value: float, model: str, point) -> float:
    if not -RATE_SLACK <= value <= 1 + RATE_SLACK:
        raise ArithmeticError(f"{model} produced rate {value} outside [0, 1] at {point}")
    return min(max(value, 0.0), 1.0)


def evaluate_point(request: ScanRequest, point: dict) -> tuple[tuple[float, ...], bool]:
    """Rates of every requested model at one sweep point, plus a degenerate flag."""
    ta, tb, tc = _angles_at(request, point)
    rates = []
    degenerate = False
    for model in request.models:
        if request.experiment == "bell":
            r = bell_rates(BellConfig(ta, tb, model, request.alpha))
            degenerate |= r.degenerate
            value = r.coincidence
        elif model == "collapse":
            value = triple_rate_collapse(ta, tb, tc)
        else:
            value = conjectured_mrf_triple_rate(ta, tb, tc, request.k)
        rates.append(_check_rate(value, model, point))
    return tuple(rates), degenerate


def _sweep_points(sweeps):
    grids = [s.values() for s in sweeps]
    for combo in itertools.product(*grids):
        yield tuple(float(v) for v in combo)


def _evaluate(request: ScanRequest) -> RateCurve:
    names = tuple(s.var for s in request.sweeps)
    points = []
    degenerate = []
    for angles in _sweep_points(request.sweeps):
        rates, deg = evaluate_point(request, dict(zip(names, angles)))
        points.append((angles, rates))
        if deg:
            degenerate.append(list(angles))
    meta = request.metadata()
    if request.experiment == "bell":
        meta["degenerate_points"] = degenerate
    return RateCurve(names, tuple(request.models), points, meta)


def run_scan(request: ScanRequest) -> RateCurve:
    """Evaluate each model along the single swept variable. Writes nothing."""
    request.validate(single_sweep=True)
    return _evaluate(request)


def run_compare(request: ScanRequest, tolerance: float = DEFAULT_TOLERANCE) -> ComparisonReport:
    """|model_a - model_b| over the (possibly multi-dimensional) sweep."""
    request.validate(single_sweep=False)
    if len(request.models) != 2:
        raise UsageError(f"compare needs exactly two models, got {list(request.models)}")
    if not tolerance >= 0:
        raise UsageError(f"tolerance must be nonnegative, got {tolerance}")
    curve = _evaluate(request)
    quantity = "coincidence" if request.experiment == "bell" else "triple"
    points = [(angles, quantity, rates[0], rates[1]) for angles, rates in curve.points]
    meta = dict(curve.metadata, tolerance=tolerance)
    report = ComparisonReport(curve.swept_names, tuple(request.models), points, tolerance, meta)
    report.metadata["max_diff"] = report.max_diff
    report.metadata["passed"] = report.passed
    return report


def oracle_tolerance(alpha: float, n: int) -> float:
    """max(1e-3, 2 alpha), loosened tenfold on grids too coarse to resolve cos^2."""
    tol = max(1e-3, ORACLE_ALPHA_SCALE * alpha)
    if n < COARSE_GRID_N:
        tol *= 10.0
    return tol


def run_oracle(config: BellConfig, n: int, tolerance: float | None = None) -> ComparisonReport:
    """Grid-contracted event probabilities against the analytic class rates.

    Angles are snapped to the grid first and the analytic side is evaluated
    at the snapped angles, so the difference measures only the finite-alpha
    and quadrature error.  Raises UsageError at degenerate angles and
    NormalizationError when the grid carries no mass.
    """
    if config.model == "kqed":
        raise UsageError("the grid oracle applies to mrf1 and mrf2 only")
    if n < 4:
        raise UsageError(f"grid n must be at least 4, got {n}")
    if n < COARSE_GRID_N:
        log.warning("grid n=%d is coarse; oracle tolerance loosened tenfold", n)
    snap = (Angle(config.theta_a).snap_distance(n), Angle(config.theta_b).snap_distance(n))
    snapped = config.snapped(n)
    analytic = bell_rates(snapped)
    if analytic.degenerate:
        raise UsageError(
            f"angles ({snapped.theta_a}, {snapped.theta_b}) are degenerate on the n={n} grid; "
            "the analytic rates there are only a continuous limit"
        )
    try:
        grid = grid_rates(snapped, GridSpec(n, config.alpha))
    except NormalizationError as exc:
        raise NormalizationError(
            f"{exc} (n={n}, theta_a={snapped.theta_a}, theta_b={snapped.theta_b}): "
            "grid too coarse to satisfy the delta constraints"
        ) from exc
    expected = analytic.as_dict()
    if config.model == "mrf2":
        # the grid carries only the Klyshko sector; compare shares of it
        sector = expected[DOUBLE] + expected[KLYSHKO_ABSORB]
        expected = {DOUBLE: expected[DOUBLE] / sector, KLYSHKO_ABSORB: expected[KLYSHKO_ABSORB] / sector}
    angles = (snapped.theta_a, snapped.theta_b)
    points = [(angles, name, expected[name], grid[name]) for name in SUBSETS if name in grid]
    tol = oracle_tolerance(config.alpha, n) if tolerance is None else tolerance
    meta = {
        "tool": "bellmrf",
        "version": __version__,
        "experiment": "bell",
        "models": [config.model],
        "alpha": config.alpha,
        "n": n,
        "snapped": [snapped.theta_a, snapped.theta_b],
        "snap_distance": list(snap),
        "tolerance": tol,
    }
    report = ComparisonReport(("theta_a", "theta_b"), ("analytic", "grid"), points, tol, meta)
    report.metadata["max_diff"] = report.max_diff
    report.metadata["passed"] = report.passed
    return report


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _angle_header(names) -> list[str]:
    return ["angle_rad"] if len(names) == 1 else [f"{n}_rad" for n in names]


def _g(x: float) -> str:
    return f"{x:.15g}"


def to_csv(result: RateCurve | ComparisonReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    head = _angle_header(result.swept_names)
    if isinstance(result, RateCurve):
        writer.writerow(head + list(result.models))
        for angles, rates in result.points:
            writer.writerow([_g(a) for a in angles] + [_g(r) for r in rates])
    else:
        writer.writerow(head + ["quantity", *result.labels, "abs_diff"])
        for (angles, qty, a, b), d in zip(result.points, result.diffs):
            writer.writerow([_g(x) for x in angles] + [qty, _g(a), _g(b), _g(d)])
    return buf.getvalue()


def to_json(result: RateCurve | ComparisonReport) -> str:
    if isinstance(result, RateCurve):
        kind = "curve"
        points = [
            {"angles": dict(zip(result.swept_names, angles)), "rates": dict(zip(result.models, rates))}
            for angles, rates in result.points
        ]
    else:
        kind = "comparison"
        points = [
            {
                "angles": dict(zip(result.swept_names, angles)),
                "quantity": qty,
                result.labels[0]: a,
                result.labels[1]: b,
                "abs_diff": d,
            }
            for (angles, qty, a, b), d in zip(result.points, result.diffs)
        ]
    meta = {"kind": kind, "swept": list(result.swept_names)}
    if kind == "comparison":
        meta["labels"] = list(result.labels)
    meta.update(result.metadata)
    return json.dumps({"metadata": meta, "points": points}, indent=2, allow_nan=False) + "\n"


def from_json(text: str) -> RateCurve | ComparisonReport:
    doc = json.loads(text)
    meta = dict(doc["metadata"])
    kind = meta.pop("kind")
    names = tuple(meta.pop("swept"))
    if kind == "curve":
        models = tuple(meta["models"])
        points = [
            (tuple(p["angles"][n] for n in names), tuple(p["rates"][m] for m in models))
            for p in doc["points"]
        ]
        return RateCurve(names, models, points, meta)
    labels = tuple(meta.pop("labels"))
    points = [
        (tuple(p["angles"][n] for n in names), p["quantity"], p[labels[0]], p[labels[1]])
        for p in doc["points"]
    ]
    return ComparisonReport(names, labels, points, meta["tolerance"], meta)


def export(result: RateCurve | ComparisonReport, fmt: str, path: str | None) -> str:
    """Serialize and write to ``path`` (stdout when None). Returns the text."""
    if fmt == "csv":
        text = to_csv(result)
    elif fmt == "json":
        text = to_json(result)
    else:
        raise UsageError(f"unknown format {fmt!r}")
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def parse_sweep(text: str) -> Sweep:
    parts = text.split(":")
    if len(parts) != 4:
        raise UsageError(f"sweep must look like var:start:stop:count, got {text!r}")
    var, start, stop, count = parts
    try:
        return Sweep(var.replace("-", "_"), float(start), float(stop), int(count))
    except ValueError as exc:
        raise UsageError(f"bad sweep {text!r}: {exc}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file mirroring the flags; flags win")
    p.add_argument("--experiment", choices=sorted(EXPERIMENT_MODELS))
    p.add_argument("--models", help="comma-separated model names")
    p.add_argument("--theta-a", type=float)
    p.add_argument("--theta-b", type=float)
    p.add_argument("--theta-c", type=float)
    p.add_argument("--sweep", action="append", help="var:start:stop:count (repeatable for compare)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--grid-n", type=int)
    p.add_argument("--k", type=float)
    p.add_argument("--format", dest="fmt", choices=("csv", "json"))
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.add_argument("--degrees", action="store_true", default=None, help="angles given in degrees")
    p.add_argument("--tolerance", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bellmrf", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("scan", "rates of each model along one swept angle"),
        ("compare", "pointwise difference of two models"),
        ("oracle", "grid contraction against the analytic rates"),
    ):
        _common(sub.add_parser(name, help=helptext))
    ex = sub.add_parser("export", help="convert a saved JSON result to another format")
    ex.add_argument("--in", dest="source", required=True)
    ex.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    ex.add_argument("--out")
    return parser


_CONFIG_TYPES = {
    "experiment": str,
    "models": str,
    "theta_a": float,
    "theta_b": float,
    "theta_c": float,
    "sweep": str,
    "alpha": float,
    "grid_n": int,
    "k": float,
    "fmt": str,
    "format": str,
    "out": str,
    "degrees": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "tolerance": float,
}


def read_config(path: str) -> dict:
    """Parse a key=value file (no section header needed) into typed values."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string("[scan]\n" + text)
    out = {}
    for key, raw in cp["scan"].items():
        key = key.replace("-", "_")
        if key not in _CONFIG_TYPES:
            raise UsageError(f"unknown config key {key!r} in {path}")
        if key == "sweep":
            out[key] = [s.strip() for s in raw.replace(";", "\n").splitlines() if s.strip()]
            continue
        try:
            out["fmt" if key == "format" else key] = _CONFIG_TYPES[key](raw)
        except ValueError as exc:
            raise UsageError(f"bad value for {key} in {path}: {exc}") from None
    return out


def _merged(args: argparse.Namespace) -> dict:
    conf = read_config(args.config) if args.config else {}
    keys = ("experiment", "models", "theta_a", "theta_b", "theta_c", "sweep", "alpha", "grid_n", "k", "fmt",
            "out", "degrees", "tolerance")
    merged = {}
    for key in keys:
        value = getattr(args, key)
        merged[key] = value if value is not None else conf.get(key)
    return merged


def request_from_args(opts: dict, command: str) -> ScanRequest:
    scale = PI / 180.0 if opts.get("degrees") else 1.0
    sweeps = tuple(parse_sweep(s) for s in (opts.get("sweep") or ()))
    sweeps = tuple(Sweep(s.var, s.start * scale, s.stop * scale, s.count) for s in sweeps)
    experiment = opts.get("experiment") or "bell"
    default_models = {"scan": "kqed", "compare": "", "oracle": "mrf1"}[command]
    if experiment == "triphoton" and command == "scan":
        default_models = "collapse"
    models = tuple(m.strip() for m in (opts.get("models") or default_models).split(",") if m.strip())

    def angle(key):
        v = opts.get(key)
        return 0.0 if v is None else v * scale

    return ScanRequest(
        experiment=experiment,
        models=models,
        sweeps=sweeps,
        theta_a=angle("theta_a"),
        theta_b=angle("theta_b"),
        theta_c=angle("theta_c"),
        alpha=opts.get("alpha") or DEFAULT_ALPHA,
        grid_n=opts.get("grid_n") or DEFAULT_GRID_N,
        k=DEFAULT_K if opts.get("k") is None else opts["k"],
        fmt=opts.get("fmt") or "csv",
        out=opts.get("out"),
    )


def _oracle_reports(request: ScanRequest, tolerance) -> ComparisonReport:
    if request.experiment != "bell":
        raise UsageError("the grid oracle applies to the bell experiment only")
    if len(request.models) != 1:
        raise UsageError("oracle takes exactly one model")
    if request.sweeps:
        request.validate(single_sweep=True)
        names = (request.sweeps[0].var,)
        configs = []
        for angles in _sweep_points(request.sweeps):
            ta, tb, _ = _angles_at(request, dict(zip(names, angles)))
            configs.append(BellConfig(ta, tb, request.models[0], request.alpha))
    else:
        configs = [BellConfig(request.theta_a, request.theta_b, request.models[0], request.alpha)]
    try:
        reports = [run_oracle(c, request.grid_n, tolerance) for c in configs]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    first = reports[0]
    points = [p for r in reports for p in r.points]
    meta = dict(first.metadata)
    meta["snapped"] = [r.metadata["snapped"] for r in reports]
    meta["snap_distance"] = [r.metadata["snap_distance"] for r in reports]
    merged = ComparisonReport(first.swept_names, first.labels, points, first.tolerance, meta)
    merged.metadata["max_diff"] = merged.max_diff
    merged.metadata["passed"] = merged.passed
    return merged


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "export":
            with open(args.source, encoding="utf-8") as fh:
                result = from_json(fh.read())
            export(result, args.fmt, args.out)
            return EXIT_OK
        opts = _merged(args)
        request = request_from_args(opts, args.command)
        if args.command == "scan":
            export(run_scan(request), request.fmt, request.out)
            return EXIT_OK
        if args.command == "compare":
            tol = DEFAULT_TOLERANCE if opts["tolerance"] is None else opts["tolerance"]
            report = run_compare(request, tol)
        else:
            report = _oracle_reports(request, opts["tolerance"])
        export(report, request.fmt, request.out)
        if not report.passed:
            log.error("max |diff| %.6g exceeds tolerance %.6g", report.max_diff, report.tolerance)
            return EXIT_MISMATCH
        return EXIT_OK
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except NormalizationError as exc:
        log.error("normalization failed: %s", exc)
        return EXIT_NORMALIZATION
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
