"""Command line front end.

Subcommands build and verify Schottky systems, sample limit sets, estimate
the critical exponent, run the dimension experiment and the invariant
battery.  Every output file carries the config hash, seed and library
version; nothing that depends on wall-clock time or thread count is written,
so reruns with a different ``--jobs`` produce identical files.

Exit codes: 0 success, 2 usage, 3 construction failure, 4 verification
failure, 5 estimation failure (including failed experiment gates).
"""

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .dimension import (
    balogh_check,
    box_count,
    chart_frame,
    critical_exponent,
    default_scales,
    fiber_transverse_dims,
    ps_sample,
)
from .errors import ConstructionError, EstimationError, InputError, SchottkyDimError
from .schottky import (
    LIMIT_MODES,
    BuildParams,
    SchottkyDescriptor,
    build_good_position,
    limit_points,
    orbit_distances,
    shared_chain_system,
    verify,
)

EXIT_OK, EXIT_USAGE, EXIT_CONSTRUCTION, EXIT_VERIFICATION, EXIT_ESTIMATION = 0, 2, 3, 4, 5
SUMMARY_VERSION = 1
CSV_VERSION = 1
BOX_METRICS = ("spherical", "heisenberg", "euclidean", "gromov")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass
class BuildConfig:
    t0: float = 3.5
    separation: float = 0.1
    min_distance: float = 0.9
    radius_fraction: float = 0.45
    radius_shrink: float = 0.85
    power_cap: int = 64
    resolution: int = 64
    pingpong_resolution: int = 4096
    margin: float = 0.01
    shared_chain: bool = False


@dataclass
class DimensionConfig:
    metrics: list = field(default_factory=lambda: ["spherical", "heisenberg", "euclidean"])
    decades: float = 7.0
    per_octave: int = 2
    min_scales: int = 6
    min_decades: float = 3.0
    centers: int = 200
    slack: float = 0.1


@dataclass
class ExperimentConfig:
    n: int = 2
    k: int = 2
    seed: int = 7
    L: int = 12
    limit_length: int = 10
    limit_mode: str = "word-fixed-points"
    ps_length: int = 8
    build: BuildConfig = field(default_factory=BuildConfig)
    dimension: DimensionConfig = field(default_factory=DimensionConfig)
    output: str = "out"
    jobs: int = 1

    def validate(self):
        checks = [
            (self.n >= 2, "n must be at least 2"),
            (self.k >= 2, "k must be at least 2"),
            (self.seed >= 0, "seed must be nonnegative"),
            (3 <= self.L <= 16, "L must lie in [3, 16]"),
            (1 <= self.limit_length <= 14, "limit_length must lie in [1, 14]"),
            (self.limit_mode in LIMIT_MODES, f"limit_mode must be one of {LIMIT_MODES}"),
            (1 <= self.ps_length <= 12, "ps_length must lie in [1, 12]"),
            (1 <= self.jobs <= 256, "jobs must lie in [1, 256]"),
            (self.build.t0 > 0, "build.t0 must be positive"),
            (0 < self.build.radius_shrink < 1, "build.radius_shrink must lie in (0, 1)"),
            (self.build.resolution >= 1 and self.build.pingpong_resolution >= 1,
             "resolutions must be positive"),
            (self.build.margin >= 0, "build.margin must be nonnegative"),
            (self.build.power_cap >= 1, "build.power_cap must be positive"),
            (1.5 <= self.dimension.decades <= 12, "dimension.decades must lie in [1.5, 12]"),
            (self.dimension.per_octave >= 1, "dimension.per_octave must be positive"),
            (self.dimension.min_scales >= 3, "dimension.min_scales must be at least 3"),
            (self.dimension.min_decades > 0, "dimension.min_decades must be positive"),
            (self.dimension.centers >= 10, "dimension.centers must be at least 10"),
            (self.dimension.slack >= 0, "dimension.slack must be nonnegative"),
            (len(self.dimension.metrics) > 0
             and all(m in BOX_METRICS for m in self.dimension.metrics),
             f"dimension.metrics must be a nonempty subset of {BOX_METRICS}"),
        ]
        for ok, message in checks:
            if not ok:
                raise UsageError(message)
        return self

    def build_params(self):
        b = self.build
        return BuildParams(t0=b.t0, separation=b.separation, min_distance=b.min_distance,
                           radius_fraction=b.radius_fraction, radius_shrink=b.radius_shrink,
                           power_cap=b.power_cap, resolution=b.resolution,
                           pingpong_resolution=b.pingpong_resolution, margin=b.margin,
                           shared_chain=b.shared_chain)

    def hash(self):
        """Hash of everything that can change results (not output dir or jobs)."""
        d = asdict(self)
        d.pop("output")
        d.pop("jobs")
        text = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _coerce(cls, data, where):
    if not isinstance(data, dict):
        raise UsageError(f"{where or 'config'} must be a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise UsageError(f"unknown config keys {sorted(unknown)} in {where or 'config'}")
    defaults = cls()
    out = {}
    for name, value in data.items():
        default = getattr(defaults, name)
        key = f"{where}.{name}" if where else name
        if dataclasses.is_dataclass(default):
            out[name] = _coerce(type(default), value, key)
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                raise UsageError(f"{key} must be true or false")
            out[name] = value
        elif isinstance(default, int):
            if isinstance(value, bool) or not isinstance(value, int):
                raise UsageError(f"{key} must be an integer")
            out[name] = value
        elif isinstance(default, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise UsageError(f"{key} must be a number")
            out[name] = float(value)
        elif isinstance(default, list):
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise UsageError(f"{key} must be a list of strings")
            out[name] = list(value)
        else:
            if not isinstance(value, str):
                raise UsageError(f"{key} must be a string")
            out[name] = value
    return dataclasses.replace(defaults, **out)


def load_config(path=None, overrides=None):
    """Strictly parse a YAML config and apply dotted-key overrides."""
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except yaml.YAMLError as exc:
            raise UsageError(f"config is not valid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config must be a mapping")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        node = data
        *head, last = key.split(".")
        for part in head:
            node = node.setdefault(part, {})
        node[last] = value
    return _coerce(ExperimentConfig, data, "").validate()


def bundled(name):
    """Path of a file shipped in the package data directory."""
    return resources.files("schottkydim") / "data" / name


# ---------------------------------------------------------------------------
# output helpers


def _provenance(cfg, S=None):
    out = {"config_hash": cfg.hash(), "seed": cfg.seed, "library_version": __version__}
    if S is not None:
        out["descriptor_seed"] = S.seed
        out["descriptor_hash"] = hashlib.sha256(S.dumps().encode()).hexdigest()[:16]
    return out


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x)}")


def _write_csv(path, cfg, columns, rows, extra=None, S=None):
    buf = io.StringIO()
    meta = {**_provenance(cfg, S), "csv_version": CSV_VERSION, **(extra or {})}
    for key in sorted(meta):
        buf.write(f"# {key}: {meta[key]}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    Path(path).write_text(buf.getvalue())


def _outdir(cfg):
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_descriptor(path):
    try:
        return SchottkyDescriptor.load(path)
    except OSError as exc:
        raise UsageError(f"cannot read descriptor: {exc}") from exc
    except (InputError, KeyError, ValueError) as exc:
        raise UsageError(f"malformed descriptor: {exc}") from exc


def _report_text(verification):
    lines = [f"passed: {verification.get('passed')}"]
    for key in ("power", "radius"):
        if key in verification:
            lines.append(f"{key}: {verification[key]}")
    for key in ("conditions_1_3", "condition_4"):
        rep = verification.get(key)
        if rep is None:
            continue
        lines.append(f"{key}: passed={rep['passed']} margin={rep['margin']:.6g} "
                     f"resolution={rep['resolution']}")
        if rep.get("witness"):
            lines.append(f"  witness: {json.dumps(rep['witness'], default=_jsonable, sort_keys=True)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_schottky_build(cfg, args):
    out = _outdir(cfg)
    params = cfg.build_params()
    if cfg.build.shared_chain:
        S = shared_chain_system(cfg.k, cfg.seed, params, cfg.n)
        record = verify(S, jobs=cfg.jobs)
        S = dataclasses.replace(S, verification=record)
    else:
        try:
            S = build_good_position(cfg.k, cfg.seed, params, cfg.n, jobs=cfg.jobs)
        except ConstructionError as exc:
            _write_json(out / "report.json", {**_provenance(cfg), "error": str(exc),
                                              "diagnostics": exc.diagnostics})
            print(f"construction failed: {exc}", file=sys.stderr)
            return EXIT_CONSTRUCTION
    doc = S.to_dict()
    doc["provenance"] = _provenance(cfg)
    _write_json(out / "descriptor.json", doc)
    _write_json(out / "report.json", {**_provenance(cfg), "verification": S.verification})
    (out / "report.txt").write_text(_report_text(S.verification))
    print(_report_text(S.verification), end="")
    return EXIT_OK if S.verified else EXIT_VERIFICATION


def cmd_schottky_verify(cfg, args):
    S = _load_descriptor(args.descriptor)
    record = verify(S, resolution=args.resolution, margin=args.margin, jobs=cfg.jobs)
    out = _outdir(cfg)
    _write_json(out / "verify.json", {**_provenance(cfg, S), "verification": record})
    print(_report_text(record), end="")
    return EXIT_OK if record["passed"] else EXIT_VERIFICATION


def cmd_limit_sample(cfg, args):
    S = _load_descriptor(args.descriptor)
    cloud = limit_points(S, cfg.limit_length, cfg.limit_mode)
    w = cloud.ball
    columns = [f"{part}{i}" for i in range(1, S.n + 1) for part in ("re", "im")]
    rows = np.empty((len(cloud), 2 * S.n))
    rows[:, 0::2], rows[:, 1::2] = w.real, w.imag
    _write_csv(_outdir(cfg) / "limit_points.csv", cfg, columns, rows,
               {"L": cloud.L, "mode": cloud.mode, "skipped": cloud.skipped}, S)
    print(f"{len(cloud)} points ({cloud.skipped} skipped)")
    return EXIT_OK


def _exponent(S, cfg):
    od = orbit_distances(S, cfg.L)
    est = critical_exponent(od)
    # convergence trend: the same estimators two levels shallower
    keep = od.lengths <= cfg.L - 2
    shallow = critical_exponent(od.distances[keep], lengths=od.lengths[keep]) \
        if cfg.L - 2 >= 3 and keep.sum() >= 1000 else None
    return est, shallow


def _exponent_dict(est):
    if est is None:
        return None
    return {"delta_counting": est.delta_counting, "delta_series": est.delta_series,
            "window": list(est.window), "L": est.L}


def cmd_exponent(cfg, args):
    S = _load_descriptor(args.descriptor)
    est, shallow = _exponent(S, cfg)
    doc = {**_provenance(cfg, S), "exponent": _exponent_dict(est), "exponent_L_minus_2": _exponent_dict(shallow)}
    _write_json(_outdir(cfg) / "exponent.json", doc)
    print(f"delta_counting {est.delta_counting:.4f}  delta_series {est.delta_series:.4f}  (L = {est.L})")
    return EXIT_OK


def run_experiment(S, cfg):
    """The dimension experiment; returns ``(summary, tables, failed)``.

    Each stage records its error and the remaining stages still run when
    they do not depend on it.
    """
    summary = {**_provenance(cfg, S), "summary_version": SUMMARY_VERSION, "n": S.n, "k": S.k,
               "errors": {}, "gates": {}}
    tables = {}
    delta = None
    try:
        est, shallow = _exponent(S, cfg)
        delta = est.delta_counting
        summary["exponent"] = _exponent_dict(est)
        summary["exponent_L_minus_2"] = _exponent_dict(shallow)
    except SchottkyDimError as exc:
        summary["errors"]["exponent"] = str(exc)

    dims = {}
    try:
        cloud = limit_points(S, cfg.limit_length, cfg.limit_mode)
        summary["limit_points"] = {"count": len(cloud), "skipped": cloud.skipped,
                                   "L": cloud.L, "mode": cloud.mode}
        frame = chart_frame(cloud.Z)
        for metric in cfg.dimension.metrics:
            try:
                d = box_count(cloud, metric, _scales(cloud, metric, frame, cfg), frame=frame,
                              min_scales=cfg.dimension.min_scales,
                              min_decades=cfg.dimension.min_decades)
            except SchottkyDimError as exc:
                summary["errors"][f"box_count.{metric}"] = str(exc)
                continue
            dims[metric] = d
            tables[metric] = d
            summary.setdefault("box_count", {})[metric] = {
                "slope": d.slope, "stderr": d.stderr, "window": list(d.window),
                "window_scales": [float(d.scales[d.window[0]]), float(d.scales[d.window[1] - 1])],
                "windows_tried": len(d.windows),
            }
    except SchottkyDimError as exc:
        summary["errors"]["limit_points"] = str(exc)
        frame = None

    fiber = None
    try:
        if delta is None:
            raise EstimationError("no exponent estimate to weight the Patterson-Sullivan cloud")
        ps = ps_sample(S, cfg.ps_length, delta)
        ft = fiber_transverse_dims(ps, frame, centers=cfg.dimension.centers, seed=cfg.seed)
        fiber = ft.fiber
        summary["fiber_transverse"] = {"fiber": ft.fiber, "fiber_iqr": list(ft.fiber_iqr),
                                       "transverse": ft.transverse,
                                       "transverse_iqr": list(ft.transverse_iqr),
                                       "slab_width": ft.slab_width, "slabs": ft.slabs,
                                       "atoms": len(ps), "L": cfg.ps_length}
    except SchottkyDimError as exc:
        summary["errors"]["fiber_transverse"] = str(exc)

    summary["gates"] = _gates(summary, dims, delta, fiber, S.n, cfg.dimension.slack)
    failed = bool(summary["errors"]) or not all(g["pass"] for g in summary["gates"].values())
    summary["passed"] = not failed
    return summary, tables, failed


def _scales(cloud, metric, frame, cfg):
    from .dimension import _coords, _diameter

    coords = _coords(cloud, "heisenberg" if metric == "gromov" else metric, frame)
    return default_scales(_diameter(coords), cfg.dimension.decades, cfg.dimension.per_octave)


def _gates(summary, dims, delta, fiber, n, slack):
    gates = {}
    alpha = dims["spherical"].slope if "spherical" in dims else None
    beta_metric = next((m for m in ("heisenberg", "gromov") if m in dims), None)
    beta = dims[beta_metric].slope if beta_metric else None
    exp = summary.get("exponent")
    if exp is not None:
        diff = abs(exp["delta_counting"] - exp["delta_series"])
        gates["exponent_agreement"] = {"value": diff, "bound": 0.1, "pass": bool(diff <= 0.1)}
    if delta is not None:
        for name, d in dims.items():
            diff = abs(d.slope - delta)
            gates[f"dimension_match_{name}"] = {"value": diff, "bound": 0.15, "pass": bool(diff <= 0.15)}
    if alpha is not None and beta is not None:
        report = balogh_check(alpha, beta, n, slack)
        gates["balogh"] = {**report, "beta_metric": beta_metric}
    if alpha is not None and delta is not None and fiber is not None:
        lower = delta - 0.5 * fiber - 0.2
        gates["lower_bound"] = {"value": alpha - lower, "bound": 0.0, "pass": bool(alpha >= lower)}
    if fiber is not None:
        gates["fiber_dirac"] = {"value": fiber, "bound": 0.25, "pass": bool(fiber <= 0.25)}
    ft = summary.get("fiber_transverse")
    if beta is not None and ft is not None:
        gap = abs(beta - ft["fiber"] - ft["transverse"])
        # soft at 0.3, hard above 0.5
        gates["ledrappier_young"] = {"value": gap, "bound": 0.5, "soft_bound": 0.3,
                                     "soft_pass": bool(gap <= 0.3), "pass": bool(gap <= 0.5)}
    return gates


def cmd_dimension_run(cfg, args):
    S = _load_descriptor(args.descriptor)
    if not S.verified:
        print("descriptor is not verified", file=sys.stderr)
        return EXIT_VERIFICATION
    out = _outdir(cfg)
    summary, tables, failed = run_experiment(S, cfg)
    for metric, d in tables.items():
        lo, hi = d.window
        rows = [(float(e), int(c), int(lo <= i < hi)) for i, (e, c) in enumerate(d.table())]
        _write_csv(out / f"boxcount_{metric}.csv", cfg, ["scale", "count", "in_window"], rows,
                   {"metric": metric, "slope": repr(d.slope)}, S)
    _write_json(out / "summary.json", summary)
    for line in _summary_lines(summary):
        print(line)
    return EXIT_ESTIMATION if failed else EXIT_OK


def _summary_lines(summary):
    exp = summary.get("exponent")
    if exp:
        yield f"delta_counting {exp['delta_counting']:.4f}  delta_series {exp['delta_series']:.4f}"
    for metric, d in summary.get("box_count", {}).items():
        yield f"box {metric:<10s} {d['slope']:.4f} +- {d['stderr']:.4f}"
    ft = summary.get("fiber_transverse")
    if ft:
        yield f"fiber {ft['fiber']:.4f}  transverse {ft['transverse']:.4f}"
    for name, g in summary["gates"].items():
        yield f"gate {name:<22s} {'PASS' if g['pass'] else 'FAIL'}"
    for stage, msg in summary["errors"].items():
        yield f"error {stage}: {msg}"


def cmd_sanity(cfg, args):
    from .sanity import run_battery

    checks = run_battery(cfg.seed)
    doc = {**_provenance(cfg),
           "checks": [{"name": c.name, "value": float(c.value), "bound": c.bound, "pass": c.passed}
                      for c in checks]}
    _write_json(_outdir(cfg) / "sanity.json", doc)
    failed = [c.name for c in checks if not c.passed]
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} {float(c.value):.3g} <= {c.bound:g}")
    if failed:
        print("failed invariants: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFICATION
    return EXIT_OK


COMMANDS = {
    "schottky-build": cmd_schottky_build,
    "schottky-verify": cmd_schottky_verify,
    "limit-sample": cmd_limit_sample,
    "dimension-run": cmd_dimension_run,
    "exponent": cmd_exponent,
    "sanity": cmd_sanity,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p):
    p.add_argument("--config", help="YAML experiment config (unknown keys are errors)")
    p.add_argument("--out", dest="output", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker threads; results do not depend on it")
    p.add_argument("--n", type=int, help="complex hyperbolic dimension")


def _with_descriptor(p):
    p.add_argument("descriptor", nargs="?", help="descriptor JSON (default: bundled example)")


def build_parser():
    parser = _Parser(prog="schottkydim", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("schottky-build", help="construct and verify a Schottky system")
    _common(p)
    p.add_argument("--k", type=int, help="number of generators")
    p.add_argument("--t0", type=float, help="translation length of the base generators")
    p.add_argument("--min-distance", type=float, help="minimal chordal distance of fixed points")
    p.add_argument("--resolution", type=int, help="chain-condition resolution")
    p.add_argument("--margin", type=float, help="chain-condition margin")
    p.add_argument("--shared-chain", action="store_const", const=True,
                   help="negative control: put every fixed point on one chain")

    p = sub.add_parser("schottky-verify", help="re-verify a descriptor")
    _common(p)
    _with_descriptor(p)
    p.add_argument("--resolution", type=int, help="chain-condition resolution")
    p.add_argument("--margin", type=float, help="chain-condition margin")

    p = sub.add_parser("limit-sample", help="write limit-set points as CSV")
    _common(p)
    _with_descriptor(p)
    p.add_argument("--limit-length", type=int)
    p.add_argument("--mode", dest="limit_mode", choices=LIMIT_MODES)

    p = sub.add_parser("exponent", help="estimate the critical exponent")
    _common(p)
    _with_descriptor(p)
    p.add_argument("--L", type=int, help="maximal word length")

    p = sub.add_parser("dimension-run", help="the full dimension experiment")
    _common(p)
    _with_descriptor(p)
    p.add_argument("--L", type=int, help="maximal word length for the exponent")
    p.add_argument("--limit-length", type=int)
    p.add_argument("--ps-length", type=int)
    p.add_argument("--metrics", help="comma separated box-count metrics")
    p.add_argument("--min-decades", type=float)

    p = sub.add_parser("sanity", help="run the invariant battery")
    _common(p)
    return parser


_OVERRIDES = {
    "output": "output", "seed": "seed", "jobs": "jobs", "n": "n", "k": "k", "L": "L",
    "limit_length": "limit_length", "limit_mode": "limit_mode", "ps_length": "ps_length",
    "t0": "build.t0", "min_distance": "build.min_distance", "shared_chain": "build.shared_chain",
    "min_decades": "dimension.min_decades",
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        overrides = {key: getattr(args, attr) for attr, key in _OVERRIDES.items() if hasattr(args, attr)}
        if args.command == "schottky-build":
            overrides["build.resolution"] = args.resolution
            overrides["build.margin"] = args.margin
        if getattr(args, "metrics", None):
            overrides["dimension.metrics"] = [m.strip() for m in args.metrics.split(",") if m.strip()]
        cfg = load_config(args.config, overrides)
        if hasattr(args, "descriptor") and args.descriptor is None:
            args.descriptor = str(bundled("example_descriptor.json"))
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EstimationError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except ConstructionError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except InputError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
