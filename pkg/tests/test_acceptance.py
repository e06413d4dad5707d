"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import json
import time

import numpy as np
import pytest

from schottkydim import calibration as cal
from schottkydim.cli import EXIT_OK, EXIT_VERIFICATION, bundled, main
from schottkydim.dimension import balogh_check, box_count
from schottkydim.sanity import BATTERY
from schottkydim.schottky import SchottkyDescriptor, verify_no_triple_chain

EXAMPLE_CONFIG = str(bundled("example_config.yaml"))
DEFAULT_CONFIG = str(bundled("default_config.yaml"))


@pytest.fixture
def report(request):
    """``report(ok, detail)`` prints the criterion line, then asserts."""
    terminal = request.config.pluginmanager.get_plugin("terminalreporter")
    label = request.node.name.removeprefix("test_")

    def emit(ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        print(line)
        if terminal is not None:
            terminal.write_line("")
            terminal.write_line(line)
        assert ok, line

    return emit


def battery_subset(names, seed=0):
    checks = {f.__name__: f for f in BATTERY}
    seeds = np.random.SeedSequence(seed).spawn(len(BATTERY))
    rngs = {f.__name__: np.random.default_rng(s) for f, s in zip(BATTERY, seeds)}
    return [checks[name](rngs[name]) for name in names]


def describe(checks):
    return "; ".join(f"{c.name}={c.value:.2e} (<= {c.bound:g})" for c in checks)


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    """Every bundled experiment, run through the command line.

    ``headline``: the example config on the bundled descriptor.
    ``default``: the default config, building its own system.  Each is run
    at one and eight jobs.
    """
    root = tmp_path_factory.mktemp("runs")
    out = {}
    for jobs in (1, 8):
        start = time.perf_counter()
        code = main(["dimension-run", "--config", EXAMPLE_CONFIG, "--jobs", str(jobs),
                     "--out", str(root / f"headline_j{jobs}")])
        out[f"headline_j{jobs}"] = (code, time.perf_counter() - start, root / f"headline_j{jobs}")
    for jobs in (1, 8):
        start = time.perf_counter()
        build_dir, run_dir = root / f"default_build_j{jobs}", root / f"default_j{jobs}"
        build = main(["schottky-build", "--config", DEFAULT_CONFIG, "--jobs", str(jobs), "--out", str(build_dir)])
        code = main(["dimension-run", str(build_dir / "descriptor.json"), "--config", DEFAULT_CONFIG,
                     "--jobs", str(jobs), "--out", str(run_dir)])
        out[f"default_j{jobs}"] = (code if build == EXIT_OK else build, time.perf_counter() - start, run_dir)
        out[f"default_build_j{jobs}"] = (build, None, build_dir)
    return out


def summary(run):
    return json.loads((run[2] / "summary.json").read_text())


def bundled_summaries(runs):
    return {"headline": summary(runs["headline_j1"]), "default": summary(runs["default_j1"])}


def test_criterion_01_algebraic_suites(report):
    start = time.perf_counter()
    checks = battery_subset(["heisenberg_axioms", "right_invariance", "dilation_ratio"])
    elapsed = time.perf_counter() - start
    ok = all(c.passed and c.bound <= 1e-13 for c in checks) and elapsed < 5
    report(ok, f"{describe(checks)}; {elapsed:.2f} s (< 5 s)")


def test_criterion_02_fiber_band_quotient(report):
    checks = battery_subset(["fiber_identity", "compact_band", "quotient_metric"])
    bounds = {"heisenberg.fiber_identity": 1e-12, "heisenberg.compact_band_constant": 10.0,
              "heisenberg.quotient_metric": 1e-6}
    ok = all(c.value <= bounds[c.name] for c in checks)
    report(ok, describe(checks))


def test_criterion_03_busemann_gromov(report):
    checks = battery_subset(["busemann_limit", "gromov_conformality", "gromov_equivariance", "unit_speed"])
    bounds = {"hyperbolic.busemann_limit": 1e-6, "hyperbolic.gromov_conformality": 1e-9,
              "hyperbolic.gromov_equivariance": 1e-9, "hyperbolic.geodesic_unit_speed": 1e-9}
    ok = all(c.value <= bounds[c.name] for c in checks)
    report(ok, describe(checks))


def test_criterion_04_iwasawa_conjugation(report):
    checks = battery_subset(["iwasawa_conjugation"])
    report(checks[0].value <= 1e-10, describe(checks))


def test_criterion_05_chains(report):
    checks = battery_subset(["chain_parametrisation", "vertical_line_chain"])
    report(all(c.value <= 1e-8 for c in checks), describe(checks))


def test_criterion_06_calibration(report):
    rng = np.random.default_rng(6)
    m = 100000
    cases = [
        ("square/euclidean", cal.unit_square(m, rng), "euclidean", 2.0, 0.1),
        ("cantor/euclidean", cal.cantor_line(m, rng), "euclidean", np.log(2) / np.log(3), 0.05),
        ("cantor/heisenberg", cal.cantor_line(m, rng), "heisenberg", np.log(2) / np.log(3), 0.05),
    ]
    vertical = cal.vertical_segment(m, rng)
    cases += [("vertical/heisenberg", vertical, "heisenberg", 2.0, 0.2),
              ("vertical/euclidean", vertical, "euclidean", 1.0, 0.2)]
    parts, ok = [], True
    for name, cloud, metric, target, tol in cases:
        start = time.perf_counter()
        slope = box_count(cloud, metric).slope
        elapsed = time.perf_counter() - start
        good = abs(slope - target) <= tol and elapsed < 60
        ok &= good
        parts.append(f"{name} {slope:.3f} (target {target:.3f} +- {tol}, {elapsed:.1f} s)")
    report(ok, "; ".join(parts))


def test_criterion_07_headline(report, runs):
    code, elapsed, _ = runs["headline_j1"]
    s = summary(runs["headline_j1"])
    delta = s["exponent"]["delta_series"]
    alpha = s["box_count"]["spherical"]["slope"]
    beta = s["box_count"]["heisenberg"]["slope"]
    agree = abs(s["exponent"]["delta_counting"] - delta)
    ok = (code == EXIT_OK and s["exponent"]["L"] == 12 and s["limit_points"]["count"] >= 50000
          and abs(alpha - delta) <= 0.15 and abs(beta - delta) <= 0.15 and agree <= 0.1
          and elapsed <= 600)
    report(ok, f"delta {delta:.4f} (counting {s['exponent']['delta_counting']:.4f}, gap {agree:.4f} <= 0.1); "
               f"alpha_spherical {alpha:.4f} (|a-d| {abs(alpha - delta):.4f} <= 0.15); "
               f"beta_heisenberg {beta:.4f} (|b-d| {abs(beta - delta):.4f} <= 0.15); "
               f"L {s['exponent']['L']}, {s['limit_points']['count']} limit points, {elapsed:.0f} s (<= 600 s)")


def test_criterion_08_lower_bound_gate(report, runs):
    parts, ok = [], True
    for name, s in bundled_summaries(runs).items():
        delta = s["exponent"]["delta_series"]
        alpha = s["box_count"]["spherical"]["slope"]
        fiber = s["fiber_transverse"]["fiber"]
        good = alpha >= delta - 0.5 * fiber - 0.2 and fiber <= 0.25
        ok &= good
        parts.append(f"{name}: alpha {alpha:.4f} >= {delta - 0.5 * fiber - 0.2:.4f}, fiber {fiber:.4f} <= 0.25")
    report(ok, "; ".join(parts))


def test_criterion_09_balogh_band(report, runs):
    parts, ok = [], True
    for name, s in bundled_summaries(runs).items():
        boxes = s["box_count"]
        alpha = boxes["spherical"]["slope"]
        for metric in ("heisenberg", "gromov"):
            if metric not in boxes:
                continue
            res = balogh_check(alpha, boxes[metric]["slope"], s["n"], slack=0.1)
            ok &= res["pass"]
            parts.append(f"{name} spherical/{metric}: min slack {min(res['slacks'].values()):.4f} (>= -0.1)")
    report(ok, "; ".join(parts))


def test_criterion_10_negative_control(report, tmp_path):
    code = main(["schottky-build", "--config", DEFAULT_CONFIG, "--shared-chain", "--out", str(tmp_path)])
    S = SchottkyDescriptor.load(tmp_path / "descriptor.json")
    base = verify_no_triple_chain(S, resolution=64, margin=0.01)
    by_resolution = [verify_no_triple_chain(S, resolution=r, margin=0.01) for r in (16, 64, 256)]
    by_margin = [verify_no_triple_chain(S, resolution=64, margin=m) for m in (0.0, 0.01, 0.1)]
    clearances = [r.margin for r in by_resolution]
    ok = (code == EXIT_VERIFICATION and not base.passed and base.witness is not None
          and len(base.witness["letters"]) == 3
          and not any(r.passed for r in by_resolution[1:] + by_margin[1:])
          and all(np.diff(clearances) <= 0))
    report(ok, f"exit {code}, witness letters {base.witness and base.witness['letters']}, "
               f"clearance by resolution 16/64/256 {[f'{c:.4f}' for c in clearances]}, "
               f"fails at margins {[not r.passed for r in by_margin]}")


def test_criterion_11_determinism(report, runs):
    parts, ok = [], True
    for name in ("headline", "default_build", "default"):
        a, b = runs[f"{name}_j1"][2], runs[f"{name}_j8"][2]
        names = sorted(p.name for p in a.iterdir() if p.suffix in (".csv", ".json"))
        same = [(a / n).read_bytes() == (b / n).read_bytes() for n in names]
        ok &= bool(names) and all(same) and sorted(p.name for p in b.iterdir()) == sorted(p.name for p in a.iterdir())
        parts.append(f"{name} {sum(same)}/{len(names)} bit-identical ({', '.join(names)})")
    ok &= "summary.json" in [p.name for p in runs["headline_j1"][2].iterdir()]
    report(ok, "jobs 1 vs 8: " + "; ".join(parts))
