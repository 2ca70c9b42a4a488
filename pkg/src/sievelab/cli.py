"""Command-line front end: ``sievelab <subcommand> [flags]``.

Exit codes: 0 success, 1 invalid input, 2 a mathematical check failed.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
import time

import numpy as np

from . import experiments as ex
from .arith import build_window
from .characters import RealCharacter, scan_exceptional
from .decomp import build_decomp, nu_prime_power_mismatches, verify_inversion, verify_pointwise_bounds
from .densities import DensityParams, d_series_check, sieve_density_g_auto, twin_constant_B, C_of_h
from .report import ExperimentReport
from .weights import build_weights, monotonicity_sweep, verify_theta

log = logging.getLogger("sievelab")

EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 1, 2
INVERSION_TOL = 1e-9
PARTITION_CONSTANT = 10.0
# keys that shape how a run is executed or written, not what it computes
RUNTIME_KEYS = {"threads", "out", "format", "emit", "config", "command"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _even(text: str) -> int:
    v = int(text)
    if v == 0 or v % 2:
        raise argparse.ArgumentTypeError(f"h must be even and nonzero, got {v}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()] if text.strip() else []


def _threads(text: str) -> int:
    return _positive(text)


# (flag, keyword arguments); defaults live in DEFAULTS so that config files can
# sit between the defaults and the command line
_FLAGS = {
    "disc": dict(type=int, help="fundamental discriminant of the character"),
    "h": dict(type=_even, help="even shift h"),
    "x": dict(type=_positive, help="length of the summation range"),
    "y": dict(type=float, help="sieve level y"),
    "z": dict(type=float, help="sifting range z"),
    "w": dict(type=float, help="small-prime cutoff for the shift set"),
    "bigk": dict(type=_positive, help="largest shift multiplier K"),
    "u": dict(type=_positive, help="modulus dividing m in the congruence sum"),
    "v": dict(type=_positive, help="modulus dividing n in the congruence sum"),
    "k": dict(type=_positive, help="shift multiplier for the invariance probe"),
    "preset": dict(choices=["desk", "paper"], help="parameter preset"),
    "n": dict(type=_positive, help="upper end of the range"),
    "lo": dict(type=_positive, help="lower end of the range"),
    "parity": dict(choices=["upper", "lower"]),
    "construction": dict(choices=["brun", "beta"]),
    "exclude": dict(type=_int_list, help="primes removed from the sifting range"),
    "d_min": dict(type=int, help="smallest |d|"),
    "d_max": dict(type=int, help="largest |d|"),
    "top": dict(type=_positive, help="rows to keep"),
    "r": dict(type=_positive, help="number of deformation shifts"),
    "s": dict(type=float, help="real point of the series"),
    "cutoff": dict(type=_positive, help="series truncation"),
    "steps": dict(type=_positive, help="points in the x sweep"),
    "scan_to": dict(type=_positive, help="check every m up to this bound"),
    "moduli_cap": dict(type=_positive, help="largest modulus in the remainder scan"),
    "threads": dict(type=_threads, help="worker threads (results do not depend on it)"),
    "out": dict(help="output file (default stdout)"),
    "format": dict(choices=["csv", "json"]),
    "emit": dict(choices=["gnuplot"], help="write a two-column (x, ratio) data file instead"),
}

_COMMON = ["preset", "threads", "out", "format", "emit"]

SUBCOMMANDS = {
    "sieve-dump": (["lo", "n"], {"lo": 1, "n": 100}, "tabulate Lambda, mu, tau, phi"),
    "char-scan": (["d_min", "d_max", "top"], {"d_min": 3, "d_max": 500, "top": 10}, "rank discriminants by eta"),
    "decomp-verify": (["disc", "n", "y"], {"disc": 5, "n": 10**4, "y": None}, "check the Lambda decomposition"),
    "weights-verify": (
        ["z", "y", "scan_to", "parity", "construction", "exclude"],
        {"z": 10.0, "y": 10.0**4, "scan_to": 10**5, "parity": "upper", "construction": "brun", "exclude": []},
        "check the sieve inequalities",
    ),
    "density-check": (
        ["r", "z", "s", "cutoff"],
        {"r": 2, "z": 100.0, "s": 1.0, "cutoff": 10**5},
        "compare the generating series and local densities with closed forms",
    ),
    "twin-census": (["h", "x", "steps"], {"h": 2, "x": 10**6, "steps": 1}, "S_h(x) against BC(h)x"),
    "shift-average": (
        ["h", "x", "w", "bigk"],
        {"h": 2, "x": 10**6, "w": 10.0, "bigk": 1000},
        "average S_hk(x) over k coprime to hP(w)",
    ),
    "full-pipeline": (
        ["disc", "h", "x", "y", "z", "u", "v", "k", "construction", "r", "moduli_cap"],
        {
            "disc": 5,
            "h": 2,
            "x": 10**5,
            "y": None,
            "z": None,
            "u": 3,
            "v": 1,
            "k": 101,
            "construction": "brun",
            "r": 17,
            "moduli_cap": 1000,
        },
        "every sieve sum and check for one configuration",
    ),
}

COMMON_DEFAULTS = {"preset": "desk", "threads": 1, "out": None, "format": None, "emit": None}
JSON_DEFAULT = {"decomp-verify", "weights-verify", "density-check", "full-pipeline"}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sievelab", description="Sieve and twin-prime experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (keys, _, help_text) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key=value file; flags override it")
        for key in keys + _COMMON:
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=argparse.SUPPRESS, **_FLAGS[key])
    return parser


def load_config(path: str, allowed) -> dict:
    """Parse a flat key=value file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: malformed line (expected key=value): {raw.rstrip()}")
            key, value = (t.strip() for t in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in allowed:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            spec = _FLAGS[key]
            try:
                if "type" in spec:
                    value = spec["type"](value)
            except (ValueError, argparse.ArgumentTypeError) as err:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {err}") from None
            if "choices" in spec and value not in spec["choices"]:
                raise UsageError(f"{path}:{lineno}: {key} must be one of {spec['choices']}")
            out[key] = value
    return out


def resolve(argv) -> dict:
    """Defaults, then the config file, then command-line flags."""
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    verbose = ns.pop("verbose", False)
    keys, defaults, _ = SUBCOMMANDS[command]
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(defaults)
    path = ns.pop("config", None)
    if path:
        try:
            cfg.update(load_config(path, set(keys) | set(_COMMON)))
        except OSError as err:
            raise UsageError(f"cannot read config {path}: {err}") from None
    cfg.update(ns)
    if cfg["format"] is None:
        cfg["format"] = "json" if command in JSON_DEFAULT else "csv"
    cfg["command"] = command
    cfg["verbose"] = verbose
    return cfg


def echo(cfg: dict) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if k not in RUNTIME_KEYS | {"verbose"}}


# ---------------------------------------------------------------------------
# writers


def _table_csv(meta: dict, header, rows) -> str:
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}={_cell(v)}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _table_json(meta: dict, header, rows) -> str:
    return json.dumps({"config": meta, "rows": [dict(zip(header, r)) for r in rows]}, indent=2, default=_jsonable) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return " ".join(str(t) for t in v)
    return str(v)


def _jsonable(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    raise TypeError(type(v))


def render_report(report: ExperimentReport, cfg: dict) -> str:
    if cfg["emit"] == "gnuplot":
        return report.to_gnuplot()
    return report.to_csv() if cfg["format"] == "csv" else report.to_json()


def render_table(meta, header, rows, cfg) -> str:
    if cfg["emit"] == "gnuplot":
        raise UsageError("--emit gnuplot applies to report subcommands only")
    return _table_csv(meta, header, rows) if cfg["format"] == "csv" else _table_json(meta, header, rows)


# ---------------------------------------------------------------------------
# subcommands; each returns (text, failed)


def cmd_sieve_dump(cfg):
    lo, hi = cfg["lo"], cfg["n"]
    if hi < lo:
        raise UsageError("--n must be >= --lo")
    win = build_window(lo, hi)
    cols = [np.arange(lo, hi + 1), win.lam, win.mu, win.tau, win.phi]
    rows = [tuple(c[i].item() for c in cols) for i in range(hi - lo + 1)]
    return render_table(echo(cfg), ("n", "lambda", "mu", "tau", "phi"), rows, cfg), False


def cmd_char_scan(cfg):
    rows = scan_exceptional(cfg["d_min"], cfg["d_max"], cfg["top"], threads=cfg["threads"])
    rows = [(d, abs(d), L1, eta) for d, L1, eta in rows]
    return render_table(echo(cfg), ("disc", "D", "L1", "eta"), rows, cfg), False


def render_summary(meta: dict, summary: dict, cfg) -> str:
    if cfg["emit"] == "gnuplot":
        raise UsageError("--emit gnuplot applies to report subcommands only")
    if cfg["format"] == "json":
        return json.dumps({"config": meta, **summary}, indent=2, default=_jsonable) + "\n"
    rows = [(k, v) for k, v in summary.items() if not isinstance(v, (list, dict))]
    return _table_csv(meta, ("key", "value"), rows)


def cmd_decomp_verify(cfg):
    chi = RealCharacter(cfg["disc"])
    N = cfg["n"]
    ds = build_decomp(chi, N)
    err = verify_inversion(ds)
    viol = verify_pointwise_bounds(ds)
    mism = nu_prime_power_mismatches(ds)
    summary = {
        "inversion_max_error": err,
        "pointwise_violations": len(viol),
        "nu_prime_power_mismatches": len(mism),
    }
    if cfg["y"] is not None:
        split = ds.with_split(int(math.ceil(cfg["y"])))
        gap = np.max(np.abs(split.lambda_star + split.lambda_sub - ds.von_mangoldt))
        summary["split_max_error"] = float(gap)
    passed = err < INVERSION_TOL and not viol and not mism
    summary["pass"] = passed
    summary["violations"] = [v._asdict() for v in viol[:20]]
    return render_summary(echo(cfg), summary, cfg), not passed


def cmd_weights_verify(cfg):
    w = build_weights(cfg["z"], cfg["y"], cfg["exclude"], cfg["parity"], cfg["construction"])
    N = cfg["scan_to"]
    viol = verify_theta(w, N)
    a_max = min(N, 1000)
    sweep = monotonicity_sweep(w, a_max, max(1, min(100, N // a_max)), keep=0)
    summary = {
        "count_q": len(w),
        "max_abs_xi": int(np.max(np.abs(w.xi))),
        "violation_count": len(viol),
        "monotonicity_violation_fraction": sweep.fraction,
        "pass": not viol,
        "violations": [v._asdict() for v in viol[:20]],
    }
    return render_summary(echo(cfg), summary, cfg), bool(viol)


DENSITY_HEADER = ("check", "lhs", "rhs", "gap", "tolerance", "pass")


def cmd_density_check(cfg):
    params = DensityParams(z=cfg["z"], r=cfg["r"])
    rows = []
    chk = d_series_check(cfg["s"], params, cfg["cutoff"])
    rows.append(("series", chk.lhs, chk.rhs, chk.gap, chk.tail_bound, chk.ok))
    for p in (2, 3, 5, 101):
        for i in range(params.r + 1):
            g = sieve_density_g_auto(p, i, params)
            tol = 1e-10 + g.tail_bound
            gap = g.closed - g.summed if g.converged else math.nan
            rows.append((f"g_p{p}_eps{i}", g.closed, g.summed if g.converged else None, gap, tol, g.converged and abs(gap) <= tol))
    failed = not all(r[-1] for r in rows)
    if cfg["emit"] == "gnuplot":
        raise UsageError("--emit gnuplot applies to report subcommands only")
    return render_table(echo(cfg), DENSITY_HEADER, rows, cfg), failed


def _sweep_points(x: int, steps: int) -> list[int]:
    return sorted({max(1, round(x * (i + 1) / steps)) for i in range(steps)})


def cmd_twin_census(cfg):
    h, x = cfg["h"], cfg["x"]
    if h > x:
        raise UsageError("need h <= x")
    B, _ = twin_constant_B()
    Ch = float(C_of_h(h))
    report = ExperimentReport(metadata=echo(cfg))
    xs = _sweep_points(x, cfg["steps"])
    for xi, S in zip(xs, ex.twin_sum_profile(h, xs)):
        report.add("S_h", xi, h, S, main_term=B * Ch * xi)
    return render_report(report, cfg), False


def cmd_shift_average(cfg):
    rep = ex.shift_average(cfg["h"], cfg["x"], cfg["w"], cfg["bigk"], threads=cfg["threads"])
    rep.metadata = {**echo(cfg), **{k: v for k, v in rep.metadata.items() if k == "experiment"}}
    return render_report(rep, cfg), False


def cmd_full_pipeline(cfg):
    h, x = cfg["h"], cfg["x"]
    conf = ex.make_config(h, x, cfg["disc"], cfg["preset"], cfg["y"], cfg["z"], cfg["construction"], cfg["r"])
    ctx = ex.ExperimentContext(conf, threads=cfg["threads"])
    meta = echo(cfg)
    meta.update(resolved_y=conf.y, resolved_z=conf.z)
    report = ExperimentReport(metadata=meta)
    L = math.log(x)
    failed = False

    pc = ex.partition_check(ctx)
    report.add("S_h", x, h, pc.S_h)
    report.add("S_star_h", x, h, pc.S_star)
    report.add("T_h", x, h, pc.T_h)
    report.add("T_minus_h", x, h, pc.T_minus_h)
    report.add("partition_identity_residual", x, h, pc.identity_residual)
    report.add("partition_residual", x, h, pc.residual, main_term=pc.budget, residual=pc.residual)
    failed |= pc.empirical_constant > PARTITION_CONSTANT
    shape = ex.psi(h) * conf.chi.L1 * x * L
    report.add("S_h_minus_S_star", x, h, pc.S_h - pc.S_star, main_term=shape)

    V = ex.V_sum(ctx)
    report.add("V_h", x, h, V)
    report.add("T_h_over_V_budget", x, h, abs(pc.T_h), main_term=2.0**34 * V * L * L)
    failed |= abs(pc.T_h) > 2.0**34 * V * L * L
    bad = ex.majorant_violations(ctx)
    report.add("majorant_violations", x, h, sum(bad.values()))
    failed |= any(bad.values())

    k = cfg["k"]
    if math.gcd(h, k) == 1 and h * k <= x:
        probe = ex.shift_invariance_probe(ctx, k)
        report.add("shift_probe_gap", x, h, probe.gap, main_term=probe.normalizer)
    else:
        report.warnings.append(f"shift probe skipped: need gcd(h, k) = 1 and hk <= x (k={k})")

    lp = ctx.decomp.lam_prime
    A_uv = ex.congruence_sum_A(h, x, cfg["u"], cfg["v"], lam_prime=lp)
    A_11 = ex.congruence_sum_A(h, x, 1, 1, lam_prime=lp)
    report.add("A_uv_over_A_11", x, h, A_uv, main_term=A_11)

    scan = ex.equidistribution_scan(ctx, cfg["moduli_cap"])
    report.add("equidistribution_max_normalized", x, h, scan.max_normalized)
    report.add("equidistribution_mean_normalized", x, h, scan.mean_normalized)

    report.extend(ex.theorem_error_report(h, x, conf.chi))
    return render_report(report, cfg), failed


COMMANDS = {
    "sieve-dump": cmd_sieve_dump,
    "char-scan": cmd_char_scan,
    "decomp-verify": cmd_decomp_verify,
    "weights-verify": cmd_weights_verify,
    "density-check": cmd_density_check,
    "twin-census": cmd_twin_census,
    "shift-average": cmd_shift_average,
    "full-pipeline": cmd_full_pipeline,
}


def main(argv=None) -> int:
    try:
        cfg = resolve(argv)
    except SystemExit as stop:
        return int(stop.code or 0)
    except UsageError as err:
        print(f"sievelab: error: {err}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if cfg["verbose"] else logging.WARNING, stream=sys.stderr)
    start = time.perf_counter()
    try:
        text, failed = COMMANDS[cfg["command"]](cfg)
    except (UsageError, ValueError, OverflowError) as err:
        print(f"sievelab: error: {err}", file=sys.stderr)
        return EXIT_INVALID
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    log.info("%s finished in %.2fs", cfg["command"], time.perf_counter() - start)
    if failed:
        print(f"sievelab: {cfg['command']}: check failed", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
