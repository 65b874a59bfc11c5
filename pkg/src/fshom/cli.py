"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 computation limit exceeded,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import bench, correlation, dipfinder, verify
from .geometry import Geometry, PhaseConfig, phases_from_geometry
from .permanent import DimensionError

EXIT_OK, EXIT_USAGE, EXIT_LIMIT, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """17 significant digits: round-trips a double exactly."""
    return format(float(x), ".17g")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


@dataclass
class RunConfig:
    """Everything needed to reproduce a run."""

    command: str
    options: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return dumps(asdict(self))

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        if "command" not in data:
            raise UsageError(f"config {path} has no 'command'")
        return cls(data["command"], dict(data.get("options", {})))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _fix_pair(text: str) -> tuple:
    try:
        idx, val = text.split("=")
        return int(idx), float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected INDEX=VALUE, got {text!r}")


def _norm(text: str):
    if text in ("unit", "sqrt_modes"):
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"norm must be unit, sqrt_modes or a number, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output path (file or prefix); stdout if omitted")
    common.add_argument("--format", choices=("csv", "json", "bin"))
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", help="JSON RunConfig supplying defaults")
    common.add_argument("--save-config", help="write the resolved RunConfig here")

    parser = _Parser(prog="fshom", description="Free-space N-photon Hong-Ou-Mandel interference")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("g2", parents=[common], help="two-photon correlation, closed form vs permanent")
    p.add_argument("dp1", nargs="?", type=float)
    p.add_argument("dp2", nargs="?", type=float)
    p.add_argument("--sweep", type=int, metavar="R", help="R points of dp1 - dp2 over [0, 2pi)")

    p = sub.add_parser("gn", parents=[common], help="one N-photon coincidence value")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--phases", type=_float_list)
    src.add_argument("--geometry", help="Geometry JSON file {n, d, k, angles}")
    src.add_argument("--canonical", type=int, metavar="N")
    src.add_argument("--random", type=int, metavar="N", help="uniform random phases from --seed")
    p.add_argument("--alg", choices=("naive", "ryser", "glynn"), default="ryser")
    p.add_argument("--norm", type=_norm, default="unit")

    p = sub.add_parser("contour", parents=[common], help="scan G over two phases and extract the zero contour")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--fix", type=_fix_pair, action="append", default=None,
                   metavar="I=V", help="hold phase I (1-based) at V; unlisted phases are 0")
    p.add_argument("--free", type=str, default="1,2", help="two 1-based free phase indices")
    p.add_argument("--res", type=int, default=512)
    p.add_argument("--alg", choices=("naive", "ryser", "glynn"), default="ryser")
    p.add_argument("--norm", type=_norm, default="unit")

    sub.add_parser("bshom", parents=[common], help="beam splitter vs free-space two-photon dip")

    p = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    p.add_argument("--n-max", type=int, default=14)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("bench", parents=[common], help="time the permanent algorithms")
    p.add_argument("--n-min", type=int, default=6)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--alg", action="append", choices=("naive", "ryser", "glynn"))
    return parser


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError(parser.format_usage().strip())
    if args.config:
        cfg = RunConfig.from_file(args.config)
        if cfg.command != args.command:
            raise UsageError(f"config is for {cfg.command!r}, not {args.command!r}")
        defaults = {k: v for k, v in cfg.options.items()}
        # explicit command-line values win over the config
        explicit = vars(parser.parse_args(argv))
        baseline = vars(build_parser().parse_args([args.command]))
        for k, v in defaults.items():
            if k in explicit and explicit[k] == baseline.get(k):
                setattr(args, k, v)
    return args


def _write(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) if isinstance(v, float) else str(v) for v in r))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ commands


def cmd_g2(args):
    if args.sweep is not None:
        if args.sweep < 1:
            raise UsageError("--sweep needs R >= 1")
        points = [(2 * math.pi * k / args.sweep, 0.0) for k in range(args.sweep)]
    else:
        if args.dp1 is None or args.dp2 is None:
            raise UsageError("g2 needs DP1 DP2 or --sweep R")
        points = [(args.dp1, args.dp2)]
    rows = []
    for a, b in points:
        closed = correlation.g2_closed_form(a, b).g_value
        perm = correlation.gn_permanent(PhaseConfig((a, b)), "unit", "ryser").g_value
        rows.append((a, b, closed, perm))
    if args.format == "json":
        text = dumps([{"dp1": a, "dp2": b, "g_closed_form": c, "g_permanent": p} for a, b, c, p in rows]) + "\n"
    else:
        text = _csv(("dp1", "dp2", "g_closed_form", "g_permanent"), rows)
    _write(text, args.out)


def _gn_phases(args) -> PhaseConfig:
    if args.phases is not None:
        return PhaseConfig(tuple(args.phases))
    if args.geometry:
        data = json.loads(Path(args.geometry).read_text())
        return phases_from_geometry(Geometry.from_dict(data))
    if args.canonical is not None:
        return dipfinder.canonical_dip(args.canonical)
    if args.random is not None:
        rng = np.random.default_rng(args.seed)
        return PhaseConfig(tuple(rng.uniform(0.0, 2 * math.pi, args.random)))
    raise UsageError("gn needs one of --phases, --geometry, --canonical, --random")


def cmd_gn(args):
    phases = _gn_phases(args)
    res = correlation.gn_permanent(phases, args.norm, args.alg, threads=args.threads)
    out = res.to_dict()
    out["phases"] = phases.to_dict()
    out["abs_amplitude"] = abs(res.amplitude)
    out["normalized_residual"] = abs(res.amplitude) / (
        math.factorial(phases.n) * correlation.norm_factor(args.norm, phases.n) ** phases.n
    )
    if args.format == "csv":
        text = _csv(("n", "alg", "g", "amp_re", "amp_im", "normalized_residual"),
                    [(res.n, res.algorithm, res.g_value, res.amplitude.real, res.amplitude.imag,
                      out["normalized_residual"])])
    else:
        text = dumps(out) + "\n"
    _write(text, args.out)


def cmd_contour(args):
    n = args.n
    try:
        free = tuple(int(v) - 1 for v in args.free.split(","))
    except ValueError:
        raise UsageError(f"--free expects two comma-separated indices, got {args.free!r}")
    fixed = {}
    for idx, val in args.fix or []:
        if not 1 <= idx <= n:
            raise UsageError(f"--fix index {idx} outside 1..{n}")
        fixed[idx - 1] = val
    if args.res < 2:
        raise UsageError(f"--res must be >= 2, got {args.res}")
    try:
        grid = dipfinder.scan_grid(n, fixed, free, args.res, norm=args.norm, alg=args.alg,
                                   threads=args.threads)
    except DimensionError:  # a ValueError subclass, but exit code 2
        raise
    except ValueError as e:
        raise UsageError(str(e))
    contours = dipfinder.extract_contour(grid)

    prefix = args.out or "contour"
    fmt_ = args.format or "csv"
    meta = grid.metadata()
    written = []
    if fmt_ == "bin":
        path = Path(f"{prefix}.grid.bin")
        path.write_bytes(grid.g.astype("<f8").tobytes(order="C"))
        Path(f"{prefix}.grid.json").write_text(dumps(meta) + "\n")
        written += [str(path), f"{prefix}.grid.json"]
    elif fmt_ == "json":
        payload = dict(meta, g=grid.g.tolist())
        Path(f"{prefix}.grid.json").write_text(json.dumps(payload, sort_keys=True) + "\n")
        written.append(f"{prefix}.grid.json")
    else:
        xs = np.repeat(grid.x, len(grid.y))
        ys = np.tile(grid.y, len(grid.x))
        rows = [f"{fmt(a)},{fmt(b)},{fmt(g)}" for a, b, g in zip(xs, ys, grid.g.ravel())]
        Path(f"{prefix}.grid.csv").write_text("dp1,dp2,g\n" + "\n".join(rows) + "\n")
        written.append(f"{prefix}.grid.csv")
    Path(f"{prefix}.contour.json").write_text(dumps(contours.to_dict()) + "\n")
    written.append(f"{prefix}.contour.json")

    summary = {
        "files": written,
        "g_max": float(grid.g.max()),
        "g_min": float(grid.g.min()),
        "polylines": len(contours.polylines),
        "vertices": contours.n_vertices,
        "max_vertex_g": contours.max_vertex_g,
        "threshold": contours.threshold,
        "empty": contours.empty,
    }
    sys.stdout.write(dumps(summary) + "\n")


def cmd_bshom(args):
    bs = correlation.beam_splitter_output()
    fs = correlation.full_state_expansion(
        correlation.build_transfer_matrix(PhaseConfig((0.0, math.pi)), "sqrt_modes")
    )

    def weights(dist):
        return {",".join(map(str, p)): w for p, w in sorted(dist.weights.items(), reverse=True)}

    out = {
        "beam_splitter": {"weights": weights(bs), "total_weight": bs.total_weight},
        "free_space": {
            "phases": [0.0, math.pi],
            "weights": weights(fs),
            "total_weight": fs.total_weight,
            "g2_closed_form": correlation.g2_closed_form(0.0, math.pi).g_value,
            "g2_permanent": correlation.gn_permanent(PhaseConfig((0.0, math.pi))).g_value,
        },
    }
    if args.format == "csv":
        rows = [(k, bs.weights[tuple(map(int, k.split(",")))], fs.weights[tuple(map(int, k.split(",")))])
                for k in weights(bs)]
        text = _csv(("pattern", "beam_splitter", "free_space"), [(f'"{k}"', a, b) for k, a, b in rows])
    else:
        text = dumps(out) + "\n"
    _write(text, args.out)


def cmd_verify(args):
    if not 2 <= args.n_max <= 30:
        raise UsageError(f"--n-max must lie in [2, 30] (fast permanent limit), got {args.n_max}")
    report = verify.run_suite(args.n_max, args.seed, args.trials, args.inject_fault)
    _write(dumps(report) + "\n", args.out)
    if not report["passed"]:
        failed = [k for k, v in report["checks"].items() if not v["passed"]]
        sys.stderr.write("verification failed: " + ", ".join(failed) + "\n")
        return EXIT_VERIFY
    return EXIT_OK


def cmd_bench(args):
    if args.n_min < 1 or args.n_max < args.n_min or args.n_max > 30:
        raise UsageError("need 1 <= --n-min <= --n-max <= 30")
    algs = tuple(args.alg) if args.alg else ("naive", "ryser", "glynn")
    rows = bench.run_bench(args.n_min, args.n_max, algs, args.repeats, args.seed, args.threads)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write(",".join(bench.CSV_HEADER) + "\n")
        for alg, n, ns, value in rows:
            out.write(f"{alg},{n},{ns},{fmt(value)}\n")
            out.flush()
    finally:
        if args.out:
            out.close()


COMMANDS = {
    "g2": cmd_g2,
    "gn": cmd_gn,
    "contour": cmd_contour,
    "bshom": cmd_bshom,
    "verify": cmd_verify,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
        if args.save_config:
            opts = {k: v for k, v in vars(args).items()
                    if k not in ("command", "config", "save_config")}
            Path(args.save_config).write_text(RunConfig(args.command, opts).to_json() + "\n")
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        rc = COMMANDS[args.command](args)
        return EXIT_OK if rc is None else rc
    except UsageError as e:
        sys.stderr.write(f"usage error: {e}\n")
        return EXIT_USAGE
    except DimensionError as e:
        sys.stderr.write(f"limit exceeded: {e}\n")
        return EXIT_LIMIT
    except (ValueError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
