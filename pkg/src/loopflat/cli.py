"""Command line front end: classify, construct, verify.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.
"""
import argparse
import csv
import io as _io
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import ConfigurationError, LoopflatError
from .obstruction import CATALOG, format_table, full_table, parse_case_key, verdict
from .pipeline import RunConfig, pair_for_case, run_construction, verify_field

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def _grid(text):
    try:
        L, h = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigurationError(f"--grid expects L,h, got {text!r}") from exc
    return L, h


def build_parser():
    p = _Parser(prog="loopflat", description="Loop-group constructions of curvature-deformed submanifolds.")
    sub = p.add_subparsers(dest="command")

    c = sub.add_parser("classify", help="existence verdicts from the rank obstruction")
    c.add_argument("--case", action="append", help="case key, e.g. sphere:n=4,k=2 (repeatable)")
    c.add_argument("--format", choices=("json", "csv", "table"), default="table")
    c.add_argument("--out", help="directory for the verdict table")
    c.add_argument("--seed", type=int, default=None, help="rng seed for the rank computation")

    k = sub.add_parser("construct", help="lift a curved flat and report its geometry")
    k.add_argument("--case")
    k.add_argument("--config", help="JSON run configuration; flags override it")
    k.add_argument("--lambda", dest="lambdas", action="append", type=float)
    k.add_argument("--grid", type=_grid, help="half-width and spacing: L,h")
    k.add_argument("--degree", type=int)
    k.add_argument("--seed", type=int)
    k.add_argument("--seed-mode", choices=("aligned", "explicit", "random"))
    k.add_argument("--out", help="output directory")
    k.add_argument("--format", choices=("json", "csv", "table"), default="table")
    k.add_argument("--force", action="store_true", help="construct even when obstructed")

    v = sub.add_parser("verify", help="re-verify a frame-field dump")
    v.add_argument("dump")
    v.add_argument("--out", help="directory for verify.json")
    v.add_argument("--format", choices=("json", "table"), default="json")
    return p


# ---------------------------------------------------------------------------


def cmd_classify(args, out=None):
    out = out or sys.stdout
    if args.case:
        rows = [verdict(parse_case_key(key), rng=args.seed, with_witness=False) for key in args.case]
    else:
        rows = full_table(rng=args.seed)
    if args.format == "json":
        text = io.dumps([r.to_dict() for r in rows])
    elif args.format == "csv":
        buf = _io.StringIO()
        w = csv.writer(buf)
        keys = list(rows[0].to_dict())
        w.writerow(keys)
        for r in rows:
            w.writerow(["" if r.to_dict()[k] is None else r.to_dict()[k] for k in keys])
        text = buf.getvalue()
    else:
        text = format_table(rows) + "\n"
    out.write(text)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        ext = {"json": "json", "csv": "csv", "table": "txt"}[args.format]
        (Path(args.out) / f"verdicts.{ext}").write_text(text)
    bad = [r for r in rows if not r.matches]
    for r in bad:
        sys.stderr.write(f"mismatch: {r.key}: exists={r.exists}, expected={r.expected}\n")
    return EXIT_VERIFY if bad else EXIT_OK


def _config_from_args(args):
    data = io.read_json(args.config) if args.config else {}
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a JSON object")
    if args.case:
        data["case"] = args.case
    if args.lambdas:
        data["lambdas"] = args.lambdas
    if args.grid:
        data["L"], data["h"] = args.grid
    if args.degree is not None:
        data["degree"] = args.degree
    if args.seed is not None:
        data["rng_seed"] = args.seed
    if args.seed_mode:
        data["seed_mode"] = args.seed_mode
    if args.out:
        data["out"] = args.out
    if args.force:
        data["force"] = True
    if "case" not in data:
        raise ConfigurationError("construct needs --case or a config with 'case'")
    return RunConfig.from_dict(data)


def public_result(result):
    return {k: v for k, v in result.items() if not k.startswith("_")}


def cmd_construct(args, out=None):
    out = out or sys.stdout
    config = _config_from_args(args)
    result = run_construction(config)
    report = public_result(result)
    if config.out:
        d = Path(config.out)
        d.mkdir(parents=True, exist_ok=True)
        field_ = result["_field"]
        conv = result["_convention"]
        io.write_json(d / "report.json", report)
        io.write_frame_dump(d / "frames.json", field_, result["case"], config.tolerances)
        samples = {lam: s.points for lam, s in result["_samples"].items()}
        io.write_samples_csv(d / "samples.csv", field_.axes, field_.mask, samples)
        if field_.r == 2:
            for lam, s in result["_samples"].items():
                name = f"mesh_lambda_{io._fmt_float(lam)}.obj"
                io.write_obj(d / name, s.points[..., :conv.size], field_.mask,
                             comment=f"{result['case']} lambda={io._fmt_float(lam)}")
    if args.format == "json":
        out.write(io.dumps(report))
    else:
        out.write(_summary_text(report))
    return EXIT_OK


def _summary_text(report):
    lines = [f"case {report['case']}", f"lift: {report['lift']}"]
    c = report["connection"]
    lines.append(f"lambda fit residual {c['max_fit_residual']:.3e}, "
                 f"projection residual {c['projection_residual']:.3e}")
    for lam, rep in report["reports"].items():
        items = []
        for key in ("metric_ratio", "curvature_connection", "curvature_extrinsic", "sff_norm",
                    "normal_curvature_norm", "uuplus_wedge"):
            v = rep.get(key)
            if v is not None:
                items.append(f"{key}={v:.6g}")
        flags = rep.get("flags", {})
        if flags:
            items.append("flags=" + ",".join(k for k, v in flags.items() if v))
        lines.append(f"lambda={lam}: " + " ".join(items))
    return "\n".join(lines) + "\n"


def cmd_verify(args, out=None):
    out = out or sys.stdout
    field_, meta = io.read_frame_dump(args.dump)
    if not meta["case"]:
        raise ConfigurationError("dump does not name its case")
    pair = pair_for_case(meta["case"])
    result = verify_field(field_, pair, meta["tolerances"])
    result["case"] = meta["case"]
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        io.write_json(Path(args.out) / "verify.json", result)
    if args.format == "json":
        out.write(io.dumps(result))
    else:
        for name, c in result["checks"].items():
            out.write(f"{'pass' if c['pass'] else 'FAIL'} {name} {c['value']:.3e} <= {c['tolerance']:.1e}\n")
    return EXIT_OK if result["pass"] else EXIT_VERIFY


COMMANDS = {"classify": cmd_classify, "construct": cmd_construct, "verify": cmd_verify}


def main(argv=None):
    np.seterr(all="ignore")
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise ConfigurationError("missing command: classify, construct or verify")
        return COMMANDS[args.command](args)
    except LoopflatError as exc:
        sys.stderr.write(f"loopflat: {exc}\n")
        return exc.exit_code
    except (ValueError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"loopflat: numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())


__all__ = ["main", "build_parser", "cmd_classify", "cmd_construct", "cmd_verify", "CATALOG"]
