"""Command-line front end.

Every output file starts with ``#`` comment lines holding the resolved
configuration, its SHA-256 digest and the seed; re-running with those
values reproduces the file byte for byte. Outputs are written to a
temporary file and renamed, so a failed run leaves nothing behind.
"""

import argparse
import hashlib
import io
import json
import os
import sys
import tempfile

from spatialvote import counterfactual, inference, presets, survey
from spatialvote.electorate import (CorrelationSpec, read_electorate_csv, sample_electorate,
                                    write_electorate_csv)
from spatialvote.geometry import METRIC_KINDS, Metric
from spatialvote.spatial_model import (NoiseConfig, PositionGrid, curve_argmax, optimize_position,
                                       share_curve, write_curve_csv)

DEFAULT_SEED = 20041102


class CLIError(Exception):
    pass


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:step, got {text!r}") from None
    if not (lo < hi and step > 0):
        raise argparse.ArgumentTypeError(f"grid needs lo < hi and step > 0, got {text!r}")
    return [lo, hi, step]


def _bounds(text):
    out = []
    for chunk in text.split(","):
        lo, _, hi = chunk.partition(":")
        try:
            out.append([float(lo), float(hi)])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bounds must be lo:hi[,lo:hi], got {text!r}") from None
    return out


def digest(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def header_lines(command: str, config: dict):
    return [f"spatialvote {command}",
            f"config_digest={digest(config)} seed={config.get('seed')}",
            "config=" + json.dumps(config, sort_keys=True, separators=(",", ":"))]


def _write(path, render):
    """Render into a buffer, then atomically place it at ``path`` (``-`` or None = stdout)."""
    buf = io.StringIO()
    render(buf)
    if path in (None, "-"):
        sys.stdout.write(buf.getvalue())
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# theoretical models


def _add_spatial_args(p):
    p.add_argument("--preset", choices=sorted(presets.THEORY_PRESETS), help="named configuration to start from")
    p.add_argument("--dims", type=int, help="number of issue dimensions")
    p.add_argument("--rho", type=float, help="pairwise correlation of voter positions")
    p.add_argument("--n", type=int, help="number of voters")
    p.add_argument("--r-pos", type=_floats, help="R's position, comma separated")
    p.add_argument("--d-pos", type=_floats, help="D's position (swept coordinates are replaced)")
    p.add_argument("--metric", choices=METRIC_KINDS, help="distance (default squared-euclidean)")
    p.add_argument("--weights", type=_floats, help="per-dimension metric weights")
    p.add_argument("--shift", type=float, help="valence advantage of D (default 0)")
    p.add_argument("--sigma", type=_floats, help="perception-noise sd, scalar or per dimension (default 0)")
    p.add_argument("--draws", type=int, help="noise draws per voter (default 1)")
    p.add_argument("--electorate", help="read voters from this CSV instead of sampling")
    p.add_argument("--seed", type=int, help=f"seed for voters and noise (default {DEFAULT_SEED})")
    p.add_argument("--strict", action="store_true", help="require an explicit --seed")
    p.add_argument("--out", help="output file (default stdout)")


def _resolve_spatial(args, parser, extra=()):
    cfg = dict(presets.THEORY_PRESETS[args.preset]) if args.preset else {}
    cfg.setdefault("rho", 0.0)
    cfg.setdefault("n", 10000)
    cfg.setdefault("axis", 0)
    for key in ("dims", "rho", "n", "r_pos", "d_pos", "metric", "weights", "shift", "sigma", "draws") + tuple(extra):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if args.strict and args.seed is None:
        parser.error("--strict requires --seed")
    cfg["seed"] = DEFAULT_SEED if args.seed is None else args.seed
    cfg.setdefault("metric", "squared-euclidean")
    cfg.setdefault("weights", None)
    cfg.setdefault("shift", 0.0)
    cfg.setdefault("sigma", [0.0])
    cfg.setdefault("draws", 1)
    if args.electorate:
        cfg["electorate"] = args.electorate
    if "r_pos" not in cfg:
        parser.error("--r-pos is required (or use --preset)")
    if "dims" not in cfg:
        cfg["dims"] = len(cfg["r_pos"])
    if "d_pos" not in cfg:
        cfg["d_pos"] = [0.0] * cfg["dims"]
    return cfg


def _build_problem(cfg):
    d = cfg["dims"]
    if len(cfg["r_pos"]) != d or len(cfg["d_pos"]) != d:
        raise CLIError(f"--r-pos and --d-pos must have {d} coordinates")
    if cfg.get("electorate"):
        with open(cfg["electorate"]) as fh:
            e = read_electorate_csv(fh)
        if e.dim != d:
            raise CLIError(f"electorate file has dimension {e.dim}, expected {d}")
    else:
        e = sample_electorate(CorrelationSpec(d, cfg["rho"]), cfg["n"], cfg["seed"])
    metric = Metric(cfg["metric"], cfg["weights"])
    sigma = cfg["sigma"][0] if len(cfg["sigma"]) == 1 else cfg["sigma"]
    noise = NoiseConfig(sigma, cfg["draws"], cfg["seed"])
    if noise.is_degenerate() and noise.draws == 1:
        noise = None
    return e, metric, noise


def cmd_theory_curve(args, parser):
    cfg = _resolve_spatial(args, parser, extra=("axis", "grid"))
    if "grid" not in cfg:
        parser.error("--grid is required (or use --preset)")
    e, metric, noise = _build_problem(cfg)
    grid = PositionGrid(cfg["axis"], *cfg["grid"])
    rows = share_curve(e, cfg["r_pos"], cfg["d_pos"], grid, metric, cfg["shift"], noise)
    x, best = curve_argmax(rows)
    shares = [s.share for _, s in rows]
    summary = {"argmax_position": x, "argmax_d_share": best.share, "argmax_mc_se": best.mc_se,
               "min_d_share": min(shares), "max_d_share": max(shares),
               "config_digest": digest(cfg), "seed": cfg["seed"]}
    _write(args.out, lambda fh: write_curve_csv(rows, fh, header_lines("theory-curve", cfg)))
    if args.summary:
        _write(args.summary, lambda fh: fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n"))
    else:
        print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return 0


def cmd_optimize(args, parser):
    cfg = _resolve_spatial(args, parser)
    cfg["free_axes"] = args.free_axes
    if args.bounds is None:
        lo, hi = (cfg["grid"][0], cfg["grid"][1]) if "grid" in cfg else (-3.0, 3.0)
        cfg["bounds"] = [[lo, hi]] * len(args.free_axes)
    else:
        cfg["bounds"] = args.bounds
    cfg["coarse_step"] = args.coarse_step
    cfg["refine_rounds"] = args.refine_rounds
    cfg.pop("grid", None)
    e, metric, noise = _build_problem(cfg)
    pos, est = optimize_position(e, cfg["r_pos"], cfg["d_pos"], cfg["free_axes"], cfg["bounds"],
                                 cfg["coarse_step"], cfg["refine_rounds"], metric, cfg["shift"], noise)
    out = {"position": [float(v) for v in pos], "d_share": est.share, "mc_se": est.mc_se,
           "n_voters": est.n_voters, "draws": est.draws,
           "config": cfg, "config_digest": digest(cfg), "seed": cfg["seed"]}
    _write(args.out, lambda fh: fh.write(json.dumps(out, indent=2, sort_keys=True) + "\n"))
    return 0


def cmd_export_electorate(args, parser):
    cfg = dict(presets.THEORY_PRESETS[args.preset]) if args.preset else {}
    for key in ("dims", "rho", "n"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if "dims" not in cfg:
        parser.error("--dims is required (or use --preset)")
    cfg.setdefault("rho", 0.0)
    cfg.setdefault("n", 10000)
    if args.strict and args.seed is None:
        parser.error("--strict requires --seed")
    cfg = {"dims": cfg["dims"], "rho": cfg["rho"], "n": cfg["n"],
           "seed": DEFAULT_SEED if args.seed is None else args.seed}
    e = sample_electorate(CorrelationSpec(cfg["dims"], cfg["rho"]), cfg["n"], cfg["seed"])
    _write(args.out, lambda fh: write_electorate_csv(e, fh, header_lines("export-electorate", cfg)))
    return 0


# ---------------------------------------------------------------------------
# survey pipeline


def cmd_synth(args, parser):
    if args.print_default_config:
        sys.stdout.write(survey.format_config(survey.SynthConfig()))
        return 0
    if args.strict and args.seed is None:
        parser.error("--strict requires --seed")
    entries = {}
    if args.config:
        with open(args.config) as fh:
            base = survey.parse_config(fh.read())
    else:
        base = survey.SynthConfig()
    for item in args.set or []:
        if "=" not in item:
            parser.error(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        entries[k.strip()] = v.strip()
    if args.sizes:
        if len(args.sizes) != 3:
            parser.error("--sizes takes three counts: D,I,R")
        for p, n in zip(survey.PARTIES, args.sizes):
            entries[f"size.{p}"] = str(int(n))
    config = survey.apply_config_entries(entries, base)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    ds = survey.synth_survey(config, seed)
    cfg = {"generator": survey.config_to_dict(config), "seed": seed}
    _write(args.out, lambda fh: ds.to_csv(fh, header_lines("synth", cfg)))
    return 0


def _read_survey(path):
    with open(path) as fh:
        ds, report = survey.load_survey(fh, provenance=path)
    for row, why in report.rejected:
        print(f"warning: {path}: row {row} rejected: {why}", file=sys.stderr)
    return ds


def format_fit_table(pm, cm) -> str:
    lines = [f"{'cell':<22}{'intercept':>20}{'econ_self':>20}{'soc_self':>20}{'resid_sd':>10}{'n':>8}"]
    for c, d, p in inference.perception_cells():
        f = pm[(c, d, p)]
        cells = [f"{b:8.3f} ({s:.3f})" for b, s in zip(f.coefs, f.se)]
        lines.append(f"{c + ' ' + d + ' ' + p:<22}" + "".join(f"{x:>20}" for x in cells)
                     + f"{f.residual_sd:10.3f}{f.n:8d}")
    lines.append("")
    lines.append(f"{'vote choice':<22}{'intercept':>20}{'dist_e':>20}{'dist_s':>20}{'conv':>10}{'n':>8}")
    for p in survey.PARTIES:
        f = cm[p]
        cells = [f"{b:8.3f} ({s:.3f})" for b, s in zip(f.coefs, f.se)]
        lines.append(f"{'party ' + p:<22}" + "".join(f"{x:>20}" for x in cells)
                     + f"{'yes' if f.converged else 'NO':>10}{f.n:8d}")
    return "\n".join(lines) + "\n"


def cmd_fit(args, parser):
    ds = _read_survey(args.survey)
    try:
        pm, cm = inference.fit_all(ds)
    except inference.ModelFitError as exc:
        for cell, why in exc.cells.items():
            name = "/".join(cell) if isinstance(cell, tuple) else cell
            print(f"error: fit failed for {name}: {why}", file=sys.stderr)
        return 1
    cfg = {"survey": args.survey, "seed": None, "n_respondents": len(ds)}
    text = inference.format_models(pm, cm)
    _write(args.out, lambda fh: fh.write("".join(f"# {h}\n" for h in header_lines("fit", cfg)) + text))
    sys.stdout.write(format_fit_table(pm, cm))
    return 0


def cmd_counterfactual(args, parser):
    if args.strict and args.seed is None:
        parser.error("--strict requires --seed")
    with open(args.model) as fh:
        pm, cm = inference.parse_models(fh.read())
    if pm is None:
        raise CLIError(f"{args.model} has no perception-model records")
    if args.choice_model not in (None, "model"):
        if args.choice_model not in presets.CHOICE_ALIASES:
            raise CLIError(f"unknown choice model {args.choice_model!r}")
        cm = inference.choice_preset(presets.CHOICE_ALIASES[args.choice_model])
    if cm is None:
        raise CLIError(f"{args.model} has no choice-model records; pass --choice-model")
    ds = _read_survey(args.survey)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    cfg = {"model": args.model, "survey": args.survey, "candidate": args.candidate, "dim": args.dim,
           "grid": args.grid, "soc_grid": args.soc_grid, "shift": args.shift, "draws": args.draws,
           "choice_model": args.choice_model or "model", "seed": seed}
    if args.shift is not None:
        if len(args.shift) != 2:
            parser.error("--shift takes two numbers: delta_econ,delta_soc")
        res = counterfactual.run_shift(pm, cm, ds, counterfactual.ShiftSpec(args.candidate, *args.shift),
                                       args.draws, seed)
    elif args.dim == "both":
        grid = args.grid or [-3.0, 3.0, 0.5]
        res = counterfactual.sweep_2d(pm, cm, ds, args.candidate, grid, args.soc_grid or grid, args.draws, seed)
    else:
        grid = args.grid or [-3.0, 3.0, 0.25]
        res = counterfactual.sweep_1d(pm, cm, ds, args.candidate, args.dim, *grid, draws=args.draws, seed=seed)
    summary = res.summary()
    summary.update(config_digest=digest(cfg), seed=seed)
    _write(args.out, lambda fh: res.to_csv(fh, header_lines("counterfactual", cfg)))
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if args.summary:
        _write(args.summary, lambda fh: fh.write(text))
    else:
        sys.stderr.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spatialvote", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory-curve", help="D's vote share as one coordinate of D's position sweeps a grid")
    _add_spatial_args(p)
    p.add_argument("--axis", type=int, help="coordinate of D to sweep (default 0, economic)")
    p.add_argument("--grid", type=_grid, help="lo:hi:step for the swept coordinate")
    p.add_argument("--summary", help="write the JSON summary here (default stderr)")
    p.set_defaults(func=cmd_theory_curve)

    p = sub.add_parser("optimize", help="grid-search D's share-maximising position")
    _add_spatial_args(p)
    p.add_argument("--free-axes", type=lambda s: [int(x) for x in s.split(",")], default=[0],
                   help="one or two coordinates of D that may move (default 0)")
    p.add_argument("--bounds", type=_bounds, help="lo:hi per free axis, comma separated")
    p.add_argument("--coarse-step", type=float, default=0.1)
    p.add_argument("--refine-rounds", type=int, default=2)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("export-electorate", help="sample an electorate and write it as CSV")
    p.add_argument("--preset", choices=sorted(presets.THEORY_PRESETS))
    p.add_argument("--dims", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_electorate)

    p = sub.add_parser("synth", help="generate a synthetic survey from known truth",
                       epilog=survey.CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", help="generator config file (key = value lines)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config entry")
    p.add_argument("--sizes", type=_floats, help="group sizes D,I,R")
    p.add_argument("--seed", type=int)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--print-default-config", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit perception regressions and vote-choice logits to a survey CSV")
    p.add_argument("survey")
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("counterfactual", help="simulate elections under shifted candidate positions")
    p.add_argument("--model", required=True)
    p.add_argument("--survey", required=True)
    p.add_argument("--candidate", choices=survey.CANDIDATES, required=True)
    p.add_argument("--dim", choices=("econ", "soc", "both"), default="econ")
    p.add_argument("--grid", type=_grid, help="lo:hi:step shift grid (economic grid when --dim both)")
    p.add_argument("--soc-grid", type=_grid, help="social grid for --dim both (default: --grid)")
    p.add_argument("--shift", type=_floats, help="single shift delta_econ,delta_soc instead of a grid")
    p.add_argument("--draws", type=int, default=counterfactual.DEFAULT_DRAWS)
    p.add_argument("--choice-model", help="'model' (default) or a preset: aoas2008-eq31 / eq31")
    p.add_argument("--seed", type=int)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    p.add_argument("--summary", help="write the JSON summary here (default stderr)")
    p.set_defaults(func=cmd_counterfactual)
    return ap


# flags whose values may start with "-" (negative numbers, grids)
_NUMERIC_FLAGS = {"--grid", "--soc-grid", "--r-pos", "--d-pos", "--bounds", "--shift", "--sigma", "--weights"}


def _glue_negative_values(argv):
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _NUMERIC_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        return args.func(args, sub)
    except (CLIError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
