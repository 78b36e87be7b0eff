"""Command-line entry point: ``scatterct <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .abel import abel_matrix
from .harness.config import ExperimentConfig, load_config
from .harness.container import read_array, write_array
from .harness.experiment import METHODS, ONESTEP, grid_search, rmse, run_comparison, simulate_profile
from .harness.reports import emit_reports, emit_sweep, rerender
from .recon import onestep_reconstruct, twostep_reconstruct

log = logging.getLogger("scatterct")


DEFAULT_LR_GRID = (1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0)
DEFAULT_ALPHA_GRID = (1e-4, 3e-4, 7e-4, 1e-3, 3e-3, 1e-2)


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="experiment config JSON")
    p.add_argument("--seed", type=int, help="phantom base seed (noise seeds follow it)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--jobs", type=int, help="parallel profile pipelines")
    p.add_argument("--no-svg", action="store_true", help="skip SVG plots")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="scatterct",
        description="One-step vs two-step scatter correction and density reconstruction.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="write phantoms and transmissions")

    rec = sub.add_parser("reconstruct", parents=[common], help="reconstruct one transmission")
    rec.add_argument("--method", choices=METHODS, default=ONESTEP)
    src = rec.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path, help="transmission array file")
    src.add_argument("--profile", type=int, help="simulate suite profile (1-based) instead")
    rec.add_argument("--truth", type=Path, help="ground-truth profile array, for RMSE")

    sub.add_parser("compare", parents=[common], help="full one-step vs two-step comparison")

    sw = sub.add_parser("sweep", parents=[common], help="learning-rate x TV-weight grid search")
    sw.add_argument("--method", choices=METHODS + ("both",), default="both")
    sw.add_argument("--lr-grid", type=_floats, default=list(DEFAULT_LR_GRID))
    sw.add_argument("--alpha-grid", type=_floats, default=list(DEFAULT_ALPHA_GRID))

    sub.add_parser("report", parents=[common], help="re-emit plots from saved results")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out is not None:
        cfg = replace(cfg, out_dir=str(args.out))
    if args.jobs is not None:
        cfg = replace(cfg, jobs=args.jobs)
    return cfg


def cmd_generate(cfg: ExperimentConfig, args) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(cfg.n_profiles):
        data = simulate_profile(cfg, i)
        meta = {"profile_id": i + 1, "phantom_seed": cfg.phantom_seed(i),
                "noise_seed": cfg.noise_seed(i)}
        stem = out / f"profile_{i + 1:02d}"
        write_array(f"{stem}_truth.arr", data.ground_truth, meta)
        write_array(f"{stem}_transmission.arr", data.transmission, meta)
        write_array(f"{stem}_direct.arr", data.direct, meta)
        write_array(f"{stem}_scatter.arr", data.scatter, meta)
    (out / "dataset.json").write_text(cfg.to_json() + "\n")
    print(f"wrote {cfg.n_profiles} profiles to {out}")
    return 0


def cmd_reconstruct(cfg: ExperimentConfig, args) -> int:
    if args.input is not None:
        t = read_array(args.input)
        truth = read_array(args.truth) if args.truth else None
        name = args.input.stem
    else:
        if not 1 <= args.profile <= cfg.n_profiles:
            raise ValueError(f"--profile must be in 1..{cfg.n_profiles}")
        data = simulate_profile(cfg, args.profile - 1)
        t, truth = data.transmission, data.ground_truth
        name = f"profile_{args.profile:02d}"
    n = (t.shape[0] + 1) // 2
    op = abel_matrix(n)
    kernel = cfg.make_kernel()
    if args.method == ONESTEP:
        rho, trace = onestep_reconstruct(t, kernel, op, cfg.onestep)
    else:
        rho, trace = twostep_reconstruct(t, kernel, op, cfg.twostep_recon, cfg.twostep_descatter)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_array(out / f"{name}_{args.method}.arr", rho, {"method": args.method})
    with open(out / f"{name}_{args.method}_trace.csv", "w", encoding="utf-8") as fh:
        fh.write("iteration,data_fidelity,total_objective,step_length\n")
        for row in trace.rows():
            fh.write(",".join(repr(float(v)) if k else str(v) for k, v in enumerate(row)) + "\n")
    msg = f"{args.method}: {trace.iteration[-1]} iterations, termination {trace.reason.value}"
    if truth is not None:
        msg += f", RMSE {rmse(rho, truth):.4f}"
    print(msg)
    return 0


def cmd_compare(cfg: ExperimentConfig, args) -> int:
    start = time.perf_counter()
    result = run_comparison(cfg)
    emit_reports(result, cfg.out_dir, svg=not args.no_svg)
    print(f"{'profile':>7} {'one-step':>10} {'two-step':>10}  winner")
    for p in result.profiles:
        print(f"{p.profile_id:>7} {p.onestep_rmse:>10.3f} {p.twostep_rmse:>10.3f}  {p.winner}")
    print(
        f"median RMSE: one-step {result.median('onestep'):.3f}, "
        f"two-step {result.median('twostep'):.3f}; "
        f"one-step wins {result.wins('onestep')}/{len(result.profiles)}"
    )
    log.info("compare finished in %.1f s", time.perf_counter() - start)
    return 0


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    methods = METHODS if args.method == "both" else (args.method,)
    results = [grid_search(cfg, args.lr_grid, args.alpha_grid, m) for m in methods]
    summary = emit_sweep(results, cfg.out_dir, svg=not args.no_svg)
    for m in methods:
        best = summary[m]["argmin"]
        print(f"{m}: best lr={best['learning_rate']:g} alpha={best['alpha']:g} "
              f"median RMSE={best['median_rmse']:.4f}")
    return 0


def cmd_report(cfg: ExperimentConfig, args) -> int:
    out = Path(cfg.out_dir)
    if not out.is_dir():
        raise FileNotFoundError(f"no results directory {out}")
    written = rerender(out)
    print(f"wrote {len(written)} plots to {out}")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "reconstruct": cmd_reconstruct,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg, args)
    except (OSError, ValueError) as exc:
        print(f"scatterct {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
