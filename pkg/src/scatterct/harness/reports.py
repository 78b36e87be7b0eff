"""CSV / JSON / SVG outputs of comparison runs and sweeps.

Files written by :func:`emit_reports`:

``rmse_table.csv``
    profile_id, onestep_rmse, twostep_rmse, winner
``convergence_{onestep,twostep}.csv``
    profile_id, iteration, data_fidelity, total_objective, step_length
``lineouts_{NN}.csv``
    radius, truth, onestep, twostep, direct, scatter, transmission
``summary.json``
    medians, win counts, failures, config echo, tool version
``*.svg``
    optional line plots of the convergence and lineout tables

Everything is a pure function of the result, so identical configurations
give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .. import __version__
from ..forward import NOISE_GENERATOR
from .experiment import METHODS, ExperimentResult, SweepResult
from .svg import line_plot

__all__ = ["emit_reports", "emit_sweep", "rerender", "summary_dict"]


def _num(v) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return repr(v)


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    _write(path, buf.getvalue())


def _read_csv(path: Path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc


def _experiment_echo(cfg) -> dict:
    d = cfg.to_dict()
    # execution settings do not change results
    d.pop("out_dir", None)
    d.pop("jobs", None)
    return d


def summary_dict(result: ExperimentResult) -> dict:
    return {
        "tool": "scatterct",
        "version": __version__,
        "noise_generator": NOISE_GENERATOR,
        "n_profiles": len(result.profiles),
        "median_rmse": {m: result.median(m) for m in METHODS},
        "wins": {m: result.wins(m) for m in METHODS},
        "failures": {str(p.profile_id): p.failures for p in result.profiles if p.failures},
        "config": _experiment_echo(result.config),
    }


def emit_reports(result: ExperimentResult, directory, svg: bool = True) -> None:
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc

    _csv(
        out / "rmse_table.csv",
        ["profile_id", "onestep_rmse", "twostep_rmse", "winner"],
        [
            [p.profile_id, _num(p.onestep_rmse), _num(p.twostep_rmse), p.winner]
            for p in result.profiles
        ],
    )
    for method in METHODS:
        rows = []
        for p in result.profiles:
            trace = getattr(p, f"{method}_trace")
            for it, fid, tot, step in trace.rows():
                rows.append([p.profile_id, it, _num(fid), _num(tot), _num(step)])
        _csv(
            out / f"convergence_{method}.csv",
            ["profile_id", "iteration", "data_fidelity", "total_objective", "step_length"],
            rows,
        )
    for p in result.profiles:
        cols = [p.truth, p.onestep, p.twostep, p.direct_lineout, p.scatter_lineout,
                p.transmission_lineout]
        _csv(
            out / f"lineouts_{p.profile_id:02d}.csv",
            ["radius", "truth", "onestep", "twostep", "direct", "scatter", "transmission"],
            [[r] + [_num(c[r]) for c in cols] for r in range(len(p.truth))],
        )
    _write(out / "summary.json", json.dumps(summary_dict(result), indent=2, sort_keys=True) + "\n")
    if svg:
        rerender(out)


def rerender(directory) -> list:
    """(Re)build SVG plots from the CSV files in ``directory``."""
    out = Path(directory)
    written = []
    for method in METHODS:
        path = out / f"convergence_{method}.csv"
        if not path.exists():
            continue
        by_profile = {}
        for row in _read_csv(path):
            xs, ys = by_profile.setdefault(int(row["profile_id"]), ([], []))
            xs.append(int(row["iteration"]))
            ys.append(float(row["data_fidelity"]))
        series = [(f"profile {k}", *v) for k, v in sorted(by_profile.items())]
        target = out / f"convergence_{method}.svg"
        _write(target, line_plot(series, title=f"{method} convergence", xlabel="iteration",
                                 ylabel="data fidelity", logy=True))
        written.append(target)
    for path in sorted(out.glob("lineouts_*.csv")):
        rows = _read_csv(path)
        radius = [float(r["radius"]) for r in rows]
        series = [(name, radius, [float(r[name]) for r in rows])
                  for name in ("truth", "onestep", "twostep")]
        target = path.with_suffix(".svg")
        _write(target, line_plot(series, title=f"{path.stem}: density", xlabel="radius (px)",
                                 ylabel="density"))
        written.append(target)
        series = [(name, radius, [float(r[name]) for r in rows])
                  for name in ("direct", "scatter", "transmission")]
        target = path.with_name(path.stem + "_signals.svg")
        _write(target, line_plot(series, title=f"{path.stem}: signals", xlabel="radius (px)",
                                 ylabel="transmission"))
        written.append(target)
    for path in sorted(out.glob("sweep_*_per_alpha.csv")):
        rows = _read_csv(path)
        method = path.stem[len("sweep_"):-len("_per_alpha")]
        xs = [float(r["alpha"]) for r in rows]
        ys = [float(r["median_rmse"]) for r in rows]
        target = out / f"sweep_{method}.svg"
        _write(target, line_plot([(method, xs, ys)], title=f"{method}: best median RMSE per TV weight",
                                 xlabel="TV weight", ylabel="median RMSE", logx=True))
        written.append(target)
    return written


def emit_sweep(results, directory, svg: bool = True) -> dict:
    """Write per-cell tables, per-alpha curves and the argmin summary."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for res in results:
        res: SweepResult
        _csv(
            out / f"sweep_{res.method}.csv",
            ["learning_rate", "alpha", "median_rmse"],
            [[_num(c.learning_rate), _num(c.alpha), _num(c.median_rmse)] for c in res.cells],
        )
        curve = res.best_per_alpha()
        _csv(
            out / f"sweep_{res.method}_per_alpha.csv",
            ["alpha", "best_learning_rate", "median_rmse"],
            [[_num(c.alpha), _num(c.learning_rate), _num(c.median_rmse)] for c in curve],
        )
        best = res.best
        summary[res.method] = {
            "argmin": {"learning_rate": best.learning_rate, "alpha": best.alpha,
                       "median_rmse": best.median_rmse},
            "per_alpha": [
                {"alpha": c.alpha, "learning_rate": c.learning_rate, "median_rmse": c.median_rmse}
                for c in curve
            ],
        }
    _write(out / "sweep_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if svg:
        rerender(out)
    return summary
