"""``funkmean`` command-line interface.

Subcommands::

    funkmean test      curves.csv --basis fourier --p 3 [--bootstrap B] --out run.json
    funkmean diagnose  curves.csv --bases fourier,haar1 (--pmax P | --reorder N) [--split R] --out stem
    funkmean simulate  (--preset NAME | --config cfg.json) [--scale R,B] --out dir

Results go to files, the verdict or summary to stdout, and errors to stderr
with a nonzero exit status.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .basis import BasisSpec
from .bootstrap import BootstrapConfig, bootstrap_test
from .csvio import read_curves
from .diagnostics import (
    SpikeRule,
    emit_diagnostic_artifacts,
    multi_basis_diagnostic,
    reorder_diagnostic,
    split_dataset,
)
from .errors import FunkmeanError, InvalidInput
from .flrt import t_flrt
from .projection import rescale_dataset, project_dataset
from .simulate import (
    ExperimentConfig,
    preset,
    run_power_experiment,
    run_size_experiment,
    simulate_dataset,
)

BASIS_CHOICES = ("fourier", "haar", "haar1", "spline")
DEFAULT_BASIS = "fourier"
DEFAULT_P = 3
JUMP_FACTOR = 10.0
FIGURE_SHIFT = 0.4  # mean shift used when a figure preset draws its dataset
FIGURE_PMAX = 12  # finer Haar levels make smooth-process covariances singular


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _scale(text: str) -> tuple:
    try:
        R, B = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected R,B, e.g. 200,200") from None
    if R < 1 or B < 1:
        raise argparse.ArgumentTypeError("R and B must be positive")
    return R, B


def _bases(text: str) -> list:
    names = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in names if s not in BASIS_CHOICES]
    if not names or bad:
        raise argparse.ArgumentTypeError(f"bases must be among {', '.join(BASIS_CHOICES)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="funkmean", description="k-sample mean tests for functional data")
    parser.add_argument("--version", action="version", version=f"funkmean {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run the covariance-adapted k-sample test")
    t.add_argument("input", help="curve table (wide or long CSV)")
    t.add_argument("--basis", choices=BASIS_CHOICES, default=DEFAULT_BASIS)
    t.add_argument("--p", type=_positive, default=DEFAULT_P, help="number of basis scores")
    t.add_argument("--bootstrap", type=_positive, metavar="B", help="bootstrap replicates")
    t.add_argument("--seed", type=_seed, default=0)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--out", required=True, help="RunRecord JSON path")

    d = sub.add_parser("diagnose", help="noncentrality diagnostics across p or per basis function")
    d.add_argument("input")
    d.add_argument("--bases", type=_bases, default=["fourier", "haar1"])
    mode = d.add_mutually_exclusive_group()
    mode.add_argument("--pmax", type=_positive)
    mode.add_argument("--reorder", type=_positive, metavar="N")
    d.add_argument(
        "--split", type=float, nargs="?", const=0.5, metavar="RATIO",
        help="fraction of each group used for selection (default 0.5 when given bare)",
    )
    d.add_argument("--bootstrap", type=_positive, metavar="B")
    d.add_argument("--seed", type=_seed, default=0)
    d.add_argument("--alpha", type=float, default=0.05)
    d.add_argument("--out", required=True, help="output stem for CSV/SVG/JSON")

    s = sub.add_parser("simulate", help="run a Monte-Carlo experiment")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="table1, table2, table3, fig1 or fig2")
    src.add_argument("--config", help="ExperimentConfig JSON file")
    s.add_argument("--scale", type=_scale, metavar="R,B")
    s.add_argument("--seed", type=_seed)
    s.add_argument("--workers", type=int, help="worker processes (0 = auto)")
    s.add_argument("--out", required=True, help="output directory")
    return parser


# ---------------------------------------------------------------------------


def _load(path: str):
    table = read_curves(path)
    data = table.data
    times = [c.times for g in data.groups for c in g]
    rescaled = min(t[0] for t in times) < 0.0 or max(t[-1] for t in times) > 1.0
    if rescaled:
        data = rescale_dataset(data)
    return table, data, rescaled


def _write_record(path, record: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=2, default=_jsonable) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _record(command: str, config: dict, seed, timings: dict, result: dict, **extra) -> dict:
    return dict(
        command=command,
        version=__version__,
        config=config,
        seed=seed,
        timings=timings,
        result=result,
        **extra,
    )


def _run_test(scores, boot_B, seed, alpha):
    out = {"test": t_flrt(scores).to_dict()}
    if boot_B:
        boot = bootstrap_test(scores, BootstrapConfig(B=boot_B, seed=seed, alpha=alpha))
        out["bootstrap"] = boot.to_dict()
        pval, method = boot.p_boot, "bootstrap"
    else:
        pval, method = out["test"]["p_value"], out["test"]["p_value_method"]
    return out, pval, method


def cmd_test(args) -> int:
    if not 0 < args.alpha < 1:
        raise InvalidInput("--alpha must lie in (0, 1)")
    t0 = time.perf_counter()
    table, data, rescaled = _load(args.input)
    t1 = time.perf_counter()
    spec = BasisSpec.from_label(args.basis, args.p)
    scores = project_dataset(data, spec)
    result, pval, method = _run_test(scores, args.bootstrap, args.seed, args.alpha)
    t2 = time.perf_counter()
    config = dict(
        input=str(args.input),
        layout=table.layout,
        basis=args.basis,
        p=args.p,
        bootstrap=args.bootstrap,
        alpha=args.alpha,
        rescaled_domain=rescaled,
    )
    _write_record(
        args.out,
        _record("test", config, args.seed, {"read": t1 - t0, "compute": t2 - t1}, result, groups=table.group_index),
    )
    verdict = "reject H0" if pval < args.alpha else "fail to reject H0"
    T = result["test"]["t_flrt"]
    print(f"basis={args.basis} p={args.p} T={T:.6g} p-value={pval:.4g} ({method}): {verdict} at alpha={args.alpha}")
    return 0


def _select_p(values: np.ndarray, sizes) -> int:
    """First p where the curve jumps tenfold above both its previous value
    and the null growth per added score (sum of 1/n_j); else the largest ratio."""
    null_step = float(np.sum(1.0 / np.asarray(sizes, dtype=float)))
    prev = np.maximum(np.concatenate([[0.0], values[:-1]]), null_step)
    ratio = values / prev
    hits = np.flatnonzero((ratio >= JUMP_FACTOR) & (values >= JUMP_FACTOR * null_step))
    return int(hits[0] if hits.size else np.argmax(ratio)) + 1


def _diagnose(data, bases, args, out_stem):
    """Run the requested procedure; returns (artifacts, summary lines, selections)."""
    specs = [BasisSpec.from_label(b, 1) for b in bases]
    selections = {}
    lines = []
    if args.reorder:
        rule = SpikeRule()
        profiles = [reorder_diagnostic(data, s, args.reorder, rule) for s in specs]
        paths = emit_diagnostic_artifacts(profiles, out_stem)
        for prof in profiles:
            chosen = prof.spikes or [prof.argmax]
            selections[prof.basis_label] = {"columns": chosen}
            lines.append(f"{prof.basis_label}: spikes at {prof.spikes} (max at l={prof.argmax})")
        payload = {prof.basis_label: {"values": prof.values, "spikes": prof.spikes} for prof in profiles}
    else:
        curves = multi_basis_diagnostic(data, specs, args.pmax)
        paths = emit_diagnostic_artifacts(curves, out_stem)
        for cur in curves:
            p_sel = _select_p(cur.values, data.sizes)
            selections[cur.basis_label] = {"p": p_sel}
            lines.append(f"{cur.basis_label}: jump at p={p_sel}, value {cur.at(p_sel):.4g}")
        payload = {cur.basis_label: {"values": cur.values} for cur in curves}
    return paths, lines, selections, payload


def cmd_diagnose(args) -> int:
    if not 0 < args.alpha < 1:
        raise InvalidInput("--alpha must lie in (0, 1)")
    t0 = time.perf_counter()
    table, data, rescaled = _load(args.input)
    stem = Path(args.out)
    if stem.suffix in (".csv", ".svg", ".json"):
        stem = stem.with_suffix("")
    train = data
    if args.split is not None:
        train, test = split_dataset(data, args.split, args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        paths, lines, selections, payload = _diagnose(train, args.bases, args, stem)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    result = {"diagnostic": payload, "artifacts": {"csv": paths[0], "svg": paths[1]}}
    for line in lines:
        print(line)
    if args.split is None and args.reorder:
        print(
            "caution: testing on functions picked from this profile reuses the same data "
            "and can inflate the size; rerun with --split to select and test on disjoint halves"
        )
    if args.split is not None:
        print(
            f"selection used the {args.split:g} training split only; "
            "held-out p-values below are free of the selection step"
        )
        held_out = {}
        for b in args.bases:
            sel = selections[BasisSpec.from_label(b, 1).label]
            if "p" in sel:
                scores = project_dataset(test, BasisSpec.from_label(b, sel["p"]))
                what = f"p={sel['p']}"
            else:
                cols = sel["columns"]
                scores = project_dataset(test, BasisSpec.from_label(b, max(cols))).columns([c - 1 for c in cols])
                what = f"functions {cols}"
            res, pval, method = _run_test(scores, args.bootstrap, args.seed, args.alpha)
            held_out[b] = dict(selection=sel, p_value=pval, method=method, **res)
            verdict = "reject H0" if pval < args.alpha else "fail to reject H0"
            print(f"held-out {b} ({what}): p-value={pval:.4g} ({method}): {verdict} at alpha={args.alpha}")
        result["held_out"] = held_out
    config = dict(
        input=str(args.input),
        layout=table.layout,
        bases=args.bases,
        pmax=args.pmax,
        reorder=args.reorder,
        split=args.split,
        bootstrap=args.bootstrap,
        alpha=args.alpha,
        rescaled_domain=rescaled,
    )
    timings = {"total": time.perf_counter() - t0}
    _write_record(
        stem.with_suffix(".json"),
        _record("diagnose", config, args.seed, timings, result, groups=table.group_index),
    )
    return 0


def _figure(name: str, cfg: ExperimentConfig, out: Path) -> tuple:
    """Diagnostic figures drawn from one simulated dataset."""
    specs = [BasisSpec.from_label(b, 1) for b in cfg.bases]
    data = simulate_dataset(cfg, c=FIGURE_SHIFT)
    if name == "fig1":
        curves = multi_basis_diagnostic(data, specs, FIGURE_PMAX)
        paths = emit_diagnostic_artifacts(curves, out / name, title="noncentrality vs p")
        return paths, {c.basis_label: {"values": c.values} for c in curves}
    result, paths = {}, []
    for c, tag in ((FIGURE_SHIFT, "shift"), (0.0, "equal")):
        data = simulate_dataset(cfg, c=c)
        profiles = [reorder_diagnostic(data, s, 100) for s in specs]
        paths += emit_diagnostic_artifacts(profiles, out / f"{name}_{tag}", title=f"single-function noncentrality, c={c:g}")
        result[tag] = {p.basis_label: {"values": p.values, "spikes": p.spikes} for p in profiles}
    return tuple(paths), result


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    cfg = preset(args.preset) if args.preset else ExperimentConfig.from_json(args.config)
    name = args.preset or cfg.name
    if args.scale:
        cfg = cfg.scaled(*args.scale)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if name in ("fig1", "fig2"):
        paths, result = _figure(name, cfg, out)
        print(f"{name}: wrote {', '.join(str(p) for p in paths)}")
        result = {"diagnostic": result, "artifacts": paths}
    else:
        runner = run_size_experiment if cfg.nu_values is not None else run_power_experiment
        table = runner(cfg, workers=args.workers)
        csv_path = table.to_csv(out / f"{name}.csv")
        svg_path = table.to_svg(out / f"{name}.svg", title=name)
        for r in table.rows:
            print(f"{table.kind} {r['nu_or_c']:.4g} {r['basis']} p={r['p']}: {r['reject_rate']:.4f}")
        result = {"rows": table.rows, "artifacts": [csv_path, svg_path]}
    record = _record("simulate", cfg.to_dict(), cfg.seed, {"total": time.perf_counter() - t0}, result, preset=args.preset)
    _write_record(out / f"{name}.json", record)
    return 0


COMMANDS = {"test": cmd_test, "diagnose": cmd_diagnose, "simulate": cmd_simulate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except FunkmeanError as exc:
        print(f"funkmean: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"funkmean: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
