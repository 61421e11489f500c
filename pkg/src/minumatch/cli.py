"""Command-line interface: match, eval, synth, align.

Exit codes: 0 success, 2 usage or input error, 3 internal invariant
violation. Matcher parameters come from defaults, then an optional flat
`key = value` config file, then explicit flags (later wins).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluation, synth, template_io
from .errors import MinumatchError
from .matcher import run_matcher
from .model import MatchConfig
from .registration import objective, solve_alignment
from .synth import SynthParams, brute_force_align, generate_base, generate_impression
from .weights import build_pair_queue

_CONFIG_KEYS = (
    "t_d",
    "t_psi",
    "thresholds",
    "c1",
    "c2",
    "octant_count",
    "ill_posed_epsilon",
)

_DEFAULT_T1 = 24.0
_DEFAULT_TSTEP = 4.0
_DEFAULT_TMIN = 4.0


class CliInputError(Exception):
    pass


def load_config_file(path: str | Path) -> dict:
    """Parse a flat `key = value` config file; unknown keys are rejected."""
    values: dict = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliInputError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliInputError(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise CliInputError(f"config line {lineno}: unknown key {key!r}")
        try:
            if key == "thresholds":
                values[key] = tuple(
                    float(tok) for tok in value.replace(",", " ").split()
                )
            elif key == "octant_count":
                values[key] = int(value)
            else:
                values[key] = float(value)
        except ValueError:
            raise CliInputError(
                f"config line {lineno}: bad value for {key}: {value!r}"
            ) from None
    return values


def _threshold_schedule(t1: float, tstep: float, tmin: float) -> tuple[float, ...]:
    if t1 <= 0 or tstep <= 0 or tmin <= 0 or tmin > t1:
        raise CliInputError("require t1 >= tmin > 0 and tstep > 0")
    out = []
    t = t1
    while t >= tmin - 1e-9:
        out.append(round(t, 9))
        t -= tstep
    return tuple(out)


def make_config(args: argparse.Namespace) -> MatchConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))

    if args.td is not None:
        values["t_d"] = args.td
    if args.tpsi is not None:
        values["t_psi"] = args.tpsi
    if args.c1 is not None:
        values["c1"] = args.c1
    if args.c2 is not None:
        values["c2"] = args.c2
    if args.t1 is not None or args.tstep is not None or args.tmin is not None:
        values["thresholds"] = _threshold_schedule(
            args.t1 if args.t1 is not None else _DEFAULT_T1,
            args.tstep if args.tstep is not None else _DEFAULT_TSTEP,
            args.tmin if args.tmin is not None else _DEFAULT_TMIN,
        )
    try:
        return MatchConfig(**values)
    except ValueError as exc:
        raise CliInputError(str(exc)) from None


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--t1", type=float, help="largest displacement threshold")
    p.add_argument("--tstep", type=float, help="threshold decrement")
    p.add_argument("--tmin", type=float, help="smallest threshold kept")
    p.add_argument("--c1", type=float, help="positional residual scale (1/px^2)")
    p.add_argument("--c2", type=float, help="angular residual scale (1/deg^2)")
    p.add_argument("--td", type=float, help="octant distance tolerance (px)")
    p.add_argument("--tpsi", type=float, help="octant angle tolerance (deg)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minumatch",
        description="Minutia template matching, synthesis, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_match = sub.add_parser("match", help="compare two MNT templates")
    p_match.add_argument("query")
    p_match.add_argument("template")
    _add_config_flags(p_match)

    p_eval = sub.add_parser("eval", help="run the verification protocol on a dataset")
    p_eval.add_argument("dataset", help="directory of <subject>_<impression>.mnt files")
    p_eval.add_argument("--out", default=".", help="output directory")
    p_eval.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p_eval.add_argument(
        "--impostor",
        choices=("all", "first"),
        default="all",
        help="impostor pairing rule (default: all cross-subject pairs)",
    )
    p_eval.add_argument(
        "--timing",
        action="store_true",
        help="measure wall-clock per comparison (makes outputs nondeterministic)",
    )
    p_eval.add_argument(
        "--no-figures", action="store_true", help="skip PNG figure rendering"
    )
    p_eval.add_argument(
        "--verbose", action="store_true", help="print protocol details to stderr"
    )
    _add_config_flags(p_eval)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    p_synth.add_argument("--out", default=".", help="output directory")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--subjects", type=int, default=10)
    p_synth.add_argument("--impressions", type=int, default=4)
    p_synth.add_argument("--n-min", type=int, default=40)
    p_synth.add_argument("--n-max", type=int, default=60)
    p_synth.add_argument("--box", type=int, nargs=2, default=(300, 300),
                         metavar=("W", "H"))
    p_synth.add_argument("--spacing", type=float, default=12.0)
    p_synth.add_argument("--rot", type=float, default=15.0,
                         help="pose rotation half-range (deg)")
    p_synth.add_argument("--trans", type=float, default=25.0,
                         help="pose translation half-range (px)")
    p_synth.add_argument("--drop", type=float, default=0.2)
    p_synth.add_argument("--spurious", type=float, default=0.1)
    p_synth.add_argument("--jitter-pos", type=float, default=2.0)
    p_synth.add_argument("--jitter-dir", type=float, default=5.0)

    p_align = sub.add_parser(
        "align", help="solve the initial-weight alignment of two templates"
    )
    p_align.add_argument("query")
    p_align.add_argument("template")
    p_align.add_argument(
        "--oracle",
        action="store_true",
        help="also run the rotation grid-search oracle and report the gap",
    )
    p_align.add_argument("--grid", type=float, default=synth.DEFAULT_ORACLE_STEP,
                         help="oracle grid step (deg)")
    _add_config_flags(p_align)

    return parser


def _load(path: str):
    try:
        return template_io.load_template(path)
    except OSError as exc:
        raise CliInputError(f"{path}: {exc}") from None
    except MinumatchError as exc:
        raise CliInputError(f"{path}: {exc}") from None


def cmd_match(args: argparse.Namespace) -> int:
    cfg = make_config(args)
    query = _load(args.query)
    template = _load(args.template)
    result = run_matcher(query, template, cfg)
    print(
        json.dumps(
            {
                "score": result.score,
                "converged": result.converged,
                "theta": result.final_alignment.theta,
                "a": result.final_alignment.a,
                "b": result.final_alignment.b,
                "matched_count": len(result.matched_pairs),
                "iterations": len(result.iterations),
            }
        )
    )
    return 0


def cmd_align(args: argparse.Namespace) -> int:
    cfg = make_config(args)
    query = _load(args.query)
    template = _load(args.template)
    try:
        queue = build_pair_queue(query, template, cfg)
        params, diag = solve_alignment(queue, query, template, cfg)
        payload = {
            "theta": params.theta,
            "a": params.a,
            "b": params.b,
            "ill_posed": diag.ill_posed,
            "objective": objective(queue, query, template, params),
        }
        if args.oracle:
            oracle = brute_force_align(queue, query, template, args.grid)
            payload["oracle"] = {
                "theta": oracle.theta,
                "a": oracle.a,
                "b": oracle.b,
                "objective": objective(queue, query, template, oracle),
                "grid_step": args.grid,
            }
    except MinumatchError as exc:
        raise CliInputError(str(exc)) from None
    print(json.dumps(payload))
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.seed < 0:
        raise CliInputError("--seed must be non-negative")
    if args.subjects < 1 or args.impressions < 1:
        raise CliInputError("--subjects and --impressions must be >= 1")
    try:
        params = SynthParams(
            n_minutiae=(args.n_min, args.n_max),
            width=args.box[0],
            height=args.box[1],
            min_spacing=args.spacing,
            rotation_range=(-args.rot, args.rot),
            translation_range=(-args.trans, args.trans),
            position_jitter=args.jitter_pos,
            direction_jitter=args.jitter_dir,
            drop_fraction=args.drop,
            spurious_fraction=args.spurious,
            seed=args.seed,
        )
    except ValueError as exc:
        raise CliInputError(str(exc)) from None

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for subject in range(1, args.subjects + 1):
        base = generate_base(
            params,
            seed=np.random.SeedSequence([args.seed, subject, 0]),
            template_id=f"{subject}_base",
        )
        for imp in range(1, args.impressions + 1):
            stem = f"{subject}_{imp}"
            template, gt = generate_impression(
                base,
                params,
                seed=np.random.SeedSequence([args.seed, subject, imp]),
                template_id=stem,
            )
            template_io.save_template(template, out_dir / f"{stem}.mnt")
            (out_dir / f"{stem}.gt").write_text(
                synth.write_ground_truth(gt), encoding="utf-8", newline="\n"
            )
            count += 1
    print(f"wrote {count} templates ({args.subjects} subjects x "
          f"{args.impressions} impressions) to {out_dir}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = make_config(args)
    if args.jobs < 1:
        raise CliInputError("--jobs must be >= 1")
    try:
        manifest = template_io.scan_dataset(args.dataset)
    except OSError as exc:
        raise CliInputError(str(exc)) from None
    except MinumatchError as exc:
        raise CliInputError(str(exc)) from None
    if len(manifest) == 0:
        raise CliInputError(f"no templates found in {args.dataset}")
    if args.verbose:
        genuine, impostors = evaluation.protocol_pairs(manifest, args.impostor)
        print(
            f"{len(manifest)} templates; {len(genuine)} genuine and "
            f"{len(impostors)} impostor comparisons ({args.impostor} rule), "
            f"jobs={args.jobs}",
            file=sys.stderr,
        )

    scores = evaluation.run_protocol(
        manifest,
        cfg,
        impostor=args.impostor,
        jobs=args.jobs,
        measure_timing=args.timing,
    )
    for failure in scores.failures:
        print(f"warning: {failure}", file=sys.stderr)
    try:
        report = evaluation.compute_eer(scores)
    except MinumatchError as exc:
        raise CliInputError(str(exc)) from None

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    evaluation.write_scores_csv(scores, out_dir / "scores.csv")
    evaluation.write_report_json(report, out_dir / "report.json")
    if not args.no_figures:
        from . import figures  # matplotlib import deferred off the match path

        figures.render_all(report, scores, out_dir)

    print(
        f"EER {report.eer:.3f}% over {report.genuine_count} genuine / "
        f"{report.impostor_count} impostor comparisons"
        + (f"; mean time {report.mean_time_ms:.2f} ms" if args.timing else "")
    )
    print(f"outputs in {out_dir}")
    return 0


_COMMANDS = {
    "match": cmd_match,
    "eval": cmd_eval,
    "synth": cmd_synth,
    "align": cmd_align,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MinumatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal invariant violation
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
