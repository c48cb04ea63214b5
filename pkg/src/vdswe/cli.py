"""Command line entry point: ``vdswe run`` and ``vdswe export-config``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .reconstruction import PositivityError
from .simulation import config_from_ini, config_to_ini, preset, run


def _examples(text: str):
    return text if text == "lake" else int(text)


def _times(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vdswe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a preset or a config file")
    src = run_p.add_mutually_exclusive_group(required=True)
    src.add_argument("--example", type=_examples, choices=[1, 2, 3, 4, "lake"])
    src.add_argument("--config", type=Path)
    run_p.add_argument("--source-mode", choices=["wb", "nwb"])
    run_p.add_argument("--integrator", choices=["euler", "rk3"])
    run_p.add_argument("--max-level", type=int)
    run_p.add_argument("--t-final", type=float)
    run_p.add_argument("--max-steps", type=int)
    run_p.add_argument("--out", type=str, help="output directory for snapshots and manifest")
    run_p.add_argument("--snapshots", type=_times, help="comma separated output times")
    run_p.add_argument("--quiet", action="store_true", help="suppress per-step log lines")

    exp_p = sub.add_parser("export-config", help="write a preset as a config file")
    exp_p.add_argument("--example", type=_examples, choices=[1, 2, 3, 4, "lake"], required=True)
    exp_p.add_argument("--output", type=Path, help="file to write (default: stdout)")
    return parser


def _configure_logging(quiet: bool) -> None:
    log = logging.getLogger("vdswe")
    handler = logging.StreamHandler(sys.stdout)
    handler.setFormatter(logging.Formatter("%(message)s"))
    # replace rather than add, so repeated calls do not duplicate lines
    log.handlers = [handler]
    log.propagate = False
    log.setLevel(logging.WARNING if quiet else logging.INFO)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "export-config":
        text = config_to_ini(preset(args.example))
        if args.output is None:
            sys.stdout.write(text)
        else:
            args.output.write_text(text)
        return 0

    _configure_logging(args.quiet)
    try:
        cfg = preset(args.example) if args.example is not None \
            else config_from_ini(args.config.read_text())
        snaps = args.snapshots
        t_final = args.t_final
        if t_final is not None and snaps is None:
            snaps = tuple(s for s in cfg.snapshots if s <= t_final)
        cfg = cfg.with_overrides(source_mode=args.source_mode, integrator=args.integrator,
                                 max_level=args.max_level, t_final=t_final,
                                 max_steps=args.max_steps, out_dir=args.out, snapshots=snaps)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run(cfg)
    except PositivityError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return 3
    s = result.summary
    print(f"done steps={s['steps']} t={s['t']:.6g} leaves={s['min_leaves']}..{s['max_leaves']} "
          f"minh={s['min_h']:.6g} minrho={s['min_rho']:.6g} "
          f"volume_drift={s['volume_drift']:.3e} mass_drift={s['mass_drift']:.3e}"
          + ("" if s["max_symmetry_error"] is None else f" symmetry={s['max_symmetry_error']:.3e}"))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
