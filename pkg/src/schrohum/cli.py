"""Command-line entry point.

    schrohum run <config> [--out DIR]
    schrohum preset <test1|test2> [--out DIR]
    schrohum probe <name> <config> [--out DIR]

Shared options: ``--threads N``, ``--seed S``, ``--backend spectral|mc_fd|both``,
``--no-figures``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import BACKENDS, PROBE_NAMES, PRESETS, ConfigError, ExperimentConfig, load_config, preset

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="artifact directory (default: out/<config name>)")
    common.add_argument("--threads", type=int, help="worker threads for ensemble sweeps and scans")
    common.add_argument("--seed", type=int, help="override the ensemble seed")
    common.add_argument("--backend", choices=BACKENDS, help="override the averaging backend")
    common.add_argument("--no-figures", action="store_true", help="write CSVs and plot.py but no PNGs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="schrohum", description="Averaged null control of random Schrodinger equations.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run an experiment from a config file")
    r.add_argument("config", type=Path)
    s = sub.add_parser("preset", parents=[common], help="run a built-in experiment")
    s.add_argument("name", choices=sorted(PRESETS))
    q = sub.add_parser("probe", parents=[common], help="run one theory probe")
    q.add_argument("name", choices=PROBE_NAMES)
    q.add_argument("config", type=Path)
    return p


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.threads is not None:
        changes["threads"] = args.threads
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.backend is not None:
        changes["backend"] = args.backend
    if args.no_figures:
        changes["figures"] = False
    return cfg.replace(**changes) if changes else cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    # heavy imports only once the arguments are known to be valid
    from .experiment import run_experiment, run_probe

    try:
        cfg = preset(args.name) if args.command == "preset" else load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        out = args.out or Path("out") / cfg.name
        if args.command == "probe":
            out.mkdir(parents=True, exist_ok=True)
            rep = run_probe(cfg, args.name)
            rep.to_csv(out / f"probe_{args.name}.csv")
            print(rep.summary())
            return 0
        outcome = run_experiment(cfg, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for kind, res in outcome.results.items():
        s = res.summary()
        print(
            f"{kind}: iterations={s['iterations']} converged={s['converged']} "
            f"terminal_error={s['terminal_error']:.3e} max|y(T)|={s['terminal_max_modulus']:.3e} "
            f"control_norm={s['control_norm']:.4g}"
        )
    for name, rep in outcome.probes.items():
        print(f"probe {name}: {rep.verdict}")
    print(f"artifacts in {outcome.out_dir}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
