"""Command-line interface.

Subcommands: simulate a config, reproduce a pinned bundle, dump an
eigenvalue spectrum, dump constant-energy curves, or benchmark the kernel
lanes.  Failures exit nonzero with a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import run_benchmark
from .config import load_config
from .oracle import GaussianPacket, OscillatorSpec, constant_energy_curve, expected_energy_gaussian
from .reproduce import BUNDLE_IDS, reproduce
from .runner import build_wall_context, output_root, run, write_csv


def _add_common(parser):
    parser.add_argument("-o", "--outdir", default=None, help="output directory")
    parser.add_argument("--workers", type=int, default=1, help="parallel ensemble workers")
    parser.add_argument("--cache-dir", default=None, help="eigensystem cache directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softimpact",
        description="Collapse-postulate simulations for a quantum soft-impact oscillator",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a TOML-configured scenario")
    p.add_argument("config", help="path to the TOML run configuration")
    _add_common(p)

    p = sub.add_parser("reproduce", help="regenerate a published table or figure bundle")
    p.add_argument("bundle_id", choices=BUNDLE_IDS)
    _add_common(p)
    p.add_argument("--quick", action="store_true", help="smoke-test sizes only")

    p = sub.add_parser("eigen", help="dump the eigenvalue spectrum for a config")
    p.add_argument("config")
    _add_common(p)

    p = sub.add_parser("curves", help="dump constant-energy (a, sigma) curves")
    p.add_argument("config", help="two_particle config supplying the oscillators")
    _add_common(p)
    p.add_argument(
        "--epsilon",
        type=float,
        action="append",
        default=None,
        help="energy level(s); default: each particle's initial packet energy",
    )

    p = sub.add_parser("bench", help="compare the compiled and numpy kernel lanes")
    p.add_argument("--steps", type=int, default=2000)
    return parser


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    outdir = args.outdir or "run"
    cache = Path(args.cache_dir) if args.cache_dir else None
    manifest, _ = run(cfg, outdir, workers=args.workers, cache_dir=cache)
    print(f"wrote {len(manifest['outputs'])} files to {output_root() / outdir}")
    return 0


def _cmd_reproduce(args) -> int:
    outdir = args.outdir or args.bundle_id
    summary = reproduce(args.bundle_id, outdir, workers=args.workers, quick=args.quick)
    for entry in summary["entries"]:
        line = f"{entry['name']}: {entry['computed']:.6g}"
        if "reference" in entry:
            line += f" (reference {entry['reference']:.6g})"
        print(line)
    return 0


def _cmd_eigen(args) -> int:
    cfg = load_config(args.config)
    if cfg.scenario == "two_particle":
        raise ValueError("eigen expects a wall scenario config")
    cache = Path(args.cache_dir) if args.cache_dir else None
    ctx = build_wall_context(cfg, cache)
    outdir = output_root() / Path(args.outdir or "eigen")
    outdir.mkdir(parents=True, exist_ok=True)
    es = ctx.eigensystem
    write_csv(
        outdir / "eigenvalues.csv",
        ("n", "energy"),
        (np.arange(es.n_kept), es.energies),
    )
    print(f"wrote {outdir / 'eigenvalues.csv'}")
    return 0


def _cmd_curves(args) -> int:
    cfg = load_config(args.config)
    if cfg.scenario != "two_particle":
        raise ValueError("curves expects a two_particle config")
    tp = cfg["two_particle"]
    oscillators = {
        "particle1": (
            OscillatorSpec(tp["m1"], tp["k1"], tp["c1"]),
            GaussianPacket(tp["a0_1"], tp["sigma0"]),
        ),
        "particle2": (
            OscillatorSpec(tp["m2"], tp["k2"], tp["c2"]),
            GaussianPacket(tp["a0_2"], tp["sigma0"]),
        ),
    }
    outdir = output_root() / Path(args.outdir or "curves")
    outdir.mkdir(parents=True, exist_ok=True)
    cols = {"particle": [], "epsilon": [], "a": [], "sigma_small": [], "sigma_large": []}
    for name, (osc, packet) in oscillators.items():
        epsilons = args.epsilon or [expected_energy_gaussian(packet, osc)]
        for eps in epsilons:
            curve = constant_energy_curve(eps, osc)
            cols["particle"].extend([name] * len(curve))
            cols["epsilon"].extend([eps] * len(curve))
            cols["a"].extend(curve[:, 0])
            cols["sigma_small"].extend(curve[:, 1])
            cols["sigma_large"].extend(curve[:, 2])
    write_csv(
        outdir / "curves.csv",
        ("particle", "epsilon", "a", "sigma_small", "sigma_large"),
        (cols["particle"], cols["epsilon"], cols["a"], cols["sigma_small"], cols["sigma_large"]),
    )
    print(f"wrote {outdir / 'curves.csv'}")
    return 0


def _cmd_bench(args) -> int:
    run_benchmark(n_steps=args.steps)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "reproduce": _cmd_reproduce,
    "eigen": _cmd_eigen,
    "curves": _cmd_curves,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as err:  # surface failures as machine-readable JSON
        print(json.dumps({"error": type(err).__name__, "message": str(err)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
