"""Command-line front end.

Subcommands: scenario, check, ls, reparam, simulate.  Exit codes: 0 on
success/pass, 1 on a failed check or verdict, 2 on I/O or configuration
errors.  All outputs are deterministic for fixed inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .geometry import EnergyParams
from .flow import SchemeConfig, run
from .linear import ls_verify
from .network import (
    ReparametrizationError,
    build_reparametrization,
    geometric_admissibility,
    parametric_admissibility,
)
from .scenarios import BUILTIN_SCENARIOS, build_scenario
from .snapshots import SnapshotError, load_snapshot, save_snapshot, save_svg, save_trace_csv


def _default_flavor(net, arg):
    if arg:
        return arg
    return "c0" if net.topology == "theta" else "c1"


def _ensure_out(out):
    os.makedirs(out, exist_ok=True)
    return out


def cmd_scenario(args) -> int:
    try:
        net = build_scenario(
            args.name, n=args.grid, mu=args.mu, amplitude=args.amplitude, seed=args.seed
        )
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    out = _ensure_out(args.out)
    path = os.path.join(out, f"{args.name}.json")
    save_snapshot(path, net, EnergyParams(args.mu))
    print(path)
    return 0


def cmd_check(args) -> int:
    net, params = load_snapshot(args.file)
    flavor = _default_flavor(net, args.flavor)
    geo = geometric_admissibility(net, params, flavor)
    par = parametric_admissibility(net, params, flavor)
    print(f"geometric admissibility ({flavor}):")
    print("\n".join(geo.lines()))
    print(f"parametric admissibility ({flavor}):")
    print("\n".join(par.lines()))
    ok = geo.passed and par.passed
    print("verdict:", "pass" if ok else "fail")
    return 0 if ok else 1


def cmd_ls(args) -> int:
    net, params = load_snapshot(args.file)
    flavor = _default_flavor(net, args.flavor)
    report = ls_verify(net, params, flavor)
    out = _ensure_out(args.out)
    path = os.path.join(out, "ls_report.json")
    with open(path, "w") as fh:
        json.dump(report.to_json(), fh, indent=1)
        fh.write("\n")
    print(f"min sigma_min/|M| = {report.min_sigma():.6e} "
          f"(threshold {report.threshold:.1e}) -> "
          f"{'pass' if report.verdict else 'fail'}")
    print(path)
    return 0 if report.verdict else 1


def cmd_reparam(args) -> int:
    net, params = load_snapshot(args.file)
    flavor = _default_flavor(net, args.flavor)
    try:
        new_net, rep = build_reparametrization(net, params, flavor)
    except ReparametrizationError as exc:
        print(f"reparametrization failed: {exc}", file=sys.stderr)
        return 1
    out = _ensure_out(args.out)
    stem = os.path.splitext(os.path.basename(args.file))[0]
    path = os.path.join(out, f"{stem}-reparam.json")
    save_snapshot(path, new_net, params)
    print(f"blending radius {rep.radius}, min slope {rep.min_slope():.4f}")
    print(path)
    return 0


def cmd_simulate(args) -> int:
    net, params = load_snapshot(args.file)
    flavor = _default_flavor(net, args.flavor)
    config = SchemeConfig(
        dt_init=args.dt,
        t_final=args.t_final,
        snapshot_every=args.svg_every if args.svg_every else 0,
    )
    trace = run(net, config, params, flavor)
    out = _ensure_out(args.out)
    save_trace_csv(os.path.join(out, "trace.csv"), trace)
    final_net = trace.snapshots[-1][1] if trace.snapshots else net
    if trace.snapshots:
        for idx, (t, snap) in enumerate(trace.snapshots):
            save_svg(os.path.join(out, f"frame_{idx:06d}.svg"), snap)
            save_snapshot(os.path.join(out, f"snapshot_{idx:06d}.json"), snap, params)
    save_snapshot(os.path.join(out, "final.json"), final_net, params)
    save_svg(os.path.join(out, "final.svg"), final_net)
    print(f"termination: {trace.termination} at t = {trace.times[-1]!r}, "
          f"energy {trace.energies[-1]!r}")
    return 0 if trace.termination in ("t_final", "regularity floor") else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elastinet",
                                description="elastic flow of planar triple-junction networks")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("scenario", help="generate a built-in initial network")
    sp.add_argument("name", choices=sorted(BUILTIN_SCENARIOS))
    sp.add_argument("--grid", type=int, default=128)
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--amplitude", type=float, default=0.05)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_scenario)

    for name, func in (("check", cmd_check), ("ls", cmd_ls), ("reparam", cmd_reparam)):
        sp = sub.add_parser(name)
        sp.add_argument("file")
        sp.add_argument("--flavor", choices=("c0", "c1"), default=None)
        if name in ("ls", "reparam"):
            sp.add_argument("--out", default=".")
        sp.set_defaults(func=func)

    sp = sub.add_parser("simulate", help="run the flow and emit trace/frames")
    sp.add_argument("file")
    sp.add_argument("--flavor", choices=("c0", "c1"), default=None)
    sp.add_argument("--t-final", type=float, default=0.1)
    sp.add_argument("--dt", type=float, default=1e-5)
    sp.add_argument("--svg-every", type=int, default=0)
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SnapshotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
