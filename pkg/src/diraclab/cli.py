"""Command-line interface.

Subcommands:
    run               execute a config (or a named preset) end to end
    preset            print a fully populated preset config as JSON
    check-potential   assumption checkers for the configured potential
    check-identities  Morawetz and Hardy verification suites
    scattering        run (or reuse) a trajectory and report Duhamel tails
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import (PRESET_NAMES, config_from_dict, config_to_dict,
                     build_potential, build_weight, preset)
from .potentials import check_A2, check_angular_assumptions, check_condition_V


def _load_configs(args) -> list:
    """One config, or a batch when the JSON document is a list of configs."""
    if args.preset:
        cfgs = [preset(args.preset)]
    elif args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
        cfgs = [config_from_dict(d) for d in (doc if isinstance(doc, list) else [doc])]
    else:
        raise SystemExit("either --config or --preset is required")
    for cfg in cfgs:
        if args.seed is not None:
            cfg.seed = args.seed
        if getattr(args, "override_wall_guard", False):
            cfg.override_wall_guard = True
    return cfgs


def _load_config(args) -> "SimulationConfig":
    cfgs = _load_configs(args)
    if len(cfgs) != 1:
        raise SystemExit("this subcommand takes a single config, not a batch")
    return cfgs[0]


def _add_common(p):
    p.add_argument("--config", help="path to a JSON config file")
    p.add_argument("--preset", choices=PRESET_NAMES, help="named preset")
    p.add_argument("--output", "-o", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=None,
                   help="BLAS thread cap (best effort)")
    p.add_argument("--override-wall-guard", action="store_true",
                   help="allow runs longer than the reflection-free budget")


def _apply_threads(n):
    if n is None:
        return
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(n)
    except Exception:
        os.environ.setdefault("OMP_NUM_THREADS", str(n))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="diraclab",
                                     description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a simulation config")
    _add_common(p_run)
    p_run.add_argument("--svg", action="store_true", help="emit SVG plots")
    p_run.add_argument("--no-resume", action="store_true",
                       help="ignore existing snapshots in the output directory")

    p_preset = sub.add_parser("preset", help="print a preset config")
    p_preset.add_argument("name", choices=PRESET_NAMES)

    p_chk = sub.add_parser("check-potential", help="run assumption checkers")
    _add_common(p_chk)
    p_chk.add_argument("--sigma", type=float, default=None,
                       help="smallness threshold for pass/fail columns")

    p_id = sub.add_parser("check-identities", help="Morawetz and Hardy suites")
    _add_common(p_id)

    p_sc = sub.add_parser("scattering", help="run and report Duhamel tails")
    _add_common(p_sc)

    args = parser.parse_args(argv)
    _apply_threads(getattr(args, "threads", None))

    if args.command == "preset":
        print(json.dumps(config_to_dict(preset(args.name)), indent=2))
        return 0

    from .runner import identity_checks_suite, run  # heavy import deferred

    if args.command == "run":
        cfgs = _load_configs(args)
        ok = True
        for i, cfg in enumerate(cfgs):
            outdir = args.output if len(cfgs) == 1 else os.path.join(
                args.output, cfg.label or f"run{i:03d}")
            manifest = run(cfg, outdir, resume=not args.no_resume, svg=args.svg)
            print(f"[{outdir}] status: {manifest.status}")
            print(f"[{outdir}] outputs: {', '.join(manifest.outputs)}")
            ok = ok and manifest.status == "complete"
        return 0 if ok else 1

    if args.command == "check-potential":
        cfg = _load_config(args)
        spec = build_potential(cfg.potential)
        weight = build_weight(cfg.weight)
        report = check_condition_V(spec, sigma=args.sigma)
        ang = check_angular_assumptions(spec, cfg.angular_order_s, weight,
                                        sigma=args.sigma)
        out = {"condition_V": report.to_dict(),
               "angular": ang.to_dict(),
               "A2_ratio": check_A2(weight)}
        os.makedirs(args.output, exist_ok=True)
        path = os.path.join(args.output, "assumption_report.json")
        with open(path, "w") as fh:
            json.dump(out, fh, indent=2)
        print(json.dumps(out, indent=2))
        return 0

    if args.command == "check-identities":
        results = identity_checks_suite()
        os.makedirs(args.output, exist_ok=True)
        with open(os.path.join(args.output, "identities.json"), "w") as fh:
            json.dump(results, fh, indent=2)
        print(json.dumps(results, indent=2))
        ok = (results["morawetz"]["slope_res2"] >= 1.9
              and all(h["passed"] for h in results["hardy"]))
        return 0 if ok else 1

    if args.command == "scattering":
        cfg = _load_config(args)
        if cfg.label not in ("scattering", "small-data", "lm-large"):
            cfg.label = "scattering"
        manifest = run(cfg, args.output)
        path = os.path.join(args.output, "scattering.json")
        if os.path.exists(path):
            with open(path) as fh:
                print(fh.read())
        return 0 if manifest.status == "complete" else 1

    return 2


if __name__ == "__main__":
    sys.exit(main())
