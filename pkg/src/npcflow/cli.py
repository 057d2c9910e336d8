"""Command line interface: ``npcflow certify|flow|check|suite|export``.

Exit codes: 0 when every manifest passes, 1 when a check fails, 2 for
invalid configs, unknown presets or unreadable run directories.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .config import CHECK_OPTIONS, CheckSpec, ConfigError, load_config
from .export import atomic_write_text, jsonable, read_json, record_to_csv
from .presets import PRESETS
from .reports import DomainError
from .runner import OUTPUT_ENV, run, suite

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _print_manifest(m, out):
    print(f"{m.status.upper():4s} {m.name}  ({m.run_dir})", file=out)
    for r in m.reports:
        print(f"  {r.summary()}", file=out)


def _config_error(exc, err):
    if isinstance(exc, ConfigError):
        payload = exc.to_dict()
    else:
        payload = {"error": "config", "errors": [{"path": "", "message": str(exc)}]}
    print(json.dumps(payload, indent=2, sort_keys=True), file=err)
    return EXIT_CONFIG


def _certify_config(cfg):
    checks = [CheckSpec("npc_certify", dict(CHECK_OPTIONS["npc_certify"]))]
    if cfg.functional is not None:
        checks.append(CheckSpec("convexity", dict(CHECK_OPTIONS["convexity"])))
    return dataclasses.replace(cfg, checks=checks)


def _cmd_run(args, out, err):
    try:
        cfg = load_config(args.config)
    except DomainError as exc:
        return _config_error(exc, err)
    if args.command == "certify":
        cfg = _certify_config(cfg)
        m = run(cfg, output_root=args.output, include_trajectory=False)
    elif args.command == "flow":
        if cfg.functional is None or cfg.initial is None:
            return _config_error(ConfigError([{"path": "functional/initial",
                                               "message": "flow needs a functional and an initial point"}]),
                                 err)
        cfg = dataclasses.replace(cfg, checks=[])
        m = run(cfg, output_root=args.output, include_trajectory=True)
    else:
        m = run(cfg, output_root=args.output)
    _print_manifest(m, out)
    return EXIT_PASS if m.passed else EXIT_FAIL


def _cmd_suite(args, out, err):
    if args.preset not in PRESETS:
        print(json.dumps({"error": "preset", "message": f"unknown preset {args.preset!r}",
                          "available": list(PRESETS)}, indent=2), file=err)
        return EXIT_CONFIG
    manifests = suite(args.preset, output_root=args.output, jobs=args.jobs)
    for m in manifests:
        _print_manifest(m, out)
    failed = [m.name for m in manifests if not m.passed]
    print(f"{len(manifests) - len(failed)}/{len(manifests)} runs passed", file=out)
    return EXIT_FAIL if failed else EXIT_PASS


def _cmd_export(args, out, err):
    run_dir = Path(args.run_dir)
    record_path = run_dir / "trajectory.json"
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.is_file():
        print(json.dumps({"error": "export", "message": f"no manifest.json in {run_dir}"}), file=err)
        return EXIT_CONFIG
    manifest = read_json(manifest_path)
    record = read_json(record_path) if record_path.is_file() else None
    if args.format == "csv":
        if record is None:
            print(json.dumps({"error": "export", "message": f"no trajectory in {run_dir}"}),
                  file=err)
            return EXIT_CONFIG
        text = record_to_csv(record)
    else:
        text = json.dumps(jsonable({"manifest": manifest, "trajectory": record}),
                          indent=2, sort_keys=True) + "\n"
    if args.output:
        atomic_write_text(args.output, text)
    else:
        out.write(text)
    return EXIT_PASS if manifest.get("status") == "pass" else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="npcflow",
        description="Minimizing-movement gradient flows on NPC spaces with numerical checks.",
        epilog=f"The default output root is taken from ${OUTPUT_ENV} (else ./npcflow-runs).")
    p.add_argument("--version", action="version", version=f"npcflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {"certify": "certify the space (and the functional's convexity) of a config",
             "flow": "compute and export the trajectory of a config",
             "check": "run the checks listed in a config"}
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("config", help="YAML or JSON run config")
        s.add_argument("--output", help="output root (overrides the environment)")
        s.set_defaults(handler=_cmd_run)
    s = sub.add_parser("suite", help="run a named preset")
    s.add_argument("preset", help=f"one of {', '.join(PRESETS)}")
    s.add_argument("--output", help="output root (overrides the environment)")
    s.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    s.set_defaults(handler=_cmd_suite)
    s = sub.add_parser("export", help="re-export a finished run")
    s.add_argument("run_dir")
    s.add_argument("--format", choices=("csv", "json"), required=True)
    s.add_argument("--output", help="write to this file instead of stdout")
    s.set_defaults(handler=_cmd_export)
    return p


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print(json.dumps({"error": "config", "message": "--jobs must be >= 1"}), file=err)
        return EXIT_CONFIG
    return args.handler(args, out, err)


if __name__ == "__main__":
    sys.exit(main())
