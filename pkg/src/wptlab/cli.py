"""Command line for running and validating study configs.

Thin wrapper over the study runners: ``wptlab run config.json`` writes
a results CSV and a manifest, ``wptlab validate config.json`` reports
config problems without running anything. With ``--server URL`` both
commands delegate execution to a running service instance and the CLI
only renders files locally.

Exit codes: 0 success, 2 config problem (bad JSON, unknown study,
missing or invalid fields), 3 solver failure on a valid config.
"""

import argparse
import json
import os
import sys

import httpx

from . import __version__, studies
from .errors import ConfigError, WptLabError

EXIT_CONFIG = 2
EXIT_SOLVER = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wptlab",
        description="Run wireless-power studies from a JSON config.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser(
        "run", help="execute a study and write its CSV and manifest"
    )
    run_parser.add_argument("config", help="path to a JSON config file")
    run_parser.add_argument("--seed", type=int, help="override the config seed")
    run_parser.add_argument("--out-dir", help="directory for CSV and manifest")
    run_parser.add_argument(
        "--jobs",
        type=int,
        help="worker threads for batch studies (default: WPTLAB_JOBS or 1)",
    )
    run_parser.add_argument(
        "--server", metavar="URL", help="delegate execution to a service instance"
    )

    validate_parser = sub.add_parser(
        "validate", help="check a config without running it"
    )
    validate_parser.add_argument("config", help="path to a JSON config file")
    validate_parser.add_argument(
        "--server", metavar="URL", help="validate against a service instance"
    )
    return parser


def _load_config(path):
    try:
        with open(path) as handle:
            return json.load(handle)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")


def _resolve_jobs(args):
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("WPTLAB_JOBS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise ConfigError(f"WPTLAB_JOBS must be an integer, got {env!r}")


def _fail(code, message):
    print(f"wptlab: error: {message}", file=sys.stderr)
    return code


def _server_detail(response):
    """(kind, message) from a 422 body; tolerate non-service responses."""
    try:
        detail = response.json().get("detail")
    except ValueError:
        return "config", response.text
    if isinstance(detail, dict):
        return detail.get("kind", "config"), detail.get("message", str(detail))
    return "config", str(detail)


def _run_remote(server, raw, jobs, target):
    url = server.rstrip("/") + "/v1/run"
    try:
        response = httpx.post(url, json={"config": raw, "jobs": jobs}, timeout=600.0)
    except httpx.HTTPError as exc:
        return _fail(EXIT_SOLVER, f"server {server} unreachable: {exc}")
    if response.status_code == 422:
        kind, message = _server_detail(response)
        return _fail(EXIT_CONFIG if kind == "config" else EXIT_SOLVER, message)
    if response.status_code != 200:
        return _fail(EXIT_SOLVER, f"server returned {response.status_code}: {response.text}")
    payload = response.json()
    manifest = studies.write_outputs(
        target,
        payload["study"],
        payload["seed"],
        raw.get(payload["study"], {}),
        payload["fieldnames"],
        payload["rows"],
        payload["summary"],
        payload["versions"],
    )
    print(f"wrote {manifest['outputs'][0]} ({manifest['rows']} rows)")
    print(f"wrote {manifest['outputs'][1]}")
    return 0


def _cmd_run(args):
    raw = _load_config(args.config)
    if args.seed is not None:
        raw = {**raw, "seed": args.seed}
    if args.out_dir is not None:
        raw = {**raw, "out_dir": args.out_dir}
    jobs = _resolve_jobs(args)
    config = studies.parse_config(raw)
    if args.server:
        return _run_remote(args.server, raw, jobs, config.out_dir or ".")
    try:
        manifest = studies.run_study(config, jobs=jobs)
    except ConfigError:
        raise
    except WptLabError as exc:
        return _fail(
            EXIT_SOLVER,
            f"study '{config.study}' failed: {type(exc).__name__}: {exc}",
        )
    print(f"wrote {manifest['outputs'][0]} ({manifest['rows']} rows)")
    print(f"wrote {manifest['outputs'][1]}")
    return 0


def _cmd_validate(args):
    raw = _load_config(args.config)
    if args.server:
        url = args.server.rstrip("/") + "/v1/validate"
        try:
            response = httpx.post(url, json={"config": raw}, timeout=60.0)
            response.raise_for_status()
        except httpx.HTTPError as exc:
            return _fail(EXIT_SOLVER, f"server {args.server} unreachable: {exc}")
        body = response.json()
        diagnostics = body["diagnostics"]
    else:
        diagnostics = studies.validate_config(raw)
    if diagnostics:
        for line in diagnostics:
            print(f"wptlab: {line}", file=sys.stderr)
        return EXIT_CONFIG
    print("config ok")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = _cmd_run if args.command == "run" else _cmd_validate
    try:
        return handler(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))


if __name__ == "__main__":
    sys.exit(main())
