"""Thin command-line client for the experiment service.

Verbs map onto scenarios (simulate -> SPECTRUM, identify -> IDENTIFY,
calibrate -> CALIBRATE, sweep -> SWEEP; `simulate` leaves an explicit
BANDWIDTH_DEMO scenario untouched) and post the config to the service, which
by default runs in-process. Artifact files come back in the response and are
written to the output directory here.

Exit codes: 0 success, 1 config error, 2 runtime/estimator error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from .experiments import write_artifacts

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

_VERB_SCENARIO = {
    "simulate": "SPECTRUM",
    "identify": "IDENTIFY",
    "calibrate": "CALIBRATE",
    "sweep": "SWEEP",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiadcsim",
        description="Time-interleaved ADC mismatch simulation experiments",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in (
        ("simulate", "run a simulation and emit its spectrum"),
        ("identify", "simulate, then estimate channel mismatches"),
        ("calibrate", "simulate, identify and correct, reporting before/after"),
        ("sweep", "Monte-Carlo sweep over a mismatch standard deviation"),
        ("validate", "validate a config and print its normalized form"),
    ):
        cmd = sub.add_parser(verb, help=help_text)
        cmd.add_argument("--config", help="path to a JSON experiment config")
        cmd.add_argument("--server", help="base URL of a running service (default: in-process)")
        if verb != "validate":
            cmd.add_argument("--out-dir", help="artifact directory (default: config output_dir)")
            cmd.add_argument("--seed", type=int, help="override the config's master_seed")
            cmd.add_argument(
                "--format", choices=("csv", "json"), default="csv",
                help="stdout summary format (files are always written)",
            )
    return parser


def _fail(message: str, code: int) -> SystemExit:
    print(f"error: {message}", file=sys.stderr)
    return SystemExit(code)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise _fail(f"{path}: {exc.strerror or exc}", EXIT_CONFIG)
    except json.JSONDecodeError as exc:
        raise _fail(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", EXIT_CONFIG)


async def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        async with httpx.AsyncClient(base_url=server, timeout=None) as client:
            return await client.post(path, json=payload)
    from .service import app

    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(
        transport=transport, base_url="http://tiadcsim.local", timeout=None
    ) as client:
        return await client.post(path, json=payload)


def _request(server: str | None, path: str, payload: dict) -> httpx.Response:
    try:
        return asyncio.run(_post(server, path, payload))
    except httpx.HTTPError as exc:
        raise _fail(f"service unreachable: {exc}", EXIT_RUNTIME)


def _print_schema_errors(detail) -> None:
    if isinstance(detail, dict) and detail.get("errors"):
        for err in detail["errors"]:
            print(f"error: {err.get('path') or '<config>'}: {err.get('message')}", file=sys.stderr)
    elif isinstance(detail, list):
        # request-model violations from the service framework
        for err in detail:
            loc = ".".join(str(part) for part in err.get("loc", []))
            print(f"error: {loc}: {err.get('msg')}", file=sys.stderr)
    else:
        print(f"error: {detail}", file=sys.stderr)


def _cmd_validate(args) -> int:
    raw = _load_config(args.config)
    response = _request(args.server, "/v1/validate", {"config": raw})
    if 400 <= response.status_code < 500:
        _print_schema_errors(response.json().get("detail"))
        return EXIT_CONFIG
    response.raise_for_status()
    print(json.dumps(response.json()["config"], indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_run(args) -> int:
    raw = _load_config(args.config)
    scenario = _VERB_SCENARIO[args.verb]
    if not (args.verb == "simulate" and str(raw.get("scenario", "")).upper() == "BANDWIDTH_DEMO"):
        raw["scenario"] = scenario
    payload = {"config": raw}
    if args.seed is not None:
        payload["seed"] = args.seed
    response = _request(args.server, "/v1/run", payload)
    if 400 <= response.status_code < 500:
        _print_schema_errors(response.json().get("detail"))
        return EXIT_CONFIG
    if response.status_code >= 500:
        detail = response.json().get("detail", {})
        message = detail.get("error", detail) if isinstance(detail, dict) else detail
        print(f"error: {message}", file=sys.stderr)
        return EXIT_RUNTIME
    response.raise_for_status()
    body = response.json()
    out_dir = args.out_dir or body["summary"]["config"]["output_dir"]
    paths = write_artifacts(body["files"], out_dir)
    _print_summary(body["summary"], args.format, paths)
    return EXIT_OK


def _print_summary(summary: dict, fmt: str, paths: list[str]) -> None:
    if fmt == "json":
        print(json.dumps(summary, indent=2, sort_keys=True))
        return
    for path in paths:
        print(f"wrote,{path}")
    metrics = summary.get("metrics")
    if metrics:
        for key in sorted(metrics):
            print(f"{key},{metrics[key]}")
    sweep = summary.get("sweep")
    if sweep:
        for row in sweep["rows"]:
            print(
                f"sigma={row['sigma']},{row['aggregate_sinad_db_uncompensated']},"
                f"{row['aggregate_sinad_db_compensated']}"
            )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "validate":
            return _cmd_validate(args)
        return _cmd_run(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
