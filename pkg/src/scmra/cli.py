"""Command-line client for the experiment service.

The CLI is a thin HTTP client: without --server it mounts the service
in-process (no network), with --server it talks to a remote instance. Either
way the response artifacts are written into the output directory.

    scmra <command> [--config cfg.json] [--seed N] --out DIR [--set key=value ...]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError
from .runner import COMMANDS, verify_output_dir


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scmra",
        description="Grant-free metasurface random-access experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in [
        ("analyze", "SNR-evolution recursion and fixed points"),
        ("simulate", "one traffic episode with full event log"),
        ("linkbudget", "closed-form free-space link budget"),
        ("sweep", "Monte Carlo PER versus offered traffic"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file (omit for defaults)")
        p.add_argument("--seed", type=int, help="unsigned 64-bit run seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="config override (repeatable)")
        p.add_argument("--server", help="base URL of a running service "
                                        "(default: run in-process)")

    v = sub.add_parser("verify", help="check artifacts against their manifest")
    v.add_argument("out", help="run output directory")

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    return parser


def _post_run(args: argparse.Namespace) -> dict:
    payload: dict = {"overrides": list(args.overrides)}
    if args.config is not None:
        text = Path(args.config).read_text()
        payload["config"] = json.loads(text) if text.strip() else {}
    if args.seed is not None:
        payload["seed"] = args.seed

    if args.server:
        import httpx

        response = httpx.post(f"{args.server.rstrip('/')}/{args.command}",
                              json=payload, timeout=None)
    else:
        from fastapi.testclient import TestClient

        from .service import create_app

        with TestClient(create_app()) as client:
            response = client.post(f"/{args.command}", json=payload)

    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise ConfigError(args.command, f"service returned {response.status_code}: {detail}")
    return response.json()


def _write_artifacts(body: dict, out_dir: str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(body["manifest"], sort_keys=True, indent=2) + "\n")
    paths.append(manifest_path)
    for artifact in body["files"]:
        path = out / artifact["name"]
        path.write_text(artifact["content"])
        paths.append(path)
    return paths


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        uvicorn.run("scmra.service:app", host=args.host, port=args.port)
        return 0

    if args.command == "verify":
        problems = verify_output_dir(args.out)
        if problems:
            for problem in problems:
                print(f"FAIL {problem}", file=sys.stderr)
            return 1
        print(f"ok: artifacts in {args.out} match their manifest")
        return 0

    assert args.command in COMMANDS
    try:
        body = _post_run(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    paths = _write_artifacts(body, args.out)
    print(f"{args.command}: manifest {body['manifest_sha256'][:12]} "
          f"-> {len(paths)} files in {args.out}")
    for path in paths:
        print(f"  {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
