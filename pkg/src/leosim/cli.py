"""``sim``: thin HTTP client over the service.

Every command except ``serve`` talks to the FastAPI app, in process by
default or to a remote ``--server`` URL, so the CLI and the service
cannot drift apart.  Exit codes: 0 success, 1 check-suite failure,
2 config errors, 3 I/O errors.
"""
from __future__ import annotations

import argparse
import asyncio
import sys

import httpx

from .experiments.config import FIGURE_PRESETS, preset_text

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim", description="Constellation coverage and latency experiments."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--trials", type=int, help="override trials per grid point")
        p.add_argument("--out", help="override output directory")
        p.add_argument("--workers", type=int, help="worker processes for the grid")
        p.add_argument("--server", help="remote service URL (default: run in process)")

    for name in ("fig3", "fig4", "fig5", "custom"):
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument(
            "--config",
            required=name == "custom",
            help="config file" + ("" if name == "custom" else " (default: packaged preset)"),
        )
        common(p)

    v = sub.add_parser("validate", help="run the oracle check suite")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--server", help="remote service URL")

    c = sub.add_parser("calibrate", help="bisect noise_dbw for a target coverage peak")
    c.add_argument("--target", type=int, required=True, help="target peak n_sats")
    c.add_argument("--config", help="config file (default: packaged fig4 preset)")
    common(c)

    s = sub.add_parser("serve", help="start the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    return parser


async def _post_async(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        async with httpx.AsyncClient(base_url=server, timeout=None) as client:
            return await client.post(path, json=payload)
    from .service import create_app

    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(transport=transport, base_url="http://sim", timeout=None) as client:
        return await client.post(path, json=payload)


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    return asyncio.run(_post_async(server, path, payload))


def _config_text(args) -> str:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            return fh.read()
    return preset_text(args.command if args.command in FIGURE_PRESETS else "fig4")


def _fail(resp: httpx.Response) -> int:
    try:
        body = resp.json()
        detail, kind = body.get("detail"), body.get("kind", "")
    except ValueError:
        detail, kind = resp.text, ""
    print(f"error: {detail}", file=sys.stderr)
    if resp.status_code == 422 and kind != "io":
        return EXIT_CONFIG
    return EXIT_IO


def _run_command(args) -> int:
    payload: dict = {"config_text": _config_text(args)}
    if args.seed is not None:
        payload["master_seed"] = args.seed
    if args.trials is not None:
        payload["trials"] = args.trials
    if args.out is not None:
        payload["output_dir"] = args.out
    if args.workers is not None:
        payload["workers"] = args.workers

    if args.command == "calibrate":
        payload["target_peak_n"] = args.target
        payload.pop("output_dir", None)
        resp = _post(args.server, "/experiments/calibrate-noise", payload)
        if resp.status_code != 200:
            return _fail(resp)
        print(f"noise_dbw = {resp.json()['noise_dbw']:.6g}")
        return EXIT_OK

    payload["expect_experiment"] = args.command
    resp = _post(args.server, "/experiments/run", payload)
    if resp.status_code != 200:
        return _fail(resp)
    body = resp.json()
    print(f"{body['experiment']}: {len(body['rows'])} rows in {body['wall_time_s']:.1f}s")
    if body["csv_path"]:
        print(f"csv: {body['csv_path']}")
    print(f"summary: {body['summary_path']}")
    return EXIT_OK if body["ok"] else EXIT_CHECKS_FAILED


def _validate_command(args) -> int:
    resp = _post(args.server, "/validate", {"master_seed": args.seed})
    if resp.status_code != 200:
        return _fail(resp)
    body = resp.json()
    for check in body["checks"]:
        print(f"{'ok  ' if check['ok'] else 'FAIL'} {check['name']}: {check['detail']}")
    return EXIT_OK if body["ok"] else EXIT_CHECKS_FAILED


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            import uvicorn

            from .service import create_app

            uvicorn.run(create_app(), host=args.host, port=args.port)
            return EXIT_OK
        if args.command == "validate":
            return _validate_command(args)
        return _run_command(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except httpx.HTTPError as exc:
        print(f"error: cannot reach the service: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
