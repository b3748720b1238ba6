"""Command line client of the fdisac service.

Every subcommand except ``serve`` builds a request, sends it to the service
and writes the response into the output directory.  By default the service
runs in-process; ``--server URL`` talks to a running instance instead.

Exit status is 0 on success, 2 for invalid configuration or arguments and 1
for any other failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from .harness import write_outputs

OUT_ENV = "FDISAC_OUT"
DEFAULT_OUT = "results"
EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2


class ClientError(RuntimeError):
    def __init__(self, status: int, detail: Any):
        self.status = status
        self.detail = detail
        super().__init__(_describe(detail))


def _describe(detail: Any) -> str:
    if isinstance(detail, dict):
        if "message" in detail:
            key = detail.get("key")
            return f"{key}: {detail['message']}" if key else str(detail["message"])
        if "detail" in detail:
            return _describe(detail["detail"])
    if isinstance(detail, list):
        return "; ".join(
            f"{'.'.join(str(p) for p in item.get('loc', ()))}: {item.get('msg', item)}"
            if isinstance(item, dict) else str(item)
            for item in detail
        )
    return str(detail)


class Transport:
    """POST/GET JSON either in-process or over HTTP."""

    def __init__(self, server: str | None = None, timeout: float | None = None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=timeout)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app, raise_server_exceptions=False)

    def request(self, method: str, path: str, payload: dict | None = None) -> dict:
        response = self._client.request(method, path, json=payload)
        try:
            body = response.json()
        except ValueError:
            body = response.text
        if response.status_code >= 400:
            raise ClientError(response.status_code, body)
        return body


def _load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    import yaml

    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ClientError(422, {"key": None, "message": f"{path}: {exc}"}) from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ClientError(422, {"key": None, "message": f"{path}: top level must be a mapping"})
    return data


def _out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _run_payload(args: argparse.Namespace, config: dict[str, Any]) -> dict[str, Any]:
    payload: dict[str, Any] = {"config": config, "seed": args.seed, "trial": args.trial}
    if args.si is not None:
        payload["si_level_db"] = args.si
    if args.rho is not None:
        payload["rho"] = args.rho
    return payload


def _emit(args: argparse.Namespace, stem: str, body: dict, extra: dict[str, str] | None = None):
    files = dict(extra or {})
    if "json" in args.format:
        files[f"{stem}.json"] = json.dumps(body, indent=2, sort_keys=True)
    paths = write_outputs(_out_dir(args), files)
    for path in paths:
        print(path)


def _cmd_solve(args, transport: Transport, config) -> None:
    body = transport.request("POST", "/solve", _run_payload(args, config))
    report, metrics = body["report"], body["metrics"]
    print(f"iterations={report['iterations']} converged={report['converged']} "
          f"objective={report['objective_trace'][-1]!r} p_res_db={metrics['p_res_db']!r}",
          file=sys.stderr)
    extra = {}
    if "csv" in args.format:
        rows = ["iteration,objective,zeta"]
        zeta = [""] + [repr(z) for z in report["zeta_trace"]]
        for i, f in enumerate(report["objective_trace"]):
            rows.append(f"{i},{f!r},{zeta[i] if i < len(zeta) else ''}")
        extra["solve_once_trace.csv"] = "\r\n".join(rows) + "\r\n"
    _emit(args, "solve_once", body, extra)


def _cmd_baseline(args, transport: Transport, config) -> None:
    payload = _run_payload(args, config) | {"kind": args.kind}
    body = transport.request("POST", "/baseline", payload)
    extra = {}
    if "csv" in args.format:
        metrics = body["metrics"]
        extra[f"baseline_{args.kind}.csv"] = (",".join(metrics) + "\r\n"
                                               + ",".join(repr(v) for v in metrics.values()) + "\r\n")
    _emit(args, f"baseline_{args.kind}", body, extra)


def _cmd_radar_map(args, transport: Transport, config) -> None:
    payload = _run_payload(args, config) | {"method": args.method, "include_si": args.include_si,
                                             "noise": args.noise}
    body = transport.request("POST", "/radar-map", payload)
    print(f"peak=({body['peak_range_bin']}, {body['peak_doppler_bin']}) "
          f"expected=({body['expected_range_bin']}, {body['expected_doppler_bin']})",
          file=sys.stderr)
    csv_text = body.pop("csv")
    stem = f"range_doppler_{args.method}" + ("_si" if args.include_si else "")
    extra = {f"{stem}.csv": csv_text} if "csv" in args.format else {}
    _emit(args, stem, body, extra)


def _cmd_angle(args, transport: Transport, config) -> None:
    payload = _run_payload(args, config) | {"methods": args.methods}
    body = transport.request("POST", "/angle", payload)
    for entry in body["spectra"]:
        print(f"{entry['method']}: estimate={entry['estimate_deg']!r} deg", file=sys.stderr)
    csv_text = body.pop("csv")
    extra = {"angle_spectrum.csv": csv_text} if "csv" in args.format else {}
    _emit(args, "angle_spectrum", body, extra)


def _cmd_sweep(args, transport: Transport, config) -> None:
    payload = {"config": config, "seed": args.seed, "trials": args.trials,
               "formats": args.format}
    body = transport.request("POST", "/sweep", payload)
    for path in write_outputs(_out_dir(args), body["files"], body["manifest"]):
        print(path)


def _cmd_serve(args) -> None:
    import uvicorn

    uvicorn.run("fdisac.service:app", host=args.host, port=args.port, log_level="info")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides rng_seed)")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--format", nargs="+", choices=("csv", "json"), default=["csv", "json"],
                        help="output formats")
    common.add_argument("--server", help="base URL of a running service (default in-process)")

    single = argparse.ArgumentParser(add_help=False)
    single.add_argument("--trials", type=int, default=None,
                        help="accepted for symmetry; single runs use --trial")
    single.add_argument("--trial", type=int, default=0, help="trial index of the realization")
    single.add_argument("--si", type=float, help="SI level in dB above the noise floor")
    single.add_argument("--rho", type=float, help="communication priority")

    parser = argparse.ArgumentParser(prog="fdisac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[common], help="Monte Carlo sweep over SI level and priority")
    p.add_argument("--trials", type=int, help="trials per lattice point")
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("solve-once", parents=[common, single], help="one realization, proposed solver")
    p.set_defaults(handler=_cmd_solve)

    p = sub.add_parser("baseline", parents=[common, single], help="one realization, a baseline design")
    p.add_argument("--kind", choices=("nsp", "radar_only", "comm_only"), default="nsp")
    p.set_defaults(handler=_cmd_baseline)

    p = sub.add_parser("radar-map", parents=[common, single], help="range-Doppler map of one frame")
    p.add_argument("--method", choices=("proposed", "nsp", "radar_only", "comm_only"),
                   default="proposed")
    p.add_argument("--include-si", action="store_true", help="inject residual SI into the stream")
    p.add_argument("--noise", action="store_true", help="add receiver noise")
    p.set_defaults(handler=_cmd_radar_map)

    p = sub.add_parser("angle", parents=[common, single], help="angle power spectrum")
    p.add_argument("--methods", nargs="+", default=["proposed", "nsp"],
                   choices=("proposed", "nsp", "radar_only", "comm_only"))
    p.set_defaults(handler=_cmd_angle)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.command == "serve":
        _cmd_serve(args)
        return EXIT_OK
    try:
        config = _load_config(args.config)
        args.handler(args, Transport(args.server), config)
    except ClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if exc.status == 422 else EXIT_FAILURE
    except Exception as exc:  # noqa: BLE001 - report and exit nonzero
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
