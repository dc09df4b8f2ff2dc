"""Command-line interface: a thin client of the rectification service.

Subcommands talk to the FastAPI app through HTTP semantics; by default an
in-process client is used, `--url` targets a running server instead (see
`serve`).  Files are read and written locally by the CLI.

Exit status: 0 success, 1 verification/computation failure, 2 usage error,
3 I/O error.  The environment variable DELONE_RECTIFY_LOG (debug/info/
warning/error) controls log verbosity and nothing else.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import click

EXIT_FAILURE = 1
EXIT_IO = 3

log = logging.getLogger("delone_rectify")


def _setup_logging() -> None:
    level = os.environ.get("DELONE_RECTIFY_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")


class ServiceClient:
    """HTTP client for the service; in-process ASGI unless a URL is given."""

    def __init__(self, url: Optional[str] = None):
        if url:
            import httpx

            self._client = httpx.Client(base_url=url, timeout=None)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.filterwarnings("ignore", message=".*httpx2.*")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def post(self, path: str, payload: Dict[str, Any]):
        resp = self._client.post(path, json=payload)
        if resp.status_code >= 400:
            try:
                detail = resp.json()
                msg = f"{detail.get('error', 'error')}: {detail.get('detail', resp.text)}"
            except Exception:
                msg = resp.text
            click.echo(f"error: {msg}", err=True)
            sys.exit(EXIT_FAILURE)
        return resp


def _read_json_file(path: str) -> Dict[str, Any]:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        click.echo(f"I/O error reading {path}: {e}", err=True)
        sys.exit(EXIT_IO)


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        click.echo(f"I/O error writing {path}: {e}", err=True)
        sys.exit(EXIT_IO)


def _write_json_file(path: str, obj: Dict[str, Any]) -> None:
    _write_text(path, json.dumps(obj, indent=1) + "\n")


def _params_payload(eps, eps_prime, delta, seed, max_retries, eps_floor) -> Dict[str, Any]:
    return {
        "epsilon": eps,
        "epsilon_prime": eps_prime,
        "delta": delta,
        "seed": seed,
        "max_retries": max_retries,
        "epsilon_floor": eps_floor,
    }


@click.group()
@click.option("--url", default=None, help="Base URL of a running service; in-process by default.")
@click.pass_context
def main(ctx: click.Context, url: Optional[str]) -> None:
    """Rectify boundedly displaced Delone sets onto the integer lattice."""
    _setup_logging()
    ctx.obj = {"url": url}


@main.command()
@click.option("--spec", "spec_path", required=True, help="Generator spec JSON.")
@click.option("--out", "out_path", required=True, help="Output point set JSON.")
@click.option("--csv", "csv_path", default=None, help="Also write points as headerless CSV.")
@click.option("--correspondence", "corr_path", default=None, help="Write the source correspondence JSON.")
@click.pass_context
def gen(ctx, spec_path, out_path, csv_path, corr_path) -> None:
    """Generate a point set from a generator spec."""
    spec = _read_json_file(spec_path)
    resp = ServiceClient(ctx.obj["url"]).post("/gen", {"spec": spec}).json()
    _write_json_file(out_path, resp["points"])
    if csv_path:
        rows = ["," .join(f"{x:.17g}" for x in p) for p in resp["points"]["points"]]
        _write_text(csv_path, "\n".join(rows) + ("\n" if rows else ""))
    if corr_path:
        if resp.get("correspondence") is None:
            click.echo("note: generator provides no correspondence; skipping", err=True)
        else:
            _write_json_file(corr_path, resp["correspondence"])
    click.echo(f"wrote {len(resp['points']['points'])} points to {out_path}")


@main.command()
@click.option("--in", "in_path", required=True, help="Point set JSON.")
@click.option("--margin", type=float, required=True, help="Core margin (window shrink).")
@click.option("--out", "out_path", required=True, help="Output displacement map JSON.")
@click.option("--order-preserving", is_flag=True, default=False, help="d=1: i-th source to i-th lattice point.")
@click.pass_context
def match(ctx, in_path, margin, out_path, order_preserving) -> None:
    """Bottleneck-match a point set onto lattice points."""
    points = _read_json_file(in_path)
    payload = {"points": points, "margin": margin, "order_preserving": order_preserving}
    resp = ServiceClient(ctx.obj["url"]).post("/match", payload).json()
    _write_json_file(out_path, resp)
    click.echo(f"matched {len(resp['pairs'])} pairs, bound {resp['bound']:.6g}")


@main.command()
@click.option("--map", "map_path", required=True, help="Displacement map JSON.")
@click.option("--eps", type=float, default=None, help="Separation scale (default: derived).")
@click.option("--eps-prime", type=float, default=None, help="Tube radius scale (default: derived).")
@click.option("--delta", type=float, default=None, help="Max perturbation (default: derived).")
@click.option("--seed", type=int, default=0)
@click.option("--max-retries", type=int, default=30)
@click.option("--eps-floor", type=float, default=1e-3)
@click.option("--out", "out_path", required=True, help="Output plan JSON.")
@click.pass_context
def rectify(ctx, map_path, eps, eps_prime, delta, seed, max_retries, eps_floor, out_path) -> None:
    """Build the rectifying homeomorphism plan for a displacement map."""
    payload = {
        "map": _read_json_file(map_path),
        "params": _params_payload(eps, eps_prime, delta, seed, max_retries, eps_floor),
    }
    resp = ServiceClient(ctx.obj["url"]).post("/rectify", payload).json()
    _write_json_file(out_path, resp["plan"])
    click.echo(
        f"plan: {resp['n_maps']} local maps ({resp['n_twists']} twists), "
        f"epsilon_final {resp['epsilon_final']:.6g}"
    )


@main.command()
@click.option("--plan", "plan_path", required=True, help="Plan JSON.")
@click.option("--map", "map_path", required=True, help="Displacement map JSON.")
@click.option("--samples", type=int, default=10_000)
@click.option("--seed", type=int, default=0)
@click.option("--tolerance", type=float, default=1e-9)
@click.option("--no-audit", is_flag=True, default=False, help="Skip the schedule audit.")
@click.option("--out", "out_path", required=True, help="Output report JSON.")
@click.pass_context
def verify(ctx, plan_path, map_path, samples, seed, tolerance, no_audit, out_path) -> None:
    """Verify a plan against its displacement map; nonzero exit on failure."""
    payload = {
        "plan": _read_json_file(plan_path),
        "map": _read_json_file(map_path),
        "samples": samples,
        "seed": seed,
        "tolerance": tolerance,
        "audit": not no_audit,
    }
    resp = ServiceClient(ctx.obj["url"]).post("/verify", payload).json()
    out = dict(resp["report"])
    if resp.get("audit") is not None:
        out["audit"] = resp["audit"]
    _write_json_file(out_path, out)
    click.echo(
        f"residual {out['max_target_residual']:.3g}, bijection {out['bijection_ok']}, "
        f"roundtrip {out['roundtrip_max']:.3g}, identity_outside {out['identity_outside_ok']}"
    )
    if not resp["ok"]:
        click.echo("verification FAILED", err=True)
        sys.exit(EXIT_FAILURE)
    click.echo("verification passed")


@main.command()
@click.option("--plan", "plan_path", required=True, help="Plan JSON (d=2).")
@click.option("--map", "map_path", required=True, help="Displacement map JSON.")
@click.option("--out", "out_path", required=True, help="Output SVG.")
@click.pass_context
def render(ctx, plan_path, map_path, out_path) -> None:
    """Render the planar construction as SVG."""
    payload = {"plan": _read_json_file(plan_path), "map": _read_json_file(map_path)}
    resp = ServiceClient(ctx.obj["url"]).post("/render", payload)
    _write_text(out_path, resp.text)
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--spec", "spec_path", required=True, help="Generator spec JSON.")
@click.option("--out-dir", "out_dir", required=True, help="Directory for all artifacts.")
@click.option("--margin", type=float, default=2.0)
@click.option("--samples", type=int, default=10_000)
@click.option("--seed", type=int, default=0)
@click.option("--eps", type=float, default=None)
@click.option("--eps-prime", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.pass_context
def pipeline(ctx, spec_path, out_dir, margin, samples, seed, eps, eps_prime, delta) -> None:
    """Run gen -> match -> rectify -> verify -> render end to end."""
    payload = {
        "spec": _read_json_file(spec_path),
        "margin": margin,
        "samples": samples,
        "seed": seed,
        "params": _params_payload(eps, eps_prime, delta, seed, 30, 1e-3),
    }
    resp = ServiceClient(ctx.obj["url"]).post("/pipeline", payload).json()
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        click.echo(f"I/O error creating {out_dir}: {e}", err=True)
        sys.exit(EXIT_IO)
    _write_json_file(str(out / "points.json"), resp["points"])
    if resp.get("correspondence"):
        _write_json_file(str(out / "correspondence.json"), resp["correspondence"])
    _write_json_file(str(out / "map.json"), resp["map"])
    _write_json_file(str(out / "plan.json"), resp["plan"])
    report = dict(resp["report"])
    report["audit"] = resp["audit"]
    _write_json_file(str(out / "report.json"), report)
    if resp.get("svg"):
        _write_text(str(out / "figure.svg"), resp["svg"])
    click.echo(
        f"pipeline: {len(resp['map']['pairs'])} pairs, bound {resp['map']['bound']:.6g}, "
        f"residual {resp['report']['max_target_residual']:.3g}, "
        f"audit violations {resp['audit']['violations']}"
    )
    if not resp["ok"]:
        click.echo("verification FAILED", err=True)
        sys.exit(EXIT_FAILURE)
    click.echo(f"all checks passed; artifacts in {out_dir}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host: str, port: int) -> None:
    """Run the rectification service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
