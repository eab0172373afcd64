"""Thin command-line client for the synthesis service.

Every verb builds a JSON request and posts it to the FastAPI app: against a
remote server when --server is given, otherwise against the app mounted
in-process, so the CLI works standalone with identical behavior.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # In-process fallback: drive the ASGI app through starlette's test client,
    # which is a synchronous httpx.Client over the app.
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service import app  # imported lazily: keeps --help fast

    return TestClient(app)


def _post(server: str | None, path: str, payload: dict) -> dict:
    with _client(server) as client:
        resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        if isinstance(detail, list):
            for item in detail:
                click.echo(f"error: {item}", err=True)
        else:
            click.echo(f"error: {detail}", err=True)
        sys.exit(1)
    return resp.json()


def _parse_kv_ints(text: str | None) -> dict[str, int] | None:
    if not text:
        return None
    out: dict[str, int] = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        if not value:
            raise click.BadParameter(f"expected KEY=INT, got {part!r}")
        out[key.strip()] = int(value)
    return out


def _int_list(text: str) -> list[int | None]:
    return [None if p.strip() in ("auto", "") else int(p) for p in text.split(",")]


def _write_artifacts(artifacts: dict[str, str], out: str, prefix: str = "") -> None:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, content in artifacts.items():
        path = out_dir / (prefix + name)
        path.write_text(content)
        click.echo(f"wrote {path}")


@click.group()
def main() -> None:
    """Memory-aware SFG synthesis toolkit."""


_common = [
    click.option("--server", default=None, help="Base URL of a running service; "
                 "defaults to running in-process."),
]


def common(fn):
    for deco in reversed(_common):
        fn = deco(fn)
    return fn


@main.command()
@click.argument("sfg_path", type=click.Path(exists=True))
@click.argument("mapping_path", type=click.Path(exists=True), required=False)
@click.option("--auto-map", is_flag=True, help="Place data automatically instead of "
              "reading a mapping file.")
@click.option("--banks", default=2, show_default=True)
@click.option("--ports", default=1, show_default=True)
@click.option("--cadence", default=None, type=int, help="Cycles per iteration "
              "(default: smallest feasible).")
@click.option("--wseq", default=1, show_default=True)
@click.option("--wrand", default=2, show_default=True)
@click.option("--mode", type=click.Choice(["circular", "shift"]), default="circular",
              show_default=True)
@click.option("--interleave", "interleave_k", default=None, type=int,
              help="Block size K for interleaved bank placement.")
@click.option("--threshold", default=None, type=int,
              help="Lifetime threshold (cycles) below which data become registers.")
@click.option("--latency", "latency_spec", default=None,
              help="Per-kind operator latencies, e.g. mul=2,alu=1.")
@click.option("--out", default=".", show_default=True, help="Artifact directory.")
@click.option("--dot", is_flag=True, help="Also emit the constraint-graph DOT dump.")
@click.option("--trace", is_flag=True, help="Also emit the address-generator trace.")
@common
def synth(sfg_path, mapping_path, auto_map, banks, ports, cadence, wseq, wrand,
          mode, interleave_k, threshold, latency_spec, out, dot, trace, server):
    """Synthesize one SFG under a memory mapping."""
    if mapping_path is None and not auto_map:
        raise click.UsageError("provide a mapping file or pass --auto-map")
    payload = {
        "sfg_text": Path(sfg_path).read_text(),
        "mapping_text": Path(mapping_path).read_text() if mapping_path else None,
        "banks": banks,
        "ports": ports,
        "cadence": cadence,
        "w_seq": wseq,
        "w_rand": wrand,
        "mode": mode,
        "interleave": interleave_k,
        "threshold": threshold,
        "emit_dot": dot,
        "emit_trace": trace,
    }
    lat = _parse_kv_ints(latency_spec)
    if lat:
        payload["latency"] = {
            kind: lat.get(kind, lat.get("alu", 1)) if kind != "mul" else lat.get("mul", 1)
            for kind in ("add", "sub", "mul", "alu")
        }
    data = _post(server, "/synth", payload)
    _write_artifacts(data["artifacts"], out)
    rep = data["report"]
    click.echo(
        f"latency {rep['latency_cycles']} cycles (cadence {rep['cadence']}), "
        f"reads {rep['access']['reads']}, writes {rep['access']['writes']}, "
        f"resources {rep['resources']}"
    )


@main.command()
@click.argument("generator", type=click.Choice(["fir", "lms", "fft"]))
@click.option("--sizes", required=True, help="Comma list, e.g. 32,64,128.")
@click.option("--cadences", default="auto", show_default=True,
              help="Comma list of cycles; 'auto' picks per point.")
@click.option("--banks-list", "banks_list", default="2", show_default=True)
@click.option("--interleaves", default="auto", show_default=True,
              help="Comma list of block sizes K; 'auto' = one family per bank.")
@click.option("--ports", default=1, show_default=True)
@click.option("--wseq", default=1, show_default=True)
@click.option("--wrand", default=2, show_default=True)
@click.option("--mode", type=click.Choice(["circular", "shift"]), default="circular",
              show_default=True)
@click.option("--out", default=".", show_default=True)
@common
def sweep(generator, sizes, cadences, banks_list, interleaves, ports, wseq, wrand,
          mode, out, server):
    """Explore the cross-product of sizes, cadences, banks and interleaves."""
    payload = {
        "generator": generator,
        "sizes": [int(s) for s in sizes.split(",")],
        "cadences": _int_list(cadences),
        "banks": [int(b) for b in banks_list.split(",")],
        "interleaves": _int_list(interleaves),
        "ports": ports,
        "w_seq": wseq,
        "w_rand": wrand,
        "mode": mode,
    }
    data = _post(server, "/sweep", payload)
    _write_artifacts({"sweep.csv": data["csv"]}, out, prefix=f"{generator}_")
    feasible = sum(1 for r in data["rows"] if r["feasible"])
    click.echo(f"{len(data['rows'])} points, {feasible} feasible")


@main.command()
@click.argument("generator", type=click.Choice(["fir", "lms", "fft"]))
@click.argument("size", type=int)
@click.option("--banks", default=2, show_default=True)
@click.option("--interleave", "interleave_k", default=None, type=int)
@click.option("--out", default=".", show_default=True)
@common
def gen(generator, size, banks, interleave_k, out, server):
    """Emit a benchmark SFG and its default memory mapping."""
    data = _post(server, "/gen", {
        "generator": generator, "size": size, "banks": banks,
        "interleave": interleave_k,
    })
    _write_artifacts(
        {
            f"{generator}{size}.sfg": data["sfg_text"],
            f"{generator}{size}.map.csv": data["mapping_text"],
        },
        out,
    )


@main.command()
@click.argument("sfg_path", type=click.Path(exists=True))
@click.argument("mapping_path", type=click.Path(exists=True), required=False)
@common
def check(sfg_path, mapping_path, server):
    """Validate an SFG file and optionally a mapping file."""
    data = _post(server, "/check", {
        "sfg_text": Path(sfg_path).read_text(),
        "mapping_text": Path(mapping_path).read_text() if mapping_path else None,
    })
    for d in data["diagnostics"]:
        click.echo(d, err=True)
    if not data["ok"]:
        sys.exit(1)
    click.echo("ok")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the synthesis service."""
    import uvicorn

    uvicorn.run("memsched.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
