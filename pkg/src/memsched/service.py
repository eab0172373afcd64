"""HTTP front end: synthesis, sweeps, benchmark generation and validation.

The service is stateless; requests carry file contents inline and responses
return every artifact as text, so the CLI (or any other client) owns the
filesystem side.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .generators import GENERATORS
from .memmap import emit_mapping, default_mapping, parse_mapping, validate_mapping, MappingError
from .report import (
    SynthesisError,
    SynthesisOptions,
    run_synthesis,
    sweep,
    sweep_to_csv,
)
from .scheduler import DeadlineMissError
from .sfg import SFGError, emit_sfg, parse_sfg, validate_sfg
from .timing import DEFAULT_LATENCY, InfeasibleError

app = FastAPI(title="memsched", version=__version__)


class SynthRequest(BaseModel):
    sfg_text: str
    mapping_text: str | None = None
    banks: int = 2
    ports: int = 1
    cadence: int | None = None
    w_seq: int = 1
    w_rand: int = 2
    latency: dict[str, int] = Field(default_factory=lambda: dict(DEFAULT_LATENCY))
    mode: str = "circular"
    interleave: int | None = None
    threshold: int | None = None
    resources: dict[str, int] | None = None
    emit_dot: bool = False
    emit_trace: bool = False
    trace_iterations: int = 2

    def to_options(self) -> SynthesisOptions:
        return SynthesisOptions(
            banks=self.banks, ports=self.ports, cadence=self.cadence,
            w_seq=self.w_seq, w_rand=self.w_rand, latency=dict(self.latency),
            mode=self.mode, interleave=self.interleave, threshold=self.threshold,
            resources=self.resources, emit_dot=self.emit_dot,
            emit_trace=self.emit_trace, trace_iterations=self.trace_iterations,
        )


class SynthResponse(BaseModel):
    report: dict
    artifacts: dict[str, str]


class SweepRequest(BaseModel):
    generator: str
    sizes: list[int]
    cadences: list[int | None] = Field(default_factory=lambda: [None])
    banks: list[int] = Field(default_factory=lambda: [2])
    interleaves: list[int | None] = Field(default_factory=lambda: [None])
    ports: int = 1
    w_seq: int = 1
    w_rand: int = 2
    latency: dict[str, int] = Field(default_factory=lambda: dict(DEFAULT_LATENCY))
    mode: str = "circular"


class SweepResponse(BaseModel):
    rows: list[dict]
    csv: str


class GenRequest(BaseModel):
    generator: str
    size: int
    banks: int = 2
    interleave: int | None = None


class GenResponse(BaseModel):
    sfg_text: str
    mapping_text: str


class CheckRequest(BaseModel):
    sfg_text: str
    mapping_text: str | None = None


class CheckResponse(BaseModel):
    ok: bool
    diagnostics: list[str]


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/synth", response_model=SynthResponse)
def synth(req: SynthRequest) -> SynthResponse:
    try:
        report, artifacts = run_synthesis(req.sfg_text, req.mapping_text, req.to_options())
    except (SFGError, MappingError, SynthesisError) as exc:
        raise HTTPException(status_code=422, detail=_detail(exc))
    except (DeadlineMissError, InfeasibleError) as exc:
        raise HTTPException(status_code=409, detail=[str(exc)])
    return SynthResponse(report=report.to_dict(), artifacts=artifacts)


@app.post("/sweep", response_model=SweepResponse)
def run_sweep(req: SweepRequest) -> SweepResponse:
    base = SynthesisOptions(
        ports=req.ports, w_seq=req.w_seq, w_rand=req.w_rand,
        latency=dict(req.latency), mode=req.mode,
    )
    try:
        rows = sweep(req.generator, req.sizes, req.cadences, req.banks,
                     req.interleaves, base)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=[str(exc)])
    return SweepResponse(rows=rows, csv=sweep_to_csv(rows))


@app.post("/gen", response_model=GenResponse)
def generate(req: GenRequest) -> GenResponse:
    if req.generator not in GENERATORS:
        raise HTTPException(status_code=422, detail=[f"unknown generator {req.generator!r}"])
    try:
        sfg = GENERATORS[req.generator](req.size)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=[str(exc)])
    table = default_mapping(sfg, banks=req.banks, interleave_k=req.interleave)
    return GenResponse(sfg_text=emit_sfg(sfg), mapping_text=emit_mapping(table))


@app.post("/check", response_model=CheckResponse)
def check(req: CheckRequest) -> CheckResponse:
    diags: list[str] = []
    sfg = None
    try:
        sfg = parse_sfg(req.sfg_text)
        diags.extend(validate_sfg(sfg))
    except SFGError as exc:
        diags.extend(exc.diagnostics)
    if req.mapping_text is not None:
        try:
            table = parse_mapping(req.mapping_text)
            if sfg is not None:
                diags.extend(validate_mapping(table, sfg))
        except MappingError as exc:
            diags.append(str(exc))
    return CheckResponse(ok=not diags, diagnostics=diags)


def _detail(exc) -> list[str]:
    return list(getattr(exc, "diagnostics", None) or [str(exc)])
