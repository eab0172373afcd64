"""Single synthesis runs and parameter sweeps, with serialized artifacts.

run_synthesis glues the pipeline together: parse, map (explicit file or
automatic placement), allocate, schedule, verify, account, estimate.  sweep
runs the cross-product of a generator's sizes against cadences, bank counts
and interleave factors; infeasible points become rows with an error column
rather than aborting the exploration.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field

from .binder import (
    access_accounting,
    address_trace,
    allocate_operators,
    interconnect_estimate,
    register_count,
)
from .generators import GENERATORS
from .memmap import (
    MemoryTable,
    auto_place,
    default_mapping,
    emit_mapping,
    parse_mapping,
    validate_mapping,
)
from .mcg import build_all_mcgs, mcg_dot
from .scheduler import (
    DeadlineMissError,
    ResourceSet,
    schedule,
    schedule_to_csv,
    verify_schedule,
)
from .sfg import SFG, emit_sfg, parse_sfg
from .timing import DEFAULT_LATENCY, InfeasibleError, TimingConfig, timing_analysis

SCHEMA_VERSION = 1


class SynthesisError(Exception):
    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass
class SynthesisOptions:
    banks: int = 2
    ports: int = 1
    cadence: int | None = None  # None: smallest feasible power-of-two multiple of CP
    w_seq: int = 1
    w_rand: int = 2
    latency: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_LATENCY))
    mode: str = "circular"
    interleave: int | None = None
    threshold: int | None = None
    resources: dict[str, int] | None = None
    emit_dot: bool = False
    emit_trace: bool = False
    trace_iterations: int = 2


@dataclass
class SynthesisReport:
    digest: str
    cadence: int
    latency_cycles: int
    resources: dict[str, int]
    access: dict
    registers: int
    interconnect: dict[str, int]
    synth_time_s: float
    config: dict
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "input_digest": self.digest,
            "config": self.config,
            "cadence": self.cadence,
            "latency_cycles": self.latency_cycles,
            "resources": self.resources,
            "access": self.access,
            "registers": self.registers,
            "interconnect": self.interconnect,
            "synth_time_s": self.synth_time_s,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _auto_cadence(sfg: SFG, table, resources, base_cfg_kwargs) -> int:
    cfg = TimingConfig(cadence=1 << 30, **base_cfg_kwargs)
    cp = timing_analysis(sfg, cfg).critical_path
    cadence = max(cp, 1)
    for _ in range(24):
        cfg = TimingConfig(cadence=cadence, **base_cfg_kwargs)
        try:
            res = resources or allocate_operators(sfg, cfg, table)
            if isinstance(res, dict):
                res = ResourceSet(res)
            schedule(sfg, table, res, cfg)
            return cadence
        except (DeadlineMissError, InfeasibleError):
            cadence *= 2
    raise SynthesisError("could not find a feasible cadence automatically")


def _measured_lifetimes(sched) -> dict[str, int]:
    spans: dict[str, tuple[int, int]] = {}
    for a in sched.accesses:
        lo, hi = spans.get(a.datum, (a.start, a.finish))
        spans[a.datum] = (min(lo, a.start), max(hi, a.finish))
    return {d: hi - lo for d, (lo, hi) in spans.items()}


def run_synthesis(
    sfg_text: str,
    mapping_text: str | None = None,
    options: SynthesisOptions | None = None,
) -> tuple[SynthesisReport, dict[str, str]]:
    opts = options or SynthesisOptions()
    start_time = time.perf_counter()
    sfg = parse_sfg(sfg_text)

    if mapping_text is not None:
        table = parse_mapping(mapping_text)
    else:
        table = default_mapping(
            sfg, banks=opts.banks, interleave_k=opts.interleave,
            ports_per_bank=opts.ports,
        )
    diags = validate_mapping(table, sfg)
    if diags:
        raise SynthesisError(diags)

    cfg_kwargs = dict(latency=dict(opts.latency), w_seq=opts.w_seq, w_rand=opts.w_rand)
    if opts.cadence is None:
        cadence = _auto_cadence(sfg, table, opts.resources, cfg_kwargs)
    else:
        cadence = opts.cadence
    cfg = TimingConfig(cadence=cadence, **cfg_kwargs)

    resources = (
        ResourceSet(dict(opts.resources)) if opts.resources
        else allocate_operators(sfg, cfg, table)
    )

    if opts.threshold and mapping_text is None:
        # Re-place with measured lifetimes: short-lived data become registers.
        trial = schedule(sfg, table, resources, cfg)
        table = auto_place(
            table, _measured_lifetimes(trial), opts.threshold,
            banks=opts.banks, interleave_k=opts.interleave or 1,
        )
        diags = validate_mapping(table, sfg)
        if diags:
            raise SynthesisError(diags)

    sched = schedule(sfg, table, resources, cfg)
    problems = verify_schedule(sched, sfg, table, resources, cfg)
    if problems:
        raise SynthesisError(["internal verification failure"] + problems)

    access = access_accounting(sched, table, mode=opts.mode)
    regs, _ = register_count(sched, sfg, table)
    inter = interconnect_estimate(sched, sfg, table, resources)
    elapsed = time.perf_counter() - start_time

    digest = hashlib.sha256(
        (sfg_text + "\n--\n" + (mapping_text or "<auto>")).encode()
    ).hexdigest()
    report = SynthesisReport(
        digest=digest,
        cadence=cadence,
        latency_cycles=sched.latency,
        resources=dict(resources.counts),
        access={
            "reads": access.reads,
            "writes": access.writes,
            "burst_count": access.burst_count,
            "mode": access.mode,
            "per_bank": {str(b): v for b, v in sorted(access.per_bank.items())},
        },
        registers=regs,
        interconnect=inter,
        synth_time_s=elapsed,
        config={
            "cadence": cadence,
            "w_seq": opts.w_seq,
            "w_rand": opts.w_rand,
            "latency": dict(opts.latency),
            "mode": opts.mode,
            "banks": table.bank_count,
            "ports": table.ports_per_bank,
        },
    )

    artifacts = {
        "report.json": report.to_json(),
        "schedule.csv": schedule_to_csv(sched),
        "mapping.csv": emit_mapping(table),
    }
    if opts.emit_dot:
        artifacts["mcg.dot"] = "".join(
            mcg_dot(g) for g in build_all_mcgs(table).values()
        )
    if opts.emit_trace:
        trace = address_trace(sched, table, iterations=opts.trace_iterations,
                              period=cadence)
        artifacts["trace.csv"] = trace.to_csv()
    return report, artifacts


SWEEP_CSV_HEADER = (
    "generator,size,cadence,banks,interleave,feasible,latency_cycles,"
    "mul,alu,reads,writes,burst_count,error"
)


def sweep(
    generator: str,
    sizes: list[int],
    cadences: list[int | None],
    banks_list: list[int],
    interleaves: list[int | None],
    options: SynthesisOptions | None = None,
) -> list[dict]:
    """Cross-product exploration; one row per point, failures included."""
    if generator not in GENERATORS:
        raise ValueError(f"unknown generator {generator!r}")
    base = options or SynthesisOptions()
    rows: list[dict] = []
    for size in sorted(sizes):
        sfg_text = emit_sfg(GENERATORS[generator](size))
        for cadence in sorted(cadences, key=lambda c: (c is None, c)):
            for banks in sorted(banks_list):
                for k in sorted(interleaves, key=lambda v: (v is None, v)):
                    row = {
                        "generator": generator,
                        "size": size,
                        "cadence": cadence,
                        "banks": banks,
                        "interleave": k,
                        "feasible": False,
                        "latency_cycles": None,
                        "mul": None,
                        "alu": None,
                        "reads": None,
                        "writes": None,
                        "burst_count": None,
                        "error": "",
                    }
                    opts = SynthesisOptions(
                        banks=banks, ports=base.ports, cadence=cadence,
                        w_seq=base.w_seq, w_rand=base.w_rand,
                        latency=dict(base.latency), mode=base.mode,
                        interleave=k, resources=base.resources,
                    )
                    try:
                        rep, _ = run_synthesis(sfg_text, None, opts)
                        row.update(
                            feasible=True,
                            cadence=rep.cadence,
                            latency_cycles=rep.latency_cycles,
                            mul=rep.resources.get("mul", 0),
                            alu=rep.resources.get("alu", 0),
                            reads=rep.access["reads"],
                            writes=rep.access["writes"],
                            burst_count=rep.access["burst_count"],
                        )
                    except (SynthesisError, DeadlineMissError, InfeasibleError) as exc:
                        row["error"] = str(exc)
                    rows.append(row)
    return rows


def sweep_to_csv(rows: list[dict]) -> str:
    lines = [SWEEP_CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                "" if r[k] is None else str(r[k]).replace(",", ";")
                for k in SWEEP_CSV_HEADER.split(",")
            )
        )
    return "\n".join(lines) + "\n"
