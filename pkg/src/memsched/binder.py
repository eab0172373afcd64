"""Post-scheduling analyses: operator allocation, register counting, memory
access accounting (circular vs shift ageing vectors), address traces, and a
greedy interconnect estimate.

Circular accounting is the cheap addressing scheme: each iteration the new
sample overwrites the oldest slot of its ageing vector, so the vector costs
a single write.  Shift accounting models the conventional scheme where the
whole window slides one slot, costing one write per element; reads are the
same either way and only the write columns differ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .memmap import MemoryTable, default_mapping, family_of
from .scheduler import (
    RESOURCE_KIND,
    DeadlineMissError,
    ResourceSet,
    Schedule,
    schedule,
)
from .sfg import ARITH_KINDS, SFG, producer_of
from .timing import InfeasibleError, TimingConfig, timing_analysis
from .mcg import W_SEQ


@dataclass
class LifetimeInterval:
    name: str
    birth: int
    death: int

    def __post_init__(self):
        if self.birth > self.death:
            raise ValueError(f"{self.name}: birth {self.birth} after death {self.death}")


@dataclass
class AccessReport:
    per_bank: dict[int, dict[str, int]]
    reads: int
    writes: int
    burst_count: int
    mode: str


@dataclass
class AddressTrace:
    rows: list[tuple[int, int, int, int, str]]  # iteration, cycle, bank, address, dir
    pointer_history: dict[str, list[int]] = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["iteration,cycle,bank,address,direction"]
        for it, cyc, bank, addr, direction in self.rows:
            lines.append(f"{it},{cyc},{bank},{addr},{direction}")
        return "\n".join(lines) + "\n"


def allocate_operators(
    sfg: SFG,
    cfg: TimingConfig,
    table: MemoryTable | None = None,
    max_rounds: int = 64,
) -> ResourceSet:
    """Greedy allocation from the cadence: start at the utilization bound
    per kind, then bump whichever kind blocks a trial schedule."""
    if table is None:
        table = default_mapping(sfg, banks=1)
    work: dict[str, int] = {}
    limit: dict[str, int] = {}
    for v in sfg.arith_vertices():
        kind = RESOURCE_KIND[v.kind]
        work[kind] = work.get(kind, 0) + cfg.lat(v.kind)
        limit[kind] = limit.get(kind, 0) + 1
    counts = {k: max(1, math.ceil(w / cfg.cadence)) for k, w in work.items()}

    ta = timing_analysis(sfg, cfg)  # raises InfeasibleError when cadence < CP
    for _ in range(max_rounds):
        try:
            schedule(sfg, table, ResourceSet(dict(counts)), cfg, ta=ta)
            return ResourceSet(counts)
        except DeadlineMissError as miss:
            kind = None
            if sfg.has_vertex(miss.vertex):
                kind = RESOURCE_KIND.get(sfg.vertex(miss.vertex).kind)
            if kind is None or counts[kind] >= limit[kind]:
                raise InfeasibleError(
                    f"cadence {cfg.cadence} unreachable: {miss}"
                ) from miss
            counts[kind] += 1
    raise InfeasibleError(f"no allocation found within {max_rounds} rounds")


def value_lifetimes(sched: Schedule, sfg: SFG, table: MemoryTable) -> list[LifetimeInterval]:
    """Lifetimes of register-resident values: operator results that are not
    stored to memory, plus register-mapped data produced by an operator."""
    intervals: list[LifetimeInterval] = []
    consumed_at: dict[str, int] = {}

    def consumers_death(vid: str) -> int | None:
        death = None
        for s in sfg.succs(vid):
            sv = sfg.vertex(s)
            if sv.kind in ARITH_KINDS and s in sched.ops:
                f = sched.ops[s].finish
                death = f if death is None else max(death, f)
        return death

    for v in sfg.arith_vertices():
        if v.id not in sched.ops:
            continue
        stores = [
            s for s in sfg.succs(v.id)
            if sfg.vertex(s).kind in ("data", "delay")
        ]
        if any(
            (e := table.entry(sfg.vertex(s).datum)) is not None and e.is_memory
            for s in stores
        ):
            continue  # value travels to memory, not a register
        birth = sched.ops[v.id].finish
        death = consumers_death(v.id)
        via_data = [
            d for s in stores
            for d in sfg.succs(s)
            if sfg.vertex(s).kind == "data" and sfg.vertex(d).kind in ARITH_KINDS
            and d in sched.ops
        ]
        for d in via_data:
            f = sched.ops[d].finish
            death = f if death is None else max(death, f)
        intervals.append(LifetimeInterval(v.id, birth, death if death is not None else birth))
    return intervals


def register_count(
    sched: Schedule,
    sfg: SFG,
    table: MemoryTable,
    threshold: int | None = None,
) -> tuple[int, list[LifetimeInterval]]:
    """Register requirement = maximum simultaneous overlap of the lifetimes
    (left-edge equivalent).  With a threshold, only values living fewer than
    that many cycles are register candidates."""
    intervals = value_lifetimes(sched, sfg, table)
    if threshold is not None:
        intervals = [iv for iv in intervals if iv.death - iv.birth < threshold]
    return max_overlap(intervals), intervals


def max_overlap(intervals: list[LifetimeInterval]) -> int:
    events: list[tuple[int, int]] = []
    for iv in intervals:
        end = max(iv.death, iv.birth + 1)  # a value occupies its slot >= 1 cycle
        events.append((iv.birth, 1))
        events.append((end, -1))
    events.sort()
    best = cur = 0
    for _, delta in events:
        cur += delta
        best = max(best, cur)
    return best


def ageing_vectors(table: MemoryTable) -> dict[str, list]:
    """Indexed families whose tail entries are Delay-class: one sliding
    window per family, ordered by index."""
    groups: dict[str, list] = {}
    for e in table.memory_entries():
        fam = family_of(e.name)
        if fam:
            groups.setdefault(fam[0], []).append((fam[1], e))
    vectors = {}
    for name, members in groups.items():
        members.sort()
        entries = [e for _, e in members]
        if len(entries) >= 1 and all(e.klass == "Delay" for e in entries[1:]) \
                and entries[0].klass == "Variable":
            vectors[name] = entries
    return vectors


def access_accounting(sched: Schedule, table: MemoryTable, mode: str = "circular") -> AccessReport:
    if mode not in ("circular", "shift"):
        raise ValueError(f"unknown ageing mode {mode!r}")
    per_bank: dict[int, dict[str, int]] = {
        b: {"reads": 0, "writes": 0} for b in range(table.bank_count)
    }
    burst = 0
    for a in sched.accesses:
        per_bank[a.bank]["reads" if a.direction == "read" else "writes"] += 1
        if a.weight == W_SEQ:
            burst += 1
    if mode == "shift":
        # The window slides: every element beyond the head is rewritten too.
        for entries in ageing_vectors(table).values():
            for e in entries[1:]:
                per_bank[e.bank]["writes"] += 1
    reads = sum(b["reads"] for b in per_bank.values())
    writes = sum(b["writes"] for b in per_bank.values())
    return AccessReport(per_bank=per_bank, reads=reads, writes=writes,
                        burst_count=burst, mode=mode)


def address_trace(
    sched: Schedule,
    table: MemoryTable,
    iterations: int = 2,
    period: int | None = None,
) -> AddressTrace:
    """Cycle-by-cycle addresses for consecutive iterations under circular
    addressing: each ageing vector's base pointer rotates down one slot per
    iteration, so the new sample lands on the slot the oldest one vacates."""
    if period is None:
        period = sched.latency
    vectors = ageing_vectors(table)
    slot: dict[str, tuple[str, int, int, int]] = {}  # datum -> (family, idx, lo, L)
    for name, entries in vectors.items():
        lo = entries[0].address
        consecutive = all(e.address == lo + i for i, e in enumerate(entries))
        if not consecutive:
            continue  # rotation needs a contiguous window
        for i, e in enumerate(entries):
            slot[e.name] = (name, i, lo, len(entries))

    addr_of = {e.name: e.address for e in table.memory_entries()}
    ordered = sorted(sched.accesses, key=lambda a: (a.start, a.direction, a.datum))
    rows: list[tuple[int, int, int, int, str]] = []
    pointers: dict[str, list[int]] = {name: [] for name in vectors}
    for k in range(iterations):
        for name, entries in vectors.items():
            if entries[0].name in slot:
                _, _, lo, length = slot[entries[0].name]
                pointers[name].append(lo + ((-k) % length))
        for a in ordered:
            if a.datum in slot:
                _, idx, lo, length = slot[a.datum]
                addr = lo + ((idx - k) % length)
            else:
                addr = addr_of[a.datum]
            rows.append((k, k * period + a.start, a.bank, addr, a.direction))
    return AddressTrace(rows=rows, pointer_history=pointers)


def interconnect_estimate(
    sched: Schedule,
    sfg: SFG,
    table: MemoryTable,
    resources: ResourceSet,
) -> dict[str, int]:
    """Greedy source/destination binding; counts steering logic only.

    mux: extra input-port sources beyond the first on each operator port;
    demux: extra result destinations beyond the first per operator instance;
    tristate: operator instances driving the shared memory/output bus.
    """
    port_sources: dict[tuple[str, int], set[str]] = {}
    dests: dict[str, set[str]] = {}
    drivers: set[str] = set()

    def source_of(pid: str) -> str | None:
        pv = sfg.vertex(pid)
        if pv.kind in ARITH_KINDS:
            return sched.ops[pid].resource if pid in sched.ops else None
        if pv.kind in ("data", "delay", "constant"):
            entry = table.entry(pv.datum)
            if entry is not None and entry.is_memory:
                return f"bank{entry.bank}"
            prod = producer_of(sfg, pid)
            if prod is not None and sfg.vertex(prod).kind in ARITH_KINDS \
                    and prod in sched.ops:
                return sched.ops[prod].resource
            return "in"
        if pv.kind == "input":
            return "in"
        return None

    for v in sfg.arith_vertices():
        if v.id not in sched.ops:
            continue
        inst = sched.ops[v.id].resource
        operands = [s for s in (source_of(p) for p in sfg.preds(v.id)) if s]
        _assign_ports(port_sources, inst, operands)

        dset = dests.setdefault(inst, set())
        for s in sfg.succs(v.id):
            sv = sfg.vertex(s)
            if sv.kind in ARITH_KINDS:
                if s in sched.ops:
                    dset.add(sched.ops[s].resource)
            elif sv.kind in ("data", "delay"):
                entry = table.entry(sv.datum)
                if entry is not None and entry.is_memory:
                    dset.add(f"bank{entry.bank}")
                    drivers.add(inst)
                else:
                    dset.add("reg")
            elif sv.kind == "output":
                dset.add("out")
                drivers.add(inst)

    mux = sum(max(0, len(s) - 1) for s in port_sources.values())
    demux = sum(max(0, len(d) - 1) for d in dests.values())
    reg, _ = register_count(sched, sfg, table)
    return {"reg": reg, "mux": mux, "demux": demux, "tristate": len(drivers)}


def _assign_ports(port_sources, inst: str, operands: list[str]) -> None:
    """Place this operation's operand sources onto the instance's input
    ports, preferring ports that already see the same source."""
    n = len(operands)
    if n == 2:
        a, b = operands
        s0 = port_sources.setdefault((inst, 0), set())
        s1 = port_sources.setdefault((inst, 1), set())
        straight = (a in s0) + (b in s1)
        swapped = (b in s0) + (a in s1)
        if swapped > straight:
            a, b = b, a
        s0.add(a)
        s1.add(b)
        return
    for i, src in enumerate(operands):
        port_sources.setdefault((inst, i), set()).add(src)
