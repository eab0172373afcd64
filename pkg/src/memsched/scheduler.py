"""Mobility-priority list scheduling under memory accessibility constraints.

Each cycle the ready operations are ordered by mobility (ALAP deadline minus
the current cycle); operations whose banks have no idle port token are
removed from consideration no matter their priority.  Mobility ties prefer
the candidate that continues a burst (its next read is address-adjacent on
some idle port), then the lower vertex id, which makes runs bit-reproducible.

Reads are charged on the bank ports immediately before their consumer
executes; result writes occupy a port only.  Writes that feed a delay datum
or store the iteration's new input sample are drained on idle ports, while
writes whose value is consumed again in the same iteration are issued
eagerly so their readers can proceed.
"""

from __future__ import annotations

import heapq
from bisect import insort
from dataclasses import dataclass, field

from .mcg import (
    MCG,
    PortState,
    W_RAND,
    W_SEQ,
    begin_access,
    build_all_mcgs,
    idle_ports,
    pick_port,
    port_accessible,
    weight_for_address,
)
from .memmap import MemoryTable
from .sfg import ARITH_KINDS, SFG, producer_of
from .timing import TimingAnalysis, TimingConfig, timing_analysis

RESOURCE_KIND = {"mul": "mul", "add": "alu", "sub": "alu", "alu": "alu"}


class DeadlineMissError(Exception):
    def __init__(self, vertex: str, cycle: int, reason: str):
        self.vertex = vertex
        self.cycle = cycle
        self.reason = reason
        super().__init__(
            f"vertex {vertex} cannot meet its deadline at cycle {cycle}: {reason}"
        )


@dataclass(frozen=True)
class ResourceSet:
    counts: dict[str, int]

    def count(self, kind: str) -> int:
        return self.counts.get(kind, 0)

    def validate_for(self, sfg: SFG) -> None:
        needed = {RESOURCE_KIND[v.kind] for v in sfg.arith_vertices()}
        for kind in sorted(needed):
            if self.count(kind) < 1:
                raise ValueError(f"need at least one {kind} operator")


@dataclass
class OpRecord:
    vertex: str
    kind: str
    start: int
    duration: int
    resource: str

    @property
    def finish(self) -> int:
        return self.start + self.duration


@dataclass
class AccessRecord:
    datum: str
    direction: str  # "read" | "write"
    vertex: str  # consuming / producing vertex ("" when unknown)
    start: int
    duration: int
    bank: int
    port: int
    weight: str  # W_seq | W_rand

    @property
    def finish(self) -> int:
        return self.start + self.duration


@dataclass
class Schedule:
    ops: dict[str, OpRecord]
    accesses: list[AccessRecord]
    latency: int
    bank_conflicts: int = 0

    def reads(self) -> list[AccessRecord]:
        return [a for a in self.accesses if a.direction == "read"]

    def writes(self) -> list[AccessRecord]:
        return [a for a in self.accesses if a.direction == "write"]


@dataclass
class _OpInfo:
    vid: str
    kind: str
    alap: int
    reads: list[tuple[str, int, int]] = field(default_factory=list)  # datum, bank, addr
    banks: list[int] = field(default_factory=list)


@dataclass
class _WriteTask:
    datum: str
    bank: int
    address: int
    producer: str  # vertex id or "" for input-fed data
    eager: bool


def _op_infos(sfg: SFG, table: MemoryTable, ta: TimingAnalysis):
    """Per-operation operand/dependency structure plus the write task list."""
    infos: dict[str, _OpInfo] = {}
    deps: dict[str, set] = {}
    produced: dict[str, _WriteTask] = {}

    for v in sfg.data_vertices():
        entry = table.entry(v.datum)
        prod = producer_of(sfg, v.id)
        if prod is None or entry is None or not entry.is_memory:
            continue
        is_input = sfg.vertex(prod).kind == "input"
        eager = (not is_input) and v.kind == "data"
        produced[v.datum] = _WriteTask(
            v.datum, entry.bank, entry.address, "" if is_input else prod, eager
        )

    for v in sfg.arith_vertices():
        info = _OpInfo(v.id, v.kind, ta.alap[v.id])
        dep: set = set()
        seen_data: set[str] = set()
        for p in sfg.preds(v.id):
            pv = sfg.vertex(p)
            if pv.kind in ARITH_KINDS:
                dep.add(("op", p))
            elif pv.kind in ("data", "delay", "constant"):
                if pv.datum in seen_data:
                    continue
                seen_data.add(pv.datum)
                entry = table.entry(pv.datum)
                prod = producer_of(sfg, p)
                prod_is_arith = prod is not None and sfg.vertex(prod).kind in ARITH_KINDS
                if entry is not None and entry.is_memory:
                    info.reads.append((pv.datum, entry.bank, entry.address))
                    if pv.kind == "data" and prod_is_arith:
                        dep.add(("write", pv.datum))
                elif prod_is_arith and pv.kind != "delay":
                    # Register-resident value produced this iteration; delay
                    # vertices carry last iteration's value and impose nothing.
                    dep.add(("op", prod))
        info.banks = sorted({b for _, b, _ in info.reads})
        infos[v.id] = info
        deps[v.id] = dep
    return infos, deps, list(produced.values())


def schedule(
    sfg: SFG,
    table: MemoryTable,
    resources: ResourceSet,
    cfg: TimingConfig,
    ta: TimingAnalysis | None = None,
) -> Schedule:
    """List-schedule the graph; raises DeadlineMissError when infeasible."""
    resources.validate_for(sfg)
    if ta is None:
        ta = timing_analysis(sfg, cfg)
    infos, deps, write_tasks = _op_infos(sfg, table, ta)

    ports = {b: PortState(table.ports_per_bank) for b in range(table.bank_count)}
    instance_busy: dict[str, list[int]] = {
        kind: [0] * n for kind, n in resources.counts.items()
    }

    dependents: dict[tuple, list[str]] = {}
    dep_count: dict[str, int] = {}
    ready: list[tuple[int, str]] = []
    for vid, dset in deps.items():
        dep_count[vid] = len(dset)
        for key in dset:
            dependents.setdefault(key, []).append(vid)
        if not dset:
            insort(ready, (infos[vid].alap, vid))

    events: list[tuple[int, tuple]] = []  # (finish cycle, event key)
    pending_eager: dict[int, list[_WriteTask]] = {b: [] for b in ports}
    pending_lazy: dict[int, list[_WriteTask]] = {b: [] for b in ports}
    for task in write_tasks:
        if task.producer == "":
            pending_lazy[task.bank].append(task)
        else:
            key = ("op", task.producer)
            dependents.setdefault(key, []).append(task)

    ops: dict[str, OpRecord] = {}
    accesses: list[AccessRecord] = []
    remaining = len(infos)
    conflicts = 0
    t = 0
    horizon = cfg.cadence + sum(cfg.w_rand * (len(i.reads) + 1) for i in infos.values()) + 16

    def fire(key, fin):
        for dep in dependents.pop(key, ()):
            if isinstance(dep, _WriteTask):
                target = pending_eager if dep.eager else pending_lazy
                target[dep.bank].append(dep)
            else:
                dep_count[dep] -= 1
                if dep_count[dep] == 0:
                    insort(ready, (infos[dep].alap, dep))

    def issue_write(task: _WriteTask, cycle: int) -> None:
        state = ports[task.bank]
        port = pick_port(state, cycle, task.address)
        weight = weight_for_address(state.last_address[port], task.address)
        cost = cfg.w_seq if weight == W_SEQ else cfg.w_rand
        begin_access(state, port, cycle, cost, task.address)
        accesses.append(
            AccessRecord(task.datum, "write", task.producer, cycle, cost,
                         task.bank, port, weight)
        )
        heapq.heappush(events, (cycle + cost, ("write", task.datum)))

    while remaining or events or any(pending_eager.values()) or any(pending_lazy.values()):
        if t > horizon:
            raise DeadlineMissError("?", t, "scheduler exceeded its cycle horizon")

        while events and events[0][0] <= t:
            fin, key = heapq.heappop(events)
            fire(key, fin)

        # Same-iteration result stores go first: their readers are waiting.
        for bank, queue in pending_eager.items():
            while queue and port_accessible(ports[bank], t):
                issue_write(queue.pop(0), t)

        if ready and remaining:
            i = 0
            while i < len(ready):
                # Process one run of equal-alap candidates with the burst tie-break.
                j = i
                while j < len(ready) and ready[j][0] == ready[i][0]:
                    j += 1
                run = [vid for _, vid in ready[i:j]]
                if len(run) > 1:
                    run.sort(key=lambda vid: (not _continues_burst(infos[vid], ports, t), vid))
                advanced = 0
                for vid in run:
                    info = infos[vid]
                    if info.alap < t:
                        raise DeadlineMissError(vid, t, f"deadline {info.alap} already passed")
                    placed, was_bank_conflict = _try_issue(
                        info, ports, instance_busy, cfg, t, ops, accesses, events
                    )
                    if placed:
                        ready.remove((info.alap, vid))
                        remaining -= 1
                        j -= 1
                    elif was_bank_conflict:
                        conflicts += 1
                i = j
                # Early exit: nothing left this cycle when every bank and
                # every operator kind is saturated right now.
                if not any(port_accessible(s, t) for s in ports.values()) and not any(
                    any(b <= t for b in busy) for busy in instance_busy.values()
                ):
                    break

        for bank, queue in pending_lazy.items():
            while queue and port_accessible(ports[bank], t):
                issue_write(queue.pop(0), t)

        t += 1

    latency = max(
        [r.finish for r in ops.values()] + [a.finish for a in accesses], default=0
    )
    return Schedule(ops=ops, accesses=accesses, latency=latency,
                    bank_conflicts=conflicts)


def _continues_burst(info: _OpInfo, ports: dict[int, PortState], cycle: int) -> bool:
    for _, bank, addr in info.reads:
        state = ports[bank]
        for p in idle_ports(state, cycle):
            last = state.last_address[p]
            if last is not None and last + 1 == addr:
                return True
    return False


def _try_issue(info, ports, instance_busy, cfg, t, ops, accesses, events):
    """Attempt to place one operation at cycle t.

    Returns (placed, bank_conflict).  Reads are serialized per bank on a
    single idle port, banks proceed in parallel; execution begins once the
    slowest bank is done.
    """
    plans = []  # (bank, port, [(datum, addr, start, cost, weight)])
    exec_start = t
    for bank in info.banks:
        state = ports[bank]
        operands = sorted(
            ((addr, datum) for datum, b, addr in info.reads if b == bank)
        )
        port = pick_port(state, t, operands[0][0])
        if port is None:
            return False, True
        at = t
        last = state.last_address[port]
        seq = []
        for addr, datum in operands:
            weight = weight_for_address(last, addr)
            cost = cfg.w_seq if weight == W_SEQ else cfg.w_rand
            seq.append((datum, addr, at, cost, weight))
            at += cost
            last = addr
        plans.append((bank, port, seq))
        exec_start = max(exec_start, at)

    if exec_start > info.alap:
        raise DeadlineMissError(
            info.vid, t,
            f"memory accesses delay start to {exec_start}, past deadline {info.alap}",
        )

    kind = RESOURCE_KIND[info.kind]
    lat = cfg.lat(info.kind)
    busy = instance_busy[kind]
    inst = next((k for k, b in enumerate(busy) if b <= exec_start), None)
    if inst is None:
        return False, False

    for bank, port, seq in plans:
        state = ports[bank]
        for datum, addr, at, cost, weight in seq:
            begin_access(state, port, at, cost, addr)
            accesses.append(
                AccessRecord(datum, "read", info.vid, at, cost, bank, port, weight)
            )
    busy[inst] = exec_start + lat
    ops[info.vid] = OpRecord(info.vid, info.kind, exec_start, lat, f"{kind}{inst}")
    heapq.heappush(events, (exec_start + lat, ("op", info.vid)))
    return True, False


def select_operation(
    ready: list[tuple[str, int]],
    port_states: dict[int, PortState],
    mcgs: dict[int, MCG],
    reads_of: dict[str, list[str]],
    cycle: int = 0,
) -> str | None:
    """Pick the next operation per the priority rules, or None if none is
    accessible.

    `ready` pairs vertex ids with their mobility; `reads_of` lists the data
    each vertex must read.  A vertex is accessible when every bank it touches
    has an idle port this cycle.
    """
    def bank_of(datum):
        for b, g in mcgs.items():
            if datum in g:
                return b
        raise KeyError(f"datum {datum!r} is not mapped to any bank")

    def accessible(vid):
        return all(
            port_accessible(port_states[bank_of(d)], cycle) for d in reads_of.get(vid, ())
        )

    def continues(vid):
        for d in reads_of.get(vid, ()):
            bank = bank_of(d)
            state = port_states[bank]
            addr = mcgs[bank].address(d)
            for p in idle_ports(state, cycle):
                last = state.last_address[p]
                if last is not None and last + 1 == addr:
                    return True
        return False

    candidates = [(mob, vid) for vid, mob in ready if accessible(vid)]
    if not candidates:
        return None
    candidates.sort(key=lambda mv: (mv[0], not continues(mv[1]), mv[1]))
    return candidates[0][1]


def verify_schedule(
    sched: Schedule,
    sfg: SFG,
    table: MemoryTable,
    resources: ResourceSet,
    cfg: TimingConfig,
) -> list[str]:
    """Independent checker for every schedule invariant.

    Implemented as a replay over the records alone: dependence edges,
    per-kind operator concurrency, per-bank port occupancy, read/write
    completeness, and weight/duration consistency are all rechecked without
    consulting the scheduler.
    """
    diags: list[str] = []
    infos, _, write_tasks = _op_infos(sfg, table, timing_analysis_like(sfg, cfg))

    for v in sfg.arith_vertices():
        rec = sched.ops.get(v.id)
        if rec is None:
            diags.append(f"operation {v.id} missing from schedule")
            continue
        if rec.duration != cfg.lat(v.kind):
            diags.append(f"operation {v.id}: duration {rec.duration} != latency {cfg.lat(v.kind)}")
    if diags:
        return diags

    # Dependences between operations (delay out-edges excluded).
    for s, d in sfg.sched_edges():
        sv, dv = sfg.vertex(s), sfg.vertex(d)
        if sv.kind in ARITH_KINDS and dv.kind in ARITH_KINDS:
            if sched.ops[s].finish > sched.ops[d].start:
                diags.append(f"dependence violated: {s} finishes at "
                             f"{sched.ops[s].finish}, {d} starts at {sched.ops[d].start}")

    # Values routed through register data vertices.
    for v in sfg.data_vertices():
        entry = table.entry(v.datum)
        prod = producer_of(sfg, v.id)
        if prod is None or sfg.vertex(prod).kind not in ARITH_KINDS:
            continue
        if entry is not None and entry.is_memory:
            continue
        for c in sfg.succs(v.id):
            if v.kind != "delay" and sfg.vertex(c).kind in ARITH_KINDS:
                if sched.ops[prod].finish > sched.ops[c].start:
                    diags.append(f"register value {v.datum}: producer {prod} finishes "
                                 f"after consumer {c} starts")

    # Read completeness and read-before-start, with or without explicit
    # consumer attribution on the records.
    reads_by_datum: dict[str, list[AccessRecord]] = {}
    for a in sched.reads():
        reads_by_datum.setdefault(a.datum, []).append(a)
    need = [(info, datum) for info in infos.values() for datum, _, _ in info.reads]
    expected_counts: dict[str, int] = {}
    for _, datum in need:
        expected_counts[datum] = expected_counts.get(datum, 0) + 1
    for datum, cnt in expected_counts.items():
        got = len(reads_by_datum.get(datum, []))
        if got != cnt:
            diags.append(f"datum {datum}: expected {cnt} read records, found {got}")
    attributed = all(a.vertex for a in sched.reads())
    if attributed:
        for info, datum in need:
            rec = next((a for a in reads_by_datum.get(datum, [])
                        if a.vertex == info.vid), None)
            if rec is None:
                diags.append(f"operation {info.vid}: no read record for {datum}")
            elif rec.finish > sched.ops[info.vid].start:
                diags.append(f"operation {info.vid}: read of {datum} finishes at "
                             f"{rec.finish}, after start {sched.ops[info.vid].start}")
    else:
        # Greedy interval matching: serve ops in start order, earliest-
        # finishing compatible read first.
        pools = {d: sorted(rs, key=lambda a: a.finish)
                 for d, rs in reads_by_datum.items()}
        for info, datum in sorted(need, key=lambda nd: sched.ops[nd[0].vid].start):
            pool = pools.get(datum, [])
            pick = next((a for a in pool if a.finish <= sched.ops[info.vid].start), None)
            if pick is None:
                diags.append(f"operation {info.vid}: no read of {datum} completes "
                             f"before its start")
            else:
                pool.remove(pick)

    # Write completeness and ordering.
    writes_by_datum: dict[str, list[AccessRecord]] = {}
    for a in sched.writes():
        writes_by_datum.setdefault(a.datum, []).append(a)
    for task in write_tasks:
        ws = writes_by_datum.get(task.datum, [])
        if len(ws) != 1:
            diags.append(f"datum {task.datum}: expected 1 write record, found {len(ws)}")
            continue
        w = ws[0]
        if task.producer and w.start < sched.ops[task.producer].finish:
            diags.append(f"write of {task.datum} starts at {w.start} before its "
                         f"producer {task.producer} finishes")
        if task.eager:
            for r in reads_by_datum.get(task.datum, []):
                if r.start < w.finish:
                    diags.append(f"read of {task.datum} at {r.start} precedes its "
                                 f"write completing at {w.finish}")
    expected_writes = {task.datum for task in write_tasks}
    for datum in writes_by_datum:
        if datum not in expected_writes:
            diags.append(f"unexpected write record for datum {datum}")

    # Operator concurrency: instances are serial and within the declared counts.
    by_instance: dict[str, list[OpRecord]] = {}
    for rec in sched.ops.values():
        kind = RESOURCE_KIND[rec.kind]
        idx = int(rec.resource[len(kind):]) if rec.resource.startswith(kind) else -1
        if idx < 0 or idx >= resources.count(kind):
            diags.append(f"operation {rec.vertex}: resource {rec.resource} outside "
                         f"{kind} count {resources.count(kind)}")
        by_instance.setdefault(rec.resource, []).append(rec)
    for inst, recs in by_instance.items():
        recs.sort(key=lambda r: r.start)
        for a, b in zip(recs, recs[1:]):
            if a.finish > b.start:
                diags.append(f"operator {inst}: {a.vertex} and {b.vertex} overlap")

    # Port occupancy and weight consistency.
    by_port: dict[tuple[int, int], list[AccessRecord]] = {}
    for a in sched.accesses:
        if not 0 <= a.bank < table.bank_count:
            diags.append(f"access to {a.datum}: bank {a.bank} out of range")
            continue
        if not 0 <= a.port < table.ports_per_bank:
            diags.append(f"access to {a.datum}: port {a.port} out of range")
            continue
        by_port.setdefault((a.bank, a.port), []).append(a)
    addr_of = {e.name: e.address for e in table.memory_entries()}
    for (bank, port), recs in by_port.items():
        recs.sort(key=lambda a: a.start)
        last_addr = None
        for a, b in zip(recs, recs[1:]):
            if a.finish > b.start:
                diags.append(f"bank {bank} port {port}: accesses to {a.datum} and "
                             f"{b.datum} overlap")
        for a in recs:
            addr = addr_of.get(a.datum)
            if addr is None:
                diags.append(f"access to {a.datum}: datum is not memory-resident")
                continue
            expect = weight_for_address(last_addr, addr)
            if a.weight != expect:
                diags.append(f"access to {a.datum} at cycle {a.start}: weight "
                             f"{a.weight}, expected {expect}")
            cost = cfg.w_seq if a.weight == W_SEQ else cfg.w_rand
            if a.duration != cost:
                diags.append(f"access to {a.datum}: duration {a.duration} != {cost}")
            last_addr = addr

    real_latency = max(
        [r.finish for r in sched.ops.values()] + [a.finish for a in sched.accesses],
        default=0,
    )
    if sched.latency != real_latency:
        diags.append(f"latency field {sched.latency} != recomputed {real_latency}")
    return diags


def timing_analysis_like(sfg: SFG, cfg: TimingConfig) -> TimingAnalysis:
    """ALAP-free stand-in so the verifier can reuse _op_infos without a
    feasibility check (deadlines are irrelevant to verification)."""
    zero = {v.id: 0 for v in sfg.vertices}
    return TimingAnalysis(asap=zero, alap=zero, critical_path=0)


SCHEDULE_CSV_HEADER = "cycle,kind,vertex_or_datum,resource,bank,port,weight_class,duration"


def schedule_to_csv(sched: Schedule) -> str:
    rows = []
    for rec in sched.ops.values():
        rows.append((rec.start, 0, rec.kind, rec.vertex, rec.resource, "", "", "", rec.duration))
    for a in sched.accesses:
        rows.append((a.start, 1, a.direction, a.datum, "", a.bank, a.port, a.weight, a.duration))
    rows.sort(key=lambda r: (r[0], r[1], r[3]))
    lines = [SCHEDULE_CSV_HEADER]
    for start, _, kind, name, res, bank, port, weight, dur in rows:
        lines.append(f"{start},{kind},{name},{res},{bank},{port},{weight},{dur}")
    return "\n".join(lines) + "\n"


def schedule_from_csv(text: str, sfg: SFG, cfg: TimingConfig) -> Schedule:
    """Rebuild a Schedule from its CSV form (consumer attribution is lost;
    the verifier falls back to interval matching)."""
    ops: dict[str, OpRecord] = {}
    accesses: list[AccessRecord] = []
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != SCHEDULE_CSV_HEADER:
        raise ValueError("bad schedule CSV header")
    for ln in lines[1:]:
        cols = ln.split(",")
        start, kind, name, res, bank, port, weight, dur = (
            int(cols[0]), cols[1], cols[2], cols[3], cols[4], cols[5], cols[6], int(cols[7])
        )
        if kind in ("read", "write"):
            accesses.append(
                AccessRecord(name, kind, "", start, dur, int(bank), int(port), weight)
            )
        else:
            ops[name] = OpRecord(name, kind, start, dur, res)
    latency = max(
        [r.finish for r in ops.values()] + [a.finish for a in accesses], default=0
    )
    return Schedule(ops=ops, accesses=accesses, latency=latency)
