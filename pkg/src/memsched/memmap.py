"""Memory table extraction, the mapping CSV format, and placement helpers.

A mapping assigns every datum of the graph either to a register or to a
(bank, address) slot.  Register rows use -1 sentinels for bank and address.
The CSV column order mirrors the designer-facing memory table: Name, Class,
Implementation, Bank, Address, InitialValue (optionally SharedWith).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

from .sfg import ARITH_KINDS, SFG, producer_of

CLASSES = ("Variable", "Constant", "LoopBack", "Delay")
IMPLEMENTATIONS = ("Register", "Memory")

CSV_HEADER = "Name,Class,Implementation,Bank,Address,InitialValue"

_FAMILY_RE = re.compile(r"^(.*)\((\d+)\)$")


class MappingError(Exception):
    pass


@dataclass
class MappingEntry:
    name: str
    klass: str
    implementation: str
    bank: int = -1
    address: int = -1
    initial_value: float = 0.0
    shared_with: str = ""

    @property
    def is_memory(self) -> bool:
        return self.implementation == "Memory"


@dataclass
class MemoryTable:
    entries: list[MappingEntry]
    bank_count: int = 1
    ports_per_bank: int = 1
    _by_name: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._by_name = {e.name: e for e in self.entries}

    def entry(self, name: str) -> MappingEntry | None:
        return self._by_name.get(name)

    def memory_entries(self) -> list[MappingEntry]:
        return [e for e in self.entries if e.is_memory]

    def bank_entries(self, bank: int) -> list[MappingEntry]:
        return [e for e in self.entries if e.is_memory and e.bank == bank]


def classify_vertex(sfg: SFG, vid: str) -> str:
    """Memory-table class of a data-kind vertex."""
    v = sfg.vertex(vid)
    if v.kind == "constant":
        return "Constant"
    if v.kind == "delay":
        prod = producer_of(sfg, vid)
        if prod is not None and sfg.vertex(prod).kind in ARITH_KINDS:
            return "LoopBack"
        return "Delay"
    return "Variable"


def extract_table(sfg: SFG, bank_count: int = 1, ports_per_bank: int = 1) -> MemoryTable:
    """One Memory entry per data vertex, addresses dense in declaration order."""
    entries: list[MappingEntry] = []
    seen: set[str] = set()
    addr = 0
    for v in sfg.data_vertices():
        if v.datum in seen:
            raise MappingError(f"duplicate datum label {v.datum!r}")
        seen.add(v.datum)
        entries.append(
            MappingEntry(v.datum, classify_vertex(sfg, v.id), "Memory", 0, addr)
        )
        addr += 1
    return MemoryTable(entries, bank_count=bank_count, ports_per_bank=ports_per_bank)


def parse_mapping(text: str) -> MemoryTable:
    """Parse the mapping CSV; raises MappingError on malformed or invalid rows."""
    bank_count = None
    ports = 1
    entries: list[MappingEntry] = []
    lines = [ln for ln in text.splitlines()]
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = re.search(r"banks=(\d+)", line)
            if m:
                bank_count = int(m.group(1))
            m = re.search(r"ports=(\d+)", line)
            if m:
                ports = int(m.group(1))
            continue
        if not header_seen:
            if not line.startswith(CSV_HEADER):
                raise MappingError(f"line {lineno}: expected header {CSV_HEADER!r}")
            header_seen = True
            continue
        cols = [c.strip() for c in line.split(",")]
        if len(cols) not in (6, 7):
            raise MappingError(f"line {lineno}: expected 6 or 7 columns, got {len(cols)}")
        name, klass, impl = cols[0], cols[1], cols[2]
        if klass not in CLASSES:
            raise MappingError(f"line {lineno}: bad class token {klass!r}")
        if impl not in IMPLEMENTATIONS:
            raise MappingError(f"line {lineno}: bad implementation token {impl!r}")
        try:
            bank, address = int(cols[3]), int(cols[4])
            initial = float(cols[5])
        except ValueError as exc:
            raise MappingError(f"line {lineno}: {exc}") from exc
        shared = cols[6] if len(cols) == 7 else ""
        if impl == "Register" and (bank != -1 or address != -1):
            raise MappingError(
                f"line {lineno}: Register row {name!r} must use -1 bank/address"
            )
        if impl == "Memory" and (bank < 0 or address < 0):
            raise MappingError(f"line {lineno}: Memory row {name!r} needs bank/address >= 0")
        entries.append(MappingEntry(name, klass, impl, bank, address, initial, shared))

    if not header_seen:
        raise MappingError("missing CSV header")
    if bank_count is None:
        bank_count = max((e.bank for e in entries if e.is_memory), default=-1) + 1
        bank_count = max(bank_count, 1)
    table = MemoryTable(entries, bank_count=bank_count, ports_per_bank=ports)
    diags = _table_diagnostics(table)
    if diags:
        raise MappingError("; ".join(diags))
    return table


def emit_mapping(table: MemoryTable) -> str:
    lines = [f"# banks={table.bank_count} ports={table.ports_per_bank}", CSV_HEADER]
    for e in table.entries:
        row = f"{e.name},{e.klass},{e.implementation},{e.bank},{e.address},{e.initial_value:g}"
        if e.shared_with:
            row += f",{e.shared_with}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def _table_diagnostics(table: MemoryTable) -> list[str]:
    diags: list[str] = []
    names: set[str] = set()
    slots: dict[tuple[int, int], MappingEntry] = {}
    if table.ports_per_bank < 1:
        diags.append("ports_per_bank must be >= 1")
    for e in table.entries:
        if e.name in names:
            diags.append(f"duplicate mapping entry for {e.name!r}")
        names.add(e.name)
        if e.klass not in CLASSES:
            diags.append(f"{e.name}: bad class {e.klass!r}")
        if e.implementation not in IMPLEMENTATIONS:
            diags.append(f"{e.name}: bad implementation {e.implementation!r}")
        if e.implementation == "Register":
            if e.bank != -1 or e.address != -1:
                diags.append(f"{e.name}: Register entry must have bank=address=-1")
            continue
        if not 0 <= e.bank < table.bank_count:
            diags.append(f"{e.name}: bank {e.bank} out of range [0, {table.bank_count})")
        if e.address < 0:
            diags.append(f"{e.name}: negative address")
        slot = (e.bank, e.address)
        if slot in slots:
            other = slots[slot]
            if e.shared_with != other.name and other.shared_with != e.name:
                diags.append(
                    f"{e.name}: address collision with {other.name} at bank {e.bank} "
                    f"address {e.address} (no sharing declared)"
                )
        else:
            slots[slot] = e
    return diags


def validate_mapping(table: MemoryTable, sfg: SFG | None = None) -> list[str]:
    """Diagnostics for the table itself and, when given, its fit to the SFG."""
    diags = _table_diagnostics(table)
    if sfg is not None:
        data = {v.datum for v in sfg.data_vertices()}
        mapped = {e.name for e in table.entries}
        for name in sorted(data - mapped):
            diags.append(f"unmapped datum {name!r}")
        for name in sorted(mapped - data):
            diags.append(f"mapping entry {name!r} matches no datum in the graph")
    return diags


def auto_place(
    table: MemoryTable,
    lifetimes: dict[str, int],
    threshold: int,
    banks: int,
    interleave_k: int = 1,
) -> MemoryTable:
    """Lifetime-threshold register promotion plus block-interleaved banking.

    Data whose lifetime is below the threshold become registers; everything
    else is dealt across the banks in blocks of interleave_k, in entry order,
    with dense per-bank addresses.  interleave_k=16/8/4/2/1 over a two-bank
    table generates the usual block-interleaved mapping family.
    """
    if banks < 1 or interleave_k < 1:
        raise ValueError("banks and interleave_k must be >= 1")
    placed: list[MappingEntry] = []
    next_addr = [0] * banks
    mem_index = 0
    for e in table.entries:
        life = lifetimes.get(e.name)
        if life is not None and life < threshold:
            placed.append(replace(e, implementation="Register", bank=-1, address=-1))
            continue
        if not e.is_memory:
            placed.append(replace(e))
            continue
        bank = (mem_index // interleave_k) % banks
        placed.append(replace(e, bank=bank, address=next_addr[bank]))
        next_addr[bank] += 1
        mem_index += 1
    return MemoryTable(placed, bank_count=banks, ports_per_bank=table.ports_per_bank)


def family_of(name: str) -> tuple[str, int] | None:
    """Split an indexed datum name like x(3) into ("x", 3)."""
    m = _FAMILY_RE.match(name)
    if not m:
        return None
    return m.group(1), int(m.group(2))


def default_mapping(
    sfg: SFG,
    banks: int = 2,
    interleave_k: int | None = None,
    ports_per_bank: int = 1,
) -> MemoryTable:
    """Reference placement: scalars in registers, indexed families in memory.

    Family members are laid out index-consecutively and dealt across the
    banks in blocks of interleave_k (default: one block per bank, so each
    family lands in a single bank when sizes divide evenly).
    """
    base = extract_table(sfg)
    scalars = [e for e in base.entries if family_of(e.name) is None]
    members = [e for e in base.entries if family_of(e.name) is not None]
    members.sort(key=lambda e: (_family_rank(base, e.name), family_of(e.name)[1]))

    if interleave_k is None:
        interleave_k = max(1, math.ceil(len(members) / banks))

    entries: list[MappingEntry] = []
    for e in scalars:
        entries.append(replace(e, implementation="Register", bank=-1, address=-1))
    next_addr = [0] * banks
    for i, e in enumerate(members):
        bank = (i // interleave_k) % banks
        entries.append(replace(e, bank=bank, address=next_addr[bank]))
        next_addr[bank] += 1
    return MemoryTable(entries, bank_count=banks, ports_per_bank=ports_per_bank)


def _family_rank(table: MemoryTable, name: str) -> int:
    fam = family_of(name)[0]
    for i, e in enumerate(table.entries):
        f = family_of(e.name)
        if f and f[0] == fam:
            return i
    return len(table.entries)
