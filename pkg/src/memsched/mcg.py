"""Per-bank memory constraint graphs, access-weight classes, and port tokens.

Conceptually each bank carries a complete directed graph over its resident
data whose edge weight is W_seq when the target address directly follows the
source address and W_rand otherwise.  Only the address map is stored; the
weight of any pair is recomputed from the adjacency rule, which keeps large
banks cheap while preserving the complete-graph semantics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .memmap import MemoryTable

W_SEQ = "W_seq"
W_RAND = "W_rand"


@dataclass
class MCG:
    bank: int
    addresses: dict[str, int]

    def __contains__(self, datum: str) -> bool:
        return datum in self.addresses

    def address(self, datum: str) -> int:
        return self.addresses[datum]

    def edges(self):
        """Materialized (src, dst, weight) triples; debugging/DOT use only."""
        names = list(self.addresses)
        for a in names:
            for b in names:
                if a != b:
                    yield a, b, access_weight(self, a, b)


def build_mcg(table: MemoryTable, bank: int) -> MCG:
    """Constraint graph for one bank of a validated memory table."""
    return MCG(bank, {e.name: e.address for e in table.bank_entries(bank)})


def build_all_mcgs(table: MemoryTable) -> dict[int, MCG]:
    return {b: build_mcg(table, b) for b in range(table.bank_count)}


def access_weight(mcg: MCG, from_datum: str | None, to_datum: str) -> str:
    """W_seq only when continuing one past the previous access's address."""
    if to_datum not in mcg.addresses:
        raise KeyError(f"datum {to_datum!r} is not mapped to bank {mcg.bank}")
    if from_datum is None:
        return W_RAND
    if from_datum not in mcg.addresses:
        raise KeyError(f"datum {from_datum!r} is not mapped to bank {mcg.bank}")
    if mcg.addresses[to_datum] == mcg.addresses[from_datum] + 1:
        return W_SEQ
    return W_RAND


def weight_for_address(last_address: int | None, address: int) -> str:
    if last_address is not None and address == last_address + 1:
        return W_SEQ
    return W_RAND


def fastest_sequence(mcg: MCG, pending) -> list[str]:
    """Longest burst chain: the longest run of consecutive addresses in pending.

    Ties are broken toward the lowest starting address; with no adjacent
    pair the result is the single lowest-address datum.
    """
    items = sorted(((mcg.addresses[d], d) for d in pending))
    if not items:
        return []
    best: list[str] = []
    run: list[str] = []
    prev = None
    for addr, name in items:
        if prev is not None and addr == prev + 1:
            run.append(name)
        else:
            run = [name]
        prev = addr
        if len(run) > len(best):
            best = list(run)
    return best


@dataclass
class PortState:
    """Fictive memory-access operators (tokens) for one bank."""

    ports: int
    busy_until: list[int] = field(default_factory=list)
    last_address: list[int | None] = field(default_factory=list)

    def __post_init__(self):
        if not self.busy_until:
            self.busy_until = [0] * self.ports
        if not self.last_address:
            self.last_address = [None] * self.ports


def port_accessible(state: PortState, cycle: int) -> bool:
    """The bank is accessible iff at least one token is idle this cycle."""
    return any(b <= cycle for b in state.busy_until)


def idle_ports(state: PortState, cycle: int) -> list[int]:
    return [i for i, b in enumerate(state.busy_until) if b <= cycle]


def pick_port(state: PortState, cycle: int, address: int) -> int | None:
    """Idle port to use for the given address, preferring a burst continuation."""
    free = idle_ports(state, cycle)
    if not free:
        return None
    for p in free:
        if state.last_address[p] is not None and state.last_address[p] + 1 == address:
            return p
    return free[0]


def begin_access(
    state: PortState, port: int, cycle: int, cost: int, address: int
) -> None:
    """Claim a token: the port is busy for `cost` cycles starting now."""
    if state.busy_until[port] > cycle:
        raise RuntimeError(
            f"port {port} is busy until {state.busy_until[port]} at cycle {cycle}"
        )
    state.busy_until[port] = cycle + cost
    state.last_address[port] = address


def mcg_dot(mcg: MCG) -> str:
    """GraphViz rendering; W_seq edges are dotted, mirroring the usual figure."""
    lines = [f'digraph mcg_bank{mcg.bank} {{']
    for name, addr in sorted(mcg.addresses.items(), key=lambda kv: kv[1]):
        lines.append(f'  "{name}" [label="{name}\\n@{addr}"];')
    for a, b, w in mcg.edges():
        style = "dotted" if w == W_SEQ else "solid"
        lines.append(f'  "{a}" -> "{b}" [style={style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
