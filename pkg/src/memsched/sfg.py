"""Signal flow graph IR: vertex/graph types, text format, validation.

The graph is polar: a single source vertex precedes everything and a single
sink vertex follows everything.  Delay vertices (z^-1) carry values across
algorithm iterations; their outgoing edges are kept in the graph but are
ignored whenever intra-iteration precedence is needed, which is what makes
feedback loops legal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

ARITH_KINDS = ("add", "sub", "mul", "alu")
DATA_KINDS = ("data", "delay", "constant")
IO_KINDS = ("input", "output")
POLAR_KINDS = ("source", "sink")
ALL_KINDS = ARITH_KINDS + DATA_KINDS + IO_KINDS + POLAR_KINDS

_ID_RE = re.compile(r"^[A-Za-z0-9_()]+$")


class SFGError(Exception):
    """Raised when an SFG cannot be parsed or violates a structural invariant."""

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass(frozen=True)
class Vertex:
    id: str
    kind: str
    label: str = ""

    @property
    def datum(self) -> str:
        """Datum name for data-carrying vertices (defaults to the id)."""
        return self.label or self.id


@dataclass
class SFG:
    vertices: list[Vertex]
    edges: list[tuple[str, str]]
    source_id: str = ""
    sink_id: str = ""
    _by_id: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._by_id = {v.id: v for v in self.vertices}
        self._preds = None
        self._succs = None

    def vertex(self, vid: str) -> Vertex:
        return self._by_id[vid]

    def has_vertex(self, vid: str) -> bool:
        return vid in self._by_id

    def preds(self, vid: str) -> list[str]:
        if self._preds is None:
            self._preds = self.pred_map()
        return self._preds[vid]

    def succs(self, vid: str) -> list[str]:
        if self._succs is None:
            self._succs = self.succ_map()
        return self._succs[vid]

    def pred_map(self) -> dict[str, list[str]]:
        m = {v.id: [] for v in self.vertices}
        for s, d in self.edges:
            m[d].append(s)
        return m

    def succ_map(self) -> dict[str, list[str]]:
        m = {v.id: [] for v in self.vertices}
        for s, d in self.edges:
            m[s].append(d)
        return m

    def sched_edges(self) -> list[tuple[str, str]]:
        """Edges that constrain this iteration (drops edges leaving a delay)."""
        return [(s, d) for (s, d) in self.edges if self.vertex(s).kind != "delay"]

    def arith_vertices(self) -> list[Vertex]:
        return [v for v in self.vertices if v.kind in ARITH_KINDS]

    def data_vertices(self) -> list[Vertex]:
        return [v for v in self.vertices if v.kind in DATA_KINDS]


def parse_sfg(text: str) -> SFG:
    """Parse the line-oriented `node`/`edge` format into a validated SFG.

    A source and sink are synthesized when the text does not declare them,
    wired to every producer-less / consumer-less vertex.  Raises SFGError
    with one diagnostic per problem found.
    """
    vertices: list[Vertex] = []
    edges: list[tuple[str, str]] = []
    seen: set[str] = set()
    errors: list[str] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "node":
            if len(parts) < 3:
                errors.append(f"line {lineno}: node needs '<id> <kind>'")
                continue
            vid, kind = parts[1], parts[2]
            label = ""
            for extra in parts[3:]:
                if extra.startswith("label="):
                    label = extra[len("label="):]
                else:
                    errors.append(f"line {lineno}: unknown attribute {extra!r}")
            if not _ID_RE.match(vid):
                errors.append(f"line {lineno}: bad id {vid!r}")
                continue
            if kind not in ALL_KINDS:
                errors.append(f"line {lineno}: unknown kind {kind!r}")
                continue
            if vid in seen:
                errors.append(f"line {lineno}: duplicate id {vid!r}")
                continue
            seen.add(vid)
            vertices.append(Vertex(vid, kind, label))
        elif parts[0] == "edge":
            if len(parts) != 3:
                errors.append(f"line {lineno}: edge needs '<src> <dst>'")
                continue
            edges.append((parts[1], parts[2]))
        else:
            errors.append(f"line {lineno}: expected 'node' or 'edge', got {parts[0]!r}")

    if errors:
        raise SFGError(errors)

    for s, d in edges:
        if s not in seen:
            errors.append(f"edge {s}->{d}: unknown source vertex {s!r}")
        if d not in seen:
            errors.append(f"edge {s}->{d}: unknown target vertex {d!r}")
    if errors:
        raise SFGError(errors)

    sfg = SFG(vertices, edges)
    polarize(sfg)
    diags = validate_sfg(sfg)
    if diags:
        raise SFGError(diags)
    return sfg


def polarize(sfg: SFG) -> None:
    """Synthesize the source/sink vertices if absent and wire them up."""
    preds = sfg.pred_map()
    succs = sfg.succ_map()
    sources = [v for v in sfg.vertices if v.kind == "source"]
    sinks = [v for v in sfg.vertices if v.kind == "sink"]

    if not sources:
        src = Vertex(_fresh_id(sfg, "v_source"), "source")
        sfg.vertices.insert(0, src)
        for v in sfg.vertices:
            if v.kind not in POLAR_KINDS and not preds[v.id]:
                sfg.edges.append((src.id, v.id))
        sources = [src]
    if not sinks:
        snk = Vertex(_fresh_id(sfg, "v_sink"), "sink")
        sfg.vertices.append(snk)
        for v in sfg.vertices:
            if v.kind not in POLAR_KINDS and v.id != snk.id and not succs.get(v.id):
                sfg.edges.append((v.id, snk.id))
        sinks = [snk]

    sfg.source_id = sources[0].id
    sfg.sink_id = sinks[0].id
    sfg.__post_init__()


def _fresh_id(sfg: SFG, base: str) -> str:
    vid = base
    n = 0
    while sfg.has_vertex(vid):
        n += 1
        vid = f"{base}{n}"
    return vid


def validate_sfg(sfg: SFG) -> list[str]:
    """Check every structural invariant; returns diagnostics (empty = valid)."""
    diags: list[str] = []
    ids = [v.id for v in sfg.vertices]
    if len(ids) != len(set(ids)):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        diags.append(f"duplicate vertex ids: {', '.join(dupes)}")
        return diags

    preds = sfg.pred_map()
    succs = sfg.succ_map()

    sources = [v.id for v in sfg.vertices if not preds[v.id]]
    sinks = [v.id for v in sfg.vertices if not succs[v.id]]
    if len(sources) != 1:
        diags.append(f"polarity violation: expected 1 source, found {len(sources)} ({', '.join(sources[:5])})")
    if len(sinks) != 1:
        diags.append(f"polarity violation: expected 1 sink, found {len(sinks)} ({', '.join(sinks[:5])})")

    for v in sfg.vertices:
        if v.kind in ARITH_KINDS:
            if not preds[v.id]:
                diags.append(f"vertex {v.id}: arithmetic vertex has no predecessor")
            if not succs[v.id]:
                diags.append(f"vertex {v.id}: arithmetic vertex has no successor")
        elif v.kind == "delay":
            real = [p for p in preds[v.id] if sfg.vertex(p).kind != "source"]
            if len(real) != 1:
                diags.append(f"vertex {v.id}: delay must have exactly one predecessor, has {len(real)}")
        elif v.kind == "data":
            producers = [p for p in preds[v.id]
                         if sfg.vertex(p).kind in ARITH_KINDS + IO_KINDS + DATA_KINDS]
            if len(producers) > 1:
                diags.append(f"vertex {v.id}: data vertex has multiple producers ({', '.join(producers)})")

    # Acyclicity once delay back-edges are dropped.
    cyc = _find_cycle(sfg)
    if cyc:
        diags.append("cycle not broken by a delay vertex: " + " -> ".join(cyc))

    # Every vertex must sit on a source->sink path (over all edges).
    if len(sources) == 1 and len(sinks) == 1:
        fwd = _reachable(sources[0], succs)
        bwd = _reachable(sinks[0], preds)
        for v in sfg.vertices:
            if v.id not in fwd or v.id not in bwd:
                diags.append(f"vertex {v.id}: not on any source->sink path")
    return diags


def _reachable(start: str, adj: dict[str, list[str]]) -> set[str]:
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        for m in adj[n]:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


def _find_cycle(sfg: SFG) -> list[str] | None:
    succs: dict[str, list[str]] = {v.id: [] for v in sfg.vertices}
    for s, d in sfg.sched_edges():
        succs[s].append(d)
    WHITE, GREY, BLACK = 0, 1, 2
    color = {v.id: WHITE for v in sfg.vertices}
    stack_path: list[str] = []

    def dfs(n: str) -> list[str] | None:
        color[n] = GREY
        stack_path.append(n)
        for m in succs[n]:
            if color[m] == GREY:
                return stack_path[stack_path.index(m):] + [m]
            if color[m] == WHITE:
                found = dfs(m)
                if found:
                    return found
        stack_path.pop()
        color[n] = BLACK
        return None

    import sys
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, len(sfg.vertices) * 2 + 100))
    try:
        for v in sfg.vertices:
            if color[v.id] == WHITE:
                found = dfs(v.id)
                if found:
                    return found
    finally:
        sys.setrecursionlimit(old)
    return None


def topo_order(sfg: SFG) -> list[str]:
    """Topological order over scheduling edges (delay out-edges excluded)."""
    indeg = {v.id: 0 for v in sfg.vertices}
    succs: dict[str, list[str]] = {v.id: [] for v in sfg.vertices}
    for s, d in sfg.sched_edges():
        indeg[d] += 1
        succs[s].append(d)
    ready = [v.id for v in sfg.vertices if indeg[v.id] == 0]
    order = []
    while ready:
        n = ready.pop()
        order.append(n)
        for m in succs[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    if len(order) != len(sfg.vertices):
        raise SFGError("graph has a cycle not broken by a delay vertex")
    return order


def emit_sfg(sfg: SFG) -> str:
    """Serialize back to the node/edge format (inverse of parse_sfg)."""
    lines = []
    for v in sfg.vertices:
        if v.label:
            lines.append(f"node {v.id} {v.kind} label={v.label}")
        else:
            lines.append(f"node {v.id} {v.kind}")
    for s, d in sfg.edges:
        lines.append(f"edge {s} {d}")
    return "\n".join(lines) + "\n"


def producer_of(sfg: SFG, vid: str) -> str | None:
    """The arith/input vertex whose result this data vertex stores, if any."""
    for p in sfg.preds(vid):
        if sfg.vertex(p).kind in ARITH_KINDS or sfg.vertex(p).kind == "input":
            return p
    return None
