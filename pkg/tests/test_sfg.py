import random

import pytest

from memsched.sfg import (
    SFG,
    SFGError,
    Vertex,
    emit_sfg,
    parse_sfg,
    polarize,
    topo_order,
    validate_sfg,
)
from memsched.timing import InfeasibleError, TimingConfig, timing_analysis

from oracles import longest_path

MINIMAL = """
# minimal chain
node a input
node m mul
node y output
edge a m
edge m y
"""


def test_parse_minimal_chain():
    g = parse_sfg(MINIMAL)
    ids = {v.id for v in g.vertices}
    assert {"a", "m", "y"} <= ids
    assert len(g.vertices) == 5  # plus synthesized source and sink
    assert g.source_id and g.sink_id
    assert g.vertex(g.source_id).kind == "source"
    assert g.vertex(g.sink_id).kind == "sink"
    assert "a" in g.preds("m")
    assert "y" in g.succs("m")


def test_parse_label():
    g = parse_sfg("node d data label=x(0)\n")
    assert g.vertex("d").datum == "x(0)"
    assert g.vertex("d").label == "x(0)"


def test_datum_defaults_to_id():
    assert Vertex("c1", "constant").datum == "c1"


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("node a wibble\n", "unknown kind"),
        ("node a input\nnode a input\n", "duplicate id"),
        ("node a input\nedge a nowhere\n", "unknown target"),
        ("node a input foo=1\n", "unknown attribute"),
        ("frobnicate\n", "expected 'node' or 'edge'"),
        ("node a\n", "node needs"),
        ("edge a\n", "edge needs"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(SFGError) as err:
        parse_sfg(text)
    assert any(fragment in d for d in err.value.diagnostics)


def test_parse_cycle_rejected():
    text = """
node i input
node a alu
node m alu
node y output
edge i a
edge a m
edge m a
edge m y
"""
    with pytest.raises(SFGError) as err:
        parse_sfg(text)
    assert any("cycle" in d for d in err.value.diagnostics)


def test_delay_breaks_cycle():
    text = """
node i input
node a alu
node d delay label=d
node y output
edge i a
edge a d
edge d a
edge a y
"""
    g = parse_sfg(text)
    assert validate_sfg(g) == []
    # The delay's out-edge is excluded from intra-iteration precedence.
    assert ("d", "a") in g.edges
    assert ("d", "a") not in g.sched_edges()


def test_validate_two_sources():
    g = SFG(
        [Vertex("a", "input"), Vertex("b", "input"), Vertex("m", "alu"),
         Vertex("y", "output")],
        [("a", "m"), ("b", "m"), ("m", "y")],
    )
    diags = validate_sfg(g)
    assert any("polarity" in d and "source" in d for d in diags)


def test_validate_delay_two_preds():
    g = SFG(
        [Vertex("x", "input"), Vertex("w", "input"), Vertex("d", "delay", "d"),
         Vertex("m", "alu"), Vertex("y", "output")],
        [("x", "d"), ("w", "d"), ("d", "m"), ("x", "m"), ("m", "y")],
    )
    polarize(g)
    diags = validate_sfg(g)
    assert any("delay must have exactly one predecessor" in d for d in diags)


def test_validate_arith_needs_neighbors():
    g = SFG([Vertex("m", "alu")], [])
    diags = validate_sfg(g)
    assert any("no predecessor" in d for d in diags)
    assert any("no successor" in d for d in diags)


def test_emit_parse_round_trip():
    from memsched.generators import gen_fir, gen_fft, gen_lms

    for g in (gen_fir(8), gen_lms(4), gen_fft(8)):
        h = parse_sfg(emit_sfg(g))
        assert {(v.id, v.kind, v.label) for v in h.vertices} == {
            (v.id, v.kind, v.label) for v in g.vertices
        }
        assert set(h.edges) == set(g.edges)


def test_topo_order_covers_all_vertices():
    from memsched.generators import gen_lms

    g = gen_lms(4)
    order = topo_order(g)
    assert sorted(order) == sorted(v.id for v in g.vertices)
    pos = {vid: i for i, vid in enumerate(order)}
    for s, d in g.sched_edges():
        assert pos[s] < pos[d]


def test_timing_single_mul():
    g = parse_sfg("node a input\nnode m mul\nnode y output\nedge a m\nedge m y\n")
    cfg = TimingConfig(cadence=10, latency={"mul": 2, "add": 1, "sub": 1, "alu": 1})
    ta = timing_analysis(g, cfg)
    assert ta.asap["m"] == 0
    assert ta.alap["m"] == 8
    assert ta.critical_path == 2


def test_timing_tight_chain():
    text = """
node i input
node m mul
node a add
node y output
edge i m
edge m a
edge a y
"""
    cfg = TimingConfig(cadence=3, latency={"mul": 2, "add": 1, "sub": 1, "alu": 1})
    ta = timing_analysis(parse_sfg(text), cfg)
    assert ta.asap["m"] == 0 and ta.asap["a"] == 2
    assert ta.alap["m"] == 0 and ta.alap["a"] == 2
    assert ta.mobility("m", 0) == 0 and ta.mobility("a", 2) == 0


def test_timing_infeasible_cadence():
    g = parse_sfg("node a input\nnode m mul\nnode y output\nedge a m\nedge m y\n")
    cfg = TimingConfig(cadence=1, latency={"mul": 2, "add": 1, "sub": 1, "alu": 1})
    with pytest.raises(InfeasibleError):
        timing_analysis(g, cfg)


def test_timing_asap_le_alap_everywhere():
    from memsched.generators import gen_fir

    g = gen_fir(16)
    cfg = TimingConfig(cadence=40)
    ta = timing_analysis(g, cfg)
    for v in g.vertices:
        assert ta.asap[v.id] <= ta.alap[v.id]


def _random_dag(rng, n):
    vertices = [Vertex("i0", "input")]
    edges = []
    kinds = {}
    for i in range(n):
        vid = f"op{i}"
        kind = rng.choice(["add", "sub", "mul", "alu"])
        kinds[vid] = kind
        vertices.append(Vertex(vid, kind))
        preds = [f"op{j}" for j in range(i) if rng.random() < 0.4]
        if not preds:
            preds = ["i0"]
        for p in preds[:2]:
            edges.append((p, vid))
    vertices.append(Vertex("y0", "output"))
    for i in range(n):
        if not any(s == f"op{i}" for s, _ in edges):
            edges.append((f"op{i}", "y0"))
    g = SFG(vertices, edges)
    polarize(g)
    return g, kinds


def test_timing_matches_longest_path_oracle():
    rng = random.Random(1234)
    for _ in range(30):
        n = rng.randint(2, 12)
        g, kinds = _random_dag(rng, n)
        assert validate_sfg(g) == []
        lat = {"add": 1, "sub": 1, "mul": rng.randint(1, 3), "alu": 1}
        cfg = TimingConfig(cadence=10 * n + 10, latency=lat)
        ta = timing_analysis(g, cfg)
        ids = [v.id for v in g.vertices]
        weight = lambda vid: cfg.lat(g.vertex(vid).kind)
        assert ta.critical_path == longest_path(ids, g.sched_edges(), weight)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"cadence": 0},
        {"cadence": 5, "w_seq": 3, "w_rand": 2},
        {"cadence": 5, "w_seq": 0, "w_rand": 2},
        {"cadence": 5, "latency": {"mul": 0}},
    ],
)
def test_timing_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        TimingConfig(**kwargs)
