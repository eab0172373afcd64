import pytest

from memsched.generators import gen_fft, gen_fir, gen_lms
from memsched.memmap import (
    MappingEntry,
    MappingError,
    MemoryTable,
    auto_place,
    default_mapping,
    emit_mapping,
    extract_table,
    family_of,
    parse_mapping,
    validate_mapping,
)
from memsched.sfg import parse_sfg


def test_extract_lms4_classes():
    table = extract_table(gen_lms(4))
    classes = {e.name: e.klass for e in table.entries}
    assert len(table.entries) == 10
    assert classes["adapt"] == "Variable"
    assert classes["deux_mu"] == "Constant"
    for i in range(4):
        assert classes[f"h({i})"] == "LoopBack"
    assert classes["x(0)"] == "Variable"
    for i in range(1, 4):
        assert classes[f"x({i})"] == "Delay"


def test_extract_fir8_dense_addresses():
    table = extract_table(gen_fir(8))
    assert len(table.entries) == 16
    assert all(e.is_memory and e.bank == 0 for e in table.entries)
    assert sorted(e.address for e in table.entries) == list(range(16))


def test_extract_no_data_vertices():
    g = parse_sfg("node i input\nnode a alu\nnode y output\nedge i a\nedge a y\n")
    assert extract_table(g).entries == []


GOOD_CSV = """# banks=2 ports=1
Name,Class,Implementation,Bank,Address,InitialValue
adapt,Variable,Register,-1,-1,0
h(0),LoopBack,Memory,0,1,0
x(0),Variable,Memory,1,9,0
"""


def test_parse_mapping_rows():
    table = parse_mapping(GOOD_CSV)
    assert table.bank_count == 2 and table.ports_per_bank == 1
    adapt = table.entry("adapt")
    assert adapt.implementation == "Register" and adapt.bank == -1
    h0 = table.entry("h(0)")
    assert h0.is_memory and (h0.bank, h0.address) == (0, 1)
    assert table.entry("x(0)").bank == 1


@pytest.mark.parametrize(
    "row,fragment",
    [
        ("a,Wobbly,Memory,0,0,0", "bad class"),
        ("a,Variable,Flash,0,0,0", "bad implementation"),
        ("a,Variable,Register,0,-1,0", "must use -1"),
        ("a,Variable,Memory,-1,0,0", "needs bank/address"),
        ("a,Variable,Memory,0,zero,0", "invalid literal"),
        ("a,Variable,Memory,0,0", "expected 6 or 7 columns"),
    ],
)
def test_parse_mapping_rejects_bad_rows(row, fragment):
    text = "Name,Class,Implementation,Bank,Address,InitialValue\n" + row + "\n"
    with pytest.raises(MappingError) as err:
        parse_mapping(text)
    assert fragment in str(err.value)


def test_parse_mapping_requires_header():
    with pytest.raises(MappingError, match="header"):
        parse_mapping("a,Variable,Memory,0,0,0\n")


def test_parse_mapping_collision():
    text = """Name,Class,Implementation,Bank,Address,InitialValue
a,Variable,Memory,0,5,0
b,Variable,Memory,0,5,0
"""
    with pytest.raises(MappingError, match="collision"):
        parse_mapping(text)


def test_parse_mapping_shared_slot_allowed():
    text = """Name,Class,Implementation,Bank,Address,InitialValue
a,Variable,Memory,0,5,0,b
b,Variable,Memory,0,5,0
"""
    table = parse_mapping(text)
    assert table.entry("a").shared_with == "b"


def test_emit_parse_identity():
    table = default_mapping(gen_lms(4), banks=2)
    again = parse_mapping(emit_mapping(table))
    assert again.bank_count == table.bank_count
    assert again.ports_per_bank == table.ports_per_bank
    assert [
        (e.name, e.klass, e.implementation, e.bank, e.address) for e in again.entries
    ] == [(e.name, e.klass, e.implementation, e.bank, e.address) for e in table.entries]


def test_validate_mapping_against_sfg():
    g = gen_fir(4)
    table = default_mapping(g, banks=2)
    assert validate_mapping(table, g) == []

    missing = MemoryTable(
        [e for e in table.entries if e.name != "x(2)"], bank_count=2
    )
    assert any("unmapped datum 'x(2)'" in d for d in validate_mapping(missing, g))

    extra = MemoryTable(
        table.entries + [MappingEntry("ghost", "Variable", "Memory", 0, 99)],
        bank_count=2,
    )
    assert any("matches no datum" in d for d in validate_mapping(extra, g))


def test_validate_mapping_bank_range():
    table = MemoryTable(
        [MappingEntry("a", "Variable", "Memory", 3, 0)], bank_count=2
    )
    assert any("out of range" in d for d in validate_mapping(table))


def test_auto_place_block_round_robin():
    entries = [MappingEntry(f"d({i})", "Variable", "Memory", 0, i) for i in range(8)]
    table = MemoryTable(entries, bank_count=1)
    placed = auto_place(table, {}, threshold=0, banks=2, interleave_k=2)
    assert [e.bank for e in placed.entries] == [0, 0, 1, 1, 0, 0, 1, 1]
    # dense per-bank addresses, in block order
    assert [e.address for e in placed.entries] == [0, 1, 0, 1, 2, 3, 2, 3]


def test_auto_place_threshold_zero_keeps_memory():
    entries = [MappingEntry("a", "Variable", "Memory", 0, 0)]
    placed = auto_place(MemoryTable(entries), {"a": 0}, threshold=0, banks=1)
    assert placed.entry("a").is_memory


def test_auto_place_threshold_promotes_registers():
    entries = [
        MappingEntry("short", "Variable", "Memory", 0, 0),
        MappingEntry("long", "Variable", "Memory", 0, 1),
    ]
    placed = auto_place(
        MemoryTable(entries), {"short": 2, "long": 50}, threshold=10, banks=2
    )
    assert placed.entry("short").implementation == "Register"
    long_e = placed.entry("long")
    assert long_e.is_memory and (long_e.bank, long_e.address) == (0, 0)


def test_auto_place_equal_bank_sizes():
    for k in (1, 2, 4, 8):
        entries = [MappingEntry(f"d({i})", "Variable", "Memory", 0, i) for i in range(16)]
        placed = auto_place(MemoryTable(entries), {}, threshold=0, banks=2, interleave_k=k)
        assert len(placed.bank_entries(0)) == len(placed.bank_entries(1)) == 8


def test_default_mapping_fir16():
    table = default_mapping(gen_fir(16), banks=2)
    for i in range(16):
        h = table.entry(f"h({i})")
        x = table.entry(f"x({i})")
        assert (h.bank, h.address) == (0, i)
        assert (x.bank, x.address) == (1, i)


def test_default_mapping_lms_scalars_become_registers():
    table = default_mapping(gen_lms(4), banks=2)
    assert table.entry("adapt").implementation == "Register"
    assert table.entry("deux_mu").implementation == "Register"
    assert table.entry("h(0)").is_memory


def test_default_mapping_fft32_k16():
    table = default_mapping(gen_fft(32), banks=2, interleave_k=16)
    bank0 = {e.name for e in table.bank_entries(0)}
    expect = {f"re({i})" for i in range(16)} | {f"im({i})" for i in range(16)}
    assert bank0 == expect


def test_family_of():
    assert family_of("x(3)") == ("x", 3)
    assert family_of("adapt") is None
    assert family_of("tw_re_2") is None
