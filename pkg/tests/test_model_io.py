import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathlearn.asgn import random_asgn
from pathlearn.discrete_cbn import random_discrete_cbn
from pathlearn.errors import (
    BifSyntaxError,
    SchemaVersionError,
    UnsupportedFeatureError,
    ValidationError,
)
from pathlearn.graph import Dag, count_transitive_edges, random_tr_dag
from pathlearn.model_io import (
    bundled_networks,
    export_dot,
    load_bundled,
    load_network,
    named,
    parse_bif,
    parse_edge_list,
    parse_network,
    read_recorded_csv,
    serialize_network,
    write_cpt_csv,
    write_curve_csv,
    write_edge_list,
)

ROWS_BIF = """
network demo { property "x"; }
variable A { type discrete [ 2 ] { a0, a1 }; }
variable B { type discrete [ 3 ] { b0, b1, b2 }; }
variable C { type discrete [ 2 ] { c0, c1 }; property "note"; }
probability ( A ) { table 0.3, 0.7; }
probability ( B ) { table 0.2 0.3 0.5; }
// rows name parent states in the block's parent order: B then A
probability ( C | B, A ) {
  (b0, a0) 0.1, 0.9;
  (b1, a0) 0.2, 0.8;
  (b2, a0) 0.3, 0.7;
  (b0, a1) 0.4, 0.6;
  default 0.5, 0.5;
}
"""

# the same C table in flat form: child-major, last listed parent (A) fastest
TABLE_BIF = ROWS_BIF.split("probability ( C")[0] + """
probability ( C | B, A ) {
  table 0.1, 0.4, 0.2, 0.5, 0.3, 0.5,
        0.9, 0.6, 0.8, 0.5, 0.7, 0.5;
}
"""


def test_rows_and_flat_table_agree():
    a = parse_bif(ROWS_BIF)
    b = parse_bif(TABLE_BIF)
    assert a.name == "demo"
    assert a.payload == b.payload
    cbn = a.payload
    assert cbn.parents(2) == (0, 1)
    # A is vertex 0 and varies fastest in the stored layout
    assert cbn.cpt_row(2, [1, 0]).tolist() == [0.4, 0.6]
    assert cbn.cpt_row(2, [0, 2]).tolist() == [0.3, 0.7]
    assert cbn.cpt_row(2, [1, 2]).tolist() == [0.5, 0.5]


def test_bif_errors_carry_location():
    with pytest.raises(BifSyntaxError) as info:
        parse_bif("variable A { type discrete [ 2 ] { x, y } }")
    assert info.value.line == 1
    with pytest.raises(BifSyntaxError):
        parse_bif(ROWS_BIF.replace("probability ( A )", "probability ( Z )"))
    with pytest.raises(UnsupportedFeatureError):
        parse_bif("variable A { type continuous; }")
    with pytest.raises(ValidationError):
        parse_bif(ROWS_BIF.replace("0.3, 0.7; }", "0.3, 0.8; }"))
    with pytest.raises(ValidationError):
        parse_bif(ROWS_BIF.replace("default 0.5, 0.5;", ""))


def test_renormalizes_small_drift():
    net = parse_bif(ROWS_BIF.replace("table 0.3, 0.7;", "table 0.3, 0.7001;"))
    assert net.payload.cpts[0].sum() == pytest.approx(1.0, abs=1e-15)


def test_asia_values():
    # [TRIVIAL] values read straight from the shipped file
    net = load_bundled("asia")
    tub, asia = net.index("tub"), net.index("asia")
    yes = net.state_names[asia].index("yes")
    assert net.payload.cpt_row(tub, [yes]).tolist() == [0.05, 0.95]
    either = net.index("either")
    assert sorted(net.node_names[p] for p in net.dag.parents(either)) == ["lung", "tub"]


@pytest.mark.parametrize(
    "name,v,e,re",
    [
        ("asia", 8, 8, 0),
        ("cancer", 5, 4, 0),
        ("earthquake", 5, 4, 0),
        ("child", 20, 25, 1),
        ("insurance", 27, 52, 12),
    ],
)
def test_bundled_counts(name, v, e, re):
    net = load_network(name)
    assert (net.dag.n, net.dag.num_edges(), count_transitive_edges(net.dag)) == (v, e, re)


def test_alarm_fixture(fixtures_dir):
    net = load_network(fixtures_dir / "alarm.bif")
    assert (net.dag.n, net.dag.num_edges(), count_transitive_edges(net.dag)) == (37, 46, 4)


def test_bundled_list():
    assert set(bundled_networks()) == {"asia", "cancer", "earthquake", "child", "insurance"}
    with pytest.raises(ValidationError):
        load_bundled("alarm")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_json_round_trip_discrete(seed):
    cbn = random_discrete_cbn(random_tr_dag(6, 0.4, seed), 4, 0.0, seed)
    net = named(cbn, "x")
    back = parse_network(serialize_network(net))
    assert back.payload == cbn and back.node_names == net.node_names


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_json_round_trip_asgn(seed, sparse):
    a = random_asgn(random_tr_dag(7, 0.4, seed), seed)
    assert parse_network(serialize_network(named(a), sparse=sparse)).payload == a


def test_json_bif_round_trip_keeps_states():
    net = load_bundled("cancer")
    back = parse_network(serialize_network(net))
    assert back.payload == net.payload and back.state_names == net.state_names


def test_json_rejects_bad_documents():
    doc = json.loads(serialize_network(load_bundled("cancer")))
    doc["schema_version"] = 2
    with pytest.raises(SchemaVersionError):
        parse_network(json.dumps(doc))
    with pytest.raises(ValidationError):
        parse_network("[1, 2]")
    with pytest.raises(ValidationError):
        parse_network('{"schema_version": 1, "kind": "discrete"}')


def test_edge_list_and_dot():
    g = Dag(3, [(0, 2), (1, 2)])
    assert parse_edge_list(write_edge_list(g)) == g
    assert write_edge_list(g) == "n 3\n0 2\n1 2\n"
    dot = export_dot(g, ["a", "b", 'c"q'])
    assert '"a" -> "c\\"q";' in dot and dot.startswith('digraph "G" {')
    with pytest.raises(ValidationError):
        parse_edge_list("0 1\n")


def test_curve_csv():
    text = write_curve_csv([(20, 0.0, 5, 20, 0), {"n": 20, "C": 12.0, "m": 9, "trials": 20, "successes": 19}])
    lines = text.splitlines()
    assert lines[0] == "n,C,m,trials,successes,frequency"
    assert lines[2] == "20,12.0,9,20,19,0.95"
    with pytest.raises(ValidationError):
        write_curve_csv([(20, 0.0, 5, 0, 0)])


def test_cpt_csv_has_one_line_per_entry():
    cbn = load_bundled("cancer").payload
    text = write_cpt_csv(cbn)
    assert len(text.splitlines()) == 1 + sum(t.size for t in cbn.cpts)


def test_recorded_csv():
    text = "intervention,x0,x1\n,0,1\n0=1,1,1\n0=1,1,0\n"
    s = read_recorded_csv(text, 2, [2, 2])
    assert s.datasets[((0, 1.0),)].shape == (2, 2)
    with pytest.raises(ValidationError):
        read_recorded_csv("x0,x1\n", 2)
