import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from celstream.events import (
    EventTuple,
    SchemaError,
    StreamError,
    StreamPrefix,
    dump_jsonl,
    load_schema,
    load_stream,
    stream_iterate,
)


def test_sensor_schema_has_both_relations(sensors_schema):
    assert set(sensors_schema.relations) == {"H", "T"}
    assert sensors_schema.attribute_kind("T", "tmp") == "int"


def test_zero_attribute_schema():
    sch = load_schema("A(); B(); C(); D(); E()")
    assert list(sch.relations) == ["A", "B", "C", "D", "E"]
    assert all(sch.attributes(r) == () for r in sch.relations)


@pytest.mark.parametrize("text", ["", "A(x:int); A(y:int)", "A(x:int, x:int)", "A(x:foo)"])
def test_bad_schemas(text):
    with pytest.raises(SchemaError):
        load_schema(text)


def test_fig1_stream(fig1):
    assert len(fig1) == 9
    assert fig1[1] == EventTuple("T", {"id": 0, "tmp": 45})


def test_empty_stream(sensors_schema):
    assert len(load_stream(io.StringIO(""), sensors_schema)) == 0


@pytest.mark.parametrize(
    "line",
    ['{"type":"T","id":0}', '{"type":"Q"}', '{"type":"T","id":0,"tmp":1,"x":2}', '{"type":"T","id":"a","tmp":1}'],
)
def test_bad_records_report_their_index(sensors_schema, line):
    text = '{"type":"H","id":1,"hum":2}\n' + line + "\n"
    with pytest.raises(StreamError) as info:
        load_stream(io.StringIO(text), sensors_schema)
    assert info.value.index == 1


def test_csv_with_empty_cells(sensors_schema):
    s = load_stream(io.StringIO("type,id,hum,tmp\nH,1,2,\nT,0,,45\n"), sensors_schema, "csv")
    assert list(s) == [EventTuple("H", {"id": 1, "hum": 2}), EventTuple("T", {"id": 0, "tmp": 45})]


def test_stream_iterate(fig1):
    items = list(stream_iterate(fig1))
    assert items[0] == (0, EventTuple("H", {"id": 2, "hum": 25}))
    assert [i for i, _ in items] == list(range(9))
    assert list(stream_iterate(StreamPrefix())) == []
    two = StreamPrefix(list(fig1)[:2])
    assert [t for _, t in stream_iterate(two)] == list(fig1)[:2]


events = st.builds(
    lambda rel, a, b: EventTuple(rel, {"id": a, "hum": b} if rel == "H" else {"id": a, "tmp": b}),
    st.sampled_from(["H", "T"]),
    st.integers(-5, 5),
    st.integers(-100, 100),
)


@given(st.lists(events, max_size=20))
def test_jsonl_round_trip(sensors_schema, evs):
    s = StreamPrefix(evs)
    assert load_stream(io.StringIO(dump_jsonl(s)), sensors_schema) == s
    assert len(list(stream_iterate(s))) == len(s)
