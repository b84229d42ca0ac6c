from __future__ import annotations

import pytest

from dsync.errors import LogError
from dsync.eventlog import Event, Log, parse_log, traces, write_log

TABLE1 = """case,activity,start,complete,value
1,pre-processing,0,5,100
2,pre-processing,5,10,118
3,pre-processing,10,15,855
4,pre-processing,15,20,801
3,handling,15,22,855
5,pre-processing,20,25,146
4,handling,22,29,801
6,pre-processing,25,30,222
7,pre-processing,30,35,317
"""


def test_parse_running_example():
    log = parse_log(TABLE1)
    assert len(log.events) == 9
    assert log.schema == (("value", "number"),)
    handling3 = [e for e in log.events if e.case_id == "3" and e.label == "handling"][0]
    assert handling3.start == 15 and handling3.complete == 22
    assert handling3.attrs["value"] == 855


def test_traces_group_by_case():
    tr = traces(parse_log(TABLE1))
    assert [e.label for e in tr["3"]] == ["pre-processing", "handling"]
    assert len(tr) == 7


def test_traces_empty_and_singletons():
    assert traces(Log([], ())) == {}
    log = parse_log("case,activity,start,complete\na,x,0,1\nb,x,2,3\n")
    assert all(len(t) == 1 for t in traces(log).values())


def test_header_only_file():
    log = parse_log("case,activity,start,complete,value\n")
    # no values to inspect: the column falls back to text
    assert log.events == [] and log.schema == (("value", "text"),)


def test_missing_mandatory_column():
    with pytest.raises(LogError, match="activity"):
        parse_log("case,start,complete\n1,0,1\n")


def test_complete_before_start_names_row():
    text = "case,activity,start,complete\n1,a,0,5\n2,b,9,7\n"
    with pytest.raises(LogError, match="row 3"):
        parse_log(text)


def test_non_numeric_time_rejected():
    with pytest.raises(LogError, match="not numeric"):
        parse_log("case,activity,start,complete\n1,a,zero,5\n")


def test_round_trip_identity():
    log = parse_log(TABLE1)
    assert parse_log(write_log(log)) == log


def test_round_trip_preserves_byte_form():
    text = write_log(parse_log(TABLE1))
    assert write_log(parse_log(text)) == text


def test_boolean_attribute_round_trip():
    text = "case,activity,start,complete,urgent\n1,a,0,1,true\n2,a,1,2,false\n"
    log = parse_log(text)
    assert log.schema == (("urgent", "boolean"),)
    assert log.events[0].attrs["urgent"] is True
    assert parse_log(write_log(log)) == log


def test_mixed_column_defaults_to_text():
    text = "case,activity,start,complete,code\n1,a,0,1,12\n2,a,1,2,x9\n"
    log = parse_log(text)
    assert log.schema == (("code", "text"),)
    assert log.events[0].attrs["code"] == "12"


def test_resource_column_recognized():
    text = "case,activity,start,complete,resource\n1,a,0,1,w1\n"
    log = parse_log(text)
    assert log.has_resource and log.events[0].resource == "w1"
    assert parse_log(write_log(log)) == log


def test_global_order_is_stable():
    shuffled = (
        "case,activity,start,complete\n"
        "2,b,4,9\n"
        "1,a,0,5\n"
        "3,c,5,5\n"
    )
    log = parse_log(shuffled)
    assert [e.case_id for e in log.events] == ["1", "3", "2"]
    assert parse_log(write_log(log)).events == log.events


def test_iso_timestamps_become_minutes():
    text = (
        "case,activity,start,complete\n"
        "1,a,2024-01-01T00:00:00,2024-01-01T00:30:00\n"
    )
    log = parse_log(text)
    e = log.events[0]
    assert e.complete - e.start == pytest.approx(30.0)
