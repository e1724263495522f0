import json

import pytest

from pairtune.events import EVENT_KINDS, EventLog, event_line, parse_jsonl, to_jsonl


def test_event_line_is_canonical():
    line = event_line({"zeta": 1, "event": "measured", "alpha": [1, 2]})
    assert line == '{"alpha":[1,2],"event":"measured","zeta":1}'
    assert "\n" not in line


def test_event_line_rejects_unknown_kind():
    with pytest.raises(ValueError, match="unknown event kind"):
        event_line({"event": "rebooted"})
    with pytest.raises(ValueError):
        event_line({"payload": 1})


def test_jsonl_roundtrip():
    events = [{"event": k, "i": i} for i, k in enumerate(EVENT_KINDS)]
    text = to_jsonl(events)
    assert text.count("\n") == len(events)
    assert parse_jsonl(text) == events
    assert parse_jsonl("") == []


def test_key_order_independence():
    a = event_line({"event": "labeled", "x": 1, "y": 2})
    b = event_line({"y": 2, "x": 1, "event": "labeled"})
    assert a == b


def test_log_appends_and_reads(tmp_path):
    path = tmp_path / "events.jsonl"
    log = EventLog(str(path))
    log.append({"event": "created", "n": 0})
    log.append({"event": "done", "n": 1})
    log.close()
    assert log.read() == [{"event": "created", "n": 0}, {"event": "done", "n": 1}]
    assert list(log) == log.read()

    # appending after reopen keeps prior records
    log.append({"event": "measured", "n": 2})
    log.close()
    assert len(log.read()) == 3


def test_log_read_missing_file_is_empty(tmp_path):
    assert EventLog(str(tmp_path / "none.jsonl")).read() == []


def test_each_record_is_one_line(tmp_path):
    path = tmp_path / "events.jsonl"
    log = EventLog(str(path))
    log.append({"event": "created", "text": "a\nb"})  # newline must be escaped
    log.close()
    raw = path.read_text()
    assert raw.count("\n") == 1
    assert json.loads(raw)["text"] == "a\nb"
