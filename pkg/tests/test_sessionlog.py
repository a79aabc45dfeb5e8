import json

import pytest

from simstudent.config import Config
from simstudent.dialogue import Phase
from simstudent.pretrained import build_engine
from simstudent.service import ServiceRuntime
from simstudent.sessionlog import (
    SessionLogWriter,
    read_log,
    replay_log,
    verify_session_replay,
)


@pytest.fixture()
def runtime(fixed_clock, tmp_path):
    config = Config()
    engine = build_engine(config, clock=fixed_clock)
    return ServiceRuntime(engine, config, tmp_path / "sessions.ndjson")


def run_golden_script(runtime, session_id="golden"):
    runtime.create_session(session_id=session_id)
    runtime.post_utterance(session_id, "What is the scale factor?")
    escalated = runtime.post_utterance(session_id, "zzq qqz zqz")
    runtime.resolve_ticket(escalated["ticket_id"], "sup1", "I think it doubles")
    runtime.submit_survey(session_id, [5, 4, 4, 3, 4, 5], "teacher")


class TestWriter:
    def test_dense_sequences_per_session(self, tmp_path, fixed_clock):
        writer = SessionLogWriter(tmp_path / "log.ndjson")
        assert writer.append("config", "a", {}, fixed_clock()) == 0
        assert writer.append("turn", "a", {}, fixed_clock()) == 1
        assert writer.append("config", "b", {}, fixed_clock()) == 0
        assert writer.append("turn", "a", {}, fixed_clock()) == 2
        writer.close()
        records = read_log(tmp_path / "log.ndjson")
        assert [(r["session"], r["seq"]) for r in records] == [
            ("a", 0),
            ("a", 1),
            ("b", 0),
            ("a", 2),
        ]

    def test_unknown_record_type_rejected(self, tmp_path, fixed_clock):
        writer = SessionLogWriter(tmp_path / "log.ndjson")
        with pytest.raises(ValueError):
            writer.append("banana", "a", {}, fixed_clock())


class TestReadLog:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "log.ndjson"
        path.write_text("")
        assert read_log(path) == []

    def test_truncated_final_line_dropped(self, runtime, tmp_path):
        run_golden_script(runtime)
        path = runtime.log.path
        full = read_log(path)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write('{"v": 1, "type": "turn", "session": "golden", "seq"')
        recovered = read_log(path)
        assert recovered == full

    def test_corrupt_middle_line_raises(self, tmp_path):
        path = tmp_path / "log.ndjson"
        path.write_text('not json\n{"v": 1}\n')
        with pytest.raises(ValueError):
            read_log(path)


class TestReplay:
    def test_empty_log_means_no_sessions(self, tmp_path):
        path = tmp_path / "log.ndjson"
        path.write_text("")
        replayed = replay_log(read_log(path))
        assert replayed.sessions == {}

    def test_three_turn_round_trip(self, runtime):
        runtime.create_session(session_id="s")
        runtime.post_utterance("s", "What is the scale factor?")
        live = runtime.sessions["s"].state
        replayed = replay_log(read_log(runtime.log.path)).sessions["s"].session
        assert len(replayed.turns) == len(live.turns) == 3
        assert replayed.phase is live.phase
        assert [t.text for t in replayed.turns] == [t.text for t in live.turns]
        assert replayed.scenario.left == live.scenario.left

    def test_full_script_round_trip(self, runtime):
        run_golden_script(runtime)
        live = runtime.sessions["golden"].state
        entry = replay_log(read_log(runtime.log.path)).sessions["golden"]
        assert entry.session.phase is Phase.CLOSED
        assert [t.text for t in entry.session.turns] == [t.text for t in live.turns]
        assert entry.survey["answers"] == [5, 4, 4, 3, 4, 5]

    def test_open_ticket_rehydrates(self, runtime):
        runtime.create_session(session_id="s")
        runtime.post_utterance("s", "zzq qqz zqz")
        replayed = replay_log(read_log(runtime.log.path))
        open_tickets = replayed.unresolved_tickets()
        assert len(open_tickets) == 1
        assert replayed.sessions["s"].session.phase is Phase.AWAITING_SUPERVISOR

    def test_gap_in_sequence_rejected(self, runtime):
        run_golden_script(runtime)
        records = read_log(runtime.log.path)
        del records[2]
        with pytest.raises(ValueError):
            replay_log(records)

    def test_verify_detects_divergence(self, runtime):
        run_golden_script(runtime)
        records = read_log(runtime.log.path)
        replayed = replay_log(records)
        assert verify_session_replay(replayed.sessions["golden"]) == []
        # tamper with a stored student reply
        tampered = [json.loads(json.dumps(r)) for r in records]
        for record in tampered:
            if record["type"] == "turn" and record["payload"]["speaker"] == "student":
                record["payload"]["text"] = "something else"
                break
        bad = replay_log(tampered)
        assert verify_session_replay(bad.sessions["golden"])
