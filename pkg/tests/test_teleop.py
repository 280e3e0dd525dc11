import json
import math

import pytest

from mutum_sim.teleop import (MalformedCommandError, ReplayError, Session,
                              SessionRecorder, parse_command, read_log,
                              replay_log, run_scripted_session, verify_replay)


def make_session(**kw):
    return Session(scene_name="phantom_rat", design="tp", **kw)


class TestCommands:
    def test_known_commands_parse(self):
        parse_command({"seq": 1, "cmd": "set_frequency", "hz": 3.0})
        parse_command({"seq": 2, "cmd": "set_heading", "rad": 1.57})
        parse_command({"seq": 3, "cmd": "start_rotation"})
        parse_command({"seq": 4, "cmd": "trigger_fus", "duration": 180})
        parse_command({"seq": 5, "cmd": "load_scene", "name": "flat_dry"})

    def test_malformed_commands_rejected(self):
        for bad in (
            "not a dict",
            {"cmd": "start_rotation"},                       # no seq
            {"seq": 1, "cmd": "warp_drive"},                 # unknown
            {"seq": 1, "cmd": "set_frequency", "hz": 9.0},   # over limit
            {"seq": 1, "cmd": "set_frequency"},              # missing arg
            {"seq": 1, "cmd": "trigger_fus", "duration": -5},
        ):
            with pytest.raises(MalformedCommandError):
                parse_command(bad)

    def test_sequence_numbers_strictly_increase(self):
        session = make_session()
        session.apply_command({"seq": 1, "cmd": "start_rotation"})
        with pytest.raises(MalformedCommandError):
            session.apply_command({"seq": 1, "cmd": "stop_rotation"})
        session.apply_command({"seq": 5, "cmd": "stop_rotation"})
        assert session.last_seq == 5


class TestSessionLoop:
    def test_idle_session_emits_thirty_snapshots_per_second(self):
        session = make_session()
        snaps = run_scripted_session(session, [], ticks=100)
        assert len(snaps) == 30
        assert all(not s.rotating for s in snaps)
        first = snaps[0]
        assert snaps[-1].position == first.position

    def test_snapshot_time_monotone_with_bounded_jitter(self):
        session = make_session()
        snaps = run_scripted_session(session, [], ticks=300)
        ts = [s.t for s in snaps]
        assert all(b > a for a, b in zip(ts, ts[1:]))
        gaps = [b - a for a, b in zip(ts, ts[1:])]
        expected = 1.0 / session.snapshot_hz
        assert all(abs(g - expected) <= session.dt + 1e-12 for g in gaps)

    def test_drive_advances_arc_by_slip_model(self):
        # 2 s at 3 Hz in the phantom: arc gain = 0.8 * 8.8 mm * 3 * 2
        session = make_session()
        cmds = [(0, {"seq": 1, "cmd": "set_frequency", "hz": 3.0}),
                (0, {"seq": 2, "cmd": "start_rotation"})]
        snaps = run_scripted_session(session, cmds, ticks=200)
        gained = snaps[-1].arc_length - 5e-3
        assert gained == pytest.approx(0.8 * 8.8e-3 * 3.0 * 2.0, rel=1e-9)

    def test_commands_apply_at_tick_boundaries(self):
        session = make_session()
        cmds = [(0, {"seq": 1, "cmd": "set_frequency", "hz": 2.0}),
                (0, {"seq": 2, "cmd": "start_rotation"}),
                (100, {"seq": 3, "cmd": "stop_rotation"})]
        snaps = run_scripted_session(session, cmds, ticks=200)
        arc_at_1s = next(s.arc_length for s in snaps if s.t >= 1.0)
        assert snaps[-1].arc_length == pytest.approx(arc_at_1s, abs=1e-12)

    def test_fus_trigger_heats_and_releases_above_37(self):
        session = make_session()
        cmds = [(0, {"seq": 1, "cmd": "trigger_fus", "duration": 180.0})]
        snaps = run_scripted_session(session, cmds, ticks=10000)  # 100 s
        assert snaps[-1].temperature_c > 40.0
        first_release = next(s for s in snaps if s.released_fraction > 0)
        assert first_release.temperature_c > 37.0

    def test_reset_restores_pose_and_keeps_time_monotone(self):
        session = make_session()
        cmds = [(0, {"seq": 1, "cmd": "set_frequency", "hz": 3.0}),
                (0, {"seq": 2, "cmd": "start_rotation"}),
                (150, {"seq": 3, "cmd": "reset"})]
        snaps = run_scripted_session(session, cmds, ticks=300)
        assert snaps[-1].arc_length == pytest.approx(5e-3, abs=1e-12)
        ts = [s.t for s in snaps]
        assert all(b > a for a, b in zip(ts, ts[1:]))

    def test_acked_sequence_reported(self):
        session = make_session()
        cmds = [(0, {"seq": 7, "cmd": "set_heading", "rad": 0.5})]
        snaps = run_scripted_session(session, cmds, ticks=10)
        assert snaps[-1].last_acked_seq == 7


class TestRecordReplay:
    def scripted(self, tmp_path, ticks=500):
        session = make_session()
        recorder = SessionRecorder(session, tmp_path / "session.log")
        cmds = [(0, {"seq": 1, "cmd": "set_frequency", "hz": 3.0}),
                (0, {"seq": 2, "cmd": "start_rotation"}),
                (250, {"seq": 3, "cmd": "set_heading", "rad": 0.0}),
                (300, {"seq": 4, "cmd": "trigger_fus", "duration": 60.0})]
        snaps = run_scripted_session(session, cmds, ticks=ticks,
                                     recorder=recorder)
        recorder.close()
        return tmp_path / "session.log", snaps

    def test_replay_reproduces_stream_bit_exactly(self, tmp_path):
        log, live = self.scripted(tmp_path)
        replayed = replay_log(log)
        assert len(replayed) == len(live)
        assert [s.to_json() for s in replayed] == [s.to_json() for s in live]
        assert verify_replay(log)

    def test_replay_final_pose_bit_exact(self, tmp_path):
        log, live = self.scripted(tmp_path, ticks=1000)  # 10 s
        replayed = replay_log(log)
        assert replayed[-1].position == live[-1].position
        assert replayed[-1].tumble_phase == live[-1].tumble_phase

    def test_empty_session_log_replays(self, tmp_path):
        session = make_session()
        recorder = SessionRecorder(session, tmp_path / "empty.log")
        recorder.close()
        assert replay_log(tmp_path / "empty.log") == []

    def test_corrupt_line_names_line_number(self, tmp_path):
        log, _ = self.scripted(tmp_path, ticks=100)
        lines = log.read_text().splitlines()
        lines[3] = "{this is not json"
        log.write_text("\n".join(lines) + "\n")
        with pytest.raises(ReplayError) as err:
            read_log(log)
        assert "line 4" in str(err.value)

    def test_non_log_file_rejected(self, tmp_path):
        p = tmp_path / "other.json"
        p.write_text('{"kind": "something"}\n')
        with pytest.raises(ReplayError):
            read_log(p)


class TestSnapshotJson:
    def test_wire_schema_fields(self):
        session = make_session()
        snap = session.snapshot()
        data = json.loads(snap.to_json())
        assert set(data) == {"t", "pos", "phase", "sync", "arc", "temp_c",
                             "released", "freq", "heading", "rotating",
                             "dropped", "acked"}
        assert isinstance(data["pos"], list) and len(data["pos"]) == 3
        assert data["sync"] is True
        assert data["arc"] == pytest.approx(5e-3)
