"""Teleoperation session core: deterministic sim loop, commands, replay.

The session owns all mutable simulation state and advances on a fixed tick
(default 100 Hz) regardless of when commands arrive; commands are applied
at the next tick boundary in sequence order.  Snapshots are emitted at a
fixed cadence (default 30 Hz).  Everything here is synchronous and
transport-free; the socket server drives it from an event loop, and the
recorder replays a logged session tick-for-tick to the identical stream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .magnetics import ActuatorState, FREQUENCY_MAX
from .locomotion import OutOfWorkspaceError, initial_state, step
from .microrobot import DesignKind, stock_design
from .scene import OffCenterlineEndsError, Scene, SceneKind, load_bundled_scene
from .thermics import (FusConfig, ThermalState, heat_step, make_cap,
                       make_payload_state, thermal_release_step)

SIM_TICK_HZ = 100.0
SNAPSHOT_HZ = 30.0

LOG_MAGIC = "mutum-session-v1"


class MalformedCommandError(ValueError):
    pass


class ReplayError(ValueError):
    pass


COMMANDS = ("set_frequency", "set_heading", "start_rotation", "stop_rotation",
            "trigger_fus", "reset", "load_scene")


def parse_command(data) -> dict:
    """Validate a single decoded command object; raises MalformedCommand."""
    if not isinstance(data, dict):
        raise MalformedCommandError("command must be a JSON object")
    if "seq" not in data or not isinstance(data["seq"], int):
        raise MalformedCommandError("command needs an integer 'seq'")
    cmd = data.get("cmd")
    if cmd not in COMMANDS:
        raise MalformedCommandError(f"unknown command {cmd!r}")
    if cmd == "set_frequency":
        hz = data.get("hz")
        if not isinstance(hz, (int, float)) or not 0.0 <= hz <= FREQUENCY_MAX:
            raise MalformedCommandError(
                f"set_frequency needs 'hz' in [0, {FREQUENCY_MAX}]")
    if cmd == "set_heading":
        if not isinstance(data.get("rad"), (int, float)):
            raise MalformedCommandError("set_heading needs numeric 'rad'")
    if cmd == "trigger_fus":
        dur = data.get("duration", 180.0)
        if not isinstance(dur, (int, float)) or dur <= 0:
            raise MalformedCommandError("trigger_fus needs positive 'duration'")
    if cmd == "load_scene":
        if not isinstance(data.get("name"), str):
            raise MalformedCommandError("load_scene needs a scene 'name'")
    return data


@dataclass(frozen=True)
class Snapshot:
    t: float
    position: tuple[float, float, float]
    tumble_phase: float
    synchronized: bool
    arc_length: float
    temperature_c: float
    released_fraction: float
    frequency: float
    heading: float
    rotating: bool
    dropped: int
    last_acked_seq: int

    def to_json(self) -> str:
        return json.dumps({
            "t": self.t,
            "pos": list(self.position),
            "phase": self.tumble_phase,
            "sync": self.synchronized,
            "arc": self.arc_length,
            "temp_c": self.temperature_c,
            "released": self.released_fraction,
            "freq": self.frequency,
            "heading": self.heading,
            "rotating": self.rotating,
            "dropped": self.dropped,
            "acked": self.last_acked_seq,
        }, separators=(",", ":"))


class Session:
    """One operator session over one scene and one robot design."""

    def __init__(self, scene_name: str = "phantom_rat",
                 design: DesignKind | str = DesignKind.TP,
                 tick_hz: float = SIM_TICK_HZ,
                 snapshot_hz: float = SNAPSHOT_HZ):
        self.scene_name = scene_name
        self.design_kind = DesignKind(design) if not isinstance(design, DesignKind) \
            else design
        self.tick_hz = tick_hz
        self.snapshot_hz = snapshot_hz
        self.dt = 1.0 / tick_hz
        self.dropped_total = 0
        self.last_seq = -1
        self.tick = 0
        self._snapshots_emitted = 0
        self._load(scene_name)

    def _load(self, scene_name: str) -> None:
        self.scene: Scene = load_bundled_scene(scene_name)
        self.scene_name = scene_name
        self.design = stock_design(self.design_kind)
        self.reset()

    def reset(self) -> None:
        """Restore the initial physics state; session time stays monotone."""
        self.frequency = 0.0
        self.heading = 0.0
        self.rotating = False
        self.robot = initial_state(self.scene, self.design)
        self._start_position = self.robot.position.copy()
        self.thermal = ThermalState(T=self.scene.temperature_ambient,
                                    ambient=self.scene.temperature_ambient)
        self.payload = make_payload_state(
            self.design, loaded_mass=3e-7, cap=make_cap(0.6),
            max_release_fraction=0.80)
        self.fus: FusConfig | None = None
        self.fus_started_at = 0.0

    @property
    def t(self) -> float:
        return self.tick * self.dt

    def apply_command(self, data: dict) -> None:
        """Apply one validated command at the current tick boundary."""
        data = parse_command(data)
        seq = data["seq"]
        if seq <= self.last_seq:
            raise MalformedCommandError(
                f"sequence {seq} not after {self.last_seq}")
        self.last_seq = seq
        cmd = data["cmd"]
        if cmd == "set_frequency":
            self.frequency = float(data["hz"])
        elif cmd == "set_heading":
            self.heading = float(data["rad"])
        elif cmd == "start_rotation":
            self.rotating = True
        elif cmd == "stop_rotation":
            self.rotating = False
        elif cmd == "trigger_fus":
            self.fus = FusConfig(duration=float(data.get("duration", 180.0)))
            self.fus_started_at = self.t
        elif cmd == "reset":
            self.reset()
        elif cmd == "load_scene":
            self._load(data["name"])

    def advance(self) -> None:
        """One fixed-dt physics tick."""
        t = self.t
        f = self.frequency if self.rotating else 0.0
        if f > 0.0:
            actuator = ActuatorState(rotation_frequency=f, heading=self.heading)
            try:
                self.robot = step(self.robot, actuator, self.scene,
                                  self.scene.locomotion_params, self.dt,
                                  design=self.design, t=t)
            except (OffCenterlineEndsError, OutOfWorkspaceError):
                # ran out of track: hold position and stop driving
                self.rotating = False
        fus = self.fus
        if fus is not None:
            self.thermal = heat_step(self.thermal, fus, t - self.fus_started_at,
                                     self.dt)
        else:
            self.thermal = heat_step(self.thermal, None, t, self.dt)
        self.payload = thermal_release_step(self.payload, self.thermal.T,
                                            t, self.dt)
        self.tick += 1

    def should_emit_snapshot(self) -> bool:
        """Fixed cadence: emit when a snapshot boundary passed this tick."""
        period = self.tick_hz / self.snapshot_hz
        due = int(self.tick / period)
        return due > self._snapshots_emitted

    def snapshot(self, dropped: int = 0) -> Snapshot:
        self._snapshots_emitted = int(self.tick / (self.tick_hz / self.snapshot_hz))
        if self.scene.kind in (SceneKind.PHANTOM, SceneKind.IN_VIVO):
            arc = self.scene.lumen.project(self.robot.position)
        else:
            d = self.robot.position[:2] - self._start_position[:2]
            arc = float(math.hypot(d[0], d[1]))
        return Snapshot(
            t=self.t,
            position=(float(self.robot.position[0]),
                      float(self.robot.position[1]),
                      float(self.robot.position[2])),
            tumble_phase=self.robot.tumble_phase,
            synchronized=self.robot.synchronized,
            arc_length=arc,
            temperature_c=self.thermal.T,
            released_fraction=self.payload.released_fraction,
            frequency=self.frequency,
            heading=self.heading,
            rotating=self.rotating,
            dropped=dropped,
            last_acked_seq=self.last_seq,
        )


class SessionRecorder:
    """Append-only JSONL log of a session: header, commands, snapshots."""

    def __init__(self, session: Session, path: str | Path):
        self.path = Path(path)
        header = {
            "magic": LOG_MAGIC,
            "scene": session.scene_name,
            "design": session.design_kind.value,
            "tick_hz": session.tick_hz,
            "snapshot_hz": session.snapshot_hz,
        }
        self._fh = self.path.open("w", encoding="utf-8", newline="\n")
        self._fh.write(json.dumps(header, separators=(",", ":")) + "\n")

    def record_command(self, tick: int, data: dict) -> None:
        self._fh.write(json.dumps({"kind": "cmd", "tick": tick, "data": data},
                                  separators=(",", ":")) + "\n")

    def record_snapshot(self, snapshot: Snapshot) -> None:
        self._fh.write('{"kind":"snap","data":' + snapshot.to_json() + "}\n")

    def close(self) -> None:
        self._fh.close()


def run_scripted_session(session: Session, commands: list[tuple[int, dict]],
                         ticks: int,
                         recorder: SessionRecorder | None = None
                         ) -> list[Snapshot]:
    """Drive a session for a fixed number of ticks with tick-stamped commands.

    This is the deterministic core: both the live server and the replayer
    funnel through it, so a replayed log reproduces the snapshot stream
    bit for bit.
    """
    pending = sorted(commands, key=lambda c: (c[0], c[1].get("seq", 0)))
    out: list[Snapshot] = []
    idx = 0
    for _ in range(ticks):
        while idx < len(pending) and pending[idx][0] <= session.tick:
            tick, data = pending[idx]
            session.apply_command(data)
            if recorder is not None:
                recorder.record_command(session.tick, data)
            idx += 1
        session.advance()
        if session.should_emit_snapshot():
            snap = session.snapshot()
            out.append(snap)
            if recorder is not None:
                recorder.record_snapshot(snap)
    return out


def read_log(path: str | Path) -> tuple[dict, list[tuple[int, dict]], list[dict]]:
    """Parse a session log; raises ReplayError naming the offending line."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ReplayError("log is empty (line 1)")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        raise ReplayError("corrupt header (line 1)") from None
    if header.get("magic") != LOG_MAGIC:
        raise ReplayError("not a session log (line 1)")
    commands: list[tuple[int, dict]] = []
    snapshots: list[dict] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError:
            raise ReplayError(f"corrupt entry (line {lineno})") from None
        kind = entry.get("kind")
        if kind == "cmd":
            commands.append((int(entry["tick"]), entry["data"]))
        elif kind == "snap":
            snapshots.append(entry["data"])
        else:
            raise ReplayError(f"unknown entry kind (line {lineno})")
    return header, commands, snapshots


def replay_log(path: str | Path) -> list[Snapshot]:
    """Re-run a recorded session and return the reproduced snapshot stream.

    The command-to-tick assignment in the log fully determines the run;
    the recorded snapshots, if any, are not consulted.
    """
    header, commands, recorded = read_log(path)
    session = Session(scene_name=header["scene"], design=header["design"],
                      tick_hz=header["tick_hz"], snapshot_hz=header["snapshot_hz"])
    if recorded:
        last_t = max(s["t"] for s in recorded)
        ticks = round(last_t * session.tick_hz)
    elif commands:
        ticks = max(t for t, _ in commands) + 1
    else:
        ticks = 0
    return run_scripted_session(session, commands, ticks)


def verify_replay(path: str | Path) -> bool:
    """True when the re-simulated stream matches the recorded one exactly."""
    _, _, recorded = read_log(path)
    replayed = replay_log(path)
    if len(recorded) != len(replayed):
        return False
    return all(json.dumps(r, separators=(",", ":"), sort_keys=True)
               == json.dumps(json.loads(s.to_json()), separators=(",", ":"),
                             sort_keys=True)
               for r, s in zip(recorded, replayed))
