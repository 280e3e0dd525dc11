"""Edge-pivot tumbling locomotion driven by the rotating field.

Quasi-static, fixed-timestep kinematics: the millimeter robot at <= 5 Hz
has negligible inertia, so each step resolves a torque balance instead of
integrating Newton-Euler dynamics.  While the robot tracks the field its
tumble phase advances with the field phase and the footprint walks forward
by slip * (distance-per-revolution / 2 pi) per radian; when the gravity
torque about the pivot edge exceeds the available magnetic torque |m||B|
the robot steps out and oscillates in place.

The pivot-torque model abstracts the center of mass to a point at the
cross-section half-diagonal from the pivot edge, with lever arm
rho * |sin(tumble_phase + incline)|: zero when balanced over the edge,
worst case the full half-diagonal.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .magnetics import ActuatorState
from .microrobot import (MicrorobotDesign, PayloadSpec, distance_per_revolution,
                         robot_weight)
from .scene import (LocomotionParams, OffCenterlineEndsError, Scene, SceneKind,
                    floor_at_arc, incline_surface)

__all__ = [
    "Contact", "RobotState", "Trajectory", "LocomotionParams",
    "InvalidTimestepError", "OutOfWorkspaceError", "NoContactError",
    "TooFewSamplesError", "step", "required_pivot_torque", "climb_feasible",
    "average_velocity", "simulate_run", "nine_panel_velocity", "incline_ladder",
    "initial_state", "trajectory_rows", "write_trajectory_csv",
    "WORKSPACE_RADIUS", "DEFAULT_DT",
]

WORKSPACE_RADIUS: float = 37.5e-3   # 75 mm actuation stage diameter
DEFAULT_DT: float = 1e-3            # >= 200 steps per revolution at 5 Hz
MAX_DT: float = 1e-2

_CONTACT_TOL = 1e-9


class InvalidTimestepError(ValueError):
    pass


class OutOfWorkspaceError(RuntimeError):
    pass


class NoContactError(RuntimeError):
    pass


class TooFewSamplesError(ValueError):
    pass


class Contact(enum.Enum):
    FACE_L = "face_l"      # resting on the long face
    FACE_H = "face_h"      # resting on the short face
    PIVOTING = "pivoting"
    FREE = "free"


@dataclass(frozen=True)
class RobotState:
    """Pose and tumbling condition of the robot center."""

    position: NDArray[np.floating]
    orientation: NDArray[np.floating]   # unit quaternion, w x y z
    tumble_phase: float = 0.0
    contact: Contact = Contact.FACE_L
    synchronized: bool = True

    def __post_init__(self) -> None:
        p = np.asarray(self.position, dtype=np.float64)
        q = np.asarray(self.orientation, dtype=np.float64)
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", q)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ValueError("orientation quaternion must be normalized")


@dataclass(frozen=True)
class Trajectory:
    """Fixed-rate samples of (t, state)."""

    samples: list[tuple[float, RobotState]]
    dt: float

    def __post_init__(self) -> None:
        ts = [t for t, _ in self.samples]
        for a, b in zip(ts, ts[1:]):
            if not (b > a and abs((b - a) - self.dt) <= 1e-9):
                raise ValueError("samples must be evenly spaced by dt")


def _quat_mul(a: NDArray, b: NDArray) -> NDArray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def _orientation(heading: float, tumble_phase: float) -> NDArray:
    """Yaw to the heading, then tumble about the horizontal pivot axis."""
    axis_yaw = np.array([math.cos(heading / 2), 0.0, 0.0, math.sin(heading / 2)])
    c, s = math.cos(tumble_phase / 2), math.sin(tumble_phase / 2)
    # pivot axis = z x heading
    ax, ay = -math.sin(heading), math.cos(heading)
    q = _quat_mul(np.array([c, s * ax, s * ay, 0.0]), axis_yaw)
    return q / np.linalg.norm(q)


def _center_height(design: MicrorobotDesign, tumble_phase: float) -> float:
    """Support height of the cross-section center above the surface."""
    alpha = math.atan2(design.height, design.length)
    rho = design.half_diagonal
    base = (alpha, math.pi - alpha, math.pi + alpha, -alpha)
    return rho * max(-math.sin(a - tumble_phase) for a in base)


def _classify_contact(tumble_phase: float) -> Contact:
    m = math.fmod(tumble_phase, math.pi)
    if m < 0:
        m += math.pi
    if m < _CONTACT_TOL or math.pi - m < _CONTACT_TOL:
        return Contact.FACE_L
    if abs(m - math.pi / 2) < _CONTACT_TOL:
        return Contact.FACE_H
    return Contact.PIVOTING


def _max_abs_sin(a: float, b: float) -> float:
    """max |sin| over [a, b] for b - a < pi."""
    k_lo = math.ceil((a - math.pi / 2) / math.pi)
    k_hi = math.floor((b - math.pi / 2) / math.pi)
    if k_hi >= k_lo:
        return 1.0
    return max(abs(math.sin(a)), abs(math.sin(b)))


def _incline_angle(scene: Scene) -> float:
    return scene.incline_angle if scene.kind is SceneKind.INCLINE else 0.0


def initial_state(scene: Scene, design: MicrorobotDesign,
                  position_xy: tuple[float, float] = (-0.03, 0.0),
                  heading: float = 0.0,
                  arc: float | None = None) -> RobotState:
    """Robot lying flat at the start of a run.

    Flat and incline scenes place the robot by in-plane position; lumen
    scenes place it by arc length along the centerline (default 5 mm in).
    """
    z0 = _center_height(design, 0.0)
    if scene.kind in (SceneKind.PHANTOM, SceneKind.IN_VIVO):
        s = 5e-3 if arc is None else arc
        floor, normal = floor_at_arc(scene.lumen, s)
        pos = floor + z0 * normal
    elif scene.kind is SceneKind.INCLINE:
        surf = incline_surface(scene.incline_angle)
        d = position_xy[0]
        pos = d * surf.upslope + z0 * surf.normal
    else:
        pos = np.array([position_xy[0], position_xy[1], z0])
    return RobotState(position=pos, orientation=_orientation(heading, 0.0))


def required_pivot_torque(state: RobotState, scene: Scene,
                          design: MicrorobotDesign,
                          payload: PayloadSpec | None = None) -> float:
    """Gravity torque opposing the current edge pivot (N*m)."""
    if state.contact is Contact.FREE:
        raise NoContactError("robot is not in contact with a surface")
    W = robot_weight(design, payload)
    lever = design.half_diagonal * abs(
        math.sin(state.tumble_phase + _incline_angle(scene)))
    return W * lever


def _required_torque_max(design: MicrorobotDesign, payload: PayloadSpec | None,
                         scene: Scene, phase_from: float, phase_to: float) -> float:
    W = robot_weight(design, payload)
    theta = _incline_angle(scene)
    return W * design.half_diagonal * _max_abs_sin(phase_from + theta,
                                                   phase_to + theta)


def step(state: RobotState, actuator: ActuatorState, scene: Scene,
         params: LocomotionParams, dt: float, *,
         design: MicrorobotDesign, payload: PayloadSpec | None = None,
         t: float = 0.0, slip: float | None = None) -> RobotState:
    """Advance the tumbling kinematics by one timestep.

    ``slip`` overrides the scene's interpolated slip factor (the trial
    runner uses it to apply per-pivot perturbations).  ``t`` is the
    absolute time at the start of the step, used for the field phase.
    """
    if not 0.0 < dt <= MAX_DT:
        raise InvalidTimestepError(f"dt must be in (0, {MAX_DT}] s")
    f = actuator.rotation_frequency
    if f == 0.0:
        return state

    dphi = 2.0 * math.pi * f * dt
    available = design.magnet.moment * actuator.field_magnitude_at_workspace
    if state.synchronized:
        # desynchronize only on a torque deficit within this step's window
        phase_to = state.tumble_phase + dphi
    else:
        # catching back up means pivoting over the gravity hump ahead
        phase_to = state.tumble_phase + math.pi / 2.0
    required = _required_torque_max(design, payload, scene,
                                    state.tumble_phase, phase_to)

    heading = actuator.heading
    if available >= required:
        phase_new = state.tumble_phase + dphi
        s_eff = params.slip_at(f) if slip is None else slip
        advance = s_eff * distance_per_revolution(design) / (2.0 * math.pi) * dphi
        synchronized = True
    else:
        # stepped out: wobble in place, no net advance
        amp = 0.1
        phase_new = state.tumble_phase + amp * (
            math.sin(actuator.field_phase(t + dt)) - math.sin(actuator.field_phase(t)))
        advance = 0.0
        synchronized = False

    z_c = _center_height(design, phase_new)

    if scene.kind in (SceneKind.PHANTOM, SceneKind.IN_VIVO):
        lumen = scene.lumen
        s_arc = lumen.project(state.position)
        tangent = lumen.tangent_at_arc(s_arc)
        h_dir = np.array([math.cos(heading), math.sin(heading), 0.0])
        s_arc += advance * float(h_dir @ tangent)
        if not 0.0 <= s_arc <= lumen.total_length:
            raise OffCenterlineEndsError("robot reached the end of the lumen")
        floor, normal = floor_at_arc(lumen, s_arc)
        position = floor + z_c * normal
    elif scene.kind is SceneKind.INCLINE:
        surf = incline_surface(scene.incline_angle)
        cross = np.array([0.0, 1.0, 0.0])
        d_along = float(state.position @ surf.upslope)
        d_cross = float(state.position @ cross)
        d_along += advance * math.cos(heading)
        d_cross += advance * math.sin(heading)
        position = d_along * surf.upslope + d_cross * cross + z_c * surf.normal
    else:
        position = state.position.copy()
        position[0] += advance * math.cos(heading)
        position[1] += advance * math.sin(heading)
        position[2] = z_c

    if math.hypot(position[0], position[1]) > WORKSPACE_RADIUS:
        raise OutOfWorkspaceError("robot left the 75 mm workspace disk")

    return RobotState(
        position=position,
        orientation=_orientation(heading, phase_new),
        tumble_phase=phase_new,
        contact=_classify_contact(phase_new),
        synchronized=synchronized,
    )


def climb_feasible(incline_angle: float, params: LocomotionParams,
                   design: MicrorobotDesign) -> bool:
    """No-slip pivot condition on a gelatin incline.

    Coulomb friction plus a constant adhesion stress over the nominal
    contact face: tan(theta) <= mu + adhesion * A / W.
    """
    deg = math.degrees(incline_angle)
    if not 0.0 <= deg <= 60.0 + 1e-9:
        raise ValueError("incline angle must be in [0, 60] degrees")
    area = design.length * design.width
    W = robot_weight(design)
    hold = params.friction_mu + params.adhesion_pa * area / W
    return math.tan(incline_angle) <= hold + 1e-12


def average_velocity(traj: Trajectory) -> float:
    """Net horizontal displacement over elapsed time (m/s)."""
    if len(traj.samples) < 2:
        raise TooFewSamplesError("need at least two trajectory samples")
    t0, s0 = traj.samples[0]
    t1, s1 = traj.samples[-1]
    d = s1.position[:2] - s0.position[:2]
    return float(np.hypot(d[0], d[1])) / (t1 - t0)


def simulate_run(scene: Scene, design: MicrorobotDesign, *,
                 frequency: float, payload: PayloadSpec | None = None,
                 heading: float = 0.0, field_magnitude: float = 0.020,
                 duration: float = 1.0, dt: float = DEFAULT_DT,
                 start: RobotState | None = None,
                 noise_amplitude: float = 0.0,
                 rng: np.random.Generator | None = None) -> Trajectory:
    """Run a constant-frequency trial and return the sampled trajectory.

    With a nonzero ``noise_amplitude`` each quarter-turn pivot draws a
    multiplicative slip perturbation from ``rng`` (clamped so the no-slip
    bound is never violated).
    """
    actuator = ActuatorState(rotation_frequency=frequency, heading=heading,
                             field_magnitude_at_workspace=field_magnitude)
    state = initial_state(scene, design, heading=heading) if start is None else start
    base_slip = scene.locomotion_params.slip_at(frequency)

    def draw_slip() -> float:
        if noise_amplitude == 0.0 or rng is None:
            return base_slip
        factor = 1.0 + noise_amplitude * rng.uniform(-1.0, 1.0)
        return min(max(base_slip * factor, 0.0), 1.0)

    slip = draw_slip()
    pivot_index = int(state.tumble_phase // (math.pi / 2))
    samples = [(0.0, state)]
    n_steps = round(duration / dt)
    for i in range(n_steps):
        state = step(state, actuator, scene, scene.locomotion_params, dt,
                     design=design, payload=payload, t=i * dt, slip=slip)
        new_pivot = int(state.tumble_phase // (math.pi / 2))
        if new_pivot != pivot_index:
            pivot_index = new_pivot
            slip = draw_slip()
        samples.append(((i + 1) * dt, state))
    return Trajectory(samples=samples, dt=dt)


@dataclass(frozen=True)
class PanelResult:
    """Velocity statistics over the 3 robots x 3 trials panel."""

    mean: float
    min: float
    max: float
    velocities: tuple[float, ...]


def nine_panel_velocity(design: MicrorobotDesign, scene: Scene, frequency: float,
                        rng_seed: int, *, payload: PayloadSpec | None = None,
                        noise_amplitude: float = 0.05, duration: float = 1.0,
                        dt: float = DEFAULT_DT) -> PanelResult:
    """Mean/min/max of V_avg over 3 robots x 3 repeat trials.

    Trial seeds depend only on (seed, robot, trial), so the same pivot
    perturbations apply across designs, payload states, and environments;
    differences between those configurations are then purely physical.
    """
    velocities = []
    for robot in range(3):
        for trial in range(3):
            rng = np.random.default_rng(
                np.random.SeedSequence([rng_seed, robot, trial]))
            traj = simulate_run(scene, design, frequency=frequency,
                                payload=payload, duration=duration, dt=dt,
                                noise_amplitude=noise_amplitude, rng=rng)
            velocities.append(average_velocity(traj))
    return PanelResult(mean=float(np.mean(velocities)),
                       min=float(np.min(velocities)),
                       max=float(np.max(velocities)),
                       velocities=tuple(velocities))


def incline_ladder(design: MicrorobotDesign, params: LocomotionParams,
                   frequency: float = 5.0, *, climb_distance: float = 10e-3,
                   dt: float = DEFAULT_DT) -> float:
    """Largest climbable incline in degrees, by 5-degree pass/fail steps.

    A rung passes when the no-slip condition holds and a simulated climb
    covers the test distance; the first failure ends the ladder.
    """
    theta_max = 0.0
    for deg in range(0, 65, 5):
        angle = math.radians(deg)
        if not climb_feasible(angle, params, design):
            break
        scene = Scene(kind=SceneKind.INCLINE, incline_angle=angle,
                      locomotion_params=params)
        slip = params.slip_at(frequency)
        if slip <= 0.0:
            break
        ideal_v = slip * distance_per_revolution(design) * frequency
        duration = 1.5 * climb_distance / ideal_v
        duration = math.ceil(duration / dt) * dt
        start = initial_state(scene, design, position_xy=(0.0, 0.0))
        traj = simulate_run(scene, design, frequency=frequency, dt=dt,
                            duration=duration, start=start)
        climbed = float(traj.samples[-1][1].position @ incline_surface(angle).upslope)
        if climbed < climb_distance:
            break
        theta_max = float(deg)
    return theta_max


def trajectory_rows(traj: Trajectory) -> list[dict]:
    rows = []
    for t, s in traj.samples:
        rows.append({
            "t": t,
            "x": float(s.position[0]), "y": float(s.position[1]),
            "z": float(s.position[2]),
            "qw": float(s.orientation[0]), "qx": float(s.orientation[1]),
            "qy": float(s.orientation[2]), "qz": float(s.orientation[3]),
            "phase": s.tumble_phase,
            "synchronized": s.synchronized,
        })
    return rows


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    """CSV export: t,x,y,z,qw,qx,qy,qz,phase,synchronized (SI units, LF)."""
    lines = ["t,x,y,z,qw,qx,qy,qz,phase,synchronized"]
    for row in trajectory_rows(traj):
        lines.append(",".join([
            repr(row["t"]), repr(row["x"]), repr(row["y"]), repr(row["z"]),
            repr(row["qw"]), repr(row["qx"]), repr(row["qy"]), repr(row["qz"]),
            repr(row["phase"]), "true" if row["synchronized"] else "false",
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
