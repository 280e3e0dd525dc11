"""Experiment runners reproducing the characterization panels.

Every runner is deterministic under (config, seed) and writes CSV plus a
sidecar JSON echoing the fully resolved configuration.  CSVs use SI units,
'.' decimals, LF line endings; floats are written with shortest round-trip
precision so identical runs produce byte-identical files.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

from .calibration import calibrate, load_anchors
from .locomotion import incline_ladder, nine_panel_velocity
from .microrobot import (DEFAULT_MAX_RELEASE_FRACTION, DesignKind,
                         MicrorobotDesign, PayloadSpec, design_to_dict,
                         stock_design)
from .scene import Scene, load_bundled_scene, load_scene, scene_to_dict
from .thermics import (FusConfig, PayloadState, ThermalState,
                       default_melt_curve, heat_step, make_cap,
                       make_payload_state, melt_final, melt_onset,
                       sample_supernatant, thermal_release_step)

ALLOWED_FREQUENCIES = (2.0, 3.0, 4.0, 5.0)

FILLED_PAYLOAD = PayloadSpec(solution_name="proxy", concentration=100.0,
                             loaded_volume=3e-9)


class Experiment(enum.Enum):
    VELOCITY_SWEEP = "velocity-sweep"
    INCLINE_LADDER = "incline-ladder"
    MELT_CURVE = "melt-curve"
    RELEASE_SCHEDULE = "release-schedule"
    FUS_PHANTOM = "fus-phantom"
    DESIGN_COMPARISON = "design-comparison"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    scene_path: str | None = None
    design: DesignKind | None = None        # None = all three
    frequencies: tuple[float, ...] = (2.0, 3.0, 4.0, 5.0)
    seed: int = 0
    output_dir: str | Path = "."
    payload: str = "empty"                  # empty | filled | both
    noise_amplitude: float = 0.05
    trial_duration: float = 1.0

    def __post_init__(self) -> None:
        if not set(self.frequencies) <= set(ALLOWED_FREQUENCIES):
            raise ValueError(
                f"frequencies must be a subset of {ALLOWED_FREQUENCIES}")
        if self.payload not in ("empty", "filled", "both"):
            raise ValueError("payload must be empty, filled, or both")

    def resolve_scene(self, default: str) -> Scene:
        if self.scene_path is None:
            return load_bundled_scene(default)
        return load_scene(self.scene_path)

    def designs(self) -> list[MicrorobotDesign]:
        kinds = [self.design] if self.design else list(DesignKind)
        return [stock_design(k) for k in kinds]

    def payload_states(self) -> list[tuple[str, PayloadSpec | None]]:
        return {
            "empty": [("empty", None)],
            "filled": [("filled", FILLED_PAYLOAD)],
            "both": [("empty", None), ("filled", FILLED_PAYLOAD)],
        }[self.payload]


@dataclass(frozen=True)
class ReleaseScheduleSpec:
    """Bath-temperature program: (target C, hold s, sample interval s).

    Segments after the first also collect a sample on arrival at the new
    temperature, mirroring the published sampling protocol.
    """

    segments: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        temps = [seg[0] for seg in self.segments]
        if any(b < a for a, b in zip(temps, temps[1:])):
            raise ValueError("segment temperatures must be non-decreasing")


def default_release_schedule() -> ReleaseScheduleSpec:
    """20 min verification hold at 36 C, then 5 min holds at 38..44 C.

    Sampling: every 5 min during the first hold (4 samples), then one on
    arrival plus one after each 5 min hold (2 x 4), 12 samples total.
    """
    return ReleaseScheduleSpec(segments=(
        (36.0, 1200.0, 300.0),
        (38.0, 300.0, 300.0),
        (40.0, 300.0, 300.0),
        (42.0, 300.0, 300.0),
        (44.0, 300.0, 300.0),
    ))


# --- output helpers ---------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[dict]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(row[col]) for col in header))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_sidecar(path: Path, config: dict) -> None:
    path.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8", newline="\n")


def _resolved_config(cfg: ExperimentConfig, scene: Scene | None,
                     extra: dict | None = None) -> dict:
    out = {
        "experiment": cfg.experiment.value,
        "scene_path": str(cfg.scene_path) if cfg.scene_path else None,
        "design": cfg.design.value if cfg.design else "all",
        "designs": [design_to_dict(d) for d in cfg.designs()],
        "frequencies": list(cfg.frequencies),
        "seed": cfg.seed,
        "payload": cfg.payload,
        "noise_amplitude": cfg.noise_amplitude,
        "trial_duration": cfg.trial_duration,
    }
    if scene is not None:
        out["scene"] = scene_to_dict(scene)
    if extra:
        out.update(extra)
    return out


# --- locomotion panels ------------------------------------------------------

def run_velocity_sweep(cfg: ExperimentConfig, *,
                       default_scene: str = "flat_dry") -> list[dict]:
    """9-panel V_avg statistics per (design, payload, frequency)."""
    scene = cfg.resolve_scene(default_scene)
    rows, raw = [], []
    for design in cfg.designs():
        for payload_name, payload in cfg.payload_states():
            for f in cfg.frequencies:
                panel = nine_panel_velocity(
                    design, scene, f, cfg.seed, payload=payload,
                    noise_amplitude=cfg.noise_amplitude,
                    duration=cfg.trial_duration)
                rows.append({
                    "env": scene.kind.value,
                    "design": design.kind.value,
                    "payload": payload_name,
                    "freq_hz": f,
                    "v_avg_mean": panel.mean,
                    "v_avg_min": panel.min,
                    "v_avg_max": panel.max,
                })
                for i, v in enumerate(panel.velocities):
                    raw.append({
                        "env": scene.kind.value,
                        "design": design.kind.value,
                        "payload": payload_name,
                        "freq_hz": f,
                        "robot": i // 3,
                        "trial": i % 3,
                        "v_avg": v,
                    })
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "velocity_sweep.csv",
              ["env", "design", "payload", "freq_hz",
               "v_avg_mean", "v_avg_min", "v_avg_max"], rows)
    write_csv(out / "velocity_sweep_raw.csv",
              ["env", "design", "payload", "freq_hz", "robot", "trial",
               "v_avg"], raw)
    write_sidecar(out / "velocity_sweep.config.json",
                  _resolved_config(cfg, scene))
    return rows


def run_incline_ladder(cfg: ExperimentConfig, *,
                       default_scene: str = "flat_dry") -> list[dict]:
    """Maximum climbable slope per design on the scene's surface params."""
    scene = cfg.resolve_scene(default_scene)
    rows = []
    for design in cfg.designs():
        theta = incline_ladder(design, scene.locomotion_params)
        rows.append({"design": design.kind.value,
                     "env": scene.kind.value,
                     "theta_max_deg": theta})
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "incline_ladder.csv",
              ["design", "env", "theta_max_deg"], rows)
    write_sidecar(out / "incline_ladder.config.json",
                  _resolved_config(cfg, scene))
    return rows


# --- thermal / release panels -----------------------------------------------

def run_melt_curve(cfg: ExperimentConfig) -> list[dict]:
    """Interpolated initial/final melting points over the oil fractions."""
    curve = default_melt_curve()
    rows = [{"oil_mass_fraction": w / 100.0,
             "onset_c": melt_onset(curve, w / 100.0),
             "final_c": melt_final(curve, w / 100.0)}
            for w in range(0, 85, 5)]
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "melt_curve.csv",
              ["oil_mass_fraction", "onset_c", "final_c"], rows)
    write_sidecar(out / "melt_curve.config.json", _resolved_config(cfg, None))
    return rows


@dataclass(frozen=True)
class ScheduleResult:
    rows: list[dict]
    breach_time: float | None
    breach_bath_c: float | None
    terminal_fraction: float


def simulate_bath_schedule(design: MicrorobotDesign, spec: ReleaseScheduleSpec,
                           *, oil_fraction: float = 0.6,
                           loaded_mass: float = 3e-7,
                           max_release_fraction: float | None = None,
                           dt: float = 1.0) -> ScheduleResult:
    """Drive the payload through a prescribed bath-temperature program.

    The bath steps instantaneously between segment targets (the robot sits
    in a stirred waterbed, so the local node follows the bath directly).
    """
    payload = make_payload_state(design, loaded_mass=loaded_mass,
                                 cap=make_cap(oil_fraction),
                                 max_release_fraction=max_release_fraction)
    rows: list[dict] = []
    t = 0.0
    breach_bath: float | None = None

    for index, (target, hold, interval) in enumerate(spec.segments):
        if index > 0:
            # sample on arrival at the new temperature
            mass, payload = sample_supernatant(payload)
            rows.append({"t": t, "T": target, "sample_mass": mass,
                         "cumulative_fraction": payload.released_fraction})
        next_sample = interval
        elapsed = 0.0
        while elapsed < hold - 1e-9:
            was_breached = payload.breach_time is not None
            payload = thermal_release_step(payload, target, t, dt)
            if payload.breach_time is not None and not was_breached:
                breach_bath = target
            elapsed += dt
            t += dt
            if elapsed >= next_sample - 1e-9:
                mass, payload = sample_supernatant(payload)
                rows.append({"t": t, "T": target, "sample_mass": mass,
                             "cumulative_fraction": payload.released_fraction})
                next_sample += interval
    return ScheduleResult(rows=rows, breach_time=payload.breach_time,
                          breach_bath_c=breach_bath,
                          terminal_fraction=payload.released_fraction)


def run_release_schedule(cfg: ExperimentConfig,
                         spec: ReleaseScheduleSpec | None = None, *,
                         max_release_fraction: float = 0.80) -> ScheduleResult:
    """Fig-7-style stepped bath program on the top-port robot.

    The 100 mg/mL formulation releases about 80% of its load, so that is
    the default terminal fraction here (the per-design catalogue values
    apply to the design-comparison protocol).
    """
    spec = spec or default_release_schedule()
    design = stock_design(cfg.design or DesignKind.TP)
    result = simulate_bath_schedule(design, spec,
                                    max_release_fraction=max_release_fraction)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "release_schedule.csv",
              ["t", "T", "sample_mass", "cumulative_fraction"], result.rows)
    write_sidecar(out / "release_schedule.config.json", _resolved_config(
        cfg, None, {
            "segments": [list(s) for s in spec.segments],
            "max_release_fraction": max_release_fraction,
            "breach_time_s": result.breach_time,
            "breach_bath_c": result.breach_bath_c,
            "terminal_fraction": result.terminal_fraction,
        }))
    return result


def run_design_comparison(cfg: ExperimentConfig) -> list[dict]:
    """Released fraction per design: 10 min at 37 C, then 10 min at 42 C."""
    spec = ReleaseScheduleSpec(segments=((37.0, 600.0, 600.0),
                                         (42.0, 600.0, 600.0)))
    rows = []
    for design in cfg.designs():
        result = simulate_bath_schedule(design, spec, loaded_mass=9e-7)
        rows.append({"design": design.kind.value,
                     "release_fraction": result.terminal_fraction,
                     "f_max": DEFAULT_MAX_RELEASE_FRACTION[design.kind]})
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "design_comparison.csv",
              ["design", "release_fraction", "f_max"], rows)
    write_sidecar(out / "design_comparison.config.json",
                  _resolved_config(cfg, None))
    return rows


# Cap thickness profiles for the focused-ultrasound replicates: a thin coat
# melts through a touch sooner and fails fast, a thick one holds on longer.
FUS_CAP_PROFILES: tuple[tuple[str, float, float], ...] = (
    ("thin", -1.5, 2.0),
    ("default", 0.0, 10.0),
    ("thick", 0.0, 75.0),
)


@dataclass(frozen=True)
class FusReplicate:
    profile: str
    rows: list[dict]
    breach_time: float | None
    initial_release_temp_c: float | None
    final_release_temp_c: float | None
    released_fraction: float
    peak_temp_c: float
    time_to_42c: float | None


def run_fus_phantom(cfg: ExperimentConfig, *, fus: FusConfig | None = None,
                    sim_duration: float = 240.0, dt: float = 0.1,
                    thermal: ThermalState | None = None) -> list[FusReplicate]:
    """Focused-ultrasound heating and release in the phantom lumen.

    Three replicates share the thermal trace and differ in their wax-cap
    profile.  The summary reports, per replicate, the temperature at first
    release and the hottest temperature reached while releasing (release
    trails off asymptotically, so the peak marks its observed end).
    """
    scene = cfg.resolve_scene("phantom_rat")
    fus = fus or FusConfig()
    ambient = scene.temperature_ambient
    design = stock_design(cfg.design or DesignKind.TP)

    replicates = []
    for profile, onset_offset, decay_tc in FUS_CAP_PROFILES:
        state = thermal or ThermalState(T=ambient, ambient=ambient)
        cap = make_cap(0.6, onset_offset=onset_offset,
                       decay_time_constant=decay_tc)
        payload = make_payload_state(design, loaded_mass=3e-7, cap=cap,
                                     max_release_fraction=0.80)
        rows = []
        t = 0.0
        initial_temp = None
        peak = state.T
        time_to_42 = None
        n = round(sim_duration / dt)
        for i in range(n):
            state = heat_step(state, fus, t, dt)
            t = (i + 1) * dt
            was_breached = payload.breach_time is not None
            payload = thermal_release_step(payload, state.T, t - dt, dt)
            if payload.breach_time is not None and not was_breached:
                initial_temp = state.T
            peak = max(peak, state.T)
            if time_to_42 is None and state.T >= 41.5:
                time_to_42 = t
            rows.append({"t": t, "temp_c": state.T,
                         "released_fraction": payload.released_fraction})
        # release keeps crawling through the cooldown; the observed end of
        # release is the hottest point reached once the cap is open
        final_temp = None
        if payload.breach_time is not None:
            final_temp = max(row["temp_c"] for row in rows
                             if row["t"] >= payload.breach_time)
        replicates.append(FusReplicate(
            profile=profile, rows=rows, breach_time=payload.breach_time,
            initial_release_temp_c=initial_temp,
            final_release_temp_c=final_temp,
            released_fraction=payload.released_fraction,
            peak_temp_c=peak, time_to_42c=time_to_42))

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rep in replicates:
        write_csv(out / f"fus_phantom_{rep.profile}.csv",
                  ["t", "temp_c", "released_fraction"], rep.rows)
    summary = {
        rep.profile: {
            "breach_time_s": rep.breach_time,
            "initial_release_temp_c": rep.initial_release_temp_c,
            "final_release_temp_c": rep.final_release_temp_c,
            "released_fraction": rep.released_fraction,
            "peak_temp_c": rep.peak_temp_c,
            "time_to_42c_s": rep.time_to_42c,
        } for rep in replicates
    }
    write_sidecar(out / "fus_phantom_summary.json", summary)
    write_sidecar(out / "fus_phantom.config.json", _resolved_config(
        cfg, scene, {
            "fus": {
                "electrical_power_w": fus.electrical_power,
                "frequency_hz": fus.frequency,
                "burst_length_s": fus.burst_length,
                "period_s": fus.period,
                "duration_s": fus.duration,
                "absorbed_fraction": fus.absorbed_fraction,
            },
            "sim_duration_s": sim_duration,
            "dt_s": dt,
            "cap_profiles": [list(p) for p in FUS_CAP_PROFILES],
        }))
    return replicates


def run_calibration(anchors_path: str | Path | None,
                    output_dir: str | Path) -> dict:
    """Calibrate against anchors and write the parameter file."""
    result = calibrate(load_anchors(anchors_path))
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_sidecar(out / "calibration.json", result)
    return result


def run_experiment(cfg: ExperimentConfig) -> None:
    runner = {
        Experiment.VELOCITY_SWEEP: run_velocity_sweep,
        Experiment.INCLINE_LADDER: run_incline_ladder,
        Experiment.MELT_CURVE: run_melt_curve,
        Experiment.RELEASE_SCHEDULE: run_release_schedule,
        Experiment.FUS_PHANTOM: run_fus_phantom,
        Experiment.DESIGN_COMPARISON: run_design_comparison,
    }[cfg.experiment]
    runner(cfg)
