"""Deterministic grid-search calibration against the published anchors.

Free parameters are pinned by pass/fail anchors (maximum climbable slopes)
and time-temperature anchors (focused-ultrasound heating).  Grids have a
fixed, documented resolution and are scanned in a fixed order, so the
result is reproducible; feasible candidates are ranked by their worst-case
margin against the anchors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .microrobot import MicrorobotDesign, robot_weight, stock_design
from .scene import LocomotionParams
from .thermics import FusConfig, ThermalState, heat_step

# Grid resolutions
MU_GRID = (0.0, 1.5, 0.005)          # Coulomb friction coefficient
ADHESION_GRID = (0.0, 10.0, 0.1)     # Pa over the nominal contact face
TAU_GRID = (20.0, 80.0, 1.0)         # thermal time constant C/G, seconds
ABSORBED_GRID = (0.05, 0.40, 0.002)  # absorbed fraction of electrical power
FIXED_CONDUCTANCE = 0.05             # W/C; anchors constrain only tau and P/G


class CalibrationInfeasibleError(RuntimeError):
    """No grid point satisfies every anchor; message lists the violations."""


@dataclass(frozen=True)
class InclineAnchors:
    """Largest slope that must pass and the next rung that must fail."""

    environment: str
    pass_deg: float
    fail_deg: float


@dataclass(frozen=True)
class ThermalCheck:
    """One time-temperature anchor: a floor or a target with tolerance."""

    t_s: float
    min_c: float | None = None
    target_c: float | None = None
    tol_c: float = 0.5


@dataclass(frozen=True)
class ThermalAnchors:
    ambient_c: float
    checks: tuple[ThermalCheck, ...]


def default_incline_anchors() -> list[InclineAnchors]:
    return [InclineAnchors("dry", 20.0, 25.0),
            InclineAnchors("wet", 50.0, 55.0)]


def default_thermal_anchors() -> ThermalAnchors:
    return ThermalAnchors(ambient_c=36.0, checks=(
        ThermalCheck(t_s=90.0, min_c=40.9),
        ThermalCheck(t_s=210.0, target_c=42.0, tol_c=0.5),
    ))


def _grid(lo: float, hi: float, step: float):
    n = int(round((hi - lo) / step))
    return (lo + i * step for i in range(n + 1))


def calibrate_incline(anchors: InclineAnchors,
                      design: MicrorobotDesign | None = None
                      ) -> tuple[float, float]:
    """(mu, adhesion_pa) satisfying pass-at/fail-above for one environment.

    The hold value mu + adhesion * A / W must sit between tan(pass) and
    tan(fail); among feasible grid points the most centered one wins.
    """
    design = design or stock_design("tp")
    area = design.length * design.width
    W = robot_weight(design)
    lo = math.tan(math.radians(anchors.pass_deg))
    hi = math.tan(math.radians(anchors.fail_deg))
    if hi <= lo:
        raise CalibrationInfeasibleError(
            f"incline anchors for {anchors.environment!r} are contradictory: "
            f"pass at {anchors.pass_deg} deg requires hold >= {lo:.4f} but "
            f"fail at {anchors.fail_deg} deg requires hold < {hi:.4f}")

    best, best_margin = None, -math.inf
    for mu in _grid(*MU_GRID):
        for adhesion in _grid(*ADHESION_GRID):
            hold = mu + adhesion * area / W
            margin = min(hold - lo, hi - hold)
            if margin >= 0 and margin > best_margin:
                best, best_margin = (mu, adhesion), margin
    if best is None:
        raise CalibrationInfeasibleError(
            f"no (mu, adhesion) grid point holds {anchors.pass_deg} deg and "
            f"fails {anchors.fail_deg} deg for {anchors.environment!r}")
    return best


def _thermal_trace(tau: float, absorbed: float, ambient: float,
                   times: list[float]) -> list[float]:
    fus = FusConfig(duration=max(times) + 1.0, absorbed_fraction=absorbed)
    state = ThermalState(T=ambient, ambient=ambient,
                         capacitance=tau * FIXED_CONDUCTANCE,
                         conductance=FIXED_CONDUCTANCE)
    out, t_prev = [], 0.0
    for t in sorted(times):
        state = heat_step(state, fus, t_prev, t - t_prev)
        out.append(state.T)
        t_prev = t
    order = {t: i for i, t in enumerate(sorted(times))}
    return [out[order[t]] for t in times]


def calibrate_thermal(anchors: ThermalAnchors) -> tuple[float, float, float]:
    """(capacitance, conductance, absorbed_fraction) meeting every check.

    The insonation is taken as continuous through the last anchor time;
    conductance is fixed (the anchors constrain only the time constant and
    the steady-state rise), leaving a two-parameter grid.
    """
    times = [c.t_s for c in anchors.checks]
    best, best_margin = None, -math.inf
    for tau in _grid(*TAU_GRID):
        for absorbed in _grid(*ABSORBED_GRID):
            temps = _thermal_trace(tau, absorbed, anchors.ambient_c, times)
            margin = math.inf
            for check, T in zip(anchors.checks, temps):
                if check.min_c is not None:
                    margin = min(margin, T - check.min_c)
                if check.target_c is not None:
                    margin = min(margin, check.tol_c - abs(T - check.target_c))
            if margin >= 0 and margin > best_margin:
                best, best_margin = (tau, absorbed), margin
    if best is None:
        failures = []
        for check in anchors.checks:
            if check.min_c is not None:
                failures.append(f"T({check.t_s:g} s) >= {check.min_c:g} C")
            if check.target_c is not None:
                failures.append(
                    f"T({check.t_s:g} s) = {check.target_c:g} +/- {check.tol_c:g} C")
        raise CalibrationInfeasibleError(
            "no (tau, absorbed_fraction) grid point satisfies: "
            + "; ".join(failures))
    tau, absorbed = best
    return tau * FIXED_CONDUCTANCE, FIXED_CONDUCTANCE, absorbed


def load_anchors(path: str | Path | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def calibrate(anchors: dict | None = None) -> dict:
    """Run every calibration and return the parameter sets as one dict.

    ``anchors`` may override the built-in defaults; unknown environments
    are calibrated with the same grids.
    """
    anchors = anchors or {}
    incline_defs = {a.environment: a for a in default_incline_anchors()}
    for env, spec in anchors.get("incline", {}).items():
        incline_defs[env] = InclineAnchors(env, float(spec["pass_deg"]),
                                           float(spec["fail_deg"]))
    thermal_def = default_thermal_anchors()
    if "thermal" in anchors:
        spec = anchors["thermal"]
        checks = tuple(
            ThermalCheck(t_s=float(c["t_s"]),
                         min_c=float(c["min_c"]) if "min_c" in c else None,
                         target_c=float(c["target_c"]) if "target_c" in c else None,
                         tol_c=float(c.get("tol_c", 0.5)))
            for c in spec.get("checks", []))
        thermal_def = ThermalAnchors(
            ambient_c=float(spec.get("ambient_c", 36.0)),
            checks=checks or thermal_def.checks)

    result: dict = {"incline": {}, "thermal": {}}
    for env, spec in sorted(incline_defs.items()):
        mu, adhesion = calibrate_incline(spec)
        result["incline"][env] = {"mu": mu, "adhesion_pa": adhesion}
    C, G, absorbed = calibrate_thermal(thermal_def)
    result["thermal"] = {"capacitance_j_per_c": C,
                         "conductance_w_per_c": G,
                         "absorbed_fraction": absorbed}
    return result


def params_from_calibration(result: dict, environment: str,
                            slip_table: dict[float, float] | None = None
                            ) -> LocomotionParams:
    env = result["incline"][environment]
    return LocomotionParams(slip_table=slip_table or {0.0: 1.0},
                            friction_mu=env["mu"],
                            adhesion_pa=env["adhesion_pa"])
