"""Wax melt curve, lumped heating under focused ultrasound, gated release.

The environment around the robot is a single thermal node,
C dT/dt = P_abs - G (T - ambient), updated with the exact exponential so
results are independent of step size.  The wax cap holds until the local
temperature reaches its melt onset, then loses integrity exponentially;
once breached, payload release follows first-order kinetics toward the
design's terminal fraction, with the rate constant scaled by total open
port area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .microrobot import (DEFAULT_MAX_RELEASE_FRACTION, MicrorobotDesign,
                         WaxCap)

BREACH_THRESHOLD: float = 0.5

# First-order release rate of the reference (top-port) design, calibrated
# so the 42 C / 10 min protocol recovers the published terminal fractions.
RELEASE_RATE_TP: float = 0.008  # 1/s

_TP_PORT_AREA: float = 2.0 * math.pi * (750e-6 / 2.0) ** 2


class OutOfDomainError(ValueError):
    """Melt-curve query outside the tabulated oil-fraction range."""


@dataclass(frozen=True)
class MeltCurve:
    """Initial/final melting points versus mineral-oil mass fraction."""

    points: list[tuple[float, float, float]]   # (w, onset C, final C)

    def __post_init__(self) -> None:
        ws = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(ws, ws[1:])):
            raise ValueError("oil fractions must be strictly increasing")
        if any(onset > final for _, onset, final in self.points):
            raise ValueError("onset cannot exceed final melting point")


def default_melt_curve() -> MeltCurve:
    """Default melt table.

    Only the endpoints are literature-quotable (pure paraffin ~50 C; the
    w = 0.6 blend starts melting ~39 C).  Interior knots are measured
    interpolation points chosen to keep the onset non-increasing.
    """
    return MeltCurve(points=[
        (0.0, 50.0, 53.0),
        (0.1, 49.5, 53.0),
        (0.2, 49.0, 53.0),
        (0.3, 48.0, 53.0),
        (0.4, 46.0, 52.5),
        (0.5, 43.0, 52.0),
        (0.6, 39.0, 47.0),
        (0.7, 37.0, 44.0),
        (0.8, 35.0, 42.0),
    ])


def _interp(curve: MeltCurve, w: float, index: int) -> float:
    ws = [p[0] for p in curve.points]
    if not ws[0] <= w <= ws[-1]:
        raise OutOfDomainError(
            f"oil fraction {w} outside table domain [{ws[0]}, {ws[-1]}]")
    for (w0, *v0), (w1, *v1) in zip(curve.points, curve.points[1:]):
        if w <= w1:
            t = 0.0 if w1 == w0 else (w - w0) / (w1 - w0)
            return v0[index - 1] + t * (v1[index - 1] - v0[index - 1])
    return curve.points[-1][index]


def melt_onset(curve: MeltCurve, w: float) -> float:
    """Onset (initial melting) temperature at oil fraction w, interpolated."""
    return _interp(curve, w, 1)


def melt_final(curve: MeltCurve, w: float) -> float:
    """Final (fully melted) temperature at oil fraction w, interpolated."""
    return _interp(curve, w, 2)


def make_cap(w: float, curve: MeltCurve | None = None, *,
             onset_offset: float = 0.0,
             decay_time_constant: float = 10.0) -> WaxCap:
    """Cap for a given formulation; onset comes from the melt curve.

    ``onset_offset`` and ``decay_time_constant`` model coat-to-coat
    variation (a thin coat both melts through sooner and gives way faster).
    """
    curve = curve or default_melt_curve()
    return WaxCap(oil_mass_fraction=w,
                  onset_temperature=melt_onset(curve, w) + onset_offset,
                  decay_time_constant=decay_time_constant)


@dataclass(frozen=True)
class ThermalState:
    """Lumped temperature node at the robot."""

    T: float
    ambient: float
    capacitance: float = 2.5    # J/C
    conductance: float = 0.05   # W/C

    def __post_init__(self) -> None:
        if self.capacitance <= 0 or self.conductance <= 0:
            raise ValueError("capacitance and conductance must be positive")


@dataclass(frozen=True)
class FusConfig:
    """Focused-ultrasound burst settings and the lumped absorbed fraction."""

    electrical_power: float = 10.0
    frequency: float = 6.775e6
    burst_length: float = 0.20e-3
    period: float = 1.00e-3
    duration: float = 180.0
    absorbed_fraction: float = 0.1542

    def __post_init__(self) -> None:
        if self.burst_length > self.period:
            raise ValueError("burst length cannot exceed the period")
        if not 0.0 < self.absorbed_fraction <= 1.0:
            raise ValueError("absorbed_fraction must be in (0, 1]")

    @property
    def absorbed_power(self) -> float:
        duty = self.burst_length / self.period
        return self.electrical_power * duty * self.absorbed_fraction


def _exp_update(state: ThermalState, power: float, dt: float) -> ThermalState:
    tau = state.capacitance / state.conductance
    T_ss = state.ambient + power / state.conductance
    T = T_ss + (state.T - T_ss) * math.exp(-dt / tau)
    return replace(state, T=T)


def heat_step(state: ThermalState, fus: FusConfig | None,
              t: float, dt: float) -> ThermalState:
    """Advance the thermal node from t to t + dt (exact exponential).

    A step straddling the source cut-off is split at the boundary, so the
    trajectory is independent of step size for any subdivision.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if fus is None:
        return _exp_update(state, 0.0, dt)
    if t + dt <= fus.duration:
        return _exp_update(state, fus.absorbed_power, dt)
    if t >= fus.duration:
        return _exp_update(state, 0.0, dt)
    state = _exp_update(state, fus.absorbed_power, fus.duration - t)
    return _exp_update(state, 0.0, t + dt - fus.duration)


def cap_update(cap: WaxCap, T: float, dt: float) -> WaxCap:
    """Integrity decay while the local temperature sits at or above onset."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < cap.onset_temperature or cap.integrity == 0.0:
        return cap
    integrity = cap.integrity * math.exp(-dt / cap.decay_time_constant)
    return replace(cap, integrity=integrity)


def cap_breached(cap: WaxCap, threshold: float = BREACH_THRESHOLD) -> bool:
    return cap.integrity < threshold


def release_rate(design: MicrorobotDesign, k_reference: float = RELEASE_RATE_TP
                 ) -> float:
    """First-order rate constant, proportional to total open port area."""
    return k_reference * design.total_port_area / _TP_PORT_AREA


@dataclass(frozen=True)
class PayloadState:
    """Loaded drug mass and its release history."""

    loaded_mass: float
    cap: WaxCap
    rate_constant: float
    max_release_fraction: float = 1.0
    released_mass: float = 0.0
    breach_time: float | None = None
    pending_sample_mass: float = 0.0   # released since the last supernatant draw

    def __post_init__(self) -> None:
        limit = self.max_release_fraction * self.loaded_mass
        if self.released_mass < 0 or self.released_mass > limit + 1e-12 * max(limit, 1.0):
            raise ValueError("released mass outside [0, F_max * M0]")

    @property
    def released_fraction(self) -> float:
        return self.released_mass / self.loaded_mass if self.loaded_mass else 0.0

    @property
    def retained_mass(self) -> float:
        return self.loaded_mass - self.released_mass


def release_step(p: PayloadState, breached: bool, dt: float) -> PayloadState:
    """First-order release toward F_max * M0 while the cap is breached."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not breached:
        return p
    target = p.max_release_fraction * p.loaded_mass
    released = target - (target - p.released_mass) * math.exp(-p.rate_constant * dt)
    delta = released - p.released_mass
    return replace(p, released_mass=released,
                   pending_sample_mass=p.pending_sample_mass + delta)


def sample_supernatant(p: PayloadState) -> tuple[float, PayloadState]:
    """Draw the supernatant: returns mass released since the last draw."""
    return p.pending_sample_mass, replace(p, pending_sample_mass=0.0)


def thermal_release_step(p: PayloadState, T: float, t: float,
                         dt: float) -> PayloadState:
    """Cap decay, breach bookkeeping, and release for one step ending t + dt."""
    cap = cap_update(p.cap, T, dt)
    p = replace(p, cap=cap)
    breached = cap_breached(cap)
    if breached and p.breach_time is None:
        p = replace(p, breach_time=t + dt)
    return release_step(p, breached, dt)


def make_payload_state(design: MicrorobotDesign, *, loaded_mass: float,
                       cap: WaxCap, max_release_fraction: float | None = None
                       ) -> PayloadState:
    """Payload state with the design's port-scaled rate and default F_max."""
    if max_release_fraction is None:
        max_release_fraction = DEFAULT_MAX_RELEASE_FRACTION[design.kind]
    return PayloadState(loaded_mass=loaded_mass, cap=cap,
                        rate_constant=release_rate(design),
                        max_release_fraction=max_release_fraction)
