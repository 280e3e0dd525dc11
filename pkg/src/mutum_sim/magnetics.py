"""Magnetic field models and the force/torque laws acting on the robot magnet.

The actuator is a permanent magnet spun by two motors; at the robot it is
reduced to a point dipole whose moment is sized so the workspace-center
field matches the configured 10-30 mT.  Pure NumPy.

Physics:
    - point dipole field:  B = mu0/(4 pi) * (3 n (m.n) - m) / r^3
    - field Jacobian:      dB_i/dx_j, analytic (symmetric and traceless
                           in the current-free workspace)
    - torque on moment:    T = m x B
    - gradient force:      F_i = sum_j m_j dB_i/dx_j
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

# Permeability of free space (T*m/A)
MU0: float = 4.0 * np.pi * 1e-7

# Dipole model breaks down on top of the source magnet
MIN_SOURCE_DISTANCE: float = 1e-4

# Default standoff of the actuator magnet below the workspace center (m).
# Not reported for the physical rig; only the field it produces matters.
DEFAULT_STANDOFF: float = 55.3e-3

FREQUENCY_MAX: float = 5.0
FIELD_RANGE: tuple[float, float] = (0.010, 0.030)


class SingularPointError(ValueError):
    """Field requested too close to the dipole singularity."""


def _unit(v: NDArray[np.floating]) -> NDArray[np.floating]:
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class DipoleSource:
    """Point-dipole stand-in for the actuator's permanent magnet."""

    moment_magnitude: float
    moment_direction: NDArray[np.floating]
    position: NDArray[np.floating]

    def __post_init__(self) -> None:
        object.__setattr__(self, "moment_direction",
                           np.asarray(self.moment_direction, dtype=np.float64))
        object.__setattr__(self, "position",
                           np.asarray(self.position, dtype=np.float64))
        if not self.moment_magnitude > 0:
            raise ValueError("moment_magnitude must be positive")
        if abs(np.linalg.norm(self.moment_direction) - 1.0) > 1e-12:
            raise ValueError("moment_direction must be a unit vector")

    @property
    def moment(self) -> NDArray[np.floating]:
        return self.moment_magnitude * self.moment_direction


@dataclass(frozen=True)
class FieldSample:
    """Flux density and its spatial gradient at a point.

    gradB[i, j] = dB_i/dx_j.  In a current-free region the Jacobian is
    symmetric and traceless; both are checked on construction (tolerance
    1e-9, scaled up only when the gradient itself is enormous, i.e. very
    close to a source).
    """

    B: NDArray[np.floating]
    gradB: NDArray[np.floating]

    def __post_init__(self) -> None:
        B = np.asarray(self.B, dtype=np.float64)
        gradB = np.asarray(self.gradB, dtype=np.float64)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "gradB", gradB)
        if not (np.all(np.isfinite(B)) and np.all(np.isfinite(gradB))):
            raise ValueError("field sample must be finite")
        tol = 1e-9 * max(1.0, float(np.max(np.abs(gradB))))
        if abs(np.trace(gradB)) > tol:
            raise ValueError("gradB must be divergence-free (zero trace)")
        if np.max(np.abs(gradB - gradB.T)) > tol:
            raise ValueError("gradB must be symmetric (curl-free region)")


@dataclass(frozen=True)
class RobotMagnet:
    """Embedded NdFeB cube; moment derived from remanence and volume."""

    edge_length: float = 500e-6
    remanence: float = 1.3
    moment_direction_body: NDArray[np.floating] = field(
        default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self) -> None:
        object.__setattr__(self, "moment_direction_body",
                           np.asarray(self.moment_direction_body, dtype=np.float64))
        if abs(np.linalg.norm(self.moment_direction_body) - 1.0) > 1e-12:
            raise ValueError("moment_direction_body must be a unit vector")
        # m = Br * V / mu0
        object.__setattr__(self, "moment",
                           self.remanence * self.edge_length ** 3 / MU0)

    moment: float = field(init=False)


@dataclass(frozen=True)
class ActuatorState:
    """Rotating-field actuator setting.

    The field spins at ``rotation_frequency`` in the vertical plane that
    contains the in-plane heading direction; at phase 0 it points up (+z).

    ``standoff`` locates the equivalent dipole below the workspace center
    and only matters for the (optional) gradient-force term.
    """

    rotation_frequency: float = 0.0
    heading: float = 0.0
    phase: float = 0.0
    field_magnitude_at_workspace: float = 0.020
    standoff: float = DEFAULT_STANDOFF

    def __post_init__(self) -> None:
        if not 0.0 <= self.rotation_frequency <= FREQUENCY_MAX:
            raise ValueError(
                f"rotation_frequency must be in [0, {FREQUENCY_MAX}] Hz")
        lo, hi = FIELD_RANGE
        if not lo <= self.field_magnitude_at_workspace <= hi:
            raise ValueError(
                f"field magnitude must be in [{lo}, {hi}] T")

    def field_phase(self, t: float) -> float:
        """Field rotation angle at time t (0 = field up)."""
        return self.phase + 2.0 * np.pi * self.rotation_frequency * t

    @property
    def equivalent_moment(self) -> float:
        """Dipole moment reproducing the workspace field on axis."""
        return (2.0 * np.pi * self.standoff ** 3
                * self.field_magnitude_at_workspace / MU0)


def dipole_field(source: DipoleSource, point: NDArray[np.floating]) -> FieldSample:
    """Field and analytic Jacobian of a point dipole at ``point``.

    Raises SingularPointError within MIN_SOURCE_DISTANCE of the source.
    """
    point = np.asarray(point, dtype=np.float64)
    r_vec = point - source.position
    r = float(np.linalg.norm(r_vec))
    if r < MIN_SOURCE_DISTANCE:
        raise SingularPointError(
            f"point within {MIN_SOURCE_DISTANCE} m of dipole source")
    n = r_vec / r
    m = source.moment
    k = MU0 / (4.0 * np.pi)
    mn = float(m @ n)

    B = k * (3.0 * n * mn - m) / r ** 3
    # dB_i/dx_j = 3k/r^4 [ (m.n) d_ij + n_i m_j + m_i n_j - 5 (m.n) n_i n_j ]
    eye = np.eye(3)
    gradB = (3.0 * k / r ** 4) * (
        mn * eye + np.outer(n, m) + np.outer(m, n) - 5.0 * mn * np.outer(n, n))
    return FieldSample(B=B, gradB=gradB)


def magnetic_torque(robot_moment: NDArray[np.floating],
                    B: NDArray[np.floating]) -> NDArray[np.floating]:
    """Torque m x B on the robot's dipole moment (N*m)."""
    m = np.asarray(robot_moment, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    return np.cross(m, B)


def magnetic_force(robot_moment: NDArray[np.floating],
                   gradB: NDArray[np.floating]) -> NDArray[np.floating]:
    """Gradient force F_i = sum_j m_j dB_i/dx_j (N)."""
    m = np.asarray(robot_moment, dtype=np.float64)
    gradB = np.asarray(gradB, dtype=np.float64)
    return gradB @ m


def actuator_field(state: ActuatorState, t: float) -> FieldSample:
    """Workspace-center field of the rotating actuator at time t.

    B has exactly the configured magnitude and rotates in the vertical
    plane spanned by +z and the heading direction.  The Jacobian is that
    of the equivalent dipole trailing the field on its axis, for which
    gradB = (3|B| / 2 d) (I - 3 n n^T) with n the field direction.
    """
    phi = state.field_phase(t)
    h = np.array([np.cos(state.heading), np.sin(state.heading), 0.0])
    n = np.sin(phi) * h + np.cos(phi) * np.array([0.0, 0.0, 1.0])
    B = state.field_magnitude_at_workspace * n

    scale = 3.0 * state.field_magnitude_at_workspace / (2.0 * state.standoff)
    gradB = scale * (np.eye(3) - 3.0 * np.outer(n, n))
    return FieldSample(B=B, gradB=gradB)
