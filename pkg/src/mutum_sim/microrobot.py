"""Tumbling microrobot designs: geometry, ports, payload cavity, mass.

Three stock designs share a 3 x 1.4 x 1.4 mm envelope and a 500 um cube
magnet; they differ only in where the drug-cavity ports sit and how big
they are (top/side/end ports).  All quantities SI.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .magnetics import RobotMagnet


class DesignKind(enum.Enum):
    TP = "tp"   # two 750 um ports on top
    SP = "sp"   # four 750 um ports on the sides
    EP = "ep"   # two 1000 um ports on the ends


# Terminal releasable fraction per stock design (42 C / 10 min protocol)
DEFAULT_MAX_RELEASE_FRACTION: dict[DesignKind, float] = {
    DesignKind.TP: 0.93,
    DesignKind.SP: 0.52,
    DesignKind.EP: 1.00,
}

GRAVITY: float = 9.81


@dataclass(frozen=True)
class MicrorobotDesign:
    """Chassis geometry and payload cavity for one port configuration.

    ``length`` and ``height`` are the sides of the tumbling cross-section;
    ``width`` is along the pivot axis and never enters the kinematics.
    """

    kind: DesignKind
    length: float = 3.0e-3
    width: float = 1.4e-3
    height: float = 1.4e-3
    port_count: int = 2
    port_diameter: float = 750e-6
    internal_volume: float = 5e-9
    cavity_volume: float = 3e-9
    magnet: RobotMagnet = field(default_factory=RobotMagnet)
    body_density: float = 1100.0

    def __post_init__(self) -> None:
        if min(self.length, self.width, self.height) <= 0:
            raise ValueError("dimensions must be positive")
        if self.internal_volume >= self.length * self.width * self.height:
            raise ValueError("internal volume exceeds the body envelope")
        if self.cavity_volume > self.internal_volume:
            raise ValueError("cavity volume exceeds internal volume")

    @property
    def envelope_volume(self) -> float:
        return self.length * self.width * self.height

    @property
    def shell_volume(self) -> float:
        """Printed material volume under the uniform-wall model."""
        return self.envelope_volume - self.internal_volume

    @property
    def total_port_area(self) -> float:
        return self.port_count * np.pi * (self.port_diameter / 2.0) ** 2

    @property
    def half_diagonal(self) -> float:
        """Half diagonal of the tumbling cross-section (pivot lever radius)."""
        return float(np.hypot(self.length, self.height)) / 2.0

    @property
    def body_half_diagonal(self) -> float:
        """Half diagonal of the full box (minimum lumen clearance)."""
        return float(np.sqrt(self.length ** 2 + self.width ** 2
                             + self.height ** 2)) / 2.0


@dataclass(frozen=True)
class PayloadSpec:
    """What the cavity is filled with."""

    solution_name: str = "none"
    concentration: float = 0.0          # solute kg/m^3 (100 mg/mL = 100)
    loaded_volume: float = 0.0          # m^3, <= cavity volume
    max_release_fraction: float = 1.0
    solution_density: float = 1000.0    # aqueous carrier

    def __post_init__(self) -> None:
        if self.loaded_volume < 0:
            raise ValueError("loaded_volume must be non-negative")
        if not 0.0 <= self.max_release_fraction <= 1.0:
            raise ValueError("max_release_fraction must be in [0, 1]")

    @property
    def solution_mass(self) -> float:
        return self.loaded_volume * self.solution_density

    @property
    def solute_mass(self) -> float:
        """Loaded drug (solute) mass; the quantity release fractions refer to."""
        return self.loaded_volume * self.concentration


@dataclass(frozen=True)
class WaxCap:
    """Paraffin/mineral-oil seal over the cavity ports.

    ``onset_temperature`` comes from the melt curve for the chosen oil
    fraction; ``decay_time_constant`` models cap thickness (thin caps give
    way in seconds, thick ones take a minute).  Integrity only ever drops.
    """

    oil_mass_fraction: float
    onset_temperature: float
    integrity: float = 1.0
    decay_time_constant: float = 10.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.oil_mass_fraction <= 0.8:
            raise ValueError("oil mass fraction must be in [0, 0.8]")
        if not 0.0 <= self.integrity <= 1.0:
            raise ValueError("integrity must be in [0, 1]")
        if self.decay_time_constant <= 0:
            raise ValueError("decay_time_constant must be positive")


def stock_design(kind: DesignKind | str, *,
                 remanence: float = 1.3) -> MicrorobotDesign:
    """Build one of the three catalogued designs."""
    kind = DesignKind(kind) if not isinstance(kind, DesignKind) else kind
    ports = {
        DesignKind.TP: (2, 750e-6),
        DesignKind.SP: (4, 750e-6),
        DesignKind.EP: (2, 1000e-6),
    }[kind]
    return MicrorobotDesign(
        kind=kind,
        port_count=ports[0],
        port_diameter=ports[1],
        magnet=RobotMagnet(remanence=remanence),
    )


def distance_per_revolution(design: MicrorobotDesign) -> float:
    """Footprint advance per full field revolution under no-slip pivoting.

    Four successive 90-degree edge pivots of the L x h cross-section walk
    the footprint forward by L + h + L + h.
    """
    return 2.0 * (design.length + design.height)


def robot_mass(design: MicrorobotDesign,
               payload: PayloadSpec | None = None) -> float:
    """Total mass: printed shell + magnet + payload solution (kg)."""
    magnet_density = 7500.0  # sintered NdFeB
    mass = (design.shell_volume * design.body_density
            + design.magnet.edge_length ** 3 * magnet_density)
    if payload is not None:
        mass += payload.solution_mass
    return mass


def robot_weight(design: MicrorobotDesign,
                 payload: PayloadSpec | None = None) -> float:
    return robot_mass(design, payload) * GRAVITY


def design_to_dict(design: MicrorobotDesign) -> dict:
    """Config-file form of a design; floats round-trip exactly."""
    return {
        "kind": design.kind.value,
        "length_m": design.length,
        "width_m": design.width,
        "height_m": design.height,
        "port_count": design.port_count,
        "port_diameter_m": design.port_diameter,
        "internal_volume_m3": design.internal_volume,
        "cavity_volume_m3": design.cavity_volume,
        "body_density_kg_m3": design.body_density,
        "magnet": {
            "edge_length_m": design.magnet.edge_length,
            "remanence_t": design.magnet.remanence,
        },
    }


def design_from_dict(data: dict) -> MicrorobotDesign:
    magnet = data.get("magnet", {})
    return MicrorobotDesign(
        kind=DesignKind(data["kind"]),
        length=float(data["length_m"]),
        width=float(data["width_m"]),
        height=float(data["height_m"]),
        port_count=int(data["port_count"]),
        port_diameter=float(data["port_diameter_m"]),
        internal_volume=float(data["internal_volume_m3"]),
        cavity_volume=float(data["cavity_volume_m3"]),
        body_density=float(data["body_density_kg_m3"]),
        magnet=RobotMagnet(
            edge_length=float(magnet.get("edge_length_m", 500e-6)),
            remanence=float(magnet.get("remanence_t", 1.3)),
        ),
    )
