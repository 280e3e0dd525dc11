"""Test environments: flat substrates, gelatin inclines, colon lumens.

Scenes load from JSON (SI units throughout, no unit inference) and are
immutable after load.  The phantom ships as a synthetic straight tube of
the rat-colon average radius; the format accepts arbitrary centerlines so
a segmented geometry can be dropped in.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

# Robots must fit through the lumen: full-box half diagonal of the stock design
MIN_LUMEN_CLEARANCE: float = math.sqrt(3.0e-3 ** 2 + 1.4e-3 ** 2 + 1.4e-3 ** 2) / 2

MAX_INCLINE_DEG: float = 60.0


class SceneParseError(ValueError):
    """Scene file is not valid JSON or not a scene object."""


class SceneValidationError(ValueError):
    """Scene parsed but violates an invariant (named in the message)."""


class OffCenterlineEndsError(ValueError):
    """Projection of a point falls beyond the centerline span."""


class SceneKind(enum.Enum):
    FLAT_DRY = "flat_dry"
    FLAT_WET = "flat_wet"
    INCLINE = "incline"
    PHANTOM = "phantom"
    IN_VIVO = "in_vivo"


class Fluid(enum.Enum):
    AIR = "air"
    DI_WATER = "di_water"
    SALINE = "saline"


@dataclass(frozen=True)
class LocomotionParams:
    """Calibration knobs: slip per frequency, Coulomb friction, adhesion."""

    slip_table: dict[float, float] = field(default_factory=lambda: {0.0: 1.0})
    friction_mu: float = 0.4
    adhesion_pa: float = 0.0

    def __post_init__(self) -> None:
        if not self.slip_table:
            raise SceneValidationError("slip table must not be empty")
        for f, s in self.slip_table.items():
            if not 0.0 <= s <= 1.0:
                raise SceneValidationError(
                    f"slip factor must be in [0, 1], got {s} at {f} Hz")
        if self.friction_mu < 0:
            raise SceneValidationError("friction_mu must be non-negative")
        if self.adhesion_pa < 0:
            raise SceneValidationError("adhesion_pa must be non-negative")

    def slip_at(self, frequency: float) -> float:
        """Slip factor, linearly interpolated over the frequency table."""
        pts = sorted(self.slip_table.items())
        freqs = [p[0] for p in pts]
        vals = [p[1] for p in pts]
        return float(np.interp(frequency, freqs, vals))


@dataclass(frozen=True)
class LumenProfile:
    """Centerline polyline with a per-point radius."""

    centerline: NDArray[np.floating]
    radius: NDArray[np.floating]

    def __post_init__(self) -> None:
        cl = np.asarray(self.centerline, dtype=np.float64)
        r = np.asarray(self.radius, dtype=np.float64)
        object.__setattr__(self, "centerline", cl)
        object.__setattr__(self, "radius", r)
        if cl.ndim != 2 or cl.shape[1] != 3 or cl.shape[0] < 2:
            raise SceneValidationError("centerline needs >= 2 3D points")
        if r.shape != (cl.shape[0],):
            raise SceneValidationError("one radius per centerline point")
        seg = np.linalg.norm(np.diff(cl, axis=0), axis=1)
        if np.any(seg <= 0):
            raise SceneValidationError(
                "centerline arc length must be strictly increasing")
        if np.any(r <= MIN_LUMEN_CLEARANCE):
            raise SceneValidationError(
                f"lumen radius must exceed the robot half-diagonal "
                f"({MIN_LUMEN_CLEARANCE:.4e} m)")
        arcs = np.concatenate([[0.0], np.cumsum(seg)])
        object.__setattr__(self, "_arcs", arcs)

    _arcs: NDArray[np.floating] = field(init=False, repr=False)

    @property
    def total_length(self) -> float:
        return float(self._arcs[-1])

    def point_at_arc(self, s: float) -> NDArray[np.floating]:
        if not 0.0 <= s <= self.total_length:
            raise OffCenterlineEndsError(
                f"arc {s} outside [0, {self.total_length}]")
        i = int(np.searchsorted(self._arcs, s, side="right") - 1)
        i = min(i, len(self._arcs) - 2)
        t = (s - self._arcs[i]) / (self._arcs[i + 1] - self._arcs[i])
        return (1 - t) * self.centerline[i] + t * self.centerline[i + 1]

    def radius_at_arc(self, s: float) -> float:
        if not 0.0 <= s <= self.total_length:
            raise OffCenterlineEndsError(
                f"arc {s} outside [0, {self.total_length}]")
        return float(np.interp(s, self._arcs, self.radius))

    def tangent_at_arc(self, s: float) -> NDArray[np.floating]:
        if not 0.0 <= s <= self.total_length:
            raise OffCenterlineEndsError(
                f"arc {s} outside [0, {self.total_length}]")
        i = int(np.searchsorted(self._arcs, s, side="right") - 1)
        i = min(i, len(self._arcs) - 2)
        d = self.centerline[i + 1] - self.centerline[i]
        return d / np.linalg.norm(d)

    def project(self, position: NDArray[np.floating]) -> float:
        """Arc-length parameter of the closest centerline point.

        Raises OffCenterlineEndsError when the closest approach lies past
        either end of the polyline.
        """
        p = np.asarray(position, dtype=np.float64)
        best_d2, best_s, best_t, best_i = np.inf, 0.0, 0.0, 0
        for i in range(len(self.centerline) - 1):
            a = self.centerline[i]
            ab = self.centerline[i + 1] - a
            t = float((p - a) @ ab / (ab @ ab))
            tc = min(max(t, 0.0), 1.0)
            q = a + tc * ab
            d2 = float((p - q) @ (p - q))
            if d2 < best_d2 - 1e-18:
                best_d2, best_t, best_i = d2, t, i
                best_s = self._arcs[i] + tc * (self._arcs[i + 1] - self._arcs[i])
        if (best_i == 0 and best_t < -1e-12) or (
                best_i == len(self.centerline) - 2 and best_t > 1.0 + 1e-12):
            raise OffCenterlineEndsError(
                "projection falls outside the centerline span")
        return float(best_s)


@dataclass(frozen=True)
class Scene:
    """One test environment with its calibrated locomotion parameters."""

    kind: SceneKind
    incline_angle: float = 0.0                   # rad, Incline only
    lumen: LumenProfile | None = None
    temperature_ambient: float = 20.0            # deg C
    locomotion_params: LocomotionParams = field(default_factory=LocomotionParams)
    fluid: Fluid = Fluid.AIR

    def __post_init__(self) -> None:
        deg = math.degrees(self.incline_angle)
        if not 0.0 <= deg <= MAX_INCLINE_DEG + 1e-9:
            raise SceneValidationError(
                f"incline_angle must be in [0, {MAX_INCLINE_DEG}] degrees, got {deg:g}")
        if self.kind in (SceneKind.PHANTOM, SceneKind.IN_VIVO) and self.lumen is None:
            raise SceneValidationError(f"{self.kind.value} scene requires a lumen")


def floor_at_arc(lumen: LumenProfile, s: float
                 ) -> tuple[NDArray[np.floating], NDArray[np.floating]]:
    """Wall contact point at the bottom of the cross-section at arc s."""
    c = lumen.point_at_arc(s)
    r = lumen.radius_at_arc(s)
    tangent = lumen.tangent_at_arc(s)
    down = np.array([0.0, 0.0, -1.0])
    # gravity direction within the cross-section plane
    d = down - (down @ tangent) * tangent
    norm = np.linalg.norm(d)
    if norm < 1e-12:
        raise SceneValidationError("vertical lumen segment has no floor")
    d = d / norm
    return c + r * d, -d


def constrain_to_lumen(position: NDArray[np.floating], lumen: LumenProfile
                       ) -> tuple[NDArray[np.floating], NDArray[np.floating]]:
    """Settle a point to the lumen floor under gravity.

    Returns the wall contact point below the nearest centerline station and
    the inward contact normal.  Idempotent: floor points map to themselves.
    """
    return floor_at_arc(lumen, lumen.project(position))


@dataclass(frozen=True)
class InclineSurface:
    """Plane description consumed by the locomotion stepper."""

    angle: float                                  # rad
    upslope: NDArray[np.floating]
    normal: NDArray[np.floating]


def incline_surface(angle: float) -> InclineSurface:
    """Gelatin-coated plane rising along +x."""
    deg = math.degrees(angle)
    if not 0.0 <= deg <= MAX_INCLINE_DEG + 1e-9:
        raise SceneValidationError(
            f"incline angle must be in [0, {MAX_INCLINE_DEG}] degrees")
    return InclineSurface(
        angle=angle,
        upslope=np.array([math.cos(angle), 0.0, math.sin(angle)]),
        normal=np.array([-math.sin(angle), 0.0, math.cos(angle)]),
    )


# --- serialization ----------------------------------------------------------

def scene_to_dict(scene: Scene) -> dict:
    out: dict = {
        "kind": scene.kind.value,
        "fluid": scene.fluid.value,
        "temperature_ambient_c": scene.temperature_ambient,
        "locomotion_params": {
            "slip": {repr(float(f)): s
                     for f, s in sorted(scene.locomotion_params.slip_table.items())},
            "mu": scene.locomotion_params.friction_mu,
            "adhesion_pa": scene.locomotion_params.adhesion_pa,
        },
    }
    if scene.kind is SceneKind.INCLINE:
        out["incline_angle_deg"] = math.degrees(scene.incline_angle)
    if scene.lumen is not None:
        out["lumen"] = {
            "centerline": scene.lumen.centerline.tolist(),
            "radius": scene.lumen.radius.tolist(),
        }
    return out


def scene_from_dict(data: dict) -> Scene:
    if not isinstance(data, dict):
        raise SceneParseError("scene file must contain a JSON object")
    try:
        kind = SceneKind(data["kind"])
    except KeyError:
        raise SceneValidationError("missing required key 'kind'") from None
    except ValueError:
        raise SceneValidationError(
            f"unknown scene kind {data.get('kind')!r}") from None

    lumen = None
    if "lumen" in data and data["lumen"] is not None:
        lum = data["lumen"]
        if not isinstance(lum, dict) or "centerline" not in lum or "radius" not in lum:
            raise SceneValidationError("lumen needs 'centerline' and 'radius'")
        lumen = LumenProfile(centerline=np.array(lum["centerline"], dtype=np.float64),
                             radius=np.array(lum["radius"], dtype=np.float64))

    params = LocomotionParams()
    if "locomotion_params" in data:
        lp = data["locomotion_params"]
        slip = {float(k): float(v) for k, v in lp.get("slip", {"0": 1.0}).items()}
        params = LocomotionParams(
            slip_table=slip,
            friction_mu=float(lp.get("mu", 0.0)),
            adhesion_pa=float(lp.get("adhesion_pa", 0.0)),
        )

    try:
        fluid = Fluid(data.get("fluid", "air"))
    except ValueError:
        raise SceneValidationError(f"unknown fluid {data.get('fluid')!r}") from None

    return Scene(
        kind=kind,
        incline_angle=math.radians(float(data.get("incline_angle_deg", 0.0))),
        lumen=lumen,
        temperature_ambient=float(data.get("temperature_ambient_c", 20.0)),
        locomotion_params=params,
        fluid=fluid,
    )


def load_scene(path: str | Path) -> Scene:
    """Load and fully validate a scene file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneParseError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from None
    return scene_from_dict(data)


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(scene_to_dict(scene), indent=2) + "\n", encoding="utf-8")


def list_bundled_scenes() -> list[str]:
    pkg = resources.files("mutum_sim") / "scenes"
    return sorted(p.name[:-len(".json")] for p in pkg.iterdir()
                  if p.name.endswith(".json"))


def bundled_scene_path(name: str) -> Path:
    path = resources.files("mutum_sim") / "scenes" / f"{name}.json"
    with resources.as_file(path) as p:
        if not p.exists():
            raise FileNotFoundError(f"no bundled scene named {name!r}")
        return Path(p)


def load_bundled_scene(name: str) -> Scene:
    return load_scene(bundled_scene_path(name))
