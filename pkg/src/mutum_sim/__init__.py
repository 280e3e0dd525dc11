"""Simulator for magnetic tumbling microrobots (muTUMs).

Rotating-field tumbling locomotion across dry, wet, phantom, and in-vivo
environments; thermally gated wax-cap payload release under focused
ultrasound; an experiment harness reproducing the characterization panels;
and a teleoperation service for human-in-the-loop steering.
"""

from .magnetics import (ActuatorState, DipoleSource, FieldSample, RobotMagnet,
                        actuator_field, dipole_field, magnetic_force,
                        magnetic_torque)
from .microrobot import (DesignKind, MicrorobotDesign, PayloadSpec, WaxCap,
                         distance_per_revolution, robot_mass, stock_design)
from .scene import (LocomotionParams, LumenProfile, Scene, SceneKind,
                    constrain_to_lumen, incline_surface, load_bundled_scene,
                    load_scene)
from .locomotion import (Contact, RobotState, Trajectory, average_velocity,
                         climb_feasible, incline_ladder, nine_panel_velocity,
                         required_pivot_torque, simulate_run, step)
from .thermics import (FusConfig, MeltCurve, PayloadState, ThermalState,
                       cap_update, default_melt_curve, heat_step, melt_onset,
                       release_step, sample_supernatant)
from .calibration import CalibrationInfeasibleError, calibrate

__version__ = "0.1.0"
