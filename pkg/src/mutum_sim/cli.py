"""Command-line entry point: experiment runners, calibration, teleop, replay.

Exit codes: 0 success, 2 validation error, 3 calibration infeasibility.
"""

from __future__ import annotations

import argparse
import sys

from .calibration import CalibrationInfeasibleError
from .harness import Experiment, ExperimentConfig, run_calibration, run_experiment
from .microrobot import DesignKind
from .scene import SceneParseError, SceneValidationError
from .teleop import ReplayError, replay_log, verify_replay

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3


def _parse_frequencies(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mutum-sim",
        description="Tumbling-microrobot simulator and experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)

    for experiment in Experiment:
        p = sub.add_parser(experiment.value,
                           help=f"run the {experiment.value} experiment")
        p.add_argument("--scene", default=None,
                       help="scene file path (default: bundled scene)")
        p.add_argument("--design", choices=["tp", "sp", "ep", "all"],
                       default="all")
        p.add_argument("--freq", default="2,3,4,5", type=_parse_frequencies,
                       help="comma-separated frequencies in Hz")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--payload", choices=["empty", "filled", "both"],
                       default="empty")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("calibrate", help="grid-search the free parameters")
    p.add_argument("--anchors", default=None, help="anchor overrides (JSON)")
    p.add_argument("--out", default="out")

    p = sub.add_parser("serve", help="run the teleoperation service")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--scene", default="phantom_rat",
                   help="bundled scene name")
    p.add_argument("--design", choices=["tp", "sp", "ep"], default="tp")
    p.add_argument("--record", default=None, help="session log path")

    p = sub.add_parser("replay", help="re-run a recorded session log")
    p.add_argument("log", help="session log path")
    p.add_argument("--verify", action="store_true",
                   help="check the reproduced stream against the recording")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        if args.command == "calibrate":
            result = run_calibration(args.anchors, args.out)
            for env, params in result["incline"].items():
                print(f"incline[{env}]: mu={params['mu']:g} "
                      f"adhesion={params['adhesion_pa']:g} Pa")
            thermal = result["thermal"]
            print(f"thermal: C={thermal['capacitance_j_per_c']:g} J/C "
                  f"G={thermal['conductance_w_per_c']:g} W/C "
                  f"absorbed={thermal['absorbed_fraction']:g}")
            return EXIT_OK

        if args.command == "serve":
            from .server import serve
            print(f"serving teleop on port {args.port} "
                  f"(scene={args.scene}, design={args.design})")
            serve(port=args.port, scene=args.scene, design=args.design,
                  record_path=args.record)
            return EXIT_OK

        if args.command == "replay":
            if args.verify:
                ok = verify_replay(args.log)
                print("replay matches recording" if ok
                      else "replay DIVERGES from recording")
                return EXIT_OK if ok else EXIT_VALIDATION
            snapshots = replay_log(args.log)
            for snap in snapshots:
                print(snap.to_json())
            return EXIT_OK

        cfg = ExperimentConfig(
            experiment=Experiment(args.command),
            scene_path=args.scene,
            design=None if args.design == "all" else DesignKind(args.design),
            frequencies=args.freq,
            seed=args.seed,
            payload=args.payload,
            output_dir=args.out,
        )
        run_experiment(cfg)
        print(f"wrote {args.command} results to {args.out}/")
        return EXIT_OK

    except CalibrationInfeasibleError as exc:
        print(f"calibration infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SceneParseError, SceneValidationError, ReplayError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
