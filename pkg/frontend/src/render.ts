/**
 * Longitudinal lumen view and gauges, as pure frame descriptions.
 *
 * The operator sees the colon the way the imaging ultrasound does: a side
 * view with the robot at its arc position, rotated by its tumble phase.
 * Building the frame is separated from canvas painting so the view model
 * is testable without a DOM.
 */

import { Snapshot } from "./protocol.js";
import { ConnectionStatus } from "./store.js";

export interface SceneMeta {
  name: string;
  lumenLengthM: number;
  lumenRadiusM: number;
}

export type GaugeColor = "green" | "amber" | "red";

export interface LumenFrame {
  frozen: boolean;
  banner: string | null;
  robot: {
    arcFraction: number;
    tumblePhase: number;
    stepOut: boolean;
  } | null;
  releaseMarker: { arcFraction: number; scale: number } | null;
  temperature: { valueC: number; color: GaugeColor };
  release: { fraction: number };
  frequencyHz: number;
  headingRad: number;
  rotating: boolean;
  fusActive: boolean;
}

export function temperatureColor(valueC: number): GaugeColor {
  if (valueC < 38.0) return "green";
  if (valueC <= 42.0) return "amber";
  return "red";
}

export function buildFrame(
  snapshot: Snapshot | null,
  status: ConnectionStatus,
  meta: SceneMeta,
): LumenFrame {
  const frozen = status !== "connected";
  const banner =
    status === "disconnected"
      ? "CONNECTION LOST - frame frozen, commands queued"
      : status === "connecting"
        ? "connecting..."
        : null;
  if (snapshot === null) {
    return {
      frozen,
      banner: banner ?? "waiting for first snapshot",
      robot: null,
      releaseMarker: null,
      temperature: { valueC: NaN, color: "green" },
      release: { fraction: 0 },
      frequencyHz: 0,
      headingRad: 0,
      rotating: false,
      fusActive: false,
    };
  }
  const arcFraction = Math.min(
    Math.max(snapshot.arc / meta.lumenLengthM, 0),
    1,
  );
  return {
    frozen,
    banner,
    robot: {
      arcFraction,
      tumblePhase: snapshot.phase,
      stepOut: !snapshot.sync,
    },
    releaseMarker:
      snapshot.released > 0
        ? { arcFraction, scale: snapshot.released }
        : null,
    temperature: {
      valueC: snapshot.temp_c,
      color: temperatureColor(snapshot.temp_c),
    },
    release: { fraction: snapshot.released },
    frequencyHz: snapshot.freq,
    headingRad: snapshot.heading,
    rotating: snapshot.rotating,
    fusActive: snapshot.temp_c > 38.0,
  };
}

const COLORS: Record<GaugeColor, string> = {
  green: "#2e9e44",
  amber: "#d98e04",
  red: "#c0392b",
};

/** Paint a frame onto a 2D canvas (browser side only). */
export function drawFrame(
  ctx: CanvasRenderingContext2D,
  frame: LumenFrame,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);

  // lumen walls
  const wallTop = height * 0.3;
  const wallBottom = height * 0.7;
  ctx.strokeStyle = "#caa";
  ctx.setLineDash([8, 6]);
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(0, wallTop);
  ctx.lineTo(width, wallTop);
  ctx.moveTo(0, wallBottom);
  ctx.lineTo(width, wallBottom);
  ctx.stroke();
  ctx.setLineDash([]);

  if (frame.robot !== null) {
    const x = frame.robot.arcFraction * width;
    const y = wallBottom - height * 0.06;

    if (frame.releaseMarker !== null) {
      const r = 6 + frame.releaseMarker.scale * 30;
      ctx.fillStyle = "rgba(46, 108, 216, 0.35)";
      ctx.beginPath();
      ctx.arc(x, y, r, 0, 2 * Math.PI);
      ctx.fill();
    }

    ctx.save();
    ctx.translate(x, y);
    ctx.rotate(-frame.robot.tumblePhase);
    ctx.fillStyle = frame.robot.stepOut ? "#c0392b" : "#333";
    ctx.fillRect(-9, -4.2, 18, 8.4);
    ctx.fillStyle = "#777";
    ctx.fillRect(-2, -2, 4, 4);
    ctx.restore();

    if (frame.robot.stepOut) {
      ctx.fillStyle = "#c0392b";
      ctx.font = "bold 12px sans-serif";
      ctx.fillText("STEP-OUT", x - 28, y - 22);
    }
  }

  if (frame.banner !== null) {
    ctx.fillStyle = "rgba(30, 30, 30, 0.75)";
    ctx.fillRect(0, 0, width, 28);
    ctx.fillStyle = "#fff";
    ctx.font = "13px sans-serif";
    ctx.fillText(frame.banner, 10, 19);
  }
}

export function gaugeCss(color: GaugeColor): string {
  return COLORS[color];
}
