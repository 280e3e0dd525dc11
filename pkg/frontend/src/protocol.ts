/** Wire schema of the teleoperation service (single-line JSON messages). */

export interface Snapshot {
  t: number;
  pos: [number, number, number];
  phase: number;
  sync: boolean;
  arc: number;
  temp_c: number;
  released: number;
  freq: number;
  heading: number;
  rotating: boolean;
  dropped: number;
  acked: number;
}

export interface ServerError {
  error: string;
}

export type ServerMessage = Snapshot | ServerError;

export type Command =
  | { cmd: "set_frequency"; hz: number }
  | { cmd: "set_heading"; rad: number }
  | { cmd: "start_rotation" }
  | { cmd: "stop_rotation" }
  | { cmd: "trigger_fus"; duration: number }
  | { cmd: "reset" }
  | { cmd: "load_scene"; name: string };

export type WireCommand = Command & { seq: number };

export function isSnapshot(msg: ServerMessage): msg is Snapshot {
  return (msg as Snapshot).t !== undefined;
}

export function parseServerMessage(raw: string): ServerMessage | null {
  try {
    const data = JSON.parse(raw);
    if (typeof data !== "object" || data === null) return null;
    return data as ServerMessage;
  } catch {
    return null;
  }
}
