/**
 * Client session state: one socket, monotone command sequencing, an
 * optimistic pending set resolved by snapshot acks, and a bounded retry
 * queue that survives disconnects.  All rendered values derive from the
 * latest snapshot; pending commands are styled as such, never merged in.
 *
 * The WebSocket constructor, fetch, and timers are injectable so the same
 * store runs in the browser and under node tests.
 */

import {
  Command,
  ServerMessage,
  Snapshot,
  WireCommand,
  isSnapshot,
  parseServerMessage,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export type CommandPhase = "queued" | "pending" | "acked" | "rejected";

export interface CommandRecord {
  seq: number;
  command: Command;
  phase: CommandPhase;
  /** phase history, oldest first, e.g. ["pending", "acked"] */
  transitions: CommandPhase[];
}

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
}

export interface StoreOptions {
  sessionUrl: string;
  stateUrl?: string;
  socketFactory: (url: string) => SocketLike;
  fetchFn?: (url: string) => Promise<Snapshot | null>;
  reconnectDelayMs?: number;
  pollIntervalMs?: number;
  debounceMs?: number;
  maxQueue?: number;
  setTimeoutFn?: typeof setTimeout;
  clearTimeoutFn?: typeof clearTimeout;
}

export const DEFAULT_MAX_QUEUE = 32;
export const DEFAULT_DEBOUNCE_MS = 50;
export const DEFAULT_POLL_INTERVAL_MS = 500;

export class SessionStore {
  status: ConnectionStatus = "disconnected";
  latest: Snapshot | null = null;
  lastError: string | null = null;
  /** snapshots arrived since connect, for cadence diagnostics */
  snapshotCount = 0;
  rejectedCommands = 0;

  readonly records = new Map<number, CommandRecord>();
  readonly queue: WireCommand[] = [];
  private readonly pending = new Map<number, WireCommand>();

  private seq = 0;
  private socket: SocketLike | null = null;
  private closed = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private pollTimer: ReturnType<typeof setTimeout> | null = null;
  private debounceTimers = new Map<string, ReturnType<typeof setTimeout>>();
  private listeners: (() => void)[] = [];

  private readonly opts: Required<
    Omit<StoreOptions, "fetchFn" | "stateUrl">
  > & { fetchFn: StoreOptions["fetchFn"]; stateUrl: string | undefined };

  constructor(options: StoreOptions) {
    this.opts = {
      sessionUrl: options.sessionUrl,
      stateUrl: options.stateUrl,
      socketFactory: options.socketFactory,
      fetchFn: options.fetchFn,
      reconnectDelayMs: options.reconnectDelayMs ?? 500,
      pollIntervalMs: options.pollIntervalMs ?? DEFAULT_POLL_INTERVAL_MS,
      debounceMs: options.debounceMs ?? DEFAULT_DEBOUNCE_MS,
      maxQueue: options.maxQueue ?? DEFAULT_MAX_QUEUE,
      setTimeoutFn: options.setTimeoutFn ?? setTimeout,
      clearTimeoutFn: options.clearTimeoutFn ?? clearTimeout,
    };
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  get pendingSeqs(): number[] {
    return [...this.pending.keys()].sort((a, b) => a - b);
  }

  get queuedSeqs(): number[] {
    return this.queue.map((c) => c.seq);
  }

  // --- connection management ------------------------------------------

  connect(): void {
    this.closed = false;
    this.openSocket();
    this.startPolling();
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer !== null) this.opts.clearTimeoutFn(this.reconnectTimer);
    if (this.pollTimer !== null) this.opts.clearTimeoutFn(this.pollTimer);
    this.socket?.close();
    this.socket = null;
    this.status = "disconnected";
  }

  private openSocket(): void {
    if (this.closed) return;
    this.status = "connecting";
    this.emit();
    let socket: SocketLike;
    try {
      socket = this.opts.socketFactory(this.opts.sessionUrl);
    } catch {
      this.onSocketDown();
      return;
    }
    this.socket = socket;
    socket.onopen = () => {
      this.status = "connected";
      this.lastError = null;
      this.flushOnConnect();
      this.emit();
    };
    socket.onmessage = (event) => {
      this.handleMessage(String(event.data));
    };
    socket.onclose = () => this.onSocketDown();
    socket.onerror = () => {
      /* close always follows */
    };
  }

  private onSocketDown(): void {
    if (this.status === "disconnected" && this.socket === null) return;
    this.socket = null;
    this.status = "disconnected";
    // anything unacknowledged goes back on the retry queue, in order
    const unacked = [...this.pending.values()].sort((a, b) => a.seq - b.seq);
    this.pending.clear();
    for (const cmd of unacked) {
      this.enqueue(cmd, true);
    }
    this.emit();
    if (!this.closed) {
      this.reconnectTimer = this.opts.setTimeoutFn(
        () => this.openSocket(),
        this.opts.reconnectDelayMs,
      );
    }
  }

  private flushOnConnect(): void {
    const backlog = [...this.queue].sort((a, b) => a.seq - b.seq);
    this.queue.length = 0;
    for (const cmd of backlog) this.transmit(cmd);
  }

  // --- commands ---------------------------------------------------------

  /** Send a command now (or queue it while disconnected). */
  send(command: Command): number {
    const wire: WireCommand = { ...command, seq: ++this.seq };
    this.records.set(wire.seq, {
      seq: wire.seq,
      command,
      phase: "queued",
      transitions: [],
    });
    if (this.status === "connected" && this.socket !== null) {
      this.transmit(wire);
    } else {
      this.enqueue(wire, false);
    }
    this.emit();
    return wire.seq;
  }

  /**
   * Debounced send for sliders and dials: rapid updates under the same key
   * collapse to the last value, at most one transmission per window.
   */
  sendDebounced(key: string, command: Command): void {
    const existing = this.debounceTimers.get(key);
    if (existing !== undefined) this.opts.clearTimeoutFn(existing);
    this.debounceTimers.set(
      key,
      this.opts.setTimeoutFn(() => {
        this.debounceTimers.delete(key);
        this.send(command);
      }, this.opts.debounceMs),
    );
  }

  private transmit(wire: WireCommand): void {
    if (this.socket === null) {
      this.enqueue(wire, false);
      return;
    }
    try {
      this.socket.send(JSON.stringify(wire));
    } catch {
      this.enqueue(wire, false);
      return;
    }
    this.pending.set(wire.seq, wire);
    this.mark(wire.seq, "pending");
  }

  private enqueue(wire: WireCommand, requeue: boolean): void {
    if (this.queue.length >= this.opts.maxQueue) {
      if (requeue) {
        // keep older commands; room is made by dropping the newest
        const dropped = this.queue.pop();
        if (dropped !== undefined) {
          this.rejectedCommands += 1;
          this.mark(dropped.seq, "rejected");
        }
      } else {
        this.rejectedCommands += 1;
        this.mark(wire.seq, "rejected");
        return;
      }
    }
    this.queue.push(wire);
    this.queue.sort((a, b) => a.seq - b.seq);
    this.mark(wire.seq, "queued");
  }

  private mark(seq: number, phase: CommandPhase): void {
    const record = this.records.get(seq);
    if (record === undefined) return;
    if (record.phase !== phase) {
      record.phase = phase;
      record.transitions.push(phase);
    }
  }

  // --- inbound ----------------------------------------------------------

  private handleMessage(raw: string): void {
    const message: ServerMessage | null = parseServerMessage(raw);
    if (message === null) return;
    if (!isSnapshot(message)) {
      this.lastError = message.error;
      this.emit();
      return;
    }
    this.acceptSnapshot(message);
  }

  private acceptSnapshot(snapshot: Snapshot): void {
    this.latest = snapshot;
    this.snapshotCount += 1;
    for (const seq of [...this.pending.keys()]) {
      if (seq <= snapshot.acked) {
        this.pending.delete(seq);
        this.mark(seq, "acked");
      }
    }
    this.emit();
  }

  // --- polling fallback ---------------------------------------------------

  private startPolling(): void {
    if (this.opts.fetchFn === undefined || this.opts.stateUrl === undefined) {
      return;
    }
    const poll = async () => {
      if (this.closed) return;
      if (this.status !== "connected") {
        try {
          const snap = await this.opts.fetchFn!(this.opts.stateUrl!);
          // poll results refresh telemetry but never ack commands
          if (snap !== null) {
            this.latest = snap;
            this.emit();
          }
        } catch {
          /* server unreachable: keep the last frame */
        }
      }
      if (!this.closed) {
        this.pollTimer = this.opts.setTimeoutFn(poll, this.opts.pollIntervalMs);
      }
    };
    this.pollTimer = this.opts.setTimeoutFn(poll, this.opts.pollIntervalMs);
  }
}
