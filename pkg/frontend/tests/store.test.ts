import { describe, expect, it, vi } from "vitest";

import { Snapshot } from "../src/protocol.js";
import { SessionStore, SocketLike } from "../src/store.js";

/** In-memory socket with manual control over lifecycle and traffic. */
class FakeSocket implements SocketLike {
  sent: string[] = [];
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;
  closed = false;

  send(data: string): void {
    if (this.closed) throw new Error("socket closed");
    this.sent.push(data);
  }
  close(): void {
    this.closed = true;
  }
  open(): void {
    this.onopen?.();
  }
  receive(data: unknown): void {
    this.onmessage?.({ data });
  }
  drop(): void {
    this.closed = true;
    this.onclose?.();
  }
}

function snapshotJson(acked: number, overrides: Partial<Snapshot> = {}): string {
  return JSON.stringify({
    t: 0.1,
    pos: [0, 0, 0.0007],
    phase: 0.5,
    sync: true,
    arc: 0.005,
    temp_c: 36,
    released: 0,
    freq: 0,
    heading: 0,
    rotating: false,
    dropped: 0,
    acked,
    ...overrides,
  });
}

function makeStore() {
  const sockets: FakeSocket[] = [];
  const store = new SessionStore({
    sessionUrl: "ws://test/session",
    socketFactory: () => {
      const socket = new FakeSocket();
      sockets.push(socket);
      return socket;
    },
    reconnectDelayMs: 5,
  });
  return { store, sockets };
}

describe("command lifecycle", () => {
  it("assigns strictly increasing sequence numbers", () => {
    const { store, sockets } = makeStore();
    store.connect();
    sockets[0].open();
    const a = store.send({ cmd: "start_rotation" });
    const b = store.send({ cmd: "set_frequency", hz: 3 });
    expect(b).toBeGreaterThan(a);
    const seqs = sockets[0].sent.map((s) => JSON.parse(s).seq);
    expect(seqs).toEqual([...seqs].sort((x, y) => x - y));
  });

  it("tracks pending to acked transitions from snapshots", () => {
    const { store, sockets } = makeStore();
    store.connect();
    sockets[0].open();
    const seq = store.send({ cmd: "set_frequency", hz: 3 });
    expect(store.records.get(seq)?.phase).toBe("pending");
    sockets[0].receive(snapshotJson(seq));
    const record = store.records.get(seq)!;
    expect(record.phase).toBe("acked");
    expect(record.transitions).toEqual(["pending", "acked"]);
  });

  it("surfaces server errors without dropping the session", () => {
    const { store, sockets } = makeStore();
    store.connect();
    sockets[0].open();
    sockets[0].receive(JSON.stringify({ error: "unknown command 'warp'" }));
    expect(store.lastError).toMatch(/warp/);
    expect(store.status).toBe("connected");
  });
});

describe("disconnect behaviour", () => {
  it("queues commands while disconnected, bounded at 32", () => {
    const { store } = makeStore();
    // never connected: everything lands in the queue
    for (let i = 0; i < 40; i++) {
      store.send({ cmd: "set_heading", rad: i / 40 });
    }
    expect(store.queue.length).toBe(32);
    expect(store.rejectedCommands).toBe(8);
  });

  it("requeues unacked pending commands on drop", () => {
    const { store, sockets } = makeStore();
    store.connect();
    sockets[0].open();
    const seq = store.send({ cmd: "start_rotation" });
    sockets[0].drop();
    expect(store.status).toBe("disconnected");
    expect(store.queuedSeqs).toContain(seq);
    expect(store.records.get(seq)?.phase).toBe("queued");
  });

  it("drains the queue in order on reconnect", async () => {
    const { store, sockets } = makeStore();
    const offline = [
      store.send({ cmd: "set_frequency", hz: 2 }),
      store.send({ cmd: "start_rotation" }),
      store.send({ cmd: "set_heading", rad: 1 }),
    ];
    expect(store.queuedSeqs).toEqual(offline);
    store.connect();
    sockets[0].open();
    const seqs = sockets[0].sent.map((s) => JSON.parse(s).seq);
    expect(seqs).toEqual(offline);
    expect(store.queue.length).toBe(0);
    expect(store.pendingSeqs).toEqual(offline);
  });

  it("reconnects after the configured delay", async () => {
    const { store, sockets } = makeStore();
    store.connect();
    sockets[0].open();
    sockets[0].drop();
    await new Promise((resolve) => setTimeout(resolve, 30));
    expect(sockets.length).toBeGreaterThan(1);
    sockets[sockets.length - 1].open();
    expect(store.status).toBe("connected");
    store.close();
  });
});

describe("debounced sends", () => {
  it("collapses rapid slider updates to the last value", async () => {
    vi.useFakeTimers();
    try {
      const { store, sockets } = makeStore();
      store.connect();
      sockets[0].open();
      for (let hz = 0; hz <= 50; hz++) {
        store.sendDebounced("freq", { cmd: "set_frequency", hz: hz / 10 });
      }
      expect(sockets[0].sent.length).toBe(0);
      vi.advanceTimersByTime(60);
      expect(sockets[0].sent.length).toBe(1);
      expect(JSON.parse(sockets[0].sent[0]).hz).toBe(5);
    } finally {
      vi.useRealTimers();
    }
  });

  it("keeps separate debounce keys independent", async () => {
    vi.useFakeTimers();
    try {
      const { store, sockets } = makeStore();
      store.connect();
      sockets[0].open();
      store.sendDebounced("freq", { cmd: "set_frequency", hz: 2 });
      store.sendDebounced("heading", { cmd: "set_heading", rad: 0.5 });
      vi.advanceTimersByTime(60);
      expect(sockets[0].sent.length).toBe(2);
    } finally {
      vi.useRealTimers();
    }
  });
});

describe("polling fallback", () => {
  it("refreshes telemetry from /state while the socket is down", async () => {
    vi.useFakeTimers();
    try {
      const polled: string[] = [];
      const store = new SessionStore({
        sessionUrl: "ws://nowhere/session",
        stateUrl: "http://nowhere/state",
        socketFactory: () => {
          throw new Error("socket unavailable");
        },
        fetchFn: async (url) => {
          polled.push(url);
          return JSON.parse(snapshotJson(0, { arc: 0.011 })) as Snapshot;
        },
        pollIntervalMs: 500,
        reconnectDelayMs: 100000,
      });
      store.connect();
      expect(store.latest).toBeNull();
      await vi.advanceTimersByTimeAsync(1100);
      expect(polled.length).toBe(2);
      expect(store.latest?.arc).toBeCloseTo(0.011, 12);
      store.close();
    } finally {
      vi.useRealTimers();
    }
  });
});
