/** DOM wiring: controls on the left, lumen canvas and gauges on the right. */

import { Snapshot } from "./protocol.js";
import { SessionStore, SocketLike } from "./store.js";
import { SceneMeta, buildFrame, drawFrame, gaugeCss } from "./render.js";

const host = location.host || "127.0.0.1:8750";
const wsUrl = `ws://${host}/session`;
const stateUrl = `http://${host}/state`;
const scenesUrl = `http://${host}/scenes`;

// metadata for the bundled scenes; arbitrary files fall back to the rat lumen
const DEFAULT_META: SceneMeta = {
  name: "phantom_rat",
  lumenLengthM: 0.06,
  lumenRadiusM: 0.00425,
};

const store = new SessionStore({
  sessionUrl: wsUrl,
  stateUrl,
  socketFactory: (url) => new WebSocket(url) as unknown as SocketLike,
  fetchFn: async (url) => {
    const resp = await fetch(url);
    if (!resp.ok) return null;
    return (await resp.json()) as Snapshot;
  },
  pollIntervalMs: 500,
});

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (found === null) throw new Error(`missing element #${id}`);
  return found as T;
}

const canvas = el<HTMLCanvasElement>("lumen");
const ctx = canvas.getContext("2d")!;
const freqSlider = el<HTMLInputElement>("freq");
const freqLabel = el<HTMLElement>("freq-label");
const headingDial = el<HTMLInputElement>("heading");
const headingLabel = el<HTMLElement>("heading-label");
const tempLabel = el<HTMLElement>("temp-label");
const tempBar = el<HTMLElement>("temp-bar");
const releaseBar = el<HTMLElement>("release-bar");
const releaseLabel = el<HTMLElement>("release-label");
const statusLabel = el<HTMLElement>("status");
const pendingLabel = el<HTMLElement>("pending");
const sceneSelect = el<HTMLSelectElement>("scene");

let meta: SceneMeta = DEFAULT_META;

freqSlider.addEventListener("input", () => {
  const hz = Number(freqSlider.value);
  freqLabel.textContent = `${hz.toFixed(1)} Hz (pending)`;
  store.sendDebounced("freq", { cmd: "set_frequency", hz });
});

headingDial.addEventListener("input", () => {
  const deg = Number(headingDial.value);
  headingLabel.textContent = `${deg.toFixed(0)}° (pending)`;
  store.sendDebounced("heading", {
    cmd: "set_heading",
    rad: (deg * Math.PI) / 180,
  });
});

el<HTMLButtonElement>("start").addEventListener("click", () => {
  store.send({ cmd: "start_rotation" });
});
el<HTMLButtonElement>("stop").addEventListener("click", () => {
  store.send({ cmd: "stop_rotation" });
});
el<HTMLButtonElement>("reset").addEventListener("click", () => {
  store.send({ cmd: "reset" });
});
el<HTMLButtonElement>("fus").addEventListener("click", () => {
  if (confirm("Fire focused ultrasound for 180 s at the current site?")) {
    store.send({ cmd: "trigger_fus", duration: 180 });
  }
});

sceneSelect.addEventListener("change", () => {
  const name = sceneSelect.value;
  meta = { ...DEFAULT_META, name };
  store.send({ cmd: "load_scene", name });
});

fetch(scenesUrl)
  .then((resp) => resp.json())
  .then((names: string[]) => {
    sceneSelect.innerHTML = "";
    for (const name of names) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      option.selected = name === DEFAULT_META.name;
      sceneSelect.appendChild(option);
    }
  })
  .catch(() => {
    /* offline: selector stays empty */
  });

// render loop decoupled from message arrival: paint the latest frame only
function paint(): void {
  const frame = buildFrame(store.latest, store.status, meta);
  drawFrame(ctx, frame, canvas.width, canvas.height);

  statusLabel.textContent = store.status;
  statusLabel.className = store.status;
  const pendingCount = store.pendingSeqs.length + store.queuedSeqs.length;
  pendingLabel.textContent =
    pendingCount === 0 ? "all commands acked" : `${pendingCount} un-acked`;

  if (store.latest !== null) {
    const snap = store.latest;
    if (!freqLabel.textContent?.includes("pending")) {
      freqLabel.textContent = `${snap.freq.toFixed(1)} Hz`;
    }
    tempLabel.textContent = `${snap.temp_c.toFixed(1)} °C`;
    tempBar.style.width = `${Math.min(
      Math.max(((snap.temp_c - 35) / 10) * 100, 0),
      100,
    )}%`;
    tempBar.style.background = gaugeCss(frame.temperature.color);
    releaseBar.style.width = `${(snap.released * 100).toFixed(1)}%`;
    releaseLabel.textContent = `${(snap.released * 100).toFixed(1)}%`;
  }
  requestAnimationFrame(paint);
}

store.onChange(() => {
  // clear the pending styling once the server acks
  if (store.pendingSeqs.length === 0 && store.latest !== null) {
    freqLabel.textContent = `${store.latest.freq.toFixed(1)} Hz`;
    headingLabel.textContent = `${(
      (store.latest.heading * 180) /
      Math.PI
    ).toFixed(0)}°`;
  }
});

store.connect();
requestAnimationFrame(paint);
