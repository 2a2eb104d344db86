/** Explorer wiring: sliders -> service -> 3D view and readouts. */

import { OrbitCamera } from "./camera.js";
import { EmbodyClient } from "./client.js";
import { ExplorerState } from "./panel.js";
import { buildRequest } from "./protocol.js";
import { renderScene } from "./renderer.js";
import { buildScene, Scene } from "./scene.js";
import { EmbodyResponse, FINGER_NAMES, HandsResponse } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (found === null) throw new Error(`missing element #${id}`);
  return found as T;
}

function formatRad(value: number): string {
  return value.toFixed(3);
}

async function start(): Promise<void> {
  const catalog: HandsResponse = await (await fetch("/api/hands")).json();
  const state = new ExplorerState(catalog);

  const canvas = el<HTMLCanvasElement>("view");
  const ctx = canvas.getContext("2d")!;
  const camera = new OrbitCamera();
  const banner = el<HTMLDivElement>("banner");
  const handSelect = el<HTMLSelectElement>("hand-select");
  const sliderPanel = el<HTMLDivElement>("sliders");
  const readoutPanel = el<HTMLDivElement>("readouts");
  const residualPanel = el<HTMLDivElement>("residuals");

  let scene: Scene | null = null;
  let latest: EmbodyResponse | null = null;
  let dirty = true;

  const protocol = location.protocol === "https:" ? "wss" : "ws";
  const client = new EmbodyClient(`${protocol}://${location.host}/ws/embody`, {
    onResponse: (response) => {
      // render only acknowledged state, and only the newest one
      latest = response;
      scene = buildScene(response, state.hand());
      updateReadouts(response);
      dirty = true;
    },
    onStatus: (connected) => {
      banner.classList.toggle("hidden", connected);
      if (connected) pushState();
    },
    onError: (message) => console.error(message),
  });

  function pushState(): void {
    client.send(buildRequest(state.selectedHand, [...state.orientation],
                             [0, 0, 0], state.fingerAngles));
  }

  function updateReadouts(response: EmbodyResponse | null): void {
    readoutPanel.replaceChildren();
    for (const row of state.readouts(response?.actuated)) {
      const div = document.createElement("div");
      div.className = "readout" + (row.fixed ? " fixed" : "");
      const value = row.value === null ? "-" : formatRad(row.value);
      div.textContent = `${row.name}: ${value}${row.fixed ? " (fixed)" : ""}`;
      readoutPanel.appendChild(div);
    }
    residualPanel.replaceChildren();
    if (response !== null) {
      for (const finger of FINGER_NAMES) {
        const residual = response.residuals[finger];
        if (residual === undefined) continue;
        const div = document.createElement("div");
        div.textContent = `${finger}: ${(residual * 1000).toFixed(2)} mm`;
        residualPanel.appendChild(div);
      }
    }
  }

  function rebuildSliders(): void {
    sliderPanel.replaceChildren();
    let group = "";
    for (const spec of state.sliderSpecs()) {
      if (spec.group !== group) {
        group = spec.group;
        const heading = document.createElement("h3");
        heading.textContent = group;
        sliderPanel.appendChild(heading);
      }
      const row = document.createElement("div");
      row.className = "slider-row";
      const label = document.createElement("label");
      label.textContent = spec.label;
      const input = document.createElement("input");
      input.type = "range";
      input.min = String(spec.min);
      input.max = String(spec.max);
      input.step = "0.005";
      input.value = String(spec.value);
      const value = document.createElement("span");
      value.textContent = formatRad(spec.value);
      input.addEventListener("input", () => {
        const applied = state.applySlider(spec.id, Number(input.value));
        value.textContent = formatRad(applied);
        pushState();
      });
      row.append(label, input, value);
      sliderPanel.appendChild(row);
    }
  }

  for (const hand of state.hands) {
    const option = document.createElement("option");
    option.value = hand.id;
    option.textContent = `${hand.name} (${hand.free_actuated.length} actuated)`;
    handSelect.appendChild(option);
  }
  handSelect.addEventListener("change", () => {
    state.selectHand(handSelect.value);
    updateReadouts(null);  // repopulate from the new hand's joint list
    pushState();
  });

  // orbit interactions
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  canvas.addEventListener("mousedown", (e) => {
    dragging = true;
    lastX = e.clientX;
    lastY = e.clientY;
  });
  window.addEventListener("mouseup", () => (dragging = false));
  window.addEventListener("mousemove", (e) => {
    if (!dragging) return;
    camera.orbit(-(e.clientX - lastX) * 0.01, -(e.clientY - lastY) * 0.01);
    lastX = e.clientX;
    lastY = e.clientY;
    dirty = true;
  });
  canvas.addEventListener("wheel", (e) => {
    e.preventDefault();
    camera.zoom(e.deltaY > 0 ? 1.1 : 0.9);
    dirty = true;
  });

  function resize(): void {
    canvas.width = canvas.clientWidth;
    canvas.height = canvas.clientHeight;
    dirty = true;
  }
  window.addEventListener("resize", resize);
  resize();

  function frame(): void {
    if (dirty && scene !== null) {
      renderScene(ctx, camera, scene, canvas.width, canvas.height);
      dirty = false;
    }
    requestAnimationFrame(frame);
  }

  rebuildSliders();
  updateReadouts(latest);
  client.connect();
  requestAnimationFrame(frame);
}

start().catch((error) => {
  console.error(error);
  const banner = document.getElementById("banner");
  if (banner !== null) {
    banner.textContent = `failed to start: ${error}`;
    banner.classList.remove("hidden");
  }
});
