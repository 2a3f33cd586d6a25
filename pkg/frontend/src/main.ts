/** DOM shell: wires the slice canvas, scrub controls, seed modes, side
 * panel and export buttons to the store. All segmentation work happens on
 * the server; this file only routes clicks and renders snapshots.
 */

import { ApiClient } from "./api.js";
import { ViewerStore, ViewerSnapshot } from "./state.js";
import { canvasToVoxel, drawContours, drawMarkers } from "./viewer.js";

type SeedMode = "primary" | "extra";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

function download(name: string, buf: ArrayBuffer): void {
  const url = URL.createObjectURL(new Blob([buf]));
  const a = el("a", { href: url, download: name });
  a.click();
  URL.revokeObjectURL(url);
}

export function mount(root: HTMLElement, baseUrl: string): ViewerStore {
  const api = new ApiClient(baseUrl);
  const store = new ViewerStore(api);

  const pathInput = el("input", { placeholder: "volume path on server", size: "40" });
  const refInput = el("input", { placeholder: "reference mask (optional)", size: "40" });
  const openBtn = el("button", {}, "Open");
  const canvas = el("canvas", { width: "512", height: "512" });
  const sliceSlider = el("input", { type: "range", min: "0", max: "0", value: "0" });
  const sliceLabel = el("span", {}, "slice –");
  const loInput = el("input", { type: "number", value: "0", step: "1" });
  const hiInput = el("input", { type: "number", value: "0", step: "1" });
  const busyBadge = el("span", { class: "busy" }, "");
  const errorLine = el("div", { class: "error" }, "");
  const panel = el("ul", { class: "seeds" });
  const modeBoxes: Record<SeedMode, HTMLInputElement> = {
    primary: el("input", { type: "radio", name: "mode", value: "primary", checked: "" }),
    extra: el("input", { type: "radio", name: "mode", value: "extra" }),
  };
  const exportBtns = {
    mask: el("button", {}, "Export mask"),
    mesh: el("button", {}, "Export mesh"),
    csv: el("button", {}, "Export CSV"),
  };

  const bar = el("div", { class: "bar" });
  bar.append(pathInput, refInput, openBtn, busyBadge);
  const controls = el("div", { class: "controls" });
  controls.append(
    sliceLabel,
    sliceSlider,
    el("span", {}, "window"),
    loInput,
    hiInput,
    modeBoxes.primary,
    el("span", {}, "primary"),
    modeBoxes.extra,
    el("span", {}, "border"),
    exportBtns.mask,
    exportBtns.mesh,
    exportBtns.csv,
  );
  const side = el("div", { class: "side" });
  side.append(el("h3", {}, "Seeds of last request"), panel);
  root.append(bar, controls, canvas, side, errorLine);

  const ctx = canvas.getContext("2d")!;
  let scale = 8;
  const img = new Image();
  let imgKey = "";

  const mode = (): SeedMode => (modeBoxes.extra.checked ? "extra" : "primary");

  function redraw(snap: ViewerSnapshot): void {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (img.complete && img.naturalWidth > 0) {
      ctx.imageSmoothingEnabled = false;
      ctx.drawImage(img, 0, 0, img.naturalWidth * scale, img.naturalHeight * scale);
    }
    drawContours(ctx, store.contoursFor(snap.slice), scale);
    drawMarkers(ctx, snap.primary, snap.extras, snap.slice, scale);
  }

  function render(snap: ViewerSnapshot): void {
    busyBadge.textContent = snap.busy ? "segmenting…" : "";
    errorLine.textContent = snap.lastError ?? "";
    for (const btn of Object.values(exportBtns)) btn.disabled = !store.canExport();
    panel.replaceChildren();
    if (snap.sentSeeds) {
      const fmt = (s: { x: number; y: number; z: number }) =>
        `(${s.x.toFixed(1)}, ${s.y.toFixed(1)}, ${s.z.toFixed(1)})`;
      panel.append(el("li", {}, `primary ${fmt(snap.sentSeeds.primary)}`));
      for (const s of snap.sentSeeds.extras) panel.append(el("li", {}, `border ${fmt(s)}`));
    }
    if (!snap.sessionId) return;

    sliceSlider.max = String(snap.dims[2] - 1);
    sliceSlider.value = String(snap.slice);
    sliceLabel.textContent = `slice ${snap.slice}`;
    scale = Math.max(1, Math.floor(512 / Math.max(snap.dims[0], snap.dims[1])));
    canvas.width = snap.dims[0] * scale;
    canvas.height = snap.dims[1] * scale;

    const key = api.sliceUrl(snap.sessionId, snap.slice, snap.windowLo, snap.windowHi);
    if (key !== imgKey) {
      imgKey = key;
      img.src = key;
    }
    redraw(snap);
  }

  img.onload = () => redraw(store.snapshot());
  store.subscribe(render);

  openBtn.onclick = async () => {
    try {
      await store.open(pathInput.value, refInput.value || undefined);
      const snap = store.snapshot();
      loInput.value = String(snap.windowLo);
      hiInput.value = String(snap.windowHi);
    } catch (err) {
      errorLine.textContent = err instanceof Error ? err.message : String(err);
    }
  };
  sliceSlider.oninput = () => store.setSlice(Number(sliceSlider.value));
  const onWindow = () => store.setWindow(Number(loInput.value), Number(hiInput.value));
  loInput.onchange = onWindow;
  hiInput.onchange = onWindow;

  canvas.onclick = (ev: MouseEvent) => {
    const snap = store.snapshot();
    if (!snap.sessionId) return;
    const rect = canvas.getBoundingClientRect();
    const x = canvasToVoxel(ev.clientX - rect.left, scale, snap.dims[0]);
    const y = canvasToVoxel(ev.clientY - rect.top, scale, snap.dims[1]);
    if (mode() === "primary") store.placePrimary(x, y);
    else store.clickExtra(x, y, 6 / scale);
  };

  for (const kind of ["mask", "mesh", "csv"] as const) {
    exportBtns[kind].onclick = async () => {
      try {
        const buf = await store.exportResult(kind);
        const ext = kind === "mask" ? "zip" : kind === "mesh" ? "obj" : "csv";
        download(`result.${ext}`, buf);
      } catch (err) {
        errorLine.textContent = err instanceof Error ? err.message : String(err);
      }
    };
  }

  render(store.snapshot());
  return store;
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) mount(root, "");
}
