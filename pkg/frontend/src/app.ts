/**
 * Studio wiring: sliders drive a debounced relight request; the preview
 * always shows the newest response (stale responses are dropped).  A
 * baseline snapshot enables the side-by-side compare view with a
 * client-side difference heatmap.
 */

import { fetchModel, layerUrl, postRelight, ModelSummary } from "./api.js";
import { createDebouncer } from "./debounce.js";
import { absDiffHeatmap } from "./diff.js";
import {
  LayerView,
  RelightBody,
  StudioState,
  clampState,
  defaultState,
  toRelightBody,
  WEIGHT_MAX,
  WEIGHT_MIN,
  EXPOSURE_MIN,
  EXPOSURE_MAX,
} from "./state.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

interface Baseline {
  state: StudioState;
  blob: Blob;
}

export class StudioApp {
  private state: StudioState = defaultState();
  private model: ModelSummary | null = null;
  private requestSeq = 0;
  private shownSeq = 0;
  private baseline: Baseline | null = null;
  private lastBlob: Blob | null = null;
  private debouncer = createDebouncer<RelightBody>((body) => {
    void this.send(body);
  }, 150);

  async start(): Promise<void> {
    try {
      this.model = await fetchModel();
      $("banner").style.display = "none";
    } catch (e) {
      this.showBanner(`service unreachable: ${String(e)}`);
      return;
    }
    this.buildControls();
    this.render();
  }

  private showBanner(message: string): void {
    const banner = $("banner");
    banner.textContent = message;
    banner.style.display = "block";
  }

  private buildControls(): void {
    const controls = $("controls");
    controls.innerHTML = "";

    controls.appendChild(this.modeToggle());
    controls.appendChild(this.shPanel());
    controls.appendChild(this.pointsPanel());

    const weights = document.createElement("fieldset");
    weights.innerHTML = "<legend>detail weights</legend>";
    weights.appendChild(
      this.slider("w_p", WEIGHT_MIN, WEIGHT_MAX, 0.01, this.state.wp, (v) => {
        this.state.wp = v;
      }),
    );
    weights.appendChild(
      this.slider("w_g", WEIGHT_MIN, WEIGHT_MAX, 0.01, this.state.wg, (v) => {
        this.state.wg = v;
      }),
    );
    weights.appendChild(
      this.slider("exposure", EXPOSURE_MIN, EXPOSURE_MAX, 0.05, this.state.exposure, (v) => {
        this.state.exposure = v;
      }),
    );
    controls.appendChild(weights);

    controls.appendChild(this.layerSelect());

    const snap = document.createElement("button");
    snap.textContent = "set compare baseline";
    snap.onclick = () => {
      if (this.lastBlob) {
        this.baseline = {
          state: clampState({ ...this.state, sources: this.state.sources.map((s) => ({ ...s })), sh: [...this.state.sh] }),
          blob: this.lastBlob,
        };
        void this.updateCompare();
      }
    };
    controls.appendChild(snap);

    const diffToggle = document.createElement("label");
    diffToggle.innerHTML = '<input type="checkbox" id="difftoggle"> difference view';
    controls.appendChild(diffToggle);
    $("difftoggle").onchange = () => void this.updateCompare();
  }

  private modeToggle(): HTMLElement {
    const box = document.createElement("fieldset");
    box.innerHTML = "<legend>light</legend>";
    for (const mode of ["sh", "points"] as const) {
      const label = document.createElement("label");
      const radio = document.createElement("input");
      radio.type = "radio";
      radio.name = "lightmode";
      radio.checked = this.state.mode === mode;
      radio.onchange = () => {
        this.state.mode = mode;
        this.syncPanels();
        this.render();
      };
      label.appendChild(radio);
      label.appendChild(document.createTextNode(` ${mode}`));
      box.appendChild(label);
    }
    return box;
  }

  private shPanel(): HTMLElement {
    const panel = document.createElement("fieldset");
    panel.id = "shpanel";
    panel.innerHTML = "<legend>sh coefficients</legend>";
    this.state.sh.forEach((value, i) => {
      panel.appendChild(
        this.slider(`c${i}`, -2, 2, 0.01, value, (v) => {
          this.state.sh[i] = v;
        }),
      );
    });
    return panel;
  }

  private pointsPanel(): HTMLElement {
    const panel = document.createElement("fieldset");
    panel.id = "pointspanel";
    panel.innerHTML = "<legend>point sources</legend>";
    this.state.sources.forEach((src, i) => {
      const row = document.createElement("div");
      row.className = "source-row";
      row.appendChild(document.createTextNode(`source ${i + 1}`));
      row.appendChild(this.slider("az", -360, 360, 1, src.azimuthDeg, (v) => {
        this.state.sources[i].azimuthDeg = v;
      }));
      row.appendChild(this.slider("el", 0, 90, 1, src.elevationDeg, (v) => {
        this.state.sources[i].elevationDeg = v;
      }));
      row.appendChild(this.slider("dist", 10, 2000, 5, src.distance, (v) => {
        this.state.sources[i].distance = v;
      }));
      row.appendChild(this.slider("int", 0, 4, 0.01, src.intensity, (v) => {
        this.state.sources[i].intensity = v;
      }));
      panel.appendChild(row);
    });
    return panel;
  }

  private layerSelect(): HTMLElement {
    const box = document.createElement("fieldset");
    box.innerHTML = "<legend>view</legend>";
    const select = document.createElement("select");
    for (const layer of ["relight", "albedo", "coarse", "sp", "sg"]) {
      const opt = document.createElement("option");
      opt.value = layer;
      opt.textContent = layer;
      select.appendChild(opt);
    }
    select.onchange = () => {
      this.state.layer = select.value as LayerView;
      this.render();
    };
    box.appendChild(select);
    return box;
  }

  private slider(
    name: string,
    min: number,
    max: number,
    step: number,
    value: number,
    apply: (v: number) => void,
  ): HTMLElement {
    const wrap = document.createElement("label");
    wrap.className = "slider";
    const readout = document.createElement("span");
    readout.textContent = `${name} ${value.toFixed(2)}`;
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(min);
    input.max = String(max);
    input.step = String(step);
    input.value = String(value);
    input.oninput = () => {
      const v = parseFloat(input.value);
      apply(v);
      readout.textContent = `${name} ${v.toFixed(2)}`;
      this.render();
    };
    wrap.appendChild(readout);
    wrap.appendChild(input);
    return wrap;
  }

  private syncPanels(): void {
    $("shpanel").style.display = this.state.mode === "sh" ? "" : "none";
    $("pointspanel").style.display = this.state.mode === "points" ? "" : "none";
  }

  /** Push the current state toward the preview (debounced for relight). */
  render(): void {
    if (!this.model) return;
    if (this.state.layer !== "relight") {
      // layer views are static service renders, no debounce needed
      ($("preview") as HTMLImageElement).src = layerUrl(this.state.layer);
      $("stale").style.display = "none";
      return;
    }
    $("stale").style.display = "inline";
    this.debouncer.request(toRelightBody(this.state, this.model));
  }

  private async send(body: RelightBody): Promise<void> {
    const seq = ++this.requestSeq;
    try {
      const blob = await postRelight(body);
      if (seq <= this.shownSeq) return; // a newer response already landed
      this.shownSeq = seq;
      this.lastBlob = blob;
      const img = $("preview") as HTMLImageElement;
      const old = img.dataset.url;
      img.src = URL.createObjectURL(blob);
      img.dataset.url = img.src;
      if (old) URL.revokeObjectURL(old);
      $("stale").style.display = "none";
      $("banner").style.display = "none";
      void this.updateCompare();
    } catch (e) {
      // keep the last image, surface the failure
      this.showBanner(`relight request failed: ${String(e)}`);
      $("stale").style.display = "none";
    }
  }

  private async updateCompare(): Promise<void> {
    const panel = $("compare");
    if (!this.baseline || !this.lastBlob || !this.model) {
      panel.style.display = "none";
      return;
    }
    panel.style.display = "flex";
    const left = $("compare-baseline") as HTMLImageElement;
    if (!left.src) left.src = URL.createObjectURL(this.baseline.blob);
    const right = $("compare-current") as HTMLImageElement;
    right.src = URL.createObjectURL(this.lastBlob);

    const showDiff = ($("difftoggle") as HTMLInputElement).checked;
    const canvas = $("compare-diff") as HTMLCanvasElement;
    canvas.style.display = showDiff ? "" : "none";
    if (!showDiff) return;

    const [a, b] = await Promise.all([
      blobPixels(this.baseline.blob, this.model.width, this.model.height),
      blobPixels(this.lastBlob, this.model.width, this.model.height),
    ]);
    const diff = absDiffHeatmap(a, b, this.model.width, this.model.height);
    canvas.width = this.model.width;
    canvas.height = this.model.height;
    const ctx = canvas.getContext("2d");
    if (ctx) {
      const pixels = new Uint8ClampedArray(diff.data.length);
      pixels.set(diff.data);
      ctx.putImageData(
        new ImageData(pixels, this.model.width, this.model.height), 0, 0,
      );
    }
    $("diff-readout").textContent = `max |diff| = ${diff.maxDiff.toFixed(1)}`;
  }
}

async function blobPixels(blob: Blob, w: number, h: number): Promise<Uint8ClampedArray> {
  const bmp = await createImageBitmap(blob);
  const canvas = document.createElement("canvas");
  canvas.width = w;
  canvas.height = h;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d context unavailable");
  ctx.drawImage(bmp, 0, 0);
  return ctx.getImageData(0, 0, w, h).data;
}
