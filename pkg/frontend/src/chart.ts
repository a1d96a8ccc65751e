import { ApiError, Cap, SeriesSlice } from "./api";
import { SensorRef, Store, ViewState, WindowRange } from "./store";
import { attributeColor, el, svgEl } from "./util";

const W = 800;
const H = 260;
const PAD = { left: 46, right: 12, top: 12, bottom: 22 };

function sensorKey(ref: SensorRef): string {
  return `${ref.id}:${ref.attribute}`;
}

/**
 * Overlaid time-series chart for the selected sensor and its partners (or a
 * selected cap's members), fetched from the series endpoint; zooming and
 * panning narrow the window and refetch. The active cap's co-evolving
 * timestamps are drawn as vertical marks, so the alignment the mining is
 * built on is visible instead of left to the eye.
 */
export class ChartView {
  readonly el: HTMLElement;
  readonly svg: SVGSVGElement;

  private plotLayer: SVGGElement;
  private markLayer: SVGGElement;
  private axisLayer: SVGGElement;
  private noticeEl: HTMLElement;
  private dataset: string | null = null;
  private fullTimes: number[] | null = null;
  private seq = 0;
  private lastFetchKey = "";

  constructor(private store: Store) {
    this.el = el("section", "panel chart-panel");
    const head = el("div", "chart-head");
    head.append(el("h2", "", "Series"));
    for (const [id, text] of [
      ["zoom-in", "+"],
      ["zoom-out", "-"],
      ["pan-left", "<"],
      ["pan-right", ">"],
    ]) {
      const button = el("button", "chart-button", text);
      button.type = "button";
      button.id = id;
      button.addEventListener("click", () => this.nudge(id));
      head.append(button);
    }
    this.el.append(head);
    this.svg = svgEl("svg");
    this.svg.id = "series-chart";
    this.svg.setAttribute("viewBox", `0 0 ${W} ${H}`);
    this.svg.setAttribute("width", "100%");
    this.axisLayer = svgEl("g");
    this.markLayer = svgEl("g");
    this.plotLayer = svgEl("g");
    this.svg.append(this.axisLayer, this.markLayer, this.plotLayer);
    this.noticeEl = el("div", "chart-notice");
    this.noticeEl.id = "chart-notice";
    this.el.append(this.svg, this.noticeEl);
    store.subscribe((state) => this.render(state));
  }

  private plotted(state: ViewState): SensorRef[] {
    if (state.selectedCap !== null && state.result) {
      const cap = state.result.caps[state.selectedCap];
      if (cap) {
        return cap.members.map((m) => ({ id: m.id, attribute: m.attribute }));
      }
    }
    if (!state.selectedSensor) {
      return [];
    }
    const seen = new Set<string>();
    const out: SensorRef[] = [];
    for (const ref of [state.selectedSensor, ...state.highlighted]) {
      const key = sensorKey(ref);
      if (!seen.has(key)) {
        seen.add(key);
        out.push(ref);
      }
    }
    return out;
  }

  private activeCap(state: ViewState): Cap | null {
    if (!state.result) {
      return null;
    }
    if (state.selectedCap !== null) {
      return state.result.caps[state.selectedCap] ?? null;
    }
    const picked = state.selectedSensor;
    if (!picked) {
      return null;
    }
    return (
      state.result.caps.find((cap) =>
        cap.members.some((m) => m.id === picked.id && m.attribute === picked.attribute),
      ) ?? null
    );
  }

  private epochForIndex(state: ViewState, index: number): number | null {
    if (state.summary) {
      const grid = state.summary.grid;
      return index < grid.count ? grid.start + index * grid.step : null;
    }
    if (this.fullTimes && index < this.fullTimes.length) {
      return this.fullTimes[index];
    }
    return null;
  }

  private fullExtent(state: ViewState): WindowRange | null {
    if (state.summary) {
      const grid = state.summary.grid;
      return { from: grid.start, to: grid.start + (grid.count - 1) * grid.step };
    }
    if (this.fullTimes && this.fullTimes.length) {
      return { from: this.fullTimes[0], to: this.fullTimes[this.fullTimes.length - 1] };
    }
    return null;
  }

  private nudge(control: string): void {
    const state = this.store.state;
    const full = this.fullExtent(state);
    if (!full) {
      return;
    }
    const current = state.window ?? full;
    const span = current.to - current.from;
    let from = current.from;
    let to = current.to;
    switch (control) {
      case "zoom-in": {
        const quarter = Math.max(span / 4, 1);
        from = current.from + quarter;
        to = current.to - quarter;
        break;
      }
      case "zoom-out":
        from = current.from - span / 2;
        to = current.to + span / 2;
        break;
      case "pan-left":
        from -= span / 4;
        to -= span / 4;
        break;
      case "pan-right":
        from += span / 4;
        to += span / 4;
        break;
    }
    from = Math.max(from, full.from);
    to = Math.min(to, full.to);
    if (from <= full.from && to >= full.to) {
      this.store.setWindow(null);
    } else {
      this.store.setWindow({ from: Math.round(from), to: Math.round(to) });
    }
  }

  private render(state: ViewState): void {
    if (state.dataset !== this.dataset) {
      this.dataset = state.dataset;
      this.fullTimes = null;
    }
    const sensors = this.plotted(state);
    if (!sensors.length) {
      this.lastFetchKey = "";
      this.plotLayer.textContent = "";
      this.markLayer.textContent = "";
      this.axisLayer.textContent = "";
      this.noticeEl.textContent = state.dataset ? "select a sensor or a cap" : "";
      return;
    }
    const fetchKey = JSON.stringify([
      state.dataset,
      sensors.map(sensorKey),
      state.window,
      state.resultKey,
      state.selectedCap,
    ]);
    if (fetchKey === this.lastFetchKey) {
      return;
    }
    this.lastFetchKey = fetchKey;
    void this.store.track(this.load(state, sensors, fetchKey));
  }

  private async load(state: ViewState, sensors: SensorRef[], fetchKey: string): Promise<void> {
    const ticket = ++this.seq;
    const name = state.dataset!;
    let slices: SeriesSlice[];
    try {
      slices = await Promise.all(
        sensors.map((ref) =>
          this.store.api.series(name, ref.id, ref.attribute, state.window ?? undefined),
        ),
      );
    } catch (err) {
      if (ticket !== this.seq) {
        return;
      }
      if (err instanceof ApiError && err.status === 416) {
        this.plotLayer.textContent = "";
        this.markLayer.textContent = "";
        this.noticeEl.textContent = "window misses the time grid";
      } else if (err instanceof Error) {
        this.noticeEl.textContent = err.message;
      }
      this.lastFetchKey = "";
      return;
    }
    if (ticket !== this.seq || fetchKey !== this.lastFetchKey) {
      return;
    }
    if (!state.window && slices.length) {
      this.fullTimes = slices[0].timestamps;
    }
    this.noticeEl.textContent = "";
    this.draw(state, sensors, slices);
  }

  private draw(state: ViewState, sensors: SensorRef[], slices: SeriesSlice[]): void {
    this.plotLayer.textContent = "";
    this.markLayer.textContent = "";
    this.axisLayer.textContent = "";

    let tLo = Infinity;
    let tHi = -Infinity;
    let vLo = Infinity;
    let vHi = -Infinity;
    for (const slice of slices) {
      for (const t of slice.timestamps) {
        tLo = Math.min(tLo, t);
        tHi = Math.max(tHi, t);
      }
      for (const v of slice.values) {
        if (v !== null) {
          vLo = Math.min(vLo, v);
          vHi = Math.max(vHi, v);
        }
      }
    }
    if (!Number.isFinite(tLo) || !Number.isFinite(vLo)) {
      this.noticeEl.textContent = "no values in this window";
      return;
    }
    if (tHi === tLo) {
      tHi = tLo + 1;
    }
    if (vHi === vLo) {
      vLo -= 1;
      vHi += 1;
    }
    const vPad = (vHi - vLo) * 0.05;
    vLo -= vPad;
    vHi += vPad;
    const plotW = W - PAD.left - PAD.right;
    const plotH = H - PAD.top - PAD.bottom;
    const xOf = (t: number) => PAD.left + ((t - tLo) / (tHi - tLo)) * plotW;
    const yOf = (v: number) => PAD.top + (1 - (v - vLo) / (vHi - vLo)) * plotH;

    const cap = this.activeCap(state);
    if (cap) {
      for (const index of cap.timestamps) {
        const epoch = this.epochForIndex(state, index);
        if (epoch === null || epoch < tLo || epoch > tHi) {
          continue;
        }
        const mark = svgEl("line");
        mark.classList.add("co-mark");
        mark.dataset.time = String(epoch);
        mark.setAttribute("x1", String(xOf(epoch)));
        mark.setAttribute("x2", String(xOf(epoch)));
        mark.setAttribute("y1", String(PAD.top));
        mark.setAttribute("y2", String(PAD.top + plotH));
        this.markLayer.append(mark);
      }
    }

    for (let i = 0; i < slices.length; i++) {
      const slice = slices[i];
      const color = attributeColor(sensors[i].attribute);
      let run: string[] = [];
      const flush = () => {
        if (run.length >= 2) {
          const line = svgEl("polyline");
          line.classList.add("series");
          line.dataset.sensor = sensorKey(sensors[i]);
          line.setAttribute("points", run.join(" "));
          line.setAttribute("fill", "none");
          line.setAttribute("stroke", color);
          this.plotLayer.append(line);
        }
        run = [];
      };
      for (let j = 0; j < slice.values.length; j++) {
        const value = slice.values[j];
        if (value === null) {
          flush();
        } else {
          run.push(`${xOf(slice.timestamps[j])},${yOf(value)}`);
        }
      }
      flush();
    }

    const axisText = (x: number, y: number, text: string, anchor: string) => {
      const node = svgEl("text");
      node.classList.add("axis-label");
      node.setAttribute("x", String(x));
      node.setAttribute("y", String(y));
      node.setAttribute("text-anchor", anchor);
      node.textContent = text;
      this.axisLayer.append(node);
    };
    axisText(PAD.left - 6, PAD.top + 10, vHi.toFixed(2), "end");
    axisText(PAD.left - 6, PAD.top + plotH, vLo.toFixed(2), "end");
    axisText(PAD.left, H - 6, new Date(tLo * 1000).toISOString().slice(0, 16), "start");
    axisText(W - PAD.right, H - 6, new Date(tHi * 1000).toISOString().slice(0, 16), "end");
  }
}
