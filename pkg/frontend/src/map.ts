import { SensorInfo } from "./api";
import { sameSensor, Store, ViewState } from "./store";
import { attributeColor, el, svgEl } from "./util";

export interface Projected {
  x: number;
  y: number;
}

// Plate carree with the longitude axis squeezed by cos(latitude), which is
// plenty for the few-kilometre extents sensor networks cover. The y axis is
// flipped so north points up in SVG coordinates.
export function project(lon: number, lat: number, cosLat: number): Projected {
  return { x: lon * cosLat, y: -lat };
}

interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

const MIN_SPAN = 0.0005;

function fitBox(points: Projected[], pad = 0.2): Box {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x);
    minY = Math.min(minY, p.y);
    maxX = Math.max(maxX, p.x);
    maxY = Math.max(maxY, p.y);
  }
  let w = maxX - minX;
  let h = maxY - minY;
  const span = Math.max(w, h, MIN_SPAN);
  const cx = (minX + maxX) / 2;
  const cy = (minY + maxY) / 2;
  w = span * (1 + 2 * pad);
  h = span * (1 + 2 * pad);
  return { x: cx - w / 2, y: cy - h / 2, w, h };
}

/**
 * Sensor map rendered as plain SVG markers on a locally drawn plane; there
 * is no tile layer, so the page works with no network beyond the service.
 * Click a marker to select the sensor; its correlated partners light up
 * with their attribute written above them. Selecting a cap zooms the view
 * to its members.
 */
export class MapView {
  readonly el: HTMLElement;
  readonly svg: SVGSVGElement;

  cosLat = 1;

  private markerLayer: SVGGElement;
  private labelLayer: SVGGElement;
  private partnersEl: HTMLUListElement;
  private legendEl: HTMLElement;
  private markers = new Map<string, SVGCircleElement>();
  private lastSensors: SensorInfo[] | null = null;
  private lastRenderKey = "";

  constructor(private store: Store) {
    this.el = el("section", "panel map-panel");
    this.el.append(el("h2", "", "Map"));
    this.svg = svgEl("svg");
    this.svg.id = "sensor-map";
    this.svg.setAttribute("width", "100%");
    this.svg.setAttribute("height", "360");
    this.markerLayer = svgEl("g");
    this.labelLayer = svgEl("g");
    this.svg.append(this.markerLayer, this.labelLayer);
    this.svg.addEventListener("click", (event) => {
      if (event.target === this.svg) {
        void this.store.selectSensor(null);
      }
    });
    this.legendEl = el("div", "legend");
    const aside = el("aside", "partner-list");
    aside.append(el("h3", "", "Correlated partners"));
    this.partnersEl = el("ul") as HTMLUListElement;
    this.partnersEl.id = "partners";
    aside.append(this.partnersEl);
    this.el.append(this.svg, this.legendEl, aside);
    store.subscribe((state) => this.render(state));
  }

  private markerKey(id: string, attribute: string): string {
    return `${id}:${attribute}`;
  }

  private rebuildMarkers(sensors: SensorInfo[]): void {
    this.markerLayer.textContent = "";
    this.markers.clear();
    const mean = sensors.reduce((acc, s) => acc + s.lat, 0) / (sensors.length || 1);
    this.cosLat = Math.cos((mean * Math.PI) / 180);
    for (const sensor of sensors) {
      const { x, y } = project(sensor.lon, sensor.lat, this.cosLat);
      const marker = svgEl("circle");
      marker.classList.add("marker");
      marker.setAttribute("cx", String(x));
      marker.setAttribute("cy", String(y));
      marker.setAttribute("fill", attributeColor(sensor.attribute));
      marker.dataset.id = sensor.id;
      marker.dataset.attribute = sensor.attribute;
      marker.addEventListener("click", () => {
        const ref = { id: sensor.id, attribute: sensor.attribute };
        const next = sameSensor(this.store.state.selectedSensor, ref) ? null : ref;
        void this.store.selectSensor(next);
      });
      this.markerLayer.append(marker);
      this.markers.set(this.markerKey(sensor.id, sensor.attribute), marker);
    }
    const attributes = [...new Set(sensors.map((s) => s.attribute))].sort();
    this.legendEl.textContent = "";
    for (const attribute of attributes) {
      const entry = el("span", "legend-entry", attribute);
      entry.style.setProperty("--swatch", attributeColor(attribute));
      this.legendEl.append(entry);
    }
  }

  private viewBoxFor(state: ViewState): Box {
    const bySensor = new Map(
      state.sensors.map((s) => [this.markerKey(s.id, s.attribute), s]),
    );
    let focus = state.sensors;
    const cap =
      state.selectedCap !== null && state.result
        ? state.result.caps[state.selectedCap]
        : null;
    if (cap) {
      const members = cap.members
        .map((m) => bySensor.get(this.markerKey(m.id, m.attribute)))
        .filter((s): s is SensorInfo => s !== undefined);
      if (members.length) {
        focus = members;
      }
    }
    return fitBox(focus.map((s) => project(s.lon, s.lat, this.cosLat)));
  }

  private render(state: ViewState): void {
    if (state.sensors !== this.lastSensors) {
      this.lastSensors = state.sensors;
      this.rebuildMarkers(state.sensors);
    }
    if (!state.sensors.length) {
      this.svg.removeAttribute("viewBox");
      this.partnersEl.textContent = "";
      this.lastRenderKey = "";
      return;
    }
    const renderKey = JSON.stringify([
      state.sensors.length,
      state.selectedSensor,
      state.highlighted,
      state.selectedCap,
      state.resultKey,
    ]);
    if (renderKey === this.lastRenderKey) {
      return;
    }
    this.lastRenderKey = renderKey;

    const box = this.viewBoxFor(state);
    this.svg.setAttribute("viewBox", `${box.x} ${box.y} ${box.w} ${box.h}`);
    const r = box.w * 0.02;

    this.labelLayer.textContent = "";
    const highlightKeys = new Set(
      state.highlighted.map((p) => this.markerKey(p.id, p.attribute)),
    );
    for (const [key, marker] of this.markers) {
      marker.setAttribute("r", String(r));
      const selected =
        state.selectedSensor !== null &&
        key === this.markerKey(state.selectedSensor.id, state.selectedSensor.attribute);
      marker.classList.toggle("selected", selected);
      const lit = highlightKeys.has(key);
      marker.classList.toggle("highlight", lit);
      if (lit) {
        const label = svgEl("text");
        label.classList.add("partner-label");
        label.setAttribute("x", marker.getAttribute("cx")!);
        label.setAttribute("y", String(Number(marker.getAttribute("cy")) - r * 1.6));
        label.setAttribute("font-size", String(box.w * 0.035));
        label.setAttribute("text-anchor", "middle");
        label.textContent = marker.dataset.attribute ?? "";
        this.labelLayer.append(label);
      }
    }

    this.partnersEl.textContent = "";
    for (const partner of state.highlighted) {
      this.partnersEl.append(el("li", "partner", `${partner.id} ${partner.attribute}`));
    }
  }
}
