import { ApiClient } from "./api";
import { ResultsPanel } from "./caps";
import { ChartView } from "./chart";
import { ParamForm } from "./form";
import { MapView } from "./map";
import { Store } from "./store";
import { UploadPanel } from "./upload";
import { el } from "./util";

export interface App {
  store: Store;
  upload: UploadPanel;
  form: ParamForm;
  results: ResultsPanel;
  map: MapView;
  chart: ChartView;
  idle(): Promise<void>;
}

export function createApp(root: HTMLElement, api: ApiClient): App {
  const store = new Store(api);
  const upload = new UploadPanel(store);
  const form = new ParamForm(store);
  const results = new ResultsPanel(store);
  const map = new MapView(store);
  const chart = new ChartView(store);

  const header = el("header");
  header.append(el("h1", "", "capmine workbench"));
  const main = el("main", "layout");
  const controls = el("div", "column controls");
  controls.append(upload.el, form.el, results.el);
  const views = el("div", "column views");
  views.append(map.el, chart.el);
  main.append(controls, views);
  root.append(header, main);

  return { store, upload, form, results, map, chart, idle: () => store.idle() };
}
