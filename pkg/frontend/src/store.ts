import { ApiClient, CommitSummary, MineResult, SensorInfo } from "./api";

export interface SensorRef {
  id: string;
  attribute: string;
}

export interface WindowRange {
  from: number;
  to: number;
}

export interface ViewState {
  dataset: string | null;
  summary: CommitSummary | null;
  sensors: SensorInfo[];
  resultKey: string | null;
  result: MineResult | null;
  cacheHit: boolean | null;
  selectedSensor: SensorRef | null;
  /** Exactly the correlated endpoint's answer for the selection, never more. */
  highlighted: SensorRef[];
  selectedCap: number | null;
  /** Chart window in epoch seconds; null means the full extent. */
  window: WindowRange | null;
}

function emptyState(): ViewState {
  return {
    dataset: null,
    summary: null,
    sensors: [],
    resultKey: null,
    result: null,
    cacheHit: null,
    selectedSensor: null,
    highlighted: [],
    selectedCap: null,
    window: null,
  };
}

export function sameSensor(a: SensorRef | null, b: SensorRef | null): boolean {
  if (!a || !b) {
    return a === b;
  }
  return a.id === b.id && a.attribute === b.attribute;
}

type Listener = (state: ViewState) => void;

/**
 * Single source of truth for the page. Concurrent fetches are allowed;
 * each racy topic carries a sequence number and a response that comes back
 * under a stale number is dropped, so the view always shows the newest
 * request's answer. `idle()` resolves once every tracked request settled,
 * which is what the tests await instead of sleeping.
 */
export class Store {
  state: ViewState = emptyState();

  private listeners: Listener[] = [];
  private pending = 0;
  private idleResolvers: (() => void)[] = [];
  private mineSeq = 0;
  private correlatedSeq = 0;

  constructor(readonly api: ApiClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  patch(changes: Partial<ViewState>): void {
    this.state = { ...this.state, ...changes };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  idle(): Promise<void> {
    if (this.pending === 0) {
      return Promise.resolve();
    }
    return new Promise((resolve) => this.idleResolvers.push(resolve));
  }

  /** Count a request toward `idle()`; increments before the first await. */
  track<T>(work: Promise<T>): Promise<T> {
    this.pending += 1;
    const settle = () => {
      this.pending -= 1;
      if (this.pending === 0) {
        for (const resolve of this.idleResolvers.splice(0)) {
          resolve();
        }
      }
    };
    work.then(settle, settle);
    return work;
  }

  async setDataset(name: string, summary: CommitSummary | null = null): Promise<void> {
    this.patch({ ...emptyState(), dataset: name, summary });
    const sensors = await this.track(this.api.sensors(name));
    if (this.state.dataset !== name) {
      return;
    }
    this.patch({ sensors });
  }

  async mine(params: Record<string, unknown>): Promise<void> {
    const name = this.state.dataset;
    if (!name) {
      throw new Error("no dataset selected");
    }
    const ticket = ++this.mineSeq;
    const response = await this.track(this.api.mine(name, params));
    if (ticket !== this.mineSeq || this.state.dataset !== name) {
      return;
    }
    const keyChanged = response.resultKey !== this.state.resultKey;
    this.patch({
      result: response.result,
      resultKey: response.resultKey,
      cacheHit: response.cacheHit,
      ...(keyChanged ? { selectedCap: null } : {}),
    });
    if (keyChanged && this.state.selectedSensor) {
      // partner sets belong to a result, so a new result means new partners
      await this.selectSensor(this.state.selectedSensor);
    }
  }

  async selectSensor(ref: SensorRef | null): Promise<void> {
    const ticket = ++this.correlatedSeq;
    if (!ref) {
      this.patch({ selectedSensor: null, highlighted: [] });
      return;
    }
    this.patch({ selectedSensor: ref, highlighted: [] });
    const name = this.state.dataset;
    const key = this.state.resultKey;
    if (!name || !key) {
      return;
    }
    const partners = await this.track(this.api.correlated(name, ref.id, ref.attribute, key));
    if (ticket !== this.correlatedSeq) {
      return;
    }
    this.patch({ highlighted: partners });
  }

  selectCap(index: number | null): void {
    this.patch({ selectedCap: index });
  }

  setWindow(window: WindowRange | null): void {
    this.patch({ window });
  }
}
