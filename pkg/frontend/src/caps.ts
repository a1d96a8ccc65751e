import { Cap } from "./api";
import { Store, ViewState } from "./store";
import { el } from "./util";

function memberText(cap: Cap): string {
  return cap.members
    .map((m) => `${m.id}:${m.attribute}${m.sign ?? ""}`)
    .join(", ");
}

/**
 * Cap list sorted by support, plus the cache flag from the last mine
 * response. The list is rebuilt only when the result key changes, so a
 * cached resubmission leaves the rendered rows untouched.
 */
export class ResultsPanel {
  readonly el: HTMLElement;
  readonly list: HTMLOListElement;

  private flag: HTMLElement;
  private count: HTMLElement;
  private lastKey: string | null = null;

  constructor(private store: Store) {
    this.el = el("section", "panel results-panel");
    const head = el("div", "results-head");
    head.append(el("h2", "", "Caps"));
    this.count = el("span", "cap-count");
    this.count.id = "cap-count";
    this.flag = el("span", "flag");
    this.flag.id = "cache-flag";
    head.append(this.count, this.flag);
    this.list = el("ol") as HTMLOListElement;
    this.list.id = "cap-list";
    this.el.append(head, this.list);
    store.subscribe((state) => this.render(state));
  }

  private render(state: ViewState): void {
    if (state.cacheHit === null) {
      this.flag.textContent = "";
      this.flag.className = "flag";
    } else {
      this.flag.textContent = state.cacheHit ? "cached" : "computed";
      this.flag.className = state.cacheHit ? "flag hit" : "flag miss";
    }
    for (const item of Array.from(this.list.children)) {
      item.classList.toggle(
        "selected",
        Number((item as HTMLElement).dataset.cap) === state.selectedCap,
      );
    }
    if (state.resultKey === this.lastKey) {
      return;
    }
    this.lastKey = state.resultKey;
    this.list.textContent = "";
    if (!state.result) {
      this.count.textContent = "";
      return;
    }
    const caps = state.result.caps;
    this.count.textContent = `${caps.length} cap${caps.length === 1 ? "" : "s"}`;
    const order = caps
      .map((cap, index) => ({ cap, index }))
      .sort((a, b) => b.cap.support - a.cap.support);
    for (const { cap, index } of order) {
      const item = el("li", "cap-row");
      item.dataset.cap = String(index);
      item.append(
        el("span", "cap-members", memberText(cap)),
        el("span", "cap-support", `support ${cap.support}`),
      );
      item.addEventListener("click", () => {
        const next = this.store.state.selectedCap === index ? null : index;
        this.store.selectCap(next);
      });
      this.list.append(item);
    }
  }
}
