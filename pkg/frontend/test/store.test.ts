import { describe, expect, it } from "vitest";

import { Store } from "../src/store";
import { deferred, FakeApi, mineResponse } from "./fake-api";

import type { MineResponse, PartnerRef } from "../src/api";

describe("stale response handling", () => {
  it("a superseded mine response is dropped", async () => {
    const api = new FakeApi();
    const store = new Store(api);
    store.patch({ dataset: "d" });
    const first = deferred<MineResponse>();
    const second = deferred<MineResponse>();
    const queue = [first, second];
    api.onMine = () => queue.shift()!.promise;

    const p1 = store.mine({ psi: 1 });
    const p2 = store.mine({ psi: 2 });
    second.resolve(mineResponse("key-new"));
    await p2;
    expect(store.state.resultKey).toBe("key-new");
    first.resolve(mineResponse("key-old"));
    await p1;
    await store.idle();
    expect(store.state.resultKey).toBe("key-new");
  });

  it("clearing the selection clears highlights even with a fetch in flight", async () => {
    const api = new FakeApi();
    const store = new Store(api);
    store.patch({ dataset: "d", resultKey: "k" });
    const slow = deferred<PartnerRef[]>();
    api.onCorrelated = () => slow.promise;

    const inFlight = store.selectSensor({ id: "a", attribute: "temperature" });
    await store.selectSensor(null);
    expect(store.state.selectedSensor).toBeNull();
    expect(store.state.highlighted).toEqual([]);
    slow.resolve([{ id: "b", attribute: "traffic" }]);
    await inFlight;
    await store.idle();
    expect(store.state.highlighted).toEqual([]);
  });
});

describe("highlight invariant", () => {
  it("highlights are exactly the correlated response", async () => {
    const api = new FakeApi();
    const store = new Store(api);
    store.patch({ dataset: "d", resultKey: "k" });
    const partners = [
      { id: "b", attribute: "traffic" },
      { id: "c", attribute: "light" },
    ];
    api.onCorrelated = async () => partners;
    await store.selectSensor({ id: "a", attribute: "temperature" });
    await store.idle();
    expect(store.state.highlighted).toEqual(partners);
    expect(api.correlatedCalls).toEqual([{ id: "a", attribute: "temperature", resultKey: "k" }]);
  });

  it("a sensor in no cap gets zero highlights", async () => {
    const api = new FakeApi();
    const store = new Store(api);
    store.patch({ dataset: "d", resultKey: "k" });
    api.onCorrelated = async () => [];
    await store.selectSensor({ id: "loner", attribute: "rain" });
    await store.idle();
    expect(store.state.selectedSensor).toEqual({ id: "loner", attribute: "rain" });
    expect(store.state.highlighted).toEqual([]);
  });

  it("a new result refreshes the partner set for the current selection", async () => {
    const api = new FakeApi();
    const store = new Store(api);
    store.patch({ dataset: "d", resultKey: "old-key" });
    api.onCorrelated = async () => [{ id: "b", attribute: "traffic" }];
    await store.selectSensor({ id: "a", attribute: "temperature" });
    api.onMine = async () => mineResponse("new-key");
    api.onCorrelated = async () => [];
    await store.mine({ psi: 5 });
    await store.idle();
    expect(api.correlatedCalls.map((c) => c.resultKey)).toEqual(["old-key", "new-key"]);
    expect(store.state.highlighted).toEqual([]);
  });

  it("a cached resubmission leaves selection and highlights alone", async () => {
    const api = new FakeApi();
    const store = new Store(api);
    store.patch({ dataset: "d", resultKey: "k" });
    api.onCorrelated = async () => [{ id: "b", attribute: "traffic" }];
    await store.selectSensor({ id: "a", attribute: "temperature" });
    api.onMine = async () => mineResponse("k", [], true);
    await store.mine({ psi: 1 });
    await store.idle();
    expect(store.state.cacheHit).toBe(true);
    expect(store.state.highlighted).toEqual([{ id: "b", attribute: "traffic" }]);
    expect(api.correlatedCalls).toHaveLength(1);
  });
});

describe("idle", () => {
  it("resolves only after tracked work settles", async () => {
    const api = new FakeApi();
    const store = new Store(api);
    const gate = deferred<string>();
    const tracked = store.track(gate.promise);
    let settled = false;
    const waiter = store.idle().then(() => {
      settled = true;
    });
    await Promise.resolve();
    expect(settled).toBe(false);
    gate.resolve("done");
    await tracked;
    await waiter;
    expect(settled).toBe(true);
  });
});
