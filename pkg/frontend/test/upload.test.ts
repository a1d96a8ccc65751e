import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api";
import { Store } from "../src/store";
import { UploadPanel } from "../src/upload";
import { FakeApi } from "./fake-api";
import { dropFiles } from "./helpers";

function setup() {
  const api = new FakeApi();
  const store = new Store(api);
  const panel = new UploadPanel(store);
  document.body.innerHTML = "";
  document.body.append(panel.el);
  return { api, store, panel };
}

function csv(kind: "data" | "location" | "attribute", rows: number): File {
  const header = {
    data: "id,attribute,time,data",
    location: "id,attribute,lat,lon",
    attribute: "id,attribute",
  }[kind];
  const lines = [header];
  for (let i = 0; i < rows; i++) {
    lines.push(`r${i},x,1,2`);
  }
  return new File([lines.join("\n") + "\n"], `${kind}.csv`, { type: "text/csv" });
}

describe("upload panel", () => {
  it("slices a 25,000-line data file into three progress ticks", async () => {
    const { api, store } = setup();
    dropFiles(
      document.getElementById("drop-zone")!,
      [csv("data", 24_999), csv("location", 2), csv("attribute", 2)],
    );
    await store.idle();
    expect(api.sessionCalls).toEqual([
      { name: "uploaded", expected: { data: 3, location: 1, attribute: 1 } },
    ]);
    const dataTicks = document.querySelectorAll('.chunk-tick[data-kind="data"]');
    expect(dataTicks).toHaveLength(3);
    expect(api.chunkCalls.filter((c) => c.kind === "data")).toHaveLength(3);
    expect(api.commitCalls).toBe(1);
    expect(document.getElementById("upload-summary")!.textContent).toContain("3 sensors");
  });

  it("chunks reassemble to the original file", async () => {
    const { api, store } = setup();
    const data = csv("data", 25);
    const original = "id,attribute,time,data\n" + Array.from({ length: 25 }, (_, i) => `r${i},x,1,2`).join("\n") + "\n";
    dropFiles(document.getElementById("drop-zone")!, [data, csv("location", 2), csv("attribute", 2)]);
    await store.idle();
    const sent = api.chunkCalls
      .filter((c) => c.kind === "data")
      .sort((a, b) => a.seq - b.seq)
      .map((c) => c.body)
      .join("");
    expect(sent).toBe(original);
  });

  it("a missing attribute file blocks the commit client-side", async () => {
    const { api, store } = setup();
    dropFiles(document.getElementById("drop-zone")!, [csv("data", 5), csv("location", 2)]);
    await store.idle();
    document.getElementById("upload-button")!.click();
    await store.idle();
    expect(document.getElementById("upload-error")!.textContent).toContain("missing attribute");
    expect(api.sessionCalls).toHaveLength(0);
    expect(api.commitCalls).toBe(0);
  });

  it("classifies an unhelpfully named file by its header", async () => {
    const { api, store } = setup();
    const data = new File(["id,attribute,time,data\nr0,x,1,2\n"], "readings.csv");
    dropFiles(document.getElementById("drop-zone")!, [data, csv("location", 2), csv("attribute", 2)]);
    await store.idle();
    expect(api.chunkCalls.some((c) => c.kind === "data" && c.body.startsWith("id,attribute,time"))).toBe(true);
  });

  it("surfaces the server's file-and-line complaint inline", async () => {
    const { api, store } = setup();
    api.onCommit = async () => {
      throw new ApiError(400, "BadValue", "data.csv line 7: value 'x' is not a number", {});
    };
    dropFiles(document.getElementById("drop-zone")!, [csv("data", 9), csv("location", 2), csv("attribute", 2)]);
    await store.idle();
    expect(document.getElementById("upload-error")!.textContent).toContain("data.csv line 7");
  });

  it("file picker input feeds the same path as a drop", async () => {
    const { api, store } = setup();
    const picker = document.getElementById("file-picker") as HTMLInputElement;
    Object.defineProperty(picker, "files", {
      value: [csv("data", 5), csv("location", 2), csv("attribute", 2)],
    });
    picker.dispatchEvent(new Event("change"));
    await store.idle();
    expect(api.commitCalls).toBe(1);
  });
});
