import { describe, expect, it } from "vitest";

import { chunkFile } from "../src/chunk";

function lines(n: number): string {
  let out = "";
  for (let i = 0; i < n; i++) {
    out += `row-${i},1.0\n`;
  }
  return out;
}

describe("chunkFile", () => {
  it("splits 25,000 lines into three chunks", () => {
    const chunks = chunkFile(lines(25_000));
    expect(chunks).toHaveLength(3);
    expect(chunks[0].split("\n")).toHaveLength(10_001); // trailing split artifact
    expect(chunks[2].split("\n").filter(Boolean)).toHaveLength(5_000);
  });

  it("concatenation reproduces the input exactly", () => {
    for (const text of [lines(3), lines(3).slice(0, -1), "one line no newline", "a\n\n\nb"]) {
      expect(chunkFile(text, 2).join("")).toBe(text);
    }
  });

  it("returns nothing for empty input", () => {
    expect(chunkFile("")).toEqual([]);
  });

  it("keeps an unterminated last line", () => {
    const chunks = chunkFile("a\nb\nc", 2);
    expect(chunks).toEqual(["a\nb\n", "c"]);
  });

  it("rejects a zero chunk size", () => {
    expect(() => chunkFile("a\n", 0)).toThrow();
  });
});
