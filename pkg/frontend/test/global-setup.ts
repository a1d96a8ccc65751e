// Boots one real service process for the whole test run and generates the
// bundled example dataset next to it. Tests reach both through inject().
import { execFileSync, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

async function waitForServer(url: string, tries = 100): Promise<void> {
  for (let i = 0; i < tries; i++) {
    try {
      const response = await fetch(url);
      if (response.ok) {
        return;
      }
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error(`service at ${url} never came up`);
}

export default async function setup(ctx: { provide: (key: string, value: string) => void }) {
  const provide = ctx.provide.bind(ctx);
  const dir = mkdtempSync(join(tmpdir(), "capmine-ui-"));
  const fixtureDir = join(dir, "fixture");
  execFileSync("capmine", ["generate", "--out", fixtureDir, "--preset", "example1", "--seed", "7"]);

  const port = 8300 + Math.floor(Math.random() * 600);
  const server = spawn("capmine", ["serve", "--port", String(port)], { stdio: "ignore" });
  const base = `http://127.0.0.1:${port}`;
  try {
    await waitForServer(`${base}/datasets`);
  } catch (err) {
    server.kill();
    throw err;
  }

  provide("apiBase", base);
  provide("fixtureDir", fixtureDir);

  return () => {
    server.kill();
    rmSync(dir, { recursive: true, force: true });
  };
}
