import { readFileSync } from "node:fs";
import { join } from "node:path";

export interface FixtureFiles {
  data: string;
  location: string;
  attribute: string;
}

export function loadFixture(dir: string): FixtureFiles {
  return {
    data: readFileSync(join(dir, "data.csv"), "utf8"),
    location: readFileSync(join(dir, "location.csv"), "utf8"),
    attribute: readFileSync(join(dir, "attribute.csv"), "utf8"),
  };
}

export function loadManifest(dir: string): any {
  return JSON.parse(readFileSync(join(dir, "manifest.json"), "utf8"));
}

export function asFiles(fixture: FixtureFiles): File[] {
  return [
    new File([fixture.data], "data.csv", { type: "text/csv" }),
    new File([fixture.location], "location.csv", { type: "text/csv" }),
    new File([fixture.attribute], "attribute.csv", { type: "text/csv" }),
  ];
}

/** jsdom has no DataTransfer constructor, so the drop event gets a stub. */
export function dropFiles(target: HTMLElement, files: File[]): void {
  const event = new Event("drop", { bubbles: true, cancelable: true });
  Object.defineProperty(event, "dataTransfer", {
    value: { files, types: ["Files"] },
  });
  target.dispatchEvent(event);
}

export function mount(): HTMLElement {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  root.id = "app";
  document.body.append(root);
  return root;
}

export function setInput(input: HTMLInputElement, value: string): void {
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

export function submitForm(form: HTMLFormElement): void {
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}
