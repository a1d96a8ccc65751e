import { ApiError } from "./api";
import { chunkFile, readFileText } from "./chunk";
import { Store } from "./store";
import { el } from "./util";

const KINDS = ["data", "location", "attribute"] as const;
type Kind = (typeof KINDS)[number];

function classifyByName(name: string): Kind | null {
  const lower = name.toLowerCase();
  if (lower.includes("location")) return "location";
  if (lower.includes("attribute")) return "attribute";
  if (lower.includes("data")) return "data";
  return null;
}

function classifyByHeader(firstLine: string): Kind {
  const cols = firstLine.trim().split(",");
  if (cols.includes("lat") || cols.includes("lon")) return "location";
  if (cols.includes("time") || cols.includes("data")) return "data";
  return "attribute";
}

/**
 * Drag-and-drop plus file-picker ingestion. The data file is sliced into
 * 10,000-line chunks client side and pushed through an upload session with
 * one progress tick per chunk; the commit summary (or the server's
 * complaint, file and line included) lands inline underneath.
 */
export class UploadPanel {
  readonly el: HTMLElement;

  private slots: Partial<Record<Kind, File>> = {};
  private nameInput: HTMLInputElement;
  private dropZone: HTMLElement;
  private statusEl: HTMLElement;
  private progressEl: HTMLUListElement;
  private summaryEl: HTMLElement;
  private errorEl: HTMLElement;
  private uploading = false;

  constructor(private store: Store) {
    this.el = el("section", "panel upload-panel");
    this.el.append(el("h2", "", "Dataset"));

    this.nameInput = el("input");
    this.nameInput.type = "text";
    this.nameInput.value = "uploaded";
    this.nameInput.id = "dataset-name";
    const nameLabel = el("label", "field");
    nameLabel.append(el("span", "", "name"), this.nameInput);
    this.el.append(nameLabel);

    this.dropZone = el("div", "drop-zone", "Drop data, location and attribute CSVs here");
    this.dropZone.id = "drop-zone";
    const fileInput = el("input");
    fileInput.type = "file";
    fileInput.multiple = true;
    fileInput.id = "file-picker";
    fileInput.addEventListener("change", () => {
      if (fileInput.files) {
        this.store.track(this.handleFiles(Array.from(fileInput.files)));
      }
    });

    this.dropZone.addEventListener("dragover", (event) => {
      event.preventDefault();
      this.dropZone.classList.add("active");
    });
    this.dropZone.addEventListener("dragleave", () => this.dropZone.classList.remove("active"));
    this.dropZone.addEventListener("drop", (event) => {
      event.preventDefault();
      this.dropZone.classList.remove("active");
      const transfer = (event as DragEvent).dataTransfer;
      if (transfer?.files) {
        this.store.track(this.handleFiles(Array.from(transfer.files)));
      }
    });

    const uploadButton = el("button", "", "Upload");
    uploadButton.type = "button";
    uploadButton.id = "upload-button";
    uploadButton.addEventListener("click", () => {
      const missing = KINDS.filter((kind) => !this.slots[kind]);
      if (missing.length) {
        this.errorEl.textContent = `cannot commit: missing ${missing.join(", ")} file`;
        return;
      }
      this.store.track(this.start());
    });

    this.statusEl = el("div", "slot-status");
    this.progressEl = el("ul");
    this.progressEl.className = "chunk-progress";
    this.summaryEl = el("div", "upload-summary");
    this.summaryEl.id = "upload-summary";
    this.errorEl = el("div", "error");
    this.errorEl.id = "upload-error";

    this.el.append(this.dropZone, fileInput, uploadButton, this.statusEl, this.progressEl, this.summaryEl, this.errorEl);
    this.renderStatus();
  }

  private async handleFiles(files: File[]): Promise<void> {
    this.errorEl.textContent = "";
    for (const file of files) {
      let kind = classifyByName(file.name);
      if (!kind) {
        const text = await readFileText(file);
        kind = classifyByHeader(text.split("\n", 1)[0]);
      }
      this.slots[kind] = file;
    }
    this.renderStatus();
    if (KINDS.every((kind) => this.slots[kind]) && !this.uploading) {
      await this.start();
    }
  }

  private renderStatus(): void {
    const parts = KINDS.map((kind) => (this.slots[kind] ? `${kind} ok` : `${kind} missing`));
    this.statusEl.textContent = parts.join(" / ");
  }

  private async start(): Promise<void> {
    if (this.uploading) {
      return;
    }
    this.uploading = true;
    this.progressEl.textContent = "";
    this.summaryEl.textContent = "";
    this.errorEl.textContent = "";
    const name = this.nameInput.value.trim() || "uploaded";
    try {
      const chunks: Record<Kind, string[]> = { data: [], location: [], attribute: [] };
      for (const kind of KINDS) {
        const text = await readFileText(this.slots[kind]!);
        const parts = chunkFile(text);
        if (!parts.length) {
          throw new Error(`${kind} file is empty`);
        }
        chunks[kind] = parts;
      }
      const expected = Object.fromEntries(KINDS.map((kind) => [kind, chunks[kind].length]));
      await this.store.api.openUploadSession(name, expected);
      for (const kind of KINDS) {
        for (let seq = 0; seq < chunks[kind].length; seq++) {
          await this.store.api.putChunk(name, kind, seq, chunks[kind][seq]);
          const tick = el("li", "chunk-tick", `${kind} ${seq + 1}/${chunks[kind].length}`);
          tick.dataset.kind = kind;
          this.progressEl.append(tick);
        }
      }
      const summary = await this.store.api.commitUpload(name);
      this.summaryEl.textContent =
        `${summary.name}: ${summary.sensor_count} sensors, ` +
        `${summary.attribute_count} attributes, ${summary.timestamp_count} timestamps ` +
        `(${summary.content_hash.slice(0, 12)})`;
      await this.store.setDataset(name, summary);
    } catch (err) {
      if (err instanceof ApiError || err instanceof Error) {
        this.errorEl.textContent = err.message;
      } else {
        this.errorEl.textContent = String(err);
      }
    } finally {
      this.uploading = false;
    }
  }
}
