import { ApiError } from "./api";
import { buildParams, defaultDraft, FieldError, fieldForMessage, ParamDraft } from "./params";
import { Store } from "./store";
import { el } from "./util";

interface FieldRow {
  input: HTMLInputElement;
  error: HTMLElement;
}

/**
 * The mining parameter form. Drafts are validated locally before anything
 * is sent; a 422 that still comes back from the service is attached to the
 * field its message names.
 */
export class ParamForm {
  readonly el: HTMLFormElement;

  private rows = new Map<string, FieldRow>();
  private toggles = new Map<string, HTMLInputElement>();
  private formError: HTMLElement;

  constructor(private store: Store) {
    this.el = el("form", "panel param-form") as HTMLFormElement;
    this.el.append(el("h2", "", "Parameters"));

    this.addField("epsilon", "ε change threshold (number, rel:frac, or attr=val,...)");
    this.addField("eta_meters", "η distance (m)");
    this.addField("mu", "μ min members");
    this.addField("psi", "ψ min shared timestamps");
    this.addField("max_error", "smoothing max error");
    this.addToggle("unsigned", "ignore change direction");
    this.addToggle("repeated_attributes", "allow repeated attributes");
    this.addToggle("maximal", "maximal caps only");

    const submit = el("button", "", "Mine");
    submit.type = "submit";
    submit.id = "mine-button";
    this.formError = el("div", "error");
    this.formError.id = "form-error";
    this.el.append(submit, this.formError);

    this.setDraft(defaultDraft());

    this.el.addEventListener("submit", (event) => {
      event.preventDefault();
      this.submit();
    });
  }

  private addField(name: string, label: string): void {
    const input = el("input");
    input.type = "text";
    input.id = `param-${name}`;
    const error = el("span", "field-error");
    error.id = `error-${name}`;
    const wrap = el("label", "field");
    wrap.append(el("span", "", label), input, error);
    this.el.append(wrap);
    this.rows.set(name, { input, error });
  }

  private addToggle(name: string, label: string): void {
    const input = el("input");
    input.type = "checkbox";
    input.id = `param-${name}`;
    const wrap = el("label", "toggle");
    wrap.append(input, el("span", "", label));
    this.el.append(wrap);
    this.toggles.set(name, input);
  }

  setDraft(draft: ParamDraft): void {
    this.rows.get("epsilon")!.input.value = draft.epsilon;
    this.rows.get("eta_meters")!.input.value = draft.etaMeters;
    this.rows.get("mu")!.input.value = draft.mu;
    this.rows.get("psi")!.input.value = draft.psi;
    this.rows.get("max_error")!.input.value = draft.maxError;
    this.toggles.get("unsigned")!.checked = draft.unsigned;
    this.toggles.get("repeated_attributes")!.checked = draft.repeatedAttributes;
    this.toggles.get("maximal")!.checked = draft.maximal;
  }

  readDraft(): ParamDraft {
    return {
      epsilon: this.rows.get("epsilon")!.input.value,
      etaMeters: this.rows.get("eta_meters")!.input.value,
      mu: this.rows.get("mu")!.input.value,
      psi: this.rows.get("psi")!.input.value,
      maxError: this.rows.get("max_error")!.input.value,
      unsigned: this.toggles.get("unsigned")!.checked,
      repeatedAttributes: this.toggles.get("repeated_attributes")!.checked,
      maximal: this.toggles.get("maximal")!.checked,
    };
  }

  private clearErrors(): void {
    this.formError.textContent = "";
    for (const row of this.rows.values()) {
      row.error.textContent = "";
    }
  }

  private showFieldError(field: string | null, message: string): void {
    const row = field ? this.rows.get(field) : undefined;
    if (row) {
      row.error.textContent = message;
    } else {
      this.formError.textContent = message;
    }
  }

  private submit(): void {
    this.clearErrors();
    let params: Record<string, unknown>;
    try {
      params = buildParams(this.readDraft());
    } catch (err) {
      if (err instanceof FieldError) {
        this.showFieldError(err.field, err.message);
        return;
      }
      throw err;
    }
    if (!this.store.state.dataset) {
      this.formError.textContent = "upload or pick a dataset first";
      return;
    }
    this.store.track(
      this.store.mine(params).catch((err) => {
        if (err instanceof ApiError && err.status === 422) {
          this.showFieldError(fieldForMessage(err.message), err.message);
        } else if (err instanceof Error) {
          this.formError.textContent = err.message;
        }
      }),
    );
  }
}
