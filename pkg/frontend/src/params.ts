// Client-side mirror of the service's parameter checks, so the obvious
// mistakes never leave the form. The error messages are kept close to the
// server's wording; a 422 that does slip through maps onto the same fields.

export interface ThresholdSpec {
  default: number;
  per_attribute: Record<string, number>;
  relative: boolean;
}

export interface ParamDraft {
  epsilon: string;
  etaMeters: string;
  mu: string;
  psi: string;
  maxError: string;
  unsigned: boolean;
  repeatedAttributes: boolean;
  maximal: boolean;
}

export function defaultDraft(): ParamDraft {
  return {
    epsilon: "1.0",
    etaMeters: "500",
    mu: "2",
    psi: "1",
    maxError: "0",
    unsigned: false,
    repeatedAttributes: false,
    maximal: true,
  };
}

export class FieldError extends Error {
  constructor(
    readonly field: string,
    message: string,
  ) {
    super(message);
  }
}

/** `0.5`, `rel:0.05`, or `attr=val,...`; a bare term sets the default. */
export function parseThresholdSpec(text: string, field: string): ThresholdSpec {
  let rest = text.trim();
  let relative = false;
  let defaultValue = 0;
  const perAttribute: Record<string, number> = {};
  if (rest.startsWith("rel:")) {
    relative = true;
    rest = rest.slice("rel:".length);
    if (rest.includes("=")) {
      throw new FieldError(field, "relative mode takes a single fraction");
    }
  }
  for (const raw of rest.split(",")) {
    const term = raw.trim();
    if (!term) {
      continue;
    }
    if (term.includes("=")) {
      const eq = term.indexOf("=");
      const attr = term.slice(0, eq).trim();
      const value = Number(term.slice(eq + 1));
      if (!attr || !Number.isFinite(value)) {
        throw new FieldError(field, `cannot parse '${term}'`);
      }
      perAttribute[attr] = value;
    } else {
      const value = Number(term);
      if (!Number.isFinite(value)) {
        throw new FieldError(field, `cannot parse '${term}'`);
      }
      defaultValue = value;
    }
  }
  if (defaultValue < 0) {
    throw new FieldError(field, `${field} must be >= 0, got ${defaultValue}`);
  }
  for (const [attr, value] of Object.entries(perAttribute)) {
    if (value < 0) {
      throw new FieldError(field, `threshold for '${attr}' must be >= 0, got ${value}`);
    }
  }
  return { default: defaultValue, per_attribute: perAttribute, relative };
}

function intField(text: string, field: string, atLeast: number): number {
  const value = Number(text.trim());
  if (!Number.isInteger(value) || value < atLeast) {
    throw new FieldError(field, `${field} must be an integer >= ${atLeast}, got ${text.trim() || "nothing"}`);
  }
  return value;
}

function thresholdJson(spec: ThresholdSpec): number | Record<string, unknown> {
  if (!spec.relative && Object.keys(spec.per_attribute).length === 0) {
    return spec.default;
  }
  return { default: spec.default, per_attribute: spec.per_attribute, relative: spec.relative };
}

/** Validate a form draft and shape it into the mine request's params object. */
export function buildParams(draft: ParamDraft): Record<string, unknown> {
  const epsilon = parseThresholdSpec(draft.epsilon || "0", "epsilon");
  const maxError = parseThresholdSpec(draft.maxError || "0", "max_error");
  if (maxError.relative) {
    throw new FieldError("max_error", "max_error has no relative mode");
  }
  const mu = intField(draft.mu, "mu", 2);
  const psi = intField(draft.psi, "psi", 1);
  const eta = Number(draft.etaMeters.trim());
  if (!Number.isFinite(eta) || eta < 0) {
    throw new FieldError("eta_meters", `eta_meters must be >= 0, got ${draft.etaMeters.trim() || "nothing"}`);
  }
  return {
    eta_meters: eta,
    mu,
    psi,
    epsilon: thresholdJson(epsilon),
    max_error: thresholdJson(maxError),
    distinct_attributes: !draft.repeatedAttributes,
    direction_mode: draft.unsigned ? "unsigned" : "signed",
    maximal: draft.maximal,
  };
}

const FIELD_NAMES = ["epsilon", "max_error", "eta_meters", "mu", "psi", "direction_mode"];

/** Pick the form field a server-side 422 message is talking about. */
export function fieldForMessage(message: string): string | null {
  for (const name of FIELD_NAMES) {
    if (message.startsWith(name) || message.includes(`'${name}'`)) {
      return name;
    }
  }
  return null;
}
