/** Canonical JSON encoder matching the service's output byte for byte.
 *
 * The service stores trait documents as canonical JSON: keys sorted by
 * code point, compact separators, ASCII-only escapes, no NaN/Infinity,
 * and every number in a trait document rendered as a Python float
 * (shortest round-trip digits, so "1.0" rather than "1"). Reproducing
 * that here lets the editor verify byte-identical round trips without
 * another server call.
 */

export class CanonicalError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CanonicalError";
  }
}

/** Render a finite double exactly as Python's repr / json.dumps would. */
export function formatPythonFloat(x: number): string {
  if (typeof x !== "number" || !Number.isFinite(x)) {
    throw new CanonicalError(`cannot encode non-finite number ${x}`);
  }
  if (x === 0) {
    return Object.is(x, -0) ? "-0.0" : "0.0";
  }
  const neg = x < 0;
  // toExponential() with no argument uses the fewest digits that still
  // round-trip, the same digit string Python's repr derives.
  const [mantissa, expPart] = Math.abs(x).toExponential().split("e") as [
    string,
    string,
  ];
  const digits = mantissa.replace(".", "");
  const e = parseInt(expPart, 10); // value = digits[0].digits[1:] * 10^e
  let body: string;
  if (e < -4 || e >= 16) {
    // scientific notation, exponent always signed and at least two digits
    const frac = digits.length > 1 ? "." + digits.slice(1) : "";
    const sign = e < 0 ? "-" : "+";
    const mag = Math.abs(e).toString().padStart(2, "0");
    body = `${digits[0]}${frac}e${sign}${mag}`;
  } else if (e >= 0) {
    if (e + 1 >= digits.length) {
      body = digits + "0".repeat(e + 1 - digits.length) + ".0";
    } else {
      body = digits.slice(0, e + 1) + "." + digits.slice(e + 1);
    }
  } else {
    body = "0." + "0".repeat(-e - 1) + digits;
  }
  return neg ? "-" + body : body;
}

const SHORT_ESCAPES: Record<string, string> = {
  '"': '\\"',
  "\\": "\\\\",
  "\b": "\\b",
  "\f": "\\f",
  "\n": "\\n",
  "\r": "\\r",
  "\t": "\\t",
};

/** Quote a string the way json.dumps(..., ensure_ascii=True) does. */
export function escapeString(s: string): string {
  let out = '"';
  for (let i = 0; i < s.length; i++) {
    const ch = s[i] as string;
    const short = SHORT_ESCAPES[ch];
    if (short !== undefined) {
      out += short;
    } else {
      const code = s.charCodeAt(i);
      if (code < 0x20 || code > 0x7e) {
        out += "\\u" + code.toString(16).padStart(4, "0");
      } else {
        out += ch;
      }
    }
  }
  return out + '"';
}

// Python compares strings code point by code point; the default JS sort
// uses UTF-16 code units, which order astral characters differently.
function compareCodePoints(a: string, b: string): number {
  const ai = Array.from(a);
  const bi = Array.from(b);
  const n = Math.min(ai.length, bi.length);
  for (let i = 0; i < n; i++) {
    const d =
      (ai[i] as string).codePointAt(0)! - (bi[i] as string).codePointAt(0)!;
    if (d !== 0) return d;
  }
  return ai.length - bi.length;
}

export interface CanonicalOptions {
  /** Render every number as a Python float ("1.0"), not "1". Trait
   * documents carry only float values, so their canonical form uses
   * this; leave it off for documents with genuine integers. */
  floatNumbers?: boolean;
}

function encode(value: unknown, opts: CanonicalOptions, depth: number): string {
  if (depth > 64) {
    throw new CanonicalError("value nested deeper than 64 levels");
  }
  if (value === null) return "null";
  switch (typeof value) {
    case "boolean":
      return value ? "true" : "false";
    case "number":
      if (!Number.isFinite(value)) {
        throw new CanonicalError(`cannot encode non-finite number ${value}`);
      }
      if (opts.floatNumbers || !Number.isInteger(value)) {
        return formatPythonFloat(value);
      }
      return String(value);
    case "string":
      return escapeString(value);
    case "object": {
      if (Array.isArray(value)) {
        const items = value.map((v) => encode(v, opts, depth + 1));
        return "[" + items.join(",") + "]";
      }
      const obj = value as Record<string, unknown>;
      const keys = Object.keys(obj).sort(compareCodePoints);
      const parts = keys.map(
        (k) => escapeString(k) + ":" + encode(obj[k], opts, depth + 1),
      );
      return "{" + parts.join(",") + "}";
    }
    default:
      throw new CanonicalError(`cannot encode a ${typeof value}`);
  }
}

export function canonicalJson(
  value: unknown,
  opts: CanonicalOptions = {},
): string {
  return encode(value, opts, 0);
}

/** Canonical bytes of a trait document, as the service would store it. */
export function canonicalTraitJson(doc: unknown): string {
  return canonicalJson(doc, { floatNumbers: true });
}
