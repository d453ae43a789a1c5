/**
 * Shared mixture-parameter contract and float64 likelihood evaluation.
 *
 * The exported JSON document must match what the synthesis front end reads:
 * `{frame_ms: 10, K, entries: [{phoneme, context?, components: [...]}]}` with
 * per-entry weights summing to 1.
 */

export interface MixtureComponent {
  weight: number;
  mean_frames: number;
  std_frames: number;
}

export interface MixtureEntry {
  phoneme: string;
  context?: {
    prev: string | null;
    next: string | null;
    tertile: number | null;
  };
  components: MixtureComponent[];
}

export interface MixtureDocument {
  frame_ms: number;
  K: number;
  tertile_bounds_frames?: number[] | null;
  entries: MixtureEntry[];
}

const LOG_2PI = Math.log(2 * Math.PI);

/** log sum_k w_k N(d; mu_k, sigma_k^2), evaluated stably in float64. */
export function mixtureLogLikelihood(components: MixtureComponent[], d: number): number {
  if (components.length === 0) throw new Error("mixture has no components");
  const logTerms = components.map((c) => {
    if (c.std_frames <= 0) throw new Error(`component std must be > 0, got ${c.std_frames}`);
    const z = (d - c.mean_frames) / c.std_frames;
    const logW = c.weight > 0 ? Math.log(c.weight) : -Infinity;
    return logW - 0.5 * z * z - Math.log(c.std_frames) - 0.5 * LOG_2PI;
  });
  const m = Math.max(...logTerms);
  if (!isFinite(m)) return -Infinity;
  const sum = logTerms.reduce((acc, t) => acc + Math.exp(t - m), 0);
  return m + Math.log(sum);
}

export class SchemaViolation extends Error {}

/** Validate a document against the shared contract; throws SchemaViolation. */
export function validateDocument(doc: MixtureDocument): void {
  if (doc.frame_ms !== 10) {
    throw new SchemaViolation(`frame_ms must be 10, got ${doc.frame_ms}`);
  }
  if (!Number.isInteger(doc.K) || doc.K < 1) {
    throw new SchemaViolation(`K must be a positive integer, got ${doc.K}`);
  }
  if (!Array.isArray(doc.entries) || doc.entries.length === 0) {
    throw new SchemaViolation("document needs a non-empty entries list");
  }
  for (const entry of doc.entries) {
    if (!entry.phoneme) throw new SchemaViolation("entry without phoneme");
    if (!entry.components?.length) {
      throw new SchemaViolation(`entry ${entry.phoneme}: no components`);
    }
    let total = 0;
    for (const c of entry.components) {
      if (c.weight < 0 || c.weight > 1) {
        throw new SchemaViolation(`entry ${entry.phoneme}: weight ${c.weight} out of [0,1]`);
      }
      if (c.std_frames < 0.5) {
        throw new SchemaViolation(
          `entry ${entry.phoneme}: std ${c.std_frames} below the 0.5-frame export floor`
        );
      }
      total += c.weight;
    }
    if (Math.abs(total - 1) > 1e-6) {
      throw new SchemaViolation(`entry ${entry.phoneme}: weights sum to ${total}`);
    }
  }
}
