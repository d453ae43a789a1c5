/**
 * Training data ingestion and synthesis.
 *
 * Real data pairs a phoneme annotation CSV (`phoneme,start_s,end_s`) with a
 * pseudo-score JSON (`{"notes": [{"midi", "start_frame", "end_frame"}]}`);
 * each phone becomes one example whose note length comes from the note
 * covering the phone's midpoint.  A seeded synthetic generator provides
 * corpus-free training sets for tests and demos.
 */

import { TrainingExample } from "./features.js";

export interface PhoneInterval {
  phoneme: string;
  startS: number;
  endS: number;
}

export interface NoteSegment {
  midi: number;
  startFrame: number;
  endFrame: number;
}

export function parseAnnotationCsv(text: string): PhoneInterval[] {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0) throw new Error("annotation CSV is empty");
  const header = lines[0].split(",").map((h) => h.trim());
  if (header.join(",") !== "phoneme,start_s,end_s") {
    throw new Error(`bad annotation header: ${lines[0]}`);
  }
  const phones: PhoneInterval[] = [];
  for (const [i, line] of lines.slice(1).entries()) {
    const cells = line.split(",");
    if (cells.length !== 3) throw new Error(`line ${i + 2}: expected 3 fields`);
    const startS = Number(cells[1]);
    const endS = Number(cells[2]);
    if (!isFinite(startS) || !isFinite(endS) || endS <= startS) {
      throw new Error(`line ${i + 2}: bad interval ${cells[1]}..${cells[2]}`);
    }
    phones.push({ phoneme: cells[0].trim(), startS, endS });
  }
  return phones;
}

export function parsePseudoScoreJson(text: string): NoteSegment[] {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new Error(`pseudo-score is not valid JSON: ${e}`);
  }
  const notes = (doc as { notes?: unknown }).notes;
  if (!Array.isArray(notes)) throw new Error("pseudo-score JSON lacks a notes list");
  return notes.map((n) => {
    const note = n as Record<string, number>;
    return { midi: note.midi, startFrame: note.start_frame, endFrame: note.end_frame };
  });
}

/** Join phones with covering notes into context-window training examples. */
export function buildExamples(
  phones: PhoneInterval[],
  notes: NoteSegment[] = []
): TrainingExample[] {
  return phones.map((phone, i) => {
    const durationFrames = Math.max(1, Math.round((phone.endS - phone.startS) * 100));
    const midFrame = Math.round(((phone.startS + phone.endS) / 2) * 100);
    const covering = notes.find((n) => n.startFrame <= midFrame && midFrame < n.endFrame);
    return {
      phoneme: phone.phoneme,
      prev: i > 0 ? phones[i - 1].phoneme : null,
      next: i + 1 < phones.length ? phones[i + 1].phoneme : null,
      noteFrames: covering ? covering.endFrame - covering.startFrame : 0,
      durationFrames,
    };
  });
}

// --------------------------------------------------------------------------
// Seeded synthesis
// --------------------------------------------------------------------------

/** Deterministic uniform/normal generator (64-bit-free LCG + Box-Muller). */
export class SeededRng {
  private state: number;

  constructor(seed: number) {
    this.state = (seed >>> 0) || 1;
  }

  uniform(): number {
    this.state = (this.state * 1103515245 + 12345) % 2147483648;
    return this.state / 2147483648;
  }

  normal(): number {
    const u = Math.max(this.uniform(), 1e-12);
    const v = this.uniform();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  }

  int(lo: number, hi: number): number {
    return lo + Math.floor(this.uniform() * (hi - lo + 1));
  }

  pick<T>(items: readonly T[]): T {
    return items[Math.min(items.length - 1, Math.floor(this.uniform() * items.length))];
  }
}

export interface GeneratorComponent {
  weight: number;
  meanFrames: number;
  stdFrames: number;
}

/** Per-phoneme generating mixtures for synthetic corpora. */
export type GeneratorSpec = Record<string, GeneratorComponent[]>;

export function sampleDuration(rng: SeededRng, components: GeneratorComponent[]): number {
  let u = rng.uniform();
  let comp = components[components.length - 1];
  for (const c of components) {
    if (u < c.weight) {
      comp = c;
      break;
    }
    u -= c.weight;
  }
  return Math.max(1, comp.meanFrames + comp.stdFrames * rng.normal());
}

/** Synthetic phrase-like example stream over a generator spec. */
export function synthesizeExamples(
  spec: GeneratorSpec,
  n: number,
  seed: number
): TrainingExample[] {
  const rng = new SeededRng(seed);
  const phonemes = Object.keys(spec).sort();
  const out: TrainingExample[] = [];
  while (out.length < n) {
    const length = rng.int(2, 5);
    const seq: string[] = [];
    for (let i = 0; i < length; i++) seq.push(rng.pick(phonemes));
    const durations = seq.map((p) => sampleDuration(rng, spec[p]));
    const noteFrames = Math.round(durations.reduce((a, b) => a + b, 0));
    for (let i = 0; i < seq.length && out.length < n; i++) {
      out.push({
        phoneme: seq[i],
        prev: i > 0 ? seq[i - 1] : null,
        next: i + 1 < seq.length ? seq[i + 1] : null,
        noteFrames,
        durationFrames: durations[i],
      });
    }
  }
  return out;
}
