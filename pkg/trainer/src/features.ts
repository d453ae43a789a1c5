/**
 * Context-window feature encoding for the duration model.
 *
 * One example is a three-step window (previous, current, next phoneme); each
 * step carries a one-hot phoneme identity, a vowel/consonant/silence class
 * triplet, and the log note length.  The class vocabulary mirrors the
 * consumer's context buckets so either side can interpret the other's files.
 */

export interface TrainingExample {
  phoneme: string;
  prev: string | null;
  next: string | null;
  noteFrames: number; // 0 when no covering note is known
  durationFrames: number;
}

// vowel-like symbols of the shared inventory (vowels, offglides, syllabic)
const VOWELS = new Set(
  "i u y a o 7 e E @ O i\\ i` @` I U 2 9 M V m= n= N=".split(" ")
);
const SILENCE = new Set(["sil", "sp", "br"]);

export type PhonemeClass = "vowel" | "consonant" | "silence";

export function classifyPhoneme(symbol: string | null): PhonemeClass {
  if (symbol === null || SILENCE.has(symbol)) return "silence";
  if (VOWELS.has(symbol)) return "vowel";
  return "consonant";
}

export class Vocabulary {
  readonly symbols: string[];
  private readonly index: Map<string, number>;

  constructor(symbols: Iterable<string>) {
    this.symbols = [...new Set(symbols)].sort();
    if (this.symbols.length === 0) throw new Error("empty phoneme vocabulary");
    this.index = new Map(this.symbols.map((s, i) => [s, i]));
  }

  get size(): number {
    return this.symbols.length;
  }

  indexOf(symbol: string): number {
    const i = this.index.get(symbol);
    if (i === undefined) throw new Error(`phoneme not in vocabulary: ${symbol}`);
    return i;
  }

  static fromExamples(examples: TrainingExample[]): Vocabulary {
    return new Vocabulary(examples.map((e) => e.phoneme));
  }
}

export const WINDOW = 3; // prev, current, next

export function featureDim(vocab: Vocabulary): number {
  return vocab.size + 3 + 1; // one-hot + class triplet + log note length
}

function encodeStep(
  vocab: Vocabulary,
  symbol: string | null,
  noteFrames: number,
  out: Float32Array,
  offset: number
): void {
  if (symbol !== null && vocab.symbols.includes(symbol)) {
    out[offset + vocab.indexOf(symbol)] = 1;
  }
  const cls = classifyPhoneme(symbol);
  const clsBase = offset + vocab.size;
  out[clsBase + (cls === "vowel" ? 0 : cls === "consonant" ? 1 : 2)] = 1;
  out[clsBase + 3] = Math.log1p(Math.max(noteFrames, 0)) / Math.log(1201);
}

/** Flat [WINDOW * featureDim] encoding of one example. */
export function encodeExample(vocab: Vocabulary, ex: TrainingExample): Float32Array {
  const dim = featureDim(vocab);
  const out = new Float32Array(WINDOW * dim);
  encodeStep(vocab, ex.prev, ex.noteFrames, out, 0);
  encodeStep(vocab, ex.phoneme, ex.noteFrames, out, dim);
  encodeStep(vocab, ex.next, ex.noteFrames, out, 2 * dim);
  return out;
}
