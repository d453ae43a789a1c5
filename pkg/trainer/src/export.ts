/**
 * Mixture export: evaluate the trained model on a phoneme/context list and
 * write the shared JSON document the synthesis front end consumes.
 *
 * Weights are renormalized to sum exactly to 1 and stds floored at 0.5
 * frames before writing (a zero std would break the consumer's allocator).
 */

import { writeFileSync } from "node:fs";

import { classifyPhoneme, TrainingExample } from "./features.js";
import {
  MixtureComponent,
  MixtureDocument,
  MixtureEntry,
  validateDocument,
} from "./mixture.js";
import { TrainedDurationModel } from "./train.js";

export const STD_FLOOR_FRAMES = 0.5;

export interface ExportContext {
  phoneme: string;
  prev?: string | null;
  next?: string | null;
  noteFrames?: number;
}

function finalizeComponents(raw: MixtureComponent[]): MixtureComponent[] {
  const floored = raw.map((c) => ({
    weight: c.weight,
    mean_frames: c.mean_frames,
    std_frames: Math.max(c.std_frames, STD_FLOOR_FRAMES),
  }));
  const total = floored.reduce((a, c) => a + c.weight, 0);
  const scaled = floored.map((c) => ({ ...c, weight: c.weight / total }));
  const drift = 1 - scaled.reduce((a, c) => a + c.weight, 0);
  scaled[0] = { ...scaled[0], weight: scaled[0].weight + drift };
  return scaled;
}

/** Predict and finalize the exported mixture for one context. */
export function exportedComponents(
  model: TrainedDurationModel,
  ctx: ExportContext
): MixtureComponent[] {
  const example: Omit<TrainingExample, "durationFrames"> = {
    phoneme: ctx.phoneme,
    prev: ctx.prev ?? null,
    next: ctx.next ?? null,
    noteFrames: ctx.noteFrames ?? model.medianNoteFrames,
  };
  return finalizeComponents(model.predictComponents(example));
}

export function exportMixtures(
  model: TrainedDurationModel,
  contexts?: ExportContext[]
): MixtureDocument {
  const list: ExportContext[] = contexts ?? model.vocab.symbols.map((phoneme) => ({ phoneme }));
  const entries: MixtureEntry[] = list.map((ctx) => {
    const entry: MixtureEntry = {
      phoneme: ctx.phoneme,
      components: exportedComponents(model, ctx),
    };
    if (ctx.prev !== undefined || ctx.next !== undefined) {
      // bucketed entry: the consumer keys on phoneme classes, not symbols
      entry.context = {
        prev: ctx.prev !== undefined ? classifyPhoneme(ctx.prev) : null,
        next: ctx.next !== undefined ? classifyPhoneme(ctx.next) : null,
        tertile: null,
      };
    }
    return entry;
  });
  const doc: MixtureDocument = {
    frame_ms: 10,
    K: model.hp.k,
    tertile_bounds_frames: null,
    entries,
  };
  validateDocument(doc);
  return doc;
}

export function writeMixtureFile(path: string, doc: MixtureDocument): void {
  validateDocument(doc);
  writeFileSync(path, JSON.stringify(doc, null, 2) + "\n");
}
