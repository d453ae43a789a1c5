/**
 * Training loop: seeded minibatch optimization of the mixture-density
 * negative log-likelihood, with a per-epoch loss curve measured on the full
 * training set in frame units.
 */

import * as tf from "@tensorflow/tfjs";

import { SeededRng } from "./data.js";
import { encodeExample, featureDim, TrainingExample, Vocabulary, WINDOW } from "./features.js";
import { MixtureComponent, mixtureLogLikelihood } from "./mixture.js";
import { buildNetwork, DEFAULT_HYPERPARAMS, Hyperparams, mdnLoss, splitParams } from "./model.js";

export class EmptyDataset extends Error {}

export interface TrainResult {
  model: TrainedDurationModel;
  lossCurve: number[]; // per-epoch mean NLL, frame units
}

export class TrainedDurationModel {
  constructor(
    readonly network: tf.LayersModel,
    readonly vocab: Vocabulary,
    readonly hp: Hyperparams,
    readonly targetMean: number,
    readonly targetStd: number,
    readonly medianNoteFrames: number
  ) {}

  /** Mixture parameters for one context, converted back to frame units. */
  predictComponents(example: Omit<TrainingExample, "durationFrames">): MixtureComponent[] {
    const features = encodeExample(this.vocab, { ...example, durationFrames: 1 });
    const params = tf.tidy(() => {
      const x = tf.tensor3d(Array.from(features), [1, WINDOW, featureDim(this.vocab)]);
      const out = this.network.apply(x, { training: false }) as tf.Tensor2D;
      return out.dataSync();
    });
    const { weights, means, stds } = splitParams(this.hp.k, params as Float32Array);
    return weights.map((w, j) => ({
      weight: w,
      mean_frames: this.targetMean + this.targetStd * means[j],
      std_frames: this.targetStd * stds[j],
    }));
  }

  /** Float64 NLL of one example under the predicted frame-space mixture. */
  nll(example: TrainingExample): number {
    return -mixtureLogLikelihood(this.predictComponents(example), example.durationFrames);
  }

  dispose(): void {
    this.network.dispose();
  }
}

export function train(
  dataset: TrainingExample[],
  hp: Partial<Hyperparams> = {}
): TrainResult {
  const full: Hyperparams = { ...DEFAULT_HYPERPARAMS, ...hp };
  if (dataset.length === 0) throw new EmptyDataset("no training examples");

  const vocab = Vocabulary.fromExamples(dataset);
  const durations = dataset.map((e) => e.durationFrames);
  const mean = durations.reduce((a, b) => a + b, 0) / durations.length;
  const std = Math.max(
    Math.sqrt(durations.reduce((a, d) => a + (d - mean) ** 2, 0) / durations.length),
    1e-6
  );
  const sortedNotes = dataset
    .map((e) => e.noteFrames)
    .filter((f) => f > 0)
    .sort((a, b) => a - b);
  const medianNote = sortedNotes.length
    ? sortedNotes[Math.floor(sortedNotes.length / 2)]
    : 0;

  const dim = featureDim(vocab);
  const flat = new Float32Array(dataset.length * WINDOW * dim);
  dataset.forEach((ex, i) => flat.set(encodeExample(vocab, ex), i * WINDOW * dim));
  const xs = tf.tensor3d(flat, [dataset.length, WINDOW, dim]);
  const ys = tf.tensor2d(
    durations.map((d) => (d - mean) / std),
    [dataset.length, 1]
  );

  const network = buildNetwork(vocab, full);
  const optimizer = tf.train.adam(full.learningRate);
  const rng = new SeededRng(full.seed * 7919 + 17);
  const indices = [...dataset.length ? Array(dataset.length).keys() : []];
  const lossCurve: number[] = [];

  for (let epoch = 0; epoch < full.epochs; epoch++) {
    // seeded Fisher-Yates shuffle
    for (let i = indices.length - 1; i > 0; i--) {
      const j = Math.floor(rng.uniform() * (i + 1));
      [indices[i], indices[j]] = [indices[j], indices[i]];
    }
    for (let start = 0; start < indices.length; start += full.batchSize) {
      const batchIdx = indices.slice(start, start + full.batchSize);
      const idxTensor = tf.tensor1d(batchIdx, "int32");
      const bx = tf.gather(xs, idxTensor);
      const by = tf.gather(ys, idxTensor) as tf.Tensor2D;
      const cost = optimizer.minimize(
        () => mdnLoss(full.k, by, network.apply(bx, { training: true }) as tf.Tensor2D),
        true
      );
      cost?.dispose();
      idxTensor.dispose();
      bx.dispose();
      by.dispose();
    }
    const epochLoss = tf.tidy(() => {
      const out = network.apply(xs, { training: false }) as tf.Tensor2D;
      return mdnLoss(full.k, ys as tf.Tensor2D, out).dataSync()[0];
    });
    // z-space NLL + log(std) = frame-space NLL
    lossCurve.push(epochLoss + Math.log(std));
  }

  xs.dispose();
  ys.dispose();
  optimizer.dispose();
  return {
    model: new TrainedDurationModel(network, vocab, full, mean, std, medianNote),
    lossCurve,
  };
}
