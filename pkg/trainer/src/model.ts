/**
 * Bidirectional-LSTM mixture-density duration model.
 *
 * The network reads the three-step context window and emits, per example,
 * K mixture weights (softmax), K means, and K stds (softplus) describing the
 * phoneme's duration distribution in standardized target space.  Every
 * random element (initializers, dropout) is seeded, so a fixed seed gives a
 * reproducible model on the CPU backend.
 */

import * as tf from "@tensorflow/tfjs";

import { featureDim, Vocabulary, WINDOW } from "./features.js";

export interface Hyperparams {
  layers: number;
  hidden: number;
  dropout: number;
  k: number;
  learningRate: number;
  epochs: number;
  batchSize: number;
  seed: number;
}

export const DEFAULT_HYPERPARAMS: Hyperparams = {
  layers: 2,
  hidden: 256,
  dropout: 0.5,
  k: 2,
  learningRate: 0.005,
  epochs: 40,
  batchSize: 64,
  seed: 1,
};

export function buildNetwork(vocab: Vocabulary, hp: Hyperparams): tf.LayersModel {
  if (hp.k < 1) throw new Error(`K must be >= 1, got ${hp.k}`);
  if (hp.dropout < 0 || hp.dropout >= 1) throw new Error(`dropout must be in [0,1)`);
  const dim = featureDim(vocab);
  const input = tf.input({ shape: [WINDOW, dim] });
  let x: tf.SymbolicTensor = input;
  for (let i = 0; i < hp.layers; i++) {
    const seed = hp.seed * 1000 + i * 10;
    x = tf.layers
      .bidirectional({
        layer: tf.layers.lstm({
          units: hp.hidden,
          returnSequences: i < hp.layers - 1,
          kernelInitializer: tf.initializers.glorotUniform({ seed }),
          recurrentInitializer: tf.initializers.orthogonal({ seed: seed + 1 }),
        }) as tf.RNN,
        mergeMode: "concat",
      })
      .apply(x) as tf.SymbolicTensor;
    if (hp.dropout > 0) {
      x = tf.layers
        .dropout({ rate: hp.dropout, seed: seed + 2 })
        .apply(x) as tf.SymbolicTensor;
    }
  }
  const out = tf.layers
    .dense({
      units: 3 * hp.k,
      kernelInitializer: tf.initializers.glorotUniform({ seed: hp.seed * 1000 + 900 }),
    })
    .apply(x) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: out });
}

const LOG_2PI = Math.log(2 * Math.PI);

/** Mean negative log-likelihood of standardized targets under the MDN head. */
export function mdnLoss(k: number, targets: tf.Tensor2D, params: tf.Tensor2D): tf.Scalar {
  return tf.tidy(() => {
    const logits = params.slice([0, 0], [-1, k]);
    const mu = params.slice([0, k], [-1, k]);
    const rawSigma = params.slice([0, 2 * k], [-1, k]);
    const logPi = tf.logSoftmax(logits);
    const sigma = tf.softplus(rawSigma).add(1e-4);
    const z = targets.sub(mu).div(sigma);
    const logProb = logPi
      .add(z.square().mul(-0.5))
      .sub(tf.log(sigma))
      .sub(0.5 * LOG_2PI);
    return tf.logSumExp(logProb, 1).neg().mean() as tf.Scalar;
  });
}

/** Split a raw parameter row into float64 (weights, means, stds) in z space. */
export function splitParams(k: number, row: Float32Array | number[]): {
  weights: number[];
  means: number[];
  stds: number[];
} {
  const logits = Array.from(row.slice(0, k), Number);
  const means = Array.from(row.slice(k, 2 * k), Number);
  const raw = Array.from(row.slice(2 * k, 3 * k), Number);
  const maxLogit = Math.max(...logits);
  const exps = logits.map((l) => Math.exp(l - maxLogit));
  const total = exps.reduce((a, b) => a + b, 0);
  const softplus = (r: number) => (r > 30 ? r : Math.log1p(Math.exp(r)));
  return {
    weights: exps.map((e) => e / total),
    means,
    stds: raw.map((r) => softplus(r) + 1e-4),
  };
}
