#!/usr/bin/env node
/**
 * Trainer CLI.
 *
 *   opera-frontend-trainer train --annotations a.csv --pseudo a.json \
 *       [--annotations b.csv --pseudo b.json ...] --out model.json \
 *       [--epochs 40 --hidden 256 --layers 2 --k 2 --dropout 0.5 \
 *        --lr 0.005 --batch 64 --seed 1]
 *
 * Repeated --annotations/--pseudo flags pair up by position; --pseudo may be
 * omitted when no pseudo score exists (note length falls back to 0).  The
 * model is exported as the shared mixture-parameter JSON.
 */

import { readFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { buildExamples, parseAnnotationCsv, parsePseudoScoreJson } from "./data.js";
import { exportMixtures, writeMixtureFile } from "./export.js";
import { train } from "./train.js";

function fail(message: string): never {
  console.error(`error: ${message}`);
  process.exit(2);
}

export async function main(argv: string[]): Promise<number> {
  if (argv[0] !== "train") {
    fail(`unknown command ${argv[0] ?? "(none)"}; expected: train`);
  }
  let parsed;
  try {
    parsed = parseArgs({
      args: argv.slice(1),
      options: {
        annotations: { type: "string", multiple: true },
        pseudo: { type: "string", multiple: true },
        out: { type: "string" },
        epochs: { type: "string" },
        hidden: { type: "string" },
        layers: { type: "string" },
        k: { type: "string" },
        dropout: { type: "string" },
        lr: { type: "string" },
        batch: { type: "string" },
        seed: { type: "string" },
      },
      strict: true,
    });
  } catch (e) {
    fail(String(e instanceof Error ? e.message : e));
  }
  const v = parsed.values;
  if (!v.annotations?.length) fail("at least one --annotations file is required");
  if (!v.out) fail("--out is required");
  if (v.pseudo && v.pseudo.length > v.annotations.length) {
    fail("more --pseudo files than --annotations files");
  }

  const examples = v.annotations.flatMap((annPath, i) => {
    const phones = parseAnnotationCsv(readFileSync(annPath, "utf-8"));
    const pseudoPath = v.pseudo?.[i];
    const notes = pseudoPath
      ? parsePseudoScoreJson(readFileSync(pseudoPath, "utf-8"))
      : [];
    return buildExamples(phones, notes);
  });
  console.log(`loaded ${examples.length} examples from ${v.annotations.length} phrase(s)`);

  const num = (s: string | undefined, d: number) => (s === undefined ? d : Number(s));
  const { model, lossCurve } = train(examples, {
    epochs: num(v.epochs, 40),
    hidden: num(v.hidden, 256),
    layers: num(v.layers, 2),
    k: num(v.k, 2),
    dropout: num(v.dropout, 0.5),
    learningRate: num(v.lr, 0.005),
    batchSize: num(v.batch, 64),
    seed: num(v.seed, 1),
  });
  lossCurve.forEach((nll, i) => console.log(`epoch ${i + 1}: mean NLL ${nll.toFixed(4)}`));

  writeMixtureFile(v.out, exportMixtures(model));
  console.log(`wrote ${v.out}`);
  model.dispose();
  return 0;
}

const isMain = process.argv[1]?.endsWith("cli.js") || process.argv[1]?.endsWith("cli.ts");
if (isMain) {
  main(process.argv.slice(2)).then(
    (code) => process.exit(code),
    (err) => {
      console.error(err);
      process.exit(1);
    }
  );
}
