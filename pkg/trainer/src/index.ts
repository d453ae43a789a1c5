export {
  MixtureComponent,
  MixtureDocument,
  MixtureEntry,
  SchemaViolation,
  mixtureLogLikelihood,
  validateDocument,
} from "./mixture.js";
export {
  classifyPhoneme,
  encodeExample,
  featureDim,
  TrainingExample,
  Vocabulary,
} from "./features.js";
export {
  buildExamples,
  GeneratorSpec,
  parseAnnotationCsv,
  parsePseudoScoreJson,
  sampleDuration,
  SeededRng,
  synthesizeExamples,
} from "./data.js";
export { DEFAULT_HYPERPARAMS, Hyperparams, buildNetwork, mdnLoss, splitParams } from "./model.js";
export { EmptyDataset, train, TrainedDurationModel, TrainResult } from "./train.js";
export {
  exportedComponents,
  ExportContext,
  exportMixtures,
  STD_FLOOR_FRAMES,
  writeMixtureFile,
} from "./export.js";
