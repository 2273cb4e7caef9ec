export {
  DatasetUnavailable,
  ExtractError,
  IoFailure,
  ModelUnavailable,
} from './errors.js';
export {
  DEFAULT_CLIP_BACKBONE,
  DEFAULT_FEATURE_MODEL,
  extract,
  type ExtractionConfig,
} from './extract.js';
export {
  CLIP_BACKBONES,
  FEATURE_MODELS,
  FIXTURE_CLIP_DIM,
  FIXTURE_FEATURE_DIM,
  FIXTURE_ID,
  resolveClipEncoder,
  resolveFeatureEncoder,
  type ClipEncoder,
  type FeatureEncoder,
} from './encoders.js';
export { DEFAULT_PROMPT, renderPrompt } from './prompt.js';
export { CIFAR10_CLASSES, loadCifar10, parseCifarBatch } from './cifar.js';
export { loadImageDir, loadImageFile } from './images.js';
export {
  centerCrop,
  fromBytes,
  INPUT_SIZE,
  prepareInput,
  resizeBilinear,
  type RgbImage,
} from './preprocess.js';
export {
  decodeMatrix,
  encodeMatrix,
  MAGIC,
  MANIFEST_VERSION,
  readMatrixFile,
  stackRows,
  writeMatrixFile,
  writeStore,
  type Matrix,
  type StorePayload,
} from './store.js';
