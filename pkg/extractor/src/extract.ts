/**
 * Extraction pipeline: encode a dataset or an image folder with a joint
 * image/text backbone plus a feature model, and write the result as an
 * embedding store. No selection or training happens here; this module is
 * strictly a producer of the store format.
 */

import { join } from 'node:path';

import { CIFAR10_CLASSES, loadCifar10 } from './cifar.js';
import {
  resolveClipEncoder,
  resolveFeatureEncoder,
} from './encoders.js';
import { DatasetUnavailable } from './errors.js';
import { loadImageDir } from './images.js';
import type { RgbImage } from './preprocess.js';
import { DEFAULT_PROMPT, renderPrompt } from './prompt.js';
import { stackRows, writeStore } from './store.js';

export interface ExtractionConfig {
  /** named dataset ("cifar10"); exclusive with imageDir */
  dataset?: string;
  /** directory holding the dataset files; defaults to data/<dataset> */
  datasetRoot?: string;
  /** flat directory of images; exclusive with dataset */
  imageDir?: string;
  /** label space for imageDir extraction (datasets bring their own) */
  classNames?: string[];
  clipBackbone?: string;
  featureModel?: string;
  promptTemplate?: string;
  outDir: string;
  /** recorded in the manifest; the fixture encoders always run on cpu */
  device?: string;
}

export const DEFAULT_CLIP_BACKBONE = 'b32';
export const DEFAULT_FEATURE_MODEL = 'vitg14';

const BATCH = 64;

interface SourceImages {
  ids: string[];
  images: RgbImage[];
  classNames: string[];
  groundTruth?: number[];
  source: string;
}

function loadSource(config: ExtractionConfig): SourceImages {
  const hasDataset = config.dataset !== undefined;
  const hasDir = config.imageDir !== undefined;
  if (hasDataset === hasDir) {
    throw new DatasetUnavailable(
      'specify exactly one input: a dataset name or an image directory',
    );
  }
  if (hasDataset) {
    if (config.classNames !== undefined) {
      throw new DatasetUnavailable(
        `dataset ${config.dataset} defines its own class names; drop the ` +
          'explicit list',
      );
    }
    if (config.dataset !== 'cifar10') {
      throw new DatasetUnavailable(
        `unknown dataset ${config.dataset}; supported: cifar10`,
      );
    }
    const root = config.datasetRoot ?? join('data', config.dataset);
    const records = loadCifar10(root);
    return {
      ids: records.map((r) => r.id),
      images: records.map((r) => r.image),
      classNames: [...CIFAR10_CLASSES],
      groundTruth: records.map((r) => r.label),
      source: `cifar10:${root}`,
    };
  }
  const classNames = config.classNames ?? [];
  if (classNames.length === 0) {
    throw new DatasetUnavailable(
      'image-directory extraction needs the class names for the label space',
    );
  }
  const named = loadImageDir(config.imageDir!);
  return {
    ids: named.map((n) => n.id),
    images: named.map((n) => n.image),
    classNames,
    source: `images:${config.imageDir}`,
  };
}

/**
 * Run the extraction and return the output directory. Progress is
 * reported per encoded batch when a callback is given.
 */
export function extract(
  config: ExtractionConfig,
  onProgress?: (done: number, total: number) => void,
): string {
  const clip = resolveClipEncoder(config.clipBackbone ?? DEFAULT_CLIP_BACKBONE);
  const featureModel = resolveFeatureEncoder(
    config.featureModel ?? DEFAULT_FEATURE_MODEL,
  );
  const template = config.promptTemplate ?? DEFAULT_PROMPT;
  const src = loadSource(config);

  const clipRows: Float32Array[] = [];
  const featureRows: Float32Array[] = [];
  for (let start = 0; start < src.images.length; start += BATCH) {
    const end = Math.min(start + BATCH, src.images.length);
    for (let i = start; i < end; i++) {
      const img = src.images[i]!;
      clipRows.push(clip.encodeImage(img));
      featureRows.push(featureModel.encodeImage(img));
    }
    onProgress?.(end, src.images.length);
  }
  const textRows = src.classNames.map((name) =>
    clip.encodeText(renderPrompt(template, name)),
  );

  const meta: Record<string, unknown> = {
    clip_backbone: clip.id,
    clip_weights_sha256: clip.weightsHash,
    feature_model: featureModel.id,
    feature_weights_sha256: featureModel.weightsHash,
    prompt: template,
    source: src.source,
  };
  if (config.device !== undefined) {
    meta.device = config.device;
  }

  writeStore(config.outDir, {
    imageClip: stackRows(clipRows, clip.dim),
    textClip: stackRows(textRows, clip.dim),
    features: stackRows(featureRows, featureModel.dim),
    classNames: src.classNames,
    imageIds: src.ids,
    groundTruth: src.groundTruth,
    meta,
  });
  return config.outDir;
}
