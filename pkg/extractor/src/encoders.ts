/**
 * Encoder registry.
 *
 * Two lanes: a joint image/text backbone that produces the shared-space
 * rows (image_clip, text_clip), and an image-only feature model for the
 * classifier-side rows (features). The well-known pretrained ids are
 * registered with their output dims, but their weights are not bundled
 * with this package; resolving them raises ModelUnavailable. The
 * "fixture" id is a deterministic pure-TS stand-in used to exercise the
 * extraction plumbing end to end without any downloads.
 */

import { createHash } from 'node:crypto';

import { ModelUnavailable } from './errors.js';
import { INPUT_SIZE, prepareInput, type RgbImage } from './preprocess.js';

export interface ClipEncoder {
  readonly id: string;
  readonly dim: number;
  /** digest of the loaded weights, recorded in the manifest */
  readonly weightsHash: string;
  /** Embed a raw image (any size); unit-norm output. */
  encodeImage(img: RgbImage): Float32Array;
  /** Embed a prompt string; unit-norm output. */
  encodeText(text: string): Float32Array;
}

export interface FeatureEncoder {
  readonly id: string;
  readonly dim: number;
  /** digest of the loaded weights, recorded in the manifest */
  readonly weightsHash: string;
  /** Embed a raw image (any size); raw (not normalized) output. */
  encodeImage(img: RgbImage): Float32Array;
}

export const CLIP_BACKBONES: Record<string, { name: string; dim: number }> = {
  b32: { name: 'ViT-B/32', dim: 512 },
  b16: { name: 'ViT-B/16', dim: 512 },
  l14: { name: 'ViT-L/14', dim: 768 },
};

export const FEATURE_MODELS: Record<string, { name: string; dim: number }> = {
  vitg14: { name: 'ViT-G/14', dim: 1280 },
};

export const FIXTURE_ID = 'fixture';
export const FIXTURE_CLIP_DIM = 64;
export const FIXTURE_FEATURE_DIM = 32;

// --- deterministic fixture internals ------------------------------------

function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

/** Small, fast, seedable PRNG; plenty for a test-only projection. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const POOL = 8; // prepared input is pooled to POOL x POOL x 3 values

function pooledPixels(img: RgbImage): Float64Array {
  const prepared = prepareInput(img);
  const cell = INPUT_SIZE / POOL;
  const out = new Float64Array(POOL * POOL * 3);
  for (let py = 0; py < POOL; py++) {
    for (let px = 0; px < POOL; px++) {
      let r = 0;
      let g = 0;
      let b = 0;
      for (let y = py * cell; y < (py + 1) * cell; y++) {
        for (let x = px * cell; x < (px + 1) * cell; x++) {
          const o = (y * INPUT_SIZE + x) * 3;
          r += prepared.pixels[o]!;
          g += prepared.pixels[o + 1]!;
          b += prepared.pixels[o + 2]!;
        }
      }
      const base = (py * POOL + px) * 3;
      const area = cell * cell;
      out[base] = r / area;
      out[base + 1] = g / area;
      out[base + 2] = b / area;
    }
  }
  return out;
}

/** dim x inDim sign matrix (+1/-1 entries) seeded from a label string. */
function signProjection(label: string, dim: number, inDim: number): Int8Array {
  const rng = mulberry32(fnv1a(label));
  const proj = new Int8Array(dim * inDim);
  for (let i = 0; i < proj.length; i++) {
    proj[i] = rng() < 0.5 ? -1 : 1;
  }
  return proj;
}

function project(
  proj: Int8Array,
  dim: number,
  input: Float64Array,
): Float32Array {
  const inDim = input.length;
  const out = new Float32Array(dim);
  for (let d = 0; d < dim; d++) {
    let acc = 0;
    const row = d * inDim;
    for (let i = 0; i < inDim; i++) {
      acc += proj[row + i]! * input[i]!;
    }
    out[d] = acc;
  }
  return out;
}

function projectionHash(tag: string, proj: Int8Array): string {
  const h = createHash('sha256');
  h.update(tag);
  h.update(Buffer.from(proj.buffer, proj.byteOffset, proj.byteLength));
  return h.digest('hex');
}

function unitNorm(vec: Float32Array): Float32Array {
  let sq = 0;
  for (const v of vec) sq += v * v;
  const norm = Math.sqrt(sq);
  if (norm === 0) {
    // constant-zero input; fall back to a fixed axis so the row stays valid
    const out = new Float32Array(vec.length);
    out[0] = 1;
    return out;
  }
  const out = new Float32Array(vec.length);
  for (let i = 0; i < vec.length; i++) out[i] = vec[i]! / norm;
  return out;
}

class FixtureClip implements ClipEncoder {
  readonly id = FIXTURE_ID;
  readonly dim = FIXTURE_CLIP_DIM;
  private readonly proj = signProjection(
    'fixture-clip-image',
    FIXTURE_CLIP_DIM,
    POOL * POOL * 3,
  );
  readonly weightsHash = projectionHash('fixture-clip', this.proj);

  encodeImage(img: RgbImage): Float32Array {
    return unitNorm(project(this.proj, this.dim, pooledPixels(img)));
  }

  encodeText(text: string): Float32Array {
    const rng = mulberry32(fnv1a(`fixture-clip-text:${text}`));
    const raw = new Float32Array(this.dim);
    for (let i = 0; i < this.dim; i++) raw[i] = rng() * 2 - 1;
    return unitNorm(raw);
  }
}

class FixtureFeatures implements FeatureEncoder {
  readonly id = FIXTURE_ID;
  readonly dim = FIXTURE_FEATURE_DIM;
  private readonly proj = signProjection(
    'fixture-feature-image',
    FIXTURE_FEATURE_DIM,
    POOL * POOL * 3,
  );
  readonly weightsHash = projectionHash('fixture-feature', this.proj);

  encodeImage(img: RgbImage): Float32Array {
    return project(this.proj, this.dim, pooledPixels(img));
  }
}

// --- resolution ----------------------------------------------------------

export function resolveClipEncoder(id: string): ClipEncoder {
  if (id === FIXTURE_ID) {
    return new FixtureClip();
  }
  const known = CLIP_BACKBONES[id];
  if (known) {
    throw new ModelUnavailable(
      `pretrained weights for ${known.name} (${known.dim}d) are not bundled; ` +
        'run extraction where the backbone is installed, or use ' +
        `--clip-backbone ${FIXTURE_ID} to exercise the pipeline`,
    );
  }
  const ids = [...Object.keys(CLIP_BACKBONES), FIXTURE_ID].join(', ');
  throw new ModelUnavailable(`unknown clip backbone ${id}; choose one of: ${ids}`);
}

export function resolveFeatureEncoder(id: string): FeatureEncoder {
  if (id === FIXTURE_ID) {
    return new FixtureFeatures();
  }
  const known = FEATURE_MODELS[id];
  if (known) {
    throw new ModelUnavailable(
      `pretrained weights for ${known.name} (${known.dim}d) are not bundled; ` +
        'run extraction where the model is installed, or use ' +
        `--feature-model ${FIXTURE_ID} to exercise the pipeline`,
    );
  }
  const ids = [...Object.keys(FEATURE_MODELS), FIXTURE_ID].join(', ');
  throw new ModelUnavailable(`unknown feature model ${id}; choose one of: ${ids}`);
}
