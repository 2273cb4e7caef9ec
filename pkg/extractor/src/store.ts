/**
 * Embedding-store writer.
 *
 * A store is a directory of EMBSTOR1 matrices plus a manifest.json. The
 * binary layout per matrix: 8-byte magic "EMBSTOR1", uint32 LE row count,
 * uint32 LE column count, then rows*cols float32 LE values in row-major
 * order. The consumer validates byte length strictly, so the writer never
 * pads or truncates.
 */

import { mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import { IoFailure } from './errors.js';

export const MAGIC = 'EMBSTOR1';
export const MANIFEST_VERSION = 1;

export interface Matrix {
  rows: number;
  cols: number;
  /** row-major, length rows*cols */
  data: Float32Array;
}

export function encodeMatrix(matrix: Matrix): Buffer {
  const { rows, cols, data } = matrix;
  if (rows < 0 || cols < 0 || data.length !== rows * cols) {
    throw new IoFailure(
      `matrix data has ${data.length} values, expected ${rows}x${cols}`,
    );
  }
  const buf = Buffer.alloc(16 + data.length * 4);
  buf.write(MAGIC, 0, 'ascii');
  buf.writeUInt32LE(rows, 8);
  buf.writeUInt32LE(cols, 12);
  for (let i = 0; i < data.length; i++) {
    buf.writeFloatLE(data[i]!, 16 + i * 4);
  }
  return buf;
}

export function decodeMatrix(buf: Buffer): Matrix {
  if (buf.length < 16 || buf.toString('ascii', 0, 8) !== MAGIC) {
    throw new IoFailure('not an EMBSTOR1 matrix');
  }
  const rows = buf.readUInt32LE(8);
  const cols = buf.readUInt32LE(12);
  if (buf.length !== 16 + rows * cols * 4) {
    throw new IoFailure(
      `matrix payload is ${buf.length - 16} bytes, expected ${rows * cols * 4}`,
    );
  }
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) {
    data[i] = buf.readFloatLE(16 + i * 4);
  }
  return { rows, cols, data };
}

export function writeMatrixFile(path: string, matrix: Matrix): void {
  writeFileSync(path, encodeMatrix(matrix));
}

export function readMatrixFile(path: string): Matrix {
  return decodeMatrix(readFileSync(path));
}

export interface StorePayload {
  imageClip: Matrix;
  textClip: Matrix;
  features: Matrix;
  classNames: string[];
  imageIds: string[];
  groundTruth?: number[];
  meta?: Record<string, unknown>;
}

/** Write the store directory; returns the manifest path. */
export function writeStore(outDir: string, store: StorePayload): string {
  const { imageClip, textClip, features } = store;
  if (textClip.rows !== store.classNames.length) {
    throw new IoFailure(
      `${store.classNames.length} class names for ${textClip.rows} text rows`,
    );
  }
  if (imageClip.rows !== store.imageIds.length) {
    throw new IoFailure(
      `${store.imageIds.length} image ids for ${imageClip.rows} image rows`,
    );
  }
  if (features.rows !== imageClip.rows) {
    throw new IoFailure(
      `feature rows ${features.rows} != image rows ${imageClip.rows}`,
    );
  }
  if (textClip.cols !== imageClip.cols) {
    throw new IoFailure(
      `text dim ${textClip.cols} != image dim ${imageClip.cols}`,
    );
  }
  if (store.groundTruth && store.groundTruth.length !== imageClip.rows) {
    throw new IoFailure('ground truth length must equal the image count');
  }

  try {
    mkdirSync(outDir, { recursive: true });
  } catch (err) {
    throw new IoFailure(`cannot create store directory ${outDir}: ${err}`);
  }

  const files = {
    image_clip: 'image_clip.bin',
    text_clip: 'text_clip.bin',
    features: 'features.bin',
  };
  writeMatrixFile(join(outDir, files.image_clip), imageClip);
  writeMatrixFile(join(outDir, files.text_clip), textClip);
  writeMatrixFile(join(outDir, files.features), features);

  const manifest: Record<string, unknown> = {
    version: MANIFEST_VERSION,
    num_images: imageClip.rows,
    num_classes: textClip.rows,
    clip_dim: imageClip.cols,
    feature_dim: features.cols,
    class_names: store.classNames,
    image_ids: store.imageIds,
    files,
  };
  if (store.groundTruth) {
    manifest.ground_truth = store.groundTruth;
  }
  if (store.meta && Object.keys(store.meta).length > 0) {
    manifest.meta = store.meta;
  }

  const manifestPath = join(outDir, 'manifest.json');
  writeFileSync(manifestPath, JSON.stringify(manifest, null, 2) + '\n');
  return manifestPath;
}

/** Stack unit-norm rows into a matrix, guarding against zero vectors. */
export function stackRows(rows: Float32Array[], cols: number): Matrix {
  const out = new Float32Array(rows.length * cols);
  rows.forEach((row, r) => {
    if (row.length !== cols) {
      throw new IoFailure(`row ${r} has ${row.length} values, expected ${cols}`);
    }
    out.set(row, r * cols);
  });
  return { rows: rows.length, cols, data: out };
}
