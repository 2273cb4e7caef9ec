/**
 * CIFAR-10 binary batch reader.
 *
 * Each record is 3073 bytes: one label byte followed by a 32x32 image as
 * three channel planes (1024 red, 1024 green, 1024 blue bytes, row-major
 * within each plane).
 */

import { existsSync, readFileSync, readdirSync } from 'node:fs';
import { join } from 'node:path';

import { DatasetUnavailable } from './errors.js';
import type { RgbImage } from './preprocess.js';

export const CIFAR10_CLASSES = [
  'airplane',
  'automobile',
  'bird',
  'cat',
  'deer',
  'dog',
  'frog',
  'horse',
  'ship',
  'truck',
] as const;

const RECORD_BYTES = 1 + 3 * 1024;
const SIDE = 32;

export interface LabeledImage {
  id: string;
  label: number;
  image: RgbImage;
}

export function parseCifarBatch(buf: Buffer, idPrefix: string): LabeledImage[] {
  if (buf.length === 0 || buf.length % RECORD_BYTES !== 0) {
    throw new DatasetUnavailable(
      `batch size ${buf.length} is not a multiple of ${RECORD_BYTES}`,
    );
  }
  const count = buf.length / RECORD_BYTES;
  const out: LabeledImage[] = [];
  for (let r = 0; r < count; r++) {
    const base = r * RECORD_BYTES;
    const label = buf[base]!;
    if (label >= CIFAR10_CLASSES.length) {
      throw new DatasetUnavailable(`record ${r}: label ${label} out of range`);
    }
    const pixels = new Float32Array(SIDE * SIDE * 3);
    for (let p = 0; p < SIDE * SIDE; p++) {
      pixels[p * 3] = buf[base + 1 + p]! / 255;
      pixels[p * 3 + 1] = buf[base + 1 + 1024 + p]! / 255;
      pixels[p * 3 + 2] = buf[base + 1 + 2048 + p]! / 255;
    }
    out.push({
      id: `${idPrefix}_${String(r).padStart(5, '0')}`,
      label,
      image: { width: SIDE, height: SIDE, pixels },
    });
  }
  return out;
}

/**
 * Load CIFAR-10 from a directory of binary batches (data_batch_*.bin,
 * test_batch.bin). Any .bin file in record format is accepted so small
 * fixture batches work too.
 */
export function loadCifar10(dir: string): LabeledImage[] {
  if (!existsSync(dir)) {
    throw new DatasetUnavailable(
      `cifar10 directory ${dir} does not exist; download the binary ` +
        'version and unpack it there',
    );
  }
  const names = readdirSync(dir)
    .filter((n) => n.endsWith('.bin'))
    .sort();
  if (names.length === 0) {
    throw new DatasetUnavailable(`no .bin batches in ${dir}`);
  }
  const out: LabeledImage[] = [];
  for (const name of names) {
    const prefix = name.replace(/\.bin$/, '');
    out.push(...parseCifarBatch(readFileSync(join(dir, name)), prefix));
  }
  return out;
}
