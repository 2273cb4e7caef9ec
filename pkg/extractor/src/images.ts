/**
 * Loading images from a directory. Supported on disk: PNG, JPEG, and
 * binary PPM (P6). Files are taken in sorted name order so extraction is
 * deterministic across runs and machines.
 */

import { readFileSync, readdirSync, statSync } from 'node:fs';
import { extname, join } from 'node:path';

import jpeg from 'jpeg-js';
import { PNG } from 'pngjs';

import { DatasetUnavailable } from './errors.js';
import { fromBytes, type RgbImage } from './preprocess.js';

const EXTENSIONS = new Set(['.png', '.jpg', '.jpeg', '.ppm']);

export interface NamedImage {
  /** file name without extension, used as the image id */
  id: string;
  image: RgbImage;
}

function decodePpm(buf: Buffer, path: string): RgbImage {
  // P6 header: magic, width, height, maxval, single whitespace, raster.
  // Comments (# to end of line) may appear between tokens.
  let pos = 0;
  const token = (): string => {
    while (pos < buf.length) {
      const ch = buf[pos]!;
      if (ch === 0x23) {
        while (pos < buf.length && buf[pos] !== 0x0a) pos++;
      } else if (ch === 0x20 || ch === 0x09 || ch === 0x0a || ch === 0x0d) {
        pos++;
      } else {
        break;
      }
    }
    const start = pos;
    while (pos < buf.length && !/\s/.test(String.fromCharCode(buf[pos]!))) {
      pos++;
    }
    return buf.toString('ascii', start, pos);
  };
  const magic = token();
  if (magic !== 'P6') {
    throw new DatasetUnavailable(`${path}: not a P6 ppm (magic ${magic})`);
  }
  const width = Number(token());
  const height = Number(token());
  const maxval = Number(token());
  if (!Number.isInteger(width) || !Number.isInteger(height) || maxval !== 255) {
    throw new DatasetUnavailable(`${path}: unsupported ppm header`);
  }
  pos++; // single whitespace after maxval
  const raster = buf.subarray(pos, pos + width * height * 3);
  if (raster.length !== width * height * 3) {
    throw new DatasetUnavailable(`${path}: truncated ppm raster`);
  }
  return fromBytes(width, height, raster, 3);
}

export function loadImageFile(path: string): RgbImage {
  let buf: Buffer;
  try {
    buf = readFileSync(path);
  } catch (err) {
    throw new DatasetUnavailable(`cannot read ${path}: ${err}`);
  }
  const ext = extname(path).toLowerCase();
  try {
    if (ext === '.png') {
      const png = PNG.sync.read(buf);
      return fromBytes(png.width, png.height, png.data, 4);
    }
    if (ext === '.jpg' || ext === '.jpeg') {
      const img = jpeg.decode(buf, { useTArray: true, maxMemoryUsageInMB: 512 });
      return fromBytes(img.width, img.height, img.data, 4);
    }
    if (ext === '.ppm') {
      return decodePpm(buf, path);
    }
  } catch (err) {
    if (err instanceof DatasetUnavailable) throw err;
    throw new DatasetUnavailable(`cannot decode ${path}: ${err}`);
  }
  throw new DatasetUnavailable(`${path}: unsupported image format`);
}

/** List and decode every supported image under dir, sorted by file name. */
export function loadImageDir(dir: string): NamedImage[] {
  let names: string[];
  try {
    names = readdirSync(dir);
  } catch (err) {
    throw new DatasetUnavailable(`cannot list ${dir}: ${err}`);
  }
  const files = names
    .filter((n) => EXTENSIONS.has(extname(n).toLowerCase()))
    .sort();
  const out: NamedImage[] = [];
  for (const name of files) {
    const path = join(dir, name);
    if (!statSync(path).isFile()) continue;
    const id = name.slice(0, name.length - extname(name).length);
    out.push({ id, image: loadImageFile(path) });
  }
  if (out.length === 0) {
    throw new DatasetUnavailable(`no supported images found in ${dir}`);
  }
  return out;
}
