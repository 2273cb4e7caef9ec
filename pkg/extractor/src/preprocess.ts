/**
 * Image preprocessing: resize the shorter side to the target, then take a
 * center crop. Matches the usual CLIP input convention (224x224, RGB,
 * values scaled to [0, 1]).
 */

export interface RgbImage {
  width: number;
  height: number;
  /** row-major RGB, values in [0, 1], length width*height*3 */
  pixels: Float32Array;
}

export const INPUT_SIZE = 224;

function samplePlane(
  img: RgbImage,
  x: number,
  y: number,
  c: number,
): number {
  const xi = Math.min(Math.max(x, 0), img.width - 1);
  const yi = Math.min(Math.max(y, 0), img.height - 1);
  return img.pixels[(yi * img.width + xi) * 3 + c]!;
}

/**
 * Bilinear resize with half-pixel centers: the source coordinate for
 * destination pixel d is (d + 0.5) * scale - 0.5, clamped at the borders.
 */
export function resizeBilinear(
  img: RgbImage,
  width: number,
  height: number,
): RgbImage {
  const out = new Float32Array(width * height * 3);
  const sx = img.width / width;
  const sy = img.height / height;
  for (let dy = 0; dy < height; dy++) {
    const fy = (dy + 0.5) * sy - 0.5;
    const y0 = Math.floor(fy);
    const wy = fy - y0;
    for (let dx = 0; dx < width; dx++) {
      const fx = (dx + 0.5) * sx - 0.5;
      const x0 = Math.floor(fx);
      const wx = fx - x0;
      for (let c = 0; c < 3; c++) {
        const p00 = samplePlane(img, x0, y0, c);
        const p10 = samplePlane(img, x0 + 1, y0, c);
        const p01 = samplePlane(img, x0, y0 + 1, c);
        const p11 = samplePlane(img, x0 + 1, y0 + 1, c);
        const top = p00 + (p10 - p00) * wx;
        const bot = p01 + (p11 - p01) * wx;
        out[(dy * width + dx) * 3 + c] = top + (bot - top) * wy;
      }
    }
  }
  return { width, height, pixels: out };
}

export function centerCrop(img: RgbImage, size: number): RgbImage {
  if (img.width < size || img.height < size) {
    throw new RangeError(
      `cannot crop ${size}x${size} from ${img.width}x${img.height}`,
    );
  }
  const ox = Math.floor((img.width - size) / 2);
  const oy = Math.floor((img.height - size) / 2);
  const out = new Float32Array(size * size * 3);
  for (let y = 0; y < size; y++) {
    const srcOff = ((oy + y) * img.width + ox) * 3;
    out.set(img.pixels.subarray(srcOff, srcOff + size * 3), y * size * 3);
  }
  return { width: size, height: size, pixels: out };
}

/** Shorter side to `size`, then center crop to size x size. */
export function prepareInput(img: RgbImage, size = INPUT_SIZE): RgbImage {
  const scale = size / Math.min(img.width, img.height);
  const w = Math.max(size, Math.round(img.width * scale));
  const h = Math.max(size, Math.round(img.height * scale));
  return centerCrop(resizeBilinear(img, w, h), size);
}

/** Convert 8-bit interleaved RGB(A) bytes to a [0, 1] float image. */
export function fromBytes(
  width: number,
  height: number,
  bytes: Uint8Array,
  channels: 3 | 4,
): RgbImage {
  const n = width * height;
  if (bytes.length !== n * channels) {
    throw new RangeError(
      `pixel buffer is ${bytes.length} bytes, expected ${n * channels}`,
    );
  }
  const pixels = new Float32Array(n * 3);
  for (let i = 0; i < n; i++) {
    pixels[i * 3] = bytes[i * channels]! / 255;
    pixels[i * 3 + 1] = bytes[i * channels + 1]! / 255;
    pixels[i * 3 + 2] = bytes[i * channels + 2]! / 255;
  }
  return { width, height, pixels };
}
