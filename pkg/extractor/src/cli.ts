#!/usr/bin/env node
/**
 * Command line entry point.
 *
 *   selfseed-extract --dataset cifar10 --clip-backbone b32 \
 *     --feature-model vitg14 --out DIR [--prompt TEMPLATE]
 *   selfseed-extract --images DIR --classes cat,dog --out DIR
 *
 * Exit codes: 0 success, 2 input or usage failure.
 */

import { resolve } from 'node:path';
import { fileURLToPath } from 'node:url';
import { parseArgs } from 'node:util';

import {
  DEFAULT_CLIP_BACKBONE,
  DEFAULT_FEATURE_MODEL,
  extract,
  type ExtractionConfig,
} from './extract.js';
import { ExtractError } from './errors.js';
import { DEFAULT_PROMPT } from './prompt.js';

const USAGE = `usage: selfseed-extract (--dataset NAME | --images DIR) --out DIR
  --dataset NAME        named dataset (cifar10)
  --data-root DIR       dataset file location (default data/NAME)
  --images DIR          flat directory of png/jpeg/ppm images
  --classes A,B,...     class names for --images extraction
  --clip-backbone ID    ${DEFAULT_CLIP_BACKBONE} by default (b32, b16, l14, fixture)
  --feature-model ID    ${DEFAULT_FEATURE_MODEL} by default (vitg14, fixture)
  --prompt TEMPLATE     text prompt, {} is the class slot
                        (default "${DEFAULT_PROMPT}")
  --device NAME         recorded in the manifest
  --out DIR             store output directory (required)
  --quiet               suppress progress output
`;

export function main(argv: string[]): number {
  let values: Record<string, string | boolean | undefined>;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        dataset: { type: 'string' },
        'data-root': { type: 'string' },
        images: { type: 'string' },
        classes: { type: 'string' },
        'clip-backbone': { type: 'string' },
        'feature-model': { type: 'string' },
        prompt: { type: 'string' },
        device: { type: 'string' },
        out: { type: 'string' },
        quiet: { type: 'boolean', default: false },
        help: { type: 'boolean', default: false },
      },
      allowPositionals: false,
    }));
  } catch (err) {
    process.stderr.write(`${err instanceof Error ? err.message : err}\n`);
    process.stderr.write(USAGE);
    return 2;
  }

  if (values.help) {
    process.stdout.write(USAGE);
    return 0;
  }
  const out = values.out as string | undefined;
  if (!out) {
    process.stderr.write('--out is required\n');
    process.stderr.write(USAGE);
    return 2;
  }

  const config: ExtractionConfig = { outDir: out };
  if (values.dataset !== undefined) config.dataset = values.dataset as string;
  if (values['data-root'] !== undefined) {
    config.datasetRoot = values['data-root'] as string;
  }
  if (values.images !== undefined) config.imageDir = values.images as string;
  if (values.classes !== undefined) {
    config.classNames = (values.classes as string)
      .split(',')
      .map((s) => s.trim())
      .filter((s) => s.length > 0);
  }
  if (values['clip-backbone'] !== undefined) {
    config.clipBackbone = values['clip-backbone'] as string;
  }
  if (values['feature-model'] !== undefined) {
    config.featureModel = values['feature-model'] as string;
  }
  if (values.prompt !== undefined) {
    config.promptTemplate = values.prompt as string;
  }
  if (values.device !== undefined) config.device = values.device as string;

  const progress = values.quiet
    ? undefined
    : (done: number, total: number) => {
        process.stderr.write(`encoded ${done}/${total} images\n`);
      };

  try {
    const dir = extract(config, progress);
    process.stdout.write(`${dir}\n`);
    return 0;
  } catch (err) {
    if (err instanceof ExtractError) {
      process.stderr.write(`${err.name}: ${err.message}\n`);
      return 2;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  fileURLToPath(import.meta.url) === resolve(process.argv[1]);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
