/**
 * Command-line entry point.
 *
 *   node dist/cli.js --dataset DIR --out-dir DIR [--encoder toy-projection]
 *        --d-encoder 8 --m 2 --n 1 --setting sequential --seed 5
 *        [--n-classes N] [--eval-dataset DIR]
 *
 * Exit codes: 0 ok, 2 bad usage/config, 3 data problems.
 */

import { parseArgs } from 'node:util';

import { exportStream } from './export.js';
import type { Setting } from './schedule.js';

function usage(): string {
  return [
    'usage: cfs1-exporter --dataset DIR --out-dir DIR --m M [options]',
    '  --dataset DIR        directory of JSON sample files',
    '  --out-dir DIR        CFS1 output directory',
    '  --encoder NAME       frozen encoder (default toy-projection)',
    '  --d-encoder N        encoder output width (default 8)',
    '  --m M                classes in the base step (background included)',
    '  --n N                classes per later step (default 1)',
    '  --setting S          sequential | disjoint | overlapped (default sequential)',
    '  --seed N             encoder seed (default 0)',
    '  --n-classes N        total classes; errors if the data exceeds it',
    '  --eval-dataset DIR   separate eval split (default: training data)',
  ].join('\n');
}

export function main(argv: string[]): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        dataset: { type: 'string' },
        'out-dir': { type: 'string' },
        encoder: { type: 'string', default: 'toy-projection' },
        'd-encoder': { type: 'string', default: '8' },
        m: { type: 'string' },
        n: { type: 'string', default: '1' },
        setting: { type: 'string', default: 'sequential' },
        seed: { type: 'string', default: '0' },
        'n-classes': { type: 'string' },
        'eval-dataset': { type: 'string' },
        help: { type: 'boolean', default: false },
      },
    }));
  } catch (err) {
    console.error(`argument error: ${(err as Error).message}\n${usage()}`);
    return 2;
  }
  if (values.help) {
    console.log(usage());
    return 0;
  }
  if (!values.dataset || !values['out-dir'] || !values.m) {
    console.error(`--dataset, --out-dir and --m are required\n${usage()}`);
    return 2;
  }
  try {
    const result = exportStream({
      datasetDir: values.dataset,
      outDir: values['out-dir'],
      encoder: values.encoder!,
      dEncoder: parseInt(values['d-encoder']!, 10),
      m: parseInt(values.m, 10),
      n: parseInt(values.n!, 10),
      setting: values.setting as Setting,
      seed: parseInt(values.seed!, 10),
      nClasses: values['n-classes'] ? parseInt(values['n-classes'], 10) : undefined,
      evalDatasetDir: values['eval-dataset'],
    });
    console.log(
      `exported ${result.steps} steps over ${result.nClasses} classes to ${values['out-dir']}`,
    );
    console.log(`manifest: ${result.manifestPath}`);
    return 0;
  } catch (err) {
    console.error(`export failed: ${(err as Error).message}`);
    return 3;
  }
}

import { fileURLToPath } from 'node:url';

if (process.argv[1] && fileURLToPath(import.meta.url) === process.argv[1]) {
  process.exit(main(process.argv.slice(2)));
}
