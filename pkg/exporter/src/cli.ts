#!/usr/bin/env node
/**
 * Command line front end.
 *
 *   lgg-export --model model.json --inputs X.npy --labels y.npy \
 *       --taps h1,h2,h3 --out activations/ [--plan plan.json] \
 *       [--batch 256] [--dtype f4|f8]
 *
 * Prints the manifest path on success. Usage errors exit 2, runtime
 * failures print `error: ...` and exit 1.
 */

import { parseArgs } from 'node:util';
import { exportActivations } from './export.js';

const USAGE =
  'usage: lgg-export --model FILE --inputs FILE --labels FILE ' +
  '--taps NAME[,NAME...] --out DIR [--plan FILE] [--batch N] [--dtype f4|f8]';

export function runCli(
  argv: string[],
  log: (line: string) => void = console.log,
  err: (line: string) => void = console.error,
): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        model: { type: 'string' },
        inputs: { type: 'string' },
        labels: { type: 'string' },
        taps: { type: 'string' },
        out: { type: 'string' },
        plan: { type: 'string' },
        batch: { type: 'string', default: '256' },
        dtype: { type: 'string', default: 'f4' },
        help: { type: 'boolean', default: false },
      },
      allowPositionals: false,
    }));
  } catch (e) {
    err((e as Error).message);
    err(USAGE);
    return 2;
  }
  if (values.help) {
    log(USAGE);
    return 0;
  }
  for (const key of ['model', 'inputs', 'labels', 'taps', 'out'] as const) {
    if (values[key] === undefined) {
      err(`missing required option --${key}`);
      err(USAGE);
      return 2;
    }
  }
  const taps = (values.taps as string)
    .split(',')
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
  if (taps.length === 0) {
    err('--taps needs at least one layer name');
    return 2;
  }
  const batch = Number(values.batch);
  if (!Number.isInteger(batch) || batch < 1) {
    err(`--batch must be a positive integer, got '${values.batch}'`);
    return 2;
  }
  if (values.dtype !== 'f4' && values.dtype !== 'f8') {
    err(`--dtype must be f4 or f8, got '${values.dtype}'`);
    return 2;
  }

  try {
    const manifestPath = exportActivations(
      values.model as string,
      values.inputs as string,
      values.labels as string,
      taps,
      values.out as string,
      {
        batchSize: batch,
        dtype: values.dtype === 'f8' ? '<f8' : '<f4',
        planPath: values.plan,
      },
    );
    log(manifestPath);
    return 0;
  } catch (e) {
    err(`error: ${(e as Error).message}`);
    return 1;
  }
}

const entry = process.argv[1] ?? '';
if (entry.endsWith('cli.js') || entry.endsWith('lgg-export')) {
  process.exit(runCli(process.argv.slice(2)));
}
