/**
 * Shared fixture: a small trained reference net plus its dataset and a
 * mixup plan, all produced by the scoring package so the exporter is
 * tested against the real thing.
 */

import { execFileSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import { fileURLToPath } from 'node:url';

const HERE = path.dirname(fileURLToPath(import.meta.url));

export interface Fixture {
  dir: string;
  model: string;
  inputs: string;
  labels: string;
  /** plan written by the scoring CLI's `mixup plan` subcommand */
  plan: string;
  expected: (depth: number) => string;
}

function python(args: string[]): string {
  return execFileSync('python3', args, {
    encoding: 'utf-8',
    stdio: ['ignore', 'pipe', 'pipe'],
  });
}

export function makeFixture(): Fixture {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'lgg-export-'));
  python([path.join(HERE, 'fixture_gen.py'), dir]);
  const plan = path.join(dir, 'plan_cli.json');
  python([
    '-m', 'lgg', 'mixup', 'plan',
    '--n', '600', '--sources', '600',
    '--alpha', '2.0', '--seed', '3',
    '--out', plan,
  ]);
  return {
    dir,
    model: path.join(dir, 'model.json'),
    inputs: path.join(dir, 'X.npy'),
    labels: path.join(dir, 'y.npy'),
    plan,
    expected: (depth) => path.join(dir, `expected_d${depth}.npy`),
  };
}

/** Final score from the scoring CLI run on an exported manifest. */
export function scoreManifest(
  manifest: string,
  method: string,
  extra: string[] = [],
): number {
  const out = python([
    '-m', 'lgg', 'score',
    '--manifest', manifest,
    '--method', method,
    ...extra,
  ]);
  return Number(out.trim());
}

/** Final score computed fully in memory by oracle_score.py. */
export function scoreInMemory(fix: Fixture, args: string[]): number {
  const out = python([
    path.join(HERE, 'oracle_score.py'),
    fix.model, fix.inputs, fix.labels,
    ...args,
  ]);
  return Number(out.trim());
}

/** Run a short Python snippet, returning stdout. */
export function pythonSnippet(code: string): string {
  return python(['-c', code]);
}
