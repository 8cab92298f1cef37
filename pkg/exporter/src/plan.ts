/**
 * Mixup plans: `{"alpha": float, "seed": int, "entries": [[i, j, lambda], ...]}`.
 *
 * The exporter never generates plans, it only consumes them (the
 * scoring CLI's `mixup plan` subcommand writes them), so this module is
 * a validating loader plus the row-blending math: mixed row r is
 * `lambda * X[i] + (1 - lambda) * X[j]` and the soft label is the same
 * convex combination of the two one-hot labels.
 */

import * as fs from 'node:fs';
import { Matrix } from './matrix.js';

export class PlanError extends Error {}

export interface PlanEntry {
  i: number;
  j: number;
  lambda: number;
}

export interface MixupPlan {
  alpha: number;
  seed: number;
  entries: PlanEntry[];
}

export function loadPlan(path: string): MixupPlan {
  let doc: unknown;
  try {
    doc = JSON.parse(fs.readFileSync(path, 'utf-8'));
  } catch (err) {
    if ((err as NodeJS.ErrnoException).code === 'ENOENT') {
      throw new PlanError(`${path}: no such plan file`);
    }
    throw new PlanError(`${path}: invalid plan JSON: ${(err as Error).message}`);
  }
  const d = doc as { alpha?: unknown; seed?: unknown; entries?: unknown };
  if (
    typeof d.alpha !== 'number' ||
    typeof d.seed !== 'number' ||
    !Array.isArray(d.entries)
  ) {
    throw new PlanError(`${path}: plan needs 'alpha', 'seed' and 'entries'`);
  }
  const entries = d.entries.map((e, r) => {
    if (!Array.isArray(e) || e.length !== 3) {
      throw new PlanError(`${path}: entry ${r} is not an [i, j, lambda] triple`);
    }
    const [i, j, lambda] = e as [number, number, number];
    if (!Number.isInteger(i) || !Number.isInteger(j) || i < 0 || j < 0) {
      throw new PlanError(`${path}: entry ${r} has a bad source index`);
    }
    if (typeof lambda !== 'number' || !(lambda >= 0 && lambda <= 1)) {
      throw new PlanError(`${path}: entry ${r} lambda ${lambda} outside [0, 1]`);
    }
    return { i, j, lambda };
  });
  return { alpha: d.alpha, seed: d.seed, entries };
}

/** Largest source index any entry references; -1 for an empty plan. */
export function maxSourceIndex(plan: MixupPlan): number {
  return plan.entries.reduce((m, e) => Math.max(m, e.i, e.j), -1);
}

export function mixRows(X: Matrix, plan: MixupPlan): Matrix {
  const bad = maxSourceIndex(plan);
  if (bad >= X.rows) {
    throw new PlanError(
      `plan index ${bad} out of range for ${X.rows} source rows`,
    );
  }
  const out = new Matrix(plan.entries.length, X.cols);
  plan.entries.forEach((e, r) => {
    const a = X.row(e.i);
    const b = X.row(e.j);
    const o = out.row(r);
    for (let c = 0; c < X.cols; c++) {
      o[c] = e.lambda * a[c] + (1 - e.lambda) * b[c];
    }
  });
  return out;
}

/** Soft labels for the mixed rows; each row sums to 1 exactly as in mixRows. */
export function mixLabels(
  labels: Int32Array | number[],
  numClasses: number,
  plan: MixupPlan,
): Matrix {
  const bad = maxSourceIndex(plan);
  if (bad >= labels.length) {
    throw new PlanError(
      `plan index ${bad} out of range for ${labels.length} labels`,
    );
  }
  const out = new Matrix(plan.entries.length, numClasses);
  plan.entries.forEach((e, r) => {
    out.set(r, labels[e.i] as number, e.lambda);
    const cj = labels[e.j] as number;
    out.set(r, cj, out.get(r, cj) + (1 - e.lambda));
  });
  return out;
}
