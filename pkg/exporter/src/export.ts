/**
 * The export pipeline: load a model and a dataset, run the forward
 * pass batch by batch, and write one `.npy` activation file per tapped
 * layer plus labels and a manifest. With a mixup plan the same pass
 * runs again over blended inputs and the manifest gains a mixup
 * section with soft labels.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';
import { Matrix } from './matrix.js';
import { layerEntries, Manifest, renderManifest } from './manifest.js';
import { loadModel, RefModel } from './model.js';
import { Descr, NpyArray, readNpy, writeNpy } from './npy.js';
import { loadPlan, maxSourceIndex, mixLabels, mixRows } from './plan.js';

export class ExportError extends Error {}

export interface ExportOptions {
  /** forward-pass batch size; purely a memory knob */
  batchSize?: number;
  /** on-disk activation dtype; soft labels are always <f8 */
  dtype?: '<f4' | '<f8';
  /** mixup plan to embed alongside the originals */
  planPath?: string;
}

function asMatrix(arr: NpyArray, what: string): Matrix {
  if (arr.shape.length === 1) {
    return new Matrix(arr.shape[0], 1, arr.data);
  }
  const m = new Matrix(arr.shape[0], arr.shape[1], arr.data);
  if (m.rows === 0) {
    throw new ExportError(`${what} is empty`);
  }
  return m;
}

function asLabels(arr: NpyArray, numClasses: number, what: string): Int32Array {
  if (arr.shape.length !== 1 && arr.shape[1] !== 1) {
    throw new ExportError(`${what} must be a 1-D integer vector`);
  }
  const out = new Int32Array(arr.data.length);
  arr.data.forEach((v, i) => {
    if (!Number.isInteger(v) || v < 0 || v >= numClasses) {
      throw new ExportError(
        `${what}[${i}] = ${v} outside [0, ${numClasses})`,
      );
    }
    out[i] = v;
  });
  return out;
}

/** Forward in batches and stitch the per-tap activations back together. */
function tapActivations(
  model: RefModel,
  X: Matrix,
  taps: string[],
  batchSize: number,
): Map<string, Matrix> {
  const pieces = new Map<string, Matrix[]>(taps.map((t) => [t, []]));
  for (let start = 0; start < X.rows; start += batchSize) {
    const end = Math.min(start + batchSize, X.rows);
    const acts = model.forward(X.slice(start, end), taps);
    for (const tap of taps) {
      pieces.get(tap)!.push(acts.get(tap)!);
    }
  }
  const out = new Map<string, Matrix>();
  for (const tap of taps) {
    const parts = pieces.get(tap)!;
    const cols = parts[0].cols;
    const total = new Matrix(X.rows, cols);
    let row = 0;
    for (const part of parts) {
      total.data.set(part.data, row * cols);
      row += part.rows;
    }
    out.set(tap, total);
  }
  return out;
}

function writeMatrix(file: string, m: Matrix, descr: Descr): void {
  writeNpy(file, m.data, [m.rows, m.cols], descr);
}

/**
 * Export per-layer activations plus a manifest; returns the manifest path.
 *
 * Taps are hidden-layer names (see RefModel.layerNames) listed
 * shallowest-first; the last one becomes depth_from_end 1.
 */
export function exportActivations(
  modelPath: string,
  inputsPath: string,
  labelsPath: string,
  taps: string[],
  outDir: string,
  options: ExportOptions = {},
): string {
  if (taps.length === 0) {
    throw new ExportError('no tap layers requested');
  }
  if (new Set(taps).size !== taps.length) {
    throw new ExportError(`duplicate tap in ${JSON.stringify(taps)}`);
  }
  const batchSize = options.batchSize ?? 256;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new ExportError(`batch size must be a positive integer, got ${batchSize}`);
  }
  const dtype = options.dtype ?? '<f4';

  const model = loadModel(modelPath);
  const X = asMatrix(readNpy(inputsPath), inputsPath);
  if (X.cols !== model.inputDim) {
    throw new ExportError(
      `${inputsPath} has ${X.cols} features but the model expects ${model.inputDim}`,
    );
  }
  const y = asLabels(readNpy(labelsPath), model.numClasses, labelsPath);
  if (y.length !== X.rows) {
    throw new ExportError(
      `${labelsPath} has ${y.length} labels for ${X.rows} input rows`,
    );
  }
  // Fail on a bad tap name before creating any output.
  model.forward(X.slice(0, Math.min(1, X.rows)), taps);

  fs.mkdirSync(outDir, { recursive: true });

  const acts = tapActivations(model, X, taps, batchSize);
  for (const tap of taps) {
    writeMatrix(path.join(outDir, `${tap}.npy`), acts.get(tap)!, dtype);
  }
  writeNpy(path.join(outDir, 'labels.npy'), y, [y.length], '<i8');
  writeMatrix(path.join(outDir, 'inputs.npy'), X, dtype);

  const manifest: Manifest = {
    layers: layerEntries(taps, (tap) => `${tap}.npy`),
    labels: 'labels.npy',
    num_classes: model.numClasses,
    inputs: 'inputs.npy',
  };

  if (options.planPath !== undefined) {
    const plan = loadPlan(options.planPath);
    const bad = maxSourceIndex(plan);
    if (bad >= X.rows) {
      throw new ExportError(
        `${options.planPath}: plan index ${bad} out of range for ` +
          `${X.rows} dataset rows`,
      );
    }
    const mixedX = mixRows(X, plan);
    const mixedActs = tapActivations(model, mixedX, taps, batchSize);
    for (const tap of taps) {
      writeMatrix(
        path.join(outDir, `${tap}_mixed.npy`),
        mixedActs.get(tap)!,
        dtype,
      );
    }
    const soft = mixLabels(y, model.numClasses, plan);
    writeMatrix(path.join(outDir, 'soft_labels.npy'), soft, '<f8');
    // Byte-for-byte copy so the plan round-trips unchanged.
    fs.copyFileSync(options.planPath, path.join(outDir, 'plan.json'));
    manifest.mixup = {
      plan: 'plan.json',
      layers: layerEntries(taps, (tap) => `${tap}_mixed.npy`),
      soft_labels: 'soft_labels.npy',
    };
  }

  const manifestPath = path.join(outDir, 'manifest.json');
  fs.writeFileSync(manifestPath, renderManifest(manifest));
  return manifestPath;
}
