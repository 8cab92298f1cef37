/**
 * Reference model adapter: a plain feedforward net stored as JSON
 * `{"dims": [...], "layers": [{"w": [[...]], "b": [...]}]}` with
 * rectifier hidden layers. Hidden layers are addressable by name for
 * tapping; the output layer is never tapped.
 */

import * as fs from 'node:fs';
import { Matrix } from './matrix.js';

export class ModelError extends Error {}

export class RefModel {
  readonly dims: number[];
  /** weights[l] has shape dims[l] x dims[l+1], row-major */
  readonly weights: Matrix[];
  readonly biases: Float64Array[];

  constructor(dims: number[], weights: Matrix[], biases: Float64Array[]) {
    if (dims.length < 3) {
      throw new ModelError(
        `a usable net needs at least one hidden layer, dims ${JSON.stringify(dims)}`,
      );
    }
    this.dims = dims;
    this.weights = weights;
    this.biases = biases;
  }

  get inputDim(): number {
    return this.dims[0];
  }

  get numClasses(): number {
    return this.dims[this.dims.length - 1];
  }

  /** Hidden layers in network order: h1 is the first hidden layer. */
  layerNames(): string[] {
    return Array.from({ length: this.dims.length - 2 }, (_, i) => `h${i + 1}`);
  }

  /**
   * Post-activation matrices for the requested hidden layers.
   *
   * Unknown names fail listing what exists, so a typo surfaces before
   * any file is written.
   */
  forward(X: Matrix, taps: string[]): Map<string, Matrix> {
    if (X.cols !== this.inputDim) {
      throw new ModelError(
        `input has ${X.cols} features but the model expects ${this.inputDim}`,
      );
    }
    const names = this.layerNames();
    for (const tap of taps) {
      if (!names.includes(tap)) {
        throw new ModelError(
          `unknown layer '${tap}'; available: ${names.join(', ')}`,
        );
      }
    }

    const wanted = new Set(taps);
    const out = new Map<string, Matrix>();
    let A = X;
    for (let layer = 0; layer < this.weights.length - 1; layer++) {
      A = affineRelu(A, this.weights[layer], this.biases[layer]);
      const name = names[layer];
      if (wanted.has(name)) {
        out.set(name, A);
      }
    }
    return out;
  }
}

function affineRelu(X: Matrix, W: Matrix, b: Float64Array): Matrix {
  const out = new Matrix(X.rows, W.cols);
  for (let r = 0; r < X.rows; r++) {
    const xRow = X.row(r);
    const oRow = out.row(r);
    oRow.set(b);
    for (let i = 0; i < W.rows; i++) {
      const x = xRow[i];
      if (x === 0) continue;
      const wRow = W.row(i);
      for (let c = 0; c < W.cols; c++) {
        oRow[c] += x * wRow[c];
      }
    }
    for (let c = 0; c < oRow.length; c++) {
      if (oRow[c] < 0) oRow[c] = 0;
    }
  }
  return out;
}

function asNumber(v: unknown, what: string): number {
  if (typeof v !== 'number' || !Number.isFinite(v)) {
    throw new ModelError(`${what} is not a finite number`);
  }
  return v;
}

export function loadModel(path: string): RefModel {
  let doc: unknown;
  try {
    doc = JSON.parse(fs.readFileSync(path, 'utf-8'));
  } catch (err) {
    if ((err as NodeJS.ErrnoException).code === 'ENOENT') {
      throw new ModelError(`${path}: no such model file`);
    }
    throw new ModelError(`${path}: invalid model JSON: ${(err as Error).message}`);
  }
  const d = doc as { dims?: unknown; layers?: unknown };
  if (!Array.isArray(d.dims) || !Array.isArray(d.layers)) {
    throw new ModelError(`${path}: model JSON needs 'dims' and 'layers'`);
  }
  const dims = d.dims.map((v, i) => {
    const n = asNumber(v, `${path}: dims[${i}]`);
    if (!Number.isInteger(n) || n < 1) {
      throw new ModelError(`${path}: dims[${i}] must be a positive integer`);
    }
    return n;
  });
  if (d.layers.length !== dims.length - 1) {
    throw new ModelError(
      `${path}: ${dims.length} dims imply ${dims.length - 1} layers, ` +
        `got ${d.layers.length}`,
    );
  }
  const weights: Matrix[] = [];
  const biases: Float64Array[] = [];
  d.layers.forEach((layer, l) => {
    const lay = layer as { w?: unknown; b?: unknown };
    if (!Array.isArray(lay.w) || !Array.isArray(lay.b)) {
      throw new ModelError(`${path}: layer ${l} needs 'w' and 'b'`);
    }
    const [fanIn, fanOut] = [dims[l], dims[l + 1]];
    if (lay.w.length !== fanIn) {
      throw new ModelError(
        `${path}: layer ${l} weight has ${lay.w.length} rows, expected ${fanIn}`,
      );
    }
    const W = new Matrix(fanIn, fanOut);
    lay.w.forEach((row, i) => {
      if (!Array.isArray(row) || row.length !== fanOut) {
        throw new ModelError(
          `${path}: layer ${l} weight row ${i} should have ${fanOut} entries`,
        );
      }
      row.forEach((v, j) =>
        W.set(i, j, asNumber(v, `${path}: layer ${l} w[${i}][${j}]`)),
      );
    });
    if (lay.b.length !== fanOut) {
      throw new ModelError(
        `${path}: layer ${l} bias has ${lay.b.length} entries, expected ${fanOut}`,
      );
    }
    const b = Float64Array.from(
      lay.b.map((v, i) => asNumber(v, `${path}: layer ${l} b[${i}]`)),
    );
    weights.push(W);
    biases.push(b);
  });
  return new RefModel(dims, weights, biases);
}
