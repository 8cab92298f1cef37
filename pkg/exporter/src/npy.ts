/**
 * Minimal `.npy` v1.0 reader/writer.
 *
 * Restricted to little-endian C-order arrays of dtype `<f4`, `<f8`,
 * `<i4` or `<i8` with 1 or 2 dimensions, which is exactly the subset
 * the scoring package reads. The header is the standard textual
 * mapping, space-padded so the whole preamble is a multiple of 64
 * bytes and terminated by a newline; files written here load with
 * `numpy.load` and vice versa.
 */

import * as fs from 'node:fs';

const MAGIC = Buffer.from('\x93NUMPY', 'latin1');

export type Descr = '<f4' | '<f8' | '<i4' | '<i8';

const BYTES_PER: Record<Descr, number> = {
  '<f4': 4,
  '<f8': 8,
  '<i4': 4,
  '<i8': 8,
};

export interface NpyArray {
  descr: Descr;
  /** [n] for 1-D, [rows, cols] for 2-D */
  shape: number[];
  /** values in row-major order, widened to doubles */
  data: Float64Array;
}

export class NpyFormatError extends Error {}

function headerText(descr: Descr, shape: number[]): string {
  const shapeText =
    shape.length === 1 ? `(${shape[0]},)` : `(${shape[0]}, ${shape[1]})`;
  return `{'descr': '${descr}', 'fortran_order': False, 'shape': ${shapeText}, }`;
}

/** Serialize values (row-major) into a complete .npy file buffer. */
export function encodeNpy(
  data: ArrayLike<number>,
  shape: number[],
  descr: Descr,
): Buffer {
  if (shape.length !== 1 && shape.length !== 2) {
    throw new NpyFormatError(
      `only 1-D/2-D arrays supported, got ${shape.length}-D`,
    );
  }
  const count = shape.reduce((a, b) => a * b, 1);
  if (data.length !== count) {
    throw new NpyFormatError(
      `shape (${shape.join(', ')}) needs ${count} values, got ${data.length}`,
    );
  }
  const header = headerText(descr, shape);
  // magic(6) + version(2) + header-length(2) + header, padded to 64 bytes
  const unpadded = MAGIC.length + 2 + 2 + header.length + 1;
  const pad = ((-unpadded) % 64 + 64) % 64;
  const headerBytes = Buffer.from(header + ' '.repeat(pad) + '\n', 'latin1');

  const payload = Buffer.alloc(count * BYTES_PER[descr]);
  for (let i = 0; i < count; i++) {
    const v = data[i];
    switch (descr) {
      case '<f4':
        payload.writeFloatLE(v, i * 4);
        break;
      case '<f8':
        payload.writeDoubleLE(v, i * 8);
        break;
      case '<i4':
        payload.writeInt32LE(v, i * 4);
        break;
      case '<i8':
        payload.writeBigInt64LE(BigInt(Math.round(v)), i * 8);
        break;
    }
  }

  const head = Buffer.alloc(MAGIC.length + 2 + 2);
  MAGIC.copy(head, 0);
  head[MAGIC.length] = 0x01;
  head[MAGIC.length + 1] = 0x00;
  head.writeUInt16LE(headerBytes.length, MAGIC.length + 2);
  return Buffer.concat([head, headerBytes, payload]);
}

export function writeNpy(
  path: string,
  data: ArrayLike<number>,
  shape: number[],
  descr: Descr,
): void {
  fs.writeFileSync(path, encodeNpy(data, shape, descr));
}

function parseHeader(
  text: string,
  path: string,
): { descr: Descr; shape: number[] } {
  const descrMatch = text.match(/'descr'\s*:\s*'([^']*)'/);
  const fortranMatch = text.match(/'fortran_order'\s*:\s*(True|False)/);
  const shapeMatch = text.match(/'shape'\s*:\s*\((\s*\d+\s*,?(?:\s*\d+\s*)?)\)/);
  if (!descrMatch || !fortranMatch || !shapeMatch) {
    throw new NpyFormatError(`${path}: malformed .npy header`);
  }
  const descr = descrMatch[1];
  if (!(descr in BYTES_PER)) {
    throw new NpyFormatError(
      `${path}: unsupported dtype '${descr}' (supported: <f4, <f8, <i4, <i8)`,
    );
  }
  if (fortranMatch[1] !== 'False') {
    throw new NpyFormatError(
      `${path}: fortran_order arrays are not supported`,
    );
  }
  const dims = shapeMatch[1]
    .split(',')
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => parseInt(s, 10));
  if (dims.length !== 1 && dims.length !== 2) {
    throw new NpyFormatError(
      `${path}: only 1-D/2-D arrays supported, got ${dims.length}-D`,
    );
  }
  return { descr: descr as Descr, shape: dims };
}

export function decodeNpy(buf: Buffer, path = '<buffer>'): NpyArray {
  if (buf.length < 10 || !buf.subarray(0, 6).equals(MAGIC)) {
    throw new NpyFormatError(`${path}: not a .npy file (bad magic)`);
  }
  if (buf[6] !== 1 || buf[7] !== 0) {
    throw new NpyFormatError(
      `${path}: unsupported .npy version ${buf[6]}.${buf[7]}`,
    );
  }
  const headerLen = buf.readUInt16LE(8);
  if (buf.length < 10 + headerLen) {
    throw new NpyFormatError(`${path}: truncated .npy header`);
  }
  const { descr, shape } = parseHeader(
    buf.subarray(10, 10 + headerLen).toString('latin1'),
    path,
  );
  const count = shape.reduce((a, b) => a * b, 1);
  const payload = buf.subarray(10 + headerLen);
  if (payload.length < count * BYTES_PER[descr]) {
    throw new NpyFormatError(
      `${path}: truncated payload, expected ${count * BYTES_PER[descr]} ` +
        `bytes, got ${payload.length}`,
    );
  }
  const data = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    switch (descr) {
      case '<f4':
        data[i] = payload.readFloatLE(i * 4);
        break;
      case '<f8':
        data[i] = payload.readDoubleLE(i * 8);
        break;
      case '<i4':
        data[i] = payload.readInt32LE(i * 4);
        break;
      case '<i8':
        data[i] = Number(payload.readBigInt64LE(i * 8));
        break;
    }
  }
  for (let i = 0; i < count; i++) {
    if (!Number.isFinite(data[i])) {
      throw new NpyFormatError(`${path}: non-finite value at index ${i}`);
    }
  }
  return { descr, shape, data };
}

export function readNpy(path: string): NpyArray {
  let buf: Buffer;
  try {
    buf = fs.readFileSync(path);
  } catch {
    throw new NpyFormatError(`${path}: no such file`);
  }
  return decodeNpy(buf, path);
}
