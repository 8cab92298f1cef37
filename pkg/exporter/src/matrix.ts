/** Dense row-major float64 matrix, the working type for activations. */

export class Matrix {
  readonly rows: number;
  readonly cols: number;
  readonly data: Float64Array;

  constructor(rows: number, cols: number, data?: Float64Array) {
    this.rows = rows;
    this.cols = cols;
    this.data = data ?? new Float64Array(rows * cols);
    if (this.data.length !== rows * cols) {
      throw new Error(
        `matrix ${rows}x${cols} needs ${rows * cols} values, ` +
          `got ${this.data.length}`,
      );
    }
  }

  get(r: number, c: number): number {
    return this.data[r * this.cols + c];
  }

  set(r: number, c: number, v: number): void {
    this.data[r * this.cols + c] = v;
  }

  row(r: number): Float64Array {
    return this.data.subarray(r * this.cols, (r + 1) * this.cols);
  }

  slice(rowStart: number, rowEnd: number): Matrix {
    return new Matrix(
      rowEnd - rowStart,
      this.cols,
      this.data.slice(rowStart * this.cols, rowEnd * this.cols),
    );
  }

  static fromRows(rows: number[][]): Matrix {
    const m = new Matrix(rows.length, rows[0]?.length ?? 0);
    rows.forEach((row, r) => row.forEach((v, c) => m.set(r, c, v)));
    return m;
  }
}
