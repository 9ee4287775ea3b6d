/**
 * The pipeline's binary matrix container ("MMX1").
 *
 * Layout: magic "MMX1" | u32 LE rows | u32 LE cols | u32 LE reserved=0
 *         | rows*cols float32 LE row-major | u64 LE FNV-1a of the payload.
 *
 * This is an independent implementation used both to emit files and to
 * verify them after writing; the consuming pipeline has its own reader.
 */

const MAGIC = Buffer.from("MMX1", "ascii");
const HEADER_BYTES = 16;
const CHECKSUM_BYTES = 8;

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x00000100000001b3n;
const U64 = (1n << 64n) - 1n;

export class FormatError extends Error {}

export function fnv1a64(payload: Buffer): bigint {
  let hash = FNV_OFFSET;
  for (const byte of payload) {
    hash ^= BigInt(byte);
    hash = (hash * FNV_PRIME) & U64;
  }
  return hash;
}

/** Serialize a rows x cols matrix (array of equal-length rows). */
export function encodeMatrix(rows: number[][]): Buffer {
  if (rows.length === 0 || rows[0].length === 0) {
    throw new FormatError("matrix must have at least one row and column");
  }
  const n = rows.length;
  const w = rows[0].length;
  const payload = Buffer.alloc(4 * n * w);
  for (let i = 0; i < n; i++) {
    if (rows[i].length !== w) {
      throw new FormatError(`row ${i} has ${rows[i].length} values, expected ${w}`);
    }
    for (let j = 0; j < w; j++) {
      const v = rows[i][j];
      if (!Number.isFinite(v)) {
        throw new FormatError(`non-finite value at (${i}, ${j})`);
      }
      payload.writeFloatLE(v, 4 * (i * w + j));
    }
  }
  const header = Buffer.alloc(HEADER_BYTES);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(n, 4);
  header.writeUInt32LE(w, 8);
  header.writeUInt32LE(0, 12);
  const checksum = Buffer.alloc(CHECKSUM_BYTES);
  checksum.writeBigUInt64LE(fnv1a64(payload));
  return Buffer.concat([header, payload, checksum]);
}

export interface Matrix {
  rows: number;
  cols: number;
  data: Float32Array;
}

/** Parse and fully validate an MMX1 blob (magic, dims, payload, checksum). */
export function decodeMatrix(blob: Buffer): Matrix {
  if (blob.length < HEADER_BYTES) {
    throw new FormatError(`truncated header at byte ${blob.length}`);
  }
  if (!blob.subarray(0, 4).equals(MAGIC)) {
    throw new FormatError(`bad magic ${JSON.stringify(blob.subarray(0, 4).toString())}`);
  }
  const rows = blob.readUInt32LE(4);
  const cols = blob.readUInt32LE(8);
  const reserved = blob.readUInt32LE(12);
  if (reserved !== 0) {
    throw new FormatError(`reserved field must be 0, got ${reserved}`);
  }
  if (rows < 1 || cols < 1) {
    throw new FormatError(`degenerate dims ${rows}x${cols}`);
  }
  const need = HEADER_BYTES + 4 * rows * cols + CHECKSUM_BYTES;
  if (blob.length !== need) {
    throw new FormatError(
      `declared ${rows}x${cols} needs ${need} bytes, got ${blob.length} ` +
      `(data ends at byte ${Math.min(blob.length, need)})`,
    );
  }
  const payload = blob.subarray(HEADER_BYTES, blob.length - CHECKSUM_BYTES);
  const declared = blob.readBigUInt64LE(blob.length - CHECKSUM_BYTES);
  if (fnv1a64(payload) !== declared) {
    throw new FormatError("payload checksum mismatch");
  }
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) {
    const v = payload.readFloatLE(4 * i);
    if (!Number.isFinite(v)) {
      throw new FormatError(`non-finite entry at index ${i}`);
    }
    data[i] = v;
  }
  return { rows, cols, data };
}
