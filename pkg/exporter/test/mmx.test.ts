import { describe, expect, it } from "vitest";

import { FormatError, decodeMatrix, encodeMatrix, fnv1a64 } from "../src/mmx.js";

// Frozen cross-implementation vectors (standard FNV-1a 64 test values,
// also produced by the consuming pipeline's implementation).
const FNV_VECTORS: Array<[string, bigint]> = [
  ["", 0xcbf29ce484222325n],
  ["a", 0xaf63dc4c8601ec8cn],
  ["foobar", 0x85944171f73967e8n],
  ["moodpipe", 0x71e7c2ac527387ean],
];

// Bytes the consuming pipeline writes for [[1.5, -2.25], [0.0, 0.125]].
const REFERENCE_HEX =
  "4d4d58310200000002000000000000000000c03f000010c0000000000000003e" +
  "52c0347bc58dc8a0";

describe("fnv1a64", () => {
  it("matches the standard test vectors", () => {
    for (const [text, expected] of FNV_VECTORS) {
      expect(fnv1a64(Buffer.from(text, "utf-8"))).toBe(expected);
    }
  });
});

describe("encodeMatrix", () => {
  it("follows the size formula 16 + 4*N*W + 8", () => {
    expect(encodeMatrix([[0]]).length).toBe(16 + 4 + 8);
    const rows = Array.from({ length: 10 }, () => new Array(1024).fill(0));
    expect(encodeMatrix(rows).length).toBe(16 + 4 * 10 * 1024 + 8);
  });

  it("is byte-identical to the consuming pipeline's writer", () => {
    const blob = encodeMatrix([
      [1.5, -2.25],
      [0.0, 0.125],
    ]);
    expect(blob.toString("hex")).toBe(REFERENCE_HEX);
  });

  it("rejects ragged and non-finite input", () => {
    expect(() => encodeMatrix([[1], [1, 2]])).toThrow(FormatError);
    expect(() => encodeMatrix([[Number.NaN]])).toThrow(FormatError);
    expect(() => encodeMatrix([])).toThrow(FormatError);
  });
});

describe("decodeMatrix", () => {
  it("round-trips float32 values exactly", () => {
    const rows = [
      [0.5, -1.25, 3.0],
      [8.0, 0.0625, -0.75],
    ];
    const m = decodeMatrix(encodeMatrix(rows));
    expect(m.rows).toBe(2);
    expect(m.cols).toBe(3);
    expect(Array.from(m.data)).toEqual(rows.flat());
  });

  it("parses the pipeline-written reference bytes", () => {
    const m = decodeMatrix(Buffer.from(REFERENCE_HEX, "hex"));
    expect(m.rows).toBe(2);
    expect(Array.from(m.data)).toEqual([1.5, -2.25, 0.0, 0.125]);
  });

  it("rejects bad magic", () => {
    const blob = encodeMatrix([[1]]);
    blob.write("XXXX", 0, "ascii");
    expect(() => decodeMatrix(blob)).toThrow(/magic/);
  });

  it("rejects truncation with a byte offset", () => {
    const blob = encodeMatrix([[1, 2], [3, 4]]);
    expect(() => decodeMatrix(blob.subarray(0, blob.length - 3))).toThrow(/byte/);
  });

  it("rejects checksum mismatch", () => {
    const blob = encodeMatrix([[1, 2], [3, 4]]);
    blob[18] ^= 0xff;
    expect(() => decodeMatrix(blob)).toThrow(/checksum/);
  });

  it("rejects dims that disagree with the payload", () => {
    const blob = encodeMatrix([[1, 2], [3, 4]]);
    blob.writeUInt32LE(5, 4); // claim 5 rows
    expect(() => decodeMatrix(blob)).toThrow(FormatError);
  });
});
