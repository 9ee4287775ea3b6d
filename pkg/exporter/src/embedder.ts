/**
 * Pluggable sentence embedders.
 *
 * Every embedder maps one transcript to a width-1024 row; the layer policy is
 * average-of-all-layers.  "hash-ctx-v1" is the built-in deterministic
 * embedder: three cheap "layers" (static token vectors, forward-context mix,
 * backward-context mix) are averaged and mean-pooled, so it is contextual
 * (word order matters) yet fully reproducible offline.  Ids of the form
 * "hf:<model>" bridge to @huggingface/transformers when that package and its
 * weights are installed locally.
 */

export const OUTPUT_WIDTH = 1024;

export class EmbedderLoadError extends Error {}
export class WidthMismatchError extends Error {}

export interface Embedder {
  readonly id: string;
  readonly width: number;
  embed(text: string): Promise<number[]>;
}

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x00000100000001b3n;
const GAMMA = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;
const U64 = (1n << 64n) - 1n;

function fnv1a64String(text: string): bigint {
  let hash = FNV_OFFSET;
  for (const byte of Buffer.from(text, "utf-8")) {
    hash ^= BigInt(byte);
    hash = (hash * FNV_PRIME) & U64;
  }
  return hash;
}

function splitmix64(state: bigint): bigint {
  let z = state & U64;
  z = ((z ^ (z >> 30n)) * MIX1) & U64;
  z = ((z ^ (z >> 27n)) * MIX2) & U64;
  return z ^ (z >> 31n);
}

/** Deterministic token vector: uniform values in [-0.5, 0.5). */
function tokenVector(token: string, width: number): Float64Array {
  const seed = fnv1a64String(token);
  const out = new Float64Array(width);
  for (let i = 0; i < width; i++) {
    const word = splitmix64((seed + BigInt(i + 1) * GAMMA) & U64);
    out[i] = Number(word >> 11n) * 2 ** -53 - 0.5;
  }
  return out;
}

class HashContextEmbedder implements Embedder {
  readonly id = "hash-ctx-v1";
  readonly width = OUTPUT_WIDTH;

  async embed(text: string): Promise<number[]> {
    const tokens = text.split(/\s+/).filter((t) => t.length > 0);
    const row = new Float64Array(this.width);
    if (tokens.length === 0) {
      return Array.from(row);
    }
    const statics = tokens.map((t) => tokenVector(t, this.width));
    for (let i = 0; i < tokens.length; i++) {
      const prev = i > 0 ? statics[i - 1] : null;
      const next = i < tokens.length - 1 ? statics[i + 1] : null;
      for (let j = 0; j < this.width; j++) {
        // three "layers": static, forward-context, backward-context; the
        // nonlinearity and asymmetric mixing keep pooling order-sensitive
        const layer0 = statics[i][j];
        const layer1 = Math.tanh(statics[i][j] + 0.5 * (prev ? prev[j] : 0));
        const layer2 = Math.tanh(statics[i][j] + 0.25 * (next ? next[j] : 0));
        row[j] += (layer0 + layer1 + layer2) / 3;
      }
    }
    for (let j = 0; j < this.width; j++) {
      row[j] /= tokens.length;
    }
    return Array.from(row);
  }
}

class TransformersEmbedder implements Embedder {
  readonly width = OUTPUT_WIDTH;

  constructor(readonly id: string, private extractor: (text: string) => Promise<number[]>) {}

  async embed(text: string): Promise<number[]> {
    if (text.trim().length === 0) {
      return new Array(this.width).fill(0);
    }
    const vector = await this.extractor(text);
    if (vector.length !== this.width) {
      throw new WidthMismatchError(
        `${this.id} produced width ${vector.length}, pipeline requires ${this.width}`,
      );
    }
    return vector;
  }
}

export async function loadEmbedder(id: string): Promise<Embedder> {
  if (id === "hash-ctx-v1") {
    return new HashContextEmbedder();
  }
  if (id.startsWith("hf:")) {
    const model = id.slice(3);
    let pipelineFactory: any;
    try {
      const optionalModule = "@huggingface/transformers"; // optional, not a dependency
      const mod: any = await import(optionalModule);
      pipelineFactory = mod.pipeline;
    } catch (err) {
      throw new EmbedderLoadError(
        `embedder '${id}' needs the optional @huggingface/transformers package ` +
        `and local weights for '${model}': ${(err as Error).message}`,
      );
    }
    const extractor = await pipelineFactory("feature-extraction", model);
    return new TransformersEmbedder(id, async (text: string) => {
      const out = await extractor(text, { pooling: "mean", normalize: false });
      return Array.from(out.data as Iterable<number>);
    });
  }
  throw new EmbedderLoadError(`unknown embedder id '${id}'`);
}
