/**
 * The export job: embed every participant's transcripts and write one
 * matrix file per participant in the pipeline's binary format, verifying
 * each file by decoding it again before reporting success.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { scanCorpus } from "./corpus.js";
import { Embedder, OUTPUT_WIDTH, loadEmbedder } from "./embedder.js";
import { decodeMatrix, encodeMatrix } from "./mmx.js";

export interface ExportJob {
  corpusRoot: string;
  modelId: string;
  outSuffix: string; // file name inside each participant directory
}

export interface ExportReport {
  ok: boolean;
  errors: string[];
  warnings: string[];
  files: string[];
}

export async function runExport(job: ExportJob): Promise<ExportReport> {
  const { participants, errors } = scanCorpus(job.corpusRoot);
  if (errors.length > 0) {
    return { ok: false, errors, warnings: [], files: [] }; // write nothing
  }
  const embedder: Embedder = await loadEmbedder(job.modelId);
  const warnings: string[] = [];
  const files: string[] = [];
  for (const p of participants) {
    const rows: number[][] = [];
    for (let i = 0; i < p.transcripts.length; i++) {
      const text = p.transcripts[i];
      if (text.length === 0) {
        warnings.push(`${p.id}: response ${i + 1} transcript empty, zero row emitted`);
        rows.push(new Array(OUTPUT_WIDTH).fill(0));
        continue;
      }
      rows.push(await embedder.embed(text));
    }
    const blob = encodeMatrix(rows);
    const outPath = path.join(p.dir, job.outSuffix);
    fs.writeFileSync(outPath, blob);

    const verify = decodeMatrix(fs.readFileSync(outPath));
    if (verify.rows !== rows.length || verify.cols !== OUTPUT_WIDTH) {
      throw new Error(`${outPath}: verification read back ${verify.rows}x${verify.cols}`);
    }
    files.push(outPath);
  }
  return { ok: true, errors: [], warnings, files };
}
