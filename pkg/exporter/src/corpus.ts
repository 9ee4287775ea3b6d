/**
 * Corpus layout checks, mirroring the pipeline's on-disk contract:
 * <root>/<participant>/response_k.{wav,txt} (k = 1..n) plus meta.json.
 * The exporter refuses to write anything when the layout is invalid.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export interface ParticipantDir {
  id: string;
  dir: string;
  transcripts: string[]; // response order 1..n
}

export interface LayoutReport {
  participants: ParticipantDir[];
  errors: string[];
}

export function scanCorpus(root: string): LayoutReport {
  const errors: string[] = [];
  const participants: ParticipantDir[] = [];
  if (!fs.existsSync(root) || !fs.statSync(root).isDirectory()) {
    return { participants, errors: [`${root}: not a directory`] };
  }
  const dirs = fs
    .readdirSync(root, { withFileTypes: true })
    .filter((e) => e.isDirectory())
    .map((e) => e.name)
    .sort();
  if (dirs.length === 0) {
    errors.push(`${root}: no participant directories`);
  }
  for (const id of dirs) {
    const dir = path.join(root, id);
    const meta = path.join(dir, "meta.json");
    if (!fs.existsSync(meta)) {
      errors.push(`${id}: missing meta.json`);
      continue;
    }
    try {
      const doc = JSON.parse(fs.readFileSync(meta, "utf-8"));
      if (doc.questionnaire !== "sds" && doc.questionnaire !== "phq8") {
        errors.push(`${id}: meta.json questionnaire must be 'sds' or 'phq8'`);
        continue;
      }
      if (!Number.isInteger(doc.raw_score)) {
        errors.push(`${id}: meta.json raw_score must be an integer`);
        continue;
      }
    } catch (err) {
      errors.push(`${id}: malformed meta.json: ${(err as Error).message}`);
      continue;
    }

    const indices = fs
      .readdirSync(dir)
      .map((name) => /^response_(\d+)\.wav$/.exec(name))
      .filter((m): m is RegExpExecArray => m !== null)
      .map((m) => parseInt(m[1], 10))
      .sort((a, b) => a - b);
    if (indices.length === 0) {
      errors.push(`${id}: no response_k.wav files`);
      continue;
    }
    const contiguous = indices.every((k, i) => k === i + 1);
    if (!contiguous) {
      errors.push(`${id}: response indices not contiguous from 1: ${indices}`);
      continue;
    }
    const transcripts: string[] = [];
    let ok = true;
    for (const k of indices) {
      const txt = path.join(dir, `response_${k}.txt`);
      if (!fs.existsSync(txt)) {
        errors.push(`${id}: missing response_${k}.txt`);
        ok = false;
        break;
      }
      transcripts.push(fs.readFileSync(txt, "utf-8").trim());
    }
    if (ok) {
      participants.push({ id, dir, transcripts });
    }
  }
  return { participants, errors };
}
