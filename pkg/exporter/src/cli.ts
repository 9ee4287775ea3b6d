#!/usr/bin/env node
/**
 * Usage: moodpipe-export --corpus PATH [--model ID] [--out-suffix text.mmx]
 *
 * Embeds every response transcript under the corpus and writes one
 * <participant>/<out-suffix> matrix file per participant.  Exits 1 when the
 * corpus layout is invalid (nothing written), 2 when the embedder cannot load.
 */

import { parseArgs } from "node:util";

import { EmbedderLoadError, WidthMismatchError } from "./embedder.js";
import { runExport } from "./export.js";

async function main(): Promise<number> {
  const { values } = parseArgs({
    options: {
      corpus: { type: "string" },
      model: { type: "string", default: "hash-ctx-v1" },
      "out-suffix": { type: "string", default: "text.mmx" },
      help: { type: "boolean", default: false },
    },
  });
  if (values.help || !values.corpus) {
    console.log(
      "usage: moodpipe-export --corpus PATH [--model ID] [--out-suffix text.mmx]",
    );
    return values.help ? 0 : 1;
  }
  try {
    const report = await runExport({
      corpusRoot: values.corpus,
      modelId: values.model as string,
      outSuffix: values["out-suffix"] as string,
    });
    for (const w of report.warnings) {
      console.warn(`warning: ${w}`);
    }
    if (!report.ok) {
      for (const e of report.errors) {
        console.error(`invalid corpus: ${e}`);
      }
      console.error("nothing written");
      return 1;
    }
    console.log(`wrote ${report.files.length} embedding file(s)`);
    return 0;
  } catch (err) {
    if (err instanceof EmbedderLoadError || err instanceof WidthMismatchError) {
      console.error(err.message);
      return 2;
    }
    throw err;
  }
}

main().then((code) => {
  process.exitCode = code;
});
