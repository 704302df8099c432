#!/usr/bin/env node
/**
 * zone-adapter: export model-side tensors in the zone exchange formats.
 *
 * The synthetic backend needs no model weights; point --backend-url at an
 * inference server to export from real models instead.
 */

import { readFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { HttpBackend, ModelBackend, SyntheticBackend, SYNTHETIC_DEFAULTS } from "./backend.js";
import { DEFAULT_BLOCKS, exportAttention, exportEmbeddings, exportSegments } from "./exports.js";
import { VerifyMode } from "./verify.js";

interface CommonArgs {
  backendUrl?: string;
  verify: VerifyMode;
  python: string;
}

function pickBackend(args: CommonArgs): ModelBackend {
  return args.backendUrl ? new HttpBackend(args.backendUrl) : new SyntheticBackend();
}

function readLines(path: string): string[] {
  return readFileSync(path, "utf-8")
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
}

await yargs(hideBin(process.argv))
  .scriptName("zone-adapter")
  .option("backend-url", { type: "string", describe: "inference server base URL" })
  .option("verify", {
    choices: ["python", "self", "none"] as const,
    default: "python" as VerifyMode,
    describe: "re-import check: primary package readers, own readers, or skip",
  })
  .option("python", { type: "string", default: "python3" })
  .command(
    "export-attention",
    "export per-step attention stacks and the edited canvas",
    (y) =>
      y
        .option("image", { type: "string", demandOption: true })
        .option("instruction", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true })
        .option("steps", { type: "number", default: 20 })
        .option("blocks", { type: "string", default: DEFAULT_BLOCKS.join(",") })
        .option("image-scale", { type: "number", default: 1.5 })
        .option("text-scale", { type: "number", default: 7.5 }),
    async (args) => {
      const manifest = await exportAttention(
        pickBackend(args as CommonArgs),
        args.image,
        args.instruction,
        args.out,
        {
          steps: args.steps,
          blocks: args.blocks.split(",").map((b: string) => b.trim()),
          imageScale: args["image-scale"],
          textScale: args["text-scale"],
          verify: args.verify as VerifyMode,
          python: args.python,
        },
      );
      console.error(
        `exported ${manifest.step_count}x${manifest.block_ids.length} stacks to ${args.out}`,
      );
    },
  )
  .command(
    "export-segments",
    "export pooled instance-segment candidates",
    (y) =>
      y
        .option("image", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true }),
    async (args) => {
      const manifest = await exportSegments(pickBackend(args as CommonArgs), args.image, args.out, {
        verify: args.verify as VerifyMode,
        python: args.python,
      });
      const count = (manifest.outputs.segments as string[]).length;
      console.error(`exported ${count} segment(s) to ${args.out}`);
    },
  )
  .command(
    "export-embeddings",
    "export instruction embeddings plus a label sidecar",
    (y) =>
      y
        .option("instructions", { type: "string", demandOption: true, describe: "one per line" })
        .option("labels", { type: "string", demandOption: true, describe: "one 0/1/2 per line" })
        .option("out-embeddings", { type: "string", demandOption: true })
        .option("out-labels", { type: "string", demandOption: true }),
    async (args) => {
      const instructions = readLines(args.instructions);
      const labels = readLines(args.labels).map((l) => Number.parseInt(l, 10));
      await exportEmbeddings(
        pickBackend(args as CommonArgs),
        instructions,
        labels,
        args["out-embeddings"],
        args["out-labels"],
        { verify: args.verify as VerifyMode, python: args.python },
      );
      console.error(`exported ${instructions.length} embedding(s)`);
    },
  )
  .demandCommand(1)
  .strict()
  .fail((msg, err) => {
    console.error(`error: ${msg ?? err?.message}`);
    process.exit(err && !msg ? 1 : 2);
  })
  .parseAsync();
