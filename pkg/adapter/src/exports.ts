/**
 * Export commands: write attention stacks, canvases, segment candidates,
 * and text embeddings in the exchange formats the pipeline consumes.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { ModelBackend } from "./backend.js";
import { decodeImage, encodeImage, encodeMask, RasterImage } from "./png.js";
import { writeTensor, readTensor } from "./ztf.js";
import { verifyWithPrimary, VerifyMode } from "./verify.js";

export const DEFAULT_BLOCKS = ["up1", "up2", "up3", "down2", "down3", "down4"];
export const EMBED_DIM = 768;

export interface ExportManifest {
  model: string;
  guidance: { image_scale: number; text_scale: number };
  step_count: number;
  block_ids: string[];
  outputs: Record<string, string | string[]>;
}

export function loadImage(path: string): RasterImage {
  return decodeImage(readFileSync(path), path);
}

function selfCheckTensor(path: string): void {
  readTensor(path); // throws on malformed output
}

export interface AttentionExportOptions {
  steps: number;
  blocks: string[];
  imageScale: number;
  textScale: number;
  verify: VerifyMode;
  python: string;
}

export async function exportAttention(
  backend: ModelBackend,
  imagePath: string,
  instruction: string,
  outDir: string,
  options: AttentionExportOptions,
): Promise<ExportManifest> {
  const image = loadImage(imagePath);
  const result = await backend.attention(image, instruction, options.steps, options.blocks);
  if (result.stacks.length !== options.steps * options.blocks.length) {
    throw new Error(
      `backend returned ${result.stacks.length} stacks, expected ` +
        `${options.steps}x${options.blocks.length}`,
    );
  }

  mkdirSync(join(outDir, "attention"), { recursive: true });
  const stackEntries: { step: number; block: string; path: string }[] = [];
  const tensorPaths: string[] = [];
  for (const stack of result.stacks) {
    const name = `step${String(stack.step).padStart(2, "0")}_${stack.block}.ztf`;
    const path = join(outDir, "attention", name);
    writeTensor(path, {
      dims: [stack.tokens, stack.height, stack.width],
      data: stack.data,
    });
    selfCheckTensor(path);
    stackEntries.push({ step: stack.step, block: stack.block, path: name });
    tensorPaths.push(path);
  }
  const attentionManifest = {
    step_count: options.steps,
    block_ids: options.blocks,
    stacks: stackEntries,
  };
  const attentionManifestPath = join(outDir, "attention", "attention.json");
  writeFileSync(attentionManifestPath, JSON.stringify(attentionManifest, null, 2) + "\n");

  const canvasPath = join(outDir, "canvas.png");
  writeFileSync(canvasPath, encodeImage(result.canvas));

  const manifest: ExportManifest = {
    model: backend.name,
    guidance: { image_scale: options.imageScale, text_scale: options.textScale },
    step_count: options.steps,
    block_ids: options.blocks,
    outputs: {
      attention_manifest: "attention/attention.json",
      canvas: "canvas.png",
      stacks: stackEntries.map((s) => `attention/${s.path}`),
    },
  };
  writeFileSync(join(outDir, "export_manifest.json"), JSON.stringify(manifest, null, 2) + "\n");

  if (options.verify === "python") {
    verifyWithPrimary(
      {
        tensors: tensorPaths,
        images: [canvasPath],
        attention_manifests: [attentionManifestPath],
      },
      options.python,
    );
  }
  return manifest;
}

export interface SegmentExportOptions {
  verify: VerifyMode;
  python: string;
}

export async function exportSegments(
  backend: ModelBackend,
  imagePath: string,
  outDir: string,
  options: SegmentExportOptions,
): Promise<ExportManifest> {
  const image = loadImage(imagePath);
  const result = await backend.segments(image);
  if (result.masks.length < 1) {
    throw new Error("backend returned no segments");
  }
  mkdirSync(outDir, { recursive: true });
  const entries: { path: string; level: number | null }[] = [];
  const maskPaths: string[] = [];
  result.masks.forEach((mask, index) => {
    const name = `segment_${String(index).padStart(3, "0")}.png`;
    const path = join(outDir, name);
    writeFileSync(path, encodeMask(mask, result.height, result.width));
    entries.push({ path: name, level: result.levels[index] ?? null });
    maskPaths.push(path);
  });
  writeFileSync(
    join(outDir, "segments.json"),
    JSON.stringify({ segments: entries }, null, 2) + "\n",
  );

  const manifest: ExportManifest = {
    model: backend.name,
    guidance: { image_scale: 0, text_scale: 0 },
    step_count: 0,
    block_ids: [],
    outputs: { segments: entries.map((e) => e.path), manifest: "segments.json" },
  };
  writeFileSync(join(outDir, "export_manifest.json"), JSON.stringify(manifest, null, 2) + "\n");

  if (options.verify === "python") {
    verifyWithPrimary({ masks: maskPaths, segment_dirs: [outDir] }, options.python);
  }
  return manifest;
}

export interface EmbeddingExportOptions {
  verify: VerifyMode;
  python: string;
}

export async function exportEmbeddings(
  backend: ModelBackend,
  instructions: string[],
  labels: number[],
  embeddingsPath: string,
  labelsPath: string,
  options: EmbeddingExportOptions,
): Promise<void> {
  if (instructions.length === 0) {
    throw new Error("no instructions to embed");
  }
  if (labels.length !== instructions.length) {
    throw new Error(`${labels.length} labels for ${instructions.length} instructions`);
  }
  for (const label of labels) {
    if (![0, 1, 2].includes(label)) {
      throw new Error(`label must be 0, 1, or 2, got ${label}`);
    }
  }
  const rows = await backend.embed(instructions, EMBED_DIM);
  const data = new Float32Array(rows.length * EMBED_DIM);
  rows.forEach((row, i) => {
    if (row.length !== EMBED_DIM) {
      throw new Error(`embedding width ${row.length}, expected ${EMBED_DIM}`);
    }
    data.set(row, i * EMBED_DIM);
  });
  writeTensor(embeddingsPath, { dims: [rows.length, EMBED_DIM], data });
  selfCheckTensor(embeddingsPath);
  writeFileSync(labelsPath, labels.map((l) => `${l}`).join("\n") + "\n");

  if (options.verify === "python") {
    verifyWithPrimary({ tensors: [embeddingsPath] }, options.python);
  }
}
