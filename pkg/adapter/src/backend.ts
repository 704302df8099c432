/**
 * Model backends.  The synthetic backend derives deterministic exports from
 * the input image and instruction so the exchange formats can be produced
 * and validated without model weights; the HTTP backend forwards the same
 * requests to an inference server hosting the real models.
 */

import { RasterImage } from "./png.js";
import { streamFor, textEmbedding } from "./rng.js";

export interface AttentionStack {
  step: number;
  block: string;
  tokens: number;
  height: number;
  width: number;
  data: Float32Array; // tokens x height x width, per-pixel token sums == 1
}

export interface AttentionResult {
  stacks: AttentionStack[];
  canvas: RasterImage;
}

export interface SegmentResult {
  masks: Uint8Array[]; // h*w, 0/1
  levels: number[];
  height: number;
  width: number;
}

export interface ModelBackend {
  name: string;
  attention(
    image: RasterImage,
    instruction: string,
    steps: number,
    blocks: string[],
  ): Promise<AttentionResult>;
  segments(image: RasterImage): Promise<SegmentResult>;
  embed(instructions: string[], dim: number): Promise<Float32Array[]>;
}

export function luma(image: RasterImage): Float64Array {
  const { width, height, channels, samples } = image;
  const out = new Float64Array(width * height);
  for (let p = 0; p < width * height; p++) {
    const base = p * channels;
    out[p] = 0.299 * samples[base] + 0.587 * samples[base + 1] + 0.114 * samples[base + 2];
  }
  return out;
}

function boxDownscale(
  plane: Float64Array,
  height: number,
  width: number,
  outH: number,
  outW: number,
): Float64Array {
  const out = new Float64Array(outH * outW);
  for (let i = 0; i < outH; i++) {
    const y0 = Math.floor((i * height) / outH);
    const y1 = Math.floor(((i + 1) * height) / outH) || y0 + 1;
    for (let j = 0; j < outW; j++) {
      const x0 = Math.floor((j * width) / outW);
      const x1 = Math.floor(((j + 1) * width) / outW) || x0 + 1;
      let acc = 0;
      let n = 0;
      for (let y = y0; y < Math.max(y1, y0 + 1); y++) {
        for (let x = x0; x < Math.max(x1, x0 + 1); x++) {
          acc += plane[y * width + x];
          n += 1;
        }
      }
      out[i * outW + j] = acc / n;
    }
  }
  return out;
}

function saliency(plane: Float64Array): Float64Array {
  let mean = 0;
  for (const v of plane) mean += v;
  mean /= plane.length;
  let variance = 0;
  for (const v of plane) variance += (v - mean) * (v - mean);
  const std = Math.sqrt(variance / plane.length) + 1e-6;
  const out = new Float64Array(plane.length);
  for (let i = 0; i < plane.length; i++) {
    out[i] = Math.abs(plane[i] - mean) / std;
  }
  return out;
}

function quantile(values: Float64Array, q: number): number {
  const sorted = Float64Array.from(values).sort();
  const idx = Math.min(sorted.length - 1, Math.max(0, Math.floor(q * (sorted.length - 1))));
  return sorted[idx];
}

export interface SyntheticOptions {
  downscale: number; // attention resolution divisor
  tokenCount: number;
  noise: number;
}

export const SYNTHETIC_DEFAULTS: SyntheticOptions = {
  downscale: 8,
  tokenCount: 8,
  noise: 0.25,
};

export class SyntheticBackend implements ModelBackend {
  name = "synthetic";

  constructor(private options: SyntheticOptions = SYNTHETIC_DEFAULTS) {}

  async attention(
    image: RasterImage,
    instruction: string,
    steps: number,
    blocks: string[],
  ): Promise<AttentionResult> {
    const { downscale, tokenCount, noise } = this.options;
    const attH = Math.max(1, Math.floor(image.height / downscale));
    const attW = Math.max(1, Math.floor(image.width / downscale));
    const coarse = boxDownscale(luma(image), image.height, image.width, attH, attW);
    const focus = saliency(coarse);
    const pixels = attH * attW;

    const stacks: AttentionStack[] = [];
    for (let step = 0; step < steps; step++) {
      for (const block of blocks) {
        const data = new Float32Array(tokenCount * pixels);
        const logits = new Float64Array(tokenCount);
        const draws = Array.from({ length: tokenCount }, (_, l) =>
          streamFor(instruction, "att", step, block, l),
        );
        for (let p = 0; p < pixels; p++) {
          let maxLogit = -Infinity;
          for (let l = 0; l < tokenCount; l++) {
            // every token concentrates on the salient region (edit-aware),
            // with brightness tapering off along the prompt
            const taper = 1.0 - (0.9 * l) / Math.max(1, tokenCount - 1);
            logits[l] = 1.5 * taper * focus[p] + noise * (2 * draws[l]() - 1);
            maxLogit = Math.max(maxLogit, logits[l]);
          }
          let denom = 0;
          for (let l = 0; l < tokenCount; l++) {
            logits[l] = Math.exp(logits[l] - maxLogit);
            denom += logits[l];
          }
          for (let l = 0; l < tokenCount; l++) {
            data[l * pixels + p] = logits[l] / denom;
          }
        }
        stacks.push({ step, block, tokens: tokenCount, height: attH, width: attW, data });
      }
    }
    return { stacks, canvas: this.tintCanvas(image, instruction) };
  }

  private tintCanvas(image: RasterImage, instruction: string): RasterImage {
    const plane = luma(image);
    const focus = saliency(plane);
    const cut = quantile(focus, 0.85);
    const draw = streamFor(instruction, "tint");
    const tint = [64 + 191 * draw(), 64 + 191 * draw(), 64 + 191 * draw()];
    const samples = new Uint8Array(image.samples);
    for (let p = 0; p < image.width * image.height; p++) {
      if (focus[p] >= cut) {
        const base = p * image.channels;
        for (let c = 0; c < 3; c++) {
          samples[base + c] = Math.round(0.4 * samples[base + c] + 0.6 * tint[c]);
        }
      }
    }
    return { ...image, samples };
  }

  async segments(image: RasterImage): Promise<SegmentResult> {
    const plane = luma(image);
    const { height, width } = image;
    const masks: Uint8Array[] = [];
    const levels: number[] = [];
    const minArea = Math.max(16, Math.floor(0.002 * width * height));

    // band the luma range at several granularities and split into
    // connected components: segments "from all levels" pooled together
    [2, 3, 5].forEach((bands, level) => {
      const thresholds = Array.from({ length: bands - 1 }, (_, i) =>
        quantile(plane, (i + 1) / bands),
      );
      const bandIndex = new Int32Array(width * height);
      for (let p = 0; p < plane.length; p++) {
        let b = 0;
        while (b < thresholds.length && plane[p] > thresholds[b]) b++;
        bandIndex[p] = b;
      }
      const seen = new Uint8Array(width * height);
      let kept = 0;
      for (let start = 0; start < plane.length && kept < 12; start++) {
        if (seen[start]) continue;
        const target = bandIndex[start];
        const component: number[] = [];
        const queue = [start];
        seen[start] = 1;
        while (queue.length) {
          const p = queue.pop()!;
          component.push(p);
          const y = Math.floor(p / width);
          const x = p % width;
          for (const [dy, dx] of [[1, 0], [-1, 0], [0, 1], [0, -1]] as const) {
            const ny = y + dy;
            const nx = x + dx;
            if (ny < 0 || ny >= height || nx < 0 || nx >= width) continue;
            const np = ny * width + nx;
            if (!seen[np] && bandIndex[np] === target) {
              seen[np] = 1;
              queue.push(np);
            }
          }
        }
        if (component.length >= minArea) {
          const mask = new Uint8Array(width * height);
          for (const p of component) mask[p] = 1;
          masks.push(mask);
          levels.push(level);
          kept += 1;
        }
      }
    });
    if (masks.length === 0) {
      masks.push(new Uint8Array(width * height).fill(1));
      levels.push(0);
    }
    return { masks, levels, height, width };
  }

  async embed(instructions: string[], dim: number): Promise<Float32Array[]> {
    return instructions.map((text) => textEmbedding(text.trim(), dim));
  }
}

/** Forwards export requests to an inference server hosting the real models. */
export class HttpBackend implements ModelBackend {
  name = "http";

  constructor(private baseUrl: string) {}

  private async post<T>(route: string, body: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${route}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new Error(`backend ${route} failed: ${response.status} ${response.statusText}`);
    }
    return (await response.json()) as T;
  }

  async attention(
    image: RasterImage,
    instruction: string,
    steps: number,
    blocks: string[],
  ): Promise<AttentionResult> {
    type Wire = {
      stacks: { step: number; block: string; tokens: number; height: number; width: number; data: number[] }[];
      canvas: { width: number; height: number; channels: 3 | 4; samples: number[] };
    };
    const wire = await this.post<Wire>("/attention", {
      image: { width: image.width, height: image.height, channels: image.channels, samples: Array.from(image.samples) },
      instruction,
      steps,
      blocks,
    });
    return {
      stacks: wire.stacks.map((s) => ({ ...s, data: Float32Array.from(s.data) })),
      canvas: { ...wire.canvas, samples: Uint8Array.from(wire.canvas.samples) },
    };
  }

  async segments(image: RasterImage): Promise<SegmentResult> {
    type Wire = { masks: number[][]; levels: number[]; height: number; width: number };
    const wire = await this.post<Wire>("/segments", {
      image: { width: image.width, height: image.height, channels: image.channels, samples: Array.from(image.samples) },
    });
    return { ...wire, masks: wire.masks.map((m) => Uint8Array.from(m)) };
  }

  async embed(instructions: string[], dim: number): Promise<Float32Array[]> {
    type Wire = { embeddings: number[][] };
    const wire = await this.post<Wire>("/embed", { instructions, dim });
    return wire.embeddings.map((row) => Float32Array.from(row));
  }
}
