import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { decodeImage, encodeImage, encodeMask } from "../src/png.js";

function scratch(): string {
  return mkdtempSync(join(tmpdir(), "png-"));
}

function python(script: string): string {
  return execFileSync("python3", ["-c", script], { encoding: "utf-8" });
}

describe("png codec", () => {
  it("round-trips RGB through its own encoder/decoder", () => {
    const samples = Uint8Array.from({ length: 5 * 4 * 3 }, (_, i) => (i * 37) % 256);
    const blob = encodeImage({ width: 4, height: 5, channels: 3, samples });
    const back = decodeImage(blob);
    expect(back.width).toBe(4);
    expect(back.height).toBe(5);
    expect(back.samples).toEqual(samples);
  });

  it("decodes filtered PNGs written by the primary package", () => {
    const dir = scratch();
    python(
      `
import numpy as np, zone
rng = np.random.default_rng(5)
arr = rng.integers(0, 256, size=(33, 17, 3), dtype=np.uint8)
zone.write_image(zone.Image(arr), ${JSON.stringify(join(dir, "img.png"))})
np.save(${JSON.stringify(join(dir, "raw.npy"))}, arr)
`,
    );
    const image = decodeImage(readFileSync(join(dir, "img.png")));
    expect([image.height, image.width, image.channels]).toEqual([33, 17, 3]);
    // compare against the raw samples (npy payload is the trailing h*w*3 bytes)
    const npy = readFileSync(join(dir, "raw.npy"));
    const raw = npy.subarray(npy.length - 33 * 17 * 3);
    expect(Buffer.from(image.samples).equals(raw)).toBe(true);
  });

  it("decodes RGBA with hard alpha", () => {
    const dir = scratch();
    python(
      `
import numpy as np, zone
arr = np.zeros((6, 6, 4), dtype=np.uint8)
arr[:, :, 0] = 200
arr[:3, :, 3] = 255
zone.write_image(zone.Image(arr), ${JSON.stringify(join(dir, "rgba.png"))})
`,
    );
    const image = decodeImage(readFileSync(join(dir, "rgba.png")));
    expect(image.channels).toBe(4);
    expect(image.samples[3]).toBe(255); // alpha of first pixel
    expect(image.samples[5 * 6 * 4 + 3]).toBe(0); // alpha in the lower half
  });

  it("writes 1-bit masks the primary reads back exactly", () => {
    const dir = scratch();
    const width = 13;
    const height = 9;
    const bits = Uint8Array.from({ length: width * height }, (_, i) => (i % 3 === 0 ? 1 : 0));
    writeFileSync(join(dir, "mask.png"), encodeMask(bits, height, width));
    const out = python(
      `
import numpy as np, zone
mask = zone.read_mask(${JSON.stringify(join(dir, "mask.png"))})
flat = mask.bits.astype(np.uint8).ravel()
print(mask.height, mask.width, "".join(map(str, flat)))
`,
    );
    const [h, w, payload] = out.trim().split(" ");
    expect([Number(h), Number(w)]).toEqual([height, width]);
    expect(payload).toBe(Array.from(bits).join(""));
  });

  it("rejects 16-bit input", () => {
    const dir = scratch();
    python(
      `
from PIL import Image
import numpy as np
Image.fromarray((np.ones((4, 4), dtype=np.uint16) * 999)).save(${JSON.stringify(join(dir, "deep.png"))})
`,
    );
    expect(() => decodeImage(readFileSync(join(dir, "deep.png")))).toThrow(/unsupported/);
  });
});
