import { execFileSync } from "node:child_process";
import { existsSync, mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

// exercises the built binary; `npm test` runs tsc first
const CLI = join(__dirname, "..", "dist", "cli.js");

function run(args: string[]): { code: number; stderr: string } {
  try {
    execFileSync("node", [CLI, ...args], { encoding: "utf-8", stdio: "pipe" });
    return { code: 0, stderr: "" };
  } catch (error: any) {
    return { code: error.status ?? 1, stderr: String(error.stderr ?? "") };
  }
}

describe("cli binary", () => {
  it("exports attention end to end", () => {
    const dir = mkdtempSync(join(tmpdir(), "cli-"));
    const image = join(dir, "input.png");
    execFileSync("python3", [
      "-c",
      `
from zone.fixtures import synth_original
from zone.grids import write_image
write_image(synth_original(2, 64, 64), ${JSON.stringify(image)})
`,
    ]);
    const out = join(dir, "att");
    const result = run([
      "export-attention",
      "--image",
      image,
      "--instruction",
      "swap the mug for a bowl",
      "--out",
      out,
      "--steps",
      "2",
      "--blocks",
      "up1,up2",
    ]);
    expect(result.code).toBe(0);
    expect(existsSync(join(out, "attention", "attention.json"))).toBe(true);
    expect(existsSync(join(out, "canvas.png"))).toBe(true);
  });

  it("fails with usage error on missing options", () => {
    const result = run(["export-attention"]);
    expect(result.code).toBe(2);
  });

  it("fails with exit 1 on a missing image", () => {
    const result = run([
      "export-segments",
      "--image",
      "/nonexistent.png",
      "--out",
      "/tmp/never",
    ]);
    expect(result.code).not.toBe(0);
  });
});
