/**
 * Post-export validation: every artifact must re-import through the primary
 * package's readers before an export command reports success.
 */

import { execFileSync } from "node:child_process";

export type VerifyMode = "python" | "self" | "none";

const SCRIPT = `
import json, sys
import zone

spec = json.loads(sys.stdin.read())
for path in spec.get("tensors", []):
    zone.read_tensor(path)
for path in spec.get("images", []):
    zone.read_image(path)
for path in spec.get("masks", []):
    zone.read_mask(path)
for path in spec.get("attention_manifests", []):
    zone.load_attention_manifest(path)
for path in spec.get("segment_dirs", []):
    zone.load_segment_set(path)
print("ok")
`;

export interface VerifySpec {
  tensors?: string[];
  images?: string[];
  masks?: string[];
  attention_manifests?: string[];
  segment_dirs?: string[];
}

export function verifyWithPrimary(spec: VerifySpec, python = "python3"): void {
  const out = execFileSync(python, ["-c", SCRIPT], {
    input: JSON.stringify(spec),
    encoding: "utf-8",
  });
  if (!out.includes("ok")) {
    throw new Error(`primary-reader verification failed: ${out}`);
  }
}
