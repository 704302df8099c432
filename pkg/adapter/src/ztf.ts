/**
 * ZTF tensor files: magic "ZTF1" | rank u8 (2|3) | dims u32 LE | f32 LE payload.
 * The payload is row-major, layer-major for rank 3.
 */

import { readFileSync, writeFileSync } from "node:fs";

const MAGIC = Buffer.from("ZTF1", "ascii");

export interface Tensor {
  dims: number[]; // [h, w] or [layers, h, w]
  data: Float32Array; // length = product(dims)
}

export function tensorBytes(tensor: Tensor): Buffer {
  const rank = tensor.dims.length;
  if (rank !== 2 && rank !== 3) {
    throw new Error(`rank must be 2 or 3, got ${rank}`);
  }
  const count = tensor.dims.reduce((a, b) => a * b, 1);
  if (count !== tensor.data.length) {
    throw new Error(`payload length ${tensor.data.length} does not match dims ${tensor.dims}`);
  }
  const header = Buffer.alloc(5 + 4 * rank);
  MAGIC.copy(header, 0);
  header.writeUInt8(rank, 4);
  tensor.dims.forEach((d, i) => header.writeUInt32LE(d, 5 + 4 * i));
  const payload = Buffer.alloc(4 * count);
  for (let i = 0; i < count; i++) {
    payload.writeFloatLE(tensor.data[i], 4 * i);
  }
  return Buffer.concat([header, payload]);
}

export function writeTensor(path: string, tensor: Tensor): void {
  writeFileSync(path, tensorBytes(tensor));
}

export function parseTensor(blob: Buffer, label = "buffer"): Tensor {
  if (blob.length < 5 || !blob.subarray(0, 4).equals(MAGIC)) {
    throw new Error(`bad magic in ${label}`);
  }
  const rank = blob.readUInt8(4);
  if (rank !== 2 && rank !== 3) {
    throw new Error(`unsupported rank ${rank} in ${label}`);
  }
  const headerEnd = 5 + 4 * rank;
  if (blob.length < headerEnd) {
    throw new Error(`truncated header in ${label}`);
  }
  const dims: number[] = [];
  for (let i = 0; i < rank; i++) {
    dims.push(blob.readUInt32LE(5 + 4 * i));
  }
  const count = dims.reduce((a, b) => a * b, 1);
  const expected = headerEnd + 4 * count;
  if (blob.length < expected) {
    throw new Error(`truncated payload in ${label}`);
  }
  if (blob.length > expected) {
    throw new Error(`trailing data in ${label}`);
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    const value = blob.readFloatLE(headerEnd + 4 * i);
    if (!Number.isFinite(value)) {
      throw new Error(`non-finite value in ${label}`);
    }
    data[i] = value;
  }
  return { dims, data };
}

export function readTensor(path: string): Tensor {
  return parseTensor(readFileSync(path), path);
}
