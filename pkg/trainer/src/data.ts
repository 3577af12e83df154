/**
 * Readers for the corpus interchange files: raw "C2I1" tensor batches,
 * the batch directory index, and the NDJSON sample manifest.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

export interface RawBatch {
  /** row-major RGB bytes, n * height * width * 3 */
  pixels: Uint8Array;
  n: number;
  height: number;
  width: number;
}

export interface BatchIndexEntry {
  file: string;
  ids: string[];
  dims: [number, number][];
}

export interface ManifestSample {
  id: string;
  split: 'train' | 'validation' | 'test';
  labels: boolean[];
}

const MAGIC = 'C2I1';

export function readTensorFile(filePath: string): RawBatch {
  const data = fs.readFileSync(filePath);
  return parseTensor(data, filePath);
}

export function parseTensor(data: Buffer, name = '<buffer>'): RawBatch {
  if (data.length < 16 || data.toString('latin1', 0, 4) !== MAGIC) {
    throw new Error(`${name}: bad magic; not a C2I1 tensor file`);
  }
  const n = data.readUInt32LE(4);
  const height = data.readUInt32LE(8);
  const width = data.readUInt32LE(12);
  const expected = 16 + n * height * width * 3;
  if (data.length !== expected) {
    throw new Error(`${name}: expected ${expected} bytes, got ${data.length}`);
  }
  return { pixels: new Uint8Array(data.buffer, data.byteOffset + 16,
                                  n * height * width * 3), n, height, width };
}

export function readBatchIndex(dir: string): BatchIndexEntry[] {
  const raw = fs.readFileSync(path.join(dir, 'index.json'), 'utf-8');
  return JSON.parse(raw) as BatchIndexEntry[];
}

export function readManifest(filePath: string): ManifestSample[] {
  const out: ManifestSample[] = [];
  const lines = fs.readFileSync(filePath, 'utf-8').split('\n');
  for (const line of lines) {
    if (!line.trim()) continue;
    const rec = JSON.parse(line);
    if (!('id' in rec)) continue; // optional codebook header record
    out.push({ id: rec.id, split: rec.split, labels: rec.labels });
  }
  return out;
}

/**
 * Original (unpadded) extent of one batch member: everything past the
 * last non-white row/column is padding by construction.
 */
export function validDims(batch: RawBatch, member: number):
    { h: number; w: number } {
  const { pixels, height, width } = batch;
  const base = member * height * width * 3;
  let h = 0;
  let w = 0;
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const o = base + (y * width + x) * 3;
      if (pixels[o] !== 255 || pixels[o + 1] !== 255 || pixels[o + 2] !== 255) {
        if (y + 1 > h) h = y + 1;
        if (x + 1 > w) w = x + 1;
      }
    }
  }
  return { h, w };
}

/**
 * Normalize one batch member to float32 [height, width, 3] with white
 * mapped to 0 and saturated color to 1, so padding is exactly zero.
 */
export function normalizeMember(batch: RawBatch, member: number): Float32Array {
  const { pixels, height, width } = batch;
  const base = member * height * width * 3;
  const size = height * width * 3;
  const out = new Float32Array(size);
  for (let i = 0; i < size; i++) {
    out[i] = 1 - pixels[base + i] / 255;
  }
  return out;
}
