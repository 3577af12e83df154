/**
 * Training loop: Adam on softmax cross-entropy over pre-padded tensor
 * batches, one independent binary model per label category. The
 * checkpoint is rewritten only when the validation loss is strictly
 * lower than the best seen so far.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';
import * as tf from '@tensorflow/tfjs';
import { readBatchIndex, readTensorFile, readManifest, validDims,
         normalizeMember, RawBatch } from './data.js';
import { CnnModel, DEFAULT_CONFIG, Dims, ModelConfig,
         isDegenerate } from './model.js';
import { initBackend } from './backend.js';
import { Rng } from './rng.js';

export interface LoadedBatch {
  x: tf.Tensor4D;
  dims: Dims[];
  ids: string[];
  labels: number[]; // 0/1, parallel to ids; empty when no manifest given
}

export interface TrainOptions {
  trainDir: string;
  valDir: string;
  manifestPath: string;
  category: number;
  epochs: number;
  learningRate: number;
  seed: number;
  checkpointPath: string;
  logPath?: string;
  config?: ModelConfig;
  warn?: (msg: string) => void;
}

export interface EpochRecord {
  epoch: number;
  trainLoss: number;
  valLoss: number;
  saved: boolean;
}

export interface TrainLog {
  category: number;
  seed: number;
  epochs: EpochRecord[];
  bestValLoss: number;
  bestEpoch: number;
}

export function loadBatches(dir: string, labelOf?: Map<string, number>,
                            warn: (m: string) => void = console.warn):
    LoadedBatch[] {
  const out: LoadedBatch[] = [];
  for (const entry of readBatchIndex(dir)) {
    const raw = readTensorFile(path.join(dir, entry.file));
    const loaded = toLoadedBatch(raw, entry.ids, labelOf, warn);
    if (loaded) out.push(loaded);
  }
  if (out.length === 0) throw new Error(`${dir}: no usable batches`);
  return out;
}

export function toLoadedBatch(raw: RawBatch, ids: string[],
                              labelOf?: Map<string, number>,
                              warn: (m: string) => void = console.warn):
    LoadedBatch | null {
  const keep: number[] = [];
  const dims: Dims[] = [];
  for (let i = 0; i < raw.n; i++) {
    const d = validDims(raw, i);
    if (labelOf !== undefined && isDegenerate(d)) {
      warn(`sample ${ids[i] ?? i}: ${d.h}x${d.w} image too small to pool; skipped`);
      continue;
    }
    keep.push(i);
    dims.push(d);
  }
  if (keep.length === 0) {
    warn('degenerate batch: every member too small; skipped');
    return null;
  }
  const { height, width } = raw;
  const data = new Float32Array(keep.length * height * width * 3);
  keep.forEach((member, j) => {
    data.set(normalizeMember(raw, member), j * height * width * 3);
  });
  const x = tf.tensor4d(data, [keep.length, height, width, 3]);
  const keptIds = keep.map((i) => ids[i] ?? String(i));
  let labels: number[] = [];
  if (labelOf !== undefined) {
    labels = keptIds.map((id) => {
      const l = labelOf.get(id);
      if (l === undefined) throw new Error(`sample ${id} not in manifest`);
      return l;
    });
  }
  return { x, dims, ids: keptIds, labels };
}

export function labelMap(manifestPath: string, category: number):
    Map<string, number> {
  const map = new Map<string, number>();
  for (const s of readManifest(manifestPath)) {
    if (category < 0 || category >= s.labels.length) {
      throw new Error(`category index ${category} out of range`);
    }
    map.set(s.id, s.labels[category] ? 1 : 0);
  }
  return map;
}

function meanLoss(model: CnnModel, batches: LoadedBatch[]): number {
  let total = 0;
  let count = 0;
  for (const b of batches) {
    const loss = tf.tidy(() => {
      const logits = model.logits(b.x, b.dims, false);
      const onehot = tf.oneHot(tf.tensor1d(b.labels, 'int32'), 2);
      return tf.losses.softmaxCrossEntropy(onehot, logits).dataSync()[0];
    });
    total += loss * b.ids.length;
    count += b.ids.length;
  }
  return total / count;
}

export async function train(opts: TrainOptions): Promise<TrainLog> {
  await initBackend();
  const warn = opts.warn ?? console.warn;
  const labels = labelMap(opts.manifestPath, opts.category);
  const trainBatches = loadBatches(opts.trainDir, labels, warn);
  const valBatches = loadBatches(opts.valDir, labels, warn);

  const model = new CnnModel(opts.config ?? DEFAULT_CONFIG, opts.seed);
  const optimizer = tf.train.adam(opts.learningRate);
  const rng = new Rng(opts.seed ^ 0x5eed);

  const log: TrainLog = { category: opts.category, seed: opts.seed,
                          epochs: [], bestValLoss: Infinity, bestEpoch: -1 };
  for (let epoch = 0; epoch < opts.epochs; epoch++) {
    let running = 0;
    let seen = 0;
    for (const b of rng.shuffle(trainBatches)) {
      const lossT = optimizer.minimize(() => {
        const logits = model.logits(b.x, b.dims, true);
        const onehot = tf.oneHot(tf.tensor1d(b.labels, 'int32'), 2);
        return tf.losses.softmaxCrossEntropy(onehot, logits) as tf.Scalar;
      }, true)!;
      running += lossT.dataSync()[0] * b.ids.length;
      seen += b.ids.length;
      lossT.dispose();
    }
    const valLoss = meanLoss(model, valBatches);
    const saved = valLoss < log.bestValLoss;
    if (saved) {
      log.bestValLoss = valLoss;
      log.bestEpoch = epoch;
      model.save(opts.checkpointPath,
                 { bestValLoss: valLoss, epoch, seed: opts.seed });
    }
    log.epochs.push({ epoch, trainLoss: running / seen, valLoss, saved });
  }

  if (opts.logPath) {
    fs.writeFileSync(opts.logPath, JSON.stringify(log, null, 2));
  }
  for (const b of [...trainBatches, ...valBatches]) b.x.dispose();
  return log;
}
