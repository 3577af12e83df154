/**
 * Variable-input-size CNN for 2-class prediction on white-padded RGB
 * image batches.
 *
 * Architecture: two blocks of [3x3 conv (32 filters) -> ReLU -> dropout
 * -> batch norm -> 2x2 max pool], then a masked global average pool, a
 * dense layer of 32 units, and a 2-unit softmax head.
 *
 * Inputs are normalized so white (the padding color) is exactly zero.
 * With 'same' zero-padded convolutions, features inside a sample's
 * original extent are then identical whether or not extra white
 * rows/columns were appended. The global pool averages only over each
 * sample's "safe" region (the part provably unaffected by padding), so
 * eval-mode scores are invariant under white padding.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';
import * as tf from '@tensorflow/tfjs';
import { Rng } from './rng.js';

export interface ModelConfig {
  filters: number;
  kernel: number;
  dense: number;
  dropout: number;
  bnMomentum: number;
  bnEpsilon: number;
}

export const DEFAULT_CONFIG: ModelConfig = {
  filters: 32,
  kernel: 3,
  dense: 32,
  dropout: 0.25,
  bnMomentum: 0.9,
  bnEpsilon: 1e-3,
};

export interface Dims {
  h: number;
  w: number;
}

/**
 * Extent of the feature map that is provably identical with and without
 * white padding, given a sample's original (h, w):
 *  - block 1 conv keeps all h rows exact (zero pad == white pixels),
 *    pooling keeps floor(h/2) of them;
 *  - block 2 conv loses the last safe row to the now-divergent border,
 *    pooling keeps floor((floor(h/2) - 1) / 2).
 */
export function safeDims(dims: Dims): Dims {
  const shrink = (v: number) =>
    Math.floor((Math.floor(v / 2) - 1) / 2);
  return { h: shrink(dims.h), w: shrink(dims.w) };
}

/** Samples smaller than this cannot fill one safe pooled cell. */
export const MIN_INPUT_SIDE = 6;

export function isDegenerate(dims: Dims): boolean {
  const s = safeDims(dims);
  return s.h < 1 || s.w < 1;
}

interface BlockVars {
  /** [kernel*kernel*inChannels, filters]; applied via im2col + matMul so
   * the backward pass runs on backends without conv-gradient kernels */
  kernel: tf.Variable;
  inChannels: number;
  bias: tf.Variable;
  gamma: tf.Variable;
  beta: tf.Variable;
  movingMean: tf.Variable;
  movingVar: tf.Variable;
}

const patchIndexCache = new Map<string, Int32Array>();

/** gather indices turning a zero-padded [Hp*Wp] map into K*K patches per
 * output pixel, ordered (dy, dx) to match the kernel's row layout */
function patchIndices(h: number, w: number, k: number): Int32Array {
  const key = `${h}x${w}x${k}`;
  let idx = patchIndexCache.get(key);
  if (!idx) {
    const pad = (k - 1) / 2;
    const wp = w + 2 * pad;
    idx = new Int32Array(h * w * k * k);
    let p = 0;
    for (let y = 0; y < h; y++) {
      for (let x = 0; x < w; x++) {
        for (let dy = 0; dy < k; dy++) {
          for (let dx = 0; dx < k; dx++) idx[p++] = (y + dy) * wp + (x + dx);
        }
      }
    }
    patchIndexCache.set(key, idx);
  }
  return idx;
}

/** patch matrix [n*h*w, k*k*cin] of a zero-padded 'same' neighborhood */
function im2col(x: tf.Tensor4D, cin: number, k: number): tf.Tensor2D {
  const [n, h, w] = x.shape;
  const pad = (k - 1) / 2;
  const padded = tf.pad(x, [[0, 0], [pad, pad], [pad, pad], [0, 0]]);
  const flat = tf.reshape(padded, [n, (h + 2 * pad) * (w + 2 * pad), cin]);
  const idx = tf.tensor1d(patchIndices(h, w, k), 'int32');
  const patches = tf.gather(flat, idx, 1);
  return tf.reshape(patches, [n * h * w, k * k * cin]) as tf.Tensor2D;
}

/**
 * Stride-1 'same' convolution as im2col + matMul, with a hand-written
 * gradient: dW is the patch matrix times the upstream gradient, and dX
 * is a correlation of the upstream gradient with the spatially flipped,
 * channel-transposed kernel. Both passes use only ops every backend
 * implements forward (pad/gather/reshape/matMul), so training works on
 * backends that lack convolution and scatter gradient kernels.
 */
export function convSame(x: tf.Tensor4D, kernel: tf.Tensor2D, cin: number,
                          k: number, filters: number): tf.Tensor4D {
  const op = tf.customGrad((xx, ww, save) => {
    const x4 = xx as tf.Tensor4D;
    const w2 = ww as tf.Tensor2D;
    const [n, h, w] = x4.shape;
    const value = tf.reshape(tf.matMul(im2col(x4, cin, k), w2),
                             [n, h, w, filters]);
    (save as tf.GradSaveFunc)([x4, w2]);
    return {
      value,
      gradFunc: (dy: tf.Tensor, saved: tf.Tensor[]) => {
        const [sx, sw] = saved as [tf.Tensor4D, tf.Tensor2D];
        const dyFlat = tf.reshape(dy, [n * h * w, filters]) as tf.Tensor2D;
        const dW = tf.matMul(im2col(sx, cin, k), dyFlat, true, false);
        const flipped = tf.reshape(
          tf.transpose(tf.reverse(tf.reshape(sw, [k, k, cin, filters]),
                                  [0, 1]),
                       [0, 1, 3, 2]),
          [k * k * filters, cin]) as tf.Tensor2D;
        const dX = tf.reshape(
          tf.matMul(im2col(tf.reshape(dy, [n, h, w, filters]) as tf.Tensor4D,
                           filters, k),
                    flipped),
          [n, h, w, cin]);
        return [dX, dW];
      },
    };
  });
  return op(x, kernel) as tf.Tensor4D;
}

export class CnnModel {
  readonly config: ModelConfig;
  private blocks: BlockVars[];
  private denseW: tf.Variable;
  private denseB: tf.Variable;
  private headW: tf.Variable;
  private headB: tf.Variable;
  private dropSeed: number;

  constructor(config: ModelConfig = DEFAULT_CONFIG, seed = 0) {
    this.config = { ...config };
    const rng = new Rng(seed);
    const { filters, kernel, dense } = this.config;

    const heNormal = (shape: number[], fanIn: number) => {
      const std = Math.sqrt(2 / fanIn);
      const size = shape.reduce((a, b) => a * b, 1);
      const data = new Float32Array(size);
      for (let i = 0; i < size; i++) data[i] = rng.gauss() * std;
      return tf.variable(tf.tensor(data, shape));
    };

    this.blocks = [3, filters].map((inCh) => ({
      kernel: heNormal([kernel * kernel * inCh, filters],
                       kernel * kernel * inCh),
      inChannels: inCh,
      bias: tf.variable(tf.zeros([filters])),
      gamma: tf.variable(tf.ones([filters])),
      beta: tf.variable(tf.zeros([filters])),
      movingMean: tf.variable(tf.zeros([filters]), false),
      movingVar: tf.variable(tf.ones([filters]), false),
    }));
    this.denseW = heNormal([filters, dense], filters);
    this.denseB = tf.variable(tf.zeros([dense]));
    this.headW = heNormal([dense, 2], dense);
    this.headB = tf.variable(tf.zeros([2]));
    this.dropSeed = seed + 1;
  }

  trainableVariables(): tf.Variable[] {
    const vars: tf.Variable[] = [];
    for (const b of this.blocks) vars.push(b.kernel, b.bias, b.gamma, b.beta);
    vars.push(this.denseW, this.denseB, this.headW, this.headB);
    return vars;
  }

  private batchNorm(x: tf.Tensor4D, b: BlockVars, training: boolean): tf.Tensor4D {
    const { bnMomentum: m, bnEpsilon: eps } = this.config;
    if (!training) {
      return tf.batchNorm(x, b.movingMean, b.movingVar, b.beta, b.gamma,
                          eps) as tf.Tensor4D;
    }
    const { mean, variance } = tf.moments(x, [0, 1, 2]);
    b.movingMean.assign(tf.add(tf.mul(b.movingMean, m), tf.mul(mean, 1 - m)));
    b.movingVar.assign(tf.add(tf.mul(b.movingVar, m), tf.mul(variance, 1 - m)));
    return tf.batchNorm(x, mean, variance, b.beta, b.gamma, eps) as tf.Tensor4D;
  }

  private conv(x: tf.Tensor4D, b: BlockVars): tf.Tensor4D {
    return convSame(x, b.kernel as tf.Tensor2D, b.inChannels,
                    this.config.kernel, this.config.filters);
  }

  private block(x: tf.Tensor4D, b: BlockVars, training: boolean): tf.Tensor4D {
    let y = tf.add(this.conv(x, b), b.bias) as tf.Tensor4D;
    y = tf.relu(y);
    if (training && this.config.dropout > 0) {
      y = tf.dropout(y, this.config.dropout, undefined,
                     this.dropSeed++) as tf.Tensor4D;
    }
    y = this.batchNorm(y, b, training);
    return tf.maxPool(y, 2, 2, 'same');
  }

  /**
   * x: [n, H, W, 3] white-normalized pixels; dims: original extent per
   * sample. Returns logits [n, 2].
   */
  logits(x: tf.Tensor4D, dims: Dims[], training = false): tf.Tensor2D {
    return tf.tidy(() => {
      let y = x;
      for (const b of this.blocks) y = this.block(y, b, training);
      const [n, fh, fw] = y.shape;

      // average only over each sample's padding-safe region; a sample
      // too small to have one falls back to its top-left cell so the
      // score stays finite
      const mask = new Float32Array(n * fh * fw);
      for (let i = 0; i < n; i++) {
        const s = safeDims(dims[i]);
        const h = Math.max(1, Math.min(s.h, fh));
        const w = Math.max(1, Math.min(s.w, fw));
        for (let r = 0; r < h; r++) {
          for (let c = 0; c < w; c++) mask[(i * fh + r) * fw + c] = 1;
        }
      }
      const maskT = tf.tensor4d(mask, [n, fh, fw, 1]);
      const counts = tf.sum(maskT, [1, 2]);
      const pooled = tf.div(tf.sum(tf.mul(y, maskT), [1, 2]),
                            counts) as tf.Tensor2D;

      const hidden = tf.relu(tf.add(tf.matMul(pooled, this.denseW as tf.Tensor2D),
                                    this.denseB));
      return tf.add(tf.matMul(hidden as tf.Tensor2D,
                              this.headW as tf.Tensor2D),
                    this.headB) as tf.Tensor2D;
    });
  }

  /** class probabilities, rows summing to 1 */
  predictProba(x: tf.Tensor4D, dims: Dims[]): tf.Tensor2D {
    return tf.tidy(() => tf.softmax(this.logits(x, dims, false)));
  }

  // --- checkpointing ------------------------------------------------

  private namedVariables(): Record<string, tf.Variable> {
    const out: Record<string, tf.Variable> = {};
    this.blocks.forEach((b, i) => {
      out[`block${i}/kernel`] = b.kernel;
      out[`block${i}/bias`] = b.bias;
      out[`block${i}/gamma`] = b.gamma;
      out[`block${i}/beta`] = b.beta;
      out[`block${i}/movingMean`] = b.movingMean;
      out[`block${i}/movingVar`] = b.movingVar;
    });
    out['dense/kernel'] = this.denseW;
    out['dense/bias'] = this.denseB;
    out['head/kernel'] = this.headW;
    out['head/bias'] = this.headB;
    return out;
  }

  toJSON(extra: Record<string, unknown> = {}): string {
    const weights: Record<string, { shape: number[]; data: string }> = {};
    for (const [name, v] of Object.entries(this.namedVariables())) {
      const data = v.dataSync() as Float32Array;
      weights[name] = {
        shape: v.shape.slice(),
        data: Buffer.from(data.buffer, data.byteOffset,
                          data.byteLength).toString('base64'),
      };
    }
    return JSON.stringify({ format: 'c2i-trainer-checkpoint-v1',
                            config: this.config, weights, ...extra });
  }

  loadWeightsFrom(json: string): Record<string, unknown> {
    const parsed = JSON.parse(json);
    if (parsed.format !== 'c2i-trainer-checkpoint-v1') {
      throw new Error('not a trainer checkpoint');
    }
    const named = this.namedVariables();
    for (const [name, v] of Object.entries(named)) {
      const entry = parsed.weights[name];
      if (!entry) throw new Error(`checkpoint missing weight ${name}`);
      const buf = Buffer.from(entry.data, 'base64');
      const data = new Float32Array(buf.buffer, buf.byteOffset,
                                    buf.byteLength / 4);
      v.assign(tf.tensor(data, entry.shape));
    }
    return parsed;
  }

  /** atomic write: temp file in the target directory, then rename */
  save(filePath: string, extra: Record<string, unknown> = {}): void {
    const dir = path.dirname(filePath);
    fs.mkdirSync(dir, { recursive: true });
    const tmp = path.join(dir, `.${path.basename(filePath)}.tmp`);
    fs.writeFileSync(tmp, this.toJSON(extra));
    fs.renameSync(tmp, filePath);
  }

  static load(filePath: string): { model: CnnModel;
                                   meta: Record<string, unknown> } {
    const json = fs.readFileSync(filePath, 'utf-8');
    const parsed = JSON.parse(json);
    const model = new CnnModel(parsed.config as ModelConfig, 0);
    const meta = model.loadWeightsFrom(json);
    return { model, meta };
  }
}
