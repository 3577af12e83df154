/** Inference: load a checkpoint, score every sample in a batch
 * directory, and emit an id,score CSV (score = positive-class
 * probability). */

import * as fs from 'node:fs';
import { CnnModel } from './model.js';
import { initBackend } from './backend.js';
import { loadBatches } from './train.js';

export interface PredictOptions {
  dataDir: string;
  checkpointPath: string;
  outPath?: string;
}

export function predictScores(model: CnnModel, dataDir: string):
    { id: string; score: number }[] {
  const rows: { id: string; score: number }[] = [];
  for (const b of loadBatches(dataDir)) {
    const proba = model.predictProba(b.x, b.dims);
    const values = proba.dataSync();
    b.ids.forEach((id, i) => {
      const score = values[i * 2 + 1];
      if (!Number.isFinite(score)) {
        throw new Error(`sample ${id}: non-finite score`);
      }
      rows.push({ id, score });
    });
    proba.dispose();
    b.x.dispose();
  }
  return rows;
}

export async function predict(opts: PredictOptions):
    Promise<{ id: string; score: number }[]> {
  await initBackend();
  const { model } = CnnModel.load(opts.checkpointPath);
  const rows = predictScores(model, opts.dataDir);
  const csv = 'id,score\n' +
    rows.map((r) => `${r.id},${r.score}`).join('\n') + '\n';
  if (opts.outPath) {
    fs.writeFileSync(opts.outPath, csv);
  } else {
    process.stdout.write(csv);
  }
  return rows;
}
