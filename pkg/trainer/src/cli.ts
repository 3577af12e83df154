/** Command line: `train` fits one per-category model from batch
 * directories and a manifest; `predict` scores a batch directory with a
 * saved checkpoint. */

import { parseArgs } from 'node:util';
import { train } from './train.js';
import { predict } from './predict.js';

const USAGE = `usage:
  cli train --train-dir D --val-dir D --manifest F --checkpoint F
            [--category N] [--epochs N] [--lr X] [--seed N] [--log F]
  cli predict --data-dir D --checkpoint F [--out F]`;

export async function main(argv: string[]): Promise<number> {
  const command = argv[0];
  const rest = argv.slice(1);
  try {
    if (command === 'train') {
      const { values } = parseArgs({
        args: rest,
        options: {
          'train-dir': { type: 'string' },
          'val-dir': { type: 'string' },
          manifest: { type: 'string' },
          checkpoint: { type: 'string' },
          category: { type: 'string', default: '0' },
          epochs: { type: 'string', default: '50' },
          lr: { type: 'string', default: '0.001' },
          seed: { type: 'string', default: '0' },
          log: { type: 'string' },
        },
      });
      for (const req of ['train-dir', 'val-dir', 'manifest', 'checkpoint']) {
        if (!(values as Record<string, unknown>)[req]) {
          throw new UsageError(`train: missing --${req}`);
        }
      }
      const log = await train({
        trainDir: values['train-dir']!,
        valDir: values['val-dir']!,
        manifestPath: values.manifest!,
        checkpointPath: values.checkpoint!,
        category: Number(values.category),
        epochs: Number(values.epochs),
        learningRate: Number(values.lr),
        seed: Number(values.seed),
        logPath: values.log,
      });
      console.log(JSON.stringify({ bestValLoss: log.bestValLoss,
                                   bestEpoch: log.bestEpoch,
                                   epochs: log.epochs.length }));
      return 0;
    }
    if (command === 'predict') {
      const { values } = parseArgs({
        args: rest,
        options: {
          'data-dir': { type: 'string' },
          checkpoint: { type: 'string' },
          out: { type: 'string' },
        },
      });
      if (!values['data-dir'] || !values.checkpoint) {
        throw new UsageError('predict: missing --data-dir or --checkpoint');
      }
      await predict({ dataDir: values['data-dir'],
                      checkpointPath: values.checkpoint,
                      outPath: values.out });
      return 0;
    }
    throw new UsageError(USAGE);
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(err.message);
      return 1;
    }
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

class UsageError extends Error {}

if (process.argv[1] && process.argv[1].endsWith('cli.ts') ||
    process.argv[1] && process.argv[1].endsWith('cli.js')) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
