/** Backend selection: the WASM backend trains several times faster than
 * the plain JS CPU backend; fall back to CPU if it cannot initialize. */

import * as tf from '@tensorflow/tfjs';
import '@tensorflow/tfjs-backend-wasm';

let ready: Promise<string> | null = null;

export function initBackend(prefer = 'wasm'): Promise<string> {
  if (!ready) {
    ready = (async () => {
      if (prefer === 'wasm') {
        try {
          if (await tf.setBackend('wasm')) {
            await tf.ready();
            return 'wasm';
          }
        } catch {
          // fall through to cpu
        }
      }
      await tf.setBackend('cpu');
      await tf.ready();
      return 'cpu';
    })();
  }
  return ready;
}
