/**
 * Frozen encoders mapping raw element channels to feature vectors.
 *
 * The tool ships with "toy-projection": a seeded random linear map
 * followed by tanh, so the export pipeline can be exercised offline
 * without downloading model weights.  Real encoders plug in through
 * the same interface.
 */

import { counterNormal } from './rng.js';

export type Encoder = (elements: number[][], dOut: number, seed: number) => Float32Array;

function toyProjection(elements: number[][], dOut: number, seed: number): Float32Array {
  const dIn = elements[0].length;
  const weights = new Float64Array(dIn * dOut);
  for (let i = 0; i < dIn; i++) {
    for (let j = 0; j < dOut; j++) {
      weights[i * dOut + j] = counterNormal(seed, i * dOut + j);
    }
  }
  const scale = 1 / Math.sqrt(dIn);
  const out = new Float32Array(elements.length * dOut);
  for (let r = 0; r < elements.length; r++) {
    const row = elements[r];
    for (let j = 0; j < dOut; j++) {
      let acc = 0;
      for (let i = 0; i < dIn; i++) {
        acc += row[i] * weights[i * dOut + j];
      }
      out[r * dOut + j] = Math.tanh(acc * scale);
    }
  }
  return out;
}

const ENCODERS: Record<string, Encoder> = {
  'toy-projection': toyProjection,
};

export function getEncoder(name: string): Encoder {
  const enc = ENCODERS[name];
  if (!enc) {
    throw new Error(`unknown encoder ${JSON.stringify(name)}; available: ${Object.keys(ENCODERS).join(', ')}`);
  }
  return enc;
}
