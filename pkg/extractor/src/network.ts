/**
 * Embedding networks behind a single interface.
 *
 * No pinned pre-trained checkpoint ships with this tool (availability
 * drifts); the built-in backend is a frozen random-projection MLP whose
 * weights are materialized deterministically from a seed, so identical
 * inputs always map to identical embeddings. Swap in a real model by
 * implementing EmbeddingNetwork.
 */

import { gaussian, mulberry32 } from './prng.js';

export const EMBED_DIM = 1024;

export interface EmbeddingNetwork {
  inputDim: number;
  embedDim: number;
  embed(input: Float32Array): Float32Array;
}

export class RandomProjectionNetwork implements EmbeddingNetwork {
  readonly inputDim: number;
  readonly embedDim: number;
  private readonly hiddenDim: number;
  private readonly w1: Float32Array;
  private readonly b1: Float32Array;
  private readonly w2: Float32Array;

  constructor(inputDim: number, seed: number, hiddenDim = 256, embedDim = EMBED_DIM) {
    this.inputDim = inputDim;
    this.embedDim = embedDim;
    this.hiddenDim = hiddenDim;
    const next = mulberry32(seed);
    const scale1 = Math.sqrt(2.0 / (inputDim + hiddenDim));
    this.w1 = new Float32Array(inputDim * hiddenDim);
    for (let i = 0; i < this.w1.length; i++) this.w1[i] = gaussian(next) * scale1;
    this.b1 = new Float32Array(hiddenDim);
    for (let i = 0; i < hiddenDim; i++) this.b1[i] = gaussian(next) * 0.1;
    const scale2 = Math.sqrt(2.0 / (hiddenDim + embedDim));
    this.w2 = new Float32Array(hiddenDim * embedDim);
    for (let i = 0; i < this.w2.length; i++) this.w2[i] = gaussian(next) * scale2;
  }

  embed(input: Float32Array): Float32Array {
    if (input.length !== this.inputDim) {
      throw new Error(`input length ${input.length} != ${this.inputDim}`);
    }
    const hidden = new Float32Array(this.hiddenDim);
    for (let j = 0; j < this.hiddenDim; j++) {
      let acc = this.b1[j];
      for (let i = 0; i < this.inputDim; i++) {
        acc += input[i] * this.w1[i * this.hiddenDim + j];
      }
      hidden[j] = acc > 0 ? acc : 0;
    }
    const out = new Float32Array(this.embedDim);
    for (let j = 0; j < this.embedDim; j++) {
      let acc = 0;
      for (let i = 0; i < this.hiddenDim; i++) {
        acc += hidden[i] * this.w2[i * this.embedDim + j];
      }
      out[j] = acc;
    }
    return out;
  }
}

/** Block-mean pooling from an RGB image to a compact network input. */
export function poolImage(
  pixels: Float32Array, width: number, height: number, grid = 23,
): Float32Array {
  const out = new Float32Array(grid * grid * 3);
  const counts = new Float32Array(grid * grid);
  for (let y = 0; y < height; y++) {
    const gy = Math.min(Math.floor((y * grid) / height), grid - 1);
    for (let x = 0; x < width; x++) {
      const gx = Math.min(Math.floor((x * grid) / width), grid - 1);
      const cell = gy * grid + gx;
      counts[cell] += 1;
      for (let c = 0; c < 3; c++) {
        out[cell * 3 + c] += pixels[(y * width + x) * 3 + c];
      }
    }
  }
  for (let cell = 0; cell < grid * grid; cell++) {
    if (counts[cell] > 0) {
      for (let c = 0; c < 3; c++) out[cell * 3 + c] /= counts[cell];
    }
  }
  return out;
}
