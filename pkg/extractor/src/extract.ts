/**
 * Extraction pipelines: walk a labeled directory of media files, embed each
 * file, and write one EMB1 row per successfully processed input.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { encodeEmb1 } from './emb1.js';
import { FRAMES_PER_PATCH, MEL_BANDS, TARGET_SAMPLE_RATE, logMelPatches } from './melspec.js';
import { EMBED_DIM, EmbeddingNetwork, RandomProjectionNetwork, poolImage } from './network.js';
import { decodePpm, resizeBilinear } from './ppm.js';
import { decodeWav, resample } from './wav.js';

export { EMBED_DIM } from './network.js';

export const AUDIO_INPUT_DIM = FRAMES_PER_PATCH * MEL_BANDS;
export const IMAGE_SIZE = 299;
export const IMAGE_POOL_GRID = 23;
export const IMAGE_INPUT_DIM = IMAGE_POOL_GRID * IMAGE_POOL_GRID * 3;
const AUDIO_NETWORK_SEED = 0x5eed_a11d;
const IMAGE_NETWORK_SEED = 0x5eed_1a9e;

export type Modality = 'audio' | 'image';

export interface ExtractorSpec {
  modality: Modality;
  inputDir: string;
  labelsCsv: string;
  outPath: string;
}

export interface LabeledFile {
  file: string;
  label: number;
}

export interface ExtractionReport {
  written: number;
  dim: number;
  numClasses: number;
  skipped: { file: string; reason: string }[];
}

export function readLabelCsv(csvPath: string): LabeledFile[] {
  const text = fs.readFileSync(csvPath, 'utf-8');
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0 || lines[0].trim() !== 'file,label') {
    throw new Error(`labels CSV must start with header "file,label" (${csvPath})`);
  }
  return lines.slice(1).map((line, index) => {
    const parts = line.split(',');
    if (parts.length !== 2) {
      throw new Error(`labels CSV line ${index + 2}: expected 2 fields`);
    }
    const label = Number(parts[1]);
    if (!Number.isInteger(label) || label < 0) {
      throw new Error(`labels CSV line ${index + 2}: bad label ${parts[1]}`);
    }
    return { file: parts[0], label };
  });
}

export function audioNetwork(): EmbeddingNetwork {
  return new RandomProjectionNetwork(AUDIO_INPUT_DIM, AUDIO_NETWORK_SEED);
}

export function imageNetwork(): EmbeddingNetwork {
  return new RandomProjectionNetwork(IMAGE_INPUT_DIM, IMAGE_NETWORK_SEED);
}

/** 960 ms log-mel patches -> per-patch embeddings -> elementwise max-pool. */
export function embedAudioClip(
  samples: Float32Array, sampleRate: number, network: EmbeddingNetwork,
): Float32Array | null {
  const resampled = resample(samples, sampleRate, TARGET_SAMPLE_RATE);
  const patches = logMelPatches(resampled);
  if (patches.length === 0) return null;
  const pooled = new Float32Array(network.embedDim).fill(-Infinity);
  for (const patch of patches) {
    const embedding = network.embed(patch);
    for (let i = 0; i < pooled.length; i++) {
      if (embedding[i] > pooled[i]) pooled[i] = embedding[i];
    }
  }
  return pooled;
}

export function embedImageFile(buf: Buffer, network: EmbeddingNetwork): Float32Array {
  const image = resizeBilinear(decodePpm(buf), IMAGE_SIZE, IMAGE_SIZE);
  return network.embed(poolImage(image.pixels, image.width, image.height, IMAGE_POOL_GRID));
}

export function runExtraction(
  spec: ExtractorSpec,
  warn: (message: string) => void = (m) => console.warn(m),
): ExtractionReport {
  const entries = readLabelCsv(spec.labelsCsv);
  if (entries.length === 0) throw new Error('labels CSV lists no files');
  const network = spec.modality === 'audio' ? audioNetwork() : imageNetwork();
  const rows: Float32Array[] = [];
  const labels: number[] = [];
  const skipped: { file: string; reason: string }[] = [];
  for (const entry of entries) {
    const filePath = path.join(spec.inputDir, entry.file);
    let row: Float32Array | null;
    try {
      const buf = fs.readFileSync(filePath);
      if (spec.modality === 'audio') {
        const wav = decodeWav(buf);
        row = embedAudioClip(wav.samples, wav.sampleRate, network);
        if (row === null) {
          throw new Error('clip shorter than one 960 ms patch');
        }
      } else {
        row = embedImageFile(buf, network);
      }
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      skipped.push({ file: entry.file, reason });
      warn(`skipping ${entry.file}: ${reason}`);
      continue;
    }
    rows.push(row);
    labels.push(entry.label);
  }
  if (rows.length === 0) throw new Error('no inputs could be processed');
  const numClasses = Math.max(...labels) + 1;
  const features = new Float32Array(rows.length * EMBED_DIM);
  rows.forEach((row, i) => features.set(row, i * EMBED_DIM));
  const blob = encodeEmb1({
    features,
    labels: Uint32Array.from(labels),
    numClasses,
    dim: EMBED_DIM,
  });
  fs.mkdirSync(path.dirname(path.resolve(spec.outPath)), { recursive: true });
  fs.writeFileSync(spec.outPath, blob);
  return { written: rows.length, dim: EMBED_DIM, numClasses, skipped };
}
