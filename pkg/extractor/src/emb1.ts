/**
 * EMB1 dataset format, mirroring the training engine's reader:
 * magic "EMB1" | version u32 | N u32 | D u32 | C u32
 * | labels N x u32 | features N x D x f32 row-major, all little-endian.
 */

export const EMB1_MAGIC = 'EMB1';
export const EMB1_VERSION = 1;

export interface Emb1Dataset {
  features: Float32Array; // N * D row-major
  labels: Uint32Array;
  numClasses: number;
  dim: number;
}

export function encodeEmb1(dataset: Emb1Dataset): Buffer {
  const n = dataset.labels.length;
  const { dim, numClasses } = dataset;
  if (dataset.features.length !== n * dim) {
    throw new Error(
      `feature buffer holds ${dataset.features.length} values, expected ${n * dim}`,
    );
  }
  for (let i = 0; i < n; i++) {
    if (dataset.labels[i] >= numClasses) {
      throw new Error(`label ${dataset.labels[i]} at sample ${i} >= ${numClasses}`);
    }
  }
  for (let i = 0; i < dataset.features.length; i++) {
    if (!Number.isFinite(dataset.features[i])) {
      throw new Error(`non-finite feature at flat index ${i}`);
    }
  }
  const buf = Buffer.alloc(4 + 16 + 4 * n + 4 * n * dim);
  let offset = buf.write(EMB1_MAGIC, 0, 'ascii');
  offset = buf.writeUInt32LE(EMB1_VERSION, offset);
  offset = buf.writeUInt32LE(n, offset);
  offset = buf.writeUInt32LE(dim, offset);
  offset = buf.writeUInt32LE(numClasses, offset);
  for (let i = 0; i < n; i++) offset = buf.writeUInt32LE(dataset.labels[i], offset);
  for (let i = 0; i < n * dim; i++) {
    offset = buf.writeFloatLE(dataset.features[i], offset);
  }
  return buf;
}

/** Parse an EMB1 buffer; used for self-validation of emitted files. */
export function decodeEmb1(buf: Buffer): Emb1Dataset {
  if (buf.length < 20) throw new Error(`truncated header: ${buf.length} bytes`);
  if (buf.toString('ascii', 0, 4) !== EMB1_MAGIC) {
    throw new Error(`bad magic at offset 0`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== EMB1_VERSION) throw new Error(`unsupported version ${version}`);
  const n = buf.readUInt32LE(8);
  const dim = buf.readUInt32LE(12);
  const numClasses = buf.readUInt32LE(16);
  const expected = 20 + 4 * n + 4 * n * dim;
  if (buf.length !== expected) {
    throw new Error(`length ${buf.length} != expected ${expected}`);
  }
  const labels = new Uint32Array(n);
  for (let i = 0; i < n; i++) {
    labels[i] = buf.readUInt32LE(20 + 4 * i);
    if (labels[i] >= numClasses) {
      throw new Error(`label ${labels[i]} at sample ${i} >= ${numClasses}`);
    }
  }
  const features = new Float32Array(n * dim);
  const base = 20 + 4 * n;
  for (let i = 0; i < n * dim; i++) {
    features[i] = buf.readFloatLE(base + 4 * i);
    if (!Number.isFinite(features[i])) {
      throw new Error(`non-finite feature at flat index ${i}`);
    }
  }
  return { features, labels, numClasses, dim };
}
