/** Minimal RIFF/WAV decoding plus mono mixdown and linear resampling. */

export interface DecodedWav {
  samples: Float32Array; // mono, in [-1, 1]
  sampleRate: number;
}

export function decodeWav(buf: Buffer): DecodedWav {
  if (buf.length < 12 || buf.toString('ascii', 0, 4) !== 'RIFF'
      || buf.toString('ascii', 8, 12) !== 'WAVE') {
    throw new Error('not a RIFF/WAVE file');
  }
  let offset = 12;
  let format: { codec: number; channels: number; sampleRate: number; bits: number } | null = null;
  let data: Buffer | null = null;
  while (offset + 8 <= buf.length) {
    const id = buf.toString('ascii', offset, offset + 4);
    const size = buf.readUInt32LE(offset + 4);
    const body = buf.subarray(offset + 8, offset + 8 + size);
    if (id === 'fmt ') {
      format = {
        codec: body.readUInt16LE(0),
        channels: body.readUInt16LE(2),
        sampleRate: body.readUInt32LE(4),
        bits: body.readUInt16LE(14),
      };
    } else if (id === 'data') {
      data = body;
    }
    offset += 8 + size + (size % 2); // chunks are word-aligned
  }
  if (!format || !data) throw new Error('missing fmt or data chunk');
  if (format.channels < 1) throw new Error('no channels');

  const { channels } = format;
  let interleaved: Float32Array;
  if (format.codec === 1 && format.bits === 16) {
    const count = Math.floor(data.length / 2);
    interleaved = new Float32Array(count);
    for (let i = 0; i < count; i++) {
      interleaved[i] = data.readInt16LE(2 * i) / 32768;
    }
  } else if (format.codec === 3 && format.bits === 32) {
    const count = Math.floor(data.length / 4);
    interleaved = new Float32Array(count);
    for (let i = 0; i < count; i++) {
      interleaved[i] = data.readFloatLE(4 * i);
    }
  } else {
    throw new Error(`unsupported codec ${format.codec}/${format.bits}-bit`);
  }

  const frames = Math.floor(interleaved.length / channels);
  const mono = new Float32Array(frames);
  for (let i = 0; i < frames; i++) {
    let acc = 0;
    for (let c = 0; c < channels; c++) acc += interleaved[i * channels + c];
    mono[i] = acc / channels;
  }
  return { samples: mono, sampleRate: format.sampleRate };
}

/** Linear-interpolation resampler. */
export function resample(samples: Float32Array, from: number, to: number): Float32Array {
  if (from === to) return samples;
  const outLength = Math.floor((samples.length * to) / from);
  const out = new Float32Array(outLength);
  const ratio = from / to;
  for (let i = 0; i < outLength; i++) {
    const pos = i * ratio;
    const lo = Math.floor(pos);
    const hi = Math.min(lo + 1, samples.length - 1);
    const frac = pos - lo;
    out[i] = samples[lo] * (1 - frac) + samples[hi] * frac;
  }
  return out;
}

/** PCM16 WAV writer, for synthesizing test fixtures. */
export function encodeWavPcm16(
  samples: Float32Array, sampleRate: number, channels = 1,
): Buffer {
  const dataSize = samples.length * 2;
  const buf = Buffer.alloc(44 + dataSize);
  buf.write('RIFF', 0, 'ascii');
  buf.writeUInt32LE(36 + dataSize, 4);
  buf.write('WAVE', 8, 'ascii');
  buf.write('fmt ', 12, 'ascii');
  buf.writeUInt32LE(16, 16);
  buf.writeUInt16LE(1, 20);
  buf.writeUInt16LE(channels, 22);
  buf.writeUInt32LE(sampleRate, 24);
  buf.writeUInt32LE(sampleRate * channels * 2, 28);
  buf.writeUInt16LE(channels * 2, 32);
  buf.writeUInt16LE(16, 34);
  buf.write('data', 36, 'ascii');
  buf.writeUInt32LE(dataSize, 40);
  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.max(-1, Math.min(1, samples[i]));
    buf.writeInt16LE(Math.round(clamped * 32767), 44 + 2 * i);
  }
  return buf;
}
