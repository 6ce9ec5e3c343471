/**
 * Stabilized log-mel spectrogram patches over 16 kHz mono audio.
 *
 * The waveform is cut into consecutive 960 ms patches (any remainder is
 * dropped); each patch is framed with a 25 ms Hann window at a 10 ms hop
 * and projected onto 64 mel bands between 125 Hz and 7500 Hz, then
 * log-stabilized. A patch is therefore a 94 x 64 feature map.
 */

export const TARGET_SAMPLE_RATE = 16_000;
export const PATCH_SECONDS = 0.96;
export const PATCH_SAMPLES = TARGET_SAMPLE_RATE * PATCH_SECONDS; // 15360
export const WINDOW_SAMPLES = 400; // 25 ms
export const HOP_SAMPLES = 160; // 10 ms
export const FFT_SIZE = 512;
export const MEL_BANDS = 64;
export const MEL_MIN_HZ = 125;
export const MEL_MAX_HZ = 7500;
export const LOG_FLOOR = 0.001;
export const FRAMES_PER_PATCH =
  Math.floor((PATCH_SAMPLES - WINDOW_SAMPLES) / HOP_SAMPLES) + 1; // 94

function hannWindow(size: number): Float64Array {
  const out = new Float64Array(size);
  for (let i = 0; i < size; i++) {
    out[i] = 0.5 - 0.5 * Math.cos((2 * Math.PI * i) / size);
  }
  return out;
}

/** In-place iterative radix-2 FFT over interleaved re/im arrays. */
function fft(re: Float64Array, im: Float64Array): void {
  const n = re.length;
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      [re[i], re[j]] = [re[j], re[i]];
      [im[i], im[j]] = [im[j], im[i]];
    }
  }
  for (let len = 2; len <= n; len <<= 1) {
    const angle = (-2 * Math.PI) / len;
    const wRe = Math.cos(angle);
    const wIm = Math.sin(angle);
    for (let i = 0; i < n; i += len) {
      let curRe = 1;
      let curIm = 0;
      for (let k = 0; k < len / 2; k++) {
        const evenRe = re[i + k];
        const evenIm = im[i + k];
        const oddRe = re[i + k + len / 2] * curRe - im[i + k + len / 2] * curIm;
        const oddIm = re[i + k + len / 2] * curIm + im[i + k + len / 2] * curRe;
        re[i + k] = evenRe + oddRe;
        im[i + k] = evenIm + oddIm;
        re[i + k + len / 2] = evenRe - oddRe;
        im[i + k + len / 2] = evenIm - oddIm;
        const nextRe = curRe * wRe - curIm * wIm;
        curIm = curRe * wIm + curIm * wRe;
        curRe = nextRe;
      }
    }
  }
}

function hzToMel(hz: number): number {
  return 1127 * Math.log(1 + hz / 700);
}

function buildMelFilterbank(): Float64Array[] {
  const bins = FFT_SIZE / 2 + 1;
  const melEdges = new Float64Array(MEL_BANDS + 2);
  const melLo = hzToMel(MEL_MIN_HZ);
  const melHi = hzToMel(MEL_MAX_HZ);
  for (let i = 0; i < melEdges.length; i++) {
    melEdges[i] = melLo + ((melHi - melLo) * i) / (MEL_BANDS + 1);
  }
  const binMels = new Float64Array(bins);
  for (let b = 0; b < bins; b++) {
    binMels[b] = hzToMel((b * TARGET_SAMPLE_RATE) / FFT_SIZE);
  }
  const filters: Float64Array[] = [];
  for (let m = 0; m < MEL_BANDS; m++) {
    const filter = new Float64Array(bins);
    const lower = melEdges[m];
    const center = melEdges[m + 1];
    const upper = melEdges[m + 2];
    for (let b = 0; b < bins; b++) {
      const mel = binMels[b];
      if (mel > lower && mel < upper) {
        filter[b] = mel <= center
          ? (mel - lower) / (center - lower)
          : (upper - mel) / (upper - center);
      }
    }
    filters.push(filter);
  }
  return filters;
}

const HANN = hannWindow(WINDOW_SAMPLES);
const MEL_FILTERS = buildMelFilterbank();

/** Log-mel features for one 960 ms patch of samples (length PATCH_SAMPLES). */
export function patchLogMel(patch: Float32Array): Float32Array {
  const out = new Float32Array(FRAMES_PER_PATCH * MEL_BANDS);
  const re = new Float64Array(FFT_SIZE);
  const im = new Float64Array(FFT_SIZE);
  const bins = FFT_SIZE / 2 + 1;
  const power = new Float64Array(bins);
  for (let frame = 0; frame < FRAMES_PER_PATCH; frame++) {
    const start = frame * HOP_SAMPLES;
    re.fill(0);
    im.fill(0);
    for (let i = 0; i < WINDOW_SAMPLES; i++) {
      re[i] = patch[start + i] * HANN[i];
    }
    fft(re, im);
    for (let b = 0; b < bins; b++) {
      power[b] = re[b] * re[b] + im[b] * im[b];
    }
    for (let m = 0; m < MEL_BANDS; m++) {
      const filter = MEL_FILTERS[m];
      let acc = 0;
      for (let b = 0; b < bins; b++) acc += filter[b] * power[b];
      out[frame * MEL_BANDS + m] = Math.log(acc + LOG_FLOOR);
    }
  }
  return out;
}

/** Split 16 kHz mono audio into full 960 ms log-mel patches. */
export function logMelPatches(samples: Float32Array): Float32Array[] {
  const patchCount = Math.floor(samples.length / PATCH_SAMPLES);
  const patches: Float32Array[] = [];
  for (let p = 0; p < patchCount; p++) {
    patches.push(
      patchLogMel(samples.subarray(p * PATCH_SAMPLES, (p + 1) * PATCH_SAMPLES)),
    );
  }
  return patches;
}
