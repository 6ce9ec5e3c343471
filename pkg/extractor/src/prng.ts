/** Deterministic PRNG (mulberry32) used to materialize network weights. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Approximate standard normal via the sum of 12 uniforms. */
export function gaussian(next: () => number): number {
  let acc = 0;
  for (let i = 0; i < 12; i++) acc += next();
  return acc - 6.0;
}
