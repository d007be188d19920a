/** Small deterministic RNG so stub exports are reproducible across runs. */

export type Rng = () => number;

/** mulberry32: fast 32-bit state generator, uniform in [0, 1). */
export function mulberry32(seed: number): Rng {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** FNV-1a on the UTF-8 bytes, for seeding from strings and file contents. */
export function hash32(data: string | Uint8Array): number {
  const bytes = typeof data === "string" ? Buffer.from(data, "utf8") : data;
  let h = 0x811c9dc5;
  for (const b of bytes) {
    h ^= b;
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

/** Standard normal via Box-Muller; consumes two uniforms per pair. */
export function gaussian(rng: Rng): () => number {
  let spare: number | null = null;
  return () => {
    if (spare !== null) {
      const v = spare;
      spare = null;
      return v;
    }
    let u = 0;
    let v = 0;
    while (u === 0) u = rng();
    while (v === 0) v = rng();
    const r = Math.sqrt(-2 * Math.log(u));
    spare = r * Math.sin(2 * Math.PI * v);
    return r * Math.cos(2 * Math.PI * v);
  };
}

export function gaussianVector(dim: number, rng: Rng): Float32Array {
  const g = gaussian(rng);
  const out = new Float32Array(dim);
  for (let i = 0; i < dim; i++) out[i] = g();
  return out;
}

export function normalize(values: Float32Array): Float32Array {
  let s = 0;
  for (const v of values) s += v * v;
  const n = Math.sqrt(s);
  if (n === 0) throw new Error("cannot normalize a zero vector");
  const out = new Float32Array(values.length);
  for (let i = 0; i < values.length; i++) out[i] = values[i]! / n;
  return out;
}
