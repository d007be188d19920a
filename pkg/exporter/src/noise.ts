/**
 * Gaussian corruption for the smoothing path.  The engine consumes groups of
 * noisy embeddings and averages them itself; this side only samples, encodes,
 * and renormalizes.
 */

import { ExporterError } from "./errors.js";
import { Rng, gaussian, normalize } from "./rng.js";

/** n unit-norm samples of base + sigma * eps, eps ~ N(0, I). */
export function noisySamples(
  base: Float32Array,
  sigma: number,
  n: number,
  rng: Rng,
): Float32Array[] {
  if (sigma <= 0) throw new ExporterError("CONFIG_INVALID", `sigma must be positive, got ${sigma}`);
  if (n < 1) throw new ExporterError("CONFIG_INVALID", `need at least one sample, got ${n}`);
  const g = gaussian(rng);
  const out: Float32Array[] = [];
  for (let s = 0; s < n; s++) {
    const sample = new Float32Array(base.length);
    for (let i = 0; i < base.length; i++) {
      sample[i] = base[i]! + sigma * g();
    }
    out.push(normalize(sample));
  }
  return out;
}

/** Signal-retention factor for a given noise level: alpha = 1 / (1 + sigma^2). */
export function alphaForSigma(sigma: number): number {
  return 1 / (1 + sigma * sigma);
}

/**
 * Pick the diffusion timestep whose retention factor best matches the noise
 * level, i.e. minimizes |(1 - alpha_t) / alpha_t - sigma^2|.
 */
export function nearestTimestep(alphaSchedule: readonly number[], sigma: number): number {
  if (alphaSchedule.length === 0) {
    throw new ExporterError("CONFIG_INVALID", "empty alpha schedule");
  }
  const target = sigma * sigma;
  let best = 0;
  let bestErr = Infinity;
  alphaSchedule.forEach((alpha, t) => {
    const err = Math.abs((1 - alpha) / alpha - target);
    if (err < bestErr) {
      bestErr = err;
      best = t;
    }
  });
  return best;
}
