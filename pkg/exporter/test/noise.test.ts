import { describe, expect, it } from "vitest";

import { ExporterError } from "../src/errors.js";
import { alphaForSigma, nearestTimestep, noisySamples } from "../src/noise.js";
import { gaussianVector, mulberry32, normalize } from "../src/rng.js";

const base = normalize(gaussianVector(48, mulberry32(1)));

function dot(a: Float32Array, b: Float32Array): number {
  let s = 0;
  for (let i = 0; i < a.length; i++) s += a[i]! * b[i]!;
  return s;
}

describe("noisySamples", () => {
  it("returns n unit-norm samples", () => {
    const samples = noisySamples(base, 0.5, 40, mulberry32(2));
    expect(samples.length).toBe(40);
    for (const s of samples) {
      expect(Math.sqrt(dot(s, s))).toBeCloseTo(1, 6);
    }
  });

  it("collapses onto the base as sigma vanishes", () => {
    for (const s of noisySamples(base, 1e-7, 10, mulberry32(3))) {
      expect(dot(s, base)).toBeGreaterThan(0.999999);
    }
  });

  it("actually perturbs at real noise levels", () => {
    const samples = noisySamples(base, 1.0, 10, mulberry32(4));
    const sims = samples.map((s) => dot(s, base));
    expect(Math.min(...sims)).toBeLessThan(0.9);
  });

  it("is deterministic per rng seed", () => {
    const a = noisySamples(base, 0.3, 5, mulberry32(9));
    const b = noisySamples(base, 0.3, 5, mulberry32(9));
    expect(a.map((s) => Array.from(s))).toEqual(b.map((s) => Array.from(s)));
  });

  it("rejects bad parameters", () => {
    expect(() => noisySamples(base, 0, 5, mulberry32(1))).toThrow(ExporterError);
    expect(() => noisySamples(base, 1, 0, mulberry32(1))).toThrow(ExporterError);
  });
});

describe("timestep selection", () => {
  it("alpha = 1 / (1 + sigma^2)", () => {
    expect(alphaForSigma(1)).toBeCloseTo(0.5, 12);
    expect(alphaForSigma(0)).toBe(1);
    expect(alphaForSigma(3)).toBeCloseTo(0.1, 12);
  });

  it("picks the schedule entry whose noise ratio matches sigma^2", () => {
    // (1 - a) / a for these alphas: 0.25, 1, 4
    const schedule = [0.8, 0.5, 0.2];
    expect(nearestTimestep(schedule, 0.5)).toBe(0);
    expect(nearestTimestep(schedule, 1.0)).toBe(1);
    expect(nearestTimestep(schedule, 2.0)).toBe(2);
    expect(() => nearestTimestep([], 1)).toThrow(ExporterError);
  });

  it("round-trips through alphaForSigma", () => {
    const sigmas = [0.25, 0.5, 1, 2];
    const schedule = sigmas.map(alphaForSigma);
    sigmas.forEach((sigma, i) => {
      expect(nearestTimestep(schedule, sigma)).toBe(i);
    });
  });
});
