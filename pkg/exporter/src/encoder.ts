/**
 * Embedding backends.  The engine only sees unit-norm float32 rows, so any
 * backend that produces those is interchangeable; the stub exists to exercise
 * the full export path (and the downstream engine) without model weights.
 */

import * as fs from "node:fs";

import { gaussianVector, hash32, mulberry32, normalize } from "./rng.js";

export interface Encoder {
  readonly dim: number;
  /** Unit-norm embedding of one image file. */
  encodeImage(filePath: string, label: string): Promise<Float32Array>;
  /** Unit-norm embedding of one text prompt. */
  encodeText(prompt: string): Promise<Float32Array>;
}

export interface StubOptions {
  dim?: number;
  /** Spread of image embeddings around their class anchor. */
  spread?: number;
  /** Offset of the text embedding from the class anchor. */
  textOffset?: number;
}

function anchorFor(label: string, dim: number): Float32Array {
  return gaussianVector(dim, mulberry32(hash32(`anchor|${label}`)));
}

/**
 * Deterministic stand-in for a real image/text tower: every class gets a
 * random unit anchor keyed by its label, images scatter around the anchor
 * seeded by their file bytes, and the text prompt lands near the same anchor.
 * Same inputs, same bytes out, on every machine.
 */
export class StubEncoder implements Encoder {
  readonly dim: number;
  private readonly spread: number;
  private readonly textOffset: number;

  constructor(opts: StubOptions = {}) {
    this.dim = opts.dim ?? 64;
    this.spread = opts.spread ?? 0.15;
    this.textOffset = opts.textOffset ?? 0.1;
  }

  async encodeImage(filePath: string, label: string): Promise<Float32Array> {
    const content = fs.readFileSync(filePath);
    const anchor = anchorFor(label, this.dim);
    const jitter = gaussianVector(this.dim, mulberry32(hash32(content)));
    const mixed = new Float32Array(this.dim);
    for (let i = 0; i < this.dim; i++) {
      mixed[i] = anchor[i]! + this.spread * jitter[i]!;
    }
    return normalize(mixed);
  }

  async encodeText(prompt: string): Promise<Float32Array> {
    // the prompt embeds the label, so prompts for the same class agree
    const anchor = anchorFor(promptLabel(prompt), this.dim);
    const jitter = gaussianVector(this.dim, mulberry32(hash32(`text|${prompt}`)));
    const mixed = new Float32Array(this.dim);
    for (let i = 0; i < this.dim; i++) {
      mixed[i] = anchor[i]! + this.textOffset * jitter[i]!;
    }
    return normalize(mixed);
  }
}

export const PROMPT_TEMPLATE = "A photo of a {label}";

export function promptFor(label: string): string {
  return PROMPT_TEMPLATE.replace("{label}", label);
}

function promptLabel(prompt: string): string {
  const prefix = PROMPT_TEMPLATE.split("{label}")[0]!;
  return prompt.startsWith(prefix) ? prompt.slice(prefix.length) : prompt;
}
