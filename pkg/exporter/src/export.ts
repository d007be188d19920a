/**
 * Dataset walkers that feed an encoder and emit the engine's file layouts.
 *
 * A dataset is a directory tree `root/split/className/files...`; class names
 * are the directory names, sorted, and files are visited in sorted order so
 * exports are reproducible.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { Encoder, promptFor } from "./encoder.js";
import { ExporterError } from "./errors.js";
import { EmbeddingRecord, writeEmbeddings } from "./format.js";
import { noisySamples } from "./noise.js";
import { hash32, mulberry32 } from "./rng.js";

export const POOL_FEATURES = "features.lefc";
export const POOL_TEXT = "text.lefc";
export const EPISODE_SUPPORT = "support.lefc";
export const EPISODE_QUERIES = "queries.lefc";
export const NOISY_SAMPLES = "noisy.lefc";

export interface DatasetClass {
  label: string;
  files: string[];
}

export function scanDataset(datasetDir: string, split: string): DatasetClass[] {
  const splitDir = path.join(datasetDir, split);
  let classNames: string[];
  try {
    classNames = fs
      .readdirSync(splitDir, { withFileTypes: true })
      .filter((e) => e.isDirectory())
      .map((e) => e.name)
      .sort();
  } catch (err) {
    throw new ExporterError("IO_FAILURE", `cannot scan ${splitDir}: ${String(err)}`);
  }
  if (classNames.length === 0) {
    throw new ExporterError("IO_FAILURE", `no class directories under ${splitDir}`);
  }
  return classNames.map((label) => {
    const classDir = path.join(splitDir, label);
    const files = fs
      .readdirSync(classDir, { withFileTypes: true })
      .filter((e) => e.isFile())
      .map((e) => path.join(classDir, e.name))
      .sort();
    if (files.length === 0) {
      throw new ExporterError("IO_FAILURE", `class ${label} has no files`);
    }
    return { label, files };
  });
}

async function encodeClassImages(
  encoder: Encoder,
  cls: DatasetClass,
  files: string[],
): Promise<EmbeddingRecord[]> {
  const out: EmbeddingRecord[] = [];
  for (const file of files) {
    out.push({ label: cls.label, values: await encoder.encodeImage(file, cls.label) });
  }
  return out;
}

async function textRecords(encoder: Encoder, classes: DatasetClass[]): Promise<EmbeddingRecord[]> {
  const out: EmbeddingRecord[] = [];
  for (const cls of classes) {
    out.push({ label: cls.label, values: await encoder.encodeText(promptFor(cls.label)) });
  }
  return out;
}

export interface PoolExport {
  classes: string[];
  imageCount: number;
}

/** Whole-split pool: every image labeled, one prompt embedding per class. */
export async function exportPool(
  datasetDir: string,
  split: string,
  encoder: Encoder,
  outDir: string,
): Promise<PoolExport> {
  const classes = scanDataset(datasetDir, split);
  const features: EmbeddingRecord[] = [];
  for (const cls of classes) {
    features.push(...(await encodeClassImages(encoder, cls, cls.files)));
  }
  const text = await textRecords(encoder, classes);
  fs.mkdirSync(outDir, { recursive: true });
  writeEmbeddings(features, path.join(outDir, POOL_FEATURES));
  writeEmbeddings(text, path.join(outDir, POOL_TEXT));
  return { classes: classes.map((c) => c.label), imageCount: features.length };
}

export interface EpisodeExport {
  classes: string[];
  shots: number;
  queriesPerClass: number;
}

/** One ready-to-certify episode: first `shots` files per class become the
 *  support set, the next `queriesPerClass` become labeled queries. */
export async function exportEpisode(
  datasetDir: string,
  split: string,
  encoder: Encoder,
  outDir: string,
  shots: number,
  queriesPerClass: number,
): Promise<EpisodeExport> {
  if (shots < 1 || queriesPerClass < 1) {
    throw new ExporterError("CONFIG_INVALID", "shots and queries must be at least 1");
  }
  const classes = scanDataset(datasetDir, split);
  const support: EmbeddingRecord[] = [];
  const queries: EmbeddingRecord[] = [];
  for (const cls of classes) {
    const needed = shots + queriesPerClass;
    if (cls.files.length < needed) {
      throw new ExporterError(
        "CONFIG_INVALID",
        `class ${cls.label} has ${cls.files.length} files, episode needs ${needed}`,
      );
    }
    support.push(...(await encodeClassImages(encoder, cls, cls.files.slice(0, shots))));
    queries.push(
      ...(await encodeClassImages(encoder, cls, cls.files.slice(shots, needed))),
    );
  }
  const text = await textRecords(encoder, classes);
  fs.mkdirSync(outDir, { recursive: true });
  writeEmbeddings(support, path.join(outDir, EPISODE_SUPPORT));
  writeEmbeddings(text, path.join(outDir, POOL_TEXT));
  writeEmbeddings(queries, path.join(outDir, EPISODE_QUERIES));
  return { classes: classes.map((c) => c.label), shots, queriesPerClass };
}

export interface NoisyExport {
  classes: string[];
  imageCount: number;
  samplesPerImage: number;
}

/**
 * Noisy sample sets for the smoothing path: per image, n unit-norm samples of
 * embedding + sigma * noise, grouped consecutively under the image's label.
 * The denoised flag marks exports that went through a denoising model; the
 * stub has none, so it only tags the file.
 */
export async function exportNoisy(
  datasetDir: string,
  split: string,
  encoder: Encoder,
  outDir: string,
  sigma: number,
  nNoise: number,
  denoise: boolean,
): Promise<NoisyExport> {
  const classes = scanDataset(datasetDir, split);
  const records: EmbeddingRecord[] = [];
  let imageCount = 0;
  for (const cls of classes) {
    for (const file of cls.files) {
      const base = await encoder.encodeImage(file, cls.label);
      const rng = mulberry32(hash32(`noise|${cls.label}|${path.basename(file)}`));
      for (const sample of noisySamples(base, sigma, nNoise, rng)) {
        records.push({ label: cls.label, values: sample });
      }
      imageCount += 1;
    }
  }
  fs.mkdirSync(outDir, { recursive: true });
  writeEmbeddings(records, path.join(outDir, NOISY_SAMPLES), {
    normalized: true,
    noisy: true,
    denoised: denoise,
  });
  return { classes: classes.map((c) => c.label), imageCount, samplesPerImage: nNoise };
}
