export { ExporterError, type ErrorCode } from "./errors.js";
export {
  EPISODE_QUERIES,
  EPISODE_SUPPORT,
  NOISY_SAMPLES,
  POOL_FEATURES,
  POOL_TEXT,
  exportEpisode,
  exportNoisy,
  exportPool,
  scanDataset,
  type DatasetClass,
  type EpisodeExport,
  type NoisyExport,
  type PoolExport,
} from "./export.js";
export {
  FLAG_DENOISED,
  FLAG_NOISY,
  FLAG_NORMALIZED,
  MAGIC,
  VERSION,
  decodeEmbeddings,
  encodeEmbeddings,
  readEmbeddings,
  writeEmbeddings,
  type EmbeddingFileData,
  type EmbeddingRecord,
  type WriteFlags,
} from "./format.js";
export { PROMPT_TEMPLATE, StubEncoder, promptFor, type Encoder, type StubOptions } from "./encoder.js";
export { loadClipEncoder } from "./clip.js";
export { alphaForSigma, nearestTimestep, noisySamples } from "./noise.js";
export { gaussian, gaussianVector, hash32, mulberry32, normalize, type Rng } from "./rng.js";
