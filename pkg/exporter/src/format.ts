/**
 * The embedding container consumed by the certification engine.
 *
 * Layout, all integers little-endian:
 *
 *     magic   4 bytes  "LEFC"
 *     version u16      currently 1
 *     dim     u32      vector width
 *     count   u64      number of records
 *     flags   u16      bit 0 rows unit-norm, bit 1 noisy sample sets,
 *                      bit 2 denoised pipeline
 *     labels  count x (u16 length + UTF-8 bytes), zero length = unlabeled
 *     payload count x dim float32, row-major
 *
 * The writer is atomic (temp file + rename) and refuses empty files; the
 * reader rejects trailing garbage and re-checks row norms when the
 * normalized flag is set, rather than silently renormalizing.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { ExporterError } from "./errors.js";

export const MAGIC = "LEFC";
export const VERSION = 1;
export const FLAG_NORMALIZED = 1;
export const FLAG_NOISY = 2;
export const FLAG_DENOISED = 4;

const HEADER_BYTES = 20;
const ROW_NORM_TOL = 1e-5;

export interface EmbeddingRecord {
  label: string;
  values: Float32Array;
}

export interface EmbeddingFileData {
  records: EmbeddingRecord[];
  normalized: boolean;
  noisy: boolean;
  denoised: boolean;
}

export interface WriteFlags {
  normalized?: boolean;
  noisy?: boolean;
  denoised?: boolean;
}

function rowNorm(values: Float32Array): number {
  let s = 0;
  for (const v of values) s += v * v;
  return Math.sqrt(s);
}

export function encodeEmbeddings(
  records: EmbeddingRecord[],
  flags: WriteFlags = {},
): Buffer {
  const { normalized = true, noisy = false, denoised = false } = flags;
  if (records.length === 0) {
    throw new ExporterError("SHAPE_MISMATCH", "refusing to encode zero records");
  }
  const first = records[0]!;
  const dim = first.values.length;
  if (dim === 0) {
    throw new ExporterError("SHAPE_MISMATCH", "embedding width 0");
  }

  const labelBufs: Buffer[] = [];
  for (const rec of records) {
    if (rec.values.length !== dim) {
      throw new ExporterError(
        "SHAPE_MISMATCH",
        `record width ${rec.values.length} != ${dim}`,
      );
    }
    if (normalized) {
      const n = rowNorm(rec.values);
      if (Math.abs(n - 1) > ROW_NORM_TOL) {
        throw new ExporterError(
          "NORM_VIOLATION",
          `row norm ${n.toFixed(7)} outside 1 +/- ${ROW_NORM_TOL}`,
        );
      }
    }
    const raw = Buffer.from(rec.label, "utf8");
    if (raw.length > 0xffff) {
      throw new ExporterError("SHAPE_MISMATCH", `label longer than ${0xffff} bytes`);
    }
    const withLen = Buffer.alloc(2 + raw.length);
    withLen.writeUInt16LE(raw.length, 0);
    raw.copy(withLen, 2);
    labelBufs.push(withLen);
  }

  const header = Buffer.alloc(HEADER_BYTES);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt16LE(VERSION, 4);
  header.writeUInt32LE(dim, 6);
  header.writeBigUInt64LE(BigInt(records.length), 10);
  let flagBits = 0;
  if (normalized) flagBits |= FLAG_NORMALIZED;
  if (noisy) flagBits |= FLAG_NOISY;
  if (denoised) flagBits |= FLAG_DENOISED;
  header.writeUInt16LE(flagBits, 18);

  const payload = Buffer.alloc(records.length * dim * 4);
  records.forEach((rec, r) => {
    for (let i = 0; i < dim; i++) {
      payload.writeFloatLE(rec.values[i]!, (r * dim + i) * 4);
    }
  });

  return Buffer.concat([header, ...labelBufs, payload]);
}

export function writeEmbeddings(
  records: EmbeddingRecord[],
  outPath: string,
  flags: WriteFlags = {},
): void {
  const data = encodeEmbeddings(records, flags);
  const dir = path.dirname(outPath);
  const tmp = path.join(dir, `.${path.basename(outPath)}.tmp-${process.pid}`);
  try {
    fs.mkdirSync(dir, { recursive: true });
    fs.writeFileSync(tmp, data);
    fs.renameSync(tmp, outPath);
  } catch (err) {
    try {
      fs.rmSync(tmp, { force: true });
    } catch {
      /* best effort */
    }
    throw new ExporterError("IO_FAILURE", `cannot write ${outPath}: ${String(err)}`);
  }
}

export function decodeEmbeddings(raw: Buffer): EmbeddingFileData {
  if (raw.length < HEADER_BYTES) {
    throw new ExporterError("TRUNCATED", `file shorter than the ${HEADER_BYTES}-byte header`);
  }
  const magic = raw.subarray(0, 4).toString("ascii");
  if (magic !== MAGIC) {
    throw new ExporterError("BAD_MAGIC", `expected "${MAGIC}", found ${JSON.stringify(magic)}`);
  }
  const version = raw.readUInt16LE(4);
  if (version !== VERSION) {
    throw new ExporterError("VERSION_UNSUPPORTED", `version ${version}, reader supports ${VERSION}`);
  }
  const dim = raw.readUInt32LE(6);
  const countBig = raw.readBigUInt64LE(10);
  if (countBig > BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new ExporterError("TRUNCATED", `record count ${countBig} is not addressable`);
  }
  const count = Number(countBig);
  const flagBits = raw.readUInt16LE(18);

  let offset = HEADER_BYTES;
  const labels: string[] = [];
  for (let r = 0; r < count; r++) {
    if (offset + 2 > raw.length) {
      throw new ExporterError("TRUNCATED", `label table ends at record ${r}/${count}`);
    }
    const len = raw.readUInt16LE(offset);
    offset += 2;
    if (offset + len > raw.length) {
      throw new ExporterError("TRUNCATED", `label ${r} runs past end of file`);
    }
    labels.push(raw.subarray(offset, offset + len).toString("utf8"));
    offset += len;
  }

  const payloadBytes = count * dim * 4;
  if (raw.length - offset < payloadBytes) {
    throw new ExporterError(
      "TRUNCATED",
      `payload needs ${payloadBytes} bytes, ${raw.length - offset} remain`,
    );
  }
  if (raw.length - offset > payloadBytes) {
    throw new ExporterError(
      "TRAILING_BYTES",
      `${raw.length - offset - payloadBytes} bytes after the payload`,
    );
  }

  const normalized = (flagBits & FLAG_NORMALIZED) !== 0;
  const records: EmbeddingRecord[] = [];
  for (let r = 0; r < count; r++) {
    const values = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      values[i] = raw.readFloatLE(offset + (r * dim + i) * 4);
    }
    if (normalized) {
      const n = rowNorm(values);
      if (Math.abs(n - 1) > ROW_NORM_TOL) {
        throw new ExporterError(
          "NORM_VIOLATION",
          `row ${r} norm ${n.toFixed(7)} outside 1 +/- ${ROW_NORM_TOL}`,
        );
      }
    }
    records.push({ label: labels[r]!, values });
  }

  return {
    records,
    normalized,
    noisy: (flagBits & FLAG_NOISY) !== 0,
    denoised: (flagBits & FLAG_DENOISED) !== 0,
  };
}

export function readEmbeddings(filePath: string): EmbeddingFileData {
  let raw: Buffer;
  try {
    raw = fs.readFileSync(filePath);
  } catch (err) {
    throw new ExporterError("IO_FAILURE", `cannot read ${filePath}: ${String(err)}`);
  }
  return decodeEmbeddings(raw);
}
