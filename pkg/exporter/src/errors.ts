/** Typed failures; every message renders as "CODE: detail". */

export type ErrorCode =
  | "BAD_MAGIC"
  | "VERSION_UNSUPPORTED"
  | "TRUNCATED"
  | "TRAILING_BYTES"
  | "NORM_VIOLATION"
  | "SHAPE_MISMATCH"
  | "MODEL_LOAD_FAILURE"
  | "IO_FAILURE"
  | "CONFIG_INVALID";

const FILE_CODES: ReadonlySet<ErrorCode> = new Set([
  "BAD_MAGIC",
  "VERSION_UNSUPPORTED",
  "TRUNCATED",
  "TRAILING_BYTES",
  "IO_FAILURE",
]);

export class ExporterError extends Error {
  readonly code: ErrorCode;
  /** 1 for config/data problems, 2 for file problems. */
  readonly exitCode: number;

  constructor(code: ErrorCode, detail: string) {
    super(`${code}: ${detail}`);
    this.name = "ExporterError";
    this.code = code;
    this.exitCode = FILE_CODES.has(code) ? 2 : 1;
  }
}
