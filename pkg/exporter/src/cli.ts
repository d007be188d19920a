#!/usr/bin/env node
/**
 * lefcert-export <pool|episode|noisy> --dataset DIR --split NAME --out DIR
 *
 * pool     features.lefc + text.lefc for a whole split
 * episode  support.lefc + text.lefc + queries.lefc, ready for `lefcert certify`
 * noisy    noisy.lefc sample sets for the smoothing path
 *
 * --model stub (default) needs no weights; any other value is loaded as a
 * CLIP checkpoint name.  Exit codes: 1 config/data, 2 file errors.
 */

import { parseArgs } from "node:util";

import { loadClipEncoder } from "./clip.js";
import { Encoder, StubEncoder } from "./encoder.js";
import { ExporterError } from "./errors.js";
import { exportEpisode, exportNoisy, exportPool } from "./export.js";

interface Flags {
  dataset: string;
  split: string;
  out: string;
  model: string;
  dim: number;
  shots: number;
  queries: number;
  sigma: number;
  n: number;
  denoise: boolean;
}

function parsed(argv: string[]): { command: string; flags: Flags } {
  let values: {
    dataset?: string;
    split?: string;
    out?: string;
    model?: string;
    dim?: string;
    shots?: string;
    queries?: string;
    sigma?: string;
    n?: string;
    denoise?: boolean;
  };
  let positionals: string[];
  try {
    ({ values, positionals } = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        dataset: { type: "string" },
        split: { type: "string", default: "train" },
        out: { type: "string" },
        model: { type: "string", default: "stub" },
        dim: { type: "string", default: "64" },
        shots: { type: "string", default: "10" },
        queries: { type: "string", default: "1" },
        sigma: { type: "string", default: "1.0" },
        n: { type: "string", default: "1000" },
        denoise: { type: "boolean", default: false },
      },
    }));
  } catch (err) {
    throw new ExporterError("CONFIG_INVALID", String((err as Error).message ?? err));
  }
  const command = positionals[0];
  if (!command || !["pool", "episode", "noisy"].includes(command)) {
    throw new ExporterError("CONFIG_INVALID", "command must be pool, episode, or noisy");
  }
  if (!values.dataset || !values.out) {
    throw new ExporterError("CONFIG_INVALID", "--dataset and --out are required");
  }
  const num = (name: string, raw: string): number => {
    const v = Number(raw);
    if (!Number.isFinite(v)) {
      throw new ExporterError("CONFIG_INVALID", `--${name} is not a number: ${raw}`);
    }
    return v;
  };
  return {
    command,
    flags: {
      dataset: values.dataset,
      split: values.split!,
      out: values.out,
      model: values.model!,
      dim: num("dim", values.dim!),
      shots: num("shots", values.shots!),
      queries: num("queries", values.queries!),
      sigma: num("sigma", values.sigma!),
      n: num("n", values.n!),
      denoise: values.denoise!,
    },
  };
}

async function buildEncoder(flags: Flags): Promise<Encoder> {
  if (flags.model === "stub") {
    return new StubEncoder({ dim: flags.dim });
  }
  return loadClipEncoder(flags.model);
}

export async function main(argv: string[]): Promise<number> {
  try {
    const { command, flags } = parsed(argv);
    const encoder = await buildEncoder(flags);
    if (command === "pool") {
      const res = await exportPool(flags.dataset, flags.split, encoder, flags.out);
      console.log(
        `exported ${res.imageCount} embeddings over ${res.classes.length} classes -> ${flags.out}`,
      );
    } else if (command === "episode") {
      const res = await exportEpisode(
        flags.dataset, flags.split, encoder, flags.out, flags.shots, flags.queries,
      );
      console.log(
        `exported ${res.classes.length}-way ${res.shots}-shot episode ` +
          `(${res.queriesPerClass} queries/class) -> ${flags.out}`,
      );
    } else {
      const res = await exportNoisy(
        flags.dataset, flags.split, encoder, flags.out, flags.sigma, flags.n, flags.denoise,
      );
      console.log(
        `exported ${res.samplesPerImage} noisy samples for each of ` +
          `${res.imageCount} images -> ${flags.out}`,
      );
    }
    return 0;
  } catch (err) {
    if (err instanceof ExporterError) {
      console.error(err.message);
      return err.exitCode;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
