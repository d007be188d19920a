/**
 * Real CLIP backend over @huggingface/transformers, loaded lazily so the
 * package installs and tests with no model runtime present.  All model
 * dependencies live here; nothing else imports the library.
 */

import { Encoder } from "./encoder.js";
import { ExporterError } from "./errors.js";
import { normalize } from "./rng.js";

const RUNTIME_MODULE = "@huggingface/transformers";

interface ClipRuntime {
  tokenizer: any;
  textModel: any;
  processor: any;
  visionModel: any;
  RawImage: any;
}

async function loadRuntime(modelName: string): Promise<ClipRuntime> {
  let mod: any;
  try {
    mod = await import(RUNTIME_MODULE);
  } catch (err) {
    throw new ExporterError(
      "MODEL_LOAD_FAILURE",
      `${RUNTIME_MODULE} is not installed (${String(err)}); ` +
        `install it or use --model stub`,
    );
  }
  try {
    const [tokenizer, textModel, processor, visionModel] = await Promise.all([
      mod.AutoTokenizer.from_pretrained(modelName),
      mod.CLIPTextModelWithProjection.from_pretrained(modelName),
      mod.AutoProcessor.from_pretrained(modelName),
      mod.CLIPVisionModelWithProjection.from_pretrained(modelName),
    ]);
    return { tokenizer, textModel, processor, visionModel, RawImage: mod.RawImage };
  } catch (err) {
    throw new ExporterError(
      "MODEL_LOAD_FAILURE",
      `cannot load weights for ${modelName}: ${String(err)}`,
    );
  }
}

class ClipEncoder implements Encoder {
  readonly dim: number;
  private readonly rt: ClipRuntime;

  constructor(rt: ClipRuntime, dim: number) {
    this.rt = rt;
    this.dim = dim;
  }

  async encodeImage(filePath: string): Promise<Float32Array> {
    const image = await this.rt.RawImage.read(filePath);
    const inputs = await this.rt.processor(image);
    const { image_embeds } = await this.rt.visionModel(inputs);
    return normalize(Float32Array.from(image_embeds.data));
  }

  async encodeText(prompt: string): Promise<Float32Array> {
    const inputs = this.rt.tokenizer([prompt], { padding: true, truncation: true });
    const { text_embeds } = await this.rt.textModel(inputs);
    return normalize(Float32Array.from(text_embeds.data));
  }
}

export async function loadClipEncoder(modelName: string): Promise<Encoder> {
  const rt = await loadRuntime(modelName);
  const probe = await new ClipEncoder(rt, 0).encodeText("probe");
  return new ClipEncoder(rt, probe.length);
}
