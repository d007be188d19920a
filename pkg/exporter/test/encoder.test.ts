import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import { PROMPT_TEMPLATE, StubEncoder, promptFor } from "../src/encoder.js";

const tmpDir = fs.mkdtempSync(path.join(os.tmpdir(), "lefc-encoder-"));
afterAll(() => fs.rmSync(tmpDir, { recursive: true, force: true }));

function fileWith(name: string, content: string): string {
  const p = path.join(tmpDir, name);
  fs.writeFileSync(p, content);
  return p;
}

function dot(a: Float32Array, b: Float32Array): number {
  let s = 0;
  for (let i = 0; i < a.length; i++) s += a[i]! * b[i]!;
  return s;
}

describe("prompt template", () => {
  it("fills in the label", () => {
    expect(promptFor("dog")).toBe("A photo of a dog");
    expect(PROMPT_TEMPLATE).toContain("{label}");
  });
});

describe("StubEncoder", () => {
  const enc = new StubEncoder({ dim: 32 });

  it("emits unit vectors of the configured width", async () => {
    const v = await enc.encodeImage(fileWith("a.bin", "payload-a"), "cat");
    expect(v.length).toBe(32);
    expect(Math.sqrt(dot(v, v))).toBeCloseTo(1, 6);
  });

  it("is deterministic in file bytes and label", async () => {
    const p = fileWith("b.bin", "payload-b");
    const v1 = await enc.encodeImage(p, "cat");
    const v2 = await enc.encodeImage(p, "cat");
    expect(Array.from(v1)).toEqual(Array.from(v2));
  });

  it("clusters a class tighter than the space", async () => {
    const catA = await enc.encodeImage(fileWith("c1.bin", "one"), "cat");
    const catB = await enc.encodeImage(fileWith("c2.bin", "two"), "cat");
    const dogA = await enc.encodeImage(fileWith("d1.bin", "three"), "dog");
    expect(dot(catA, catB)).toBeGreaterThan(dot(catA, dogA) + 0.3);
  });

  it("puts the prompt embedding near its class images", async () => {
    const img = await enc.encodeImage(fileWith("e1.bin", "four"), "owl");
    const ownText = await enc.encodeText(promptFor("owl"));
    const otherText = await enc.encodeText(promptFor("lamp"));
    expect(dot(img, ownText)).toBeGreaterThan(dot(img, otherText) + 0.3);
  });

  it("keeps text embeddings stable per label", async () => {
    const a = await enc.encodeText(promptFor("fox"));
    const b = await enc.encodeText(promptFor("fox"));
    expect(Array.from(a)).toEqual(Array.from(b));
  });
});
