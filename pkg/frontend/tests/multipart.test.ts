import { readFileSync } from "node:fs";
import { createHash } from "node:crypto";
import { describe, expect, it } from "vitest";

import { assemblePreview } from "../src/api.js";
import { boundaryFromContentType, parseMultipart } from "../src/multipart.js";

const fixture = (name: string): Uint8Array =>
  new Uint8Array(readFileSync(new URL(`./fixtures/${name}`, import.meta.url)));

const meta = JSON.parse(
  readFileSync(new URL("./fixtures/meta.json", import.meta.url), "utf-8"),
) as Record<string, string>;

const sha = (data: Uint8Array) => createHash("sha256").update(data).digest("hex");

describe("multipart parsing of real service responses", () => {
  it("extracts boundary from the content type", () => {
    expect(boundaryFromContentType("multipart/mixed; boundary=pbdeadbeef")).toBe("pbdeadbeef");
    expect(() => boundaryFromContentType("text/plain")).toThrow(/boundary/);
  });

  it("identity preview: augmented part is byte-equal to the upload", () => {
    const parts = parseMultipart(fixture("identity.multipart"), meta.identity_content_type);
    expect([...parts.keys()].sort()).toEqual(["augmented", "params", "validity"]);
    const augmented = parts.get("augmented")!;
    expect(augmented.contentType).toBe("image/png");
    expect(sha(augmented.data)).toBe(sha(fixture("upload.png")));
  });

  it("identity preview: params part carries the canonical echo", () => {
    const parts = parseMultipart(fixture("identity.multipart"), meta.identity_content_type);
    const doc = JSON.parse(new TextDecoder().decode(parts.get("params")!.data));
    expect(doc.canonical).toBe("identity");
    expect(doc.seed).toBe(5);
  });

  it("grid previews expose one panel per seed", () => {
    const parts = parseMultipart(fixture("grid2.multipart"), meta.grid2_content_type);
    const result = assemblePreview(parts, 9, 2);
    expect(result.panels).toHaveLength(2);
    expect(result.panels.map((p) => p.seed)).toEqual([9, 10]);
    // Canonical text keeps only the explicitly given arguments.
    expect(result.canonical).toBe("plasma_warp(strength=U(1,6))");
    expect(sha(result.panels[0].augmented.data)).not.toBe(sha(result.panels[1].augmented.data));
    for (const panel of result.panels) {
      expect(panel.validity).not.toBeNull();
      expect(panel.augmented.data.slice(0, 8)).toEqual(
        new Uint8Array([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
      );
    }
  });

  it("slider-built pipelines echo back exactly what the model formats", () => {
    const parts = parseMultipart(fixture("sliders.multipart"), meta.sliders_content_type);
    const doc = JSON.parse(new TextDecoder().decode(parts.get("params")!.data));
    expect(doc.canonical).toBe(meta.sliders_pipeline);
  });
});
