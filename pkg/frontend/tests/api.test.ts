import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { DslDiagnostic, ServiceClient } from "../src/api.js";

const fixture = (name: string): Uint8Array =>
  new Uint8Array(readFileSync(new URL(`./fixtures/${name}`, import.meta.url)));

const meta = JSON.parse(
  readFileSync(new URL("./fixtures/meta.json", import.meta.url), "utf-8"),
) as Record<string, string>;

const error422 = readFileSync(new URL("./fixtures/error422.json", import.meta.url), "utf-8");

function fakeFetch(routes: Record<string, () => Response>): typeof fetch {
  return (async (input: RequestInfo | URL) => {
    const url = typeof input === "string" ? input : input.toString();
    const route = routes[url];
    if (!route) {
      throw new Error(`unrouted fetch: ${url}`);
    }
    return route();
  }) as typeof fetch;
}

describe("ServiceClient", () => {
  it("fetches and types the catalog", async () => {
    const client = new ServiceClient(
      "",
      fakeFetch({
        "/catalog": () =>
          new Response(readFileSync(new URL("./fixtures/catalog.json", import.meta.url), "utf-8"), {
            headers: { "content-type": "application/json" },
          }),
      }),
    );
    const catalog = await client.fetchCatalog();
    expect(catalog.presets).toEqual(["global", "plasma_cascade", "plasma_branching"]);
    expect(catalog.ops.some((op) => op.name === "plasma_warp" && op.kind === "ventral")).toBe(true);
  });

  it("maps 422 bodies to positioned diagnostics", async () => {
    const client = new ServiceClient(
      "",
      fakeFetch({
        "/preview": () =>
          new Response(error422, { status: 422, headers: { "content-type": "application/json" } }),
      }),
    );
    const err = await client
      .preview({ pipeline: "plasma_warp(strength=U(0,", imageId: "img-1", seed: 0 })
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(DslDiagnostic);
    const diag = err as DslDiagnostic;
    expect(diag.line).toBe(1);
    expect(typeof diag.col).toBe("number");
    expect(diag.message).toMatch(/expected/);
  });

  it("parses a real preview response end to end", async () => {
    const client = new ServiceClient(
      "",
      fakeFetch({
        "/preview": () =>
          new Response(fixture("identity.multipart"), {
            headers: { "content-type": meta.identity_content_type },
          }),
      }),
    );
    const result = await client.preview({ pipeline: "identity", imageId: "img-1", seed: 5 });
    expect(result.canonical).toBe("identity");
    expect(result.panels).toHaveLength(1);
    expect(result.panels[0].validity).not.toBeNull();
  });

  it("upload failures surface the service reason", async () => {
    const client = new ServiceClient(
      "",
      fakeFetch({
        "/images": () =>
          new Response(JSON.stringify({ error: { message: "not a decodable PNG: bad" } }), {
            status: 400,
            headers: { "content-type": "application/json" },
          }),
      }),
    );
    await expect(client.uploadImage(new Uint8Array([1, 2, 3]).buffer)).rejects.toThrow(/PNG/);
  });
});
