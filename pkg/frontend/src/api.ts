// Typed client for the preview service. Every pixel the UI shows comes
// through here; the UI itself never computes augmentations.

import type { Catalog } from "./model.js";
import { Part, parseMultipart } from "./multipart.js";

export class DslDiagnostic extends Error {
  constructor(
    message: string,
    readonly line: number | null,
    readonly col: number | null,
    readonly kind: string,
  ) {
    super(message);
  }
}

export interface PreviewRequest {
  pipeline: string;
  imageId: string;
  seed: number;
  grid?: number;
}

export interface PreviewPanel {
  seed: number;
  augmented: Part;
  validity: Part | null;
  mask: Part | null;
  applied: unknown;
}

export interface PreviewResult {
  canonical: string;
  panels: PreviewPanel[];
}

interface ErrorBody {
  error?: { message?: string; line?: number; col?: number; kind?: string };
}

export class ServiceClient {
  constructor(
    private readonly base = "",
    private readonly fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async errorFrom(resp: Response): Promise<Error> {
    let body: ErrorBody = {};
    try {
      body = (await resp.json()) as ErrorBody;
    } catch {
      /* non-JSON error body */
    }
    const err = body.error ?? {};
    const message = err.message ?? `request failed with status ${resp.status}`;
    if (resp.status === 422) {
      return new DslDiagnostic(message, err.line ?? null, err.col ?? null, err.kind ?? "PipelineError");
    }
    return new Error(message);
  }

  async fetchCatalog(): Promise<Catalog> {
    const resp = await this.fetchFn(`${this.base}/catalog`);
    if (!resp.ok) {
      throw await this.errorFrom(resp);
    }
    return (await resp.json()) as Catalog;
  }

  async fetchPreset(name: string): Promise<string> {
    const resp = await this.fetchFn(`${this.base}/presets/${name}`);
    if (!resp.ok) {
      throw await this.errorFrom(resp);
    }
    return await resp.text();
  }

  async uploadImage(data: ArrayBuffer | Blob): Promise<{ id: string; width: number; height: number }> {
    const resp = await this.fetchFn(`${this.base}/images`, {
      method: "POST",
      headers: { "content-type": "image/png" },
      body: data,
    });
    if (!resp.ok) {
      throw await this.errorFrom(resp);
    }
    return (await resp.json()) as { id: string; width: number; height: number };
  }

  async preview(req: PreviewRequest): Promise<PreviewResult> {
    const resp = await this.fetchFn(`${this.base}/preview`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        pipeline: req.pipeline,
        image_id: req.imageId,
        seed: req.seed,
        grid: req.grid ?? null,
      }),
    });
    if (!resp.ok) {
      throw await this.errorFrom(resp);
    }
    const contentType = resp.headers.get("content-type") ?? "";
    const parts = parseMultipart(new Uint8Array(await resp.arrayBuffer()), contentType);
    return assemblePreview(parts, req.seed, req.grid ?? 1);
  }
}

const jsonText = (part: Part) => new TextDecoder().decode(part.data);

export function assemblePreview(parts: Map<string, Part>, seed: number, grid: number): PreviewResult {
  const panels: PreviewPanel[] = [];
  let canonical = "";
  for (let i = 0; i < grid; i++) {
    const suffix = grid > 1 ? `-${i}` : "";
    const augmented = parts.get(`augmented${suffix}`);
    const params = parts.get(`params${suffix}`);
    if (!augmented || !params) {
      throw new Error(`preview response missing panel ${i}`);
    }
    const doc = JSON.parse(jsonText(params)) as { seed: number; canonical: string; applied: unknown };
    canonical = doc.canonical;
    panels.push({
      seed: doc.seed,
      augmented,
      validity: parts.get(`validity${suffix}`) ?? null,
      mask: parts.get(`mask${suffix}`) ?? null,
      applied: doc.applied,
    });
  }
  return { canonical, panels };
}
