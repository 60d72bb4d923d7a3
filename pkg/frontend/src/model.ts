// Pipeline model: a cascade of op stages whose parameter distributions are
// edited with sliders, re-serialized to DSL text in the backend's canonical
// form. Sliders edit distribution bounds (the regiment), never sampled
// values; rerolling the seed explores draws.

export type DistJson =
  | { dist: "uniform"; lo: number; hi: number }
  | { dist: "bernoulli"; p: number }
  | { dist: "categorical"; weights: number[] }
  | { dist: "constant"; value: number };

export interface CatalogParam {
  name: string;
  label: string;
  lo: number;
  hi: number;
  default: DistJson;
}

export interface CatalogOp {
  name: string;
  kind: "dorsal" | "ventral";
  params: CatalogParam[];
}

export interface Catalog {
  ops: CatalogOp[];
  presets: string[];
}

export interface Stage {
  op: string;
  dists: DistJson[]; // parallel to the op's schema params, schema order
}

// Mirrors the backend's number formatting: integers print bare, everything
// else uses the shortest round-trip decimal, which String() already is.
export function formatNumber(v: number): string {
  if (Number.isInteger(v) && Math.abs(v) < 1e15) {
    return String(v);
  }
  return String(v);
}

export function formatDist(d: DistJson): string {
  switch (d.dist) {
    case "uniform":
      return `U(${formatNumber(d.lo)},${formatNumber(d.hi)})`;
    case "bernoulli":
      return `B(${formatNumber(d.p)})`;
    case "categorical":
      return `C(${d.weights.map(formatNumber).join(",")})`;
    case "constant":
      return formatNumber(d.value);
  }
}

function cloneDist(d: DistJson): DistJson {
  return d.dist === "categorical" ? { dist: "categorical", weights: [...d.weights] } : { ...d };
}

const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));

export class UiPipelineModel {
  stages: Stage[] = [];
  seed = 0;
  gridSize = 1;
  // The DSL buffer; when the user hand-edits it, it takes precedence over
  // the stage tree until a stage edit regenerates it.
  text = "identity";
  textDirty = false;

  private byName = new Map<string, CatalogOp>();

  constructor(readonly catalog: Catalog) {
    for (const op of catalog.ops) {
      this.byName.set(op.name, op);
    }
  }

  op(name: string): CatalogOp {
    const op = this.byName.get(name);
    if (!op) {
      throw new Error(`unknown op ${name}`);
    }
    return op;
  }

  addStage(opName: string): Stage {
    const op = this.op(opName);
    const stage: Stage = { op: opName, dists: op.params.map((p) => cloneDist(p.default)) };
    this.stages.push(stage);
    this.syncTextFromStages();
    return stage;
  }

  removeStage(index: number): void {
    this.stages.splice(index, 1);
    this.syncTextFromStages();
  }

  moveStage(index: number, delta: number): void {
    const target = index + delta;
    if (target < 0 || target >= this.stages.length) {
      return;
    }
    const [stage] = this.stages.splice(index, 1);
    this.stages.splice(target, 0, stage);
    this.syncTextFromStages();
  }

  /** Slider edit of a Uniform bound; values clamp to the schema range and
   * the pair stays ordered. */
  setUniformBound(stage: Stage, paramIndex: number, which: "lo" | "hi", value: number): void {
    const schema = this.op(stage.op).params[paramIndex];
    const dist = stage.dists[paramIndex];
    if (dist.dist !== "uniform") {
      return;
    }
    value = clamp(value, schema.lo, schema.hi);
    if (which === "lo") {
      dist.lo = Math.min(value, dist.hi);
    } else {
      dist.hi = Math.max(value, dist.lo);
    }
    this.syncTextFromStages();
  }

  setConstant(stage: Stage, paramIndex: number, value: number): void {
    const schema = this.op(stage.op).params[paramIndex];
    stage.dists[paramIndex] = { dist: "constant", value: clamp(value, schema.lo, schema.hi) };
    this.syncTextFromStages();
  }

  setBernoulli(stage: Stage, paramIndex: number, p: number): void {
    stage.dists[paramIndex] = { dist: "bernoulli", p: clamp(p, 0, 1) };
    this.syncTextFromStages();
  }

  /** Canonical DSL for the stage tree (matches the backend formatter). */
  toDsl(): string {
    if (this.stages.length === 0) {
      return "identity";
    }
    const leaves = this.stages.map((stage) => {
      const op = this.op(stage.op);
      const args = op.params
        .map((p, i) => `${p.name}=${formatDist(stage.dists[i])}`)
        .join(", ");
      return `${stage.op}(${args})`;
    });
    return leaves.join(" | ");
  }

  /** The text the next preview should run. */
  pipelineText(): string {
    return this.textDirty ? this.text : this.toDsl();
  }

  private syncTextFromStages(): void {
    this.textDirty = false;
    this.text = this.toDsl();
  }

  /** Hand edit of the buffer: stages pause until the next stage edit. */
  setText(text: string): void {
    this.text = text;
    this.textDirty = true;
  }

  adoptPreset(source: string): void {
    this.stages = [];
    this.setText(source.trim());
  }

  /** Canonical echo from a successful preview. Never touches slider state;
   * for slider-built pipelines the echo must match what the sliders
   * regenerate, which keeps text and tree from diverging. */
  applyCanonicalEcho(canonical: string): void {
    if (this.textDirty) {
      this.text = canonical;
    } else if (canonical !== this.toDsl()) {
      // Divergence means the backend normalized something the stage
      // formatter missed; adopt the canonical text but keep sliders intact.
      this.text = canonical;
    }
  }

  rerollSeed(): void {
    this.seed += 1;
  }
}
