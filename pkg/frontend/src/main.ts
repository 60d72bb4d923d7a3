// DOM wiring for the tuner: op palette on the left, pipeline text plus
// per-stage sliders in the middle, preview panels on the right.

import { DslDiagnostic, PreviewResult, ServiceClient } from "./api.js";
import { sha256Hex } from "./checksum.js";
import { PreviewLoop } from "./loop.js";
import { Catalog, CatalogParam, Stage, UiPipelineModel } from "./model.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
};

const client = new ServiceClient("");

let model: UiPipelineModel;
let imageId: string | null = null;
let originalUrl: string | null = null;
let originalDigest = "";

async function boot(): Promise<void> {
  const banner = $("banner");
  try {
    const catalog = await client.fetchCatalog();
    banner.hidden = true;
    start(catalog);
  } catch (err) {
    banner.hidden = false;
    banner.textContent = `service unreachable: ${String(err)} `;
    const retry = document.createElement("button");
    retry.textContent = "retry";
    retry.onclick = () => void boot();
    banner.appendChild(retry);
  }
}

function start(catalog: Catalog): void {
  model = new UiPipelineModel(catalog);
  renderPalette(catalog);
  renderPresets(catalog);
  renderStages();
  syncTextarea();

  $("pipeline-text").oninput = () => {
    model.setText(($("pipeline-text") as HTMLTextAreaElement).value);
    renderStages(); // stage cards pause while the text is hand-edited
    loop.schedule();
  };
  $("reroll").onclick = () => {
    model.rerollSeed();
    $("seed-label").textContent = `seed ${model.seed}`;
    loop.schedule();
  };
  ($("grid-size") as HTMLInputElement).oninput = () => {
    model.gridSize = Number(($("grid-size") as HTMLInputElement).value) || 1;
    loop.schedule();
  };
  $("download").onclick = downloadPipeline;
  ($("upload") as HTMLInputElement).onchange = () => void uploadChosenFile();
}

const loop = new PreviewLoop<PreviewResult>({
  run: () => {
    if (!imageId) {
      return Promise.reject(new Error("upload an image first"));
    }
    setStale(true);
    return client.preview({
      pipeline: model.pipelineText(),
      imageId,
      seed: model.seed,
      grid: model.gridSize > 1 ? model.gridSize : undefined,
    });
  },
  apply: (result) => {
    setStale(false);
    clearDiagnostic();
    model.applyCanonicalEcho(result.canonical);
    syncTextarea();
    void renderPanels(result);
  },
  fail: (error) => {
    if (error instanceof DslDiagnostic) {
      setStale(false);
      showDiagnostic(error);
    } else {
      setStale(true, String(error));
    }
  },
});

function renderPalette(catalog: Catalog): void {
  const palette = $("palette");
  palette.innerHTML = "";
  for (const op of catalog.ops) {
    const row = document.createElement("div");
    row.className = "palette-row";
    const badge = document.createElement("span");
    badge.className = `badge ${op.kind}`;
    badge.textContent = op.kind;
    const label = document.createElement("span");
    label.textContent = op.name;
    const add = document.createElement("button");
    add.textContent = "+";
    add.title = `add ${op.name} to the cascade`;
    add.onclick = () => {
      model.addStage(op.name);
      renderStages();
      syncTextarea();
      loop.schedule();
    };
    row.append(add, label, badge);
    palette.appendChild(row);
  }
}

function renderPresets(catalog: Catalog): void {
  const picker = $("presets") as HTMLSelectElement;
  picker.innerHTML = "<option value=''>preset...</option>";
  for (const name of catalog.presets) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    picker.appendChild(option);
  }
  picker.onchange = async () => {
    if (!picker.value) {
      return;
    }
    model.adoptPreset(await client.fetchPreset(picker.value));
    renderStages();
    syncTextarea();
    loop.schedule();
  };
}

function sliderPair(stage: Stage, index: number, schema: CatalogParam): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "param";
  const dist = stage.dists[index];
  const title = document.createElement("label");
  const step = (schema.hi - schema.lo) / 200 || 0.01;

  const mkRange = (value: number, oninput: (v: number) => void): HTMLInputElement => {
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(schema.lo);
    input.max = String(schema.hi);
    input.step = String(step);
    input.value = String(value);
    input.oninput = () => {
      oninput(Number(input.value));
      title.textContent = describe();
      syncTextarea();
      loop.schedule();
    };
    return input;
  };

  const describe = (): string => {
    const d = stage.dists[index];
    if (d.dist === "uniform") {
      return `${schema.name}: U(${d.lo.toFixed(3)}, ${d.hi.toFixed(3)})`;
    }
    if (d.dist === "bernoulli") {
      return `${schema.name}: B(${d.p.toFixed(2)})`;
    }
    if (d.dist === "constant") {
      return `${schema.name}: ${d.value.toFixed(3)}`;
    }
    return `${schema.name}: C(${d.weights.join(",")})`;
  };
  title.textContent = describe();
  title.title = schema.label;
  wrap.appendChild(title);

  if (dist.dist === "uniform") {
    wrap.appendChild(mkRange(dist.lo, (v) => model.setUniformBound(stage, index, "lo", v)));
    wrap.appendChild(mkRange(dist.hi, (v) => model.setUniformBound(stage, index, "hi", v)));
  } else if (dist.dist === "bernoulli") {
    wrap.appendChild(mkRange(dist.p, (v) => model.setBernoulli(stage, index, v)));
  } else if (dist.dist === "constant") {
    wrap.appendChild(mkRange(dist.value, (v) => model.setConstant(stage, index, v)));
  }
  return wrap;
}

function renderStages(): void {
  const host = $("stages");
  host.innerHTML = "";
  if (model.textDirty) {
    const note = document.createElement("p");
    note.className = "hint";
    note.textContent = "pipeline text is hand-edited; sliders resume when a stage is added";
    host.appendChild(note);
    return;
  }
  model.stages.forEach((stage, i) => {
    const card = document.createElement("div");
    card.className = "stage";
    const head = document.createElement("div");
    head.className = "stage-head";
    const title = document.createElement("strong");
    title.textContent = `${i + 1}. ${stage.op}`;
    const remove = document.createElement("button");
    remove.textContent = "x";
    remove.onclick = () => {
      model.removeStage(i);
      renderStages();
      syncTextarea();
      loop.schedule();
    };
    head.append(title, remove);
    card.appendChild(head);
    const op = model.op(stage.op);
    op.params.forEach((schema, j) => card.appendChild(sliderPair(stage, j, schema)));
    host.appendChild(card);
  });
}

function syncTextarea(): void {
  ($("pipeline-text") as HTMLTextAreaElement).value = model.pipelineText();
}

function showDiagnostic(err: DslDiagnostic): void {
  const box = $("diagnostic");
  box.hidden = false;
  const where = err.line !== null ? `line ${err.line}, col ${err.col}: ` : "";
  box.textContent = `${where}${err.message}`;
  const text = ($("pipeline-text") as HTMLTextAreaElement).value;
  const mirror = $("text-mirror");
  mirror.hidden = false;
  mirror.innerHTML = "";
  text.split("\n").forEach((lineText, idx) => {
    const line = document.createElement("div");
    line.textContent = lineText || " ";
    if (err.line !== null && idx + 1 === err.line) {
      line.className = "squiggle";
    }
    mirror.appendChild(line);
  });
}

function clearDiagnostic(): void {
  $("diagnostic").hidden = true;
  $("text-mirror").hidden = true;
}

function setStale(stale: boolean, reason = ""): void {
  const badge = $("stale");
  badge.hidden = !stale;
  badge.textContent = reason ? `stale: ${reason}` : "refreshing...";
}

async function uploadChosenFile(): Promise<void> {
  const input = $("upload") as HTMLInputElement;
  const file = input.files?.[0];
  if (!file) {
    return;
  }
  const bytes = await file.arrayBuffer();
  const uploaded = await client.uploadImage(bytes);
  imageId = uploaded.id;
  if (originalUrl) {
    URL.revokeObjectURL(originalUrl);
  }
  originalUrl = URL.createObjectURL(new Blob([bytes], { type: "image/png" }));
  originalDigest = await pixelDigest(originalUrl);
  $("original-meta").textContent = `${uploaded.width}x${uploaded.height}  pixels ${originalDigest.slice(0, 12)}`;
  ($("original") as HTMLImageElement).src = originalUrl;
  loop.dispatch();
}

/** Digest of decoded pixels, so re-encoded but identical images compare
 * equal. */
async function pixelDigest(url: string): Promise<string> {
  const img = new Image();
  img.src = url;
  await img.decode();
  const canvas = document.createElement("canvas");
  canvas.width = img.naturalWidth;
  canvas.height = img.naturalHeight;
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return "";
  }
  ctx.drawImage(img, 0, 0);
  const pixels = ctx.getImageData(0, 0, canvas.width, canvas.height).data;
  return sha256Hex(new Uint8Array(pixels.buffer));
}

async function renderPanels(result: PreviewResult): Promise<void> {
  const host = $("panels");
  host.innerHTML = "";
  for (const panel of result.panels) {
    const cell = document.createElement("figure");
    cell.className = "panel";
    const img = document.createElement("img");
    const url = URL.createObjectURL(new Blob([new Uint8Array(panel.augmented.data)], { type: "image/png" }));
    img.src = url;
    const caption = document.createElement("figcaption");
    const digest = await pixelDigest(url);
    const same = digest === originalDigest ? " (= original)" : "";
    caption.textContent = `seed ${panel.seed}  pixels ${digest.slice(0, 12)}${same}`;
    cell.append(img, caption);
    if (panel.validity) {
      const validity = document.createElement("img");
      validity.className = "validity";
      validity.src = URL.createObjectURL(
        new Blob([new Uint8Array(panel.validity.data)], { type: "image/png" }),
      );
      cell.appendChild(validity);
    }
    host.appendChild(cell);
  }
}

function downloadPipeline(): void {
  const blob = new Blob([model.pipelineText() + "\n"], { type: "text/plain" });
  const anchor = document.createElement("a");
  anchor.href = URL.createObjectURL(blob);
  anchor.download = "pipeline.aug";
  anchor.click();
  URL.revokeObjectURL(anchor.href);
}

void boot();
