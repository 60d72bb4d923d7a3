"""Command-line interface: batch augmentation, plasma rendering, benchmarks,
and the preview server.

Batch runs derive each file's seed from the root seed and the file's base
name, so results do not depend on listing order or worker count and any
single file can be re-augmented in isolation.
"""

from __future__ import annotations

import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import bench as bench_mod
from . import dsl, graph, io as pio
from .errors import PlasmaugError
from .field import SampleBundle
from .plasma import PlasmaParams, ds, normalize01
from .presets import PRESET_NAMES, preset_source


def file_seed(root_seed: int, basename: str) -> int:
    """Per-file seed from the root seed and the file's base name."""
    digest = hashlib.blake2b(basename.encode("utf-8"), digest_size=8,
                             key=int(root_seed).to_bytes(8, "little")).digest()
    return int.from_bytes(digest, "little")


@click.group()
def main():
    """Deterministic plasma-fractal image augmentation."""


def _load_pipeline_text(pipeline: str) -> str:
    if pipeline.startswith("preset:"):
        return preset_source(pipeline.split(":", 1)[1])
    return Path(pipeline).read_text()


@main.command()
@click.argument("pipeline")
@click.argument("input_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("output_dir", type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True, help="Root seed.")
@click.option("--mask-suffix", default=None,
              help="Stem suffix of companion mask PNGs, e.g. '_mask'.")
@click.option("--points-suffix", default=None,
              help="Stem suffix of companion point CSVs, e.g. '_points'.")
@click.option("--emit-validity", is_flag=True,
              help="Also write '<stem>_validity.png' per input.")
@click.option("--manifest", "print_manifest", is_flag=True,
              help="Print a JSON manifest of applied parameters to stdout.")
@click.option("--workers", default=1, show_default=True,
              help="Parallel workers; results are worker-count independent.")
def augment(pipeline, input_dir, output_dir, seed, mask_suffix, points_suffix,
            emit_validity, print_manifest, workers):
    """Augment every PNG in INPUT_DIR through PIPELINE into OUTPUT_DIR.

    PIPELINE is a .aug file path or 'preset:<name>'.  Masks and point sets
    found via the suffix options are transformed jointly with their image.
    """
    try:
        ast = dsl.parse(_load_pipeline_text(pipeline))
        dsl.compile_pipeline(ast, seed)  # fail fast on op/arg problems
    except (PlasmaugError, OSError) as exc:
        raise click.ClickException(f"pipeline error: {exc}")

    in_dir = Path(input_dir)
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def is_companion(path: Path) -> bool:
        return mask_suffix is not None and path.stem.endswith(mask_suffix)

    images = sorted(p for p in in_dir.glob("*.png") if not is_companion(p))
    if not images:
        raise click.ClickException(f"no input PNGs found in {in_dir}")

    def process(img_path: Path):
        try:
            stem = img_path.stem
            node = dsl.compile_pipeline(ast, file_seed(seed, img_path.name))
            image, mode = pio.load_image_png(img_path)
            mask = None
            if mask_suffix is not None:
                mask_path = in_dir / f"{stem}{mask_suffix}.png"
                if mask_path.exists():
                    mask = pio.load_mask_png(mask_path)
            points = None
            if points_suffix is not None:
                pts_path = in_dir / f"{stem}{points_suffix}.csv"
                if pts_path.exists():
                    points = pio.load_points_csv(pts_path)
            bundle = SampleBundle(image=image, mask=mask, points=points)
            out, applied = graph.apply_traced(node, bundle)
            pio.save_image_png(out_dir / img_path.name, out.image, mode=mode)
            if out.mask is not None:
                pio.save_mask_png(out_dir / f"{stem}{mask_suffix}.png", out.mask)
            if out.points is not None:
                pio.save_points_csv(out_dir / f"{stem}{points_suffix}.csv", out.points)
            if emit_validity:
                pio.save_mask_png(out_dir / f"{stem}_validity.png", out.validity)
            return img_path.name, applied, None
        except Exception as exc:  # per-file failure, keep the batch going
            return img_path.name, None, exc

    if workers <= 1:
        results = list(map(process, images))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(process, images))

    manifest = {name: applied.to_json()
                for name, applied, exc in results if exc is None}
    errors = [(name, exc) for name, _, exc in results if exc is not None]

    if print_manifest:
        click.echo(json.dumps(manifest, indent=2, sort_keys=True))
    if errors:
        for name, exc in errors:
            click.echo(f"error: {name}: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--steps", default=6, show_default=True)
@click.option("--roughness", default=0.5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              help="Also export the normalized grid as CSV.")
@click.argument("out", type=click.Path())
def plasma(steps, roughness, seed, csv_path, out):
    """Render a plasma fractal to a 16-bit grayscale PNG at OUT."""
    try:
        grid = normalize01(ds(PlasmaParams(steps=steps, roughness=roughness,
                                           seed=seed)))
    except PlasmaugError as exc:
        raise click.ClickException(str(exc))
    pio.save_grid_png(out, grid)
    if csv_path:
        pio.save_grid_csv(csv_path, grid)
    click.echo(f"wrote {grid.shape[1]}x{grid.shape[0]} plasma to {out}")


@main.command()
@click.option("--sizes", default="65..2049", show_default=True,
              help="Side ladder, '65..2049' or '65,129,257'.")
@click.option("--impls", default="conv,recursive", show_default=True,
              help=f"Comma list from: {', '.join(bench_mod.IMPLEMENTATIONS)}.")
@click.option("--repeats", default=5, show_default=True)
@click.option("--seed", default=1234, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(), required=True)
@click.option("--plot", "plot_path", type=click.Path(), default=None,
              help="Figure path; defaults to the CSV path with a .png suffix.")
@click.option("--no-plot", is_flag=True, help="Skip the figure.")
def bench(sizes, impls, repeats, seed, csv_path, plot_path, no_plot):
    """Time the generator implementations and write a CSV report."""
    try:
        sides = bench_mod.parse_sizes(sizes)
        impl_list = [s.strip() for s in impls.split(",") if s.strip()]
        records = bench_mod.run_benchmark(
            sides, impl_list, repeats=repeats, seed=seed,
            on_skip=lambda impl, side: click.echo(
                f"skipped {impl} at {side} (allocation failure)", err=True))
    except PlasmaugError as exc:
        raise click.ClickException(str(exc))
    bench_mod.write_csv(records, csv_path)
    click.echo(f"wrote {len(records)} rows to {csv_path}")
    if not no_plot:
        target = plot_path or str(Path(csv_path).with_suffix(".png"))
        bench_mod.plot_records(records, target)
        click.echo(f"wrote figure to {target}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False), default=None,
              help="Static tuner UI directory (default: ./frontend/dist if present).")
def serve(host, port, ui_dir):
    """Run the HTTP preview service for the interactive tuner."""
    import uvicorn

    from .service import create_app

    if ui_dir is None:
        candidate = Path("frontend") / "dist"
        ui_dir = str(candidate) if candidate.is_dir() else None
    app = create_app(static_dir=ui_dir)
    click.echo(f"presets: {', '.join(PRESET_NAMES)}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
