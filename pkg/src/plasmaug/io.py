"""PNG and CSV input/output for grids, images, masks, and point sets.

Quantization is round-half-up (``floor(v * scale + 0.5)``), and grid CSVs
use 17 significant digits so float64 values survive a round trip exactly.
"""

from __future__ import annotations

import io as _io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidInputError
from .field import PointSet


def _quantize(values: np.ndarray, scale: int) -> np.ndarray:
    return np.floor(np.clip(values, 0.0, 1.0) * scale + 0.5).astype(np.uint32)


def encode_image_png(img: np.ndarray, mode: str = None) -> bytes:
    """Encode a (C, H, W) float image in [0, 1] as PNG bytes.

    ``mode`` selects the pixel format: "L" (8-bit gray), "RGB", or "I;16"
    (16-bit gray).  Defaults to "L" or "RGB" by channel count.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[None]
    channels = img.shape[0]
    if mode is None:
        mode = "RGB" if channels == 3 else "L"
    if mode == "RGB":
        if channels == 1:
            img = np.repeat(img, 3, axis=0)
        pixels = _quantize(np.transpose(img, (1, 2, 0)), 255).astype(np.uint8)
        pil = Image.fromarray(pixels, mode="RGB")
    elif mode == "L":
        if channels == 3:
            raise InvalidInputError("cannot write a 3-channel image as 8-bit gray")
        pil = Image.fromarray(_quantize(img[0], 255).astype(np.uint8), mode="L")
    elif mode == "I;16":
        if channels == 3:
            raise InvalidInputError("cannot write a 3-channel image as 16-bit gray")
        pil = Image.fromarray(_quantize(img[0], 65535).astype(np.uint16))
    else:
        raise InvalidInputError(f"unsupported PNG mode {mode!r}")
    buf = _io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def save_image_png(path, img: np.ndarray, mode: str = None) -> None:
    Path(path).write_bytes(encode_image_png(img, mode))


def decode_image_png(data: bytes) -> tuple[np.ndarray, str]:
    """Decode PNG bytes to a (C, H, W) float image in [0, 1] plus the
    storage mode ("L", "RGB", or "I;16") to use when writing it back."""
    try:
        pil = Image.open(_io.BytesIO(data))
        pil.load()
    except Exception as exc:
        raise InvalidInputError(f"not a decodable PNG: {exc}") from None
    if pil.mode in ("I;16", "I"):
        arr = np.asarray(pil, dtype=np.float64) / 65535.0
        return arr[None], "I;16"
    if pil.mode in ("L", "1"):
        arr = np.asarray(pil.convert("L"), dtype=np.float64) / 255.0
        return arr[None], "L"
    rgb = np.asarray(pil.convert("RGB"), dtype=np.float64) / 255.0
    return np.transpose(rgb, (2, 0, 1)), "RGB"


def load_image_png(path) -> tuple[np.ndarray, str]:
    return decode_image_png(Path(path).read_bytes())


def save_mask_png(path, mask: np.ndarray) -> None:
    save_image_png(path, np.asarray(mask)[None], mode="L")


def load_mask_png(path) -> np.ndarray:
    img, _ = load_image_png(path)
    return img.mean(axis=0) if img.shape[0] == 3 else img[0]


def save_grid_png(path, grid: np.ndarray) -> None:
    """Grid as 16-bit grayscale PNG (value * 65535, round-half-up)."""
    save_image_png(path, np.asarray(grid)[None], mode="I;16")


def save_grid_csv(path, grid: np.ndarray) -> None:
    """Grid as row-major CSV with 17 significant digits."""
    np.savetxt(path, np.asarray(grid, dtype=np.float64),
               fmt="%.17g", delimiter=",")


def load_grid_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=","))


def save_points_csv(path, points: PointSet) -> None:
    """Points as plain "x,y" lines."""
    lines = [f"{x:.17g},{y:.17g}" for x, y in points.xy]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_points_csv(path) -> PointSet:
    text = Path(path).read_text().strip()
    if not text:
        return PointSet(np.zeros((0, 2)))
    rows = []
    for i, line in enumerate(text.splitlines(), start=1):
        parts = line.strip().split(",")
        if len(parts) != 2:
            raise InvalidInputError(f"{path}:{i}: expected 'x,y', got {line!r}")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise InvalidInputError(f"{path}:{i}: bad number in {line!r}") from None
    return PointSet(np.array(rows))
