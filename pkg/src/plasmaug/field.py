"""Raster and geometry substrate: images, masks, points, sampling fields.

Conventions used everywhere in the engine:

* Scalar grids, masks, and sampling-field planes are float64 arrays shaped
  ``(height, width)``; images are channel-planar ``(channels, height, width)``
  with ``channels`` 1 or 3 and values in [0, 1].
* Sampling fields store, per output pixel, the *source* coordinate to read,
  in normalized units where (-1, -1) is the center of pixel (0, 0) and
  (+1, +1) the center of pixel (width-1, height-1).  Pixel-center alignment
  makes flips exact index permutations.
* A field may carry a 3x3 homography ``matrix`` (normalized coordinates,
  output position -> source position).  Analytic fields compose by matrix
  product and invert points in closed form; fields without a matrix fall back
  to dense sampling and search-based inversion.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import InvalidInputError

# Pixel-coordinate snap: source coordinates this close to an integer are
# treated as exact, so permutation fields (flips, whole-pixel translations)
# survive float round-off and stay exact.
_SNAP_EPS = 1e-6

# Guard for homography division and analytic invertibility.
_HOMOGRAPHY_EPS = 1e-12


def pixel_centers(n: int) -> np.ndarray:
    """Normalized coordinates of the n pixel centers along one axis."""
    if n < 1:
        raise InvalidInputError(f"axis needs at least 1 pixel, got {n}")
    if n == 1:
        return np.array([-1.0])
    return np.linspace(-1.0, 1.0, n)


def norm_to_pixel(coords: np.ndarray, n: int) -> np.ndarray:
    """Normalized coordinate -> fractional pixel index along an n-pixel axis."""
    return (np.asarray(coords, dtype=np.float64) + 1.0) * 0.5 * (n - 1)


def pixel_to_norm(px: np.ndarray, n: int) -> np.ndarray:
    """Fractional pixel index -> normalized coordinate along an n-pixel axis."""
    px = np.asarray(px, dtype=np.float64)
    if n == 1:
        return np.full_like(px, -1.0)
    return px * (2.0 / (n - 1)) - 1.0


@dataclass(eq=False)
class SamplingField:
    """Per-output-pixel source coordinates in normalized space."""

    sx: np.ndarray
    sy: np.ndarray
    matrix: np.ndarray | None = None

    def __post_init__(self):
        self.sx = np.asarray(self.sx, dtype=np.float64)
        self.sy = np.asarray(self.sy, dtype=np.float64)
        if self.sx.ndim != 2 or self.sx.shape != self.sy.shape:
            raise InvalidInputError(
                f"field planes must be matching 2-D arrays, got {self.sx.shape} / {self.sy.shape}")
        if self.matrix is not None:
            self.matrix = np.asarray(self.matrix, dtype=np.float64)
            if self.matrix.shape != (3, 3):
                raise InvalidInputError("field matrix must be 3x3")

    @property
    def height(self) -> int:
        return self.sx.shape[0]

    @property
    def width(self) -> int:
        return self.sx.shape[1]


@dataclass
class PointSet:
    """Points in pixel coordinates of their bundle's image.

    ``in_frame`` flags points that still land on the canvas; ventral
    operations update it but never drop points.
    """

    xy: np.ndarray
    in_frame: np.ndarray = dataclass_field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=np.float64).reshape(-1, 2)
        if not np.all(np.isfinite(self.xy)):
            raise InvalidInputError("point coordinates must be finite")
        if self.in_frame is None:
            self.in_frame = np.ones(len(self.xy), dtype=bool)
        else:
            self.in_frame = np.asarray(self.in_frame, dtype=bool).reshape(-1)
            if self.in_frame.shape[0] != self.xy.shape[0]:
                raise InvalidInputError("in_frame length must match point count")


@dataclass
class SampleBundle:
    """An image plus the annotations augmented jointly with it."""

    image: np.ndarray
    mask: np.ndarray | None = None
    points: PointSet | None = None
    validity: np.ndarray | None = None

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=np.float64)
        if self.image.ndim == 2:
            self.image = self.image[None, :, :]
        if self.image.ndim != 3 or self.image.shape[0] not in (1, 3):
            raise InvalidInputError(
                f"image must be (1|3, H, W), got shape {self.image.shape}")
        h, w = self.image.shape[1:]
        if h < 1 or w < 1:
            raise InvalidInputError("image dimensions must be >= 1")
        for name in ("mask", "validity"):
            raster = getattr(self, name)
            if raster is not None:
                raster = np.asarray(raster, dtype=np.float64)
                if raster.shape != (h, w):
                    raise InvalidInputError(
                        f"{name} shape {raster.shape} does not match image {(h, w)}")
                setattr(self, name, raster)

    @property
    def height(self) -> int:
        return self.image.shape[1]

    @property
    def width(self) -> int:
        return self.image.shape[2]


def conv3x3(grid: np.ndarray, kernel: np.ndarray, workers: int = 1) -> np.ndarray:
    """Same-size 3x3 cross-correlation with zero padding.

    All kernels used by the engine are symmetric, so this equals true
    convolution for them.  Zero padding is what makes the normalized
    convolution trick in the plasma generator exact at the borders.
    ``workers`` > 1 splits the output into row bands; banding never changes
    the arithmetic performed per cell, so results are bit-identical.
    """
    grid = np.asarray(grid, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if grid.ndim != 2:
        raise InvalidInputError(f"conv3x3 expects a 2-D grid, got {grid.ndim}-D")
    if kernel.shape != (3, 3):
        raise InvalidInputError("kernel must be 3x3")
    h, w = grid.shape
    padded = np.zeros((h + 2, w + 2))
    padded[1:-1, 1:-1] = grid
    taps = [(i, j, kernel[i, j])
            for i in range(3) for j in range(3) if kernel[i, j] != 0.0]
    # Equal-weight kernels (both plasma filters) sum views and scale once;
    # 0.25 is a power of two, so the late scale rounds identically to
    # per-tap scaling.
    uniform = bool(taps) and all(k == taps[0][2] for _, _, k in taps)

    def band(r0: int, r1: int) -> np.ndarray:
        if not taps:
            return np.zeros((r1 - r0, w))
        i0, j0, k0 = taps[0]
        acc = padded[r0 + i0:r1 + i0, j0:j0 + w].copy()
        if uniform:
            for i, j, _ in taps[1:]:
                acc += padded[r0 + i:r1 + i, j:j + w]
            if k0 != 1.0:
                acc *= k0
            return acc
        acc *= k0
        scratch = np.empty_like(acc)
        for i, j, k in taps[1:]:
            np.multiply(padded[r0 + i:r1 + i, j:j + w], k, out=scratch)
            acc += scratch
        return acc

    if workers <= 1 or h < 2 * workers:
        return band(0, h)
    bounds = np.linspace(0, h, workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda b: band(*b), zip(bounds[:-1], bounds[1:])))
    return np.concatenate(parts, axis=0)


def identity_field(width: int, height: int) -> SamplingField:
    """Field mapping every output pixel to its own center."""
    if width < 1 or height < 1:
        raise InvalidInputError(f"field size must be >= 1, got {width}x{height}")
    sx, sy = np.meshgrid(pixel_centers(width), pixel_centers(height))
    return SamplingField(sx, sy, matrix=np.eye(3))


def apply_homography(matrix: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project (x, y) through a 3x3 homography; near-zero denominators map
    far outside the canvas so downstream padding treats them as invalid."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    u = matrix[0, 0] * x + matrix[0, 1] * y + matrix[0, 2]
    v = matrix[1, 0] * x + matrix[1, 1] * y + matrix[1, 2]
    d = matrix[2, 0] * x + matrix[2, 1] * y + matrix[2, 2]
    safe = np.abs(d) > _HOMOGRAPHY_EPS
    d = np.where(safe, d, 1.0)
    far = 1e9
    return (np.where(safe, u / d, far), np.where(safe, v / d, far))


def field_from_matrix(matrix: np.ndarray, width: int, height: int) -> SamplingField:
    """Dense field evaluating a homography at every output pixel center."""
    base = identity_field(width, height)
    sx, sy = apply_homography(np.asarray(matrix, dtype=np.float64), base.sx, base.sy)
    return SamplingField(sx, sy, matrix=np.asarray(matrix, dtype=np.float64))


def _snap(px: np.ndarray) -> np.ndarray:
    nearest = np.rint(px)
    return np.where(np.abs(px - nearest) <= _SNAP_EPS, nearest, px)


def _bilinear_gather(planes: np.ndarray, fx: np.ndarray, fy: np.ndarray,
                     pad: float) -> np.ndarray:
    """Sample ``planes`` (..., H, W) at fractional pixel coords; any tap that
    falls off the raster contributes ``pad``."""
    h, w = planes.shape[-2:]
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    tx = fx - x0
    ty = fy - y0
    out = None
    for dy, dx, wgt in ((0, 0, (1 - ty) * (1 - tx)), (0, 1, (1 - ty) * tx),
                        (1, 0, ty * (1 - tx)), (1, 1, ty * tx)):
        xs = x0 + dx
        ys = y0 + dy
        inside = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
        vals = planes[..., np.clip(ys, 0, h - 1), np.clip(xs, 0, w - 1)]
        vals = np.where(inside, vals, pad)
        contrib = wgt * vals
        out = contrib if out is None else out + contrib
    return out


def remap_bilinear(img: np.ndarray, field: SamplingField, pad: float = 0.0) -> np.ndarray:
    """Backward warp: each output pixel bilinearly samples ``img`` at the
    field's source coordinate, blending with ``pad`` outside the canvas."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim not in (2, 3):
        raise InvalidInputError(f"remap expects (H, W) or (C, H, W), got {img.shape}")
    h, w = img.shape[-2:]
    fx = _snap(norm_to_pixel(field.sx, w))
    fy = _snap(norm_to_pixel(field.sy, h))
    return _bilinear_gather(img, fx, fy, pad)


def _sample_clamped(plane: np.ndarray, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    fx = np.clip(fx, 0.0, w - 1.0)
    fy = np.clip(fy, 0.0, h - 1.0)
    return _bilinear_gather(plane, fx, fy, 0.0)


def compose_fields(outer: SamplingField, inner: SamplingField) -> SamplingField:
    """Field R with remap(img, R) ~ remap(remap(img, inner), outer).

    Analytic fields (both carrying a homography) compose exactly by matrix
    product.  Otherwise inner's coordinate planes are sampled bilinearly at
    outer's coordinates; wherever outer already points off the canvas the
    outer coordinate is kept, so padding and validity propagate through the
    composition instead of being clamped away.
    """
    if (outer.height, outer.width) != (inner.height, inner.width):
        raise InvalidInputError("composed fields must share an output size")
    if outer.matrix is not None and inner.matrix is not None:
        return field_from_matrix(inner.matrix @ outer.matrix, outer.width, outer.height)
    fx = norm_to_pixel(outer.sx, inner.width)
    fy = norm_to_pixel(outer.sy, inner.height)
    sx = _sample_clamped(inner.sx, fx, fy)
    sy = _sample_clamped(inner.sy, fx, fy)
    oob = (np.abs(outer.sx) > 1.0 + 1e-9) | (np.abs(outer.sy) > 1.0 + 1e-9)
    return SamplingField(np.where(oob, outer.sx, sx), np.where(oob, outer.sy, sy))


def validity_mask(field: SamplingField) -> np.ndarray:
    """Binary raster of output pixels sourced entirely from inside the canvas."""
    ones = np.ones((field.height, field.width))
    warped = remap_bilinear(ones, field, pad=0.0)
    return (warped >= 0.999).astype(np.float64)


def _invert_dense(field: SamplingField, pn: np.ndarray) -> np.ndarray:
    """Nearest-cell search plus one Newton refinement on the dense field."""
    h, w = field.sx.shape
    out = np.empty_like(pn)
    for k in range(pn.shape[0]):
        d2 = (field.sx - pn[k, 0]) ** 2 + (field.sy - pn[k, 1]) ** 2
        r0, c0 = np.unravel_index(np.argmin(d2), d2.shape)
        # Central differences, one-sided at the raster edge.
        c_lo, c_hi = max(c0 - 1, 0), min(c0 + 1, w - 1)
        r_lo, r_hi = max(r0 - 1, 0), min(r0 + 1, h - 1)
        jac = np.array([
            [(field.sx[r0, c_hi] - field.sx[r0, c_lo]) / max(c_hi - c_lo, 1),
             (field.sx[r_hi, c0] - field.sx[r_lo, c0]) / max(r_hi - r_lo, 1)],
            [(field.sy[r0, c_hi] - field.sy[r0, c_lo]) / max(c_hi - c_lo, 1),
             (field.sy[r_hi, c0] - field.sy[r_lo, c0]) / max(r_hi - r_lo, 1)],
        ])
        resid = pn[k] - np.array([field.sx[r0, c0], field.sy[r0, c0]])
        try:
            step = np.linalg.solve(jac, resid)
        except np.linalg.LinAlgError:
            step = np.zeros(2)
        out[k] = (c0 + step[0], r0 + step[1])
    return out


def transform_points(points: PointSet, field: SamplingField) -> PointSet:
    """Forward-map points through a (backward) sampling field.

    Fields registering a homography invert in closed form; generic fields use
    nearest-cell search followed by one Newton refinement.  Points landing
    outside the canvas keep their coordinates but are flagged out-of-frame.
    """
    if len(points.xy) == 0:
        return PointSet(points.xy.copy(), points.in_frame.copy())
    h, w = field.sx.shape
    pn = np.stack([pixel_to_norm(points.xy[:, 0], w),
                   pixel_to_norm(points.xy[:, 1], h)], axis=1)
    if field.matrix is not None and abs(np.linalg.det(field.matrix)) > _HOMOGRAPHY_EPS:
        inv = np.linalg.inv(field.matrix)
        qx, qy = apply_homography(inv, pn[:, 0], pn[:, 1])
        out_px = np.stack([norm_to_pixel(qx, w), norm_to_pixel(qy, h)], axis=1)
    else:
        out_px = _invert_dense(field, pn)
    in_frame = (points.in_frame
                & (out_px[:, 0] >= -0.5) & (out_px[:, 0] <= w - 0.5)
                & (out_px[:, 1] >= -0.5) & (out_px[:, 1] <= h - 0.5))
    return PointSet(out_px, in_frame)


def clamp01(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0.0, 1.0)
