"""Image enhancement and fusion pipeline.

The enhancement chain runs CLAHE, then gamma correction on the CLAHE
output, then merges the two enhanced variants in Haar-wavelet space
(average the approximation band, keep the larger-magnitude detail
coefficients). All operations are pure numpy float64 so committed golden
outputs stay byte-stable; every 8-bit write rounds half up.

Images are numpy-backed: uint8 for 8-bit data, float64 in [0, 1] for the
normalized intermediate representation. Grayscale is (H, W), RGB (H, W, 3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

from .core import InvalidConfig

SQRT2 = math.sqrt(2.0)


class TileGridTooFine(InvalidConfig):
    pass


class ShapeMismatch(InvalidConfig):
    pass


@dataclass(frozen=True)
class Image:
    """8-bit (uint8) or normalized ([0,1] float64) image; dtype records which."""

    data: np.ndarray

    def __post_init__(self):
        arr = self.data
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        if arr.ndim not in (2, 3):
            raise InvalidConfig(f"image must be 2-D or 3-D, got shape {arr.shape}")
        if arr.ndim == 3 and arr.shape[2] != 3:
            raise InvalidConfig(f"color images must have 3 channels, got {arr.shape[2]}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidConfig("empty image")
        if arr.dtype == np.uint8:
            pass
        else:
            arr = np.asarray(arr, dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise InvalidConfig("non-finite sample")
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise InvalidConfig("normalized samples must lie in [0, 1]")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else int(self.data.shape[2])

    @property
    def is_normalized(self) -> bool:
        return self.data.dtype != np.uint8


@dataclass(frozen=True)
class FusionConfig:
    """Knobs of the enhancement/fusion chain; values are recorded in run
    metadata because none of them are standardized."""

    wavelet: str = "haar"
    levels: int = 1
    approx_rule: str = "average"
    detail_rule: str = "max_abs"
    clahe_clip: float = 2.0
    clahe_tiles: tuple[int, int] = (8, 8)
    gamma: float = 0.8
    # False: gamma is applied to the CLAHE output (serial reading of the
    # enhancement flow); True: both branches start from the original image.
    parallel_branches: bool = False

    def __post_init__(self):
        if self.wavelet != "haar":
            raise InvalidConfig(f"unsupported wavelet {self.wavelet!r}")
        if self.levels < 1:
            raise InvalidConfig("levels must be >= 1")
        if self.approx_rule != "average":
            raise InvalidConfig(f"unsupported approximation rule {self.approx_rule!r}")
        if self.detail_rule != "max_abs":
            raise InvalidConfig(f"unsupported detail rule {self.detail_rule!r}")
        if self.clahe_clip < 1.0:
            raise InvalidConfig("clahe_clip must be >= 1.0")
        ty, tx = self.clahe_tiles
        if ty < 1 or tx < 1:
            raise InvalidConfig("clahe_tiles must be >= 1x1")
        if self.gamma <= 0.0:
            raise InvalidConfig("gamma must be positive")


@dataclass(frozen=True)
class SubbandPyramid:
    """Haar decomposition: per level (finest first) the three detail bands
    (lh = horizontal detail, hl = vertical detail, hh = diagonal), plus the
    coarsest approximation and the pre-transform shape of every level."""

    approx: np.ndarray
    details: tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]
    shapes: tuple[tuple[int, int], ...]

    @property
    def levels(self) -> int:
        return len(self.details)


def round_half_up(x: np.ndarray) -> np.ndarray:
    """Ties away from zero for nonnegative input; platform-stable."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def to_u8(values: np.ndarray) -> np.ndarray:
    return np.clip(round_half_up(values), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# CLAHE


def _tile_edges(size: int, n_tiles: int) -> list[int]:
    return [(i * size) // n_tiles for i in range(n_tiles + 1)]


def _tile_lut(tile: np.ndarray, clip: float) -> np.ndarray:
    """Float-valued equalization map of one tile.

    Histogram bins are clipped at clip * (mean bin height) and the excess is
    spread uniformly over all 256 bins. The map uses the midpoint CDF
    (cumulative minus half the bin's own mass), under which a degenerate
    single-value histogram maps the value to itself; that case is returned
    as the identity directly.
    """
    hist = np.bincount(tile.ravel(), minlength=256).astype(np.float64)
    if np.count_nonzero(hist) <= 1:
        return np.arange(256, dtype=np.float64)
    pixels = float(tile.size)
    limit = clip * pixels / 256.0
    excess = float(np.maximum(hist - limit, 0.0).sum())
    hist = np.minimum(hist, limit) + excess / 256.0
    midpoint_cdf = np.cumsum(hist) - hist / 2.0
    return 255.0 * midpoint_cdf / pixels


def _interp_coords(coords: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Segment index and fraction of each coordinate between tile centers;
    coordinates beyond the outer centers clamp to the edge mapping."""
    if centers.size == 1:
        return np.zeros(coords.size, dtype=np.int64), np.zeros(coords.size)
    idx = np.searchsorted(centers, coords, side="right") - 1
    idx = np.clip(idx, 0, centers.size - 2)
    frac = (coords - centers[idx]) / (centers[idx + 1] - centers[idx])
    return idx, np.clip(frac, 0.0, 1.0)


def _clahe_gray(gray: np.ndarray, clip: float, tiles: tuple[int, int]) -> np.ndarray:
    ty, tx = tiles
    h, w = gray.shape
    if h < ty or w < tx:
        raise TileGridTooFine(f"{ty}x{tx} tiles on a {h}x{w} image")

    edges_r = _tile_edges(h, ty)
    edges_c = _tile_edges(w, tx)
    luts = np.empty((ty, tx, 256), dtype=np.float64)
    for i in range(ty):
        for j in range(tx):
            luts[i, j] = _tile_lut(
                gray[edges_r[i]: edges_r[i + 1], edges_c[j]: edges_c[j + 1]], clip
            )

    centers_r = np.array([(edges_r[i] + edges_r[i + 1] - 1) / 2.0 for i in range(ty)])
    centers_c = np.array([(edges_c[j] + edges_c[j + 1] - 1) / 2.0 for j in range(tx)])
    i0, fy = _interp_coords(np.arange(h, dtype=np.float64), centers_r)
    j0, fx = _interp_coords(np.arange(w, dtype=np.float64), centers_c)
    i1 = np.minimum(i0 + 1, ty - 1)
    j1 = np.minimum(j0 + 1, tx - 1)

    v = gray
    m00 = luts[i0[:, None], j0[None, :], v]
    m01 = luts[i0[:, None], j1[None, :], v]
    m10 = luts[i1[:, None], j0[None, :], v]
    m11 = luts[i1[:, None], j1[None, :], v]
    top = (1.0 - fx)[None, :] * m00 + fx[None, :] * m01
    bottom = (1.0 - fx)[None, :] * m10 + fx[None, :] * m11
    blended = (1.0 - fy)[:, None] * top + fy[:, None] * bottom
    return to_u8(blended)


def _rgb_to_ycbcr(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 0.564 * (b - y) + 128.0
    cr = 0.713 * (r - y) + 128.0
    return y, cb, cr


def _ycbcr_to_rgb(y: np.ndarray, cb: np.ndarray, cr: np.ndarray) -> np.ndarray:
    r = y + (cr - 128.0) / 0.713
    b = y + (cb - 128.0) / 0.564
    g = (y - 0.299 * r - 0.114 * b) / 0.587
    return np.stack([r, g, b], axis=-1)


def clahe(img: Image, clip: float = 2.0, tiles: tuple[int, int] = (8, 8)) -> Image:
    """Contrast-limited adaptive histogram equalization on 8-bit input.

    Tile mappings are kept as float values and blended bilinearly between
    the four surrounding tile centers before the single final rounding.
    Color images are equalized on the BT.601 luma channel; chroma passes
    through untouched.
    """
    if img.is_normalized:
        raise InvalidConfig("clahe expects an 8-bit image")
    if clip < 1.0:
        raise InvalidConfig("clip must be >= 1.0")
    if img.channels == 1:
        return Image(_clahe_gray(img.data, clip, tiles))
    rgb = img.data.astype(np.float64)
    y, cb, cr = _rgb_to_ycbcr(rgb)
    y_eq = _clahe_gray(to_u8(y), clip, tiles).astype(np.float64)
    return Image(to_u8(_ycbcr_to_rgb(y_eq, cb, cr)))


# ---------------------------------------------------------------------------
# gamma correction


def gamma_correct(img: Image, gamma: float) -> Image:
    """Power-law brightness mapping y = x**gamma on [0, 1] intensities."""
    if gamma <= 0.0:
        raise InvalidConfig("gamma must be positive")
    if img.is_normalized:
        return Image(np.power(img.data, gamma))
    lut = to_u8(255.0 * np.power(np.arange(256, dtype=np.float64) / 255.0, gamma))
    return Image(lut[img.data])


# ---------------------------------------------------------------------------
# orthonormal Haar DWT


def _haar_split(x: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    # odd lengths: symmetric (half-sample) extension replicates the edge
    if x.shape[axis] % 2 == 1:
        edge = [slice(None)] * x.ndim
        edge[axis] = slice(-1, None)
        x = np.concatenate([x, x[tuple(edge)]], axis=axis)
    even = [slice(None)] * x.ndim
    odd = [slice(None)] * x.ndim
    even[axis] = slice(0, None, 2)
    odd[axis] = slice(1, None, 2)
    e, o = x[tuple(even)], x[tuple(odd)]
    return (e + o) / SQRT2, (e - o) / SQRT2


def _haar_merge(lo: np.ndarray, hi: np.ndarray, axis: int, length: int) -> np.ndarray:
    shape = list(lo.shape)
    shape[axis] = 2 * lo.shape[axis]
    out = np.empty(shape, dtype=np.float64)
    even = [slice(None)] * out.ndim
    odd = [slice(None)] * out.ndim
    even[axis] = slice(0, None, 2)
    odd[axis] = slice(1, None, 2)
    out[tuple(even)] = (lo + hi) / SQRT2
    out[tuple(odd)] = (lo - hi) / SQRT2
    trunc = [slice(None)] * out.ndim
    trunc[axis] = slice(0, length)
    return out[tuple(trunc)]


def dwt2(matrix: np.ndarray, levels: int = 1) -> SubbandPyramid:
    """Orthonormal Haar analysis, rows then columns, recursing on the
    approximation band only."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise InvalidConfig(f"dwt2 expects a 2-D matrix, got shape {m.shape}")
    if levels < 1:
        raise InvalidConfig("levels must be >= 1")
    if m.shape[0] < 2**levels or m.shape[1] < 2**levels:
        raise InvalidConfig(
            f"{levels} levels need dimensions >= {2 ** levels}, got {m.shape}"
        )
    details = []
    shapes = []
    for _ in range(levels):
        shapes.append(m.shape)
        lo, hi = _haar_split(m, axis=1)
        ll, hl = _haar_split(lo, axis=0)
        lh, hh = _haar_split(hi, axis=0)
        details.append((lh, hl, hh))
        m = ll
    return SubbandPyramid(approx=m, details=tuple(details), shapes=tuple(shapes))


def idwt2(pyramid: SubbandPyramid) -> np.ndarray:
    """Exact inverse of :func:`dwt2` (1e-9 RMS round-trip on even sizes)."""
    m = np.asarray(pyramid.approx, dtype=np.float64)
    if len(pyramid.details) != len(pyramid.shapes) or not pyramid.details:
        raise InvalidConfig("malformed pyramid: details/shapes mismatch")
    for (lh, hl, hh), shape in zip(pyramid.details[::-1], pyramid.shapes[::-1]):
        half = (math.ceil(shape[0] / 2), math.ceil(shape[1] / 2))
        for name, band in (("approx", m), ("lh", lh), ("hl", hl), ("hh", hh)):
            if band.shape != half:
                raise InvalidConfig(
                    f"malformed pyramid: {name} band has shape {band.shape}, expected {half}"
                )
        lo = _haar_merge(m, hl, axis=0, length=shape[0] if shape[0] % 2 == 0 else shape[0] + 1)
        hi = _haar_merge(lh, hh, axis=0, length=lo.shape[0])
        m = _haar_merge(lo, hi, axis=1, length=shape[1])
        m = m[: shape[0]]
    return m


# ---------------------------------------------------------------------------
# fusion


def _fuse_plane(a: np.ndarray, b: np.ndarray, cfg: FusionConfig) -> np.ndarray:
    pa = dwt2(a, cfg.levels)
    pb = dwt2(b, cfg.levels)
    approx = (pa.approx + pb.approx) / 2.0
    details = tuple(
        tuple(np.where(np.abs(da) >= np.abs(db), da, db) for da, db in zip(la, lb))
        for la, lb in zip(pa.details, pb.details)
    )
    return idwt2(SubbandPyramid(approx, details, pa.shapes))


def fuse(img_a: Image, img_b: Image, cfg: FusionConfig | None = None) -> Image:
    """Wavelet-space merge: averaged approximation, max-magnitude details
    (ties keep the first image's coefficient)."""
    cfg = cfg or FusionConfig()
    if img_a.data.shape != img_b.data.shape:
        raise ShapeMismatch(f"{img_a.data.shape} vs {img_b.data.shape}")
    if img_a.is_normalized or img_b.is_normalized:
        raise InvalidConfig("fuse expects 8-bit images")
    a = img_a.data.astype(np.float64)
    b = img_b.data.astype(np.float64)
    if img_a.channels == 1:
        return Image(to_u8(_fuse_plane(a, b, cfg)))
    planes = [_fuse_plane(a[:, :, c], b[:, :, c], cfg) for c in range(img_a.channels)]
    return Image(to_u8(np.stack(planes, axis=-1)))


def full_pipeline(img: Image, cfg: FusionConfig | None = None) -> Image:
    """CLAHE, gamma on the CLAHE output, and fusion of the two enhanced
    variants (or of clahe(img) with gamma(img) when parallel_branches)."""
    cfg = cfg or FusionConfig()
    enhanced = clahe(img, cfg.clahe_clip, cfg.clahe_tiles)
    gamma_src = img if cfg.parallel_branches else enhanced
    adjusted = gamma_correct(gamma_src, cfg.gamma)
    return fuse(enhanced, adjusted, cfg)


# ---------------------------------------------------------------------------
# resize / normalize / augmentation


def _bilinear_resize(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = arr.shape[:2]
    rows = np.clip((np.arange(out_h, dtype=np.float64) + 0.5) * h / out_h - 0.5, 0, h - 1)
    cols = np.clip((np.arange(out_w, dtype=np.float64) + 0.5) * w / out_w - 0.5, 0, w - 1)
    r0 = np.floor(rows).astype(np.int64)
    c0 = np.floor(cols).astype(np.int64)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = rows - r0
    fc = cols - c0
    if arr.ndim == 3:
        fr = fr[:, None, None]
        fc = fc[None, :, None]
    else:
        fr = fr[:, None]
        fc = fc[None, :]
    a00 = arr[r0[:, None], c0[None, :]]
    a01 = arr[r0[:, None], c1[None, :]]
    a10 = arr[r1[:, None], c0[None, :]]
    a11 = arr[r1[:, None], c1[None, :]]
    top = (1.0 - fc) * a00 + fc * a01
    bottom = (1.0 - fc) * a10 + fc * a11
    return (1.0 - fr) * top + fr * bottom


def resize_normalize(img: Image, side: int = 224) -> Image:
    """Bilinear resize to side x side and rescale samples into [0, 1]."""
    if side < 1:
        raise InvalidConfig("side must be >= 1")
    arr = img.data.astype(np.float64)
    if not img.is_normalized:
        arr = arr / 255.0
    return Image(np.clip(_bilinear_resize(arr, side, side), 0.0, 1.0))


def _rotate_bilinear(arr: np.ndarray, angle_deg: float) -> np.ndarray:
    """Rotate about the image center, bilinear sampling, replicated border."""
    if angle_deg == 0.0:
        return arr.copy()
    h, w = arr.shape[:2]
    theta = math.radians(angle_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    dy = np.arange(h, dtype=np.float64)[:, None] - cy
    dx = np.arange(w, dtype=np.float64)[None, :] - cx
    src_r = np.clip(cy + dy * cos_t + dx * sin_t, 0, h - 1)
    src_c = np.clip(cx - dy * sin_t + dx * cos_t, 0, w - 1)
    r0 = np.floor(src_r).astype(np.int64)
    c0 = np.floor(src_c).astype(np.int64)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = src_r - r0
    fc = src_c - c0
    if arr.ndim == 3:
        fr = fr[..., None]
        fc = fc[..., None]
    top = (1.0 - fc) * arr[r0, c0] + fc * arr[r0, c1]
    bottom = (1.0 - fc) * arr[r1, c0] + fc * arr[r1, c1]
    return (1.0 - fr) * top + fr * bottom


@dataclass(frozen=True)
class AugmentSpec:
    """Which augmentations to apply; random draws come from the caller's rng."""

    rotate: bool = False
    hflip: bool = False
    vflip: bool = False
    crop: bool = False
    max_angle_deg: float = 15.0
    min_area: float = 0.8

    def __post_init__(self):
        if not 0.0 <= self.max_angle_deg <= 180.0:
            raise InvalidConfig("max_angle_deg must lie in [0, 180]")
        if not 0.0 < self.min_area <= 1.0:
            raise InvalidConfig("min_area must lie in (0, 1]")


def augment(img: Image, spec: AugmentSpec, rng) -> Image:
    """Apply the selected subset in fixed order: rotate, hflip, vflip, crop.

    Rotation angle ~ U[-max_angle_deg, +max_angle_deg]; crop keeps a
    uniformly drawn fraction of the area in [min_area, 1] and resizes back.
    Deterministic for a given generator state.
    """
    was_u8 = not img.is_normalized
    arr = img.data.astype(np.float64)
    h, w = arr.shape[:2]
    if spec.rotate:
        angle = float(rng.uniform(-spec.max_angle_deg, spec.max_angle_deg))
        arr = _rotate_bilinear(arr, angle)
    if spec.hflip:
        arr = arr[:, ::-1].copy()
    if spec.vflip:
        arr = arr[::-1].copy()
    if spec.crop:
        scale = math.sqrt(float(rng.uniform(spec.min_area, 1.0)))
        crop_h = min(h, max(1, int(math.floor(h * scale + 0.5))))
        crop_w = min(w, max(1, int(math.floor(w * scale + 0.5))))
        top = int(rng.integers(0, h - crop_h + 1))
        left = int(rng.integers(0, w - crop_w + 1))
        arr = _bilinear_resize(arr[top: top + crop_h, left: left + crop_w], h, w)
    if was_u8:
        return Image(to_u8(arr))
    return Image(np.clip(arr, 0.0, 1.0))


# ---------------------------------------------------------------------------
# file I/O (PNG mandatory, JPEG read-only)


def read_image(path) -> Image:
    with PILImage.open(path) as pil:
        if pil.mode == "L":
            return Image(np.asarray(pil, dtype=np.uint8))
        return Image(np.asarray(pil.convert("RGB"), dtype=np.uint8))


def write_png(img: Image, path) -> None:
    if img.is_normalized:
        raise InvalidConfig("write_png expects an 8-bit image; convert first")
    PILImage.fromarray(img.data).save(path, format="PNG")
