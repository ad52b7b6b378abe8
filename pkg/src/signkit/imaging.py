"""Pixel-buffer operations: area-average resize, crop, grayscale, scaling.

Images are 8-bit, row-major, channel-interleaved (height, width, channels)
arrays with 1 or 3 channels.  Resampling is a separable box filter when an
axis shrinks and bilinear when it grows; integer-factor downsampling is
therefore exactly the mean of each source block.  Rounding back to bytes is
round-half-to-even everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ValidationError
from .geometry import Box


@dataclass(frozen=True, eq=False)
class PixelImage:
    """8-bit image buffer of shape (height, width, channels), channels in {1, 3}."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValidationError(f"expected (h, w, c) with c in {{1, 3}}, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise ValidationError(f"pixel data must be uint8, got {arr.dtype}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"image dimensions must be >= 1, got shape {arr.shape}")
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


@dataclass(frozen=True, eq=False)
class FeatureTensor:
    """Real-valued image tensor of shape (height, width, channels)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValidationError(f"expected (h, w, c) tensor, got shape {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def _resample_weights(n_in: int, n_out: int) -> np.ndarray | None:
    """Row-stochastic (n_out, n_in) weights for one axis; None means identity."""
    if n_out == n_in:
        return None
    w = np.zeros((n_out, n_in), dtype=np.float64)
    if n_out < n_in:
        # box filter: weight by overlap of the output cell's source interval
        s = n_in / n_out
        for i in range(n_out):
            lo = i * s
            hi = (i + 1) * s
            for j in range(int(np.floor(lo)), min(int(np.ceil(hi)), n_in)):
                w[i, j] = min(hi, j + 1) - max(lo, j)
        w /= w.sum(axis=1, keepdims=True)
    else:
        # bilinear between the two nearest source centers, clamped at edges
        s = n_in / n_out
        for i in range(n_out):
            c = (i + 0.5) * s - 0.5
            j0 = int(np.floor(c))
            t = c - j0
            w[i, min(max(j0, 0), n_in - 1)] += 1.0 - t
            w[i, min(max(j0 + 1, 0), n_in - 1)] += t
    return w


def resize_area(img: PixelImage, out_w: int, out_h: int) -> PixelImage:
    """Anti-aliased resize: area averaging on shrinking axes, bilinear on growing ones."""
    if out_w < 1 or out_h < 1:
        raise ValidationError(f"output dimensions must be >= 1, got {out_w}x{out_h}")
    if out_w == img.width and out_h == img.height:
        return PixelImage(img.pixels.copy())
    arr = img.pixels.astype(np.float64)
    wy = _resample_weights(img.height, out_h)
    wx = _resample_weights(img.width, out_w)
    if wy is not None:
        arr = np.einsum("ij,jwc->iwc", wy, arr)
    if wx is not None:
        arr = np.einsum("ij,hjc->hic", wx, arr)
    return PixelImage(np.clip(np.rint(arr), 0, 255).astype(np.uint8))


def crop(img: PixelImage, box: Box) -> PixelImage:
    """Cut out `box` (edges rounded to integers); box must lie inside the image."""
    x0, y0 = int(round(box.xmin)), int(round(box.ymin))
    x1, y1 = int(round(box.xmax)), int(round(box.ymax))
    if not (0 <= x0 < x1 <= img.width and 0 <= y0 < y1 <= img.height):
        raise ValidationError(
            f"crop box ({x0}, {y0}, {x1}, {y1}) outside image {img.width}x{img.height}"
        )
    return PixelImage(img.pixels[y0:y1, x0:x1].copy())


def to_gray(img: PixelImage) -> PixelImage:
    """Convert RGB to single-channel luma (0.299 R + 0.587 G + 0.114 B)."""
    if img.channels == 1:
        return img
    luma = img.pixels.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
    return PixelImage(np.clip(np.rint(luma), 0, 255).astype(np.uint8)[:, :, None])


def ensure_rgb(img: PixelImage) -> PixelImage:
    """Replicate a grayscale image to 3 channels; RGB passes through."""
    if img.channels == 3:
        return img
    return PixelImage(np.repeat(img.pixels, 3, axis=2))


def normalize(img: PixelImage) -> FeatureTensor:
    """Map byte values into [0, 1] by dividing by 255."""
    return FeatureTensor(img.pixels.astype(np.float64) / 255.0)


def standardize(tensor: FeatureTensor, mean=None, std=None) -> FeatureTensor:
    """Per-channel (x - mean) / std.

    When mean/std are omitted the tensor's own per-channel statistics are
    used (population standard deviation), i.e. per-image standardization.
    Dataset-level statistics come from `channel_stats`.
    """
    if mean is None:
        mean = tensor.data.mean(axis=(0, 1))
    if std is None:
        std = tensor.data.std(axis=(0, 1))
    mean = np.broadcast_to(np.asarray(mean, dtype=np.float64), (tensor.channels,))
    std = np.broadcast_to(np.asarray(std, dtype=np.float64), (tensor.channels,))
    for ch in range(tensor.channels):
        # constant channels float-round to ~1e-17 rather than exactly 0
        if not np.isfinite(std[ch]) or std[ch] < 1e-12:
            raise ValidationError(f"channel {ch} has (near-)zero std {std[ch]}")
    return FeatureTensor((tensor.data - mean) / std)


def channel_stats(tensors) -> tuple[np.ndarray, np.ndarray]:
    """Pooled per-channel mean and population std over a collection of tensors."""
    count = 0
    total = None
    total_sq = None
    for t in tensors:
        flat = t.data.reshape(-1, t.channels)
        if total is None:
            total = flat.sum(axis=0)
            total_sq = np.square(flat).sum(axis=0)
        else:
            total += flat.sum(axis=0)
            total_sq += np.square(flat).sum(axis=0)
        count += flat.shape[0]
    if count == 0:
        raise ValidationError("cannot compute statistics over an empty collection")
    mean = total / count
    var = np.maximum(total_sq / count - np.square(mean), 0.0)
    return mean, np.sqrt(var)


def load_image(path) -> PixelImage:
    """Decode a PNG or JPEG file; palette/alpha images are converted to RGB."""
    with Image.open(path) as im:
        if im.mode == "L":
            arr = np.asarray(im, dtype=np.uint8)[:, :, None]
        else:
            if im.mode != "RGB":
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.uint8)
    return PixelImage(arr)


def save_png(img: PixelImage, path) -> None:
    """Encode to PNG (deterministic for identical pixel data)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    arr = img.pixels[:, :, 0] if img.channels == 1 else img.pixels
    Image.fromarray(arr).save(path, format="PNG")
