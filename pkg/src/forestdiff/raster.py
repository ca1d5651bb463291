"""Binary change masks: representation, patch analytics, differencing, overlays.

All functions here are pure; masks are small enough (typically 256x256) that
everything returns fresh arrays rather than mutating inputs.
"""

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import kernels

CELL_NAMES = (
    "top-left", "top-center", "top-right",
    "center-left", "center", "center-right",
    "bottom-left", "bottom-center", "bottom-right",
)


class ChangeMask:
    """A row-major binary grid, 1 = change.

    The constructor is strict (cells must already be 0/1); use
    :meth:`from_array` to apply the nonzero-means-change ingestion rule.
    """

    __slots__ = ("bits",)

    def __init__(self, bits):
        arr = np.ascontiguousarray(bits, dtype=np.uint8)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("mask must be a non-empty 2-d grid")
        if arr.max() > 1:
            raise ValueError("mask cells must be 0 or 1")
        self.bits = arr

    @classmethod
    def from_array(cls, arr):
        a = np.asarray(arr)
        if a.ndim == 3:  # collapse accidental rgb masks
            a = a.max(axis=2)
        return cls((a != 0).astype(np.uint8))

    @classmethod
    def read_png(cls, path):
        with Image.open(path) as im:
            return cls.from_array(np.asarray(im.convert("L")))

    def write_png(self, path):
        Image.fromarray(self.bits * np.uint8(255), mode="L").save(path)

    @property
    def height(self):
        return self.bits.shape[0]

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def count(self):
        return int(self.bits.sum())

    def __eq__(self, other):
        return isinstance(other, ChangeMask) and np.array_equal(self.bits, other.bits)

    def __repr__(self):
        return "ChangeMask(%dx%d, %d change px)" % (self.width, self.height, self.count)


class BitemporalPair:
    """Pre-aligned RGB rasters at two times, plus an optional truth mask."""

    __slots__ = ("image_a", "image_b", "ground_truth")

    def __init__(self, image_a, image_b, ground_truth=None):
        a = np.ascontiguousarray(image_a, dtype=np.uint8)
        b = np.ascontiguousarray(image_b, dtype=np.uint8)
        if a.ndim != 3 or a.shape[2] != 3:
            raise ValueError("images must be HxWx3")
        if a.shape != b.shape:
            raise ValueError("image dimensions differ")
        if ground_truth is not None and ground_truth.bits.shape != a.shape[:2]:
            raise ValueError("ground truth dimensions differ")
        self.image_a = a
        self.image_b = b
        self.ground_truth = ground_truth

    @property
    def height(self):
        return self.image_a.shape[0]

    @property
    def width(self):
        return self.image_a.shape[1]


@dataclass(frozen=True)
class Patch:
    id: int
    area: int
    bbox: tuple  # (min_row, min_col, max_row, max_col), inclusive
    centroid: tuple  # (row, col)


@dataclass(frozen=True)
class PatchStats:
    count: int
    mean_area: float
    std_area: float
    coefficient_of_variation: float


@dataclass(frozen=True)
class SpatialDistribution:
    shares: dict  # cell name -> fraction of change area
    concentrated: tuple  # cell names with share >= 0.25, descending share
    scattered: bool


def change_fraction(mask):
    """Fraction of cells set to 1."""
    return mask.count / (mask.width * mask.height)


def connected_patches(mask, connectivity=8):
    """Maximal connected change regions, largest first (ties by bbox corner)."""
    labels, n = kernels.label_components(mask.bits, connectivity)
    area, min_row, min_col, max_row, max_col, sum_row, sum_col = \
        kernels.region_stats(labels, n)
    order = sorted(range(n), key=lambda i: (-area[i], min_row[i], min_col[i]))
    patches = []
    for rank, i in enumerate(order):
        patches.append(Patch(
            id=rank,
            area=int(area[i]),
            bbox=(int(min_row[i]), int(min_col[i]), int(max_row[i]), int(max_col[i])),
            centroid=(float(sum_row[i] / area[i]), float(sum_col[i] / area[i])),
        ))
    return patches


def patch_statistics(patches):
    """Count / mean / population std / CV over patch areas.

    CV is defined as 0 when there are fewer than two patches.
    """
    n = len(patches)
    if n == 0:
        return PatchStats(0, 0.0, 0.0, 0.0)
    areas = np.array([p.area for p in patches], dtype=np.float64)
    mean = float(areas.mean())
    std = float(areas.std())  # population std
    cv = std / mean if n > 1 and mean > 0 else 0.0
    return PatchStats(n, mean, std, cv)


def spatial_distribution(patches, width, height):
    """Credit each patch's area to the 3x3 grid cell holding its centroid.

    "concentrated" lists cells with share >= 0.25 (descending share);
    "scattered" means no such cell and at least 4 occupied cells.
    """
    if width < 3 or height < 3:
        raise ValueError("grid needs width and height >= 3")
    cell_area = np.zeros(9, dtype=np.float64)
    for p in patches:
        row = min(2, int(p.centroid[0] * 3 / height))
        col = min(2, int(p.centroid[1] * 3 / width))
        cell_area[row * 3 + col] += p.area
    total = cell_area.sum()
    shares = cell_area / total if total > 0 else cell_area
    named = dict(zip(CELL_NAMES, shares.tolist()))
    hot = [i for i in range(9) if shares[i] >= 0.25]
    hot.sort(key=lambda i: -shares[i])
    concentrated = tuple(CELL_NAMES[i] for i in hot)
    scattered = not hot and int(np.count_nonzero(shares)) >= 4
    return SpatialDistribution(named, concentrated, scattered)


@dataclass(frozen=True)
class DiffConfig:
    blur_sigma: float = 1.0
    threshold_mode: str = "otsu"  # "otsu" or "fixed"
    threshold_value: float = 0.0  # used by "fixed", raw distance units
    min_area: int = 50
    morph_radius: int = 1

    def __post_init__(self):
        if self.threshold_mode not in ("otsu", "fixed"):
            raise ValueError("threshold_mode must be 'otsu' or 'fixed'")
        if self.min_area < 0 or self.morph_radius < 0:
            raise ValueError("min_area and morph_radius must be >= 0")


def _gaussian_blur(img, sigma):
    if sigma <= 0:
        return img
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    k /= k.sum()
    # separable passes with reflect padding
    pad = np.pad(img, ((radius, radius), (0, 0)), mode="reflect")
    out = np.zeros_like(img)
    for i, wgt in enumerate(k):
        out += wgt * pad[i:i + img.shape[0], :]
    pad = np.pad(out, ((0, 0), (radius, radius)), mode="reflect")
    out = np.zeros_like(img)
    for i, wgt in enumerate(k):
        out += wgt * pad[:, i:i + img.shape[1]]
    return out


def _otsu_threshold(values):
    """Otsu's threshold over a 256-bin histogram of values scaled to [0, 255]."""
    hist = np.bincount(values.astype(np.int64).ravel(), minlength=256)[:256]
    total = hist.sum()
    if total == 0:
        return 0
    w = np.cumsum(hist)
    m = np.cumsum(hist * np.arange(256))
    mean_total = m[-1] / total
    w0 = w / total
    w1 = 1.0 - w0
    mu0 = np.divide(m / total, w0, out=np.zeros(256), where=w0 > 0)
    mu1 = np.divide(mean_total - m / total, w1, out=np.zeros(256), where=w1 > 0)
    between = w0 * w1 * (mu0 - mu1) ** 2
    return int(np.argmax(between))


def difference_mask(pair, cfg=DiffConfig()):
    """Classical change detector: RGB distance, blur, threshold, clean up."""
    a = pair.image_a.astype(np.float64)
    b = pair.image_b.astype(np.float64)
    dist = np.sqrt(((a - b) ** 2).sum(axis=2))
    dist = _gaussian_blur(dist, cfg.blur_sigma)
    if cfg.threshold_mode == "otsu":
        # scale max distance 255*sqrt(3) onto the 8-bit histogram axis
        scaled = np.clip(np.rint(dist / math.sqrt(3.0)), 0, 255)
        mask = (scaled > _otsu_threshold(scaled)).astype(np.uint8)
    elif cfg.threshold_mode == "fixed":
        mask = (dist > cfg.threshold_value).astype(np.uint8)
    else:
        raise ValueError("threshold_mode must be 'otsu' or 'fixed'")
    if cfg.morph_radius > 0:
        off = kernels.disk_offsets(cfg.morph_radius)
        mask = kernels.binary_close(kernels.binary_open(mask, off), off)
    if cfg.min_area > 0:
        labels, n = kernels.label_components(mask, 8)
        if n:
            area = kernels.region_stats(labels, n)[0]
            keep = np.concatenate([[0], (area >= cfg.min_area)]).astype(np.uint8)
            mask = keep[labels]
    return ChangeMask(mask)


def overlay(pred, gt, base):
    """Paint agreement and disagreement over the base image.

    TP yellow, FP red, FN green, everything else untouched.
    """
    if pred.bits.shape != gt.bits.shape or base.shape[:2] != pred.bits.shape:
        raise ValueError("overlay inputs must share dimensions")
    if base.ndim != 3 or base.shape[2] != 3:
        raise ValueError("base must be HxWx3")
    out = base.astype(np.uint8).copy()
    p = pred.bits.astype(bool)
    g = gt.bits.astype(bool)
    out[p & g] = (255, 255, 0)
    out[p & ~g] = (255, 0, 0)
    out[~p & g] = (0, 255, 0)
    return out


def read_rgb_png(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB")).copy()


def write_rgb_png(arr, path):
    a = np.ascontiguousarray(arr, dtype=np.uint8)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError("expected HxWx3 array")
    Image.fromarray(a, mode="RGB").save(path)
