"""Color-space conversion, cover masks, hue spectra, and hue-range handling.

Hue lives on a 0-360 degree scale split into 360 one-degree bins; bin i
covers [i, i+1). Achromatic pixels (saturation 0) carry no hue and are
excluded from spectra unless a caller opts out.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

HUE_BINS = 360
DEFAULT_SAT_MIN = 0.05


class DimensionMismatch(ValueError):
    """Raised when an image and a mask disagree on width/height."""


@dataclass(frozen=True)
class HsvPixel:
    """Hexcone HSV value of a single pixel.

    ``hue_defined`` is False exactly when saturation is 0; ``h`` is then 0
    by convention.
    """

    h: float
    s: float
    v: float
    hue_defined: bool


@dataclass
class RgbImage:
    """8-bit RGB raster, stored row-major as a (height, width, 3) uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected (h, w, 3) uint8 array, got shape {arr.shape}")
        self.data = arr

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @classmethod
    def load(cls, path: str | Path) -> "RgbImage":
        with Image.open(path) as im:
            return cls(np.asarray(im.convert("RGB")))

    @classmethod
    def from_bytes(cls, blob: bytes) -> "RgbImage":
        with Image.open(io.BytesIO(blob)) as im:
            return cls(np.asarray(im.convert("RGB")))

    def save(self, path: str | Path) -> None:
        Image.fromarray(self.data, mode="RGB").save(path)

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.data, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()


@dataclass
class CoverMask:
    """Per-class binary raster aligned to an image, (height, width) bool."""

    class_name: str
    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2:
            raise ValueError(f"expected (h, w) mask, got shape {arr.shape}")
        self.bits = arr.astype(bool)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    @classmethod
    def load(cls, path: str | Path, class_name: str) -> "CoverMask":
        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"))
        return cls(class_name, arr != 0)

    @classmethod
    def from_bytes(cls, blob: bytes, class_name: str) -> "CoverMask":
        with Image.open(io.BytesIO(blob)) as im:
            arr = np.asarray(im.convert("L"))
        return cls(class_name, arr != 0)

    def save(self, path: str | Path) -> None:
        Image.fromarray(self.bits.astype(np.uint8) * 255, mode="L").save(path)

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.bits.astype(np.uint8) * 255, mode="L").save(buf, format="PNG")
        return buf.getvalue()


@dataclass
class HueSpectrum:
    """Normalized 360-bin hue histogram plus the contributing pixel count."""

    bins: np.ndarray
    pixel_count: int

    def __post_init__(self):
        arr = np.asarray(self.bins, dtype=np.float64)
        if arr.shape != (HUE_BINS,):
            raise ValueError(f"expected {HUE_BINS} bins, got shape {arr.shape}")
        self.bins = arr

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["bin", "fraction"])
        for i, frac in enumerate(self.bins):
            w.writerow([i, repr(float(frac))])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str, pixel_count: int = 0) -> "HueSpectrum":
        rows = list(csv.reader(io.StringIO(text)))
        bins = np.zeros(HUE_BINS)
        for row in rows[1:]:
            bins[int(row[0])] = float(row[1])
        return cls(bins, pixel_count)


@dataclass
class HueRangeSet:
    """Union of inclusive integer hue intervals, sorted and pairwise disjoint."""

    intervals: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        ivs = [(int(lo), int(hi)) for lo, hi in self.intervals]
        for lo, hi in ivs:
            if not (0 <= lo <= hi <= HUE_BINS - 1):
                raise ValueError(f"interval [{lo},{hi}] outside [0,{HUE_BINS - 1}]")
        ivs.sort()
        for (_, hi_a), (lo_b, _) in zip(ivs, ivs[1:]):
            if lo_b <= hi_a:
                raise ValueError(f"overlapping intervals around [{lo_b},...]")
        self.intervals = ivs

    def contains(self, hue: float) -> bool:
        b = int(hue) if hue < HUE_BINS else HUE_BINS - 1
        return any(lo <= b <= hi for lo, hi in self.intervals)

    def membership(self, hues: np.ndarray) -> np.ndarray:
        """Vectorized bin-level containment test for an array of hue degrees."""
        bins = np.minimum(np.floor(hues).astype(np.int64), HUE_BINS - 1)
        ok = np.zeros(bins.shape, dtype=bool)
        for lo, hi in self.intervals:
            ok |= (bins >= lo) & (bins <= hi)
        return ok

    def total_width(self) -> int:
        return sum(hi - lo + 1 for lo, hi in self.intervals)

    def to_json(self) -> str:
        return json.dumps([[lo, hi] for lo, hi in self.intervals])

    @classmethod
    def from_json(cls, text: str) -> "HueRangeSet":
        return cls([(lo, hi) for lo, hi in json.loads(text)])

    def to_text(self) -> str:
        """Inverse of parse: ``25-55,210-235``."""
        return ",".join(f"{lo}-{hi}" for lo, hi in self.intervals)

    @classmethod
    def parse(cls, text: str) -> "HueRangeSet":
        """Parse a CLI-style spec like ``55-125`` or ``25-55,210-235``."""
        ivs = []
        for part in text.split(","):
            lo, _, hi = part.partition("-")
            ivs.append((int(lo), int(hi if hi else lo)))
        return cls(ivs)


def rgb_to_hsv(pixel: tuple[int, int, int]) -> HsvPixel:
    """Convert one 8-bit RGB triple to hexcone HSV.

    h in [0, 360), s = delta/max (0 when max = 0), v = max/255. Total
    function: every input maps to a value, gray pixels get hue_defined False.
    """
    r, g, b = (int(c) for c in pixel)
    mx = max(r, g, b)
    mn = min(r, g, b)
    delta = mx - mn
    v = mx / 255.0
    s = delta / mx if mx > 0 else 0.0
    if delta == 0:
        return HsvPixel(0.0, s, v, False)
    if mx == r:
        h = 60.0 * (((g - b) / delta) % 6.0)
    elif mx == g:
        h = 60.0 * ((b - r) / delta + 2.0)
    else:
        h = 60.0 * ((r - g) / delta + 4.0)
    if h >= 360.0:
        h -= 360.0
    return HsvPixel(h, s, v, True)


def hsv_to_rgb(h: float, s: float, v: float) -> tuple[int, int, int]:
    """Exact inverse of :func:`rgb_to_hsv` after rounding to 8 bits."""
    if s <= 0.0:
        c = int(round(v * 255.0))
        return (c, c, c)
    hp = (h % 360.0) / 60.0
    i = int(hp) % 6
    f = hp - int(hp)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    rgb = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][i]
    return tuple(int(round(c * 255.0)) for c in rgb)


def hsv_channels(img: RgbImage) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel (h, s, v, hue_defined) planes for a whole image.

    Same formulas as :func:`rgb_to_hsv`, vectorized; float64 planes.
    """
    rgb = img.data.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=2)
    mn = rgb.min(axis=2)
    delta = mx - mn
    v = mx / 255.0
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(mx > 0, delta / np.where(mx > 0, mx, 1.0), 0.0)
    defined = delta > 0
    safe = np.where(defined, delta, 1.0)
    h = np.zeros_like(mx)
    is_r = defined & (mx == r)
    is_g = defined & ~is_r & (mx == g)
    is_b = defined & ~is_r & ~is_g
    h = np.where(is_r, 60.0 * (((g - b) / safe) % 6.0), h)
    h = np.where(is_g, 60.0 * ((b - r) / safe + 2.0), h)
    h = np.where(is_b, 60.0 * ((r - g) / safe + 4.0), h)
    h = np.where(h >= 360.0, h - 360.0, h)
    return h, s, v, defined


def hsv_to_rgb_array(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vectorized HSV -> 8-bit RGB; counterpart of :func:`hsv_to_rgb`."""
    hp = (np.asarray(h, dtype=np.float64) % 360.0) / 60.0
    i = hp.astype(np.int64) % 6
    f = hp - np.floor(hp)
    s = np.asarray(s, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    gray = s <= 0.0
    r = np.where(gray, v, r)
    g = np.where(gray, v, g)
    b = np.where(gray, v, b)
    out = np.stack([r, g, b], axis=-1) * 255.0
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def _check_dims(img: RgbImage, mask: CoverMask) -> None:
    if (img.height, img.width) != (mask.height, mask.width):
        raise DimensionMismatch(
            f"image is {img.width}x{img.height} but mask '{mask.class_name}' "
            f"is {mask.width}x{mask.height}"
        )


def compute_hue_spectrum(img: RgbImage, mask: CoverMask, sat_min: float = DEFAULT_SAT_MIN) -> HueSpectrum:
    """Normalized hue histogram over masked pixels with defined hue and s >= sat_min."""
    _check_dims(img, mask)
    if not 0.0 <= sat_min <= 1.0:
        raise ValueError(f"sat_min must be in [0,1], got {sat_min}")
    h, s, _, defined = hsv_channels(img)
    keep = mask.bits & defined & (s >= sat_min)
    count = int(keep.sum())
    bins = np.zeros(HUE_BINS)
    if count > 0:
        idx = np.minimum(np.floor(h[keep]).astype(np.int64), HUE_BINS - 1)
        bins = np.bincount(idx, minlength=HUE_BINS).astype(np.float64) / count
    return HueSpectrum(bins, count)


def _nonzero_runs(bins: np.ndarray) -> list[tuple[int, int]]:
    runs = []
    start = None
    for i in range(HUE_BINS):
        if bins[i] > 0 and start is None:
            start = i
        elif bins[i] <= 0 and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, HUE_BINS - 1))
    return runs


def _merge_runs(runs: list[tuple[int, int]], max_intervals: int) -> list[tuple[int, int]]:
    # Bridge the smallest inter-run gaps until at most max_intervals remain.
    if len(runs) <= max_intervals:
        return runs
    gaps = [(runs[i + 1][0] - runs[i][1] - 1, i) for i in range(len(runs) - 1)]
    gaps.sort(key=lambda g: (g[0], g[1]))
    bridge = sorted(i for _, i in gaps[: len(runs) - max_intervals])
    merged = []
    cur_lo, cur_hi = runs[0]
    for i in range(1, len(runs)):
        if (i - 1) in bridge:
            cur_hi = runs[i][1]
        else:
            merged.append((cur_lo, cur_hi))
            cur_lo, cur_hi = runs[i]
    merged.append((cur_lo, cur_hi))
    return merged


def derive_hue_ranges(spectrum: HueSpectrum, mass: float = 0.95, max_intervals: int = 2) -> HueRangeSet:
    """Smallest-total-width union of intervals capturing at least ``mass``.

    Dynamic program over the 360 bins: for every (interval count, total
    width) it tracks the best capturable mass, then picks the minimum width
    meeting the target. The auto-derived set is a starting point; callers
    may always override it by hand.
    """
    if not 0.0 < mass <= 1.0:
        raise ValueError(f"mass must be in (0,1], got {mass}")
    if max_intervals < 1:
        raise ValueError(f"max_intervals must be >= 1, got {max_intervals}")
    if spectrum.pixel_count == 0:
        raise ValueError("cannot derive ranges from an empty spectrum")
    bins = spectrum.bins
    total = float(bins.sum())
    if total <= 0:
        raise ValueError("cannot derive ranges from an all-zero spectrum")
    target = mass * total - 1e-12

    runs = _nonzero_runs(bins)
    if mass >= 1.0:
        return HueRangeSet(_merge_runs(runs, max_intervals))

    m = min(max_intervals, sum(hi - lo + 1 for lo, hi in runs), 180)
    W = HUE_BINS
    neg = -1.0
    # dp[open, j, w]: best mass over a prefix of bins using j intervals of
    # total width w; open means the latest interval still covers the last bin.
    dp = np.full((2, m + 1, W + 1), neg)
    dp[0, 0, 0] = 0.0
    choice = np.zeros((HUE_BINS, 2, m + 1, W + 1), dtype=np.int8)
    for b in range(HUE_BINS):
        mb = float(bins[b])
        new = np.full_like(dp, neg)
        # bin b left uncovered: inherit, closing any open interval
        stay = np.maximum(dp[0], dp[1])
        new[0] = stay
        choice[b, 0] = (dp[1] > dp[0]).astype(np.int8)
        # bin b covered: extend the open interval or open a new one
        ext = np.full((m + 1, W + 1), neg)
        ext[:, 1:] = dp[1, :, :-1]
        opn = np.full((m + 1, W + 1), neg)
        opn[1:, 1:] = dp[0, :-1, :-1]
        best = np.maximum(ext, opn)
        cov = np.where(best > neg, best + mb, neg)
        new[1] = cov
        choice[b, 1] = (opn > ext).astype(np.int8)
        dp = new

    final = np.maximum(dp[0], dp[1])
    best_w = None
    best_j = None
    for w in range(1, W + 1):  # w >= 1: the result must be usable as a filter
        js = np.nonzero(final[:, w] >= target)[0]
        if js.size:
            best_w, best_j = w, int(js[0])
            break
    if best_w is None:  # mass <= 1 makes full coverage always feasible
        raise ValueError("no interval set reaches the requested mass")

    covered = np.zeros(HUE_BINS, dtype=bool)
    open_flag = 0 if dp[0, best_j, best_w] >= dp[1, best_j, best_w] else 1
    j, w = best_j, best_w
    for b in range(HUE_BINS - 1, -1, -1):
        c = choice[b, open_flag, j, w]
        if open_flag == 0:
            open_flag = int(c)
        else:
            covered[b] = True
            w -= 1
            if c == 1:
                j -= 1
                open_flag = 0
            else:
                open_flag = 1
    intervals = []
    start = None
    for i in range(HUE_BINS):
        if covered[i] and start is None:
            start = i
        elif not covered[i] and start is not None:
            intervals.append((start, i - 1))
            start = None
    if start is not None:
        intervals.append((start, HUE_BINS - 1))
    return HueRangeSet(intervals)


def refine_mask(
    mask: CoverMask,
    img: RgbImage,
    ranges: HueRangeSet,
    sat_min: float = DEFAULT_SAT_MIN,
    keep_undefined: bool = False,
) -> CoverMask:
    """Filter a painted mask down to pixels whose hue falls in ``ranges``.

    A pixel survives iff its mask bit is set, its hue is defined, s >=
    sat_min, and its hue bin lies inside some interval. ``keep_undefined``
    is the bare-soil escape hatch: achromatic pixels (deep shadow, gray
    albedo) then pass unconditionally instead of being dropped.
    """
    _check_dims(img, mask)
    if not ranges.intervals:
        raise ValueError("refine_mask requires a non-empty hue range set")
    h, s, _, defined = hsv_channels(img)
    ok = defined & (s >= sat_min) & ranges.membership(h)
    if keep_undefined:
        ok |= ~defined
    return CoverMask(mask.class_name, mask.bits & ok)
