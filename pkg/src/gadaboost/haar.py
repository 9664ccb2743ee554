"""Haar rectangle features and integral images.

A grayscale image is any 2-D numpy array (rows = y, columns = x). Raw
images hold luminances in [0, 255]; training windows that went through
mean/variance normalization are plain float arrays. Both work here --
integral tables pick an integer or float accumulator to match.

Feature value convention: white region minus black region, with the
per-type compensation weights chosen so any constant image scores
exactly zero:

* ``HAAR_X2``   -- left half +1, right half -1
* ``HAAR_Y2``   -- top half +1, bottom half -1
* ``HAAR_X3``   -- outer thirds +1, middle third -2
* ``HAAR_Y3``   -- vertical analogue of ``HAAR_X3``
* ``HAAR_X2Y2`` -- checkerboard quadrants +1/-1 (diagonal +1)
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, List, Sequence, Tuple

import numpy as np


class HaarType(IntEnum):
    """The five upright feature types, coded 0-4 in chromosome order."""

    HAAR_X2 = 0
    HAAR_Y2 = 1
    HAAR_X3 = 2
    HAAR_Y3 = 3
    HAAR_X2Y2 = 4


# (width divisor, height divisor) each type's rectangle must satisfy
_DIVISORS = {
    HaarType.HAAR_X2: (2, 1),
    HaarType.HAAR_Y2: (1, 2),
    HaarType.HAAR_X3: (3, 1),
    HaarType.HAAR_Y3: (1, 3),
    HaarType.HAAR_X2Y2: (2, 2),
}


def type_divisors(htype: HaarType) -> Tuple[int, int]:
    """Return the (width, height) divisibility constraints of a type."""
    return _DIVISORS[HaarType(htype)]


@dataclass(frozen=True)
class HaarFeature:
    """One rectangle filter inside a detection window.

    ``(x, y)`` is the inclusive upper-left corner, ``(x1, y1)`` the
    exclusive lower-right corner, so width = x1 - x and height = y1 - y.
    The same five-field record doubles as the GA chromosome.
    """

    x: int
    y: int
    x1: int
    y1: int
    htype: HaarType

    @property
    def width(self) -> int:
        return self.x1 - self.x

    @property
    def height(self) -> int:
        return self.y1 - self.y

    def is_valid(self, window_w: int, window_h: int) -> bool:
        """Check geometry and the type's divisibility constraints."""
        if not (0 <= self.x < self.x1 <= window_w):
            return False
        if not (0 <= self.y < self.y1 <= window_h):
            return False
        kx, ky = _DIVISORS[HaarType(self.htype)]
        return self.width % kx == 0 and self.height % ky == 0

    def rects(self) -> List[Tuple[int, int, int, int, int]]:
        """Weighted sub-rectangles as (x, y, x1, y1, weight) tuples."""
        x, y, x1, y1 = self.x, self.y, self.x1, self.y1
        t = HaarType(self.htype)
        if t is HaarType.HAAR_X2:
            xm = x + self.width // 2
            return [(x, y, xm, y1, 1), (xm, y, x1, y1, -1)]
        if t is HaarType.HAAR_Y2:
            ym = y + self.height // 2
            return [(x, y, x1, ym, 1), (x, ym, x1, y1, -1)]
        if t is HaarType.HAAR_X3:
            w3 = self.width // 3
            return [
                (x, y, x + w3, y1, 1),
                (x + w3, y, x + 2 * w3, y1, -2),
                (x + 2 * w3, y, x1, y1, 1),
            ]
        if t is HaarType.HAAR_Y3:
            h3 = self.height // 3
            return [
                (x, y, x1, y + h3, 1),
                (x, y + h3, x1, y + 2 * h3, -2),
                (x, y + 2 * h3, x1, y1, 1),
            ]
        # HAAR_X2Y2
        xm = x + self.width // 2
        ym = y + self.height // 2
        return [
            (x, y, xm, ym, 1),
            (xm, y, x1, ym, -1),
            (x, ym, xm, y1, -1),
            (xm, ym, x1, y1, 1),
        ]


class IntegralImage:
    """Cumulative-sum tables for constant-time rectangle sums.

    ``sums`` and ``squared_sums`` have shape (height+1, width+1) with a
    zero padding row/column at index 0, so any rectangle sum is four
    table lookups. Integer images get int64 accumulators (rectangle
    sums are exact); float images get float64.
    """

    __slots__ = ("width", "height", "sums", "squared_sums")

    def __init__(self, width: int, height: int, sums: np.ndarray, squared_sums: np.ndarray):
        self.width = width
        self.height = height
        self.sums = sums
        self.squared_sums = squared_sums

    def rect_sum(self, x: int, y: int, x1: int, y1: int):
        """Sum of pixels over [x, x1) x [y, y1); zero for empty ranges."""
        s = self.sums
        return s[y1, x1] - s[y, x1] - s[y1, x] + s[y, x]

    def rect_sum_sq(self, x: int, y: int, x1: int, y1: int):
        s = self.squared_sums
        return s[y1, x1] - s[y, x1] - s[y1, x] + s[y, x]

    def window_stddev(self, x: int, y: int, x1: int, y1: int) -> float:
        """Pixel standard deviation over a window, floored away from zero."""
        n = (x1 - x) * (y1 - y)
        s1 = float(self.rect_sum(x, y, x1, y1))
        s2 = float(self.rect_sum_sq(x, y, x1, y1))
        var = s2 / n - (s1 / n) ** 2
        sd = np.sqrt(max(var, 0.0))
        return sd if sd > 1e-12 else 1.0


def compute_integral(img: np.ndarray) -> IntegralImage:
    """Build the padded cumulative tables for a 2-D image."""
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D image, got shape {img.shape}")
    h, w = img.shape
    dtype = np.int64 if np.issubdtype(img.dtype, np.integer) else np.float64
    px = img.astype(dtype)
    sums = np.zeros((h + 1, w + 1), dtype=dtype)
    sq = np.zeros((h + 1, w + 1), dtype=dtype)
    np.cumsum(np.cumsum(px, axis=0), axis=1, out=sums[1:, 1:])
    np.cumsum(np.cumsum(px * px, axis=0), axis=1, out=sq[1:, 1:])
    return IntegralImage(w, h, sums, sq)


def eval_feature(ii: IntegralImage, f: HaarFeature, ox: int = 0, oy: int = 0) -> float:
    """Evaluate a feature placed at offset (ox, oy) inside the image."""
    if ox < 0 or oy < 0 or ox + f.x1 > ii.width or oy + f.y1 > ii.height:
        raise ValueError(
            f"feature {f} at offset ({ox}, {oy}) exceeds image {ii.width}x{ii.height}"
        )
    total = 0.0
    for rx, ry, rx1, ry1, wgt in f.rects():
        total += wgt * ii.rect_sum(ox + rx, oy + ry, ox + rx1, oy + ry1)
    return float(total)


def enumerate_features(window_w: int, window_h: int) -> List[HaarFeature]:
    """All valid features of a window, each once, in canonical order.

    Order is type-major, then y, x, y1, x1 -- which coincides with
    ascending ``canonical_id``.
    """
    if window_w < 1 or window_h < 1:
        raise ValueError("window dimensions must be >= 1")
    out: List[HaarFeature] = []
    for htype in HaarType:
        kx, ky = _DIVISORS[htype]
        for y in range(window_h):
            for x in range(window_w):
                for y1 in range(y + ky, window_h + 1, ky):
                    for x1 in range(x + kx, window_w + 1, kx):
                        out.append(HaarFeature(x, y, x1, y1, htype))
    return out


def feature_space_size(window_w: int, window_h: int) -> int:
    """Closed-form count of valid features (no enumeration)."""

    def pairs(n: int, k: int) -> int:
        # ordered (a, a1) with 0 <= a < a1 <= n and (a1 - a) % k == 0
        return sum(n - w + 1 for w in range(k, n + 1, k))

    total = 0
    for htype in HaarType:
        kx, ky = _DIVISORS[htype]
        total += pairs(window_w, kx) * pairs(window_h, ky)
    return total


def canonical_id(f: HaarFeature, window_w: int, window_h: int) -> int:
    """Stable injective integer id of a valid feature within a window."""
    if not f.is_valid(window_w, window_h):
        raise ValueError(f"invalid feature {f} for window {window_w}x{window_h}")
    # mixed radix over (type, y, x, y1, x1); injective over all tuples
    code = int(f.htype)
    code = code * (window_h + 1) + f.y
    code = code * (window_w + 1) + f.x
    code = code * (window_h + 1) + f.y1
    code = code * (window_w + 1) + f.x1
    return code


# ---------------------------------------------------------------------------
# Batched evaluation over stacks of window integral tables.
# ---------------------------------------------------------------------------

_MAX_CORNERS = 16  # 4 rects x 4 corners (X2Y2); others pad with weight 0


def corner_table(features: Sequence[HaarFeature], table_w: int) -> Tuple[np.ndarray, np.ndarray]:
    """Flattened corner lookups for a feature list.

    Returns ``(idx, wgt)``, each of shape (n_features, 16): ``idx`` holds
    indices into a flattened (h+1, w+1) integral table of row width
    ``table_w`` = window_w + 1, ``wgt`` the inclusion-exclusion weights.
    """
    n = len(features)
    idx = np.zeros((n, _MAX_CORNERS), dtype=np.int64)
    wgt = np.zeros((n, _MAX_CORNERS), dtype=np.float64)
    for i, f in enumerate(features):
        c = 0
        for rx, ry, rx1, ry1, w in f.rects():
            for yy, xx, sign in ((ry1, rx1, 1), (ry, rx1, -1), (ry1, rx, -1), (ry, rx, 1)):
                idx[i, c] = yy * table_w + xx
                wgt[i, c] = sign * w
                c += 1
    return idx, wgt


def feature_values(flat_sums: np.ndarray, idx: np.ndarray, wgt: np.ndarray,
                   block: slice | None = None) -> np.ndarray:
    """Feature values for every (sample, feature) pair.

    ``flat_sums`` is the (n_samples, (h+1)*(w+1)) stack of flattened
    integral tables; ``idx``/``wgt`` come from :func:`corner_table`.
    Returns an (n_samples, n_features) float64 matrix.
    """
    if block is not None:
        idx = idx[block]
        wgt = wgt[block]
    n = flat_sums.shape[0]
    out = np.zeros((n, idx.shape[0]), dtype=np.float64)
    for c in range(idx.shape[1]):
        w_c = wgt[:, c]
        live = w_c != 0.0
        if not live.any():
            continue
        out += flat_sums[:, idx[:, c]] * w_c
    return out
