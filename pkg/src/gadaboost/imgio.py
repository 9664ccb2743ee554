"""Image and annotation file plumbing.

Binary PGM (P5, 8-bit) is the native format; other formats are read
through Pillow when it is installed. Annotations are one line per
image: ``path n x y w h [x y w h ...]``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np


class ImageFormatError(ValueError):
    pass


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit binary PGM into a uint8 (h, w) array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ImageFormatError(f"{path}: not a binary PGM (P5) file")

    # header tokens: magic, width, height, maxval; '#' starts a comment
    tokens: List[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval

    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError as e:
        raise ImageFormatError(f"{path}: bad PGM header") from e
    if maxval <= 0 or maxval > 255:
        raise ImageFormatError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    raster = data[pos:pos + w * h]
    if len(raster) != w * h:
        raise ImageFormatError(f"{path}: truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


def write_pgm(path, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.ndim != 2:
        raise ImageFormatError("image must be 2-D")
    arr = np.clip(np.round(img), 0, 255).astype(np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


def read_gray(path) -> np.ndarray:
    """Read a grayscale image: PGM natively, anything else via Pillow."""
    if str(path).lower().endswith(".pgm"):
        return read_pgm(path)
    try:
        from PIL import Image
    except ImportError as e:
        raise ImageFormatError(
            f"{path}: only PGM is supported without Pillow installed"
        ) from e
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except Exception as e:
        raise ImageFormatError(f"{path}: cannot decode image ({e})") from e


def normalize_window(win: np.ndarray) -> np.ndarray:
    """Mean-subtract and scale a window to unit pixel variance.

    Matches the deviation the detector computes from integral tables
    (population std, floored at 1 for flat windows) so thresholds
    learned on normalized samples transfer to detection-time scoring.
    """
    win = np.asarray(win, dtype=np.float64)
    mean = win.mean()
    var = (win * win).mean() - mean * mean
    sd = np.sqrt(max(float(var), 0.0))
    if sd <= 1e-12:
        sd = 1.0
    return (win - mean) / sd


def resample_window(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Block-mean downsample to (out_h, out_w); identity when same size."""
    src = np.asarray(src, dtype=np.float64)
    h, w = src.shape
    if (h, w) == (out_h, out_w):
        return src.copy()
    if h < out_h or w < out_w:
        raise ValueError(f"cannot block-resample {h}x{w} up to {out_h}x{out_w}")
    # integral table makes every block sum four lookups
    tab = np.zeros((h + 1, w + 1))
    np.cumsum(np.cumsum(src, axis=0), axis=1, out=tab[1:, 1:])
    ye = np.floor(np.linspace(0, h, out_h + 1) + 0.5).astype(int)
    xe = np.floor(np.linspace(0, w, out_w + 1) + 0.5).astype(int)
    sums = (tab[np.ix_(ye[1:], xe[1:])] - tab[np.ix_(ye[:-1], xe[1:])]
            - tab[np.ix_(ye[1:], xe[:-1])] + tab[np.ix_(ye[:-1], xe[:-1])])
    areas = np.outer(ye[1:] - ye[:-1], xe[1:] - xe[:-1])
    return sums / areas


@dataclass(frozen=True)
class AnnotationRecord:
    """Ground-truth boxes of one image."""

    image: str
    boxes: Tuple[Tuple[int, int, int, int], ...]


def load_annotations(path, check_files: bool = True) -> List[AnnotationRecord]:
    """Parse ``path n x y w h ...`` lines; paths resolve next to the file."""
    base = os.path.dirname(os.path.abspath(path))
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                n = int(parts[1])
                nums = [int(v) for v in parts[2:]]
            except (IndexError, ValueError) as e:
                raise ValueError(f"{path}:{lineno}: malformed annotation") from e
            if len(nums) != 4 * n:
                raise ValueError(
                    f"{path}:{lineno}: expected {4 * n} box numbers, got {len(nums)}"
                )
            boxes = tuple(
                (nums[i], nums[i + 1], nums[i + 2], nums[i + 3])
                for i in range(0, len(nums), 4)
            )
            if any(bw <= 0 or bh <= 0 for _, _, bw, bh in boxes):
                raise ValueError(f"{path}:{lineno}: box with non-positive size")
            if check_files and not os.path.exists(os.path.join(base, parts[0])):
                raise FileNotFoundError(
                    f"{path}:{lineno}: image {parts[0]!r} not found"
                )
            records.append(AnnotationRecord(parts[0], boxes))
    return records


def save_annotations(path, records: Sequence[AnnotationRecord]) -> None:
    with open(path, "w") as fh:
        for r in records:
            flat = " ".join(
                f"{x} {y} {w} {h}" for x, y, w, h in r.boxes
            )
            fh.write(f"{r.image} {len(r.boxes)}{' ' if flat else ''}{flat}\n")


def eyes_to_box(lx: float, ly: float, rx: float, ry: float) -> Tuple[int, int, int, int]:
    """Square face box from eye centers (eye distance = half face width)."""
    dist = float(np.hypot(rx - lx, ry - ly))
    side = max(int(round(2.0 * dist)), 1)
    cx = (lx + rx) / 2.0
    cy = (ly + ry) / 2.0
    return int(round(cx - side / 2.0)), int(round(cy - side / 2.0)), side, side


DETECTIONS_HEADER = "image,x,y,w,h,score"


def write_detections_csv(path, rows: Sequence[Tuple[str, int, int, int, int, float]]) -> None:
    with open(path, "w") as fh:
        fh.write(DETECTIONS_HEADER + "\n")
        for image, x, y, w, h, score in rows:
            fh.write(f"{image},{x},{y},{w},{h},{float(score)!r}\n")


def read_detections_csv(path) -> List[Tuple[str, int, int, int, int, float]]:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != DETECTIONS_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, 2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 columns")
            image, x, y, w, h, score = parts
            rows.append((image, int(x), int(y), int(w), int(h), float(score)))
    return rows
