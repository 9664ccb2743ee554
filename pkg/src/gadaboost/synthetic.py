"""Seeded synthetic corpus for desk-scale experiments.

Positives imitate the coarse contrast layout of an upright frontal
face: a dark horizontal eye band plus a dark mouth patch on a lighter
background, with per-sample brightness, contrast, band-position and
noise jitter. Negatives are textured images carrying *partial*
look-alikes -- a lone band, a lone patch, or the right parts in the
wrong layout -- so no single rectangle filter separates the classes
and harvested false positives stay plentiful deep into a cascade.
All values are raw luminances in [0, 255]; normalize at ingestion like
any other corpus.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np


def _clip(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0.0, 255.0)


def _eye_band(img: np.ndarray, rng: np.random.Generator, top_frac: float,
              depth: float) -> None:
    h, w = img.shape
    top = max(0, int(top_frac * h) + int(rng.integers(-2, 3)))
    bot = min(h, max(top + 1, top + max(2, int(0.24 * h))))
    x0, x1 = int(0.08 * w), max(int(0.08 * w) + 1, int(0.92 * w))
    img[top:bot, x0:x1] -= depth


def _mouth_patch(img: np.ndarray, rng: np.random.Generator, top_frac: float,
                 depth: float) -> None:
    h, w = img.shape
    top = max(0, int(top_frac * h) + int(rng.integers(-2, 3)))
    bot = min(h, max(top + 1, top + max(2, int(0.20 * h))))
    x0, x1 = int(0.28 * w), max(int(0.28 * w) + 1, int(0.72 * w))
    img[top:bot, x0:x1] -= depth


def face_window(rng: np.random.Generator, w: int = 19, h: int = 19,
                noise: float = 45.0) -> np.ndarray:
    """One raw face-like window: eye band up top, mouth patch below."""
    img = np.full((h, w), rng.uniform(130.0, 200.0))
    _eye_band(img, rng, 0.18, rng.uniform(35.0, 75.0))
    _mouth_patch(img, rng, 0.62, rng.uniform(30.0, 65.0))
    img = (img - 128.0) * rng.uniform(0.75, 1.25) + 128.0
    img += rng.normal(0.0, noise, size=img.shape)
    return _clip(img)


def distractor_window(rng: np.random.Generator, w: int, h: int,
                      noise: float = 45.0) -> np.ndarray:
    """A non-face that shares structure with faces.

    Kinds: lone eye band, lone mouth patch, swapped layout (patch on
    top, band at the bottom), double band at face-unlike spacing, or a
    smooth gradient.
    """
    img = np.full((h, w), rng.uniform(110.0, 210.0))
    kind = int(rng.integers(5))
    if kind == 0:
        _eye_band(img, rng, rng.uniform(0.05, 0.7), rng.uniform(35.0, 75.0))
    elif kind == 1:
        _mouth_patch(img, rng, rng.uniform(0.05, 0.7), rng.uniform(30.0, 65.0))
    elif kind == 2:  # right parts, wrong layout
        _mouth_patch(img, rng, 0.10, rng.uniform(30.0, 65.0))
        _eye_band(img, rng, 0.62, rng.uniform(35.0, 75.0))
    elif kind == 3:  # bands touching, no face spacing
        _eye_band(img, rng, 0.30, rng.uniform(35.0, 75.0))
        _eye_band(img, rng, 0.52, rng.uniform(35.0, 75.0))
    else:
        img += np.linspace(-40.0, 40.0, h)[:, None] * rng.choice((-1.0, 1.0))
    img = (img - 128.0) * rng.uniform(0.75, 1.25) + 128.0
    img += rng.normal(0.0, noise, size=img.shape)
    return _clip(img)


def negative_image(rng: np.random.Generator, h: int = 120, w: int = 120,
                   noise: float = 45.0, n_distractors: int = 10,
                   window: int = 19) -> np.ndarray:
    """A textured negative image densely seeded with look-alikes."""
    img = rng.uniform(60.0, 200.0) + rng.normal(0.0, noise, size=(h, w))
    img += np.linspace(-25.0, 25.0, w)[None, :] * rng.choice((-1.0, 1.0))
    for _ in range(n_distractors):
        dw = int(rng.integers(window, max(window + 1, min(2 * window, w))))
        dh = int(rng.integers(window, max(window + 1, min(2 * window, h))))
        x = int(rng.integers(0, w - dw + 1))
        y = int(rng.integers(0, h - dh + 1))
        img[y:y + dh, x:x + dw] = distractor_window(rng, dw, dh, noise)
    return _clip(img)


def _resize_nearest(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = src.shape
    ys = np.minimum((np.arange(out_h) * h) // out_h, h - 1)
    xs = np.minimum((np.arange(out_w) * w) // out_w, w - 1)
    return src[np.ix_(ys, xs)]


def scene(rng: np.random.Generator, h: int, w: int, face_sizes: Sequence[int],
          window: int = 19, noise: float = 45.0,
          ) -> Tuple[np.ndarray, List[Tuple[int, int, int, int]]]:
    """A negative image with faces planted at non-overlapping spots.

    Returns the image and the ground-truth (x, y, w, h) boxes.
    """
    img = negative_image(rng, h, w, noise=noise, window=window)
    boxes: List[Tuple[int, int, int, int]] = []
    for size in face_sizes:
        placed = False
        for _ in range(50):
            x = int(rng.integers(0, w - size + 1))
            y = int(rng.integers(0, h - size + 1))
            if any(not (x + size <= bx or bx + bw <= x
                        or y + size <= by or by + bh <= y)
                   for bx, by, bw, bh in boxes):
                continue
            face = _resize_nearest(face_window(rng, window, window, noise), size, size)
            img[y:y + size, x:x + size] = face
            boxes.append((x, y, size, size))
            placed = True
            break
        if not placed:
            break
    return img, boxes


def training_pools(rng: np.random.Generator, n_pos: int, n_neg_images: int,
                   window_w: int = 19, window_h: int = 19, noise: float = 45.0,
                   neg_size: int = 120) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Raw positive windows and raw negative images."""
    pos = [face_window(rng, window_w, window_h, noise) for _ in range(n_pos)]
    neg = [negative_image(rng, neg_size, neg_size, noise=noise,
                          window=max(window_w, window_h))
           for _ in range(n_neg_images)]
    return pos, neg
