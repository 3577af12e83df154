"""Compacting step: collapse adjacent duplicate pixel rows and trim
all-white border rows/columns.

Interior all-white bands are never fully removed -- an n-row white band
shrinks to a single row via duplicate collapse -- so structures separated
by a gap can never merge and decoding stays exact. Column collapse is off
by default; the symmetric option exists for experimentation.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateImageError
from .render import ImageRep


def _dedupe_rows(px: np.ndarray) -> np.ndarray:
    if px.shape[0] <= 1:
        return px
    same_as_prev = np.all(px[1:] == px[:-1], axis=(1, 2))
    keep = np.concatenate(([True], ~same_as_prev))
    return px[keep]


def compact(image: ImageRep, collapse_cols: bool = False) -> ImageRep:
    """Return a compacted copy; raises DegenerateImageError on all-white input.

    Output rows are a subsequence of input rows; columns are only cropped
    at the borders (unless collapse_cols). No pixel value is ever altered.
    """
    px = image.pixels
    nonwhite = np.any(px != 255, axis=2)
    if not nonwhite.any():
        raise DegenerateImageError("image is entirely white; nothing to compact")

    px = _dedupe_rows(px)
    if collapse_cols:
        px = _dedupe_rows(px.transpose(1, 0, 2)).transpose(1, 0, 2)

    nonwhite = np.any(px != 255, axis=2)
    rows = np.flatnonzero(nonwhite.any(axis=1))
    cols = np.flatnonzero(nonwhite.any(axis=0))
    px = px[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]

    meta = dict(image.meta)
    meta["compacted"] = True
    return ImageRep(pixels=np.ascontiguousarray(px), meta=meta)
