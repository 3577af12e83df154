"""Reconstruct an AST from a rendered (compacted or not) image plus the
codebook it was rendered with.

Decoding keys on geometry and color only: colored rectangles are token
boxes, black 4-connected components are edge bundles. Each bundle must
touch exactly one box from above (the parent, at its bottom-center) and
one or more boxes from below (the children, at their top-centers); any
other ink configuration is rejected as corrupt rather than guessed at.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import ColorCodebook
from .errors import CorruptImageError, DegenerateImageError
from .render import ImageRep
from .tree import Ast, AstNode


@dataclass(frozen=True)
class Box:
    x0: int
    x1: int  # inclusive
    y0: int
    y1: int  # inclusive
    color: tuple[int, int, int]

    @property
    def center_x(self) -> int:
        return (self.x0 + self.x1 + 1) // 2


@dataclass(frozen=True)
class BoxScan:
    boxes: tuple[Box, ...]
    levels: tuple[tuple[Box, ...], ...]  # grouped by y-range, top to bottom


def segment_boxes(image: ImageRep, book: ColorCodebook | None = None) -> BoxScan:
    """Find all token boxes; raises on non-rectangular regions or, when a
    codebook is supplied, on colors it does not contain."""
    from skimage.measure import label as _sklabel

    px = image.pixels
    packed = (px[:, :, 0].astype(np.int32) << 16) \
        | (px[:, :, 1].astype(np.int32) << 8) | px[:, :, 2]
    colored = (packed != 0xFFFFFF) & (packed != 0)
    if not colored.any():
        raise DegenerateImageError("image contains no token boxes")

    # same-value 4-connected components; white is forced to one background
    # value and black boxes cannot exist, so every non-background label with
    # a non-black color is a candidate box
    labels = _sklabel(np.where(colored, packed, -1), background=-1,
                      connectivity=1)
    n_labels = int(labels.max())
    counts = np.bincount(labels.ravel(), minlength=n_labels + 1)
    boxes: list[Box] = []
    import scipy.ndimage as ndi
    for lab, slc in enumerate(ndi.find_objects(labels), start=1):
        if slc is None:
            continue
        y0, y1 = slc[0].start, slc[0].stop - 1
        x0, x1 = slc[1].start, slc[1].stop - 1
        color_n = int(packed[y0, x0])
        # a component always fits its bbox, so equal pixel counts mean the
        # component is exactly that solid rectangle
        if counts[lab] != (y1 - y0 + 1) * (x1 - x0 + 1):
            raise CorruptImageError(
                f"non-rectangular monochrome region near ({x0},{y0})")
        color = ((color_n >> 16) & 255, (color_n >> 8) & 255, color_n & 255)
        if book is not None:
            book.lookup(color)  # raises UnknownColorError for stray colors
        boxes.append(Box(x0=x0, x1=x1, y0=y0, y1=y1, color=color))

    boxes.sort(key=lambda b: (b.y0, b.x0))
    levels: list[list[Box]] = []
    for box in boxes:
        if levels and levels[-1][0].y0 == box.y0:
            if levels[-1][0].y1 != box.y1:
                raise CorruptImageError("boxes at one level disagree on height")
            levels[-1].append(box)
        elif levels and box.y0 <= levels[-1][0].y1:
            raise CorruptImageError("box y-ranges overlap across levels")
        else:
            levels.append([box])
    return BoxScan(boxes=tuple(boxes), levels=tuple(tuple(lv) for lv in levels))


def trace_edges(image: ImageRep, scan: BoxScan) -> list[tuple[Box, Box]]:
    """Follow black ink between levels; returns (parent, child) pairs."""
    import scipy.ndimage as ndi

    px = image.pixels
    h, w = px.shape[:2]
    is_black = np.all(px == 0, axis=2)
    component, n_components = ndi.label(is_black)  # 4-connected by default

    # attachment points: the only ink directly below a box is its own drop
    # start, and directly above a box its own rise end; probe the full edge
    # because column collapse can move a box's center off the ink column
    upper: dict[int, list[Box]] = {}
    lower: dict[int, list[Box]] = {}
    for level_idx, level in enumerate(scan.levels):
        for box in level:
            cols = slice(box.x0, box.x1 + 1)
            if box.y1 + 1 < h:
                below = np.flatnonzero(is_black[box.y1 + 1, cols])
                if below.size > 1:
                    raise CorruptImageError(
                        f"box at ({box.x0},{box.y0}) has {below.size} outgoing drops")
                if below.size == 1:
                    cid = int(component[box.y1 + 1, box.x0 + below[0]])
                    upper.setdefault(cid, []).append(box)
            if level_idx == 0:
                continue
            above = np.flatnonzero(is_black[box.y0 - 1, cols]) if box.y0 > 0 else \
                np.empty(0, dtype=int)
            if above.size != 1:
                raise CorruptImageError(
                    f"box at ({box.x0},{box.y0}) has {above.size} incoming edges "
                    "but is not topmost")
            lower.setdefault(int(component[box.y0 - 1, box.x0 + above[0]]),
                             []).append(box)

    if len(scan.levels[0]) != 1:
        raise CorruptImageError(
            f"{len(scan.levels[0])} boxes on the top level; a tree has one root")

    edges: list[tuple[Box, Box]] = []
    seen_components: set[int] = set()
    for cid, children in lower.items():
        parents = upper.get(cid, [])
        if not parents:
            raise CorruptImageError("dangling edge path: ink reaches no parent box")
        if len(parents) > 1:
            raise CorruptImageError("edge bundle touches multiple parent boxes")
        seen_components.add(cid)
        for child in children:
            edges.append((parents[0], child))
    for cid in upper:
        if cid not in seen_components:
            raise CorruptImageError("dangling edge path: ink reaches no child box")
    if n_components != len(seen_components):
        raise CorruptImageError("stray black ink not attached to any box")
    return edges


def decode(image: ImageRep, book: ColorCodebook) -> Ast:
    """Invert render+compact: image + codebook -> structurally equal Ast."""
    scan = segment_boxes(image, book)
    edges = trace_edges(image, scan)

    children_of: dict[Box, list[Box]] = {box: [] for box in scan.boxes}
    parent_of: dict[Box, Box] = {}
    for parent, child in edges:
        if child in parent_of:
            raise CorruptImageError("box has multiple parents")
        parent_of[child] = parent
        children_of[parent].append(child)

    root_box = scan.levels[0][0]

    # build bottom-up (post-order) so deep chains cannot hit the recursion limit
    order: list[Box] = []
    stack = [root_box]
    while stack:
        b = stack.pop()
        order.append(b)
        stack.extend(children_of[b])
    built: dict[Box, AstNode] = {}
    for b in reversed(order):
        kind, params = book.lookup(b.color)
        kids = sorted(children_of[b], key=lambda c: c.center_x)
        built[b] = AstNode(kind=kind, params=params,
                           children=tuple(built[k] for k in kids))
    if len(built) != len(scan.boxes):
        raise CorruptImageError("boxes unreachable from the root")
    return Ast.from_root(built[root_box])
