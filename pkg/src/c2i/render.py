"""Drawing step: layered layout, crossing-free Manhattan edge routing,
and rasterization onto a white canvas.

Layout rules:
  * leaves get slots in left-to-right DFS order, pitch = box_w + gap_x;
  * an internal node's column is the midpoint of its children's extent,
    so every node's column stays inside its subtree's exclusive interval;
  * between two levels lies a lane band; every parent-child edge is a
    drop segment (parent column), one horizontal lane, and a rise segment
    (child column). Per parent, the widest edge takes the lane nearest
    the parent (ties leftmost-first), which makes sibling crossings
    impossible; different parents never share a column range, so their
    edges cannot meet at all.

Lane bands are sized per tree (max children over the level's parents), so
any tree renders crossing-free; fixed_lanes reproduces a fixed global
band height for comparison and may produce overlapping lanes for trees
wider than the fixed budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codebook import BLACK, ColorCodebook, TokenKey
from .tree import Ast, AstNode

Segment = tuple[tuple[int, int], tuple[int, int]]  # ((x0,y0),(x1,y1)), axis-aligned


@dataclass(frozen=True)
class RenderConfig:
    box_w: int = 8
    box_h: int = 4
    gap_x: int = 2
    lane_pitch: int = 2
    margin_y: int = 1
    fixed_lanes: int | None = None

    def __post_init__(self):
        for name in ("box_w", "box_h", "gap_x", "lane_pitch", "margin_y"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.box_w < 2:
            raise ValueError("box_w must be >= 2")
        if self.fixed_lanes is not None and self.fixed_lanes < 1:
            raise ValueError("fixed_lanes must be >= 1")


@dataclass(frozen=True)
class BoxPlacement:
    node_id: int
    key: TokenKey
    x0: int
    y0: int
    width: int
    height: int
    level: int

    @property
    def center_x(self) -> int:
        return self.x0 + self.width // 2


@dataclass(frozen=True)
class EdgeRoute:
    parent_id: int
    child_id: int
    lane: int
    segments: tuple[Segment, Segment, Segment]  # drop, lane, rise

    def pixels(self):
        """All integer points on the polyline (exact raster footprint)."""
        pts = set()
        for (x0, y0), (x1, y1) in self.segments:
            if x0 == x1:
                for y in range(min(y0, y1), max(y0, y1) + 1):
                    pts.add((x0, y))
            else:
                for x in range(min(x0, x1), max(x0, x1) + 1):
                    pts.add((x, y0))
        return pts


@dataclass(frozen=True)
class LayoutPlan:
    boxes: tuple[BoxPlacement, ...]
    edges: tuple[EdgeRoute, ...]
    width: int
    height: int


@dataclass
class ImageRep:
    """H x W x 3 grid of 8-bit channels plus provenance metadata."""
    pixels: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


def plan_layout(ast: Ast, config: RenderConfig = RenderConfig()) -> LayoutPlan:
    """Compute box placements and Manhattan edge routes for one AST."""
    # preorder ids, per-node level and children ids
    nodes: list[AstNode] = []
    levels: list[int] = []
    children_ids: list[list[int]] = []

    def visit(node: AstNode, level: int) -> int:
        nid = len(nodes)
        nodes.append(node)
        levels.append(level)
        children_ids.append([])
        for child in node.children:
            children_ids[nid].append(visit(child, level + 1))
        return nid

    visit(ast.root, 0)
    n = len(nodes)
    depth = max(levels)
    pitch = config.box_w + config.gap_x

    # leaf slots in DFS order; internal centers as midpoint of child centers
    center: list[int] = [0] * n
    slot_counter = 0

    def place(nid: int):
        nonlocal slot_counter
        kids = children_ids[nid]
        if not kids:
            center[nid] = slot_counter * pitch + config.box_w // 2
            slot_counter += 1
            return
        for k in kids:
            place(k)
        center[nid] = (center[kids[0]] + center[kids[-1]]) // 2

    place(0)

    # lane count per level band (between level k and k+1)
    lanes_per_level: list[int] = []
    for k in range(depth):
        max_children = max(
            (len(children_ids[i]) for i in range(n) if levels[i] == k and children_ids[i]),
            default=1,
        )
        lanes_per_level.append(config.fixed_lanes or max_children)

    # vertical positions of level top rows
    level_y: list[int] = [0]
    for k in range(depth):
        band = 2 * config.margin_y + config.lane_pitch * lanes_per_level[k]
        level_y.append(level_y[k] + config.box_h + band)

    boxes = tuple(
        BoxPlacement(
            node_id=i,
            key=nodes[i].key(),
            x0=center[i] - config.box_w // 2,
            y0=level_y[levels[i]],
            width=config.box_w,
            height=config.box_h,
            level=levels[i],
        )
        for i in range(n)
    )

    edges: list[EdgeRoute] = []
    for pid in range(n):
        kids = children_ids[pid]
        if not kids:
            continue
        k = levels[pid]
        pcx = center[pid]
        band_top = level_y[k] + config.box_h
        # widest span first -> lane nearest the parent; ties leftmost-first
        order = sorted(kids, key=lambda c: (-abs(center[c] - pcx), center[c]))
        lane_budget = lanes_per_level[k]
        for lane, cid in enumerate(order):
            lane_row = band_top + config.margin_y + min(lane, lane_budget - 1) * config.lane_pitch
            ccx = center[cid]
            drop: Segment = ((pcx, band_top), (pcx, lane_row))
            run: Segment = ((min(pcx, ccx), lane_row), (max(pcx, ccx), lane_row))
            rise: Segment = ((ccx, lane_row), (ccx, level_y[k + 1] - 1))
            edges.append(EdgeRoute(parent_id=pid, child_id=cid, lane=lane,
                                   segments=(drop, run, rise)))

    width = max(b.x0 + b.width for b in boxes)
    height = level_y[depth] + config.box_h
    return LayoutPlan(boxes=boxes, edges=tuple(edges), width=width, height=height)


def rasterize(plan: LayoutPlan, book: ColorCodebook) -> ImageRep:
    """Paint a layout: white canvas, colored token boxes, 1-px black edges."""
    px = np.full((plan.height, plan.width, 3), 255, dtype=np.uint8)
    for box in plan.boxes:
        color = book.get_or_assign(box.key)
        px[box.y0:box.y0 + box.height, box.x0:box.x0 + box.width] = color
    for edge in plan.edges:
        for (x0, y0), (x1, y1) in edge.segments:
            px[min(y0, y1):max(y0, y1) + 1, min(x0, x1):max(x0, x1) + 1] = BLACK
    return ImageRep(pixels=px, meta={"boxes": len(plan.boxes)})


def encode(source_or_ast, config: RenderConfig = RenderConfig(),
           book: ColorCodebook | None = None, *, compacted: bool = True) -> ImageRep:
    """Full pipeline: parse (if needed) -> layout -> rasterize -> compact."""
    from .compact import compact as _compact  # local import avoids a cycle
    from .cparser import parse_source

    if isinstance(source_or_ast, Ast):
        ast = source_or_ast
    elif isinstance(source_or_ast, AstNode):
        ast = Ast.from_root(source_or_ast)
    elif isinstance(source_or_ast, str):
        ast = parse_source(source_or_ast)
    else:
        raise TypeError(f"cannot encode {type(source_or_ast).__name__}")
    if book is None:
        book = ColorCodebook()
    plan = plan_layout(ast, config)
    image = rasterize(plan, book)
    return _compact(image) if compacted else image
