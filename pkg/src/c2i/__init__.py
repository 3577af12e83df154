"""c2i: lossless, compact RGB image representations of C abstract syntax
trees, plus corpus tooling for CNN-based vulnerability prediction."""

from .codebook import ColorCodebook
from .compact import compact
from .cparser import lex, parse, parse_source
from .decode import decode, segment_boxes, trace_edges
from .estimator import AstImageEncoder
from .render import ImageRep, RenderConfig, encode, plan_layout, rasterize
from .tree import Ast, AstNode, bfs, depth, level_widths, read_interchange, write_interchange

__all__ = [
    "Ast", "AstNode", "AstImageEncoder", "ColorCodebook", "ImageRep",
    "RenderConfig", "bfs", "compact", "decode", "depth", "encode", "lex",
    "level_widths", "parse", "parse_source", "plan_layout", "rasterize",
    "read_interchange", "segment_boxes", "trace_edges", "write_interchange",
]

__version__ = "0.1.0"
