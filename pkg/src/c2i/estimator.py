"""Scikit-learn style front door for the encoder.

AstImageEncoder is a transformer: fit populates the color codebook from
the training ASTs (the single-writer pass), transform renders each input
to a compacted image, and inverse_transform decodes images back to ASTs.
Inputs may be Ast values, C source strings, or interchange JSON strings.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .codebook import ColorCodebook
from .compact import compact
from .cparser import parse_source
from .decode import decode
from .render import ImageRep, RenderConfig, plan_layout, rasterize
from .tree import Ast, AstNode, bfs, read_interchange


def as_ast(x) -> Ast:
    """Coerce an input sample to an Ast."""
    if isinstance(x, Ast):
        return x
    if isinstance(x, AstNode):
        return Ast.from_root(x)
    if isinstance(x, str):
        if x.lstrip().startswith("{"):
            return read_interchange(x)
        return parse_source(x)
    raise TypeError(f"cannot interpret {type(x).__name__} as an AST")


class AstImageEncoder(BaseEstimator, TransformerMixin):
    """Transform ASTs (or C source) into compact lossless RGB images."""

    def __init__(self, box_w=8, box_h=4, gap_x=2, lane_pitch=2, margin_y=1,
                 fixed_lanes=None, collapse_cols=False, codebook=None):
        self.box_w = box_w
        self.box_h = box_h
        self.gap_x = gap_x
        self.lane_pitch = lane_pitch
        self.margin_y = margin_y
        self.fixed_lanes = fixed_lanes
        self.collapse_cols = collapse_cols
        self.codebook = codebook

    def _config(self) -> RenderConfig:
        return RenderConfig(box_w=self.box_w, box_h=self.box_h, gap_x=self.gap_x,
                            lane_pitch=self.lane_pitch, margin_y=self.margin_y,
                            fixed_lanes=self.fixed_lanes)

    def fit(self, X, y=None):
        """Populate the codebook from X in one sequential pass."""
        self._config()  # validate params early
        if isinstance(self.codebook, ColorCodebook):
            self.codebook_ = self.codebook
        elif isinstance(self.codebook, str):
            self.codebook_ = ColorCodebook.load(self.codebook)
        else:
            self.codebook_ = ColorCodebook()
        for x in X:
            for node, _ in bfs(as_ast(x)):
                self.codebook_.get_or_assign(node.key())
        return self

    def transform(self, X) -> list[ImageRep]:
        check_is_fitted(self, "codebook_")
        config = self._config()
        out = []
        for x in X:
            plan = plan_layout(as_ast(x), config)
            image = rasterize(plan, self.codebook_)
            out.append(compact(image, collapse_cols=self.collapse_cols))
        return out

    def inverse_transform(self, images) -> list[Ast]:
        check_is_fitted(self, "codebook_")
        return [decode(img, self.codebook_) for img in images]
