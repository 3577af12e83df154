"""Injective, persistent mapping from token content to RGB colors.

White (255,255,255) is the canvas background and black (0,0,0) is edge
ink, so neither is ever assigned to a token. Unseen keys receive the next
free color in base-256 enumeration order (index n -> (n>>16, n>>8&255,
n&255)), which guarantees injectivity without hashing; the resulting
dataset-order dependence is accepted and the book is persisted so colors
stay consistent across a corpus.
"""

from __future__ import annotations

from typing import Iterable

from .errors import AllocationError, CodebookLoadError, UnknownColorError

Color = tuple[int, int, int]
TokenKey = tuple[str, tuple[str, ...]]

WHITE: Color = (255, 255, 255)
BLACK: Color = (0, 0, 0)
_WHITE_N = 0xFFFFFF
CAPACITY = 2 ** 24 - 2

HEADER = "C2I-CODEBOOK v1"
_US = "\x1f"

# field/record separators plus every character str.splitlines treats as a
# line boundary must be escaped so one entry stays on one physical line
_NEEDS_ESCAPE = frozenset("\t\n\r\x0b\x0c\x1c\x1d\x1e\x1f\x85\u2028\u2029")


def _escape(s: str) -> str:
    out = []
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch in _NEEDS_ESCAPE:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return "".join(out)


def _unescape(s: str) -> str:
    out = []
    i = 0
    while i < len(s):
        if s[i] != "\\":
            out.append(s[i])
            i += 1
            continue
        if s.startswith("\\\\", i):
            out.append("\\")
            i += 2
        elif s.startswith("\\u", i) and i + 6 <= len(s):
            try:
                out.append(chr(int(s[i + 2:i + 6], 16)))
            except ValueError:
                raise CodebookLoadError(f"bad escape sequence in {s!r}") from None
            i += 6
        else:
            raise CodebookLoadError(f"bad escape sequence in {s!r}")
    return "".join(out)


def _escape_param(p: str) -> str:
    # an empty param must stay distinguishable from "no params at all"
    return "\\0" if p == "" else _escape(p)


def _unescape_param(s: str) -> str:
    return "" if s == "\\0" else _unescape(s)


def _n_to_color(n: int) -> Color:
    return ((n >> 16) & 255, (n >> 8) & 255, n & 255)


def _validate_color(color) -> Color:
    try:
        r, g, b = color
    except (TypeError, ValueError):
        raise CodebookLoadError(f"not an RGB triple: {color!r}") from None
    for v in (r, g, b):
        if not isinstance(v, int) or not 0 <= v <= 255:
            raise CodebookLoadError(f"channel out of range in {color!r}")
    c = (r, g, b)
    if c in (WHITE, BLACK):
        raise CodebookLoadError(f"reserved color {c} cannot be assigned to a token")
    return c


class ColorCodebook:
    """Bidirectionally injective TokenKey <-> Color map with sequential allocation.

    get_or_assign mutates the book: single-writer contract. A frozen book
    (lookup/save only) is safe to share across threads.
    """

    def __init__(self, seed_entries: Iterable[tuple[TokenKey, Color]] = ()):
        self._fwd: dict[TokenKey, Color] = {}
        self._rev: dict[Color, TokenKey] = {}
        self._cursor = 1  # next linear color index to try; 0 is black
        for key, color in seed_entries:
            self._insert(self._normalize_key(key), _validate_color(color))

    @staticmethod
    def _normalize_key(key) -> TokenKey:
        kind, params = key
        params = tuple(params)
        if not kind or len(params) > 3:
            raise CodebookLoadError(f"invalid token key {(kind, params)!r}")
        return (kind, params)

    def _insert(self, key: TokenKey, color: Color):
        if key in self._fwd:
            if self._fwd[key] != color:
                raise CodebookLoadError(f"key {key!r} already mapped to {self._fwd[key]}")
            return
        if color in self._rev:
            raise CodebookLoadError(
                f"color {color} already assigned to {self._rev[color]!r}")
        self._fwd[key] = color
        self._rev[color] = key

    def __len__(self) -> int:
        return len(self._fwd)

    def __contains__(self, key) -> bool:
        return self._normalize_key(key) in self._fwd

    def entries(self) -> list[tuple[TokenKey, Color]]:
        return list(self._fwd.items())

    def __eq__(self, other):
        if not isinstance(other, ColorCodebook):
            return NotImplemented
        return self._fwd == other._fwd

    def get_or_assign(self, key) -> Color:
        key = self._normalize_key(key)
        existing = self._fwd.get(key)
        if existing is not None:
            return existing
        n = self._cursor
        while n < _WHITE_N and _n_to_color(n) in self._rev:
            n += 1
        if n >= _WHITE_N:
            raise AllocationError("color space exhausted (2^24 - 2 colors assigned)")
        color = _n_to_color(n)
        self._fwd[key] = color
        self._rev[color] = key
        self._cursor = n + 1
        return color

    def lookup(self, color) -> TokenKey:
        color = tuple(color)
        if color in (WHITE, BLACK):
            raise UnknownColorError(f"{color} is a reserved color, not a token color")
        key = self._rev.get(color)
        if key is None:
            raise UnknownColorError(f"color {color} has no codebook entry")
        return key

    # --- persistence --------------------------------------------------

    def dumps(self) -> str:
        lines = [HEADER]
        for (kind, params), (r, g, b) in self._fwd.items():
            params_field = _US.join(_escape_param(p) for p in params)
            kind_field = _escape(kind)
            # a leading "#" would make the entry look like a comment line
            if kind_field.startswith("#"):
                kind_field = "\\u0023" + kind_field[1:]
            lines.append(f"{kind_field}\t{params_field}\t{r},{g},{b}")
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "ColorCodebook":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines or lines[0] != HEADER:
            raise CodebookLoadError(f"missing header line {HEADER!r}")
        book = cls()
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise CodebookLoadError(f"line {lineno}: expected 3 tab-separated fields")
            kind_field, params_field, rgb_field = fields
            kind = _unescape(kind_field)
            params = tuple(_unescape_param(p) for p in params_field.split(_US)) \
                if params_field else ()
            try:
                r, g, b = (int(v) for v in rgb_field.split(","))
            except ValueError:
                raise CodebookLoadError(f"line {lineno}: bad color field {rgb_field!r}") from None
            key = cls._normalize_key((kind, params))
            color = _validate_color((r, g, b))
            if key in book._fwd:
                raise CodebookLoadError(f"line {lineno}: duplicate key {key!r}")
            book._insert(key, color)
        return book

    @classmethod
    def load(cls, path) -> "ColorCodebook":
        with open(path, encoding="utf-8") as f:
            return cls.loads(f.read())
