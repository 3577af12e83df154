import hashlib
import random

import pytest
from hypothesis import given, settings, strategies as st

from c2i import ColorCodebook
from c2i.codebook import BLACK, WHITE
from c2i.errors import CodebookLoadError, UnknownColorError


def test_seeded_entry_returned():
    book = ColorCodebook(seed_entries=[(("FuncDef", ()), (255, 0, 0))])
    assert book.get_or_assign(("FuncDef", ())) == (255, 0, 0)


def test_first_allocation_skips_black():
    book = ColorCodebook()
    assert book.get_or_assign(("X", ())) == (0, 0, 1)
    assert book.get_or_assign(("Y", ("p",))) == (0, 0, 2)


def test_allocation_skips_seeded_colors():
    book = ColorCodebook(seed_entries=[(("S", ()), (0, 0, 2))])
    assert book.get_or_assign(("A", ())) == (0, 0, 1)
    assert book.get_or_assign(("B", ())) == (0, 0, 3)


def test_same_key_same_color():
    book = ColorCodebook()
    c1 = book.get_or_assign(("Decl", ("main",)))
    c2 = book.get_or_assign(("Decl", ("main",)))
    assert c1 == c2


def test_injectivity_over_many_keys():
    rng = random.Random(3)
    book = ColorCodebook()
    keys = set()
    while len(keys) < 10_000:
        keys.add((f"K{rng.randrange(100)}",
                  tuple(str(rng.randrange(50)) for _ in range(rng.randrange(4)))))
    colors = {}
    for key in keys:
        color = book.get_or_assign(key)
        assert color not in (WHITE, BLACK)
        assert color not in colors or colors[color] == key
        colors[color] = key
    assert len(colors) == len(keys)
    # re-query returns identical colors
    for color, key in list(colors.items())[:100]:
        assert book.get_or_assign(key) == color
        assert book.lookup(color) == key


def test_lookup_inverse():
    book = ColorCodebook()
    key = ("BinaryOp", ("+",))
    assert book.lookup(book.get_or_assign(key)) == key


def test_lookup_reserved_colors_rejected():
    book = ColorCodebook()
    with pytest.raises(UnknownColorError, match="reserved"):
        book.lookup(WHITE)
    with pytest.raises(UnknownColorError, match="reserved"):
        book.lookup(BLACK)


def test_lookup_unassigned_color_rejected():
    book = ColorCodebook()
    for i in range(1000):
        book.get_or_assign((f"K{i}", ()))
    with pytest.raises(UnknownColorError):
        book.lookup((0, 255, 255))  # far outside the allocated range


def test_empty_book_roundtrip():
    book = ColorCodebook()
    assert ColorCodebook.loads(book.dumps()) == book


def test_save_load_roundtrip_and_cursor(tmp_path):
    book = ColorCodebook(seed_entries=[(("FuncDef", ()), (255, 0, 0))])
    for i in range(500):
        book.get_or_assign((f"K{i}", (str(i),)))
    path = tmp_path / "cb.txt"
    book.save(path)
    loaded = ColorCodebook.load(path)
    assert loaded == book
    # allocation continues identically after a reload
    assert loaded.get_or_assign(("NEW", ())) == book.get_or_assign(("NEW", ()))


def test_resave_is_byte_identical(tmp_path):
    book = ColorCodebook()
    for i in range(500):
        book.get_or_assign((f"K{i}", ("p1", "p2")))
    first = book.dumps().encode()
    reloaded = ColorCodebook.loads(first.decode())
    second = reloaded.dumps().encode()
    assert hashlib.sha256(first).hexdigest() == hashlib.sha256(second).hexdigest()


def test_params_with_control_characters_roundtrip():
    book = ColorCodebook()
    key = ("Constant", ("string", '"a\tb\nc\x1fd"'))
    color = book.get_or_assign(key)
    loaded = ColorCodebook.loads(book.dumps())
    assert loaded.lookup(color) == key


def test_duplicate_color_in_file_rejected():
    text = "C2I-CODEBOOK v1\nA\t\t0,0,1\nB\t\t0,0,1\n"
    with pytest.raises(CodebookLoadError, match="already assigned"):
        ColorCodebook.loads(text)


def test_reserved_color_in_file_rejected():
    text = "C2I-CODEBOOK v1\nA\t\t255,255,255\n"
    with pytest.raises(CodebookLoadError, match="reserved"):
        ColorCodebook.loads(text)


def test_missing_header_rejected():
    with pytest.raises(CodebookLoadError, match="header"):
        ColorCodebook.loads("A\t\t0,0,1\n")


def test_comment_lines_ignored():
    text = "C2I-CODEBOOK v1\n# a comment\nA\t\t0,0,1\n"
    book = ColorCodebook.loads(text)
    assert book.lookup((0, 0, 1)) == ("A", ())


@settings(max_examples=50)
@given(st.lists(st.tuples(st.text(min_size=1, max_size=8),
                          st.lists(st.text(max_size=6), max_size=3)),
                max_size=30))
def test_dumps_loads_property(keys):
    book = ColorCodebook()
    for kind, params in keys:
        book.get_or_assign((kind, tuple(params)))
    assert ColorCodebook.loads(book.dumps()) == book
