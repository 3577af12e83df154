import random

import pytest

from c2i import ColorCodebook, parse_source
from c2i.synth import random_ast

REF_SOURCE = """\
int main()
{
    /* a sample function */
    int a = 5;
    int b = 3;
    printf("%d", a + b);
    return 0;
}
"""


@pytest.fixture
def ref_source():
    return REF_SOURCE


@pytest.fixture
def ref_ast():
    return parse_source(REF_SOURCE)


@pytest.fixture
def fresh_book():
    return ColorCodebook()


@pytest.fixture
def tree_gen():
    def gen(seed, max_depth=12, max_level_width=16):
        return random_ast(random.Random(seed), max_depth=max_depth,
                          max_level_width=max_level_width)
    return gen
