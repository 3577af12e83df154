"""Exception hierarchy shared across the toolkit.

Exit-code mapping in the CLI relies on this split: usage problems are
handled by argparse, `InputError` subclasses map to exit 2, and
`InternalError` subclasses map to exit 3.
"""


class C2IError(Exception):
    """Base class for all toolkit errors."""


class InputError(C2IError):
    """Bad input data: malformed files, syntax errors, schema violations."""


class InternalError(C2IError):
    """A pipeline invariant was violated; indicates a bug or corrupt data."""


class LexError(InputError):
    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class ParseError(InputError):
    def __init__(self, message, line, col, expected=()):
        detail = f"{line}:{col}: {message}"
        if expected:
            detail += " (expected one of: " + ", ".join(sorted(expected)) + ")"
        super().__init__(detail)
        self.line = line
        self.col = col
        self.expected = frozenset(expected)


class UnsupportedConstructError(ParseError):
    def __init__(self, construct, line, col):
        super().__init__(f"unsupported construct: {construct}", line, col)
        self.construct = construct


class SchemaError(InputError):
    """Interchange document violates the node schema."""


class CodebookError(C2IError):
    pass


class AllocationError(CodebookError, InternalError):
    """Color space exhausted (2^24 - 2 assignable colors)."""


class UnknownColorError(CodebookError, InputError):
    """A color has no entry in the codebook."""


class CodebookLoadError(CodebookError, InputError):
    """Codebook file is malformed or violates injectivity."""


class DegenerateImageError(InputError):
    """Image has no non-white content; nothing to compact or decode."""


class CorruptImageError(InputError):
    """Image does not satisfy the pipeline's pixel discipline."""


class ManifestError(InputError):
    """Corpus manifest is malformed or inconsistent."""


class EvaluationError(InputError):
    """Classifier scores/labels cannot be evaluated (e.g. single class)."""
