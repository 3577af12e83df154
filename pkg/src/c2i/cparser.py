"""Lexer and recursive-descent parser for a C-language subset.

The subset covers declarations of the scalar types (int/char/float/double,
plus void for functions), pointers and arrays in declarators, function
definitions, compound/if/else/while/for/return/expression statements,
binary and unary operators, assignment, function calls, identifiers, and
integer/float/char/string constants. Anything else raises an
UnsupportedConstructError naming the construct; full-language code can
enter the pipeline through the interchange format instead.

Node kinds are drawn from a fixed vocabulary:
FileAST, FuncDef, Decl, TypeDecl, IdentifierType, ParamList, Compound,
If, While, For, Return, Assignment, BinaryOp, UnaryOp, FuncCall,
ExprList, ID, Constant, ArrayDecl, PtrDecl.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import LexError, ParseError, UnsupportedConstructError
from .tree import Ast, AstNode

KINDS = frozenset({
    "FileAST", "FuncDef", "Decl", "TypeDecl", "IdentifierType", "ParamList",
    "Compound", "If", "While", "For", "Return", "Assignment", "BinaryOp",
    "UnaryOp", "FuncCall", "ExprList", "ID", "Constant", "ArrayDecl", "PtrDecl",
})

_TYPE_KEYWORDS = ("int", "char", "float", "double", "void")
_SUBSET_KEYWORDS = _TYPE_KEYWORDS + ("if", "else", "while", "for", "return")
# Recognized so we can report them as unsupported constructs by name.
_RESERVED_KEYWORDS = (
    "auto", "break", "case", "const", "continue", "default", "do", "enum",
    "extern", "goto", "long", "register", "short", "signed", "sizeof",
    "static", "struct", "switch", "typedef", "union", "unsigned", "volatile",
)
_KEYWORDS = frozenset(_SUBSET_KEYWORDS) | frozenset(_RESERVED_KEYWORDS)

# Longest-match operator table; three-char operators first.
_OPERATORS = (
    "<<=", ">>=",
    "==", "!=", "<=", ">=", "&&", "||", "<<", ">>",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "++", "--", "->",
    "+", "-", "*", "/", "%", "=", "<", ">", "!", "&", "|", "^", "~", "?", ":", ".",
)
_PUNCTUATORS = ("(", ")", "{", "}", "[", "]", ";", ",")


@dataclass(frozen=True)
class SourceToken:
    category: str  # keyword | identifier | constant | string-literal | operator | punctuator
    text: str
    line: int
    col: int
    # constants carry their flavor so the parser need not re-classify
    const_type: str | None = None  # int | float | char


def lex(source: str) -> list[SourceToken]:
    """Tokenize a source string; comments and whitespace never surface."""
    tokens: list[SourceToken] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n\f\v":
            advance(1)
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            advance((j - i) if j != -1 else (n - i))
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j == -1:
                raise LexError("unterminated block comment", line, col)
            advance(j + 2 - i)
            continue
        if ch == "#":
            raise LexError("preprocessor directives are not part of the subset", line, col)
        if ch == '"' or ch == "'":
            start_line, start_col = line, col
            quote = ch
            j = i + 1
            while j < n and source[j] != quote:
                if source[j] == "\n":
                    raise LexError(
                        f"unterminated {'string' if quote == chr(34) else 'char'} literal",
                        start_line, start_col)
                if source[j] == "\\":
                    j += 1
                j += 1
            if j >= n:
                raise LexError(
                    f"unterminated {'string' if quote == chr(34) else 'char'} literal",
                    start_line, start_col)
            text = source[i:j + 1]
            if quote == '"':
                tokens.append(SourceToken("string-literal", text, start_line, start_col))
            else:
                tokens.append(SourceToken("constant", text, start_line, start_col,
                                          const_type="char"))
            advance(j + 1 - i)
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            start_line, start_col = line, col
            j = i
            is_float = False
            if source.startswith(("0x", "0X"), i):
                j = i + 2
                while j < n and (source[j].isdigit() or source[j] in "abcdefABCDEF"):
                    j += 1
            else:
                while j < n and source[j].isdigit():
                    j += 1
                if j < n and source[j] == ".":
                    is_float = True
                    j += 1
                    while j < n and source[j].isdigit():
                        j += 1
                if j < n and source[j] in "eE":
                    k = j + 1
                    if k < n and source[k] in "+-":
                        k += 1
                    if k < n and source[k].isdigit():
                        is_float = True
                        j = k
                        while j < n and source[j].isdigit():
                            j += 1
            # suffixes (u, l, f) accepted as part of the lexeme
            while j < n and source[j] in "uUlLfF":
                if source[j] in "fF":
                    is_float = True
                j += 1
            text = source[i:j]
            tokens.append(SourceToken("constant", text, start_line, start_col,
                                      const_type="float" if is_float else "int"))
            advance(j - i)
            continue
        if ch.isalpha() or ch == "_":
            start_line, start_col = line, col
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            category = "keyword" if text in _KEYWORDS else "identifier"
            tokens.append(SourceToken(category, text, start_line, start_col))
            advance(j - i)
            continue
        matched = False
        for op in _OPERATORS:
            if source.startswith(op, i):
                tokens.append(SourceToken("operator", op, line, col))
                advance(len(op))
                matched = True
                break
        if matched:
            continue
        if ch in _PUNCTUATORS:
            tokens.append(SourceToken("punctuator", ch, line, col))
            advance(1)
            continue
        raise LexError(f"character {ch!r} is outside the subset character set", line, col)
    return tokens


class _Parser:
    """Recursive-descent parser over a token list."""

    def __init__(self, tokens: list[SourceToken]):
        self.tokens = tokens
        self.pos = 0

    # --- token plumbing ---------------------------------------------

    def peek(self, offset: int = 0) -> SourceToken | None:
        idx = self.pos + offset
        return self.tokens[idx] if idx < len(self.tokens) else None

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text

    def next(self) -> SourceToken:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            line = last.line if last else 1
            col = (last.col + len(last.text)) if last else 1
            raise ParseError("unexpected end of input", line, col)
        self.pos += 1
        return tok

    def expect(self, text: str) -> SourceToken:
        tok = self.peek()
        if tok is None or tok.text != text:
            got = tok.text if tok else "end of input"
            line = tok.line if tok else (self.tokens[-1].line if self.tokens else 1)
            col = tok.col if tok else 1
            raise ParseError(f"got {got!r}", line, col, expected={text})
        return self.next()

    def _unsupported(self, construct: str, tok: SourceToken):
        raise UnsupportedConstructError(construct, tok.line, tok.col)

    # --- grammar ------------------------------------------------------

    def parse_file(self) -> AstNode:
        items: list[AstNode] = []
        while self.peek() is not None:
            items.extend(self.external_declaration())
        return AstNode("FileAST", children=tuple(items))

    def external_declaration(self) -> list[AstNode]:
        tok = self.peek()
        assert tok is not None
        if tok.category == "keyword" and tok.text in _RESERVED_KEYWORDS:
            self._unsupported(f"'{tok.text}'", tok)
        if tok.category != "keyword" or tok.text not in _TYPE_KEYWORDS:
            raise ParseError(f"got {tok.text!r}", tok.line, tok.col,
                             expected=set(_TYPE_KEYWORDS))
        return self.declaration(toplevel=True)

    def declaration(self, toplevel: bool = False) -> list[AstNode]:
        """One declaration statement; may yield several Decl nodes, or one FuncDef."""
        type_tok = self.next()
        base_type = type_tok.text
        decls: list[AstNode] = []
        while True:
            name_tok, wrap = self.declarator()
            type_subtree = wrap(AstNode("TypeDecl", children=(
                AstNode("IdentifierType", params=(base_type,)),)))
            if self.at("("):
                func_decl, is_def = self.function_tail(name_tok, type_subtree)
                if is_def:
                    if not toplevel:
                        self._unsupported("nested function definition", name_tok)
                    decls.append(func_decl)
                    return decls
                decls.append(func_decl)
            else:
                children = [type_subtree]
                if self.at("="):
                    self.next()
                    children.append(self.assignment_expression())
                decls.append(AstNode("Decl", params=(name_tok.text,),
                                     children=tuple(children)))
            if self.at(","):
                self.next()
                continue
            self.expect(";")
            return decls

    def declarator(self):
        """Pointer stars, a name, then array suffixes.

        Returns the name token and a wrapper that nests PtrDecl/ArrayDecl
        around the inner TypeDecl subtree.
        """
        ptr_depth = 0
        while self.at("*"):
            self.next()
            ptr_depth += 1
        tok = self.peek()
        if tok is None or tok.category != "identifier":
            got = tok.text if tok else "end of input"
            line = tok.line if tok else 1
            col = tok.col if tok else 1
            raise ParseError(f"got {got!r}", line, col, expected={"identifier"})
        name_tok = self.next()
        array_dims: list[AstNode | None] = []
        while self.at("["):
            self.next()
            if self.at("]"):
                array_dims.append(None)
            else:
                array_dims.append(self.assignment_expression())
            self.expect("]")

        def wrap(inner: AstNode) -> AstNode:
            node = inner
            # innermost array dimension binds tightest: wrap outward
            for dim in reversed(array_dims):
                children = (node,) if dim is None else (node, dim)
                node = AstNode("ArrayDecl", children=children)
            for _ in range(ptr_depth):
                node = AstNode("PtrDecl", children=(node,))
            return node

        return name_tok, wrap

    def function_tail(self, name_tok: SourceToken, return_type: AstNode):
        """After 'type name (' — parse params, then either a body or ';'."""
        self.expect("(")
        params: list[AstNode] = []
        if not self.at(")"):
            if self.at("void") and self.peek(1) is not None and self.peek(1).text == ")":
                self.next()
            else:
                while True:
                    ptok = self.peek()
                    if ptok is None or ptok.text not in _TYPE_KEYWORDS:
                        got = ptok.text if ptok else "end of input"
                        line = ptok.line if ptok else 1
                        col = ptok.col if ptok else 1
                        raise ParseError(f"got {got!r}", line, col,
                                         expected=set(_TYPE_KEYWORDS))
                    ptype = self.next().text
                    pname_tok, pwrap = self.declarator()
                    psub = pwrap(AstNode("TypeDecl", children=(
                        AstNode("IdentifierType", params=(ptype,)),)))
                    params.append(AstNode("Decl", params=(pname_tok.text,),
                                          children=(psub,)))
                    if self.at(","):
                        self.next()
                        continue
                    break
        self.expect(")")
        decl_children: list[AstNode] = []
        if params:
            decl_children.append(AstNode("ParamList", children=tuple(params)))
        decl_children.append(return_type)
        decl = AstNode("Decl", params=(name_tok.text,), children=tuple(decl_children))
        if self.at("{"):
            body = self.compound_statement()
            return AstNode("FuncDef", children=(decl, body)), True
        self.expect(";")
        return decl, False

    def compound_statement(self) -> AstNode:
        self.expect("{")
        items: list[AstNode] = []
        while not self.at("}"):
            tok = self.peek()
            if tok is None:
                raise ParseError("unexpected end of input inside block",
                                 self.tokens[-1].line, self.tokens[-1].col)
            if tok.category == "keyword" and tok.text in _TYPE_KEYWORDS:
                items.extend(self.declaration())
            else:
                stmt = self.statement()
                if stmt is not None:
                    items.append(stmt)
        self.expect("}")
        return AstNode("Compound", children=tuple(items))

    def statement(self) -> AstNode | None:
        tok = self.peek()
        assert tok is not None
        if tok.category == "keyword" and tok.text in _RESERVED_KEYWORDS:
            self._unsupported(f"'{tok.text}'", tok)
        if tok.text == "{":
            return self.compound_statement()
        if tok.text == ";":
            self.next()
            return None
        if tok.text == "if":
            self.next()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            then = self.statement() or AstNode("Compound")
            children = [cond, then]
            if self.at("else"):
                self.next()
                children.append(self.statement() or AstNode("Compound"))
            return AstNode("If", children=tuple(children))
        if tok.text == "while":
            self.next()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            body = self.statement() or AstNode("Compound")
            return AstNode("While", children=(cond, body))
        if tok.text == "for":
            self.next()
            self.expect("(")
            children: list[AstNode] = []
            if not self.at(";"):
                head = self.peek()
                if head is not None and head.text in _TYPE_KEYWORDS:
                    self._unsupported("declaration in for-init", head)
                children.append(self.expression())
            self.expect(";")
            if not self.at(";"):
                children.append(self.expression())
            self.expect(";")
            if not self.at(")"):
                children.append(self.expression())
            self.expect(")")
            children.append(self.statement() or AstNode("Compound"))
            return AstNode("For", children=tuple(children))
        if tok.text == "return":
            self.next()
            if self.at(";"):
                self.next()
                return AstNode("Return")
            value = self.expression()
            self.expect(";")
            return AstNode("Return", children=(value,))
        expr = self.expression()
        self.expect(";")
        return expr

    # expressions -----------------------------------------------------

    _BINARY_LEVELS = (
        ("||",),
        ("&&",),
        ("|",),
        ("^",),
        ("&",),
        ("==", "!="),
        ("<", ">", "<=", ">="),
        ("<<", ">>"),
        ("+", "-"),
        ("*", "/", "%"),
    )
    _ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
                             "<<=", ">>="})
    _UNARY_OPS = frozenset({"-", "+", "!", "~", "*", "&"})

    def expression(self) -> AstNode:
        # comma expressions are not in the subset; a lone assignment expr
        return self.assignment_expression()

    def assignment_expression(self) -> AstNode:
        left = self.binary_expression(0)
        tok = self.peek()
        if tok is not None and tok.text in self._ASSIGN_OPS:
            self.next()
            right = self.assignment_expression()
            return AstNode("Assignment", params=(tok.text,), children=(left, right))
        if tok is not None and tok.text == "?":
            self._unsupported("conditional operator '?:'", tok)
        return left

    def binary_expression(self, level: int) -> AstNode:
        if level >= len(self._BINARY_LEVELS):
            return self.unary_expression()
        ops = self._BINARY_LEVELS[level]
        node = self.binary_expression(level + 1)
        while True:
            tok = self.peek()
            if tok is None or tok.text not in ops:
                return node
            self.next()
            rhs = self.binary_expression(level + 1)
            node = AstNode("BinaryOp", params=(tok.text,), children=(node, rhs))

    def unary_expression(self) -> AstNode:
        tok = self.peek()
        if tok is not None and tok.text in ("++", "--"):
            self._unsupported(f"'{tok.text}' operator", tok)
        if tok is not None and tok.text in self._UNARY_OPS:
            self.next()
            operand = self.unary_expression()
            return AstNode("UnaryOp", params=(tok.text,), children=(operand,))
        return self.postfix_expression()

    def postfix_expression(self) -> AstNode:
        node = self.primary_expression()
        while True:
            tok = self.peek()
            if tok is None:
                return node
            if tok.text == "(":
                self.next()
                args: list[AstNode] = []
                if not self.at(")"):
                    while True:
                        args.append(self.assignment_expression())
                        if self.at(","):
                            self.next()
                            continue
                        break
                self.expect(")")
                children = (node, AstNode("ExprList", children=tuple(args)))
                node = AstNode("FuncCall", children=children)
                continue
            if tok.text in ("[", ".", "->", "++", "--"):
                names = {"[": "array subscript", ".": "member access",
                         "->": "member access", "++": "'++' operator",
                         "--": "'--' operator"}
                self._unsupported(names[tok.text], tok)
            return node

    def primary_expression(self) -> AstNode:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            raise ParseError("unexpected end of input",
                             last.line if last else 1, last.col if last else 1)
        if tok.text == "(":
            self.next()
            node = self.expression()
            self.expect(")")
            return node
        if tok.category == "identifier":
            self.next()
            return AstNode("ID", params=(tok.text,))
        if tok.category == "constant":
            self.next()
            return AstNode("Constant", params=(tok.const_type or "int", tok.text))
        if tok.category == "string-literal":
            self.next()
            return AstNode("Constant", params=("string", tok.text))
        raise ParseError(f"got {tok.text!r}", tok.line, tok.col,
                         expected={"identifier", "constant", "'('"})


def parse(tokens: list[SourceToken]) -> Ast:
    """Parse a token list into an Ast rooted at FileAST."""
    return Ast.from_root(_Parser(tokens).parse_file())


def parse_source(source: str) -> Ast:
    """Convenience: lex + parse in one call."""
    return parse(lex(source))
