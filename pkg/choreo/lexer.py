"""Tokenizer shared by the program, update, network and function-table parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, NoReturn, Optional


class ChoreoSyntaxError(ValueError):
    def __init__(self, message: str, *, path: Optional[str] = None, line: int = 0, col: int = 0):
        self.message = message
        self.path = path or "<string>"
        self.line = line
        self.col = col
        super().__init__(f"{self.path}:{line}:{col}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str  # INT, FLOAT, STRING, NAME, OP, EOF
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<WS>[ \t\r]+)
  | (?P<NL>\n)
  | (?P<COMMENT>//[^\n]*)
  | (?P<FLOAT>\d+\.\d+(?:[eE][+-]?\d+)?)
  | (?P<INT>\d+)
  | (?P<STRING>"(?:[^"\\\n]|\\.)*")
  | (?P<NAME>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<OP>->|==|!=|<=|>=|&&|\|\||[(){}\[\];|:,.@=<>+\-*/%!?])
    """,
    re.VERBOSE,
)


def tokenize(text: str, path: Optional[str] = None) -> List[Token]:
    tokens: List[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ChoreoSyntaxError(
                f"unexpected character {text[pos]!r}", path=path, line=line, col=pos - line_start + 1
            )
        kind = m.lastgroup or ""
        if kind == "NL":
            line += 1
            line_start = m.end()
        elif kind not in ("WS", "COMMENT"):
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    """Cursor over a token list with the usual peek/expect helpers."""

    def __init__(self, tokens: List[Token], path: Optional[str] = None):
        self.tokens = tokens
        self.path = path
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.current
        return tok.kind in ("OP", "NAME") and tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.describe(self.current)}")
        return self.advance()

    def expect_kind(self, kind: str, what: str = "") -> Token:
        if self.current.kind != kind:
            self.fail(f"expected {what or kind.lower()}, found {self.describe(self.current)}")
        return self.advance()

    def fail(self, message: str, tok: Optional[Token] = None) -> NoReturn:
        t = tok or self.current
        raise ChoreoSyntaxError(message, path=self.path, line=t.line, col=t.col)

    @staticmethod
    def describe(tok: Token) -> str:
        return "end of input" if tok.kind == "EOF" else repr(tok.text)


__all__ = ["ChoreoSyntaxError", "Token", "TokenStream", "tokenize"]
