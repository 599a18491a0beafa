"""Tokenizer shared by the profile and model grammars.

Both languages are statement-oriented with identical token shapes, so one
lexer serves both. Identifiers may contain interior dashes (stereotype
names like ``Text-File``); neither grammar has arithmetic, so this is
unambiguous. ``->`` and ``..`` are single tokens. ``#`` starts a comment
running to end of line.

Lexing never raises: malformed input is reported through the returned
error list and skipped, so parsers downstream can keep collecting their
own diagnostics in the same pass.
"""

from __future__ import annotations

from dataclasses import dataclass

PUNCT = {"{", "}", "(", ")", "[", "]", ":", ";", ",", "=", "@", "*"}

_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | string | int | float | punct | arrow | dotdot | eof
    value: object
    line: int
    column: int
    text: str


@dataclass(frozen=True)
class LexProblem:
    line: int
    column: int
    message: str


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_ident_part(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def tokenize(text: str, *_ignored: object) -> tuple[list[Token], list[LexProblem]]:
    tokens: list[Token] = []
    problems: list[LexProblem] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def advance(k: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance()
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                advance()
            continue

        start_line, start_col, start_i = line, col, i

        if _is_ident_start(ch):
            advance()
            # interior dash joins the identifier only when followed by an
            # identifier character, so "A->B" still lexes as A, ->, B
            while i < n and (
                _is_ident_part(text[i])
                or (text[i] == "-" and i + 1 < n and _is_ident_part(text[i + 1]))
            ):
                advance()
            word = text[start_i:i]
            tokens.append(Token("ident", word, start_line, start_col, word))
            continue

        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            advance()
            while i < n and text[i].isdigit():
                advance()
            is_float = False
            # consume a fraction only when a digit follows the dot, which
            # leaves ".." intact for multiplicity ranges like 0..2
            if i < n and text[i] == "." and i + 1 < n and text[i + 1].isdigit():
                is_float = True
                advance()
                while i < n and text[i].isdigit():
                    advance()
            word = text[start_i:i]
            if is_float:
                tokens.append(Token("float", float(word), start_line, start_col, word))
            else:
                tokens.append(Token("int", int(word), start_line, start_col, word))
            continue

        if ch == '"':
            advance()
            value: list[str] = []
            closed = False
            while i < n:
                c = text[i]
                if c == '"':
                    advance()
                    closed = True
                    break
                if c == "\n":
                    break
                if c == "\\":
                    if i + 1 < n and text[i + 1] in _ESCAPES:
                        value.append(_ESCAPES[text[i + 1]])
                        advance(2)
                        continue
                    problems.append(
                        LexProblem(line, col, f"unknown escape '\\{text[i + 1] if i + 1 < n else ''}'")
                    )
                    advance(2 if i + 1 < n else 1)
                    continue
                value.append(c)
                advance()
            if not closed:
                problems.append(LexProblem(start_line, start_col, "unterminated string literal"))
                continue
            word = text[start_i:i]
            tokens.append(Token("string", "".join(value), start_line, start_col, word))
            continue

        if ch == "-" and i + 1 < n and text[i + 1] == ">":
            advance(2)
            tokens.append(Token("arrow", "->", start_line, start_col, "->"))
            continue

        if ch == "." and i + 1 < n and text[i + 1] == ".":
            advance(2)
            tokens.append(Token("dotdot", "..", start_line, start_col, ".."))
            continue

        if ch in PUNCT:
            advance()
            tokens.append(Token("punct", ch, start_line, start_col, ch))
            continue

        problems.append(LexProblem(line, col, f"unexpected character {ch!r}"))
        advance()

    tokens.append(Token("eof", None, line, col, ""))
    return tokens, problems
