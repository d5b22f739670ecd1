"""Concrete syntax: tokenizer, recursive-descent parser and pretty printer.

Grammar (loosest binding first)::

    expr    := 'fn' '(' IDENT ':' type ')' '=>' expr | app
    app     := send { send } [ lambda ]          -- left associative
    send    := prefix { '!' msg }
    msg     := 'unit' | lambda | '(' msg ')'
    prefix  := ('bestow' | 'atomic' | 'release') prefix | postfix
    postfix := atom { '.' 'mutate' '(' ')' }
    atom    := IDENT | 'unit' | 'new' type | '(' expr ')' | runtime value
    type    := tatom [ '->' type ]
    tatom   := 'p' | 'c' | 'Unit' | 'B' '(' 'p' ')' | 'T' '(' 'p' ')' | '(' type ')'

Runtime values print as ``#l3`` (location), ``@a1`` (actor), ``#l3@a1``
(bestowed location) and ``#l3*`` (transferable location).  The parser only
accepts them when ``allow_runtime`` is set.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .ast import (
    ACTOR,
    BESTOWED,
    PASSIVE,
    TRANSFERABLE,
    UNIT,
    UNIT_T,
    ActorId,
    ActorType,
    App,
    Arrow,
    Atomic,
    Bestow,
    BestowedLoc,
    BestowedType,
    Expr,
    Lam,
    Loc,
    Mutate,
    New,
    PassiveType,
    Release,
    Send,
    TransferableLoc,
    TransferableType,
    Type,
    UnitType,
    UnitV,
    Val,
    Value,
    Var,
    Variant,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected=()):
        self.line = line
        self.col = col
        self.expected = tuple(sorted(set(expected)))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{line}:{col}: {message}{detail}")


class VariantError(ParseError):
    def __init__(self, construct: str, variant: Variant, line: int, col: int):
        self.construct = construct
        self.variant = variant
        Exception.__init__(self, f"{line}:{col}: '{construct}' is not part of the {variant.value} variant")
        self.line, self.col, self.expected = line, col, ()


class InternalError(Exception):
    """Raised by the printer for ASTs the concrete grammar cannot express."""


KEYWORDS = {"fn", "unit", "new", "bestow", "atomic", "release"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<bloc>\#l(?P<bl>\d+)@a(?P<ba>\d+))
  | (?P<tloc>\#l(?P<tl>\d+)\*)
  | (?P<loc>\#l(?P<l>\d+))
  | (?P<actor>@a(?P<a>\d+))
  | (?P<arrow>->)
  | (?P<darrow>=>)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>[()!.:])
    """,
    re.VERBOSE,
)

_PRAGMA_RE = re.compile(r"^\s*#variant\s+(\w+)\s*$")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | sym | arrow | darrow | runtime | eof
    text: str
    line: int
    col: int
    value: Optional[Value] = None


def split_pragma(source: str) -> Tuple[Optional[Variant], str]:
    """Strip a leading ``#variant X`` line, returning the variant it names.

    The pragma line is replaced by an empty line so positions stay correct.
    """
    lines = source.split("\n")
    for i, line in enumerate(lines):
        if not line.strip() or line.strip().startswith("--"):
            continue
        m = _PRAGMA_RE.match(line)
        if m:
            lines[i] = ""
            return Variant.parse(m.group(1)), "\n".join(lines)
        break
    return None, source


def tokenize(source: str) -> List[Token]:
    tokens: List[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group(0)
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("ws", "comment"):
            pass
        elif kind == "bloc":
            tokens.append(Token("runtime", text, line, col, BestowedLoc(int(m.group("bl")), int(m.group("ba")))))
        elif kind == "tloc":
            tokens.append(Token("runtime", text, line, col, TransferableLoc(int(m.group("tl")))))
        elif kind == "loc":
            tokens.append(Token("runtime", text, line, col, Loc(int(m.group("l")))))
        elif kind == "actor":
            tokens.append(Token("runtime", text, line, col, ActorId(int(m.group("a")))))
        else:
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "<end of input>", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: List[Token], variant: Variant, allow_runtime: bool):
        self.toks = tokens
        self.i = 0
        self.variant = variant
        self.allow_runtime = allow_runtime

    # token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind != "eof" and t.kind != "runtime" and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"unexpected {self.tok.text!r}", [text])
        return self.advance()

    def fail(self, message: str, expected=()):
        raise ParseError(message, self.tok.line, self.tok.col, expected)

    def gate(self, construct: str, tok: Token, allowed: Tuple[Variant, ...]):
        if self.variant not in allowed:
            raise VariantError(construct, self.variant, tok.line, tok.col)

    # types

    def parse_type(self) -> Type:
        left = self.parse_type_atom()
        if self.tok.kind == "arrow":
            self.advance()
            return Arrow(left, self.parse_type())
        return left

    def parse_type_atom(self) -> Type:
        t = self.tok
        if self.at("p"):
            self.advance()
            return PASSIVE
        if self.at("c"):
            self.advance()
            return ACTOR
        if self.at("Unit"):
            self.advance()
            return UNIT_T
        if self.at("B") or self.at("T"):
            self.advance()
            self.expect("(")
            self.expect("p")
            self.expect(")")
            if t.text == "B":
                self.gate("B(p)", t, (Variant.CORE, Variant.PRIVATE))
                return BESTOWED
            self.gate("T(p)", t, (Variant.TRANSFER,))
            return TRANSFERABLE
        if self.at("("):
            self.advance()
            ty = self.parse_type()
            self.expect(")")
            return ty
        self.fail(f"unexpected {t.text!r} in type", ["p", "c", "Unit", "B", "T", "("])

    # expressions

    def parse_program(self) -> Expr:
        e = self.parse_expr()
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.tok.text!r} after expression", ["<end of input>", "!", ".", "("])
        return e

    def parse_expr(self) -> Expr:
        if self.at("fn"):
            t = self.tok
            return Val(self.parse_lambda(), pos=(t.line, t.col))
        return self.parse_app()

    def parse_lambda(self) -> Lam:
        t = self.expect("fn")
        self.expect("(")
        name = self.parse_ident()
        self.expect(":")
        ty = self.parse_type()
        self.expect(")")
        if self.tok.kind != "darrow":
            self.fail(f"unexpected {self.tok.text!r}", ["=>"])
        self.advance()
        body = self.parse_expr()
        return Lam(name, ty, body, pos=(t.line, t.col))

    def parse_ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail(f"unexpected {t.text!r}", ["identifier"])
        self.advance()
        return t.text

    def starts_operand(self) -> bool:
        t = self.tok
        if t.kind == "runtime":
            return True
        if t.kind == "ident":
            return True
        return t.kind == "sym" and t.text == "("

    def parse_app(self) -> Expr:
        start = self.tok
        e = self.parse_send()
        while self.starts_operand():
            if self.at("fn"):
                t = self.tok
                arg: Expr = Val(self.parse_lambda(), pos=(t.line, t.col))
                return App(e, arg, pos=(start.line, start.col))
            arg = self.parse_send()
            e = App(e, arg, pos=(start.line, start.col))
        return e

    def parse_send(self) -> Expr:
        start = self.tok
        e = self.parse_prefix()
        while self.at("!"):
            self.advance()
            e = Send(e, self.parse_msg(), pos=(start.line, start.col))
        return e

    def parse_msg(self) -> Value:
        t = self.tok
        if self.at("unit"):
            self.advance()
            return UnitV(pos=(t.line, t.col))
        if self.at("fn"):
            return self.parse_lambda()
        if self.at("("):
            self.advance()
            v = self.parse_msg()
            self.expect(")")
            return v
        self.fail(f"message must be a lambda or unit, found {t.text!r}", ["fn", "unit", "("])

    def parse_prefix(self) -> Expr:
        t = self.tok
        for kw, node, allowed in (
            ("bestow", Bestow, (Variant.CORE, Variant.PRIVATE)),
            ("atomic", Atomic, (Variant.PRIVATE,)),
            ("release", Release, (Variant.PRIVATE,)),
        ):
            if self.at(kw):
                self.gate(kw, t, allowed)
                self.advance()
                return node(self.parse_prefix(), pos=(t.line, t.col))
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        start = self.tok
        e = self.parse_atom()
        while self.at("."):
            self.advance()
            self.expect("mutate")
            self.expect("(")
            self.expect(")")
            e = Mutate(e, pos=(start.line, start.col))
        return e

    def parse_atom(self) -> Expr:
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "runtime":
            if not self.allow_runtime:
                self.fail(f"runtime value {t.text!r} cannot appear in source programs")
            self.advance()
            return Val(t.value, pos=pos)
        if self.at("unit"):
            self.advance()
            return Val(UnitV(pos=pos), pos=pos)
        if self.at("new"):
            self.advance()
            ty_tok = self.tok
            ty = self.parse_type_atom()
            if isinstance(ty, TransferableType):
                self.gate("new T(p)", ty_tok, (Variant.TRANSFER,))
            elif not isinstance(ty, (PassiveType, ActorType)):
                raise ParseError(f"cannot create an object of type {ty}", ty_tok.line, ty_tok.col, ["p", "c", "T"])
            return New(ty, pos=pos)
        if self.at("("):
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.advance()
            return Var(t.text, pos=pos)
        self.fail(f"unexpected {t.text!r}", ["identifier", "unit", "new", "fn", "bestow", "atomic", "release", "("])


def parse(source: str, variant: Optional[Variant] = None, *, allow_runtime: bool = False) -> Expr:
    """Parse a program.  An explicit ``variant`` overrides the file pragma."""
    pragma, text = split_pragma(source)
    chosen = variant or pragma or Variant.CORE
    if isinstance(chosen, str):
        chosen = Variant.parse(chosen)
    return _Parser(tokenize(text), chosen, allow_runtime).parse_program()


def program_variant(source: str) -> Optional[Variant]:
    return split_pragma(source)[0]


# -- printing ------------------------------------------------------------------

_ATOM, _POSTFIX, _PREFIX, _SEND, _APP, _LAMBDA = range(6)


def pretty_type(ty: Type) -> str:
    return str(ty)


def pretty_value(v: Value) -> str:
    if isinstance(v, UnitV):
        return "unit"
    if isinstance(v, Lam):
        return f"fn ({v.param} : {pretty_type(v.param_type)}) => {pretty(v.body)}"
    if isinstance(v, ActorId):
        return f"@a{v.id}"
    if isinstance(v, Loc):
        return f"#l{v.loc}"
    if isinstance(v, BestowedLoc):
        return f"#l{v.loc}@a{v.owner}"
    if isinstance(v, TransferableLoc):
        return f"#l{v.loc}*"
    raise InternalError(f"not a value: {v!r}")


def _pp(e: Expr) -> Tuple[str, int]:
    if isinstance(e, Var):
        return e.name, _ATOM
    if isinstance(e, Val):
        return pretty_value(e.v), (_LAMBDA if isinstance(e.v, Lam) else _ATOM)
    if isinstance(e, New):
        if not isinstance(e.ty, (PassiveType, ActorType, TransferableType)):
            raise InternalError(f"'new {e.ty}' is not expressible in the concrete grammar")
        # parenthesised whenever it is an operand, purely for readability
        return f"new {e.ty}", _APP
    if isinstance(e, Mutate):
        return f"{_wrap(e.target, _POSTFIX)}.mutate()", _POSTFIX
    if isinstance(e, (Bestow, Atomic, Release)):
        kw = {Bestow: "bestow", Atomic: "atomic", Release: "release"}[type(e)]
        inner = e.inner if isinstance(e, Bestow) else e.target
        return f"{kw} {_wrap(inner, _PREFIX)}", _PREFIX
    if isinstance(e, Send):
        msg = pretty_value(e.msg)
        if isinstance(e.msg, Lam):
            msg = f"({msg})"
        elif not isinstance(e.msg, UnitV):
            raise InternalError("message position must hold a lambda or unit")
        return f"{_wrap(e.target, _SEND)} ! {msg}", _SEND
    if isinstance(e, App):
        return f"{_wrap(e.fun, _APP)} {_wrap(e.arg, _SEND)}", _APP
    raise InternalError(f"unknown expression node {e!r}")


def _wrap(e: Expr, allowed: int) -> str:
    text, level = _pp(e)
    return f"({text})" if level > allowed else text


def pretty(e: Expr) -> str:
    return _pp(e)[0]
