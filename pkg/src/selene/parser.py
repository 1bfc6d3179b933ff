"""Lexer, recursive-descent parser and pretty-printer for ``.sel`` sources.

Concrete syntax::

    lattice L < M < H;            // optional, defaults to L < H
    channel Alice : H;
    var h_count : int @ H;
    var s : string[L] @ H;        // size level defaults to the variable's level

    if (h) then { queue(Alice, 1); } else { skip; }

Precedence, loosest first: ``||``, ``&&``, comparisons, ``+ -``, ``*``,
unary ``! -``.  ``min`` and ``max`` are written as calls.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

from .core import (
    INT,
    Assign,
    Await,
    BinOp,
    Command,
    Expr,
    If,
    In,
    IntLit,
    LabeledType,
    Pos,
    Queue,
    Schedule,
    Seq,
    SizeOf,
    Skip,
    Sleep,
    Stop,
    StringType,
    StrLit,
    TypeEnv,
    UnOp,
    ValueType,
    Var,
    While,
)
from .errors import DeclarationError, LatticeError, ParseError
from .lattice import Lattice

KEYWORDS = frozenset({
    "lattice", "channel", "var", "int", "string",
    "if", "then", "else", "while", "do",
    "skip", "sleep", "sizeof", "in", "schedule", "queue", "min", "max",
    "await", "stop",
})
INTERNAL_FORMS = frozenset({"await", "stop"})

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<unclosed_comment>/\*)
  | (?P<int>[0-9]+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<unclosed_str>")
  | (?P<op>==|!=|<=|>=|&&|\|\||[-+*<>!=;:,(){}\[\]@])
""", re.VERBOSE | re.DOTALL)

_ESCAPES = {"n": b"\n", "t": b"\t", "r": b"\r", "0": b"\0", '"': b'"', "\\": b"\\"}

MAX_INT_LITERAL = (1 << 63) - 1


@dataclass(frozen=True)
class Token:
    kind: str  # int | id | kw | str | op | eof
    text: str
    line: int
    col: int
    value: object = None

    @property
    def pos(self) -> Pos:
        return Pos(self.line, self.col)


def _decode_string(body: str, line: int, col: int) -> bytes:
    out = bytearray()
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out += ch.encode("utf-8")
            i += 1
            continue
        esc = body[i + 1]
        if esc in _ESCAPES:
            out += _ESCAPES[esc]
            i += 2
        elif esc == "x":
            digits = body[i + 2:i + 4]
            if not re.fullmatch(r"[0-9A-Fa-f]{2}", digits):
                raise ParseError("bad \\x escape, expected two hex digits", line, col + i + 1)
            out.append(int(digits, 16))
            i += 4
        else:
            raise ParseError(f"unknown escape \\{esc}", line, col + i + 1)
    return bytes(out)


def tokenize(text: str) -> Iterator[Token]:
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "unclosed_comment":
            raise ParseError("unterminated comment", line, col)
        if kind == "unclosed_str":
            raise ParseError("unterminated string literal", line, col)
        if kind == "int":
            yield Token("int", lexeme, line, col, int(lexeme))
        elif kind == "id":
            yield Token("kw" if lexeme in KEYWORDS else "id", lexeme, line, col)
        elif kind == "str":
            yield Token("str", lexeme, line, col, _decode_string(lexeme[1:-1], line, col + 1))
        elif kind == "op":
            yield Token("op", lexeme, line, col)
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rindex("\n") + 1
        pos = m.end()
    yield Token("eof", "", line, pos - line_start + 1)


# -- program structure -----------------------------------------------------------


@dataclass(frozen=True)
class ChannelDecl:
    name: str
    level: str
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class VarDecl:
    name: str
    sigma: ValueType
    level: str
    explicit_size: bool = True
    pos: Pos | None = field(default=None, compare=False, repr=False)

    @property
    def type(self) -> LabeledType:
        return LabeledType(self.sigma, self.level)


@dataclass(frozen=True)
class Program:
    """A parsed source file: declarations plus the body command."""

    lattice: Lattice
    lattice_chains: tuple[tuple[str, ...], ...] | None
    channels: tuple[ChannelDecl, ...]
    variables: tuple[VarDecl, ...]
    body: Command

    @property
    def channel_levels(self) -> dict[str, str]:
        return {c.name: c.level for c in self.channels}


# -- parser ------------------------------------------------------------------------

_COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")
_BINARY_LEVELS = (("||",), ("&&",), _COMPARISONS, ("+", "-"), ("*",))


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(tokenize(text))
        self.i = 0
        self.channels: dict[str, ChannelDecl] = {}
        self.variables: dict[str, VarDecl] = {}
        self.lattice = Lattice.two_point()

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def expect_id(self, what: str) -> Token:
        tok = self.tok
        if tok.kind == "kw":
            raise self.error(f"{tok.text!r} is a reserved word, expected {what}")
        if tok.kind != "id":
            raise self.error(f"expected {what}, found {tok.text or 'end of input'!r}")
        return self.advance()

    # declarations

    def program(self) -> Program:
        chains = None
        if self.at("lattice"):
            chains = self.lattice_decl()
        while self.at("channel") or self.at("var"):
            if self.at("channel"):
                self.channel_decl()
            else:
                self.var_decl()
        if self.tok.kind == "eof":
            raise self.error("program has no body")
        body = self.statements(top=True)
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return Program(
            self.lattice,
            chains,
            tuple(self.channels.values()),
            tuple(self.variables.values()),
            body,
        )

    def lattice_decl(self) -> tuple[tuple[str, ...], ...]:
        start = self.expect("lattice")
        chains = []
        while True:
            chain = [self.expect_id("level name").text]
            while self.at("<"):
                self.advance()
                chain.append(self.expect_id("level name").text)
            chains.append(tuple(chain))
            if not self.at(","):
                break
            self.advance()
        self.expect(";")
        try:
            self.lattice = Lattice.from_chains(chains)
        except LatticeError as exc:
            raise self.error(str(exc), start) from None
        return tuple(chains)

    def level(self) -> str:
        tok = self.expect_id("security level")
        if tok.text not in self.lattice:
            raise self.error(f"unknown security level {tok.text!r}", tok)
        return tok.text

    def declare(self, tok: Token) -> None:
        if tok.text in self.channels or tok.text in self.variables:
            raise self.error(f"duplicate declaration of {tok.text!r}", tok)

    def channel_decl(self) -> None:
        self.expect("channel")
        name = self.expect_id("channel name")
        self.declare(name)
        self.expect(":")
        level = self.level()
        self.expect(";")
        self.channels[name.text] = ChannelDecl(name.text, level, name.pos)

    def var_decl(self) -> None:
        self.expect("var")
        name = self.expect_id("variable name")
        self.declare(name)
        self.expect(":")
        size_level = None
        if self.at("int"):
            self.advance()
            sigma_kind = "int"
        elif self.at("string"):
            self.advance()
            sigma_kind = "string"
            if self.at("["):
                self.advance()
                size_level = self.level()
                self.expect("]")
        else:
            raise self.error("expected a type, 'int' or 'string'")
        self.expect("@")
        level = self.level()
        self.expect(";")
        if sigma_kind == "int":
            decl = VarDecl(name.text, INT, level, True, name.pos)
        else:
            decl = VarDecl(
                name.text,
                StringType(size_level or level),
                level,
                size_level is not None,
                name.pos,
            )
        self.variables[name.text] = decl

    # commands

    def statements(self, top: bool = False) -> Command:
        commands = []
        while not (self.tok.kind == "eof" or self.at("}")):
            commands.append(self.statement())
        if not top and self.tok.kind == "eof":
            raise self.error("expected '}', found end of input")
        if top and self.at("}"):
            raise self.error("unmatched '}'")
        if not commands:
            return Skip(self.tok.pos)
        result = commands[-1]
        for c in reversed(commands[:-1]):
            result = Seq(c, result, c.pos)
        return result

    def block(self) -> Command:
        self.expect("{")
        body = self.statements()
        self.expect("}")
        return body

    def terminate(self) -> None:
        if self.at(";"):
            self.advance()
        elif not (self.at("}") or self.tok.kind == "eof"):
            raise self.error(f"expected ';', found {self.tok.text!r}")

    def channel_ref(self) -> str:
        tok = self.expect_id("channel name")
        if tok.text not in self.channels:
            if tok.text in self.variables:
                raise self.error(f"{tok.text!r} is a variable, not a channel", tok)
            raise self.error(f"undeclared channel {tok.text!r}", tok)
        return tok.text

    def statement(self) -> Command:
        tok = self.tok
        if tok.kind == "kw":
            match tok.text:
                case "if":
                    c = self.if_statement()
                    if self.at(";"):
                        self.advance()
                    return c
                case "while":
                    self.advance()
                    self.expect("(")
                    cond = self.expr()
                    self.expect(")")
                    self.expect("do")
                    body = self.block()
                    if self.at(";"):
                        self.advance()
                    return While(cond, body, tok.pos)
                case "skip":
                    self.advance()
                    c = Skip(tok.pos)
                case "sleep":
                    self.advance()
                    self.expect("(")
                    e = self.expr()
                    self.expect(")")
                    c = Sleep(e, tok.pos)
                case "schedule":
                    self.advance()
                    self.expect("(")
                    ch = self.channel_ref()
                    self.expect(",")
                    count = self.expr()
                    self.expect(",")
                    delay = self.expr()
                    self.expect(")")
                    c = Schedule(ch, count, delay, tok.pos)
                case "queue":
                    self.advance()
                    self.expect("(")
                    ch = self.channel_ref()
                    self.expect(",")
                    e = self.expr()
                    self.expect(")")
                    c = Queue(ch, e, tok.pos)
                case name if name in INTERNAL_FORMS:
                    raise self.error(f"{name!r} is internal to the interpreter and cannot appear in source")
                case _:
                    raise self.error(f"unexpected keyword {tok.text!r} at start of statement")
            self.terminate()
            return c
        if tok.kind == "id":
            if tok.text == "out" and self.peek().text == "(":
                raise self.error("'out' is not a SELENE command; use schedule(...) and queue(...)")
            c = self.assignment()
            self.terminate()
            return c
        raise self.error(f"expected a statement, found {tok.text or 'end of input'!r}")

    def if_statement(self) -> Command:
        tok = self.expect("if")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        self.expect("then")
        then = self.block()
        self.expect("else")
        if self.at("if"):
            orelse = self.if_statement()
        else:
            orelse = self.block()
        return If(cond, then, orelse, tok.pos)

    def assignment(self) -> Command:
        target = self.advance()
        if target.text not in self.variables:
            if target.text in self.channels:
                raise self.error(f"cannot assign to channel {target.text!r}", target)
            raise self.error(f"undeclared variable {target.text!r}", target)
        self.expect("=")
        tok = self.tok
        if tok.kind == "kw" and tok.text in INTERNAL_FORMS:
            raise self.error(f"{tok.text!r} is internal to the interpreter and cannot appear in source")
        if self.at("sizeof"):
            self.advance()
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return SizeOf(target.text, e, target.pos)
        if self.at("in"):
            self.advance()
            self.expect("(")
            ch = self.channel_ref()
            self.expect(")")
            return In(target.text, ch, target.pos)
        return Assign(target.text, self.expr(), target.pos)

    # expressions

    def expr(self, level: int = 0) -> Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        ops = _BINARY_LEVELS[level]
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in ops:
            op = self.advance()
            right = self.expr(level + 1)
            left = BinOp(op.text, left, right, op.pos)
        return left

    def unary(self) -> Expr:
        tok = self.tok
        if self.at("-") and self.peek().kind == "int":
            self.advance()
            lit = self.advance()
            if lit.value > MAX_INT_LITERAL + 1:
                raise self.error("integer literal out of 64-bit range", lit)
            return IntLit(-lit.value, tok.pos)
        if self.at("-") or self.at("!"):
            self.advance()
            return UnOp(tok.text, self.unary(), tok.pos)
        return self.primary()

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "int":
            self.advance()
            if tok.value > MAX_INT_LITERAL:
                raise self.error("integer literal out of 64-bit range", tok)
            return IntLit(tok.value, tok.pos)
        if tok.kind == "str":
            self.advance()
            return StrLit(tok.value, tok.pos)
        if self.at("min") or self.at("max"):
            self.advance()
            self.expect("(")
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(")")
            return BinOp(tok.text, a, b, tok.pos)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "id":
            self.advance()
            if tok.text not in self.variables:
                if tok.text in self.channels:
                    raise self.error(f"channel {tok.text!r} used as a value", tok)
                raise self.error(f"undeclared variable {tok.text!r}", tok)
            return Var(tok.text, tok.pos)
        if tok.kind == "kw" and tok.text in INTERNAL_FORMS:
            raise self.error(f"{tok.text!r} is internal to the interpreter and cannot appear in source")
        if tok.kind == "kw" and tok.text in ("sizeof", "in"):
            raise self.error(f"{tok.text!r} may only appear directly on the right of an assignment")
        raise self.error(f"expected an expression, found {tok.text or 'end of input'!r}")


def parse_program(text: str | bytes) -> Program:
    """Parse source text; every failure is a ParseError carrying a position."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"source is not valid UTF-8 (byte offset {exc.start})", 1, 1) from None
    try:
        return _Parser(text).program()
    except RecursionError:
        raise ParseError("program nested too deeply", 1, 1) from None


def build_gamma(program: Program) -> TypeEnv:
    """Γ and the channel table; rejects ill-formed declared types."""
    from .typecheck import wf_type

    gamma = {}
    for decl in program.variables:
        t = decl.type
        if not wf_type(t, program.lattice):
            line, col = (decl.pos.line, decl.pos.col) if decl.pos else (0, 0)
            raise DeclarationError(
                f"ill-formed type for {decl.name!r}: {t} (size level "
                f"{t.sigma.size_level} does not flow to {t.level})",
                decl.name, line, col,
            )
        gamma[decl.name] = t
    return TypeEnv(program.lattice, gamma, program.channel_levels)


def load_program(path) -> tuple[Program, TypeEnv]:
    with open(path, "rb") as fh:
        program = parse_program(fh.read())
    return program, build_gamma(program)


# -- pretty-printer -------------------------------------------------------------

_PREC = {"||": 1, "&&": 2, "*": 5, "+": 4, "-": 4}
_PREC.update({op: 3 for op in _COMPARISONS})
_UNARY_PREC = 6


def quote_string(s: bytes) -> str:
    out = ['"']
    for b in s:
        ch = chr(b)
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif 0x20 <= b < 0x7F:
            out.append(ch)
        else:
            out.append(f"\\x{b:02x}")
    out.append('"')
    return "".join(out)


def pretty_expr(e: Expr, ctx: int = 0) -> str:
    match e:
        case IntLit(value=n):
            return str(n)
        case StrLit(value=s):
            return quote_string(s)
        case Var(name=name):
            return name
        case BinOp(op=("min" | "max") as op, left=a, right=b):
            return f"{op}({pretty_expr(a)}, {pretty_expr(b)})"
        case BinOp(op=op, left=a, right=b):
            p = _PREC[op]
            text = f"{pretty_expr(a, p)} {op} {pretty_expr(b, p + 1)}"
            return f"({text})" if p < ctx else text
        case UnOp(op=op, operand=a):
            inner = pretty_expr(a, _UNARY_PREC)
            if isinstance(a, IntLit) and op == "-" and a.value >= 0:
                inner = f"({inner})"
            return f"{op}{inner}"
    raise TypeError(f"not an expression: {e!r}")


def _flatten(c: Command) -> list[Command]:
    if isinstance(c, Seq):
        return _flatten(c.first) + _flatten(c.second)
    return [c]


def _pretty_lines(c: Command, indent: int) -> list[str]:
    pad = "    " * indent
    lines: list[str] = []
    for part in _flatten(c):
        match part:
            case If():
                lines.extend(_pretty_if(part, indent, pad))
            case While(cond=cond, body=body):
                lines.append(f"{pad}while ({pretty_expr(cond)}) do {{")
                lines.extend(_pretty_lines(body, indent + 1))
                lines.append(f"{pad}}}")
            case _:
                lines.append(f"{pad}{pretty_simple(part)};")
    return lines


def _pretty_if(c: If, indent: int, pad: str, lead: str | None = None) -> list[str]:
    head = f"if ({pretty_expr(c.cond)}) then {{"
    lines = [(lead or pad) + head]
    lines.extend(_pretty_lines(c.then, indent + 1))
    if isinstance(c.orelse, If):
        lines.extend(_pretty_if(c.orelse, indent, pad, lead=f"{pad}}} else "))
    else:
        lines.append(f"{pad}}} else {{")
        lines.extend(_pretty_lines(c.orelse, indent + 1))
        lines.append(f"{pad}}}")
    return lines


def pretty_simple(c: Command) -> str:
    match c:
        case Assign(var=x, expr=e):
            return f"{x} = {pretty_expr(e)}"
        case SizeOf(var=x, expr=e):
            return f"{x} = sizeof({pretty_expr(e)})"
        case In(var=x, channel=ch):
            return f"{x} = in({ch})"
        case Skip():
            return "skip"
        case Sleep(expr=e):
            return f"sleep({pretty_expr(e)})"
        case Schedule(channel=ch, count=n, delay=w):
            return f"schedule({ch}, {pretty_expr(n)}, {pretty_expr(w)})"
        case Queue(channel=ch, expr=e):
            return f"queue({ch}, {pretty_expr(e)})"
        case Await(until=r):
            return f"await({r})"
        case Stop():
            return "stop"
    raise TypeError(f"not a simple command: {c!r}")


def pretty_command(c: Command, indent: int = 0) -> str:
    return "\n".join(_pretty_lines(c, indent))


def pretty_program(program: Program) -> str:
    lines = []
    if program.lattice_chains is not None:
        lines.append("lattice " + ", ".join(" < ".join(ch) for ch in program.lattice_chains) + ";")
    for ch in program.channels:
        lines.append(f"channel {ch.name} : {ch.level};")
    for v in program.variables:
        if isinstance(v.sigma, StringType):
            sigma = f"string[{v.sigma.size_level}]" if v.explicit_size else "string"
        else:
            sigma = "int"
        lines.append(f"var {v.name} : {sigma} @ {v.level};")
    if lines:
        lines.append("")
    lines.extend(_pretty_lines(program.body, 0))
    return "\n".join(lines) + "\n"


def token_texts(text: str) -> list[str]:
    """Token lexemes with whitespace and comments dropped (for round-trip checks)."""
    return [t.text for t in tokenize(text) if t.kind != "eof"]
