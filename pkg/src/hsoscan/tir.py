"""Parser and printer for TIR, a small three-address IR.

A TIR program is a list of classes holding methods; a method body is a list of
labeled statements::

    class App {
      entry main() {
        l0: cc = Tel.getNetworkCountryIso()
        l1: if cc == "us" goto l3
        l2: return
        l3: call Sms.sendTextMessage(cc)
        l4: return
      }
    }

`if` falls through to the next statement when its condition is false.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union

RELOPS = ("==", "!=", "<=", ">=", "<", ">")
BINOPS = ("+", "-", "*", "/", "%", "&", "|", "^") + RELOPS
KEYWORDS = frozenset({"class", "entry", "if", "goto", "return", "call", "setfield", "field"})


class TirError(Exception):
    pass


class TirSyntaxError(TirError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class ValidationError(TirError):
    pass


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: Union[int, str]


Operand = Union[Var, Const]


@dataclass(frozen=True)
class Call:
    cls: str
    name: str
    args: tuple[str, ...] = ()

    @property
    def signature(self) -> str:
        """Catalog-style name, ``Class.method``."""
        return f"{self.cls}.{self.name}"

    @property
    def key(self) -> str:
        """Arity-qualified name used to resolve app methods."""
        return f"{self.cls}.{self.name}/{len(self.args)}"


@dataclass(frozen=True)
class FieldLoad:
    cls: str
    field: str

    @property
    def signature(self) -> str:
        return f"{self.cls}.{self.field}"


@dataclass(frozen=True)
class BinOp:
    left: str
    op: str
    right: Operand


Rhs = Union[Call, Var, Const, FieldLoad, BinOp]


@dataclass(frozen=True)
class Assign:
    target: str
    rhs: Rhs


@dataclass(frozen=True)
class If:
    left: Operand
    op: str
    right: Operand
    target: str

    @property
    def variables(self) -> tuple[str, ...]:
        """Condition variables in order of appearance, without repeats."""
        out: list[str] = []
        for o in (self.left, self.right):
            if isinstance(o, Var) and o.name not in out:
                out.append(o.name)
        return tuple(out)


@dataclass(frozen=True)
class Goto:
    target: str


@dataclass(frozen=True)
class Return:
    value: Optional[str] = None


@dataclass(frozen=True)
class VoidCall:
    call: Call


@dataclass(frozen=True)
class FieldStore:
    cls: str
    field: str
    value: str

    @property
    def signature(self) -> str:
        return f"{self.cls}.{self.field}"


Instr = Union[Assign, If, Goto, Return, VoidCall, FieldStore]


@dataclass(frozen=True)
class Statement:
    label: str
    instr: Instr

    @property
    def call(self) -> Optional[Call]:
        if isinstance(self.instr, VoidCall):
            return self.instr.call
        if isinstance(self.instr, Assign) and isinstance(self.instr.rhs, Call):
            return self.instr.rhs
        return None


@dataclass(frozen=True)
class MethodDef:
    cls: str
    name: str
    params: tuple[str, ...]
    body: tuple[Statement, ...]
    is_entry: bool = False

    @property
    def key(self) -> str:
        return f"{self.cls}.{self.name}/{len(self.params)}"

    def index(self) -> dict[str, int]:
        return {s.label: i for i, s in enumerate(self.body)}

    def statement(self, label: str) -> Statement:
        for s in self.body:
            if s.label == label:
                return s
        raise KeyError(label)


@dataclass(frozen=True)
class ClassDef:
    name: str
    methods: tuple[MethodDef, ...]


@dataclass(frozen=True)
class Program:
    classes: tuple[ClassDef, ...]

    def methods(self) -> Iterator[MethodDef]:
        for c in self.classes:
            yield from c.methods

    def method_map(self) -> dict[str, MethodDef]:
        return {m.key: m for m in self.methods()}

    def n_statements(self) -> int:
        return sum(len(m.body) for m in self.methods())


def uses(instr: Instr) -> tuple[str, ...]:
    """Variables read by an instruction."""
    if isinstance(instr, Assign):
        rhs = instr.rhs
        if isinstance(rhs, Var):
            return (rhs.name,)
        if isinstance(rhs, Call):
            return rhs.args
        if isinstance(rhs, BinOp):
            if isinstance(rhs.right, Var):
                return (rhs.left, rhs.right.name)
            return (rhs.left,)
        return ()
    if isinstance(instr, If):
        return instr.variables
    if isinstance(instr, Return):
        return (instr.value,) if instr.value is not None else ()
    if isinstance(instr, VoidCall):
        return instr.call.args
    if isinstance(instr, FieldStore):
        return (instr.value,)
    return ()


def defs(instr: Instr) -> tuple[str, ...]:
    return (instr.target,) if isinstance(instr, Assign) else ()


# -- lexer -------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|[<>+\-*/%&|^=])
  | (?P<punct>[{}():,.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise TirSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "ident" and chunk in KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


def _unquote(s: str) -> str:
    body = s[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            out.append({"n": "\n", "t": "\t"}.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.peek()
        found = tok.text or "end of input"
        return TirSyntaxError(f"{msg}, found {found!r}", tok.line, tok.col)

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("kw", "op", "punct") and tok.text == text

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.next()

    def ident(self) -> str:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.error("expected identifier")
        return self.next().text

    def program(self) -> Program:
        classes = []
        while self.peek().kind != "eof":
            classes.append(self.class_())
        if not classes:
            raise self.error("expected 'class'")
        return Program(tuple(classes))

    def class_(self) -> ClassDef:
        self.expect("class")
        name = self.ident()
        self.expect("{")
        methods = []
        while not self.at("}"):
            methods.append(self.method(name))
        self.expect("}")
        return ClassDef(name, tuple(methods))

    def method(self, cls: str) -> MethodDef:
        is_entry = False
        if self.at("entry"):
            self.next()
            is_entry = True
        name = self.ident()
        params = self.ident_list()
        self.expect("{")
        body = []
        while not self.at("}"):
            body.append(self.stmt())
        if not body:
            raise self.error("method body must contain at least one statement")
        self.expect("}")
        return MethodDef(cls, name, params, tuple(body), is_entry)

    def ident_list(self) -> tuple[str, ...]:
        self.expect("(")
        out = []
        if not self.at(")"):
            out.append(self.ident())
            while self.at(","):
                self.next()
                out.append(self.ident())
        self.expect(")")
        return tuple(out)

    def stmt(self) -> Statement:
        label = self.ident()
        self.expect(":")
        return Statement(label, self.instr())

    def instr(self) -> Instr:
        tok = self.peek()
        if tok.kind == "kw":
            if tok.text == "if":
                self.next()
                left = self.operand()
                op = self.next()
                if op.kind != "op" or op.text not in RELOPS:
                    raise self.error("expected relational operator", op)
                right = self.operand()
                self.expect("goto")
                return If(left, op.text, right, self.ident())
            if tok.text == "goto":
                self.next()
                return Goto(self.ident())
            if tok.text == "return":
                self.next()
                # a following `IDENT :` starts the next statement
                if self.peek().kind == "ident" and not (
                    self.peek(1).kind == "punct" and self.peek(1).text == ":"
                ):
                    return Return(self.ident())
                return Return()
            if tok.text == "call":
                self.next()
                return VoidCall(self.callexpr())
            if tok.text == "setfield":
                self.next()
                cls = self.ident()
                self.expect(".")
                fld = self.ident()
                self.expect("=")
                return FieldStore(cls, fld, self.ident())
            raise self.error("unexpected keyword")
        target = self.ident()
        self.expect("=")
        return Assign(target, self.rhs())

    def rhs(self) -> Rhs:
        tok = self.peek()
        if tok.kind == "kw" and tok.text == "call":
            # `x = call C.m()` is accepted as a synonym of `x = C.m()`
            self.next()
            return self.callexpr()
        if tok.kind == "kw" and tok.text == "field":
            self.next()
            cls = self.ident()
            self.expect(".")
            return FieldLoad(cls, self.ident())
        if tok.kind == "ident":
            nxt = self.peek(1)
            if nxt.kind == "punct" and nxt.text == ".":
                return self.callexpr()
            if nxt.kind == "op" and nxt.text in BINOPS:
                left = self.next().text
                op = self.next().text
                return BinOp(left, op, self.operand())
            return Var(self.next().text)
        return self.constant()

    def callexpr(self) -> Call:
        cls = self.ident()
        self.expect(".")
        name = self.ident()
        return Call(cls, name, self.ident_list())

    def operand(self) -> Operand:
        if self.peek().kind == "ident":
            return Var(self.next().text)
        return self.constant()

    def constant(self) -> Const:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-" and self.peek(1).kind == "int":
            self.next()
            return Const(-int(self.next().text))
        if tok.kind == "int":
            return Const(int(self.next().text))
        if tok.kind == "string":
            return Const(_unquote(self.next().text))
        raise self.error("expected operand")


def parse_program(text: str) -> Program:
    """Parse and validate TIR source text.

    Raises :class:`TirSyntaxError` (with line and column) on malformed input
    and :class:`ValidationError` on structural problems.
    """
    program = _Parser(text).program()
    validate(program)
    return program


def validate(program: Program) -> None:
    seen_classes = set()
    seen_methods = set()
    for c in program.classes:
        if c.name in seen_classes:
            raise ValidationError(f"duplicate class {c.name}")
        seen_classes.add(c.name)
        for m in c.methods:
            if m.key in seen_methods:
                raise ValidationError(f"duplicate method {m.key}")
            seen_methods.add(m.key)
            _validate_method(m)
    if not any(m.is_entry for m in program.methods()):
        raise ValidationError("no method is marked entry")


def _validate_method(m: MethodDef) -> None:
    if len(set(m.params)) != len(m.params):
        raise ValidationError(f"duplicate parameter in {m.key}")
    labels = set()
    for s in m.body:
        if s.label in labels:
            raise ValidationError(f"duplicate label {s.label} in {m.key}")
        labels.add(s.label)
    for s in m.body:
        if isinstance(s.instr, (If, Goto)) and s.instr.target not in labels:
            raise ValidationError(f"undefined label {s.instr.target} in {m.key}")
    if not isinstance(m.body[-1].instr, (Return, Goto)):
        raise ValidationError(f"{m.key} falls off the end after {m.body[-1].label}")


# -- printer -----------------------------------------------------------------


def _operand(o: Operand) -> str:
    if isinstance(o, Var):
        return o.name
    if isinstance(o.value, str):
        return _quote(o.value)
    return str(o.value)


def _call(c: Call) -> str:
    return f"{c.cls}.{c.name}({', '.join(c.args)})"


def format_rhs(rhs: Rhs) -> str:
    if isinstance(rhs, Call):
        return _call(rhs)
    if isinstance(rhs, FieldLoad):
        return f"field {rhs.cls}.{rhs.field}"
    if isinstance(rhs, BinOp):
        return f"{rhs.left} {rhs.op} {_operand(rhs.right)}"
    return _operand(rhs)


def format_instr(instr: Instr) -> str:
    if isinstance(instr, Assign):
        return f"{instr.target} = {format_rhs(instr.rhs)}"
    if isinstance(instr, If):
        return f"if {_operand(instr.left)} {instr.op} {_operand(instr.right)} goto {instr.target}"
    if isinstance(instr, Goto):
        return f"goto {instr.target}"
    if isinstance(instr, Return):
        return "return" if instr.value is None else f"return {instr.value}"
    if isinstance(instr, VoidCall):
        return f"call {_call(instr.call)}"
    if isinstance(instr, FieldStore):
        return f"setfield {instr.cls}.{instr.field} = {instr.value}"
    raise TypeError(instr)


def emit_program(program: Program) -> str:
    lines = []
    for c in program.classes:
        lines.append(f"class {c.name} {{")
        for m in c.methods:
            prefix = "entry " if m.is_entry else ""
            lines.append(f"  {prefix}{m.name}({', '.join(m.params)}) {{")
            for s in m.body:
                lines.append(f"    {s.label}: {format_instr(s.instr)}")
            lines.append("  }")
        lines.append("}")
    return "\n".join(lines) + "\n"
