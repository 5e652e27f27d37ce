"""Lexer, AST and parser for the ``.cdve`` modeling dialect.

Grammar (whitespace-insensitive, ``//`` comments)::

    model    ::= (const | global | channel | process | "system" "async" ";" | "property" NAME ";")*
    const    ::= "const" NAME "=" INT ";"
    global   ::= ("byte" | "int") NAME ("=" INT)? ";"
    channel  ::= "channel" NAME ("[" INT "]")? ";"
    process  ::= "process" NAME "{" global* "state" names ";" "init" NAME ";"
                 ("accept" names ";")? trans* "}"
    trans    ::= "trans" NAME "->" NAME "{" ("guard" expr ";")?
                 ("sync" NAME ("!" expr | "?" NAME) ";")? ("effect" assign ("," assign)* ";")? "}"
    assign   ::= NAME "=" expr

Expressions use C precedence over ``|| && == != < <= > >= + - * / % !`` and
unary minus.  ``Proc.var`` reads another process's local and ``Proc.loc``
is 1 when ``Proc`` is at location ``loc``.
"""
from __future__ import annotations

import builtins
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from ..errors import MapcheckError

# diagnostic codes
E_SYNTAX = "E-SYNTAX"
E_UNKNOWN = "E-UNKNOWN-IDENT"
E_TYPE = "E-TYPE"
E_DUPLICATE = "E-DUPLICATE"
E_PROPERTY = "E-PROPERTY"

TYPE_RANGES = {"byte": (0, 255), "int": (-32768, 32767)}

KEYWORDS = {
    "byte", "int", "channel", "process", "state", "init", "accept", "trans",
    "guard", "sync", "effect", "system", "async", "property", "const",
}


class ModelParseError(MapcheckError):
    def __init__(self, code: str, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {code}: {message}")
        self.code = code
        self.line = line
        self.col = col
        self.detail = message


@dataclass(frozen=True)
class Token:
    kind: str  # "name", "int", "op", "kw", "eof"
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|==|!=|<=|>=|&&|\|\||[{}()\[\];,=!?<>+\-*/%.])
""", re.VERBOSE)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ModelParseError(E_SYNTAX, f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "name" and chunk in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- AST -----------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Ref:
    name: str
    qualifier: Optional[str]
    line: int
    col: int


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Ref, Unary, Binary]


@dataclass
class VarDecl:
    name: str
    type: str
    init: int
    line: int = 0
    col: int = 0


@dataclass
class Channel:
    name: str
    capacity: int
    line: int = 0
    col: int = 0


@dataclass
class Assign:
    target: Ref
    value: Expr


@dataclass
class Sync:
    channel: str
    direction: str  # "!" or "?"
    value: Optional[Expr] = None  # send
    target: Optional[Ref] = None  # receive
    line: int = 0
    col: int = 0


@dataclass
class Transition:
    source: str
    target: str
    guard: Optional[Expr] = None
    sync: Optional[Sync] = None
    effects: list[Assign] = field(default_factory=list)
    line: int = 0
    col: int = 0


@dataclass
class Process:
    name: str
    locals: list[VarDecl]
    states: list[str]
    init: str
    accept: list[str]
    transitions: list[Transition]
    line: int = 0
    col: int = 0

    def location_index(self, name: str) -> int:
        return self.states.index(name)


@dataclass
class Model:
    globals: list[VarDecl]
    channels: list[Channel]
    processes: list[Process]
    property: Optional[str] = None
    consts: dict[str, int] = field(default_factory=dict)

    def process(self, name: str) -> Process:
        for p in self.processes:
            if p.name == name:
                return p
        raise KeyError(name)

    def channel(self, name: str) -> Channel:
        for c in self.channels:
            if c.name == name:
                return c
        raise KeyError(name)

    @builtins.property
    def property_process(self) -> Optional[Process]:
        return None if self.property is None else self.process(self.property)

    @builtins.property
    def system_processes(self) -> list[Process]:
        return [p for p in self.processes if p.name != self.property]

    @builtins.property
    def transition_count(self) -> int:
        return sum(len(p.transitions) for p in self.processes)


# -- parser --------------------------------------------------------------------

_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


class _Parser:
    def __init__(self, text: str, consts: dict[str, int]):
        self.toks = tokenize(text)
        self.i = 0
        self.cli_consts = dict(consts)
        self.consts = dict(consts)

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message, tok=None, code=E_SYNTAX):
        tok = tok or self.tok
        return ModelParseError(code, message, tok.line, tok.col)

    def accept(self, text) -> Optional[Token]:
        if self.tok.text == text and self.tok.kind in ("op", "kw"):
            tok = self.tok
            self.i += 1
            return tok
        return None

    def expect(self, text) -> Token:
        tok = self.accept(text)
        if tok is None:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return tok

    def name(self) -> Token:
        tok = self.tok
        if tok.kind != "name":
            found = tok.text or "end of input"
            raise self.error(f"expected a name, found {found!r}")
        self.i += 1
        return tok

    def integer(self) -> int:
        negative = self.accept("-") is not None
        tok = self.tok
        if tok.kind == "int":
            self.i += 1
            value = int(tok.text)
        elif tok.kind == "name" and tok.text in self.consts:
            self.i += 1
            value = self.consts[tok.text]
        else:
            raise self.error("expected an integer constant")
        return -value if negative else value

    def names(self) -> list[Token]:
        out = [self.name()]
        while self.accept(","):
            out.append(self.name())
        return out

    # grammar
    def model(self) -> Model:
        globals_, channels, processes = [], [], []
        prop = None
        while self.tok.kind != "eof":
            tok = self.tok
            if tok.text == "const" and tok.kind == "kw":
                self.i += 1
                name = self.name()
                self.expect("=")
                value = self.integer()
                self.expect(";")
                if name.text in self.consts and name.text not in self.cli_consts:
                    raise self.error(f"constant {name.text!r} declared twice", name, E_DUPLICATE)
                self.consts.setdefault(name.text, value)
            elif tok.text in ("byte", "int") and tok.kind == "kw":
                globals_.append(self.var_decl())
            elif tok.text == "channel" and tok.kind == "kw":
                self.i += 1
                name = self.name()
                capacity = 0
                if self.accept("["):
                    capacity = self.integer()
                    self.expect("]")
                self.expect(";")
                channels.append(Channel(name.text, capacity, name.line, name.col))
            elif tok.text == "process" and tok.kind == "kw":
                processes.append(self.process())
            elif tok.text == "system" and tok.kind == "kw":
                self.i += 1
                self.expect("async")
                self.expect(";")
            elif tok.text == "property" and tok.kind == "kw":
                self.i += 1
                name = self.name()
                self.expect(";")
                if prop is not None:
                    raise self.error("property declared twice", name, E_DUPLICATE)
                prop = name
            else:
                raise self.error(f"unexpected {tok.text!r} at top level")
        model = Model(globals_, channels, processes, prop.text if prop else None, dict(self.consts))
        _check(model, prop)
        return model

    def var_decl(self) -> VarDecl:
        type_tok = self.tok
        self.i += 1
        name = self.name()
        value = 0
        if self.accept("="):
            value = self.integer()
        self.expect(";")
        lo, hi = TYPE_RANGES[type_tok.text]
        if not lo <= value <= hi:
            raise self.error(f"initializer {value} outside {type_tok.text} range", name, E_TYPE)
        return VarDecl(name.text, type_tok.text, value, name.line, name.col)

    def process(self) -> Process:
        self.expect("process")
        name = self.name()
        self.expect("{")
        locals_ = []
        while self.tok.kind == "kw" and self.tok.text in ("byte", "int"):
            locals_.append(self.var_decl())
        self.expect("state")
        states = self.names()
        self.expect(";")
        self.expect("init")
        init = self.name()
        self.expect(";")
        accept = []
        if self.accept("accept"):
            accept = self.names()
            self.expect(";")
        transitions = []
        while self.accept("trans"):
            transitions.append(self.transition())
        self.expect("}")
        proc = Process(name.text, locals_, [s.text for s in states], init.text,
                       [a.text for a in accept], transitions, name.line, name.col)
        seen = set()
        for s in states:
            if s.text in seen:
                raise self.error(f"duplicate location {s.text!r}", s, E_DUPLICATE)
            seen.add(s.text)
        for ref in [init, *accept]:
            if ref.text not in seen:
                raise self.error(f"unknown location {ref.text!r}", ref, E_UNKNOWN)
        return proc

    def transition(self) -> Transition:
        src = self.name()
        self.expect("->")
        dst = self.name()
        self.expect("{")
        trans = Transition(src.text, dst.text, line=src.line, col=src.col)
        trans._endpoints = (src, dst)
        if self.accept("guard"):
            trans.guard = self.expr()
            self.expect(";")
        if self.accept("sync"):
            chan = self.name()
            if self.accept("!"):
                trans.sync = Sync(chan.text, "!", value=self.expr(), line=chan.line, col=chan.col)
            elif self.accept("?"):
                target = self.name()
                trans.sync = Sync(chan.text, "?", target=Ref(target.text, None, target.line, target.col),
                                  line=chan.line, col=chan.col)
            else:
                raise self.error("expected '!' or '?' after channel name")
            self.expect(";")
        if self.accept("effect"):
            trans.effects.append(self.assignment())
            while self.accept(","):
                trans.effects.append(self.assignment())
            self.expect(";")
        self.expect("}")
        return trans

    def assignment(self) -> Assign:
        target = self.ref()
        self.expect("=")
        return Assign(target, self.expr())

    def ref(self) -> Ref:
        first = self.name()
        if self.accept("."):
            second = self.name()
            return Ref(second.text, first.text, first.line, first.col)
        return Ref(first.text, None, first.line, first.col)

    def expr(self, level=0) -> Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in _BINARY_LEVELS[level]:
            op = self.tok.text
            self.i += 1
            left = Binary(op, left, self.expr(level + 1))
        return left

    def unary(self) -> Expr:
        if self.accept("!"):
            return Unary("!", self.unary())
        if self.accept("-"):
            return Unary("-", self.unary())
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        tok = self.tok
        if tok.kind == "int":
            self.i += 1
            return Num(int(tok.text))
        if tok.kind == "name":
            if tok.text in self.consts and self.toks[self.i + 1].text != ".":
                self.i += 1
                return Num(self.consts[tok.text])
            return self.ref()
        found = tok.text or "end of input"
        raise self.error(f"expected an expression, found {found!r}")


def parse_model(text: str, consts: Optional[dict[str, int]] = None) -> Model:
    """Parse and check a model.  ``consts`` override same-named ``const`` declarations."""
    return _Parser(text, consts or {}).model()


# -- static checks -------------------------------------------------------------

def _check(model: Model, prop_tok: Optional[Token]) -> None:
    top = {}
    for kind, items in (("variable", model.globals), ("channel", model.channels), ("process", model.processes)):
        for item in items:
            if item.name in top:
                raise ModelParseError(E_DUPLICATE, f"{kind} {item.name!r} already declared", item.line, item.col)
            if item.name in model.consts:
                raise ModelParseError(E_DUPLICATE, f"{item.name!r} clashes with a constant", item.line, item.col)
            top[item.name] = kind
    for ch in model.channels:
        if not 0 <= ch.capacity <= 255:
            raise ModelParseError(E_TYPE, f"channel capacity {ch.capacity} outside 0..255", ch.line, ch.col)

    globals_ = {g.name: g for g in model.globals}
    channels = {c.name: c for c in model.channels}
    procs = {p.name: p for p in model.processes}

    if model.property is not None and model.property not in procs:
        raise ModelParseError(E_UNKNOWN, f"property process {model.property!r} is not declared",
                              prop_tok.line, prop_tok.col)

    for proc in model.processes:
        local = {}
        for var in proc.locals:
            if var.name in local:
                raise ModelParseError(E_DUPLICATE, f"local {var.name!r} already declared", var.line, var.col)
            local[var.name] = var
        if len(proc.states) > 65535:
            raise ModelParseError(E_TYPE, "too many locations", proc.line, proc.col)
        is_property = proc.name == model.property
        if is_property and proc.locals:
            var = proc.locals[0]
            raise ModelParseError(E_PROPERTY, "property process may not declare variables", var.line, var.col)

        def check_expr(e):
            if isinstance(e, Num):
                return
            if isinstance(e, Unary):
                check_expr(e.operand)
            elif isinstance(e, Binary):
                check_expr(e.left)
                check_expr(e.right)
            else:
                _resolve_read(e, proc, local, globals_, channels, procs)

        def check_target(ref: Ref):
            if ref.qualifier is not None and ref.qualifier != proc.name:
                raise ModelParseError(E_TYPE, f"cannot assign to another process's variable {ref.qualifier}.{ref.name}",
                                      ref.line, ref.col)
            if ref.name in local or ref.name in globals_:
                return
            if ref.name in channels or ref.name in procs or ref.name in model.consts or ref.name in proc.states:
                raise ModelParseError(E_TYPE, f"{ref.name!r} is not an assignable variable", ref.line, ref.col)
            raise ModelParseError(E_UNKNOWN, f"unknown variable {ref.name!r}", ref.line, ref.col)

        for t in proc.transitions:
            for tok in t._endpoints:
                if tok.text not in proc.states:
                    raise ModelParseError(E_UNKNOWN, f"unknown location {tok.text!r} in {proc.name}", tok.line, tok.col)
            if is_property and (t.sync is not None or t.effects):
                raise ModelParseError(E_PROPERTY, "property process transitions may only have guards", t.line, t.col)
            if t.guard is not None:
                check_expr(t.guard)
            if t.sync is not None:
                s = t.sync
                if s.channel not in channels:
                    code = E_TYPE if (s.channel in top or s.channel in local) else E_UNKNOWN
                    raise ModelParseError(code, f"{s.channel!r} is not a channel", s.line, s.col)
                if s.direction == "!":
                    check_expr(s.value)
                else:
                    check_target(s.target)
            for a in t.effects:
                check_target(a.target)
                check_expr(a.value)


def _resolve_read(ref: Ref, proc, local, globals_, channels, procs):
    if ref.qualifier is None:
        if ref.name in local or ref.name in globals_:
            return
        if ref.name in channels or ref.name in procs:
            raise ModelParseError(E_TYPE, f"{ref.name!r} is not a value", ref.line, ref.col)
        raise ModelParseError(E_UNKNOWN, f"unknown identifier {ref.name!r}", ref.line, ref.col)
    owner = procs.get(ref.qualifier)
    if owner is None:
        raise ModelParseError(E_UNKNOWN, f"unknown process {ref.qualifier!r}", ref.line, ref.col)
    if ref.name in owner.states or any(v.name == ref.name for v in owner.locals):
        return
    raise ModelParseError(E_UNKNOWN, f"{ref.qualifier} has no location or variable {ref.name!r}", ref.line, ref.col)
