"""Gate-list circuit IR and an OpenQASM 2.0 subset front-end.

Registers are flattened to global indices in declaration order; the original
register layout is kept on ``Circuit.qregs``/``Circuit.cregs`` for
diagnostics only and does not take part in equality.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence

from .errors import (
    IndexOutOfRange,
    InvalidCircuit,
    QasmSyntaxError,
    SourceSpan,
    UnsupportedConstruct,
)


class Gate(str, Enum):
    H = "h"
    X = "x"
    Y = "y"
    Z = "z"
    S = "s"
    SDG = "sdg"
    T = "t"
    TDG = "tdg"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    SWAP = "swap"
    CX = "cx"
    CZ = "cz"
    CCX = "ccx"
    MEASURE = "measure"
    RESET = "reset"
    BARRIER = "barrier"

    def __str__(self) -> str:
        return self.value

    @property
    def arity(self) -> Optional[int]:
        """Number of qubit operands, ``None`` for variadic (barrier)."""
        return _ARITY[self]

    @property
    def n_params(self) -> int:
        return 1 if self in ROTATIONS else 0

    @property
    def is_unitary(self) -> bool:
        return self not in (Gate.MEASURE, Gate.RESET, Gate.BARRIER)


ROTATIONS = frozenset({Gate.RX, Gate.RY, Gate.RZ})
ONE_QUBIT = (Gate.H, Gate.X, Gate.Y, Gate.Z, Gate.S, Gate.SDG, Gate.T, Gate.TDG,
             Gate.RX, Gate.RY, Gate.RZ)
TWO_QUBIT = (Gate.SWAP, Gate.CX, Gate.CZ)
THREE_QUBIT = (Gate.CCX,)
UNITARY_GATES = ONE_QUBIT + TWO_QUBIT + THREE_QUBIT

_ARITY = {g: 1 for g in ONE_QUBIT}
_ARITY.update({g: 2 for g in TWO_QUBIT})
_ARITY.update({Gate.CCX: 3, Gate.MEASURE: 1, Gate.RESET: 1, Gate.BARRIER: None})

_INVERSE = {Gate.S: Gate.SDG, Gate.SDG: Gate.S, Gate.T: Gate.TDG, Gate.TDG: Gate.T}


@dataclass(frozen=True)
class GateOp:
    kind: Gate
    qubits: tuple[int, ...]
    clbits: tuple[int, ...] = ()
    params: tuple[float, ...] = ()
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        kind = Gate(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "clbits", tuple(int(c) for c in self.clbits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if kind.arity is None:
            if not self.qubits:
                raise InvalidCircuit("barrier needs at least one qubit")
        elif len(self.qubits) != kind.arity:
            raise InvalidCircuit(f"{kind} takes {kind.arity} qubit(s), got {len(self.qubits)}")
        if len(set(self.qubits)) != len(self.qubits):
            raise InvalidCircuit(f"{kind} on repeated qubits {self.qubits}")
        if len(self.params) != kind.n_params:
            raise InvalidCircuit(f"{kind} takes {kind.n_params} parameter(s), got {len(self.params)}")
        if len(self.clbits) != (1 if kind is Gate.MEASURE else 0):
            raise InvalidCircuit(f"{kind} has wrong classical operands {self.clbits}")

    def inverse(self) -> "GateOp":
        if not self.kind.is_unitary:
            raise InvalidCircuit(f"{self.kind} has no inverse")
        if self.kind in ROTATIONS:
            return GateOp(self.kind, self.qubits, params=(-self.params[0],))
        return GateOp(_INVERSE.get(self.kind, self.kind), self.qubits)

    def remap(self, qubit_map: Sequence[int] | dict, clbit_map: Sequence[int] | dict | None = None) -> "GateOp":
        clbits = self.clbits if clbit_map is None else tuple(clbit_map[c] for c in self.clbits)
        return GateOp(self.kind, tuple(qubit_map[q] for q in self.qubits), clbits, self.params)

    def to_qasm(self, qreg: str = "q", creg: str = "c") -> str:
        args = ",".join(f"{qreg}[{q}]" for q in self.qubits)
        if self.kind is Gate.MEASURE:
            return f"measure {args} -> {creg}[{self.clbits[0]}];"
        if self.params:
            plist = ",".join(format(p, ".17g") for p in self.params)
            return f"{self.kind.value}({plist}) {args};"
        return f"{self.kind.value} {args};"


def op(kind: Gate | str, *qubits: int, clbit: Optional[int] = None, angle: Optional[float] = None) -> GateOp:
    """Terse GateOp constructor, e.g. ``op("cx", 0, 1)`` or ``op("rz", 2, angle=0.5)``."""
    return GateOp(
        Gate(kind),
        qubits,
        () if clbit is None else (clbit,),
        () if angle is None else (angle,),
    )


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    n_clbits: int = 0
    gates: tuple[GateOp, ...] = ()
    name: str = field(default="circuit", compare=False)
    qregs: tuple[tuple[str, int], ...] = field(default=(), compare=False, repr=False)
    cregs: tuple[tuple[str, int], ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits < 0 or self.n_clbits < 0:
            raise InvalidCircuit("register sizes must be non-negative")
        for i, g in enumerate(self.gates):
            bad = [q for q in g.qubits if q >= self.n_qubits or q < 0]
            if bad:
                raise IndexOutOfRange(f"gate {i} ({g.kind}) uses qubit {bad[0]} >= {self.n_qubits}", g.span)
            bad = [c for c in g.clbits if c >= self.n_clbits or c < 0]
            if bad:
                raise IndexOutOfRange(f"gate {i} ({g.kind}) uses clbit {bad[0]} >= {self.n_clbits}", g.span)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self) -> Iterator[GateOp]:
        return iter(self.gates)

    @property
    def is_unitary(self) -> bool:
        return all(g.kind not in (Gate.MEASURE, Gate.RESET) for g in self.gates)

    def replace(self, gates: Iterable[GateOp] | None = None, *, n_qubits: int | None = None,
                n_clbits: int | None = None, name: str | None = None) -> "Circuit":
        return Circuit(
            self.n_qubits if n_qubits is None else n_qubits,
            self.n_clbits if n_clbits is None else n_clbits,
            self.gates if gates is None else tuple(gates),
            self.name if name is None else name,
            self.qregs,
            self.cregs,
        )

    def widen(self, n_qubits: int | None = None, n_clbits: int | None = None) -> "Circuit":
        """Same gates on larger registers; shrinking is refused."""
        nq = self.n_qubits if n_qubits is None else n_qubits
        nc = self.n_clbits if n_clbits is None else n_clbits
        if nq < self.n_qubits or nc < self.n_clbits:
            raise InvalidCircuit("widen cannot shrink registers")
        return self.replace(n_qubits=nq, n_clbits=nc)

    def prefix(self, position: int) -> "Circuit":
        if not 0 <= position <= len(self.gates):
            raise IndexOutOfRange(f"position {position} outside 0..{len(self.gates)}")
        return self.replace(self.gates[:position])

    def without_barriers(self) -> "Circuit":
        return self.replace(g for g in self.gates if g.kind is not Gate.BARRIER)

    def count_ops(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for g in self.gates:
            out[g.kind.value] = out.get(g.kind.value, 0) + 1
        return out


def insert_at(c: Circuit, position: int, ops: Sequence[GateOp]) -> Circuit:
    """Splice ``ops`` before gate ``position``; ``c`` itself is untouched."""
    if not 0 <= position <= len(c.gates):
        raise IndexOutOfRange(f"insert position {position} outside 0..{len(c.gates)}")
    return c.replace(c.gates[:position] + tuple(ops) + c.gates[position:])


def inverse_ops(ops: Sequence[GateOp]) -> list[GateOp]:
    return [g.inverse() for g in reversed(ops)]


# ---------------------------------------------------------------- emitter

def emit_qasm(c: Circuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{c.n_qubits}];"]
    if c.n_clbits:
        lines.append(f"creg c[{c.n_clbits}];")
    lines.extend(g.to_qasm() for g in c.gates)
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------- parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<eq>==)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[;,\[\](){}+\-*/^])
    """,
    re.VERBOSE,
)

_GATE_NAMES = {g.value: g for g in Gate}
_GATE_NAMES["CX"] = Gate.CX
_FUNCS = {"sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
          "ln": math.log, "sqrt": math.sqrt}
_KNOWN_UNSUPPORTED = {"gate", "opaque", "if", "U", "u", "u0", "u1", "u2", "u3", "p", "cp",
                      "cu1", "cu3", "crz", "cy", "ch", "id", "sx", "sxdg", "rzz", "rxx",
                      "cswap", "for", "while", "def", "defcal", "input", "output"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        span = SourceSpan(line, pos - line_start + 1)
        if m is None:
            raise QasmSyntaxError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), span))
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, text: str, name: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.name = name
        self.qregs: dict[str, tuple[int, int]] = {}  # name -> (offset, size)
        self.cregs: dict[str, tuple[int, int]] = {}
        self.n_qubits = 0
        self.n_clbits = 0
        self.gates: list[GateOp] = []

    # token helpers
    def peek(self) -> Optional[_Tok]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def span(self) -> SourceSpan:
        t = self.peek()
        if t is not None:
            return t.span
        last = self.toks[-1].span if self.toks else SourceSpan(1, 1)
        return last

    def next(self) -> _Tok:
        t = self.peek()
        if t is None:
            raise QasmSyntaxError("unexpected end of input", self.span())
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            raise QasmSyntaxError(f"expected '{text}', found '{t.text}'", t.span)
        return t

    def expect_kind(self, kind: str, what: str) -> _Tok:
        t = self.next()
        if t.kind != kind:
            raise QasmSyntaxError(f"expected {what}, found '{t.text}'", t.span)
        return t

    # grammar
    def parse(self) -> Circuit:
        t = self.peek()
        if t is not None and t.text == "OPENQASM":
            self.next()
            ver = self.expect_kind("number", "version number")
            if not ver.text.startswith("2"):
                raise UnsupportedConstruct(f"OPENQASM {ver.text}", ver.span)
            self.expect(";")
        while self.peek() is not None:
            self.statement()
        return Circuit(
            self.n_qubits,
            self.n_clbits,
            tuple(self.gates),
            self.name,
            tuple((k, v[1]) for k, v in self.qregs.items()),
            tuple((k, v[1]) for k, v in self.cregs.items()),
        )

    def statement(self) -> None:
        t = self.next()
        if t.kind != "id":
            raise QasmSyntaxError(f"unexpected '{t.text}'", t.span)
        word = t.text
        if word == "OPENQASM":
            raise QasmSyntaxError("OPENQASM header must come first", t.span)
        if word == "include":
            path = self.expect_kind("string", "include path")
            if path.text != '"qelib1.inc"':
                raise UnsupportedConstruct(f"include {path.text}", path.span)
            self.expect(";")
        elif word in ("qreg", "creg"):
            self.declaration(word, t)
        elif word == "measure":
            src = self.argument("q")
            self.expect("->")
            dst = self.argument("c")
            self.expect(";")
            if len(src) != len(dst):
                raise QasmSyntaxError("measure register sizes differ", t.span)
            for q, c in zip(src, dst):
                self.gates.append(GateOp(Gate.MEASURE, (q,), (c,), span=t.span))
        elif word in ("reset", "barrier"):
            args = self.arglist()
            self.expect(";")
            if word == "reset":
                for group in args:
                    for q in group:
                        self.gates.append(GateOp(Gate.RESET, (q,), span=t.span))
            else:
                qubits = tuple(q for group in args for q in group)
                if len(set(qubits)) != len(qubits):
                    raise QasmSyntaxError("barrier repeats a qubit", t.span)
                self.gates.append(GateOp(Gate.BARRIER, qubits, span=t.span))
        elif word in _GATE_NAMES:
            self.gate(_GATE_NAMES[word], t)
        elif word in _KNOWN_UNSUPPORTED:
            raise UnsupportedConstruct(word, t.span)
        else:
            raise UnsupportedConstruct(f"unknown gate '{word}'", t.span)

    def declaration(self, word: str, t: _Tok) -> None:
        name = self.expect_kind("id", "register name")
        self.expect("[")
        size_tok = self.expect_kind("number", "register size")
        self.expect("]")
        self.expect(";")
        if not size_tok.text.isdigit() or int(size_tok.text) < 1:
            raise QasmSyntaxError("register size must be a positive integer", size_tok.span)
        size = int(size_tok.text)
        if name.text in self.qregs or name.text in self.cregs:
            raise QasmSyntaxError(f"register '{name.text}' redeclared", name.span)
        if word == "qreg":
            self.qregs[name.text] = (self.n_qubits, size)
            self.n_qubits += size
        else:
            self.cregs[name.text] = (self.n_clbits, size)
            self.n_clbits += size

    def argument(self, which: str) -> list[int]:
        regs = self.qregs if which == "q" else self.cregs
        other = self.cregs if which == "q" else self.qregs
        name = self.expect_kind("id", "register")
        if name.text not in regs:
            kind = "quantum" if which == "q" else "classical"
            if name.text in other:
                raise QasmSyntaxError(f"'{name.text}' is not a {kind} register", name.span)
            raise QasmSyntaxError(f"undeclared register '{name.text}'", name.span)
        offset, size = regs[name.text]
        t = self.peek()
        if t is not None and t.text == "[":
            self.next()
            idx = self.expect_kind("number", "index")
            self.expect("]")
            if not idx.text.isdigit():
                raise QasmSyntaxError("register index must be an integer", idx.span)
            k = int(idx.text)
            if k >= size:
                raise IndexOutOfRange(f"index {name.text}[{k}] exceeds size {size}", idx.span)
            return [offset + k]
        return list(range(offset, offset + size))

    def arglist(self) -> list[list[int]]:
        args = [self.argument("q")]
        while self.peek() is not None and self.peek().text == ",":
            self.next()
            args.append(self.argument("q"))
        return args

    def gate(self, kind: Gate, t: _Tok) -> None:
        params: list[float] = []
        if self.peek() is not None and self.peek().text == "(":
            self.next()
            if self.peek() is not None and self.peek().text != ")":
                params.append(self.expr())
                while self.peek() is not None and self.peek().text == ",":
                    self.next()
                    params.append(self.expr())
            self.expect(")")
        if len(params) != kind.n_params:
            raise QasmSyntaxError(f"{kind} expects {kind.n_params} parameter(s)", t.span)
        args = self.arglist()
        self.expect(";")
        if len(args) != kind.arity:
            raise QasmSyntaxError(f"{kind} expects {kind.arity} argument(s), got {len(args)}", t.span)
        sizes = {len(a) for a in args if len(a) > 1}
        if len(sizes) > 1:
            raise QasmSyntaxError("register arguments of different sizes", t.span)
        width = sizes.pop() if sizes else 1
        for j in range(width):
            qubits = tuple(a[j] if len(a) > 1 else a[0] for a in args)
            if len(set(qubits)) != len(qubits):
                raise QasmSyntaxError(f"{kind} applied to repeated qubits", t.span)
            self.gates.append(GateOp(kind, qubits, params=tuple(params), span=t.span))

    # parameter expressions: + - * / ^, unary minus, pi, a few functions
    def expr(self) -> float:
        value = self.term()
        while self.peek() is not None and self.peek().text in "+-":
            sign = self.next().text
            rhs = self.term()
            value = value + rhs if sign == "+" else value - rhs
        return value

    def term(self) -> float:
        value = self.unary()
        while self.peek() is not None and self.peek().text in ("*", "/"):
            o = self.next()
            rhs = self.unary()
            if o.text == "*":
                value *= rhs
            else:
                if rhs == 0:
                    raise QasmSyntaxError("division by zero in parameter", o.span)
                value /= rhs
        return value

    def unary(self) -> float:
        t = self.peek()
        if t is not None and t.text in "+-":
            self.next()
            v = self.unary()
            return -v if t.text == "-" else v
        return self.power()

    def power(self) -> float:
        base = self.atom()
        if self.peek() is not None and self.peek().text == "^":
            self.next()
            return base ** self.unary()
        return base

    def atom(self) -> float:
        t = self.next()
        if t.kind == "number":
            return float(t.text)
        if t.text == "pi":
            return math.pi
        if t.text == "(":
            v = self.expr()
            self.expect(")")
            return v
        if t.kind == "id" and t.text in _FUNCS:
            self.expect("(")
            v = self.expr()
            self.expect(")")
            try:
                return _FUNCS[t.text](v)
            except ValueError as exc:
                raise QasmSyntaxError(f"{t.text}({v}) is undefined", t.span) from exc
        raise QasmSyntaxError(f"bad parameter expression near '{t.text}'", t.span)


def parse_qasm(text: str, name: str = "circuit") -> Circuit:
    return _Parser(text, name).parse()


def load_qasm(path) -> Circuit:
    from pathlib import Path

    p = Path(path)
    return parse_qasm(p.read_text(encoding="utf-8"), name=p.stem)
