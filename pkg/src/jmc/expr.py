"""Factorable functions f(x, w) as immutable expression DAGs.

Expressions are written in a small infix language::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' integer)?
    atom   := number | x<k> | w<k> | g<k> | func '(' expr ')' | '(' expr ')'
    func   := exp | ln | sqrt | sin | cos

``x<k>`` are decision variables, ``w<k>`` (or ``g<k>`` for transformed
uncertainty variables) are uncertainty variables; indices are 1-based in the
text and 0-based in the graph.  Syntactically identical subterms are shared.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, DomainError, ParseError

FUNCTIONS = ("exp", "ln", "sqrt", "sin", "cos")
UNARY_OPS = ("neg",) + FUNCTIONS
BINARY_OPS = ("add", "sub", "mul", "div")


class Node(NamedTuple):
    """One DAG node.

    ``value`` holds the constant for ``const``, the 0-based index for ``x``
    and ``w`` leaves, and the integer exponent for ``pow``.
    """

    op: str
    args: tuple = ()
    value: float | int | None = None


@dataclass(frozen=True)
class ExprGraph:
    nodes: tuple[Node, ...]
    root: int
    n_x: int
    n_w: int
    w_symbol: str = "w"

    def __post_init__(self):
        for k, node in enumerate(self.nodes):
            if any(a >= k for a in node.args):
                raise ValueError("nodes are not in topological order")
            if node.op == "x" and node.value >= self.n_x:
                raise DimensionError(f"x{node.value + 1} exceeds n_x={self.n_x}")
            if node.op == "w" and node.value >= self.n_w:
                raise DimensionError(
                    f"{self.w_symbol}{node.value + 1} exceeds n_w={self.n_w}")

    def __len__(self):
        return len(self.nodes)

    def depth(self) -> int:
        d = [0] * len(self.nodes)
        for k, node in enumerate(self.nodes):
            d[k] = 1 + max((d[a] for a in node.args), default=0)
        return d[self.root]

    def uses_x(self) -> bool:
        return any(n.op == "x" for n in self.nodes)

    def to_text(self) -> str:
        """Fully parenthesised text that parses back to an equivalent graph."""
        txt: list[str] = []
        for node in self.nodes:
            op, a = node.op, node.args
            if op == "const":
                v = float(node.value)
                s = repr(abs(v))
                txt.append(f"(-{s})" if math.copysign(1.0, v) < 0 else s)
            elif op == "x":
                txt.append(f"x{node.value + 1}")
            elif op == "w":
                txt.append(f"{self.w_symbol}{node.value + 1}")
            elif op == "neg":
                txt.append(f"(-{txt[a[0]]})")
            elif op == "pow":
                txt.append(f"({txt[a[0]]}^{node.value})")
            elif op in FUNCTIONS:
                txt.append(f"{op}({txt[a[0]]})")
            else:
                sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[op]
                txt.append(f"({txt[a[0]]}{sym}{txt[a[1]]})")
        return txt[self.root]

    def __str__(self):
        return self.to_text()


class _Builder:
    """Hash-consing node store; equal (op, args, value) triples share one node."""

    def __init__(self):
        self.nodes: list[Node] = []
        self._index: dict[tuple, int] = {}

    def add(self, op: str, args: tuple = (), value=None) -> int:
        key_value = float(value).hex() if op == "const" else value
        key = (op, args, key_value)
        k = self._index.get(key)
        if k is None:
            k = len(self.nodes)
            self.nodes.append(Node(op, args, value))
            self._index[key] = k
        return k

    def graft(self, graph: ExprGraph, leaf_map: Callable[[Node], int] | None = None) -> int:
        """Copy ``graph`` into this store; ``leaf_map`` may redirect leaves."""
        remap: list[int] = []
        for node in graph.nodes:
            if leaf_map is not None and node.op in ("x", "w"):
                remap.append(leaf_map(node))
            else:
                remap.append(self.add(node.op, tuple(remap[a] for a in node.args), node.value))
        return remap[graph.root]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Token(NamedTuple):
    kind: str
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append(_Token(kind, m.group(kind), start))
        pos = m.end()
    tokens.append(_Token("end", "", n))
    return tokens


_VAR_RE = re.compile(r"([xwg])([1-9]\d*)$")


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0
        self.b = _Builder()
        self.max_x = 0
        self.max_w = 0
        self.w_letters: set[str] = set()

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def take(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: _Token | None = None):
        tok = tok or self.peek()
        return ParseError(message, tok.pos, self.source)

    def expect(self, text: str):
        tok = self.take()
        if tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise self.error(f"expected {text!r}, found {found}", tok)

    def parse(self) -> int:
        root = self.expr()
        if self.peek().kind != "end":
            raise self.error(f"unexpected {self.peek().text!r}")
        return root

    def expr(self) -> int:
        left = self.term()
        while self.peek().text in ("+", "-"):
            op = "add" if self.take().text == "+" else "sub"
            left = self.b.add(op, (left, self.term()))
        return left

    def term(self) -> int:
        left = self.unary()
        while self.peek().text in ("*", "/"):
            op = "mul" if self.take().text == "*" else "div"
            left = self.b.add(op, (left, self.unary()))
        return left

    def unary(self) -> int:
        if self.peek().text == "-":
            self.take()
            return self.b.add("neg", (self.unary(),))
        return self.power()

    def power(self) -> int:
        base = self.atom()
        if self.peek().text != "^":
            return base
        self.take()
        tok = self.take()
        if tok.kind != "num":
            raise self.error("exponent must be a non-negative integer literal", tok)
        if not re.fullmatch(r"\d+", tok.text):
            raise self.error(f"non-integer exponent {tok.text!r}", tok)
        if self.peek().text == "^":
            raise self.error("chained '^' is ambiguous; use parentheses")
        return self.b.add("pow", (base,), int(tok.text))

    def atom(self) -> int:
        tok = self.take()
        if tok.kind == "num":
            return self.b.add("const", (), float(tok.text))
        if tok.kind == "name":
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return self.b.add(tok.text, (arg,))
            m = _VAR_RE.match(tok.text)
            if m is None:
                raise self.error(f"unknown identifier {tok.text!r}", tok)
            letter, idx = m.group(1), int(m.group(2))
            if letter == "x":
                self.max_x = max(self.max_x, idx)
                return self.b.add("x", (), idx - 1)
            self.w_letters.add(letter)
            if len(self.w_letters) > 1:
                raise self.error("cannot mix w and g uncertainty variables", tok)
            self.max_w = max(self.max_w, idx)
            return self.b.add("w", (), idx - 1)
        if tok.text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise self.error(f"unexpected {found}", tok)


def parse(source: str, n_x: int | None = None, n_w: int | None = None) -> ExprGraph:
    """Parse expression text into an :class:`ExprGraph`.

    ``n_x``/``n_w`` declare the dimensions; by default they are the largest
    indices that occur.  Raises :class:`ParseError` on malformed text.
    """
    p = _Parser(source)
    root = p.parse()
    if n_x is None:
        n_x = p.max_x
    if n_w is None:
        n_w = p.max_w
    if p.max_x > n_x or p.max_w > n_w:
        raise DimensionError(
            f"expression uses n_x={p.max_x}, n_w={p.max_w}; declared {n_x}, {n_w}")
    letter = p.w_letters.pop() if p.w_letters else "w"
    nodes, root = _prune(p.b.nodes, root)
    return ExprGraph(tuple(nodes), root, n_x, n_w, letter)


def _prune(nodes: list[Node], root: int) -> tuple[list[Node], int]:
    """Drop nodes unreachable from ``root`` (keeps topological order)."""
    live = [False] * len(nodes)
    live[root] = True
    for k in range(root, -1, -1):
        if live[k]:
            for a in nodes[k].args:
                live[a] = True
    remap = {}
    out = []
    for k, node in enumerate(nodes):
        if live[k]:
            remap[k] = len(out)
            out.append(Node(node.op, tuple(remap[a] for a in node.args), node.value))
    return out, remap[root]


def constant(value: float, n_x: int = 0, n_w: int = 0, w_symbol: str = "w") -> ExprGraph:
    return ExprGraph((Node("const", (), float(value)),), 0, n_x, n_w, w_symbol)


def compose(g: ExprGraph, psi: Sequence[ExprGraph]) -> ExprGraph:
    """Substitute ``w_j := psi[j](gamma)`` into ``g``.

    Every ``psi[j]`` must depend on uncertainty variables only.  The result
    lives over ``(x, gamma)`` with ``n_w = max(psi[j].n_w)``.
    """
    if len(psi) != g.n_w:
        raise DimensionError(f"need {g.n_w} substitutions, got {len(psi)}")
    for j, p in enumerate(psi):
        if p.uses_x():
            raise DimensionError(f"substitution {j + 1} depends on decision variables")
    n_gamma = max((p.n_w for p in psi), default=0)
    b = _Builder()
    roots = [b.graft(p) for p in psi]

    def leaf(node: Node) -> int:
        if node.op == "w":
            return roots[node.value]
        return b.add("x", (), node.value)

    root = b.graft(g, leaf)
    nodes, root = _prune(b.nodes, root)
    symbol = psi[0].w_symbol if psi else g.w_symbol
    return ExprGraph(tuple(nodes), root, g.n_x, n_gamma, symbol)


# ---------------------------------------------------------------------------
# Real evaluation
# ---------------------------------------------------------------------------

def ipow(v: float, n: int) -> float:
    """Integer power; shared by every evaluation semantics so results agree bitwise."""
    return v ** n


def _check_dims(g: ExprGraph, x: Sequence, w: Sequence):
    if len(x) != g.n_x or len(w) != g.n_w:
        raise DimensionError(
            f"expected n_x={g.n_x}, n_w={g.n_w}; got {len(x)}, {len(w)}")


def eval_real(g: ExprGraph, x: Sequence[float], w: Sequence[float]) -> float:
    """Evaluate ``f(x, w)`` in floating point.

    Domain violations (ln or sqrt of an invalid argument, division by zero,
    overflow) raise :class:`DomainError` instead of producing NaN or inf.
    """
    _check_dims(g, x, w)
    vals: list[float] = []
    for node in g.nodes:
        op = node.op
        if op == "const":
            v = node.value
        elif op == "x":
            v = float(x[node.value])
        elif op == "w":
            v = float(w[node.value])
        else:
            a = vals[node.args[0]]
            if op == "add":
                v = a + vals[node.args[1]]
            elif op == "sub":
                v = a - vals[node.args[1]]
            elif op == "mul":
                v = a * vals[node.args[1]]
            elif op == "div":
                d = vals[node.args[1]]
                if d == 0.0:
                    raise DomainError("division by zero")
                v = a / d
            elif op == "neg":
                v = -a
            elif op == "pow":
                try:
                    v = ipow(a, node.value)
                except OverflowError as exc:
                    raise DomainError("overflow in pow") from exc
            elif op == "exp":
                try:
                    v = math.exp(a)
                except OverflowError as exc:
                    raise DomainError(f"exp overflow at {a}") from exc
            elif op == "ln":
                if a <= 0.0:
                    raise DomainError(f"ln of non-positive value {a}")
                v = math.log(a)
            elif op == "sqrt":
                if a < 0.0:
                    raise DomainError(f"sqrt of negative value {a}")
                v = math.sqrt(a)
            elif op == "sin":
                v = math.sin(a)
            elif op == "cos":
                v = math.cos(a)
            else:  # pragma: no cover
                raise ValueError(f"unknown op {op}")
            if math.isinf(v) or math.isnan(v):
                raise DomainError(f"non-finite result in {op}")
        vals.append(v)
    return vals[g.root]


def eval_batch(g: ExprGraph, x: Sequence, w: Sequence) -> np.ndarray:
    """Vectorised :func:`eval_real`; ``x`` and ``w`` entries broadcast as arrays."""
    _check_dims(g, x, w)
    xs = [np.asarray(v, dtype=float) for v in x]
    ws = [np.asarray(v, dtype=float) for v in w]
    vals: list = []
    with np.errstate(all="ignore"):
        for node in g.nodes:
            op = node.op
            if op == "const":
                v = np.float64(node.value)
            elif op == "x":
                v = xs[node.value]
            elif op == "w":
                v = ws[node.value]
            else:
                a = vals[node.args[0]]
                if op == "add":
                    v = a + vals[node.args[1]]
                elif op == "sub":
                    v = a - vals[node.args[1]]
                elif op == "mul":
                    v = a * vals[node.args[1]]
                elif op == "div":
                    d = vals[node.args[1]]
                    if np.any(d == 0.0):
                        raise DomainError("division by zero")
                    v = a / d
                elif op == "neg":
                    v = -a
                elif op == "pow":
                    v = a ** node.value
                elif op == "exp":
                    v = np.exp(a)
                elif op == "ln":
                    if np.any(a <= 0.0):
                        raise DomainError("ln of non-positive value")
                    v = np.log(a)
                elif op == "sqrt":
                    if np.any(a < 0.0):
                        raise DomainError("sqrt of negative value")
                    v = np.sqrt(a)
                elif op == "sin":
                    v = np.sin(a)
                else:
                    v = np.cos(a)
                if not np.all(np.isfinite(v)):
                    raise DomainError(f"non-finite result in {op}")
            vals.append(v)
    return np.asarray(vals[g.root], dtype=float)
