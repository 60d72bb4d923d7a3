"""Textual pipeline language compiled to augmentation flow networks.

Operators (note the assignment, it is easy to misread): ``^`` builds a
random *choice* between branches and ``|`` builds a *cascade* applied in
sequence.  ``|`` binds tighter than ``^``, so ``a() | b() ^ c()`` is a choice
between the cascade (a then b) and c.  Grammar sketch::

    pipeline := choice
    choice   := branch ('^' [':' NUM] branch)*
    branch   := term [':' NUM]
    term     := factor ('|' factor)*
    factor   := IDENT '(' [arg {',' arg}] ')' | 'identity' | '(' choice ')'
    arg      := IDENT '=' dist
    dist     := 'U(' NUM ',' NUM ')' | 'B(' NUM ')' | 'C(' NUM {',' NUM} ')' | NUM

A branch weight may be written as a suffix on the branch (``a():3 ^ b():1``)
or after the ``^`` (``a() ^:1 b()``); the suffix is the canonical form, and
unweighted branches default to weight 1.  ``#`` starts a line comment.
Parsing is pure syntax; op and argument names are validated on compile, so
positioned diagnostics survive both phases.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dataclass_field

from . import graph, ops
from .dist import Bernoulli, Categorical, Constant, DistSpec, Uniform
from .errors import ConfigurationError, PlasmaugError
from .rng import hash_u64

_MAX_DEPTH = 200


class PipelineError(PlasmaugError, ValueError):
    """Base for all pipeline-text errors; carries a source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class PipelineSyntaxError(PipelineError):
    """Lexical or grammatical error, with the expected-token set."""

    def __init__(self, message: str, line: int, col: int, expected=()):
        self.expected = tuple(sorted(expected))
        if self.expected:
            message = f"{message}; expected one of: {', '.join(self.expected)}"
        super().__init__(message, line, col)


class UnknownOpError(PipelineError):
    """Pipeline references an op name missing from the catalog."""


class InvalidArgError(PipelineError):
    """Unknown argument name, or a distribution outside the parameter bounds."""


# --- AST -------------------------------------------------------------------

@dataclass
class AstLeaf:
    name: str
    args: dict[str, DistSpec]
    line: int = dataclass_field(default=0, compare=False)
    col: int = dataclass_field(default=0, compare=False)


@dataclass
class AstIdentity:
    pass


@dataclass
class AstCascade:
    children: list


@dataclass
class AstChoice:
    children: list
    weights: list  # float weight or None per branch


PipelineAst = object  # AstLeaf | AstIdentity | AstCascade | AstChoice


# --- lexer -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
      (?P<ws>\s+|\#[^\n]*)
    | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<sym>[()=,^|:])
""", re.VERBOSE)

_EOF = "end of input"


@dataclass(frozen=True)
class _Token:
    type: str   # 'number' | 'ident' | literal symbol | 'eof'
    text: str
    line: int
    col: int


def _lex(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PipelineSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        col = m.start() - line_start + 1
        kind = m.lastgroup
        if kind == "ws":
            chunk = m.group()
            if "\n" in chunk:
                line += chunk.count("\n")
                line_start = m.start() + chunk.rindex("\n") + 1
        elif kind == "sym":
            tokens.append(_Token(m.group(), m.group(), line, col))
        else:
            tokens.append(_Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(_Token("eof", _EOF, line, len(text) - line_start + 1))
    return tokens


# --- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[_Token]):
        self._tokens = tokens
        self._pos = 0
        self._depth = 0

    def _peek(self) -> _Token:
        return self._tokens[self._pos]

    def _next(self) -> _Token:
        tok = self._tokens[self._pos]
        if tok.type != "eof":
            self._pos += 1
        return tok

    def _expect(self, ttype: str, what: str) -> _Token:
        tok = self._peek()
        if tok.type != ttype:
            raise PipelineSyntaxError(
                f"unexpected {tok.text!r}", tok.line, tok.col, expected=(what,))
        return self._next()

    def pipeline(self):
        ast = self.choice()
        tok = self._peek()
        if tok.type != "eof":
            raise PipelineSyntaxError(
                f"unexpected {tok.text!r} after pipeline", tok.line, tok.col,
                expected=("'^'", "'|'", _EOF))
        return ast

    def _number(self, what: str) -> float:
        tok = self._expect("number", what)
        try:
            value = float(tok.text)
        except ValueError:
            raise PipelineSyntaxError(
                f"bad number {tok.text!r}", tok.line, tok.col) from None
        return value

    def _opt_weight(self) -> float | None:
        if self._peek().type == ":":
            self._next()
            return self._number("weight number")
        return None

    def choice(self):
        first = self.term()
        first_w = self._opt_weight()
        if self._peek().type != "^":
            if first_w is not None:
                tok = self._peek()
                raise PipelineSyntaxError(
                    "weight on a single branch without a choice", tok.line, tok.col,
                    expected=("'^'",))
            return first
        branches = [first]
        weights = [first_w]
        while self._peek().type == "^":
            self._next()
            caret_w = self._opt_weight()
            branches.append(self.term())
            suffix_w = self._opt_weight()
            if caret_w is not None and suffix_w is not None:
                tok = self._peek()
                raise PipelineSyntaxError(
                    "branch has both a '^:w' and a ':w' suffix weight",
                    tok.line, tok.col)
            weights.append(suffix_w if suffix_w is not None else caret_w)
        return AstChoice(branches, weights)

    def term(self):
        children = [self.factor()]
        while self._peek().type == "|":
            self._next()
            children.append(self.factor())
        if len(children) == 1:
            return children[0]
        flat = []
        for child in children:  # cascading is associative, flatten groups
            if isinstance(child, AstCascade):
                flat.extend(child.children)
            else:
                flat.append(child)
        return AstCascade(flat)

    def factor(self):
        tok = self._peek()
        if tok.type == "(":
            self._depth += 1
            if self._depth > _MAX_DEPTH:
                raise PipelineSyntaxError("nesting too deep", tok.line, tok.col)
            self._next()
            inner = self.choice()
            self._expect(")", "')'")
            self._depth -= 1
            if isinstance(inner, AstCascade):
                return inner  # regrouped by term() if inside another cascade
            return inner
        if tok.type == "ident":
            self._next()
            if tok.text == "identity":
                if self._peek().type == "(":
                    nxt = self._peek()
                    raise PipelineSyntaxError(
                        "identity takes no argument list", nxt.line, nxt.col)
                return AstIdentity()
            self._expect("(", "'('")
            args: dict[str, DistSpec] = {}
            if self._peek().type != ")":
                while True:
                    self._parse_arg(tok.text, args)
                    if self._peek().type != ",":
                        break
                    self._next()
            self._expect(")", "')'")
            return AstLeaf(tok.text, args, tok.line, tok.col)
        raise PipelineSyntaxError(
            f"unexpected {tok.text!r}", tok.line, tok.col,
            expected=("op name", "'identity'", "'('"))

    def _parse_arg(self, op_name: str, args: dict):
        name_tok = self._expect("ident", "argument name")
        if name_tok.text in args:
            raise PipelineSyntaxError(
                f"duplicate argument {name_tok.text!r}", name_tok.line, name_tok.col)
        self._expect("=", "'='")
        args[name_tok.text] = self._parse_dist()

    def _parse_dist(self) -> DistSpec:
        tok = self._peek()
        try:
            if tok.type == "number":
                return Constant(self._number("number"))
            if tok.type == "ident" and tok.text in ("U", "B", "C"):
                self._next()
                self._expect("(", "'('")
                nums = [self._number("number")]
                while self._peek().type == ",":
                    self._next()
                    nums.append(self._number("number"))
                self._expect(")", "')'")
                if tok.text == "U":
                    if len(nums) != 2:
                        raise PipelineSyntaxError(
                            f"U takes 2 numbers, got {len(nums)}", tok.line, tok.col)
                    return Uniform(nums[0], nums[1])
                if tok.text == "B":
                    if len(nums) != 1:
                        raise PipelineSyntaxError(
                            f"B takes 1 number, got {len(nums)}", tok.line, tok.col)
                    return Bernoulli(nums[0])
                return Categorical(tuple(nums))
        except ConfigurationError as exc:
            raise InvalidArgError(str(exc), tok.line, tok.col) from None
        raise PipelineSyntaxError(
            f"unexpected {tok.text!r}", tok.line, tok.col,
            expected=("number", "'U('", "'B('", "'C('"))


def parse(text: str) -> PipelineAst:
    """Parse pipeline text to an AST.

    Purely syntactic: op names and arguments are checked by
    :func:`compile_pipeline`, which still reports source positions.
    Any malformed input raises a :class:`PipelineError`; nothing else escapes.
    """
    if not isinstance(text, str):
        raise PipelineSyntaxError("pipeline source must be text", 1, 1)
    return _Parser(_lex(text)).pipeline()


# --- validation + compilation ----------------------------------------------

def _validate_leaf(node: AstLeaf) -> None:
    if not ops.is_registered(node.name):
        raise UnknownOpError(f"unknown op {node.name!r}", node.line, node.col)
    desc = ops.descriptor(node.name)
    known = {p.name: p for p in desc.params}
    for arg_name, dist in node.args.items():
        if arg_name not in known:
            raise InvalidArgError(
                f"{node.name} has no argument {arg_name!r}", node.line, node.col)
        spec = known[arg_name]
        lo, hi = dist.bounds()
        if lo < spec.lo - 1e-12 or hi > spec.hi + 1e-12:
            raise InvalidArgError(
                f"{node.name}.{arg_name}: [{lo}, {hi}] outside bounds "
                f"[{spec.lo}, {spec.hi}]", node.line, node.col)


def compile_pipeline(ast: PipelineAst, seed: int) -> graph.AugNode:
    """Compile an AST into a seeded AugNode.

    Child seeds derive deterministically from the root seed and the child's
    structural index; omitted branch weights default to 1 before
    normalization.
    """
    if isinstance(ast, AstIdentity):
        return graph.identity(seed)
    if isinstance(ast, AstLeaf):
        _validate_leaf(ast)
        return graph.leaf(ast.name, seed, **ast.args)
    if isinstance(ast, AstCascade):
        kids = [compile_pipeline(c, hash_u64(seed, i))
                for i, c in enumerate(ast.children)]
        return graph.cascade(kids, seed)
    if isinstance(ast, AstChoice):
        kids = [compile_pipeline(c, hash_u64(seed, i))
                for i, c in enumerate(ast.children)]
        raw = [1.0 if w is None else float(w) for w in ast.weights]
        total = sum(raw)
        if total <= 0:
            raise ConfigurationError(f"choice weights {raw} sum to zero")
        return graph.choice(kids, seed, weights=[w / total for w in raw])
    raise ConfigurationError(f"not a pipeline AST node: {ast!r}")


def parse_pipeline(text: str, seed: int) -> graph.AugNode:
    """Convenience: parse then compile."""
    return compile_pipeline(parse(text), seed)


# --- canonical formatting ----------------------------------------------------

def _format_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _format_dist(d: DistSpec) -> str:
    if isinstance(d, Constant):
        return _format_num(d.value)
    if isinstance(d, Uniform):
        return f"U({_format_num(d.lo)},{_format_num(d.hi)})"
    if isinstance(d, Bernoulli):
        return f"B({_format_num(d.p)})"
    if isinstance(d, Categorical):
        return f"C({','.join(_format_num(w) for w in d.weights)})"
    raise ConfigurationError(f"not a DistSpec: {d!r}")


def _arg_order(node: AstLeaf) -> list[str]:
    if ops.is_registered(node.name):
        schema = [p.name for p in ops.descriptor(node.name).params]
        ordered = [n for n in schema if n in node.args]
        extras = [n for n in node.args if n not in schema]
        return ordered + extras
    return list(node.args)


def format_pipeline(ast: PipelineAst) -> str:
    """Canonical pretty-printer; ``parse(format_pipeline(x))`` equals ``x``.

    Parentheses appear only where precedence requires them (choices nested
    in cascades or in other choices).
    """
    if isinstance(ast, AstIdentity):
        return "identity"
    if isinstance(ast, AstLeaf):
        args = ", ".join(f"{n}={_format_dist(ast.args[n])}" for n in _arg_order(ast))
        return f"{ast.name}({args})"
    if isinstance(ast, AstCascade):
        parts = []
        for child in ast.children:
            text = format_pipeline(child)
            if isinstance(child, AstChoice):
                text = f"({text})"
            parts.append(text)
        return " | ".join(parts)
    if isinstance(ast, AstChoice):
        parts = []
        for child, weight in zip(ast.children, ast.weights):
            text = format_pipeline(child)
            if isinstance(child, AstChoice):
                text = f"({text})"
            if weight is not None:
                text = f"{text}:{_format_num(weight)}"
            parts.append(text)
        return " ^ ".join(parts)
    raise ConfigurationError(f"not a pipeline AST node: {ast!r}")
