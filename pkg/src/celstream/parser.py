"""Concrete syntax for CEL queries.

Binding strength, tightest first: ``AS``, then the postfix operators
``FILTER`` and ``+`` (applied left to right), then ``;``, then ``OR``.
Keywords are case-insensitive; identifiers are case-sensitive. Compound
filter predicates must be parenthesized: ``FILTER (P AND Q)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

from . import formula as F
from . import predicates as P
from .events import Schema


class CelSyntaxError(ValueError):
    def __init__(self, message: str, pos: int | None = None, text: str = ""):
        self.pos = pos
        if pos is not None:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class UnknownRelationError(CelSyntaxError):
    pass


KEYWORDS = {
    "AS", "FILTER", "OR", "AND", "NOT", "TRUE", "FALSE", "TYPE", "EMPTY",
    "STRICT", "NXT", "NEXT", "LAST", "MAX",
}
_STRATEGY_ALIASES = {"STRICT": "STRICT", "NXT": "NXT", "NEXT": "NXT", "LAST": "LAST", "MAX": "MAX"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|--[^\n]*|\#[^\n]*)
  | (?P<num>-?\d+\.\d*(?:[eE][-+]?\d+)?|-?\d+[eE][-+]?\d+|-?\.\d+(?:[eE][-+]?\d+)?|-?\d+)
  | (?P<str>'(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|!=|<>|≤|≥|≠|=|<|>|∧|∨|¬)
  | (?P<punct>[();+.,\[\]])
    """,
    re.X,
)


@dataclass
class Token:
    kind: str  # num, str, ident, kw, op, punct, eof
    value: Any
    pos: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise CelSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        raw = m.group()
        if kind == "num":
            val: Any = float(raw) if any(c in raw for c in ".eE") else int(raw)
            out.append(Token("num", val, pos))
        elif kind == "str":
            body = raw[1:-1]
            out.append(Token("str", re.sub(r"\\(.)", r"\1", body), pos))
        elif kind == "ident":
            up = raw.upper()
            if up in KEYWORDS:
                out.append(Token("kw", up, pos))
            else:
                out.append(Token("ident", raw, pos))
        elif kind == "op":
            norm = {"≤": "<=", "≥": ">=", "≠": "!=", "<>": "!=", "∧": "AND", "∨": "OR", "¬": "NOT"}.get(raw, raw)
            if norm in ("AND", "OR", "NOT"):
                out.append(Token("kw", norm, pos))
            else:
                out.append(Token("op", norm, pos))
        elif kind == "punct":
            out.append(Token("punct", raw, pos))
        pos = m.end()
    out.append(Token("eof", None, len(text)))
    return out


class _Parser:
    def __init__(self, text: str, schema: Schema | None):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.schema = schema

    # token helpers
    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, kind: str, value: Any = None) -> bool:
        t = self.peek()
        return t.kind == kind and (value is None or t.value == value)

    def expect(self, kind: str, value: Any = None) -> Token:
        if not self.at(kind, value):
            t = self.peek()
            want = value if value is not None else kind
            got = "end of input" if t.kind == "eof" else repr(t.value)
            self.fail(f"expected {want}, found {got}", t.pos)
        return self.take()

    def fail(self, msg: str, pos: int | None = None, cls=CelSyntaxError):
        raise cls(msg, self.peek().pos if pos is None else pos, self.text)

    # formulas
    def parse(self) -> F.Formula:
        if self.at("eof"):
            self.fail("empty query")
        f = self.or_expr()
        if not self.at("eof"):
            t = self.peek()
            self.fail(f"unexpected {t.value!r}", t.pos)
        return f

    def or_expr(self) -> F.Formula:
        f = self.seq_expr()
        while self.at("kw", "OR"):
            self.take()
            f = F.Or(f, self.seq_expr())
        return f

    def seq_expr(self) -> F.Formula:
        f = self.postfix_expr()
        while self.at("punct", ";"):
            self.take()
            f = F.Seq(f, self.postfix_expr())
        return f

    def postfix_expr(self) -> F.Formula:
        f = self.primary()
        while True:
            if self.at("kw", "FILTER"):
                self.take()
                f = F.Filter(f, self.pred_unit())
            elif self.at("punct", "+"):
                self.take()
                f = F.Plus(f)
            else:
                return f

    def primary(self) -> F.Formula:
        t = self.peek()
        if t.kind == "punct" and t.value in "([":
            self.take()
            f = self.or_expr()
            self.expect("punct", ")" if t.value == "(" else "]")
            return f
        if t.kind == "kw" and t.value in _STRATEGY_ALIASES and self.peek(1).kind == "punct" and self.peek(1).value == "(":
            self.take()
            self.take()
            body = self.or_expr()
            self.expect("punct", ")")
            return F.Select(_STRATEGY_ALIASES[t.value], body)
        if t.kind == "kw" and t.value == "EMPTY":
            self.take()
            return F.EMPTY
        if t.kind == "ident":
            if self.peek(1).kind == "punct" and self.peek(1).value == "(":
                self.fail(f"unknown selection strategy {t.value!r}", t.pos)
            self.take()
            if self.schema is not None and t.value not in self.schema:
                self.fail(f"unknown relation {t.value!r}", t.pos, UnknownRelationError)
            self.expect("kw", "AS")
            v = self.expect("ident")
            return F.Assign(t.value, v.value)
        if t.kind == "eof":
            self.fail("unexpected end of input", t.pos)
        self.fail(f"unexpected {t.value!r}", t.pos)

    # predicates
    def pred_unit(self) -> P.Pred:
        """A filter predicate: an atom, NOT unit, or a parenthesized expression."""
        t = self.peek()
        if t.kind == "kw" and t.value == "NOT":
            self.take()
            return P.Not(self.pred_unit())
        if t.kind == "punct" and t.value == "(":
            self.take()
            p = self.pred_or()
            self.expect("punct", ")")
            return p
        return self.pred_atom()

    def pred_or(self) -> P.Pred:
        items = [self.pred_and()]
        while self.at("kw", "OR"):
            self.take()
            items.append(self.pred_and())
        return items[0] if len(items) == 1 else P.Or(tuple(items))

    def pred_and(self) -> P.Pred:
        items = [self.pred_unit()]
        while self.at("kw", "AND"):
            self.take()
            items.append(self.pred_unit())
        return items[0] if len(items) == 1 else P.And(tuple(items))

    def pred_atom(self) -> P.Pred:
        t = self.peek()
        if t.kind == "kw" and t.value in ("TRUE", "FALSE"):
            self.take()
            return P.Const(t.value == "TRUE")
        if t.kind == "kw" and t.value == "TYPE":
            self.take()
            self.expect("punct", "(")
            v = self.expect("ident").value
            self.expect("punct", ")")
            op = self.expect("op")
            if op.value not in ("=", "!="):
                self.fail("type tests support only = and !=", op.pos)
            rel = self.expect("ident")
            if self.schema is not None and rel.value not in self.schema:
                self.fail(f"unknown relation {rel.value!r}", rel.pos, UnknownRelationError)
            test = P.TypeTest(v, rel.value)
            return test if op.value == "=" else P.Not(test)
        left = self.operand()
        op = self.expect("op").value
        right = self.operand()
        if isinstance(left, P.AttrRef):
            return P.Compare(left, op, right)
        if isinstance(right, P.AttrRef):
            return P.Compare(right, P.SWAPPED[op], left)
        self.fail("a comparison needs at least one attribute reference", t.pos)

    def operand(self) -> Any:
        t = self.peek()
        if t.kind == "ident":
            self.take()
            self.expect("punct", ".")
            a = self.take()
            if a.kind not in ("ident", "kw"):
                self.fail("expected attribute name", a.pos)
            name = a.value if a.kind == "ident" else self.text[a.pos:a.pos + len(a.value)]
            return P.AttrRef(t.value, name)
        if t.kind == "num" or t.kind == "str":
            self.take()
            return t.value
        if t.kind == "kw" and t.value in ("TRUE", "FALSE"):
            self.take()
            return t.value == "TRUE"
        self.fail("expected attribute reference or literal", t.pos)


def parse_formula(text: str, schema: Schema | None = None) -> F.Formula:
    """Parse a query document. Relation names are checked when ``schema`` is given."""
    f = _Parser(text, schema).parse()
    if schema is not None:
        check_attributes(f, schema)
    return f


def check_attributes(f: F.Formula, schema: Schema) -> None:
    """Reject attribute references that no binding relation of the variable has.

    Also rejects comparisons with a literal whose kind can never match.
    """
    rels: dict[str, set[str]] = {}
    for g in F.walk(f):
        if isinstance(g, F.Assign):
            rels.setdefault(g.var, set()).add(g.relation)
    for g in F.walk(f):
        if not isinstance(g, F.Filter):
            continue
        for a in P.atoms(g.pred):
            if not isinstance(a, P.Compare):
                continue
            refs = [a.left] + ([a.right] if isinstance(a.right, P.AttrRef) else [])
            for ref in refs:
                bound = rels.get(ref.var)
                if not bound:
                    continue
                kinds = {schema.attribute_kind(r, ref.attr) for r in bound} - {None}
                if not kinds:
                    raise SchemaMismatchError(
                        f"attribute {ref.attr!r} does not exist in relation(s) {sorted(bound)} bound to {ref.var}"
                    )
                if ref is a.left and not isinstance(a.right, P.AttrRef):
                    lit = P.kind_class(a.right)
                    allowed = {_KIND_CLASS[k] for k in kinds}
                    if lit not in allowed:
                        raise SchemaMismatchError(
                            f"{ref} has kind {'/'.join(sorted(kinds))} but is compared with {a.right!r}"
                        )


_KIND_CLASS = {"int": "numeric", "float": "numeric", "string": "string", "bool": "bool"}


class SchemaMismatchError(ValueError):
    pass
