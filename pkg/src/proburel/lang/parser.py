"""Recursive-descent parser for ``.ppl`` programs and ``.expr`` expressions.

Program files start with declarations and continue with statements::

    var c : {hd, tl};
    var t : nat[0..64];
    param p = 1/2;
    while (c = tl) { c := hd pc{p} c := tl; t := t + 1 }

``;`` binds loosest, ``pc{w}`` binds tighter than ``;`` and associates to the
right, and ``{ S } || (e)`` conditions a braced block on a likelihood.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from ..constructs import Assign, CChoice, Observe, PChoice, Program, Seq, Skip, Uniform, While
from ..expr import Bin, Call, Const, Expr, Iverson, Member, Name, Unary, names
from ..state import Domain, StateError, make_space


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + msg)
        self.msg, self.line, self.col = msg, line, col


class UnboundedDomain(ParseError):
    pass


KEYWORDS = {"var", "param", "skip", "if", "else", "while", "rand", "pc", "true", "false",
            "in", "mod", "nat", "bool", "min", "max", "int", "real"}

TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|//[^\n]*|/\*.*?\*/)
  | (?P<rat>\d+/\d+(?![\d/]))
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*'?)
  | (?P<op>:=|\.\.|&&|\|\||!=|<=|>=|[-+*/^%=<>!:;,(){}\[\]])
""", re.VERBOSE | re.DOTALL)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = TOKEN_RE.match(text, pos)
        if not m:
            if text.startswith("/*", pos):
                raise ParseError("unterminated comment", line, pos - line_start + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            if kind == "id" and tok in KEYWORDS:
                kind = "kw"
            out.append(Token(kind, tok, line, pos - line_start + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


@dataclass
class VarDecl:
    name: str
    kind: str  # bool, enum, range or nat
    labels: tuple = ()
    lo: int | None = None
    hi: int | None = None


@dataclass
class SourceProgram:
    decls: list
    params: dict  # name -> default value or None
    body: Program
    text: str = field(default="", repr=False)

    def space(self, tmax: int | None = None):
        """Build the state space; ``tmax`` replaces the upper bound of every nat variable."""
        decls = []
        for d in self.decls:
            if d.kind == "bool":
                dom = Domain.bool()
            elif d.kind == "enum":
                dom = Domain.enum(d.labels)
            elif d.kind == "range":
                dom = Domain.int_range(d.lo, d.hi)
            else:
                hi = tmax if tmax is not None else d.hi
                if hi is None:
                    raise UnboundedDomain(
                        f"variable {d.name} has the unbounded domain nat; only finite domains "
                        f"are supported, declare it as nat[0..K] or pass --tmax K")
                dom = Domain.int_range(d.lo or 0, hi, clock=True)
            decls.append((d.name, dom))
        return make_space(decls)

    def param_values(self, overrides=None) -> dict:
        vals = dict(self.params)
        for k, v in (overrides or {}).items():
            if k not in vals:
                raise ParseError(f"unknown parameter {k!r}")
            vals[k] = v
        missing = [k for k, v in vals.items() if v is None]
        if missing:
            raise ParseError(f"parameter {missing[0]} has no value; pass --param {missing[0]}=a/b")
        return vals


class _Parser:
    def __init__(self, text: str, variables=(), labels=(), params=(), final_by_default=False):
        self.toks = tokenize(text)
        self.i = 0
        self.variables = set(variables)
        self.labels = set(labels)
        self.params = set(params)
        self.check_names = bool(variables)
        # inside likelihoods and queries bare names mean the final state
        self.final_default = final_by_default

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "kw")

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r} but found {self.describe(self.tok)}")
        return self.advance()

    def describe(self, t: Token) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    def fail(self, msg: str, t: Token | None = None):
        t = t or self.tok
        raise ParseError(msg, t.line, t.col)

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "id" or t.text.endswith("'"):
            self.fail(f"expected a name but found {self.describe(t)}")
        return self.advance()

    def integer(self) -> int:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        t = self.tok
        if t.kind != "num":
            self.fail(f"expected an integer but found {self.describe(t)}")
        self.advance()
        return -int(t.text) if neg else int(t.text)

    # declarations
    def declarations(self):
        decls, params = [], {}
        seen = set()
        while self.at("var") or self.at("param"):
            if self.at("var"):
                self.advance()
                name_tok = self.ident()
                name = name_tok.text
                if name in seen:
                    self.fail(f"{name} is declared twice", name_tok)
                seen.add(name)
                self.expect(":")
                decls.append(self.var_type(name))
            else:
                self.advance()
                name_tok = self.ident()
                if name_tok.text in seen:
                    self.fail(f"{name_tok.text} is declared twice", name_tok)
                seen.add(name_tok.text)
                value = None
                if self.at("="):
                    self.advance()
                    value = self.rational()
                params[name_tok.text] = value
            self.expect(";")
        for d in decls:
            if d.kind == "enum":
                clash = [lab for lab in d.labels if lab in seen]
                if clash:
                    raise ParseError(f"label {clash[0]} of {d.name} is also a declared name")
        return decls, params

    def rational(self) -> Fraction:
        t = self.tok
        if t.kind == "rat":
            self.advance()
            return Fraction(t.text)
        if t.kind == "num":
            self.advance()
            if self.at("/") and self.peek().kind == "num":
                self.advance()
                den = self.advance()
                if int(den.text) == 0:
                    self.fail("zero denominator", den)
                return Fraction(int(t.text), int(den.text))
            return Fraction(int(t.text))
        self.fail(f"expected a rational a/b but found {self.describe(t)}")

    def var_type(self, name: str) -> VarDecl:
        t = self.tok
        if self.at("bool"):
            self.advance()
            return VarDecl(name, "bool")
        if self.at("nat"):
            self.advance()
            if self.at("["):
                self.advance()
                lo = self.integer()
                self.expect("..")
                hi = self.integer()
                self.expect("]")
                if lo < 0 or lo > hi:
                    self.fail(f"empty or negative range {lo}..{hi}", t)
                return VarDecl(name, "nat", lo=lo, hi=hi)
            return VarDecl(name, "nat", lo=0, hi=None)
        if self.at("int") or self.at("real"):
            raise UnboundedDomain(f"variable {name}: type {t.text} is not supported; "
                                  f"only finite domains (bool, enumerations, lo..hi, nat[0..K]) are",
                                  t.line, t.col)
        if self.at("{"):
            self.advance()
            if self.tok.kind in ("num",) or self.at("-"):
                lo = self.integer()
                self.expect("..")
                hi = self.integer()
                self.expect("}")
                if lo > hi:
                    self.fail(f"empty range {lo}..{hi}", t)
                return VarDecl(name, "range", lo=lo, hi=hi)
            labels = [self.ident().text]
            while self.at(","):
                self.advance()
                labels.append(self.ident().text)
            self.expect("}")
            if len(set(labels)) != len(labels):
                self.fail("repeated label", t)
            return VarDecl(name, "enum", labels=tuple(labels))
        if t.kind == "num" or self.at("-"):
            lo = self.integer()
            self.expect("..")
            hi = self.integer()
            if lo > hi:
                self.fail(f"empty range {lo}..{hi}", t)
            return VarDecl(name, "range", lo=lo, hi=hi)
        self.fail(f"expected a type but found {self.describe(t)}")

    # statements
    def statements(self, closing: str) -> Program:
        parts = []
        while not (self.at(closing) if closing else self.tok.kind == "eof"):
            parts.append(self.pc_statement())
            if self.at(";"):
                self.advance()
                continue
            break
        if closing:
            if not self.at(closing):
                self.fail(f"expected ';' or {closing!r} but found {self.describe(self.tok)}")
        elif self.tok.kind != "eof":
            self.fail(f"expected ';' or end of input but found {self.describe(self.tok)}")
        if not parts:
            return Skip()
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = Seq(p, out)
        return out

    def pc_statement(self) -> Program:
        left = self.atom_statement()
        if self.at("pc"):
            self.advance()
            self.expect("{")
            w = self.expr(initial_only=True)
            self.expect("}")
            right = self.pc_statement()
            return PChoice(w, left, right)
        return left

    def block(self) -> Program:
        self.expect("{")
        body = self.statements("}")
        self.expect("}")
        return body

    def atom_statement(self) -> Program:
        t = self.tok
        if self.at("skip"):
            self.advance()
            return Skip()
        if self.at("if"):
            self.advance()
            g = self.expr(initial_only=True)
            then = self.block()
            orelse: Program = Skip()
            if self.at("else"):
                self.advance()
                orelse = self.atom_statement() if self.at("if") else self.block()
            return CChoice(g, then, orelse)
        if self.at("while"):
            self.advance()
            g = self.expr(initial_only=True)
            return While(g, self.block())
        if self.at("{"):
            body = self.block()
            while self.at("||"):
                self.advance()
                if not self.at("("):
                    self.fail("the likelihood after '||' must be parenthesized")
                saved = self.final_default
                self.final_default = True
                try:
                    lik = self.expr()
                finally:
                    self.final_default = saved
                body = Observe(body, lik)
            return body
        if t.kind == "id":
            name = self.ident()
            if self.check_names and name.text not in self.variables:
                self.fail(f"assignment to undeclared variable {name.text}", name)
            self.expect(":=")
            if self.at("rand"):
                self.advance()
                self.expect("(")
                vals = self.set_literal()
                self.expect(")")
                return Uniform(name.text, vals)
            return Assign(name.text, self.expr(initial_only=True))
        self.fail(f"expected a statement but found {self.describe(t)}")

    def set_literal(self) -> tuple:
        self.expect("{")
        items = []
        if not self.at("}"):
            items.extend(self.set_item())
            while self.at(","):
                self.advance()
                items.extend(self.set_item())
        self.expect("}")
        return tuple(items)

    def set_item(self) -> list:
        t = self.tok
        if t.kind == "num" and self.peek().text == "..":
            lo = self.integer()
            self.expect("..")
            hi = self.integer()
            return [Const(v) for v in range(lo, hi + 1)]
        return [self.additive()]

    # expressions
    def expr(self, initial_only: bool = False) -> Expr:
        saved = getattr(self, "_initial_only", False)
        self._initial_only = initial_only
        try:
            return self.disjunction()
        finally:
            self._initial_only = saved

    def disjunction(self) -> Expr:
        e = self.conjunction()
        while self.at("||"):
            self.advance()
            e = Bin("||", e, self.conjunction())
        return e

    def conjunction(self) -> Expr:
        e = self.negation()
        while self.at("&&"):
            self.advance()
            e = Bin("&&", e, self.negation())
        return e

    def negation(self) -> Expr:
        if self.at("!"):
            self.advance()
            return Unary("!", self.negation())
        return self.comparison()

    def comparison(self) -> Expr:
        e = self.additive()
        t = self.tok
        if t.kind == "op" and t.text in ("=", "!=", "<", "<=", ">", ">="):
            self.advance()
            e = Bin(t.text, e, self.additive())
        elif self.at("in"):
            self.advance()
            e = Member(e, self.set_literal())
        return e

    def additive(self) -> Expr:
        e = self.multiplicative()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            e = Bin(op, e, self.multiplicative())
        return e

    def multiplicative(self) -> Expr:
        e = self.unary()
        while self.at("*") or self.at("/") or self.at("mod") or self.at("%"):
            op = self.advance().text
            e = Bin("mod" if op == "%" else op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.at("-"):
            self.advance()
            return Unary("-", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.at("^"):
            self.advance()
            return Bin("^", base, self.unary())
        return base

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "rat":
            self.advance()
            num, den = t.text.split("/")
            if int(den) == 0:
                self.fail("zero denominator", t)
            return Const(Fraction(int(num), int(den)))
        if t.kind == "num":
            self.advance()
            return Const(int(t.text))
        if self.at("true") or self.at("false"):
            self.advance()
            return Const(t.text == "true")
        if self.at("("):
            self.advance()
            e = self.disjunction()
            self.expect(")")
            return e
        if self.at("["):
            self.advance()
            e = self.disjunction()
            self.expect("]")
            return Iverson(e)
        if self.at("min") or self.at("max"):
            self.advance()
            self.expect("(")
            args = [self.disjunction()]
            while self.at(","):
                self.advance()
                args.append(self.disjunction())
            self.expect(")")
            return Call(t.text, tuple(args))
        if t.kind == "id":
            self.advance()
            primed = t.text.endswith("'")
            base = t.text.rstrip("'")
            if self.check_names:
                if base in self.variables:
                    if primed and self._initial_only:
                        self.fail(f"{t.text} refers to the final state, which is not allowed here", t)
                    return Name(base, primed or self.final_default)
                if primed:
                    self.fail(f"{base} is not a declared variable", t)
                if base in self.labels or base in self.params:
                    return Name(base, False)
                self.fail(f"unknown name {base}", t)
            return Name(base, primed or self.final_default)
        self.fail(f"expected an expression but found {self.describe(t)}")


def parse_program(text: str) -> SourceProgram:
    p = _Parser(text)
    decls, params = p.declarations()
    if not decls:
        p.fail("a program needs at least one 'var' declaration")
    p.variables = {d.name for d in decls}
    p.labels = {lab for d in decls for lab in d.labels}
    p.params = set(params)
    p.check_names = True
    body = p.statements("")
    _check_program(body, decls)
    return SourceProgram(decls, params, body, text)


def _check_program(body: Program, decls) -> None:
    """Catch rand values that cannot be in the domain before anything runs."""
    kinds = {d.name: d for d in decls}

    def walk(p):
        if isinstance(p, Uniform):
            d = kinds[p.var]
            for v in p.values:
                if isinstance(v, Const):
                    ok = True
                    if d.kind == "bool":
                        ok = isinstance(v.value, bool)
                    elif d.kind in ("range", "nat"):
                        ok = isinstance(v.value, int) and not isinstance(v.value, bool)
                    if not ok:
                        raise ParseError(f"rand value {v.value} does not fit the type of {p.var}")
                elif isinstance(v, Name) and d.kind == "enum" and v.name not in d.labels and v.name in kinds:
                    raise ParseError(f"rand value {v.name} is not a label of {p.var}")
        for k in _children(p):
            walk(k)

    walk(body)


def _children(p):
    from ..constructs import sub_programs
    return sub_programs(p)


def parse_expr(text: str, source: SourceProgram | None = None, final: bool = False) -> Expr:
    """Parse an expression.

    With ``source`` names are checked against its declarations. With
    ``final`` bare variable names read the final state (as in queries).
    """
    if source is not None:
        p = _Parser(text, variables=[d.name for d in source.decls],
                    labels=[lab for d in source.decls for lab in d.labels],
                    params=source.params, final_by_default=final)
    else:
        p = _Parser(text, final_by_default=final)
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.describe(p.tok)} after the expression")
    return e


def parse_file(path) -> SourceProgram:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


def expr_names(e: Expr) -> set:
    return names(e)


__all__ = ["ParseError", "UnboundedDomain", "SourceProgram", "VarDecl", "parse_program",
           "parse_expr", "parse_file", "tokenize", "StateError"]
