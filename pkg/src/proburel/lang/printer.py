"""Pretty-printer whose output parses back to the same syntax tree."""

from __future__ import annotations

from ..constructs import Assign, CChoice, Observe, PChoice, Program, Seq, Skip, Uniform, While
from ..expr import Name, to_text, transform
from ..numerics import format_rational

IND = "    "


def _unprime(e):
    return transform(e, lambda x: Name(x.name, False) if isinstance(x, Name) else x)


def _set_text(values) -> str:
    return "{" + ", ".join(to_text(v) for v in values) + "}"


def program_text(p: Program, depth: int = 0) -> str:
    pad = IND * depth
    return "\n".join(pad + line for line in _lines(p, depth))


def _block(p: Program, depth: int) -> list:
    inner = _lines(p, depth + 1)
    return ["{"] + [IND + x for x in inner] + ["}"]


def _atomic(p: Program) -> bool:
    return isinstance(p, (Skip, Assign, Uniform, CChoice, While, Observe))


def _lines(p: Program, depth: int) -> list:
    if isinstance(p, Skip):
        return ["skip"]
    if isinstance(p, Assign):
        return [f"{p.var} := {to_text(p.expr)}"]
    if isinstance(p, Uniform):
        return [f"{p.var} := rand({_set_text(p.values)})"]
    if isinstance(p, Seq):
        first = _block(p.first, depth) if isinstance(p.first, Seq) else _lines(p.first, depth)
        first[-1] += ";"
        return first + _lines(p.second, depth)
    if isinstance(p, PChoice):
        left = _lines(p.left, depth) if _atomic(p.left) else _block(p.left, depth)
        right = _lines(p.right, depth) if _atomic(p.right) or isinstance(p.right, PChoice) else _block(p.right, depth)
        left[-1] += f" pc{{{to_text(p.weight)}}} " + right[0]
        return left + right[1:]
    if isinstance(p, CChoice):
        out = [f"if {to_text(p.guard)} {{"] + [IND + x for x in _lines(p.then, depth + 1)]
        out.append("} else {")
        out += [IND + x for x in _lines(p.orelse, depth + 1)]
        out.append("}")
        return out
    if isinstance(p, While):
        return [f"while {to_text(p.guard)} {{"] + [IND + x for x in _lines(p.body, depth + 1)] + ["}"]
    if isinstance(p, Observe):
        # the parser reads likelihood names as final-state references already
        body = _block(p.body, depth)
        body[-1] += f" || ({to_text(_unprime(p.likelihood))})"
        return body
    raise TypeError(f"not a program: {p!r}")


def source_text(src) -> str:
    """Declarations and body of a parsed program."""
    lines = []
    for d in src.decls:
        if d.kind == "bool":
            ty = "bool"
        elif d.kind == "enum":
            ty = "{" + ", ".join(d.labels) + "}"
        elif d.kind == "range":
            ty = f"{d.lo}..{d.hi}"
        else:
            ty = "nat" if d.hi is None else f"nat[{d.lo}..{d.hi}]"
        lines.append(f"var {d.name} : {ty};")
    for name, val in src.params.items():
        lines.append(f"param {name};" if val is None else f"param {name} = {format_rational(val)};")
    lines.append(program_text(src.body))
    return "\n".join(lines) + "\n"


__all__ = ["program_text", "source_text"]
