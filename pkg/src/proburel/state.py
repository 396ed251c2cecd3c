"""Finite state spaces.

A state is a plain tuple of values in declaration order, so states hash cheaply
and sort lexicographically by declaration order for free (values inside one
domain are compared by their position in the domain, see ``StateSpace.sort_key``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Sequence

State = tuple


class StateError(Exception):
    pass


class OutOfDomain(StateError):
    def __init__(self, var: str, val: Any, clock: bool = False):
        super().__init__(f"value {val!r} is outside the domain of {var}")
        self.var = var
        self.val = val
        self.clock = clock


@dataclass(frozen=True)
class Domain:
    kind: str  # "bool", "int" or "enum"
    values: tuple
    clock: bool = False  # a bounded stand-in for an unbounded counter

    def __post_init__(self):
        if not self.values:
            raise StateError("empty domain")
        if len(set(self.values)) != len(self.values):
            raise StateError("domain values must be distinct")

    @staticmethod
    def bool() -> "Domain":
        return Domain("bool", (False, True))

    @staticmethod
    def int_range(lo: int, hi: int, clock: bool = False) -> "Domain":
        if lo > hi:
            raise StateError(f"empty range {lo}..{hi}")
        return Domain("int", tuple(range(lo, hi + 1)), clock)

    @staticmethod
    def enum(labels: Iterable[str]) -> "Domain":
        return Domain("enum", tuple(labels))

    @property
    def lo(self):
        return self.values[0]

    @property
    def hi(self):
        return self.values[-1]

    def __contains__(self, val) -> bool:
        if self.kind == "bool":
            return isinstance(val, bool)
        if isinstance(val, bool):
            return False
        if self.kind == "int":
            return isinstance(val, int) and self.lo <= val <= self.hi
        return val in self.values

    def index(self, val) -> int:
        if self.kind == "int":
            return val - self.lo
        return self.values.index(val)

    def describe(self) -> str:
        if self.kind == "bool":
            return "bool"
        if self.kind == "int":
            if self.clock:
                return f"nat[{self.lo}..{self.hi}]"
            return f"{self.lo}..{self.hi}"
        return "{" + ", ".join(self.values) + "}"


@dataclass(frozen=True)
class StateSpace:
    names: tuple
    domains: tuple
    _index: Mapping[str, int] = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if not self.names:
            raise StateError("a state space needs at least one variable")
        if len(set(self.names)) != len(self.names):
            dup = next(n for n in self.names if self.names.count(n) > 1)
            raise StateError(f"duplicate variable {dup!r}")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    def __len__(self) -> int:
        n = 1
        for d in self.domains:
            n *= len(d.values)
        return n

    def __contains__(self, name) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise StateError(f"undeclared variable {name!r}") from None

    def domain(self, name: str) -> Domain:
        return self.domains[self.index(name)]

    def states(self) -> Iterator[State]:
        return itertools.product(*(d.values for d in self.domains))

    def state(self, valuation: Mapping[str, Any]) -> State:
        missing = [n for n in self.names if n not in valuation]
        if missing:
            raise StateError(f"no value for {', '.join(missing)}")
        extra = [n for n in valuation if n not in self._index]
        if extra:
            raise StateError(f"undeclared variable {extra[0]!r}")
        s = tuple(valuation[n] for n in self.names)
        for n, d, v in zip(self.names, self.domains, s):
            if v not in d:
                raise OutOfDomain(n, v, d.clock)
        return s

    def valuation(self, s: State) -> dict:
        return dict(zip(self.names, s))

    def sort_key(self, s: State) -> tuple:
        return tuple(d.index(v) for d, v in zip(self.domains, s))

    def clock_vars(self) -> list:
        return [n for n, d in zip(self.names, self.domains) if d.clock]

    def format_state(self, s: State) -> str:
        return ", ".join(f"{n}={format_value(v)}" for n, v in zip(self.names, s))

    def to_json(self) -> list:
        out = []
        for n, d in zip(self.names, self.domains):
            entry = {"name": n, "kind": d.kind, "values": list(d.values)}
            if d.clock:
                entry["clock"] = True
            out.append(entry)
        return out

    def with_domain(self, name: str, domain: Domain) -> "StateSpace":
        i = self.index(name)
        return StateSpace(self.names, self.domains[:i] + (domain,) + self.domains[i + 1:])


def make_space(decls: Sequence[tuple]) -> StateSpace:
    names = tuple(n for n, _ in decls)
    domains = tuple(d for _, d in decls)
    return StateSpace(names, domains)


def enumerate_states(space: StateSpace) -> list:
    return list(space.states())


def update(space: StateSpace, s: State, var: str, val) -> State:
    i = space.index(var)
    d = space.domains[i]
    if val not in d:
        raise OutOfDomain(var, val, d.clock)
    if s[i] == val:
        return s
    return s[:i] + (val,) + s[i + 1:]


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)
