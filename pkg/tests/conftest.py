from fractions import Fraction
from pathlib import Path

import pytest

from proburel.config import Config
from proburel.constructs import elaborate, loops
from proburel.fixpoint import LoopSpec
from proburel.lang.parser import parse_expr, parse_file

PROGRAMS = Path(__file__).resolve().parent.parent / "src" / "proburel" / "programs"

_criteria: dict = {}


class Loaded:
    def __init__(self, name, tmax=None, params=None, config=None):
        self.src = parse_file(PROGRAMS / name)
        self.space = self.src.space(tmax)
        self.params = self.src.param_values(params or {})
        self.config = config or Config()
        self._kernel = None

    @property
    def kernel(self):
        if self._kernel is None:
            self._kernel = elaborate(self.src.body, self.space, self.config, self.params)
        return self._kernel

    def state(self, **kw):
        return self.space.state(kw)

    def expr(self, text, final=False):
        return parse_expr(text, self.src, final=final)

    def loop_spec(self):
        (loop,) = loops(self.src.body)
        body = elaborate(loop.body, self.space, self.config, self.params)
        return LoopSpec(loop.guard, body, self.space, self.params)

    def candidate(self, name):
        from proburel import kernel as K
        e = parse_expr((PROGRAMS / name).read_text(), self.src)
        return K.tabulate(self.space, e, self.params, kind=K.PRFUN)


@pytest.fixture
def load():
    return Loaded


def F(x):
    return Fraction(x)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    entry = _criteria.setdefault(n, {"title": title, "ok": True, "failed": []})
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        if rep.failed:
            entry["ok"] = False
            entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        status = "PASS" if e["ok"] else "FAIL"
        line = f"criterion {n:>2}: {status}  {e['title']}"
        if e["failed"]:
            line += f"  [failed: {', '.join(e['failed'])}]"
        terminalreporter.write_line(line)
