"""Collects acceptance-criterion outcomes and prints one line per criterion."""
from collections import OrderedDict

ACCEPTANCE: "OrderedDict[int, list]" = OrderedDict()


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        ok = all(p[0] for p in parts)
        tr.write_line(f"criterion {c:>2}: {'PASS' if ok else 'FAIL'}")
        for p_ok, detail in parts:
            tr.write_line(f"    [{'ok' if p_ok else '--'}] {detail}")
