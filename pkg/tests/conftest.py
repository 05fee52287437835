import numpy as np
import pytest

_ACCEPTANCE = {}


def record_acceptance(number, title, passed, detail=""):
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {title}"
    if detail and not passed:
        line += f"  [failed: {detail}]"
    _ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])

from firm import ContingencyTable, FirmSpec

# lead day 1 NSW rainfall contingency tables (rows forecast, columns observed)
OCF_COUNTS = [[77984, 259, 37], [199, 136, 50], [6, 15, 27]]
OFFICIAL_COUNTS = [[77658, 165, 13], [451, 171, 36], [80, 74, 65]]


@pytest.fixture
def rainfall_spec():
    return FirmSpec((50, 100), (1, 4), 0.75, 0)


@pytest.fixture
def ocf_table():
    return ContingencyTable(np.array(OCF_COUNTS))


@pytest.fixture
def official_table():
    return ContingencyTable(np.array(OFFICIAL_COUNTS))


def expand_table(counts):
    """Case multiset (forecast, observed) that tabulates back to ``counts``."""
    f, o = [], []
    for i, row in enumerate(counts):
        for j, c in enumerate(row):
            f += [i] * c
            o += [j] * c
    return np.array(f), np.array(o)
