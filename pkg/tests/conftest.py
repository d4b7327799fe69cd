import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bgpdeploy.synthetic import hierarchical  # noqa: E402
from bgpdeploy.topology import parse_caida  # noqa: E402

# A small but complete topology: a 3-member clique, two transit ASes, edges.
#
#         1 ---- 2 ---- 3        (clique, pairwise peers)
#         |      |      |
#        10     11 ---- 12       (11-12 peer)
#       /  \   /  \      \
#     100  101    102    103
#                  |
#                 (102 also peers with 103)
TOY = """\
# input clique: 1 2 3
1|2|0
1|3|0
2|3|0
1|10|-1
2|11|-1
3|12|-1
11|12|0
10|100|-1
10|101|-1
11|101|-1
11|102|-1
12|103|-1
102|103|0
"""


@pytest.fixture
def toy_graph():
    return parse_caida(TOY)


@pytest.fixture(scope="session")
def mid_graph():
    return hierarchical(300, seed=3)


def pytest_terminal_summary(terminalreporter):
    from verdicts import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
