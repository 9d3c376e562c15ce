import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lemmaforge import NamedSet, ProofGraph  # noqa: E402

# Seven-line trace excerpt, comments included as they appear in a trace file
G7_TEXT = """\
F13        #1, Definition (size 13): T <=> (\\A0. A0) = (\\A0. A0)
R9         #2, Reflexivity (size 9): (\\A0. A0) = (\\A0. A0)
R5         #3, Reflexivity (size 5): T <=> T
R5         #4, Reflexivity (size 5): (<=>) = (<=>)
C17 4 1    #5, Application(4,1):     (<=>) T = (<=>) ((\\A0. A0) = (\\A0. A0))
C21 5 3    #6, Application(5,3):     (T <=> T) <=> (\\A0. A0) = (\\A0. A0) <=> T
E13 6 3    #7, EQ_MP(6,3) (size 13): (\\A0. A0) = (\\A0. A0) <=> T
"""

G7_NODES = [
    ("F", 13, []),
    ("R", 9, []),
    ("R", 5, []),
    ("R", 5, []),
    ("C", 17, [4, 1]),
    ("C", 21, [5, 3]),
    ("E", 13, [6, 3]),
]
G2_NODES = [("R", 1, []), ("C", 1, [1])]
CUT4_NODES = [("R", 1, []), ("R", 1, []), ("C", 4, [1, 2]), ("C", 1, [3])]


@pytest.fixture
def g7() -> ProofGraph:
    return ProofGraph.from_nodes(G7_NODES)


@pytest.fixture
def g2() -> ProofGraph:
    return ProofGraph.from_nodes(G2_NODES)


@pytest.fixture
def cut4() -> ProofGraph:
    return ProofGraph.from_nodes(CUT4_NODES)


def named(*serials) -> NamedSet:
    return NamedSet.of(serials)
