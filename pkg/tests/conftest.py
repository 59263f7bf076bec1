import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tnfg.network import fixture_d1  # noqa: E402

# committed flow used in the worked examples: a valid flow of D1 with cost 0.32
X_STAR = np.array([10.0, 4.0, 6.0, 4.0, 8.0, 14.0])
# the min-cost max-flow of D1 (unique optimum)
X_MF = np.array([9.0, 5.0, 6.0, 3.0, 8.0, 14.0])


@pytest.fixture
def d1():
    return fixture_d1()


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: (int(k.rstrip("s")), k)):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
