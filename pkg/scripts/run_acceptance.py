"""Run the acceptance suite and print one PASS/FAIL line per criterion.

    python scripts/run_acceptance.py [extra pytest args]
"""

import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py"

if __name__ == "__main__":
    sys.exit(pytest.main([str(TESTS), "-q", *sys.argv[1:]]))
