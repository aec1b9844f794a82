#!/usr/bin/env python3
"""Run the acceptance suite, one pass/fail line per criterion.

Thin wrapper over pytest so the criteria live in one place
(tests/test_acceptance.py); exits nonzero on any failure.
"""

import sys
from pathlib import Path

import pytest

if __name__ == "__main__":
    target = Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py"
    sys.exit(pytest.main([str(target), "-v", "-s", "--no-header", *sys.argv[1:]]))
