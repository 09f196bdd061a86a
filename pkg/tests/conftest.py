"""
this file contains fixtures that are intended to be used across multiple test
files
"""

import random
from typing import Iterator

import pytest

from ztac_py.runtime_utils.op_tally import OperationTally, recording


@pytest.fixture(name="rng")
def fixture_rng() -> random.Random:
    """
    every key in the library is drawn from an explicit random source. tests get
    a fixed one so failures reproduce
    """
    return random.Random("ztac-test")


@pytest.fixture(name="tally")
def fixture_tally() -> Iterator[OperationTally]:
    """record the operations performed by a test into a fresh tally"""
    with recording() as tally:
        yield tally
