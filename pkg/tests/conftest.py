import numpy as np
import pytest

from semidata.core import RngSpec, generate_frame
from semidata.detector import bpsk, enumerate_symbol_vectors, qam4


@pytest.fixture(scope="session")
def book4():
    pts, labels = qam4()
    return enumerate_symbol_vectors(pts, 2, labels)


@pytest.fixture(scope="session")
def book_bpsk1():
    pts, labels = bpsk()
    return enumerate_symbol_vectors(pts, 1, labels)


@pytest.fixture
def gen():
    return np.random.default_rng(20240601)


@pytest.fixture
def frame0db(book4):
    return generate_frame(2, 4, 4, 30, 0.5, book4.vectors, RngSpec(7, 3))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
