import numpy as np
import pytest

from tensecert import load_fixture
from tensecert.gale import gale_matrix
from tensecert.model import Edge, MemberKind, TensegrityFramework, center_configuration


@pytest.fixture
def triangle():
    return load_fixture("triangle_in_triangle")


@pytest.fixture
def triangle_plus():
    return load_fixture("triangle_in_triangle_plus_node")


@pytest.fixture
def collinear():
    return load_fixture("collinear_tensegrity")


@pytest.fixture
def collinear_cable():
    return load_fixture("collinear_tensegrity_cable")


# the printed stress matrix of the triangle-in-triangle framework
TRIANGLE_OMEGA = np.array(
    [
        [4, 1, 1, -6, 0, 0],
        [1, 4, 1, 0, -6, 0],
        [1, 1, 4, 0, 0, -6],
        [-6, 0, 0, 10, -2, -2],
        [0, -6, 0, -2, 10, -2],
        [0, 0, -6, -2, -2, 10],
    ],
    dtype=float,
)

COLLINEAR_Z = np.array([1.0, -2.0, 1.0, 0.0])


def bars(P, pairs):
    return TensegrityFramework(np.asarray(P, dtype=float), tuple(Edge(i, j, MemberKind.BAR) for i, j in pairs))


def random_points(rng, n, r):
    return rng.standard_normal((n, r))


def planted_stress_framework(rng, n, r, psi_rank=None, bar_fraction=0.3):
    """Complete-graph framework carrying a planted proper PSD stress Z Psi Z^T.

    Each pair becomes a cable where the planted weight is positive, a strut where
    it is negative, and (with probability ``bar_fraction``) a bar instead.
    """
    P = random_points(rng, n, r)
    P -= P.mean(axis=0)
    probe = TensegrityFramework(P, tuple(Edge(i, j, MemberKind.BAR) for i in range(n) for j in range(i + 1, n)))
    Z = gale_matrix(probe).Z
    rbar = Z.shape[1]
    k = rbar if psi_rank is None else psi_rank
    G = rng.standard_normal((rbar, k))
    omega = Z @ (G @ G.T) @ Z.T
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            w = -omega[i, j]
            if rng.random() < bar_fraction:
                kind = MemberKind.BAR
            else:
                kind = MemberKind.CABLE if w > 0 else MemberKind.STRUT
            edges.append(Edge(i, j, kind))
    return TensegrityFramework(P, tuple(edges)), omega


def centered(fw):
    return center_configuration(fw)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
