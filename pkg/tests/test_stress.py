import numpy as np
import pytest

from tensecert.gale import gale_matrix
from tensecert.linalg import psd_check
from tensecert.model import MemberKind, center_configuration
from tensecert.stress import (
    EdgePartition,
    StressAssignment,
    StressError,
    assemble_stress_matrix,
    equilibrium_residual,
    find_proper_psd_stress,
    is_proper,
    parse_stress_file,
    psi_factor,
    stress_space_basis,
    stress_to_dict,
)

from conftest import COLLINEAR_Z, TRIANGLE_OMEGA, bars

SPOKES = [(1, 6), (2, 6), (5, 6)]  # 0-based edges at the extra node


def triangle_weights(fw):
    w = {(0, 1): -1, (0, 2): -1, (1, 2): -1, (0, 3): 6, (1, 4): 6, (2, 5): 6, (3, 4): 2, (3, 5): 2, (4, 5): 2}
    return StressAssignment([w[e.pair] for e in fw.edges])


def collinear_weights(fw):
    w = {(0, 1): 1.0, (1, 2): 1.0, (0, 2): -0.5}
    return StressAssignment([w.get(e.pair, 0.0) for e in fw.edges])


def solve_collinear_by_hand():
    # node 2 balances the two cables: w12 (p2-p1) + w23 (p2-p3) = 0 with p1,p3 symmetric -> w12 = w23;
    # node 1 along x: w12 (p1-p2) + w13 (p1-p3) = 0 -> w12 * (-2.5) + w13 * (-5) = 0 -> w13 = -w12/2
    return 1.0, 1.0, -0.5


def test_triangle_stress_space_dim(triangle):
    assert len(stress_space_basis(center_configuration(triangle))) == 1


def test_extra_node_stress_vanishes_on_spokes(triangle_plus):
    fw = center_configuration(triangle_plus)
    basis = stress_space_basis(fw)
    assert len(basis) == 1
    for b in basis:
        for i, j in SPOKES:
            assert abs(b.weights[fw.edge_index(i, j)]) <= 1e-9


def test_four_cycle_has_no_stress():
    fw = bars([[0, 0], [1.1, 0.1], [1.3, 0.9], [-0.2, 1.2]], [(0, 1), (1, 2), (2, 3), (0, 3)])
    from tensecert.stress import equilibrium_matrix

    M = equilibrium_matrix(fw)
    assert M.shape == (8, 4)
    assert np.linalg.matrix_rank(M) == 4
    assert stress_space_basis(fw) == []


def test_basis_orthonormal(triangle_plus):
    B = np.column_stack([b.weights for b in stress_space_basis(triangle_plus)])
    np.testing.assert_allclose(B.T @ B, np.eye(B.shape[1]), atol=1e-12)


def test_triangle_reassembles_printed_matrix(triangle):
    mat = assemble_stress_matrix(triangle, triangle_weights(triangle))
    np.testing.assert_array_equal(mat.omega, TRIANGLE_OMEGA)


def test_collinear_matrix_is_half_zzT(collinear):
    w12, w23, w13 = solve_collinear_by_hand()
    assert (w12, w23, w13) == (1.0, 1.0, -0.5)
    mat = assemble_stress_matrix(collinear, collinear_weights(collinear))
    np.testing.assert_allclose(mat.omega, 0.5 * np.outer(COLLINEAR_Z, COLLINEAR_Z), atol=1e-15)


def test_zero_stress(collinear):
    mat = assemble_stress_matrix(collinear, StressAssignment(np.zeros(6)))
    assert not mat.omega.any()


def test_non_equilibrium_rejected(triangle):
    bad = StressAssignment(np.ones(9))
    assert equilibrium_residual(triangle, bad) > 1
    with pytest.raises(StressError):
        assemble_stress_matrix(triangle, bad)


def test_stress_matrix_invariants(triangle_plus):
    fw = center_configuration(triangle_plus)
    mat = assemble_stress_matrix(fw, stress_space_basis(fw)[0])
    O = mat.omega
    np.testing.assert_allclose(O, O.T)
    assert np.abs(O.sum(axis=1)).max() < 1e-12
    assert np.abs(O @ fw.P).max() < 1e-12
    for i, j in fw.missing_edges():
        assert O[i, j] == 0.0


def test_properness(collinear, triangle):
    w = collinear_weights(collinear)
    assert is_proper(collinear, w) == (True, [])
    ok, bad = is_proper(collinear, -w)
    assert not ok
    assert sorted(collinear.edges[k].pair for k in bad) == [(0, 1), (0, 2), (1, 2)]
    assert is_proper(triangle, StressAssignment(np.random.default_rng(0).standard_normal(9)))[0]


def test_search_triangle(triangle):
    res = find_proper_psd_stress(center_configuration(triangle))
    assert res is not None and res.rank == 3


def test_search_collinear(collinear):
    res = find_proper_psd_stress(center_configuration(collinear))
    assert res is not None and res.rank == 1
    assert is_proper(collinear, res.stress)[0]


def test_search_extra_node(triangle_plus):
    fw = center_configuration(triangle_plus)
    res = find_proper_psd_stress(fw)
    assert res.rank == 3 < fw.rbar == 4


def test_search_result_is_proper_psd(collinear_cable):
    fw = center_configuration(collinear_cable)
    res = find_proper_psd_stress(fw)
    assert is_proper(fw, res.stress)[0]
    assert psd_check(res.matrix.omega).is_psd


def test_search_multi_dimensional_space():
    # a doubly braced square: two independent stresses, searched by cutting planes
    P = [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.45]]
    pairs = [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2), (1, 3), (0, 4), (1, 4), (2, 4), (3, 4)]
    fw = center_configuration(bars(P, pairs))
    assert len(stress_space_basis(fw)) >= 2
    res = find_proper_psd_stress(fw)
    assert res is not None
    assert psd_check(res.matrix.omega).is_psd
    assert res.rank == fw.rbar


def test_psi_factor_collinear(collinear):
    omega = 0.5 * np.outer(COLLINEAR_Z, COLLINEAR_Z)
    dec = psi_factor(omega, COLLINEAR_Z[:, None])
    np.testing.assert_allclose(dec.psi, [[0.5]], atol=1e-15)
    dec0 = psi_factor(np.zeros((4, 4)), COLLINEAR_Z[:, None])
    assert not dec0.psi.any() and dec0.rank == 0


def test_psi_factor_triangle_rank(triangle):
    Z = gale_matrix(triangle).Z
    dec = psi_factor(TRIANGLE_OMEGA, Z)
    assert dec.rank == 3
    np.testing.assert_allclose(Z @ dec.psi @ Z.T, TRIANGLE_OMEGA, atol=1e-10)


def test_psi_factor_rejects_non_stress(triangle):
    with pytest.raises(StressError):
        psi_factor(np.eye(6), gale_matrix(triangle).Z)


def test_partition(collinear):
    part = EdgePartition.from_stress(collinear, collinear_weights(collinear))
    lab = lambda ks: sorted(collinear.edges[k].pair for k in ks)
    assert lab(part.cables_stressed) == [(0, 1), (1, 2)]
    assert lab(part.struts_stressed) == [(0, 2)]
    assert lab(part.struts_unstressed) == [(0, 3), (2, 3)]
    assert lab(part.stressed_edges(collinear)) == [(0, 1), (0, 2), (1, 2), (1, 3)]


def test_stress_file_round_trip(triangle):
    w = triangle_weights(triangle)
    import json

    again = parse_stress_file(json.dumps(stress_to_dict(triangle, w)), triangle)
    np.testing.assert_array_equal(again.weights, w.weights)
    with pytest.raises(Exception):
        parse_stress_file('{"stresses": [{"i": 1, "j": 5, "w": 1}]}', triangle)


from hypothesis import given, settings  # noqa: E402
from hypothesis import strategies as st  # noqa: E402

from tensecert.model import Edge, TensegrityFramework  # noqa: E402


@given(st.integers(0, 2**32 - 1), st.integers(4, 8), st.integers(1, 3), st.floats(0.3, 1.0))
@settings(max_examples=60, deadline=None)
def test_stress_space_invariants(seed, n, r, density):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((n, r))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    kinds = list(MemberKind)
    fw = TensegrityFramework(P, tuple(Edge(i, j, kinds[rng.integers(3)]) for i, j in pairs))
    for b in stress_space_basis(fw):
        assert equilibrium_residual(fw, b) <= 1e-9
        O = assemble_stress_matrix(fw, b).omega
        assert np.abs(O.sum(axis=1)).max() <= 1e-9
        assert np.abs(O @ fw.P).max() <= 1e-9
        for i, j in fw.missing_edges():
            assert O[i, j] == 0.0
        c = float(rng.standard_normal())
        assert equilibrium_residual(fw, b.scaled(c)) <= 1e-9 * max(1, abs(c))
