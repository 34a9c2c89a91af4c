import numpy as np
import pytest

from constrained_dirac.exact import I, gr
from constrained_dirac.gamma_algebra import (METRIC, Representation, all_gamma_sets, build_gamma_set,
                                             check_adjoint_relations, check_clifford, check_pauli, slash,
                                             verify_all)


def test_printed_matrices():
    g0 = build_gamma_set("dirac").arrays[0]
    assert np.array_equal(g0, np.diag([1, 1, -1, -1]))
    w0 = build_gamma_set("weyl").arrays[0]
    assert np.array_equal(w0[:2, 2:], np.eye(2)) and np.array_equal(w0[2:, :2], np.eye(2))
    assert not w0[:2, :2].any()
    m1 = build_gamma_set("majorana").arrays[1]
    s3 = np.diag([1, -1])
    assert np.array_equal(m1, np.kron(np.eye(2), 1j * s3))


@pytest.mark.parametrize("rep", list(Representation))
def test_clifford_independent_oracle(rep):
    """Plain numpy products, no shared code with the checker."""
    g = build_gamma_set(rep).arrays
    for a in range(4):
        for b in range(4):
            anti = g[a] @ g[b] + g[b] @ g[a]
            want = -2 * (METRIC[a] if a == b else 0) * np.eye(4)
            assert np.array_equal(anti, want)
    for a in range(4):
        assert np.array_equal(g[0] @ g[a].conj().T @ g[0], g[a])


@pytest.mark.parametrize("gs", all_gamma_sets(), ids=lambda g: g.name)
def test_checkers_report_zero(gs):
    assert all(r.ok and r.residual_norm == 0 for r in verify_all(gs))
    assert len(check_clifford(gs)) == 16
    assert all(r.ok for r in check_clifford(gs, exact=False))


def test_specific_entries():
    res = {r.indices: r for r in check_clifford(build_gamma_set("dirac"))}
    assert res[(0, 1)].residual_norm == 0


def test_pauli():
    assert all(r.ok for r in check_pauli())


def test_corruption_is_reported():
    gs = build_gamma_set("weyl").with_entry(2, 0, 3, 5)
    bad = [r for r in check_clifford(gs) if not r.ok]
    assert bad and all(2 in r.indices for r in bad)
    assert gs.name == "weyl[corrupted]"
    assert not all(r.ok for r in check_adjoint_relations(gs))


def test_slash():
    gs = build_gamma_set("dirac")
    v = [gr(1), gr(0), I, gr(2)]
    m = slash(gs, v)
    want = sum(complex(x) * g for x, g in zip(v, gs.arrays))
    assert np.array_equal(np.array([[complex(x) for x in r] for r in m]), want)
    assert np.allclose(slash(gs, np.array([1, 0, 1j, 2])), want)
