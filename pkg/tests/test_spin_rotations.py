import cmath
import math

import numpy as np
from hypothesis import given, strategies as st

from constrained_dirac.gamma_algebra import all_gamma_sets
from constrained_dirac.spin_rotations import (minkowski_square, report, rotate_vector, rotate_z,
                                              rotated_gw_tensor, spinor_rotation, su2_z, tensor_checks,
                                              vector_to_matrix)

angles = st.floats(-10, 10, allow_nan=False)
comps = st.floats(-5, 5, allow_nan=False)


def test_vector_to_matrix_examples():
    assert np.array_equal(vector_to_matrix([0.5, 0, 0, 0.5]).matrix, [[1, 0], [0, 0]])
    assert np.array_equal(vector_to_matrix([1, 0, 0, 0]).matrix, np.eye(2))
    assert abs(vector_to_matrix([1, 1, 0, 0]).det) == 0


def test_off_diagonal_phase():
    v = vector_to_matrix([0.3, 1.2, -0.4, 0.1])
    phi = 0.7
    assert cmath.isclose(rotate_z(v, phi).matrix[0, 1], (1.2 + 0.4j) * cmath.exp(1j * phi))


def test_quarter_turn_route():
    v2 = rotate_z(vector_to_matrix([0, 1, 0, 0]), math.pi / 2).components()
    assert np.allclose(v2, [0, 0, -1, 0], atol=1e-12)
    assert np.allclose(rotate_vector([0, 1, 0, 0], math.pi / 2), [0, 0, -1, 0], atol=1e-12)


@given(st.tuples(comps, comps, comps, comps), angles)
def test_det_equals_minus_minkowski_square_and_is_invariant(vec, phi):
    v = vector_to_matrix(vec)
    assert v.is_hermitian()
    assert abs(v.det + minkowski_square(vec)) <= 1e-9 * (1 + sum(x * x for x in vec))
    assert abs(rotate_z(v, phi).det - v.det) <= 1e-9 * (1 + abs(v.det))


@given(angles, angles)
def test_composition(a, b):
    v = vector_to_matrix([1.0, 0.2, -0.3, 0.4])
    assert np.allclose(rotate_z(rotate_z(v, a), b).matrix, rotate_z(v, a + b).matrix, atol=1e-12)


def test_double_cover():
    assert np.allclose(su2_z(2 * math.pi), -np.eye(2))
    v = vector_to_matrix([1, 2, 3, 4])
    assert np.allclose(rotate_z(v, 2 * math.pi).matrix, v.matrix)
    for gs in all_gamma_sets():
        assert np.allclose(spinor_rotation(gs, 2 * math.pi), -np.eye(4))


def test_gw_tensor_stays_tt():
    for phi in (0.1, 1.0, 2.5):
        assert all(tensor_checks(rotated_gw_tensor(phi)).values())
    assert not tensor_checks(np.eye(3))["traceless"]


def test_report_clean():
    rep = report()
    assert rep["failures"] == [] and rep["verdicts"]
