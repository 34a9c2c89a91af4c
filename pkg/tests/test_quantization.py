from fractions import Fraction

import numpy as np
import pytest

from constrained_dirac.dirac_bergmann import FormalismTrack
from constrained_dirac.exact import I
from constrained_dirac.gamma_algebra import build_gamma_set
from constrained_dirac.phase_space import Constants, FieldAtom, PhaseFunctional
from constrained_dirac.quantization import (FockOperator, FockSpace, RecipeError, anticommutator,
                                           fundamental_anticommutators, leibniz_quantization_check,
                                           quantize_and_verify, recipe_factor, spinorial_identities)

GS = build_gamma_set("majorana")
K = Constants(2, 3, 1)


def test_jordan_wigner_dense_oracle():
    """CAR checked on dense matrices built independently with numpy kron."""
    space = FockSpace(1)
    n = space.n_modes
    z = np.diag([1, -1])
    lower = np.array([[0, 1], [0, 0]])
    for p in range(n):
        mats = [z] * p + [lower] + [np.eye(2)] * (n - p - 1)
        dense = mats[0]
        for m in mats[1:]:
            dense = np.kron(dense, m)
        a = space.annihilator(p).to_dense()
        assert np.allclose(a @ a.conj().T + a.conj().T @ a, np.eye(2 ** n))
        assert np.allclose(np.abs(a), np.abs(dense))


def test_fock_operator_exactness():
    space = FockSpace(1)
    a = space.annihilator(0)
    x = anticommutator(a, a.dagger())
    assert x == space.identity()
    assert (x.scale(Fraction(1, 3)) + x.scale(Fraction(2, 3))) == space.identity()
    assert (a @ a).is_zero()


def test_mode_limit():
    with pytest.raises(ValueError):
        FockSpace(4)


def test_fundamental_and_spinorial():
    assert all(fundamental_anticommutators(2, GS, Fraction(1, 4)).values())
    assert all(spinorial_identities(1, GS, K, Fraction(1, 4)).values())


def test_recipe_factors():
    hc = K.hbar_c
    assert recipe_factor(FormalismTrack.SPINORIAL, K) == I * hc
    assert recipe_factor(FormalismTrack.GRASSMANN_L, K) == I * hc
    assert recipe_factor(FormalismTrack.GRASSMANN_R, K) == -I * hc


@pytest.mark.parametrize("track", list(FormalismTrack), ids=lambda t: t.value)
def test_recipe_per_pair(track):
    v = quantize_and_verify(track, "psi", "pi", 1, GS, K)
    assert v.ok and v.operator_residual_norm == 0
    assert quantize_and_verify(track, "psi", "psi", 1, GS, K).ok


def test_row_on_left_rejected():
    with pytest.raises(RecipeError):
        quantize_and_verify("spinorial", "psibar", "psi", 1, GS, K)


def _at(kind, a):
    return PhaseFunctional.of_atom(FieldAtom(kind, a, 0))


def test_leibniz_quantization():
    f = (_at("psibar", 0) * _at("psi", 1)).scale(2) + _at("pi", 1) * _at("pibar", 3)
    g = _at("psibar", 2) * _at("pibar", 0) + (_at("pi", 3) * _at("psi", 2)).scale(I)
    rep = leibniz_quantization_check(f, g, 1, GS, K)
    assert rep.classical_ok and rep.quantum_ok and rep.residual_norm == 0
    with pytest.raises(ValueError):
        leibniz_quantization_check(_at("psi", 0), g, 1, GS, K)
