import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from constrained_dirac.brackets import (BracketKind, ConstraintBracket, MixedParityError, bracket,
                                        delta_value, dirac_fo, logged_bracket, numeric_bracket,
                                        poisson_fo, poisson_grassmann)
from constrained_dirac.dirac_bergmann import DiracBergmann, random_functional
from constrained_dirac.exact import I, gr
from constrained_dirac.gamma_algebra import build_gamma_set
from constrained_dirac.phase_space import Constants, Context, FieldAtom, LatticeSpec, PhaseFunctional

LAT = LatticeSpec(1, 3, Fraction(1, 2))
CTX = Context(LAT, Constants(2, 3, 1), build_gamma_set("dirac"))
ATOMS = [FieldAtom(k, a, i) for k in ("psi", "psibar", "pi", "pibar") for a in range(2) for i in range(2)]
seeds = st.integers(0, 10 ** 6)


def commuting(seed):
    return random_functional(random.Random(seed), ATOMS, False, 4)


def grassmann(seed, parity):
    return random_functional(random.Random(seed), ATOMS, True, 4, parity)


def test_numeric_oracle_two_sites():
    """Finite-difference bracket on a 2-site, 1-component toy phase space."""
    lat = LatticeSpec(1, 2, Fraction(1, 2))
    ctx = Context(lat, Constants(), build_gamma_set("dirac"))
    atoms = [FieldAtom(k, 0, i) for k in ("psi", "psibar", "pi", "pibar") for i in range(2)]
    rng = random.Random(1)
    point = {a: complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for a in atoms}
    table = [(1, "f", "psi", "g", "pi"), (-1, "g", "psi", "f", "pi"),
             (1, "g", "pibar", "f", "psibar"), (-1, "f", "pibar", "g", "psibar")]
    for trial in range(20):
        f = random_functional(rng, atoms, False, 5)
        g = random_functional(rng, atoms, False, 5)
        want = numeric_bracket(table, f.evaluate, g.evaluate, point, float(lat.cell_volume))
        got = poisson_fo(f, g, ctx).evaluate(point)
        assert abs(got - want) < 1e-6


def test_fundamental_values():
    psi, pi = PhaseFunctional.of_atom(FieldAtom("psi", 0, 0)), PhaseFunctional.of_atom(FieldAtom("pi", 0, 0))
    assert delta_value(poisson_fo(psi, pi, CTX), CTX) == 1
    assert delta_value(dirac_fo(psi, pi, CTX), CTX) == Fraction(1, 2)
    g = lambda k: PhaseFunctional.of_atom(FieldAtom(k, 0, 0), 1, True)  # noqa: E731
    assert delta_value(poisson_grassmann(g("psi"), g("pi"), "L", CTX), CTX) == -1
    assert delta_value(poisson_grassmann(g("pi"), g("psi"), "R", CTX), CTX) == -1


@given(seeds, seeds)
def test_poisson_antisymmetric(s1, s2):
    f, g = commuting(s1), commuting(s2)
    assert poisson_fo(f, g, CTX) == -poisson_fo(g, f, CTX)
    assert dirac_fo(f, g, CTX) == -dirac_fo(g, f, CTX)


@given(seeds, seeds, st.integers(0, 1), st.integers(0, 1), st.sampled_from("LR"))
def test_graded_symmetry(s1, s2, pf, pg, side):
    f, g = grassmann(s1, pf), grassmann(s2, pg)
    sign = 1 if pf and pg else -1
    assert poisson_grassmann(f, g, side, CTX) == poisson_grassmann(g, f, side, CTX).scale(sign)


@given(seeds, seeds, st.integers(0, 1), st.integers(0, 1))
def test_left_and_right_poisson_brackets_agree(s1, s2, pf, pg):
    # the derivative-side signs cancel against the parity prefactors
    f, g = grassmann(s1, pf), grassmann(s2, pg)
    left = poisson_grassmann(f, g, "L", CTX)
    right = poisson_grassmann(f, g, "R", CTX)
    assert left == right


def test_mixed_parity_rejected():
    f = PhaseFunctional.constant(1, True) + PhaseFunctional.of_atom(FieldAtom("psi", 0, 0), 1, True)
    with pytest.raises(MixedParityError):
        poisson_grassmann(f, f, "L", CTX)
    with pytest.raises(TypeError):
        poisson_fo(f, f, CTX)


@pytest.mark.parametrize("track", ["spinorial", "grassmann-l", "grassmann-r"])
def test_closed_form_matches_generic_dirac_bracket(track):
    drv = DiracBergmann(track, LAT, CTX.gamma, CTX.constants)
    oracle = ConstraintBracket([f for *_, f in drv.constraints().ordered()], drv.pb)
    rng = random.Random(5)
    for _ in range(15):
        if drv.grassmann:
            f = random_functional(rng, ATOMS, True, 3, rng.randint(0, 1))
            g = random_functional(rng, ATOMS, True, 3, rng.randint(0, 1))
        else:
            f, g = random_functional(rng, ATOMS, False, 3), random_functional(rng, ATOMS, False, 3)
        assert drv.db(f, g) == oracle(f, g)


def test_logged_bracket_json():
    psi = PhaseFunctional.of_atom(FieldAtom("psi", 0, 0))
    psibar = PhaseFunctional.of_atom(FieldAtom("psibar", 0, 0))
    rec = logged_bracket(BracketKind.DIRAC_FO, psi, psibar, CTX)
    data = rec.to_json()
    assert data["kind"] == "FactorOrderedDB"
    assert delta_value(rec.result, CTX) == -I / 6
    assert bracket("FactorOrderedPB", psi, psibar, CTX).is_zero()
    assert delta_value(PhaseFunctional.constant(gr(4)), CTX) == 2
