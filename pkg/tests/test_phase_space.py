import json
from fractions import Fraction

import numpy as np
import pytest

from constrained_dirac.dirac_bergmann import DiracBergmann
from constrained_dirac.exact import I
from constrained_dirac.gamma_algebra import build_gamma_set
from constrained_dirac.grassmann import GrassmannElement
from constrained_dirac.phase_space import (Constants, FactorOrderingError, FieldAtom, FieldConfig,
                                           LatticeSpec, MissingAtomError, PhaseFunctional,
                                           constants_from_config, functional_derivative,
                                           lattice_from_config, read_config, slashed_spatial_derivative,
                                           spinor_config)


def pf(kind, a=0, i=0, c=1, g=False):
    return PhaseFunctional.of_atom(FieldAtom(kind, a, i), c, g)


def test_lattice_basics():
    lat = LatticeSpec(2, 4, Fraction(1, 2))
    assert lat.cell_volume == Fraction(1, 4)
    assert lat.n_sites == 16
    assert lat.neighbor(lat.index((3, 0)), 0, 1) == lat.index((0, 0))
    with pytest.raises(ValueError):
        LatticeSpec(1, 2).require_stencil()
    with pytest.raises(ValueError):
        Constants(0, 1, 1)


def test_commuting_products_are_row_then_column():
    f = pf("psi") * pf("psibar")
    (key,) = f.terms
    assert [a.kind for a in key] == ["psibar", "psi"]
    with pytest.raises(FactorOrderingError):
        pf("psi") * pf("pibar")
    with pytest.raises(FactorOrderingError):
        pf("psi") * pf("psibar") * pf("psi", 1)


def test_grassmann_products_anticommute():
    a, b = pf("psi", 0, 0, g=True), pf("pi", 0, 0, g=True)
    assert a * b == -(b * a)
    assert (a * a).is_zero()


def test_partial_signs():
    a, b = FieldAtom("psi", 0, 0), FieldAtom("pi", 0, 0)
    f = pf("psi", g=True) * pf("pi", g=True)
    assert f.partial(a, "left") == pf("pi", g=True)
    assert f.partial(b, "left") == -pf("psi", g=True)
    assert f.partial(a, "right") == -pf("pi", g=True)
    assert f.partial(b, "right") == pf("psi", g=True)
    with pytest.raises(ValueError):
        f.partial(a, "plain")


def test_functional_derivative_divides_by_cell_volume():
    lat = LatticeSpec(1, 4, Fraction(1, 3))
    f = pf("psibar") * pf("psi")
    d = functional_derivative(f, FieldAtom("psi", 0, 0), "plain", lat)
    assert d == pf("psibar", c=3)


def test_functional_derivative_matches_finite_differences():
    """H_IZ on 4 sites; complex-step central differences as the oracle."""
    lat = LatticeSpec(1, 4, Fraction(1, 2))
    drv = DiracBergmann("spinorial", lat, build_gamma_set("weyl"), Constants(1, 1, 1))
    h = drv.iz_momentum_form()
    rng = np.random.default_rng(7)
    atoms = [FieldAtom(k, a, i) for k in ("psi", "psibar", "pi", "pibar") for a in range(4) for i in range(4)]
    point = {x: complex(*rng.normal(size=2)) for x in atoms}
    eps = 1e-6
    v = float(lat.cell_volume)
    for x in atoms[::3]:
        up, dn = dict(point), dict(point)
        up[x] += eps
        dn[x] -= eps
        fd = (h.evaluate(up) - h.evaluate(dn)) / (2 * eps) / v
        exact = functional_derivative(h, x, "plain", lat).evaluate(point)
        assert abs(fd - exact) < 1e-7


def test_slashed_derivative_stencil():
    gs = build_gamma_set("dirac")
    lat = LatticeSpec(1, 5, Fraction(1))
    d = slashed_spatial_derivative("psi", 0, 0, gs, lat)
    # gamma^1 in the Dirac representation couples component 0 to 3
    assert set(d.atoms()) == {FieldAtom("psi", 3, 1), FieldAtom("psi", 3, 4)}
    vals = {FieldAtom("psi", 3, 1): 1, FieldAtom("psi", 3, 4): 0}
    assert d.evaluate(vals) == complex(gs.gamma[1][0][3]) / 2


def test_evaluate_missing_atom():
    with pytest.raises(MissingAtomError):
        pf("psi").evaluate({})


def test_json_roundtrip():
    f = (pf("psibar", 1, 2) * pf("psi", 0, 2)).scale(I / 3) + PhaseFunctional.constant(2)
    assert PhaseFunctional.from_json(json.loads(json.dumps(f.to_json()))) == f


def test_config_roundtrip(tmp_path):
    cfg = spinor_config([[1, 2j, 0, 1]], constants=Constants(2, 3, 1))
    back = FieldConfig.from_json(json.loads(cfg.dumps()))
    assert back.values == cfg.values and back.constants == cfg.constants
    g = FieldConfig({FieldAtom("psi", 0, 0): GrassmannElement.generator(2, 1)})
    assert FieldConfig.from_json(g.to_json()).values == g.values
    path = tmp_path / "run.cfg"
    path.write_text("sites = 6  # six\ndx = 1/4\nhbar = 2\n")
    kv = read_config(path)
    assert lattice_from_config(kv) == LatticeSpec(1, 6, Fraction(1, 4))
    assert constants_from_config(kv) == Constants(2, 1, 1)
