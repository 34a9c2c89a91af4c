"""One test per acceptance criterion; each records a pass/fail line."""
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from constrained_dirac.cli import main as cli_main
from constrained_dirac.dirac_bergmann import DiracBergmann, FormalismTrack, HamiltonianKind
from constrained_dirac.dynamics import (EvolutionState, hamiltonian_comparison, phase_error, plane_wave,
                                        run_dispersion_check, time_derivative)
from constrained_dirac.exact import I, gr
from constrained_dirac.gamma_algebra import (all_gamma_sets, build_gamma_set, check_adjoint_relations,
                                             check_clifford)
from constrained_dirac.grassmann import identity_suite
from constrained_dirac.phase_space import Constants, LatticeSpec
from constrained_dirac.quantization import (fundamental_anticommutators, spinorial_identities,
                                           verify_all_tracks)
from constrained_dirac.spin_rotations import rotate_z, su2_z, vector_to_matrix, verify

from helpers import multipliers_from_rate, record, state_values

CONSTANT_SETS = [Constants(1, 1, 1), Constants(2, 3, 1)]
LAT8 = LatticeSpec(1, 8, Fraction(1))


def test_criterion_01_gamma_algebra():
    t0 = time.perf_counter()
    bad = []
    for gs in all_gamma_sets():
        for exact in (True, False):
            res = check_clifford(gs, exact) + check_adjoint_relations(gs, exact)
            bad += [f"{r.representation}:{r.identity}{r.indices}" for r in res if not r.ok]
            assert len([r for r in res if r.identity.startswith("clifford")]) == 16
    elapsed = time.perf_counter() - t0
    record(1, "gamma algebra, 3 representations, exact and float", not bad and elapsed < 1,
           f"{elapsed:.3f} s, failures {bad[:3]}")


def test_criterion_02_grassmann():
    t0 = time.perf_counter()
    results = identity_suite(500, seed=0, max_generators=12)
    elapsed = time.perf_counter() - t0
    bad = [n for n, ok in results if not ok]
    record(2, "Grassmann identities on 500 random homogeneous elements", not bad and elapsed < 10,
           f"{elapsed:.2f} s, failures {bad}")


@pytest.mark.parametrize("k", CONSTANT_SETS, ids=["hbar1c1", "hbar2c3"])
def test_criterion_03_constraint_algebra(k):
    hc = k.hbar_c
    spin = DiracBergmann("spinorial", LAT8, constants=k).constraint_matrix()
    left = DiracBergmann("grassmann-l", LAT8, constants=k).constraint_matrix()
    right = DiracBergmann("grassmann-r", LAT8, constants=k).constraint_matrix()
    ok = (spin.block[0][1] == -I * hc and spin.block[1][0] == I * hc
          and spin.block[0][0] == 0 and spin.block[1][1] == 0
          and spin.product_is_identity and left.product_is_identity and right.product_is_identity
          and left.block == [[gr(0), -I * hc], [-I * hc, gr(0)]]
          and right.block == [[-x for x in row] for row in left.block])
    record(3, f"constraint matrices at hbar={k.hbar}, c={k.c}", ok,
           f"spinorial {_fmt(spin.block)}, L {_fmt(left.block)}, R {_fmt(right.block)}")


def _fmt(block):
    return "[" + "; ".join(" ".join(str(x) for x in row) for row in block) + "]"


def _expected_dirac(track, hc):
    half = Fraction(1, 2)
    if track is FormalismTrack.SPINORIAL:
        return {("psi", "pi"): half, ("psibar", "pibar"): half, ("psi", "psibar"): -I / hc,
                ("pi", "pibar"): I * hc / 4, ("psi", "pibar"): 0, ("psibar", "pi"): 0}
    s = 1 if track is FormalismTrack.GRASSMANN_L else -1
    return {("psi", "pi"): -half, ("psibar", "pibar"): -half, ("pi", "psi"): -half,
            ("psi", "psibar"): -s * I / hc, ("psibar", "psi"): -s * I / hc,
            ("pi", "pibar"): s * I * hc / 4, ("psi", "pibar"): 0}


@pytest.mark.parametrize("k", CONSTANT_SETS, ids=["hbar1c1", "hbar2c3"])
def test_criterion_04_canonical_brackets(k):
    bad = []
    for track in FormalismTrack:
        drv = DiracBergmann(track, LAT8, constants=k)
        for (x, y), want in _expected_dirac(track, k.hbar_c).items():
            got = drv.db(drv.atom(x), drv.atom(y))
            val = got.constant_term() * drv.ctx.v if got.degree == 0 else None
            if val != want:
                bad.append(f"{track.value}:{{{x},{y}}}={val}")
        bad += [f"{track.value}:{r['bracket']}{{{r['lhs']},{r['rhs']}}}" for r in drv.canonical_brackets()
                if not r["ok"]]
    record(4, f"canonical Dirac brackets at hbar={k.hbar}, c={k.c}", not bad, f"mismatches {bad[:4]}")


def test_criterion_05_consistency():
    k = Constants(1, 1, 1)
    drv = DiracBergmann("spinorial", LAT8, build_gamma_set("dirac"), k)
    cons = drv.run_consistency()
    exact_ok = all(c.ok for c in cons.checks)
    state, lam = plane_wave(LAT8, drv.ctx.gamma, k, mode=1)
    u, ubar = multipliers_from_rate(state, 1j * lam * state.psi)
    values = state_values(state, u, ubar)
    worst = max(abs(r.evaluate(values)) for r in cons.residuals.values())
    record(5, "consistency residuals are the lattice Dirac operators; plane wave annihilates them",
           exact_ok and worst <= 1e-10, f"exact {exact_ok}, plane-wave residual {worst:.2e}")


@pytest.mark.parametrize("track", list(FormalismTrack), ids=lambda t: t.value)
def test_criterion_06_reduction(track):
    drv = DiracBergmann(track, LAT8, constants=Constants(2, 3, 1))
    checks = drv.verify_reduction(200, seed=11) + drv.check_chart()
    bad = [c.name for c in checks if not c.ok]
    record(6, f"reduction to the (psi1, pi1) chart, {track.value}", not bad, f"failures {bad}")


def test_criterion_07_hamiltonians():
    lat = LatticeSpec(1, 8, Fraction(1, 2))
    k = Constants(2, 3, 1)
    drv = DiracBergmann("spinorial", lat, constants=k)
    h_r = drv.reduced_hamiltonian()
    divs = drv.divergence_densities()
    total = divs[0]
    for d in divs[1:]:
        total = total + d
    symbolic = (h_r == drv.reduced_hamiltonian_closed_form() and total.is_zero()
                and h_r - drv.bd_in_chart() == total)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        psi = rng.normal(size=(8, 4)) + 1j * rng.normal(size=(8, 4))
        res = hamiltonian_comparison(EvolutionState(psi, lat, drv.ctx.gamma, k))
        s = res.scale()
        worst = max(worst, abs(res.h_r - res.h_iz) / s, abs(res.h_r - res.h_bd - res.divergence) / s,
                    abs(res.divergence) / s)
    record(7, "H_R = H_IZ on the chart and H_R - H_BD telescopes", symbolic and worst <= 1e-10,
           f"symbolic {symbolic}, worst relative {worst:.2e}")


def test_criterion_08_quantization():
    t0 = time.perf_counter()
    k = Constants(2, 3, 1)
    bad = []
    for n_sites in (1, 2):
        for gs in all_gamma_sets():
            suites = {"fundamental": fundamental_anticommutators(n_sites, gs),
                      "spinorial": spinorial_identities(n_sites, gs, k)}
            for suite, results in suites.items():
                bad += [f"{gs.name}:{n_sites}:{suite}:{name}" for name, ok in results.items() if not ok]
            for v in verify_all_tracks(n_sites, gs, k):
                if not v.ok:
                    bad.append(f"{gs.name}:{n_sites}:{v.track}:{v.pair}")
    elapsed = time.perf_counter() - t0
    record(8, "quantization on 4- and 8-mode Fock spaces", not bad and elapsed < 30,
           f"{elapsed:.1f} s, failures {bad[:3]}")


def test_criterion_09_dynamics():
    t0 = time.perf_counter()
    gs = build_gamma_set("dirac")
    k = Constants(1, 1, 1)
    res = run_dispersion_check(sites=32, dx=0.1, dt_fraction=0.05, steps=1000, gamma=gs, constants=k)
    lat = LatticeSpec(1, 32, Fraction(1, 10))
    e1 = phase_error(lat, gs, k, 0.05 * 0.1)
    e2 = phase_error(lat, gs, k, 0.025 * 0.1)
    elapsed = time.perf_counter() - t0
    ok = (res["frequency_relative_error"] <= 1e-6 and res["energy_relative_drift"] <= 1e-8
          and res["norm_relative_drift"] <= 1e-8 and e1 / e2 >= 12 and elapsed < 60)
    record(9, "lattice dispersion, conservation and RK4 order", ok,
           f"freq err {res['frequency_relative_error']:.1e}, energy drift {res['energy_relative_drift']:.1e}, "
           f"norm drift {res['norm_relative_drift']:.1e}, phase ratio {e1 / e2:.1f}, {elapsed:.1f} s")


def test_criterion_10_rotations():
    phis = (math.pi / 4, math.pi / 2, math.pi, 2 * math.pi)
    bad = []
    for gs in all_gamma_sets():
        bad += [f"{gs.name}:{v.name}" for v in verify(phis, gs) if not v.ok]
    v = vector_to_matrix([1, 2, 3, 4])
    double_cover = (np.allclose(su2_z(2 * math.pi), -np.eye(2), atol=1e-12)
                    and np.allclose(rotate_z(v, 2 * math.pi).matrix, v.matrix, atol=1e-12))
    record(10, "helicity phases and double cover", not bad and double_cover,
           f"failures {bad[:3]}, double cover {double_cover}")


def test_criterion_11_negative_controls(tmp_path):
    gs = build_gamma_set("dirac").with_entry(1, 0, 3, 5)
    gamma_bad = [f"{r.identity}{r.indices}" for r in check_clifford(gs) if not r.ok]
    drv = DiracBergmann("spinorial", LatticeSpec(1, 4), flip_momentum_sign=True)
    mom_bad = drv.run(n_random=2)["failures"]
    exit_gamma = cli_main(["verify-algebra", "--rep", "dirac", "--inject-fault", "gamma-entry",
                           "--random-trials", "5", "--out", str(tmp_path / "a.json")])
    exit_mom = cli_main(["bergmann", "--track", "spinorial", "--rep", "dirac", "--sites", "4",
                         "--inject-fault", "momentum-sign", "--random-trials", "2",
                         "--out", str(tmp_path / "b.json")])
    ok = (bool(gamma_bad) and "momentum_definition:pi" in mom_bad and exit_gamma == 1 and exit_mom == 1)
    record(11, "corrupted gamma entry and wrong momentum sign are caught", ok,
           f"gamma suite names {gamma_bad[0] if gamma_bad else None}, momentum suite names "
           f"{mom_bad[0] if mom_bad else None}")
