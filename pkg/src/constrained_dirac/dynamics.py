"""RK4 time evolution of the lattice Dirac field.

Only psi is evolved. The adjoint and the momenta are rebuilt on shell:
psibar = psi^dag gamma^0, pi = (i hbar c / 2) psibar, pibar = -(i hbar c / 2) psi.

The generator is d_t psi = -i (m c^2 / hbar) gamma^0 psi - c gamma^0 gamma^mu d_mu psi,
with d_mu the periodic central difference. Diagnostics report d_t psi, which is
c gamma^0 times the slashed time derivative.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .gamma_algebra import GammaSet, build_gamma_set
from .phase_space import Constants, LatticeSpec

TRAJECTORY_SCHEMA = "constrained-dirac/trajectory/1"


class StabilityError(ValueError):
    """Time step above the documented RK4 bound."""


class InstabilityError(RuntimeError):
    """The norm blew up during integration."""


class OffShellError(ValueError):
    pass


class _Stencil:
    """Neighbor tables and gamma products for one lattice and representation."""

    def __init__(self, lattice: LatticeSpec, gamma: GammaSet, constants: Constants):
        lattice.require_stencil()
        self.lattice = lattice
        self.dx = float(lattice.spacing)
        n = lattice.n_sites
        self.up = [np.array([lattice.neighbor(i, ax, 1) for i in range(n)]) for ax in range(lattice.dimension)]
        self.down = [np.array([lattice.neighbor(i, ax, -1) for i in range(n)]) for ax in range(lattice.dimension)]
        g = gamma.arrays
        self.g = g
        self.g0 = g[0]
        hbar, c, m = float(constants.hbar), float(constants.c), float(constants.mass)
        self.hbar, self.c, self.m = hbar, c, m
        self.mass_op = -1j * (m * c * c / hbar) * g[0]
        self.kin_ops = [-c * g[0] @ g[ax + 1] for ax in range(lattice.dimension)]

    def diff(self, f: np.ndarray, axis: int) -> np.ndarray:
        return (f[self.up[axis]] - f[self.down[axis]]) / (2 * self.dx)

    def slash(self, psi: np.ndarray) -> np.ndarray:
        """sum_mu gamma^mu d_mu psi, per site."""
        out = np.zeros_like(psi)
        for ax in range(self.lattice.dimension):
            out += np.einsum("ab,sb->sa", self.g[ax + 1], self.diff(psi, ax))
        return out

    def slash_adjoint(self, psibar: np.ndarray) -> np.ndarray:
        """sum_mu d_mu psibar gamma^mu, per site."""
        out = np.zeros_like(psibar)
        for ax in range(self.lattice.dimension):
            out += np.einsum("sa,ab->sb", self.diff(psibar, ax), self.g[ax + 1])
        return out

    def rhs(self, psi: np.ndarray) -> np.ndarray:
        out = psi @ self.mass_op.T
        for ax, op in enumerate(self.kin_ops):
            out += self.diff(psi, ax) @ op.T
        return out


@dataclass
class EvolutionState:
    psi: np.ndarray
    lattice: LatticeSpec
    gamma: GammaSet
    constants: Constants = field(default_factory=Constants)
    t: float = 0.0
    dt: float = 0.01
    scheme: str = "RK4"

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        if self.psi.shape != (self.lattice.n_sites, 4):
            raise ValueError(f"psi must have shape ({self.lattice.n_sites}, 4)")
        if self.scheme != "RK4":
            raise ValueError("only the RK4 scheme is available")
        self._stencil = _Stencil(self.lattice, self.gamma, self.constants)

    @property
    def stencil(self) -> _Stencil:
        return self._stencil

    @property
    def psibar(self) -> np.ndarray:
        return self.psi.conj() @ self._stencil.g0

    @property
    def pi(self) -> np.ndarray:
        return 0.5j * float(self.constants.hbar_c) * self.psibar

    @property
    def pibar(self) -> np.ndarray:
        return -0.5j * float(self.constants.hbar_c) * self.psi

    def with_psi(self, psi: np.ndarray, t: float) -> "EvolutionState":
        new = replace(self, psi=psi, t=t)
        return new


def time_derivative(state: EvolutionState) -> np.ndarray:
    return state.stencil.rhs(state.psi)


def norm(state: EvolutionState) -> float:
    v = float(state.lattice.cell_volume)
    return float(v * np.sum(np.abs(state.psi) ** 2))


def hamiltonian_iz(state: EvolutionState) -> complex:
    """v sum [-pi.S - Sbar[psibar].pibar - (i m c/hbar)(pi.psi - psibar.pibar)] on shell."""
    st = state.stencil
    v = float(state.lattice.cell_volume)
    psi, psibar, pi, pibar = state.psi, state.psibar, state.pi, state.pibar
    s = st.slash(psi)
    sbar = st.slash_adjoint(psibar)
    im = 1j * st.m * st.c / st.hbar
    dens = (-np.sum(pi * s, axis=1) - np.sum(sbar * pibar, axis=1)
            - im * (np.sum(pi * psi, axis=1) - np.sum(psibar * pibar, axis=1)))
    return complex(v * np.sum(dens))


def constraint_residual(psi, psibar, pi, pibar, constants: Constants) -> float:
    a = 0.5j * float(constants.hbar_c)
    r1 = np.max(np.abs(pi - a * psibar), initial=0.0)
    r2 = np.max(np.abs(pibar + a * psi), initial=0.0)
    return float(max(r1, r2))


@dataclass
class Trajectory:
    times: list[float]
    energy: list[complex]
    norm: list[float]
    constraint: list[float]
    overlap: list[complex]
    final: EvolutionState

    def relative_drift(self, series: str) -> float:
        vals = np.asarray(getattr(self, series))
        ref = vals[0]
        if abs(ref) == 0:
            return float(np.max(np.abs(vals - ref)))
        return float(np.max(np.abs(vals - ref)) / abs(ref))

    def to_json(self) -> dict:
        return {
            "schema": TRAJECTORY_SCHEMA,
            "times": self.times,
            "energy": [[e.real, e.imag] for e in self.energy],
            "norm": self.norm,
            "constraint_residual": self.constraint,
            "overlap": [[z.real, z.imag] for z in self.overlap],
            "final_psi": [[[z.real, z.imag] for z in row] for row in self.final.psi],
        }

    def to_table(self) -> str:
        lines = ["# t energy_re energy_im norm constraint_residual"]
        for t, e, n, c in zip(self.times, self.energy, self.norm, self.constraint):
            lines.append(f"{t:.12g} {e.real:.17g} {e.imag:.17g} {n:.17g} {c:.3g}")
        return "\n".join(lines) + "\n"


def stability_bound(lattice: LatticeSpec, constants: Constants) -> float:
    return 0.5 * float(lattice.spacing) / float(constants.c)


def rk4_step(state: EvolutionState) -> np.ndarray:
    f = state.stencil.rhs
    h = state.dt
    y = state.psi
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve(state: EvolutionState, n_steps: int, record_every: int = 1) -> Trajectory:
    bound = stability_bound(state.lattice, state.constants)
    if state.dt > bound:
        raise StabilityError(f"dt = {state.dt} exceeds the RK4 bound 0.5 dx / c = {bound}")
    psi0 = state.psi.copy()
    n0 = norm(state)
    v = float(state.lattice.cell_volume)

    def snapshot(s: EvolutionState, traj: Trajectory | None = None):
        return (s.t, hamiltonian_iz(s), norm(s),
                constraint_residual(s.psi, s.psibar, s.pi, s.pibar, s.constants),
                complex(v * np.vdot(psi0, s.psi)))

    rows = [snapshot(state)]
    cur = state
    for step in range(1, n_steps + 1):
        psi = rk4_step(cur)
        cur = cur.with_psi(psi, state.t + step * state.dt)
        if n0 > 0:
            growth = norm(cur) / n0
            if not np.isfinite(growth) or growth > 10:
                raise InstabilityError(f"norm grew by {growth:.3g} at step {step} (t = {cur.t:.6g})")
        if step % record_every == 0 or step == n_steps:
            rows.append(snapshot(cur))
    for r in rows:
        if r[3] > 1e-10:
            raise OffShellError("on-shell reconstruction broke the constraints")
    times, energy, norms, cons, overlap = (list(x) for x in zip(*rows))
    return Trajectory(times, energy, norms, cons, overlap, cur)


# dispersion oracle

def symbol_matrix(k: float, lattice: LatticeSpec, gamma: GammaSet, constants: Constants) -> np.ndarray:
    """Hermitian M(k) with d_t psi = i M psi for psi ~ exp(i k x) along axis 0."""
    g = gamma.arrays
    dx = float(lattice.spacing)
    hbar, c, m = float(constants.hbar), float(constants.c), float(constants.mass)
    return -(m * c * c / hbar) * g[0] - (c * math.sin(k * dx) / dx) * (g[0] @ g[1])


def lattice_frequency(k: float, lattice: LatticeSpec, constants: Constants) -> float:
    dx = float(lattice.spacing)
    hbar, c, m = float(constants.hbar), float(constants.c), float(constants.mass)
    return math.hypot(m * c * c / hbar, c * math.sin(k * dx) / dx)


def plane_wave(lattice: LatticeSpec, gamma: GammaSet, constants: Constants | None = None,
               mode: int = 1, positive_energy: bool = True, dt: float = 0.01,
               amplitude: float = 1.0) -> tuple[EvolutionState, float]:
    """Lattice eigenmode along axis 0. Returns (state, lam) with d_t psi = i lam psi."""
    constants = constants or Constants()
    if lattice.dimension != 1:
        raise ValueError("plane waves are built on 1D lattices")
    n = lattice.sites_per_axis
    dx = float(lattice.spacing)
    k = 2 * math.pi * mode / (n * dx)
    vals, vecs = np.linalg.eigh(symbol_matrix(k, lattice, gamma, constants))
    idx = 0 if positive_energy else len(vals) - 1
    lam = float(vals[idx])
    w = vecs[:, idx]
    x = np.arange(n) * dx
    psi = amplitude * np.exp(1j * k * x)[:, None] * w[None, :]
    return EvolutionState(psi, lattice, gamma, constants, dt=dt), lam


def measured_frequency(traj: Trajectory) -> float:
    """Least-squares slope of the unwrapped overlap phase."""
    t = np.asarray(traj.times)
    phase = np.unwrap(np.angle(np.asarray(traj.overlap)))
    slope, _ = np.polyfit(t, phase, 1)
    return float(slope)


def phase_error(lattice: LatticeSpec, gamma: GammaSet, constants: Constants, dt: float,
                mode: int = 1, periods: float = 1.0) -> float:
    """|measured - exact| overlap phase of an eigenmode after the given number of periods."""
    state, lam = plane_wave(lattice, gamma, constants, mode, dt=dt)
    n_steps = int(round(periods * 2 * math.pi / abs(lam) / dt))
    traj = evolve(state, n_steps, record_every=n_steps)
    got = np.angle(traj.overlap[-1] / traj.overlap[0])
    want = lam * traj.times[-1]
    return float(abs((got - want + math.pi) % (2 * math.pi) - math.pi))


# Hamiltonian comparison

@dataclass
class HamiltonianComparison:
    h_r: complex
    h_bd: complex
    h_iz: complex
    divergence_density: np.ndarray

    @property
    def divergence(self) -> complex:
        return complex(np.sum(self.divergence_density))

    def scale(self) -> float:
        return max(1.0, abs(self.h_r), float(np.sum(np.abs(self.divergence_density))))

    def ok(self, tol: float = 1e-10) -> bool:
        s = self.scale()
        return (abs(self.divergence) <= tol * s
                and abs(self.h_r - self.h_bd - self.divergence) <= tol * s
                and abs(self.h_r - self.h_iz) <= tol * s)

    def to_json(self) -> dict:
        return {"H_R": [self.h_r.real, self.h_r.imag], "H_BD": [self.h_bd.real, self.h_bd.imag],
                "H_IZ": [self.h_iz.real, self.h_iz.imag],
                "divergence": [self.divergence.real, self.divergence.imag]}


def hamiltonian_comparison_fields(psi, psibar, pi, pibar, lattice: LatticeSpec, gamma: GammaSet,
                                  constants: Constants, tol: float = 1e-10) -> HamiltonianComparison:
    if constraint_residual(psi, psibar, pi, pibar, constants) > tol:
        raise OffShellError("configuration violates the primary constraints")
    st = _Stencil(lattice, gamma, constants)
    v = float(lattice.cell_volume)
    hc = float(constants.hbar_c)
    im = 1j * st.m * st.c / st.hbar
    psi1 = 0.5 * psi + (1j / hc) * pibar
    pi1 = 0.5j * hc * psibar + pi
    s = st.slash(psi1)
    sbar = st.slash_adjoint(pi1)
    kin_l = np.sum(sbar * psi1, axis=1)
    kin_r = np.sum(pi1 * s, axis=1)
    mass = np.sum(pi1 * psi1, axis=1)
    h_r = v * np.sum(0.5 * (kin_l - kin_r) - im * mass)
    h_bd = v * np.sum(-kin_r - im * mass)
    div = v * 0.5 * (kin_l + kin_r)
    # momentum-form Hamiltonian at psi = psi1, psibar = -(i/hbar c) pi1, pi = pi1/2, pibar = -(i hbar c/2) psi1
    psi_r = psi1
    psibar_r = -(1j / hc) * pi1
    pi_r = 0.5 * pi1
    pibar_r = -0.5j * hc * psi1
    s_r = st.slash(psi_r)
    sbar_r = st.slash_adjoint(psibar_r)
    h_iz = v * np.sum(-np.sum(pi_r * s_r, axis=1) - np.sum(sbar_r * pibar_r, axis=1)
                      - im * (np.sum(pi_r * psi_r, axis=1) - np.sum(psibar_r * pibar_r, axis=1)))
    return HamiltonianComparison(complex(h_r), complex(h_bd), complex(h_iz), div)


def hamiltonian_comparison(state: EvolutionState, tol: float = 1e-10) -> HamiltonianComparison:
    return hamiltonian_comparison_fields(state.psi, state.psibar, state.pi, state.pibar,
                                         state.lattice, state.gamma, state.constants, tol)


def run_dispersion_check(sites: int = 32, dx: float = 0.1, dt_fraction: float = 0.05,
                         steps: int = 1000, mode: int = 1, gamma: GammaSet | None = None,
                         constants: Constants | None = None) -> dict:
    """Frequency, energy and norm diagnostics for one eigenmode."""
    from fractions import Fraction

    gamma = gamma or build_gamma_set("dirac")
    constants = constants or Constants()
    lattice = LatticeSpec(1, sites, Fraction(dx).limit_denominator(10 ** 6))
    dt = dt_fraction * float(lattice.spacing)
    state, lam = plane_wave(lattice, gamma, constants, mode, dt=dt)
    traj = evolve(state, steps)
    freq = measured_frequency(traj)
    return {
        "lambda_oracle": lam,
        "omega_oracle": lattice_frequency(2 * math.pi * mode / (sites * float(lattice.spacing)),
                                          lattice, constants),
        "lambda_measured": freq,
        "frequency_relative_error": abs(freq - lam) / abs(lam),
        "energy_relative_drift": traj.relative_drift("energy"),
        "norm_relative_drift": traj.relative_drift("norm"),
        "trajectory": traj,
    }


def save_trajectory(traj: Trajectory, path: str, table_path: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(traj.to_json(), fh, indent=1, sort_keys=True)
    if table_path:
        with open(table_path, "w", encoding="utf-8") as fh:
            fh.write(traj.to_table())


__all__ = [
    "EvolutionState", "HamiltonianComparison", "InstabilityError", "OffShellError",
    "StabilityError", "Trajectory", "constraint_residual", "evolve", "hamiltonian_comparison",
    "hamiltonian_comparison_fields", "hamiltonian_iz", "lattice_frequency", "measured_frequency",
    "norm", "phase_error", "plane_wave", "rk4_step", "run_dispersion_check", "save_trajectory",
    "stability_bound", "symbol_matrix", "time_derivative",
]
