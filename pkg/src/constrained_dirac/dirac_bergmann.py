"""Constrained-Hamiltonian pipeline for the lattice Dirac field.

Three formalisms share one driver:

* ``spinorial``: commuting fields with factor-ordered brackets;
* ``grassmann-l``: odd fields, left derivatives, Liouville form u pi + ubar pibar;
* ``grassmann-r``: odd fields, right derivatives, Liouville form pi u + pibar ubar.

``u`` and ``ubar`` stand for the slashed time derivatives gamma^0 d_0 psi and
d_0 psibar gamma^0. They appear as the multiplier atoms ``dpsi``/``dpsibar``
in the primary Hamiltonian until the consistency conditions fix them.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .brackets import (
    ConstraintBracket,
    delta_value,
    dirac_fo,
    dirac_grassmann,
    poisson_fo,
    poisson_grassmann,
    poisson_reduced,
)
from .exact import GaussianRational, I, SingularMatrixError, gr, inverse
from .gamma_algebra import GammaSet, build_gamma_set
from .phase_space import (
    CANONICAL_KINDS,
    Constants,
    Context,
    FieldAtom,
    LatticeSpec,
    PhaseFunctional,
    dot,
    field_vector,
    integrate,
    slashed_vector,
)

REPORT_SCHEMA = "constrained-dirac/bergmann/1"


class FormalismTrack(str, Enum):
    SPINORIAL = "spinorial"
    GRASSMANN_L = "grassmann-l"
    GRASSMANN_R = "grassmann-r"

    @property
    def grassmann(self) -> bool:
        return self is not FormalismTrack.SPINORIAL

    @property
    def derivative_side(self) -> str:
        return {"spinorial": "plain", "grassmann-l": "left", "grassmann-r": "right"}[self.value]

    @property
    def bracket_side(self) -> str | None:
        return {"spinorial": None, "grassmann-l": "L", "grassmann-r": "R"}[self.value]

    @property
    def flow_sign(self) -> int:
        """d/dx0 f = flow_sign * {f, H}; the right-derivative bracket runs backwards."""
        return -1 if self is FormalismTrack.GRASSMANN_R else 1


class LagrangianKind(str, Enum):
    BD = "BD"
    IZ = "IZ"


class HamiltonianKind(str, Enum):
    CANONICAL = "canonical"
    PRIMARY = "primary"
    BD = "BD"
    REDUCED = "reduced"


class ChartNotBuiltError(RuntimeError):
    pass


class InconsistentSystemError(RuntimeError):
    pass


@dataclass
class Check:
    name: str
    ok: bool
    detail: object = None

    def to_json(self) -> dict:
        return {"name": self.name, "ok": bool(self.ok), "detail": _jsonable(self.detail)}


def _jsonable(x):
    if isinstance(x, GaussianRational):
        return str(x)
    if isinstance(x, PhaseFunctional):
        return x.to_json()
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    return x


def momentum_coefficients(track: FormalismTrack, lagrangian: LagrangianKind,
                          constants: Constants) -> tuple[GaussianRational, GaussianRational]:
    """(k, kbar) with pi = k psibar and pibar = kbar psi."""
    track = FormalismTrack(track)
    lagrangian = LagrangianKind(lagrangian)
    a = I * constants.hbar_c / 2
    if lagrangian is LagrangianKind.BD:
        if track is not FormalismTrack.SPINORIAL:
            raise ValueError("the BD Lagrangian is only treated in the spinorial formalism")
        return 2 * a, gr(0)
    return {
        FormalismTrack.SPINORIAL: (a, -a),
        FormalismTrack.GRASSMANN_L: (-a, -a),
        FormalismTrack.GRASSMANN_R: (a, a),
    }[track]


def build_momenta(track: FormalismTrack, lagrangian: LagrangianKind, ctx: Context,
                  flip_pi_sign: bool = False) -> dict[FieldAtom, PhaseFunctional]:
    """Closed-form momenta on every lattice atom.

    ``flip_pi_sign`` deliberately corrupts pi; it exists for negative controls.
    """
    track = FormalismTrack(track)
    k, kbar = momentum_coefficients(track, lagrangian, ctx.constants)
    if flip_pi_sign:
        k = -k
    g = track.grassmann
    out = {}
    for i in ctx.lattice.sites():
        for a in range(4):
            out[FieldAtom("pi", a, i)] = PhaseFunctional.of_atom(FieldAtom("psibar", a, i), k, g)
            out[FieldAtom("pibar", a, i)] = PhaseFunctional.of_atom(FieldAtom("psi", a, i), kbar, g)
    return out


def lagrangian_functional(track: FormalismTrack, lagrangian: LagrangianKind,
                          ctx: Context) -> PhaseFunctional:
    """Discretized Lagrangian with velocity slots dpsi/dpsibar."""
    track = FormalismTrack(track)
    g = track.grassmann
    k = ctx.constants
    a = I * k.hbar_c / 2
    mc2 = k.mass * k.c ** 2

    def density(i):
        psi = field_vector("psi", i, g)
        psibar = field_vector("psibar", i, g)
        u = field_vector("dpsi", i, g)
        ubar = field_vector("dpsibar", i, g)
        s = slashed_vector("psi", i, ctx.gamma, ctx.lattice, grassmann=g)
        sbar = slashed_vector("psibar", i, ctx.gamma, ctx.lattice, grassmann=g)
        full = [x + y for x, y in zip(u, s)]
        mass = dot(psibar, psi).scale(mc2)
        if LagrangianKind(lagrangian) is LagrangianKind.BD:
            return dot(psibar, full).scale(2 * a) - mass
        fullbar = [x + y for x, y in zip(ubar, sbar)]
        return (dot(psibar, full) - dot(fullbar, psi)).scale(a) - mass

    return integrate(density, ctx.lattice)


@dataclass
class ConstraintSet:
    track: FormalismTrack
    phibar: dict[tuple[int, int], PhaseFunctional]
    phi: dict[tuple[int, int], PhaseFunctional]

    def ordered(self) -> list[tuple[str, int, int, PhaseFunctional]]:
        """phibar first, then phi; each by (site, component)."""
        out = []
        for name, table in (("phibar", self.phibar), ("phi", self.phi)):
            for (comp, site) in sorted(table, key=lambda cs: (cs[1], cs[0])):
                out.append((name, comp, site, table[(comp, site)]))
        return out

    def parity_ok(self) -> bool:
        want = "odd" if self.track.grassmann else "even"
        return all(f.parity.value == want for *_, f in self.ordered())


@dataclass
class ConstraintMatrix:
    """2x2 blocks of coefficients multiplying delta_ij / v, ordered (phibar, phi)."""

    block: list[list[GaussianRational]]
    inverse: list[list[GaussianRational]]
    full_size: int
    product_is_identity: bool

    def to_json(self) -> dict:
        return {
            "A": [[str(x) for x in r] for r in self.block],
            "A_inverse": [[str(x) for x in r] for r in self.inverse],
            "size": self.full_size,
            "A_times_A_inverse_is_identity": self.product_is_identity,
        }


@dataclass
class ConsistencyResult:
    residuals: dict[tuple[str, int, int], PhaseFunctional]
    multipliers: dict[FieldAtom, PhaseFunctional]
    total_hamiltonian: PhaseFunctional
    checks: list[Check] = field(default_factory=list)


@dataclass
class ReducedChart:
    track: FormalismTrack
    forward: dict[FieldAtom, PhaseFunctional]
    inverse: dict[FieldAtom, PhaseFunctional]
    local_matrix: list[list[GaussianRational]]
    local_inverse: list[list[GaussianRational]]

    def to_new(self, f: PhaseFunctional) -> PhaseFunctional:
        """Rewrite a functional of canonical atoms in chart atoms."""
        return f.substitute(self.inverse)

    def to_old(self, f: PhaseFunctional) -> PhaseFunctional:
        return f.substitute(self.forward)


_OLD_ORDER = ("psi", "psibar", "pi", "pibar")
_NEW_ORDER = ("psi1", "pi1", "psi2", "pi2")


class DiracBergmann:
    """Runs the constraint analysis for one formalism on one lattice."""

    def __init__(self, track: FormalismTrack | str = FormalismTrack.SPINORIAL,
                 lattice: LatticeSpec | None = None, gamma: GammaSet | None = None,
                 constants: Constants | None = None, *, mass_terms: str = "derived",
                 flip_momentum_sign: bool = False):
        self.track = FormalismTrack(track)
        lattice = lattice or LatticeSpec(1, 8, Fraction(1))
        lattice.require_stencil()
        self.ctx = Context(lattice, constants or Constants(), gamma or build_gamma_set("dirac"))
        if mass_terms not in ("derived", "printed"):
            raise ValueError("mass_terms must be 'derived' or 'printed'")
        self.mass_terms = mass_terms
        self.flip_momentum_sign = flip_momentum_sign
        self._constraints: ConstraintSet | None = None
        self._chart: ReducedChart | None = None

    # small helpers
    @property
    def grassmann(self) -> bool:
        return self.track.grassmann

    @property
    def lattice(self) -> LatticeSpec:
        return self.ctx.lattice

    def atom(self, kind: str, comp: int = 0, site: int = 0, coef=1) -> PhaseFunctional:
        return PhaseFunctional.of_atom(FieldAtom(kind, comp, site), coef, self.grassmann)

    def pb(self, f: PhaseFunctional, g: PhaseFunctional) -> PhaseFunctional:
        if self.grassmann:
            return poisson_grassmann(f, g, self.track.bracket_side, self.ctx)
        return poisson_fo(f, g, self.ctx)

    def db(self, f: PhaseFunctional, g: PhaseFunctional) -> PhaseFunctional:
        if self.grassmann:
            return dirac_grassmann(f, g, self.track.bracket_side, self.ctx)
        return dirac_fo(f, g, self.ctx)

    def reduced_pb(self, f: PhaseFunctional, g: PhaseFunctional) -> PhaseFunctional:
        return poisson_reduced(f, g, self.ctx, self.track.bracket_side)

    def _vectors(self, i: int):
        g = self.grassmann
        gs, lat = self.ctx.gamma, self.lattice
        return {
            "psi": field_vector("psi", i, g),
            "psibar": field_vector("psibar", i, g),
            "pi": field_vector("pi", i, g),
            "pibar": field_vector("pibar", i, g),
            "u": field_vector("dpsi", i, g),
            "ubar": field_vector("dpsibar", i, g),
            "S": slashed_vector("psi", i, gs, lat, grassmann=g),
            "Sbar": slashed_vector("psibar", i, gs, lat, grassmann=g),
            "Spibar": slashed_vector("pibar", i, gs, lat, grassmann=g),
            "Spi": slashed_vector("pi", i, gs, lat, grassmann=g),
        }

    # momenta and constraints
    def momenta(self, lagrangian: LagrangianKind = LagrangianKind.IZ) -> dict[FieldAtom, PhaseFunctional]:
        flip = self.flip_momentum_sign and LagrangianKind(lagrangian) is LagrangianKind.IZ
        return build_momenta(self.track, lagrangian, self.ctx, flip_pi_sign=flip)

    def check_momenta(self, lagrangian: LagrangianKind = LagrangianKind.IZ) -> list[Check]:
        """Each closed-form momentum must equal the velocity derivative of the Lagrangian."""
        lag = lagrangian_functional(self.track, lagrangian, self.ctx)
        side = self.track.derivative_side
        inv_v = Fraction(1) / self.ctx.v
        grad = lag.gradient(side, ("dpsi", "dpsibar"))
        bad = {"pi": [], "pibar": []}
        for mom_atom, closed in self.momenta(lagrangian).items():
            vel = "dpsi" if mom_atom.kind == "pi" else "dpsibar"
            d = grad.get(mom_atom.partner(vel), PhaseFunctional.zero(self.grassmann)).scale(inv_v)
            if d != closed:
                bad[mom_atom.kind].append(str(mom_atom))
        return [Check(f"momentum_definition:{k}", not v, v[:4] or None) for k, v in bad.items()]

    def constraints(self) -> ConstraintSet:
        if self._constraints is None:
            mom = self.momenta()
            phibar, phi = {}, {}
            for i in self.lattice.sites():
                for a in range(4):
                    phibar[(a, i)] = self.atom("pi", a, i) - mom[FieldAtom("pi", a, i)]
                    phi[(a, i)] = self.atom("pibar", a, i) - mom[FieldAtom("pibar", a, i)]
            self._constraints = ConstraintSet(self.track, phibar, phi)
        return self._constraints

    def check_constraint_forms(self) -> list[Check]:
        """Compare the constraints with the standard table for each formalism."""
        a = I * self.ctx.constants.hbar_c / 2
        sign = {"spinorial": (-1, 1), "grassmann-l": (1, 1), "grassmann-r": (-1, -1)}[self.track.value]
        cs = self.constraints()
        ok_bar = all(f == self.atom("pi", c, s) + self.atom("psibar", c, s, sign[0] * a)
                     for (c, s), f in cs.phibar.items())
        ok = all(f == self.atom("pibar", c, s) + self.atom("psi", c, s, sign[1] * a)
                 for (c, s), f in cs.phi.items())
        return [Check("constraint_form:phibar", ok_bar), Check("constraint_form:phi", ok),
                Check("constraint_parity", cs.parity_ok())]

    # Hamiltonians
    def hamiltonian(self, which: HamiltonianKind | str = HamiltonianKind.CANONICAL) -> PhaseFunctional:
        which = HamiltonianKind(which)
        if which is HamiltonianKind.REDUCED:
            if self._chart is None:
                raise ChartNotBuiltError("build the reduced chart before asking for the reduced Hamiltonian")
            return self.reduced_hamiltonian()
        if which is HamiltonianKind.BD:
            if self.grassmann:
                raise ValueError("the BD Hamiltonian belongs to the spinorial formalism")
            return integrate(lambda i: self._bd_density(i), self.lattice)
        if which is HamiltonianKind.PRIMARY:
            return self.hamiltonian(HamiltonianKind.CANONICAL) + self.multiplier_terms()
        return integrate(self._canonical_density, self.lattice)

    def _mass_scale(self) -> GaussianRational:
        k = self.ctx.constants
        return I * k.mass * k.c / k.hbar

    def _canonical_density(self, i: int) -> PhaseFunctional:
        v = self._vectors(i)
        k = self.ctx.constants
        a = I * k.hbar_c / 2
        im = self._mass_scale()
        if self.track is FormalismTrack.SPINORIAL:
            return ((dot(v["Sbar"], v["psi"]) - dot(v["psibar"], v["S"])).scale(a)
                    + dot(v["psibar"], v["psi"]).scale(k.mass * k.c ** 2))
        if self.track is FormalismTrack.GRASSMANN_L:
            kin = -(dot(v["S"], v["pi"]) + dot(v["Sbar"], v["pibar"]))
            if self.mass_terms == "printed":
                mass = dot(v["psi"], v["pi"]) + dot(v["psibar"], v["pibar"])
            else:
                mass = dot(v["psibar"], v["pibar"]) - dot(v["psi"], v["pi"])
            return kin + mass.scale(im)
        kin = -(dot(v["pi"], v["S"]) + dot(v["pibar"], v["Sbar"]))
        if self.mass_terms == "printed":
            mass = dot(v["pi"], v["psi"]) + dot(v["pibar"], v["psibar"])
        else:
            mass = dot(v["pibar"], v["psibar"]) - dot(v["pi"], v["psi"])
        return kin + mass.scale(im)

    def iz_momentum_form(self) -> PhaseFunctional:
        """Spinorial Hamiltonian written with momenta (weakly equal to the canonical one)."""
        if self.grassmann:
            raise ValueError("spinorial formalism only")
        im = self._mass_scale()

        def density(i):
            v = self._vectors(i)
            return (-dot(v["pi"], v["S"]) - dot(v["Sbar"], v["pibar"])
                    - (dot(v["pi"], v["psi"]) - dot(v["psibar"], v["pibar"])).scale(im))

        return integrate(density, self.lattice)

    def _bd_density(self, i: int, psi: str = "psi", pi: str = "pi") -> PhaseFunctional:
        g = self.grassmann
        psis = field_vector(psi, i, g)
        pis = field_vector(pi, i, g)
        s = slashed_vector(psi, i, self.ctx.gamma, self.lattice, grassmann=g)
        return -dot(pis, s) - dot(pis, psis).scale(self._mass_scale())

    def multiplier_terms(self) -> PhaseFunctional:
        cs = self.constraints()
        g = self.grassmann

        def density(i):
            phibar = [cs.phibar[(a, i)] for a in range(4)]
            phi = [cs.phi[(a, i)] for a in range(4)]
            u = field_vector("dpsi", i, g)
            ubar = field_vector("dpsibar", i, g)
            if self.track is FormalismTrack.SPINORIAL:
                return dot(phibar, u) + dot(ubar, phi)
            if self.track is FormalismTrack.GRASSMANN_L:
                return dot(u, phibar) + dot(ubar, phi)
            return dot(phibar, u) + dot(phi, ubar)

        return integrate(density, self.lattice)

    def liouville_form(self) -> PhaseFunctional:
        g = self.grassmann

        def density(i):
            pi, pibar = field_vector("pi", i, g), field_vector("pibar", i, g)
            u, ubar = field_vector("dpsi", i, g), field_vector("dpsibar", i, g)
            if self.track is FormalismTrack.SPINORIAL:
                return dot(pi, u) + dot(ubar, pibar)
            if self.track is FormalismTrack.GRASSMANN_L:
                return dot(u, pi) + dot(ubar, pibar)
            return dot(pi, u) + dot(pibar, ubar)

        return integrate(density, self.lattice)

    def on_shell(self, f: PhaseFunctional) -> PhaseFunctional:
        return f.substitute(self.momenta())

    def check_hamiltonian_structure(self) -> list[Check]:
        hp = self.hamiltonian(HamiltonianKind.PRIMARY)
        hc = self.hamiltonian(HamiltonianKind.CANONICAL)
        diff = hp - hc
        inv_v = Fraction(1) / self.ctx.v
        side = self.track.derivative_side
        cs = self.constraints()
        only_mult = all(any(x.kind in ("dpsi", "dpsibar") for x in key) for key in diff.terms)
        # the multiplier sits on the side the derivative acts from, so no reordering sign
        coeff_ok = True
        for (a, i), phibar in cs.phibar.items():
            d = diff.partial(FieldAtom("dpsi", a, i), side).scale(inv_v)
            coeff_ok &= d == phibar
        for (a, i), phi in cs.phi.items():
            d = diff.partial(FieldAtom("dpsibar", a, i), side).scale(inv_v)
            coeff_ok &= d == phi
        legendre = hp - (self.liouville_form()
                         - lagrangian_functional(self.track, LagrangianKind.IZ, self.ctx))
        exact_zero = legendre.is_zero()
        weak_zero = self.on_shell(legendre).is_zero()
        checks = [Check("primary_decomposition", only_mult and coeff_ok)]
        if self.track is FormalismTrack.SPINORIAL:
            checks.append(Check("legendre_transform", exact_zero))
        else:
            checks.append(Check("legendre_transform_weak", weak_zero))
        return checks

    # constraint matrix
    def constraint_matrix(self) -> ConstraintMatrix:
        cs = self.constraints()
        site = 0
        comps = range(4)
        block = [[None, None], [None, None]]
        ordered = [cs.phibar, cs.phi]
        for r in range(2):
            for c in range(2):
                vals = set()
                for a in comps:
                    val = self.pb(ordered[r][(a, site)], ordered[c][(a, site)])
                    vals.add(delta_value(val, self.ctx))
                    # locality and diagonal structure in the spinor index
                    other = self.pb(ordered[r][(a, site)], ordered[c][((a + 1) % 4, site)])
                    far = self.pb(ordered[r][(a, site)], ordered[c][(a, (site + 1) % self.lattice.n_sites)])
                    if not (other.is_zero() and far.is_zero()):
                        raise InconsistentSystemError("constraint brackets are not proportional to delta")
                if len(vals) != 1:
                    raise InconsistentSystemError("constraint brackets depend on the spinor index")
                block[r][c] = vals.pop()
        try:
            inv = inverse(block)
        except SingularMatrixError as exc:
            raise SingularMatrixError(
                "constraint matrix is singular: a first-class constraint appeared") from exc
        # M = A/v and the distributional inverse kernel is A^-1/v, so
        # sum_k v (A/v)(A^-1/v) = I/v, i.e. A A^-1 = I at coefficient level.
        prod = [[sum((block[r][k] * inv[k][c] for k in range(2)), gr(0)) for c in range(2)]
                for r in range(2)]
        ident = all(prod[r][c] == (1 if r == c else 0) for r in range(2) for c in range(2))
        return ConstraintMatrix(block, inv, 2 * 4 * self.lattice.n_sites, ident)

    # consistency conditions
    def _multiplier_atoms(self) -> list[FieldAtom]:
        out = []
        for kind in ("dpsi", "dpsibar"):
            for i in self.lattice.sites():
                for a in range(4):
                    out.append(FieldAtom(kind, a, i))
        return out

    def run_consistency(self) -> ConsistencyResult:
        hp = self.hamiltonian(HamiltonianKind.PRIMARY)
        cs = self.constraints()
        rows = cs.ordered()
        mults = self._multiplier_atoms()
        col = {m: j for j, m in enumerate(mults)}
        residuals = {}
        k_matrix = []
        rests = []
        for name, a, i, c in rows:
            r = self.pb(c, hp)
            residuals[(name, a, i)] = r
            row = [gr(0)] * len(mults)
            rest = {}
            for key, coef in r.terms.items():
                if any(x.kind in ("dpsi", "dpsibar") for x in key):
                    if len(key) != 1:
                        raise InconsistentSystemError("multipliers enter the consistency condition nonlinearly")
                    row[col[key[0]]] += coef
                else:
                    rest[key] = coef
            k_matrix.append(row)
            rests.append(PhaseFunctional(rest, self.grassmann, _canonical=True))
        try:
            k_inv = inverse(k_matrix)
        except SingularMatrixError as exc:
            raise InconsistentSystemError("consistency conditions cannot fix the multipliers") from exc
        solutions = {}
        for b, m in enumerate(mults):
            acc = PhaseFunctional.zero(self.grassmann)
            for j, w in enumerate(k_inv[b]):
                if w and not rests[j].is_zero():
                    acc = acc - rests[j].scale(w)
            solutions[m] = acc
        total = hp.substitute(solutions)
        closed = all(r.substitute(solutions).is_zero() for r in residuals.values())
        checks = [Check("multipliers_solve_consistency", closed)]
        if self.track is FormalismTrack.SPINORIAL:
            checks.append(Check("residual_is_dirac_operator", self._residual_matches(residuals)))
        return ConsistencyResult(residuals, solutions, total, checks)

    def dirac_operator_residuals(self) -> dict[tuple[str, int, int], PhaseFunctional]:
        """-c^2 (i(hbar/c) dslash psibar + m psibar) and c^2 (i(hbar/c) dslash psi - m psi).

        Built straight from the stencil, with dslash = (multiplier slot) + spatial part.
        """
        k = self.ctx.constants
        ihc = I * k.hbar_c
        mc2 = k.mass * k.c ** 2
        out = {}
        for i in self.lattice.sites():
            v = self._vectors(i)
            for a in range(4):
                out[("phibar", a, i)] = ((v["ubar"][a] + v["Sbar"][a]).scale(-ihc)
                                         - v["psibar"][a].scale(mc2))
                out[("phi", a, i)] = ((v["u"][a] + v["S"][a]).scale(ihc)
                                      - v["psi"][a].scale(mc2))
        return out

    def _residual_matches(self, residuals) -> bool:
        want = self.dirac_operator_residuals()
        return all(residuals[key] == want[key] for key in want)

    def dirac_flow(self, f_atom: FieldAtom) -> PhaseFunctional:
        """Dirac-equation right-hand side for d/dx0 of a canonical atom, on shell."""
        k = self.ctx.constants
        im = self._mass_scale()
        i, a = f_atom.site, f_atom.component
        v = self._vectors(i)
        psi_flow = -v["S"][a] - v["psi"][a].scale(im)
        psibar_flow = -v["Sbar"][a] + v["psibar"][a].scale(im)
        kp, kbar = momentum_coefficients(self.track, LagrangianKind.IZ, k)
        return {"psi": psi_flow, "psibar": psibar_flow, "pi": psibar_flow.scale(kp),
                "pibar": psi_flow.scale(kbar)}[f_atom.kind]

    def weak_evolution(self, sites: Iterable[int] | None = None,
                       consistency: ConsistencyResult | None = None) -> list[Check]:
        """On shell, {f, H_T}, {f, H_P}_D and the Dirac equation agree for canonical atoms."""
        consistency = consistency or self.run_consistency()
        hp = self.hamiltonian(HamiltonianKind.PRIMARY)
        sign = self.track.flow_sign
        sites = list(self.lattice.sites() if sites is None else sites)
        bad_pb, bad_db = [], []
        for i in sites:
            for a in range(4):
                for kind in CANONICAL_KINDS:
                    at = FieldAtom(kind, a, i)
                    f = PhaseFunctional.of_atom(at, 1, self.grassmann)
                    want = self.dirac_flow(at)
                    via_pb = self.on_shell(self.pb(f, consistency.total_hamiltonian).scale(sign))
                    via_db = self.on_shell(self.db(f, hp).scale(sign))
                    if via_pb != want:
                        bad_pb.append(str(at))
                    if via_db != want:
                        bad_db.append(str(at))
        return [Check("weak_evolution:poisson_total", not bad_pb, bad_pb[:4] or None),
                Check("weak_evolution:dirac_primary", not bad_db, bad_db[:4] or None)]

    # canonical data
    def expected_canonical_brackets(self) -> dict[tuple[str, str, str], GaussianRational]:
        """(bracket, kind, kind) -> coefficient of delta for the standard tables."""
        hc = self.ctx.constants.hbar_c
        half = Fraction(1, 2)
        zeros = [("psi", "psi"), ("psibar", "psibar"), ("pi", "pi"), ("pibar", "pibar")]
        if self.track is FormalismTrack.SPINORIAL:
            d = {("psi", "psibar"): -I / hc, ("pi", "pibar"): I * hc / 4,
                 ("psi", "pi"): gr(half), ("psibar", "pibar"): gr(half),
                 ("psi", "pibar"): gr(0), ("psibar", "pi"): gr(0)}
            p = {("psi", "pi"): gr(1), ("psibar", "pibar"): gr(1), ("psi", "psibar"): gr(0),
                 ("pi", "pibar"): gr(0)}
        else:
            s = 1 if self.track is FormalismTrack.GRASSMANN_L else -1
            d = {}
            for x, y, val in (("psi", "psibar", -s * I / hc), ("pi", "pibar", s * I * hc / 4),
                              ("psi", "pi", gr(-half)), ("psibar", "pibar", gr(-half))):
                d[(x, y)] = d[(y, x)] = val
            p = {}
            for x, y, val in (("psi", "pi", gr(-1)), ("psibar", "pibar", gr(-1)),
                              ("psi", "psibar", gr(0)), ("pi", "pibar", gr(0))):
                p[(x, y)] = p[(y, x)] = val
        for z in zeros:
            d.setdefault(z, gr(0))
            p.setdefault(z, gr(0))
        out = {("dirac",) + k: v for k, v in d.items()}
        out.update({("poisson",) + k: v for k, v in p.items()})
        return out

    def canonical_brackets(self) -> list[dict]:
        rows = []
        for (which, x, y), want in sorted(self.expected_canonical_brackets().items()):
            fn = self.db if which == "dirac" else self.pb
            got = delta_value(fn(self.atom(x), self.atom(y)), self.ctx)
            off = fn(self.atom(x, 0, 0), self.atom(y, 1, 0))
            far = fn(self.atom(x, 0, 0), self.atom(y, 0, 1))
            ok = got == want and off.is_zero() and far.is_zero()
            rows.append({"bracket": which, "lhs": x, "rhs": y, "value": str(got),
                         "expected": str(want), "ok": ok})
        return rows

    # reduced phase space
    def _chart_rows(self) -> dict[str, dict[str, GaussianRational]]:
        """Coefficients of psi1, pi1, psi2, pi2 in (psi, psibar, pi, pibar) at one point."""
        hc = self.ctx.constants.hbar_c
        a = I * hc / 2
        # phi and phibar at a point: pibar - kbar psi, pi - k psibar
        k, kbar = momentum_coefficients(self.track, LagrangianKind.IZ, self.ctx.constants)
        if self.flip_momentum_sign:
            k = -k
        phi = {"pibar": gr(1), "psi": -kbar}
        phibar = {"pi": gr(1), "psibar": -k}
        if self.track is FormalismTrack.SPINORIAL:
            psi1 = {"psi": gr(Fraction(1, 2)), "pibar": I / hc}
            pi1 = {"psibar": a, "pi": gr(1)}
            s2 = -I / hc
        elif self.track is FormalismTrack.GRASSMANN_L:
            psi1 = {"psi": gr(Fraction(1, 2)), "pibar": I / hc}
            pi1 = {"psibar": -a, "pi": gr(1)}
            s2 = -I / hc
        else:
            psi1 = {"psi": gr(Fraction(1, 2)), "pibar": -I / hc}
            pi1 = {"psibar": a, "pi": gr(1)}
            s2 = I / hc
        psi2 = {kk: s2 * vv for kk, vv in phi.items()}
        return {"psi1": psi1, "pi1": pi1, "psi2": psi2, "pi2": phibar}

    def reduced_chart(self) -> ReducedChart:
        if self._chart is not None:
            return self._chart
        rows = self._chart_rows()
        local = [[rows[n].get(o, gr(0)) for o in _OLD_ORDER] for n in _NEW_ORDER]
        local_inv = inverse(local)
        g = self.grassmann
        forward, back = {}, {}
        for i in self.lattice.sites():
            for a in range(4):
                for r, n in enumerate(_NEW_ORDER):
                    forward[FieldAtom(n, a, i)] = PhaseFunctional(
                        {(FieldAtom(o, a, i),): local[r][c] for c, o in enumerate(_OLD_ORDER)}, g)
                for r, o in enumerate(_OLD_ORDER):
                    back[FieldAtom(o, a, i)] = PhaseFunctional(
                        {(FieldAtom(n, a, i),): local_inv[r][c] for c, n in enumerate(_NEW_ORDER)}, g)
        self._chart = ReducedChart(self.track, forward, back, local, local_inv)
        return self._chart

    def check_chart(self) -> list[Check]:
        chart = self.reduced_chart()
        cs = self.constraints()
        hc = self.ctx.constants.hbar_c
        s2 = I / hc if self.track is FormalismTrack.GRASSMANN_R else -I / hc
        ident = (chart.forward[FieldAtom("psi2", 0, 0)] == cs.phi[(0, 0)].scale(s2)
                 and chart.forward[FieldAtom("pi2", 0, 0)] == cs.phibar[(0, 0)])
        pair = -1 if self.grassmann else 1
        want = {("psi1", "pi1"): pair, ("psi2", "pi2"): pair}
        if self.grassmann:
            want[("pi1", "psi1")] = pair
            want[("pi2", "psi2")] = pair
        else:
            want[("pi1", "psi1")] = -1
            want[("pi2", "psi2")] = -1
        bad = []
        for x in _NEW_ORDER:
            for y in _NEW_ORDER:
                fx = chart.forward[FieldAtom(x, 0, 0)]
                fy = chart.forward[FieldAtom(y, 0, 0)]
                got = self.pb(fx, fy)
                val = delta_value(got, self.ctx)
                if val != want.get((x, y), 0):
                    bad.append(f"{{{x},{y}}}={val}")
                far = self.pb(fx, chart.forward[FieldAtom(y, 0, 1)])
                if not far.is_zero():
                    bad.append(f"{{{x},{y}}} nonlocal")
        # round trip on the local coefficient matrices
        prod = [[sum((chart.local_matrix[r][k] * chart.local_inverse[k][c] for k in range(4)), gr(0))
                 for c in range(4)] for r in range(4)]
        round_trip = all(prod[r][c] == (1 if r == c else 0) for r in range(4) for c in range(4))
        return [Check("chart_constraint_identification", ident),
                Check("chart_canonical_pairs", not bad, bad[:4] or None),
                Check("chart_round_trip", round_trip)]

    def reduced_hamiltonian(self) -> PhaseFunctional:
        """Canonical Hamiltonian in chart variables with psi2 = pi2 = 0."""
        chart = self.reduced_chart()
        h = self.hamiltonian(HamiltonianKind.CANONICAL)
        if self.track is FormalismTrack.SPINORIAL:
            h = self.iz_momentum_form()
        return chart.to_new(h).restrict(lambda x: x.kind in ("psi1", "pi1"))

    def reduced_hamiltonian_closed_form(self) -> PhaseFunctional:
        """1/2 sum[(dslash pi1) psi1 - pi1 (dslash psi1)] - (i m c / hbar) pi1 psi1."""
        if self.grassmann:
            raise ValueError("closed form given for the spinorial formalism only")
        gs, lat = self.ctx.gamma, self.lattice
        im = self._mass_scale()

        def density(i):
            psi1 = field_vector("psi1", i)
            pi1 = field_vector("pi1", i)
            s = slashed_vector("psi1", i, gs, lat)
            sbar = slashed_vector("pi1", i, gs, lat)
            return ((dot(sbar, psi1) - dot(pi1, s)).scale(Fraction(1, 2))
                    - dot(pi1, psi1).scale(im))

        return integrate(density, lat)

    def bd_in_chart(self) -> PhaseFunctional:
        """H_BD with (psi, pi) replaced by (psi1, pi1)."""
        return integrate(lambda i: self._bd_density(i, "psi1", "pi1"), self.lattice)

    def divergence_densities(self) -> list[PhaseFunctional]:
        """Per-site 1/2 [(dslash pi1) psi1 + pi1 (dslash psi1)]; their lattice sum vanishes."""
        gs, lat = self.ctx.gamma, self.lattice
        out = []
        for i in lat.sites():
            psi1 = field_vector("psi1", i)
            pi1 = field_vector("pi1", i)
            s = slashed_vector("psi1", i, gs, lat)
            sbar = slashed_vector("pi1", i, gs, lat)
            out.append((dot(sbar, psi1) + dot(pi1, s)).scale(Fraction(1, 2) * lat.cell_volume))
        return out

    def random_chart_functional(self, rng: random.Random, n_terms: int = 4,
                                parity: int | None = None) -> PhaseFunctional:
        """Random degree <= 2 functional of chart atoms near site 0."""
        sites = [0, 1, self.lattice.n_sites - 1]
        atoms = [FieldAtom(k, a, s) for k in _NEW_ORDER for a in range(4) for s in sites]
        return random_functional(rng, atoms, self.grassmann, n_terms, parity)

    def verify_reduction(self, n_random: int = 200, seed: int = 0) -> list[Check]:
        chart = self.reduced_chart()
        rng = random.Random(seed)
        mismatches = []
        for n in range(n_random):
            if self.grassmann:
                pf, pg = rng.randint(0, 1), rng.randint(0, 1)
            else:
                pf = pg = None
            f = self.random_chart_functional(rng, parity=pf)
            g = self.random_chart_functional(rng, parity=pg)
            full = chart.to_new(self.db(chart.to_old(f), chart.to_old(g)))
            reduced = self.reduced_pb(f, g)
            if full != reduced:
                mismatches.append(n)
        vanish_bad = []
        for kind in ("psi2", "pi2"):
            c = chart.forward[FieldAtom(kind, 0, 0)]
            for n in range(max(1, n_random // 10)):
                parity = rng.randint(0, 1) if self.grassmann else None
                g = chart.to_old(self.random_chart_functional(rng, parity=parity))
                if not self.db(c, g).is_zero() or not self.db(g, c).is_zero():
                    vanish_bad.append(f"{kind}#{n}")
        return [Check("reduction_dirac_equals_reduced_poisson", not mismatches,
                      {"trials": n_random, "mismatches": mismatches[:5]}),
                Check("reduction_constraint_brackets_vanish", not vanish_bad, vanish_bad[:4] or None)]

    # full pipeline
    def run(self, n_random: int = 50, seed: int = 0) -> dict:
        checks: list[Check] = []
        checks += self.check_momenta()
        checks += self.check_constraint_forms()
        report: dict = {"schema": REPORT_SCHEMA, "track": self.track.value,
                        "representation": self.ctx.gamma.name,
                        "lattice": {"dimension": self.lattice.dimension,
                                    "sites_per_axis": self.lattice.sites_per_axis,
                                    "dx": str(self.lattice.spacing)},
                        "constants": {"hbar": str(self.ctx.constants.hbar),
                                      "c": str(self.ctx.constants.c),
                                      "mass": str(self.ctx.constants.mass)},
                        "mass_terms": self.mass_terms if self.grassmann else None}
        cs = self.constraints()
        report["constraints_site0"] = {
            f"{name}_{a}": f.to_json() for name, a, i, f in cs.ordered() if i == 0}
        try:
            cm = self.constraint_matrix()
        except SingularMatrixError as exc:
            checks.append(Check("constraint_matrix_invertible", False, str(exc)))
            report["checks"] = [c.to_json() for c in checks]
            report["failures"] = [c.name for c in checks if not c.ok]
            return report
        report["constraint_matrix"] = cm.to_json()
        checks.append(Check("constraint_matrix_inverse", cm.product_is_identity))
        checks.append(Check("constraint_matrix_values", self._matrix_matches(cm)))
        checks += self.check_hamiltonian_structure()
        cons = self.run_consistency()
        checks += cons.checks
        report["multipliers_site0"] = {str(m): f.to_json() for m, f in cons.multipliers.items()
                                       if m.site == 0}
        checks += self.weak_evolution(sites=[0], consistency=cons)
        table = self.canonical_brackets()
        report["canonical_brackets"] = table
        checks.append(Check("canonical_brackets", all(r["ok"] for r in table)))
        checks += self.check_chart()
        checks += self.verify_reduction(n_random, seed)
        report["checks"] = [c.to_json() for c in checks]
        report["failures"] = [c.name for c in checks if not c.ok]
        return report

    def expected_matrix(self) -> list[list[GaussianRational]]:
        hc = self.ctx.constants.hbar_c
        if self.track is FormalismTrack.SPINORIAL:
            return [[gr(0), -I * hc], [I * hc, gr(0)]]
        s = 1 if self.track is FormalismTrack.GRASSMANN_L else -1
        return [[gr(0), -s * I * hc], [-s * I * hc, gr(0)]]

    def _matrix_matches(self, cm: ConstraintMatrix) -> bool:
        return cm.block == self.expected_matrix()


def random_functional(rng: random.Random, atoms: Sequence[FieldAtom], grassmann: bool,
                      n_terms: int = 4, parity: int | None = None) -> PhaseFunctional:
    """Random functional with small Gaussian-integer coefficients.

    Commuting: constants, single atoms and row x column products.
    Grassmann: homogeneous of the requested parity (degree 1 if odd, 0 or 2 if even).
    """
    rows = [a for a in atoms if a.is_row]
    cols = [a for a in atoms if not a.is_row]
    terms: dict = {}

    def coef():
        while True:
            c = GaussianRational(rng.randint(-3, 3), rng.randint(-3, 3))
            if c:
                return c

    for _ in range(n_terms):
        if grassmann:
            if parity == 1:
                key = (rng.choice(atoms),)
            else:
                key = tuple(rng.sample(list(atoms), 2)) if rng.random() < 0.85 else ()
        else:
            r = rng.random()
            if r < 0.7:
                key = (rng.choice(rows), rng.choice(cols))
            elif r < 0.95:
                key = (rng.choice(list(atoms)),)
            else:
                key = ()
        terms[key] = terms.get(key, 0) + coef()
    return PhaseFunctional(terms, grassmann)


__all__ = [
    "ChartNotBuiltError", "Check", "ConsistencyResult", "ConstraintMatrix", "ConstraintSet",
    "DiracBergmann", "FormalismTrack", "HamiltonianKind", "InconsistentSystemError",
    "LagrangianKind", "REPORT_SCHEMA", "ReducedChart", "build_momenta",
    "lagrangian_functional", "momentum_coefficients", "random_functional",
]
