"""Discretized phase space of the Dirac field.

Fields live on a periodic cubic lattice. A phase-space functional is a finite
sum of coefficient times an ordered product of field atoms. Two algebras share
the representation:

* commuting ("spinorial") functionals: atoms commute, degree is capped at 2
  and every quadratic term pairs a row-type atom with a column-type atom;
* Grassmann functionals: every atom is odd, terms are kept in a canonical
  atom order with the permutation sign folded into the coefficient.

Integrals become ``v * sum_sites`` and the delta function becomes
``delta_ij / v`` with ``v`` the cell volume, so a functional derivative is the
ordinary (or Grassmann) partial derivative divided by ``v``.
"""
from __future__ import annotations

import configparser
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from .exact import ONE, ZERO, GaussianRational, gr
from .gamma_algebra import GammaSet
from .grassmann import GrassmannElement, Parity

CANONICAL_KINDS = ("psi", "psibar", "pi", "pibar")
CHART_KINDS = ("psi1", "pi1", "psi2", "pi2")
MULTIPLIER_KINDS = ("dpsi", "dpsibar")
ALL_KINDS = CANONICAL_KINDS + CHART_KINDS + MULTIPLIER_KINDS
ROW_KINDS = frozenset({"psibar", "pi", "pi1", "pi2", "dpsibar"})

_KIND_RANK = {k: i for i, k in enumerate(
    ("psibar", "pi", "pi1", "pi2", "dpsibar", "psi", "pibar", "psi1", "psi2", "dpsi"))}

SIDES = ("plain", "left", "right")


class FactorOrderingError(ValueError):
    """A commuting functional term is not of the form row-type times column-type."""


class MissingAtomError(KeyError):
    pass


class FieldAtom(NamedTuple):
    kind: str
    component: int
    site: int

    @property
    def is_row(self) -> bool:
        return self.kind in ROW_KINDS

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return (_KIND_RANK[self.kind], self.site, self.component)

    def partner(self, kind: str) -> "FieldAtom":
        return FieldAtom(kind, self.component, self.site)

    def __str__(self) -> str:
        return f"{self.kind}_{self.component}({self.site})"


def atom(kind: str, component: int, site: int) -> FieldAtom:
    if kind not in _KIND_RANK:
        raise ValueError(f"unknown field kind {kind!r}")
    if not 0 <= component < 4:
        raise ValueError("spinor component must be 0..3")
    return FieldAtom(kind, component, site)


@dataclass(frozen=True)
class LatticeSpec:
    dimension: int = 1
    sites_per_axis: int = 8
    spacing: Fraction = Fraction(1)
    boundary: str = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "spacing", Fraction(self.spacing))
        if self.dimension not in (1, 2, 3):
            raise ValueError("lattice dimension must be 1, 2 or 3")
        if self.sites_per_axis < 1:
            raise ValueError("sites_per_axis must be positive")
        if self.spacing <= 0:
            raise ValueError("lattice spacing must be positive")
        if self.boundary != "periodic":
            raise ValueError("only periodic boundaries are supported")

    @property
    def cell_volume(self) -> Fraction:
        return self.spacing ** self.dimension

    @property
    def n_sites(self) -> int:
        return self.sites_per_axis ** self.dimension

    def sites(self) -> range:
        return range(self.n_sites)

    def coords(self, site: int) -> tuple[int, ...]:
        n = self.sites_per_axis
        out = []
        for _ in range(self.dimension):
            out.append(site % n)
            site //= n
        return tuple(out)

    def index(self, coords: Sequence[int]) -> int:
        n = self.sites_per_axis
        return sum((c % n) * n ** k for k, c in enumerate(coords))

    def neighbor(self, site: int, axis: int, step: int) -> int:
        c = list(self.coords(site))
        c[axis] += step
        return self.index(c)

    def require_stencil(self) -> None:
        if self.sites_per_axis < 3:
            raise ValueError("central differences need at least 3 sites per axis")


@dataclass(frozen=True)
class Constants:
    hbar: Fraction = Fraction(1)
    c: Fraction = Fraction(1)
    mass: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("hbar", "c", "mass"):
            val = Fraction(getattr(self, name))
            if val <= 0:
                raise ValueError(f"{name} must be strictly positive")
            object.__setattr__(self, name, val)

    @property
    def hbar_c(self) -> Fraction:
        return self.hbar * self.c


@dataclass(frozen=True)
class Context:
    """Everything a bracket or Hamiltonian needs besides its arguments."""

    lattice: LatticeSpec
    constants: Constants
    gamma: GammaSet

    @property
    def v(self) -> Fraction:
        return self.lattice.cell_volume


def _canon_commuting(atoms: tuple[FieldAtom, ...]) -> tuple[FieldAtom, ...]:
    if len(atoms) <= 1:
        return atoms
    if len(atoms) > 2:
        raise FactorOrderingError("commuting functionals are at most bilinear")
    a, b = atoms
    if a.is_row == b.is_row:
        raise FactorOrderingError(
            f"term {a} {b} does not pair a row-type atom with a column-type atom")
    return (a, b) if a.is_row else (b, a)


def _canon_grassmann(atoms: tuple[FieldAtom, ...]) -> tuple[int, tuple[FieldAtom, ...]]:
    if len(atoms) <= 1:
        return 1, atoms
    if len(set(atoms)) < len(atoms):
        return 0, ()
    keys = [a.sort_key for a in atoms]
    inversions = sum(1 for i, j in itertools.combinations(range(len(keys)), 2) if keys[i] > keys[j])
    ordered = tuple(sorted(atoms, key=lambda a: a.sort_key))
    return (-1 if inversions & 1 else 1), ordered


class PhaseFunctional:
    """Polynomial in field atoms with Gaussian-rational coefficients."""

    __slots__ = ("terms", "grassmann")

    def __init__(self, terms: Mapping[tuple[FieldAtom, ...], object] | None = None,
                 grassmann: bool = False, _canonical: bool = False):
        self.grassmann = grassmann
        if _canonical:
            self.terms = dict(terms or {})
            return
        out: dict[tuple[FieldAtom, ...], GaussianRational] = {}
        for atoms, c in (terms or {}).items():
            c = gr(c)
            if not c:
                continue
            atoms = tuple(atoms)
            if grassmann:
                sign, key = _canon_grassmann(atoms)
                if not sign:
                    continue
                if sign < 0:
                    c = -c
            else:
                key = _canon_commuting(atoms)
            prev = out.get(key)
            out[key] = c if prev is None else prev + c
        self.terms = {k: c for k, c in out.items() if c}

    # construction helpers
    @classmethod
    def zero(cls, grassmann: bool = False) -> "PhaseFunctional":
        return cls({}, grassmann, _canonical=True)

    @classmethod
    def constant(cls, c, grassmann: bool = False) -> "PhaseFunctional":
        return cls({(): c}, grassmann)

    @classmethod
    def of_atom(cls, a: FieldAtom, c=1, grassmann: bool = False) -> "PhaseFunctional":
        return cls({(a,): c}, grassmann)

    # algebra
    def _same(self, other: "PhaseFunctional") -> None:
        if other.grassmann != self.grassmann:
            raise TypeError("cannot mix commuting and Grassmann functionals")

    def __add__(self, other):
        if not isinstance(other, PhaseFunctional):
            other = PhaseFunctional.constant(other, self.grassmann)
        self._same(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            prev = out.get(k)
            s = c if prev is None else prev + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return PhaseFunctional(out, self.grassmann, _canonical=True)

    __radd__ = __add__

    def __neg__(self):
        return PhaseFunctional({k: -c for k, c in self.terms.items()}, self.grassmann,
                               _canonical=True)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> "PhaseFunctional":
        s = gr(s)
        if not s:
            return PhaseFunctional.zero(self.grassmann)
        return PhaseFunctional({k: s * c for k, c in self.terms.items()}, self.grassmann,
                               _canonical=True)

    def __mul__(self, other):
        if not isinstance(other, PhaseFunctional):
            return self.scale(other)
        self._same(other)
        out: dict = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                key = ka + kb
                c = ca * cb
                out[key] = out[key] + c if key in out else c
        return PhaseFunctional(out, self.grassmann)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if isinstance(other, PhaseFunctional):
            return self.grassmann == other.grassmann and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # inspection
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def atoms(self) -> set[FieldAtom]:
        return {a for k in self.terms for a in k}

    def constant_term(self) -> GaussianRational:
        return self.terms.get((), ZERO)

    @property
    def parity(self) -> Parity:
        if not self.grassmann:
            return Parity.EVEN
        grades = {len(k) & 1 for k in self.terms}
        if grades == {1}:
            return Parity.ODD
        if grades <= {0}:
            return Parity.EVEN
        return Parity.MIXED

    def is_factor_ordered(self) -> bool:
        if self.grassmann:
            return True
        return all(len(k) < 2 or (k[0].is_row and not k[1].is_row) for k in self.terms)

    # calculus
    def partial(self, a: FieldAtom, side: str = "plain") -> "PhaseFunctional":
        _check_side(side, self.grassmann)
        out = {}
        for key, c in self.terms.items():
            if a not in key:
                continue
            p = key.index(a)
            rest = key[:p] + key[p + 1:]
            if side == "left" and p & 1:
                c = -c
            elif side == "right" and (len(key) - 1 - p) & 1:
                c = -c
            out[rest] = out[rest] + c if rest in out else c
        return PhaseFunctional({k: c for k, c in out.items() if c}, self.grassmann,
                               _canonical=True)

    def gradient(self, side: str = "plain",
                 kinds: Iterable[str] | None = None) -> dict[FieldAtom, "PhaseFunctional"]:
        """All nonzero partial derivatives, keyed by atom."""
        _check_side(side, self.grassmann)
        kinds = None if kinds is None else frozenset(kinds)
        acc: dict[FieldAtom, dict] = {}
        for key, c in self.terms.items():
            n = len(key)
            for p, a in enumerate(key):
                if kinds is not None and a.kind not in kinds:
                    continue
                rest = key[:p] + key[p + 1:]
                cc = c
                if side == "left" and p & 1:
                    cc = -c
                elif side == "right" and (n - 1 - p) & 1:
                    cc = -c
                d = acc.setdefault(a, {})
                d[rest] = d[rest] + cc if rest in d else cc
        return {a: PhaseFunctional({k: c for k, c in d.items() if c}, self.grassmann,
                                   _canonical=True)
                for a, d in acc.items() if any(d.values())}

    def substitute(self, mapping: Mapping[FieldAtom, "PhaseFunctional"]) -> "PhaseFunctional":
        """Replace atoms by functionals, keeping the factor order of each term."""
        out = PhaseFunctional.zero(self.grassmann)
        for key, c in self.terms.items():
            if not any(a in mapping for a in key):
                out = out + PhaseFunctional({key: c}, self.grassmann, _canonical=True)
                continue
            prod = PhaseFunctional.constant(c, self.grassmann)
            for a in key:
                prod = prod * (mapping[a] if a in mapping
                               else PhaseFunctional.of_atom(a, 1, self.grassmann))
            out = out + prod
        return out

    def evaluate(self, values: Mapping[FieldAtom, object], exact: bool = False):
        """Substitute numbers (commuting) or GrassmannElements (Grassmann)."""
        total = None
        for key, c in self.terms.items():
            coef = c if exact else complex(c)
            val = None
            for a in key:
                try:
                    x = values[a]
                except KeyError:
                    raise MissingAtomError(f"no value for atom {a}") from None
                val = x if val is None else val * x
            term = coef if val is None else (val * coef if isinstance(val, GrassmannElement)
                                             else coef * val)
            total = term if total is None else total + term
        if total is None:
            return ZERO if exact else 0j
        return total

    def restrict(self, pred: Callable[[FieldAtom], bool]) -> "PhaseFunctional":
        """Drop every term containing an atom for which pred is false."""
        return PhaseFunctional({k: c for k, c in self.terms.items() if all(pred(a) for a in k)},
                               self.grassmann, _canonical=True)

    # presentation
    def sorted_terms(self) -> list[tuple[tuple[FieldAtom, ...], GaussianRational]]:
        return sorted(self.terms.items(), key=lambda kv: (len(kv[0]), [a.sort_key for a in kv[0]]))

    def to_json(self) -> list[dict]:
        return [{"coefficient": c.to_pair(), "atoms": [list(a) for a in k]}
                for k, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, data: Sequence[Mapping], grassmann: bool = False) -> "PhaseFunctional":
        return cls({tuple(FieldAtom(*a) for a in t["atoms"]):
                    GaussianRational.from_pair(t["coefficient"]) for t in data}, grassmann)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for k, c in self.sorted_terms():
            mono = " ".join(str(a) for a in k)
            parts.append(f"({c})" + (f" {mono}" if mono else ""))
        return " + ".join(parts)


def _check_side(side: str, grassmann: bool) -> None:
    if side not in SIDES:
        raise ValueError(f"unknown derivative side {side!r}")
    if grassmann and side == "plain":
        raise ValueError("Grassmann functionals need a left or right derivative")
    if not grassmann and side != "plain":
        raise ValueError("commuting functionals only take the plain derivative")


def functional_derivative(f: PhaseFunctional, a: FieldAtom, side: str,
                          lattice: LatticeSpec) -> PhaseFunctional:
    """delta F / delta chi(r_i) = (1/v) dF/dchi_i."""
    return f.partial(a, side).scale(Fraction(1) / lattice.cell_volume)


def evaluate(f: PhaseFunctional, cfg: "FieldConfig"):
    return f.evaluate(cfg.values, exact=cfg.exact)


def field_vector(kind: str, site: int, grassmann: bool = False) -> list[PhaseFunctional]:
    return [PhaseFunctional.of_atom(FieldAtom(kind, a, site), 1, grassmann) for a in range(4)]


def dot(xs: Sequence[PhaseFunctional], ys: Sequence[PhaseFunctional]) -> PhaseFunctional:
    """Componentwise contraction sum_a xs[a] ys[a], in that factor order."""
    out = PhaseFunctional.zero(xs[0].grassmann)
    for x, y in zip(xs, ys):
        out = out + x * y
    return out


def slashed_spatial_derivative(kind: str, component: int, site: int, gs: GammaSet,
                               lattice: LatticeSpec, axis: int | None = None,
                               grassmann: bool = False) -> PhaseFunctional:
    """Component of gamma^mu d_mu chi (column kinds) or d_mu chi gamma^mu (row kinds).

    The sum runs over all spatial axes unless ``axis`` (0-based) selects one.
    d_mu is the periodic central difference (chi_{i+1} - chi_{i-1}) / (2 dx).
    """
    lattice.require_stencil()
    row = kind in ROW_KINDS
    axes = range(lattice.dimension) if axis is None else (axis,)
    h = Fraction(1, 2) / lattice.spacing
    terms: dict = {}
    for ax in axes:
        g = gs.gamma[ax + 1]
        up = lattice.neighbor(site, ax, 1)
        down = lattice.neighbor(site, ax, -1)
        for b in range(4):
            coef = g[b][component] if row else g[component][b]
            if not coef:
                continue
            for s, sgn in ((up, 1), (down, -1)):
                key = (FieldAtom(kind, b, s),)
                c = coef * (h * sgn)
                terms[key] = terms[key] + c if key in terms else c
    return PhaseFunctional(terms, grassmann)


def slashed_vector(kind: str, site: int, gs: GammaSet, lattice: LatticeSpec,
                   axis: int | None = None, grassmann: bool = False) -> list[PhaseFunctional]:
    return [slashed_spatial_derivative(kind, a, site, gs, lattice, axis, grassmann)
            for a in range(4)]


def integrate(density: Callable[[int], PhaseFunctional], lattice: LatticeSpec) -> PhaseFunctional:
    """v * sum_i density(i)."""
    out = None
    for i in lattice.sites():
        d = density(i)
        out = d if out is None else out + d
    return out.scale(lattice.cell_volume)


@dataclass
class FieldConfig:
    """Values for every atom of a functional, plus the physical constants."""

    values: dict[FieldAtom, object]
    constants: Constants = field(default_factory=Constants)
    exact: bool = False

    def covers(self, f: PhaseFunctional) -> bool:
        return f.atoms() <= self.values.keys()

    def to_json(self) -> dict:
        rows = []
        for a in sorted(self.values, key=lambda x: x.sort_key):
            val = self.values[a]
            if isinstance(val, GrassmannElement):
                rows.append({"atom": list(a), "grassmann": val.to_text()})
            else:
                z = complex(val)
                rows.append({"atom": list(a), "value": [z.real, z.imag]})
        k = self.constants
        return {"constants": {"hbar": str(k.hbar), "c": str(k.c), "mass": str(k.mass)},
                "values": rows}

    @classmethod
    def from_json(cls, data: Mapping) -> "FieldConfig":
        from .grassmann import parse_element

        k = data.get("constants", {})
        consts = Constants(Fraction(k.get("hbar", 1)), Fraction(k.get("c", 1)),
                           Fraction(k.get("mass", 1)))
        values = {}
        for row in data["values"]:
            a = FieldAtom(*row["atom"])
            if "grassmann" in row:
                values[a] = parse_element(row["grassmann"])
            else:
                values[a] = complex(*row["value"])
        return cls(values, consts)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def spinor_config(psi: Sequence[Sequence[complex]], psibar: Sequence[Sequence[complex]] | None = None,
                  pi: Sequence[Sequence[complex]] | None = None,
                  pibar: Sequence[Sequence[complex]] | None = None,
                  constants: Constants | None = None) -> FieldConfig:
    """Build a commuting configuration from per-site 4-component arrays."""
    values = {}
    for kind, arr in (("psi", psi), ("psibar", psibar), ("pi", pi), ("pibar", pibar)):
        if arr is None:
            continue
        for i, row in enumerate(arr):
            for a in range(4):
                values[FieldAtom(kind, a, i)] = complex(row[a])
    return FieldConfig(values, constants or Constants())


_DEFAULTS = {
    "dimension": "1",
    "sites": "8",
    "dx": "1",
    "hbar": "1",
    "c": "1",
    "mass": "1",
}


def read_config(path) -> dict[str, str]:
    """Plain ``key = value`` file, ``#`` comments, no section headers."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path, encoding="utf-8") as fh:
        parser.read_string("[run]\n" + fh.read())
    return dict(parser["run"])


def lattice_from_config(cfg: Mapping[str, str]) -> LatticeSpec:
    get = lambda k: cfg.get(k, _DEFAULTS[k])  # noqa: E731
    return LatticeSpec(int(get("dimension")), int(get("sites")), Fraction(get("dx")))


def constants_from_config(cfg: Mapping[str, str]) -> Constants:
    get = lambda k: cfg.get(k, _DEFAULTS[k])  # noqa: E731
    return Constants(Fraction(get("hbar")), Fraction(get("c")), Fraction(get("mass")))


__all__ = [
    "ALL_KINDS", "CANONICAL_KINDS", "CHART_KINDS", "MULTIPLIER_KINDS", "ROW_KINDS",
    "Constants", "Context", "FactorOrderingError", "FieldAtom", "FieldConfig",
    "LatticeSpec", "MissingAtomError", "PhaseFunctional", "atom", "constants_from_config",
    "dot", "evaluate", "field_vector", "functional_derivative", "integrate",
    "lattice_from_config", "read_config", "slashed_spatial_derivative", "slashed_vector",
    "spinor_config",
]
