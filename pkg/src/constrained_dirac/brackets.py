"""Poisson and Dirac brackets on the discretized phase space.

Each bracket is a signed sum of products of functional derivatives taken at
the same lattice point and component. With delta F/delta chi = (1/v) dF/dchi
and the integral written as v * sum, every product picks up an overall 1/v.

The products are listed in tables of ``(coefficient, (who, kind), (who, kind))``
where ``who`` is "f" or "g"; the first entry is the left factor. Keeping the
factor order explicit matters for Grassmann functionals, and it keeps the
commuting results in a row-then-column form.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .exact import GaussianRational, I, SingularMatrixError, gr, inverse
from .grassmann import Parity
from .phase_space import Context, FieldAtom, PhaseFunctional


class BracketKind(str, Enum):
    POISSON_FO = "FactorOrderedPB"
    DIRAC_FO = "FactorOrderedDB"
    POISSON_L = "GrassmannPB_L"
    POISSON_R = "GrassmannPB_R"
    DIRAC_L = "GrassmannDB_L"
    DIRAC_R = "GrassmannDB_R"


class MixedParityError(ValueError):
    pass


Table = Sequence[tuple[object, tuple[str, str], tuple[str, str]]]


def _contract(f: PhaseFunctional, g: PhaseFunctional, table: Table, side: str,
              scale) -> PhaseFunctional:
    kinds = {k for _, (_, k1), (_, k2) in table for k in (k1, k2)}
    grads = {"f": f.gradient(side, kinds), "g": g.gradient(side, kinds)}
    out = PhaseFunctional.zero(f.grassmann)
    for coef, (w1, k1), (w2, k2) in table:
        coef = gr(coef) * scale
        first, second = grads[w1], grads[w2]
        for a, d1 in first.items():
            if a.kind != k1:
                continue
            d2 = second.get(FieldAtom(k2, a.component, a.site))
            if d2 is None:
                continue
            out = out + (d1 * d2).scale(coef)
    return out


def _require_commuting(*fs: PhaseFunctional) -> None:
    for f in fs:
        if f.grassmann:
            raise TypeError("factor-ordered brackets take commuting functionals only")


def _require_grassmann(*fs: PhaseFunctional) -> list[int]:
    bits = []
    for f in fs:
        if not f.grassmann:
            raise TypeError("generalized brackets take Grassmann functionals only")
        p = f.parity
        if p is Parity.MIXED:
            raise MixedParityError("bracket arguments must have homogeneous parity")
        bits.append(p.bit)
    return bits


def _sign(bit: int) -> int:
    return -1 if bit else 1


# factor-ordered (commuting) track

_PB_FO = (
    (1, ("f", "psi"), ("g", "pi")),
    (-1, ("g", "psi"), ("f", "pi")),
    (1, ("g", "pibar"), ("f", "psibar")),
    (-1, ("f", "pibar"), ("g", "psibar")),
)


def poisson_fo(f: PhaseFunctional, g: PhaseFunctional, ctx: Context) -> PhaseFunctional:
    _require_commuting(f, g)
    return _contract(f, g, _PB_FO, "plain", Fraction(1) / ctx.v)


def dirac_fo(f: PhaseFunctional, g: PhaseFunctional, ctx: Context) -> PhaseFunctional:
    _require_commuting(f, g)
    hc = ctx.constants.hbar_c
    a = -I / hc
    b = -I * hc / 4
    table = (
        (a, ("f", "psi"), ("g", "psibar")),
        (-a, ("g", "psi"), ("f", "psibar")),
        (b, ("f", "pibar"), ("g", "pi")),
        (-b, ("g", "pibar"), ("f", "pi")),
    )
    inv_v = Fraction(1) / ctx.v
    return poisson_fo(f, g, ctx).scale(Fraction(1, 2)) + _contract(f, g, table, "plain", inv_v)


# Grassmann track

_PB_G = (
    (1, ("f", "psi"), ("g", "pi")),
    (1, ("f", "pi"), ("g", "psi")),
    (1, ("f", "psibar"), ("g", "pibar")),
    (1, ("f", "pibar"), ("g", "psibar")),
)


def _side(side: str) -> str:
    s = side.upper()
    if s not in ("L", "R"):
        raise ValueError("side must be 'L' or 'R'")
    return s


def poisson_grassmann(f: PhaseFunctional, g: PhaseFunctional, side: str,
                      ctx: Context) -> PhaseFunctional:
    ef, eg = _require_grassmann(f, g)
    s = _side(side)
    sign = _sign(ef) if s == "L" else _sign(eg)
    return _contract(f, g, _PB_G, "left" if s == "L" else "right",
                     Fraction(sign) / ctx.v)


def dirac_grassmann(f: PhaseFunctional, g: PhaseFunctional, side: str,
                    ctx: Context) -> PhaseFunctional:
    ef, eg = _require_grassmann(f, g)
    s = _side(side)
    hc = ctx.constants.hbar_c
    if s == "L":
        sign, deriv = _sign(ef), "left"
    else:
        sign, deriv = -_sign(eg), "right"
    a = I / hc
    b = -I * hc / 4
    table = (
        (a, ("f", "psi"), ("g", "psibar")),
        (a, ("f", "psibar"), ("g", "psi")),
        (b, ("f", "pi"), ("g", "pibar")),
        (b, ("f", "pibar"), ("g", "pi")),
    )
    half = poisson_grassmann(f, g, s, ctx).scale(Fraction(1, 2))
    return half + _contract(f, g, table, deriv, Fraction(sign) / ctx.v)


# reduced phase space

def poisson_reduced(f: PhaseFunctional, g: PhaseFunctional, ctx: Context,
                    side: str | None = None) -> PhaseFunctional:
    """Poisson bracket in the (psi1, pi1) pair only.

    ``side`` is None for the commuting track, "L" or "R" for Grassmann ones.
    """
    if side is None:
        _require_commuting(f, g)
        table = ((1, ("f", "psi1"), ("g", "pi1")), (-1, ("g", "psi1"), ("f", "pi1")))
        return _contract(f, g, table, "plain", Fraction(1) / ctx.v)
    ef, eg = _require_grassmann(f, g)
    s = _side(side)
    sign = _sign(ef) if s == "L" else _sign(eg)
    table = ((1, ("f", "psi1"), ("g", "pi1")), (1, ("f", "pi1"), ("g", "psi1")))
    return _contract(f, g, table, "left" if s == "L" else "right", Fraction(sign) / ctx.v)


def bracket(kind: BracketKind | str, f: PhaseFunctional, g: PhaseFunctional,
            ctx: Context) -> PhaseFunctional:
    kind = BracketKind(kind)
    if kind is BracketKind.POISSON_FO:
        return poisson_fo(f, g, ctx)
    if kind is BracketKind.DIRAC_FO:
        return dirac_fo(f, g, ctx)
    if kind is BracketKind.POISSON_L:
        return poisson_grassmann(f, g, "L", ctx)
    if kind is BracketKind.POISSON_R:
        return poisson_grassmann(f, g, "R", ctx)
    if kind is BracketKind.DIRAC_L:
        return dirac_grassmann(f, g, "L", ctx)
    return dirac_grassmann(f, g, "R", ctx)


class ConstraintBracket:
    """Dirac bracket built from a Poisson bracket and a set of second-class constraints.

    {f, g}_D = {f, g} - sum_ab {f, C_a} (M^-1)_ab {C_b, g},  M_ab = {C_a, C_b}.

    This is the textbook construction; it serves as an oracle for the closed
    forms above. Every M_ab must be a constant.
    """

    def __init__(self, constraints: Sequence[PhaseFunctional],
                 pb: Callable[[PhaseFunctional, PhaseFunctional], PhaseFunctional]):
        self.constraints = list(constraints)
        self.pb = pb
        n = len(self.constraints)
        m = []
        for ca in self.constraints:
            row = []
            for cb in self.constraints:
                val = pb(ca, cb)
                if val.degree > 0:
                    raise ValueError("constraint brackets must be field independent")
                row.append(val.constant_term())
            m.append(row)
        self.matrix = m
        try:
            inv = inverse(m)
        except SingularMatrixError as exc:
            raise SingularMatrixError("constraint matrix is singular: first-class constraint") from exc
        self.inverse = {(a, b): inv[a][b] for a in range(n) for b in range(n) if inv[a][b]}

    def __call__(self, f: PhaseFunctional, g: PhaseFunctional) -> PhaseFunctional:
        out = self.pb(f, g)
        left = {}
        right = {}
        for (a, b), w in self.inverse.items():
            if a not in left:
                left[a] = self.pb(f, self.constraints[a])
            if b not in right:
                right[b] = self.pb(self.constraints[b], g)
            if left[a].is_zero() or right[b].is_zero():
                continue
            out = out - (left[a] * right[b]).scale(w)
        return out


@dataclass(frozen=True)
class BracketRecord:
    kind: str
    lhs: PhaseFunctional
    rhs: PhaseFunctional
    result: PhaseFunctional

    def to_json(self) -> dict:
        return {"kind": self.kind, "lhs": self.lhs.to_json(), "rhs": self.rhs.to_json(),
                "result": self.result.to_json()}


def logged_bracket(kind: BracketKind | str, f: PhaseFunctional, g: PhaseFunctional,
                   ctx: Context) -> BracketRecord:
    kind = BracketKind(kind)
    return BracketRecord(kind.value, f, g, bracket(kind, f, g, ctx))


def delta_value(result: PhaseFunctional, ctx: Context) -> GaussianRational:
    """Coefficient c of a constant bracket value c * delta_ij / v."""
    if result.degree > 0:
        raise ValueError("bracket value is field dependent")
    return result.constant_term() * ctx.v


def numeric_bracket(terms: Sequence[tuple[complex, str, str, str, str]],
                    f: Callable[[Mapping[FieldAtom, complex]], complex],
                    g: Callable[[Mapping[FieldAtom, complex]], complex],
                    point: Mapping[FieldAtom, complex], v: float,
                    eps: float = 1e-5) -> complex:
    """Bracket of two commuting functions from finite-difference derivatives.

    ``terms`` lists (coef, who1, kind1, who2, kind2) just like the symbolic
    tables. Used only as an independent check of the symbolic engine.
    """
    funcs = {"f": f, "g": g}
    cache: dict = {}

    def deriv(who, a):
        key = (who, a)
        if key not in cache:
            up = dict(point)
            dn = dict(point)
            up[a] = up[a] + eps
            dn[a] = dn[a] - eps
            cache[key] = (funcs[who](up) - funcs[who](dn)) / (2 * eps) / v
        return cache[key]

    total = 0j
    for coef, w1, k1, w2, k2 in terms:
        for a in point:
            if a.kind != k1:
                continue
            b = FieldAtom(k2, a.component, a.site)
            if b not in point:
                continue
            total += coef * deriv(w1, a) * deriv(w2, b) * v
    return total


__all__ = [
    "BracketKind", "BracketRecord", "ConstraintBracket", "MixedParityError", "bracket",
    "delta_value", "dirac_fo", "dirac_grassmann", "logged_bracket", "numeric_bracket",
    "poisson_fo", "poisson_grassmann", "poisson_reduced",
]
