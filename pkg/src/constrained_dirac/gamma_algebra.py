"""Gamma matrices in the Dirac, Weyl and Majorana representations.

Matrices are stored exactly (Gaussian rationals). ``GammaSet.arrays`` gives a
complex128 mirror used by the numerical layers; both are checked by the same
identity routines.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .exact import (
    ONE,
    ZERO,
    I,
    Matrix,
    block,
    dagger,
    gr,
    identity,
    mat_add,
    mat_mul,
    mat_scale,
    mat_sub,
    matrix,
    max_abs,
    zeros,
)

METRIC = (-1, 1, 1, 1)
FLOAT_TOL = 1e-12


class Representation(str, Enum):
    DIRAC = "dirac"
    WEYL = "weyl"
    MAJORANA = "majorana"


@dataclass(frozen=True)
class PauliSet:
    sigma: tuple[Matrix, Matrix, Matrix]
    identity: Matrix


def pauli_set() -> PauliSet:
    s1 = matrix([[0, 1], [1, 0]])
    s2 = matrix([[0, -I], [I, 0]])
    s3 = matrix([[1, 0], [0, -1]])
    return PauliSet((s1, s2, s3), identity(2))


@dataclass(frozen=True)
class GammaSet:
    representation: Representation
    gamma: tuple[Matrix, Matrix, Matrix, Matrix]
    metric: tuple[int, int, int, int] = METRIC
    label: str = field(default="", compare=False)

    @property
    def name(self) -> str:
        return self.label or self.representation.value

    @property
    def arrays(self) -> np.ndarray:
        """Float mirror with shape (4, 4, 4): index a, row, column."""
        return np.array(
            [[[complex(x) for x in row] for row in g] for g in self.gamma],
            dtype=complex,
        )

    def with_entry(self, a: int, row: int, col: int, value) -> "GammaSet":
        """Copy with one matrix entry replaced (used for negative controls)."""
        g = [list(map(list, m)) for m in self.gamma]
        g[a][row][col] = gr(value)
        new = tuple(tuple(tuple(r) for r in m) for m in g)
        return replace(self, gamma=new, label=f"{self.name}[corrupted]")


def build_gamma_set(representation: Representation | str) -> GammaSet:
    rep = Representation(representation)
    s = pauli_set().sigma
    i2 = identity(2)
    z2 = zeros(2)
    neg = lambda m: mat_scale(-1, m)  # noqa: E731
    if rep is Representation.DIRAC:
        g0 = block(i2, z2, z2, neg(i2))
        gs = [block(z2, sk, neg(sk), z2) for sk in s]
    elif rep is Representation.WEYL:
        g0 = block(z2, i2, i2, z2)
        gs = [block(z2, neg(sk), sk, z2) for sk in s]
    else:
        s1, s2, s3 = s
        g0 = block(z2, s2, s2, z2)
        g1 = block(mat_scale(I, s3), z2, z2, mat_scale(I, s3))
        g2 = block(z2, neg(s2), s2, z2)
        g3 = block(mat_scale(-I, s1), z2, z2, mat_scale(-I, s1))
        gs = [g1, g2, g3]
    return GammaSet(rep, (g0, *gs))


def all_gamma_sets() -> list[GammaSet]:
    return [build_gamma_set(r) for r in Representation]


@dataclass(frozen=True)
class Residual:
    representation: str
    identity: str
    indices: tuple[int, ...]
    residual_norm: float
    exact: bool

    @property
    def ok(self) -> bool:
        return self.residual_norm == 0.0 if self.exact else self.residual_norm <= FLOAT_TOL

    def to_dict(self) -> dict:
        return {
            "representation": self.representation,
            "identity": self.identity,
            "indices": list(self.indices),
            "residual_norm": self.residual_norm,
            "arithmetic": "exact" if self.exact else "float",
            "ok": self.ok,
        }


def _float_norm(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def check_clifford(gs: GammaSet, exact: bool = True) -> list[Residual]:
    """Residuals of {g^a, g^b} + 2 eta^{ab} I for all 16 index pairs."""
    out = []
    if exact:
        eye = identity(4)
        for a, b in itertools.product(range(4), repeat=2):
            ga, gb = gs.gamma[a], gs.gamma[b]
            anti = mat_add(mat_mul(ga, gb), mat_mul(gb, ga))
            target = mat_scale(-2 * gs.metric[a], eye) if a == b else zeros(4)
            out.append(Residual(gs.name, "clifford", (a, b), max_abs(mat_sub(anti, target)), True))
    else:
        g = gs.arrays
        eye = np.eye(4)
        for a, b in itertools.product(range(4), repeat=2):
            anti = g[a] @ g[b] + g[b] @ g[a]
            target = -2 * gs.metric[a] * eye if a == b else 0 * eye
            out.append(Residual(gs.name, "clifford", (a, b), _float_norm(anti - target), False))
    return out


def check_adjoint_relations(gs: GammaSet, exact: bool = True) -> list[Residual]:
    """Hermiticity pattern, unitarity of g^0 and g^0 (g^a)^dagger g^0 = g^a."""
    out = []
    if exact:
        g0 = gs.gamma[0]
        out.append(Residual(gs.name, "gamma0_unitary", (0,),
                            max_abs(mat_sub(mat_mul(dagger(g0), g0), identity(4))), True))
        for a in range(4):
            ga = gs.gamma[a]
            sign = 1 if a == 0 else -1
            out.append(Residual(gs.name, "hermiticity", (a,),
                                max_abs(mat_sub(dagger(ga), mat_scale(sign, ga))), True))
            conj = mat_mul(mat_mul(g0, dagger(ga)), g0)
            out.append(Residual(gs.name, "adjoint_conjugation", (a,),
                                max_abs(mat_sub(conj, ga)), True))
    else:
        g = gs.arrays
        g0 = g[0]
        out.append(Residual(gs.name, "gamma0_unitary", (0,),
                            _float_norm(g0.conj().T @ g0 - np.eye(4)), False))
        for a in range(4):
            sign = 1 if a == 0 else -1
            out.append(Residual(gs.name, "hermiticity", (a,),
                                _float_norm(g[a].conj().T - sign * g[a]), False))
            out.append(Residual(gs.name, "adjoint_conjugation", (a,),
                                _float_norm(g0 @ g[a].conj().T @ g0 - g[a]), False))
    return out


def check_squares(gs: GammaSet) -> list[Residual]:
    """(g^0)^2 = I and (g^mu)^2 = -I."""
    out = []
    for a in range(4):
        target = mat_scale(1 if a == 0 else -1, identity(4))
        sq = mat_mul(gs.gamma[a], gs.gamma[a])
        out.append(Residual(gs.name, "square", (a,), max_abs(mat_sub(sq, target)), True))
    return out


def check_pauli(ps: PauliSet | None = None) -> list[Residual]:
    """[s^i, s^j] = 2 i eps_ijk s^k and hermiticity."""
    ps = ps or pauli_set()
    s = ps.sigma
    out = []
    for i, j in itertools.product(range(3), repeat=2):
        comm = mat_sub(mat_mul(s[i], s[j]), mat_mul(s[j], s[i]))
        target = zeros(2)
        for k in range(3):
            eps = _levi_civita(i, j, k)
            if eps:
                target = mat_add(target, mat_scale(2 * eps * I, s[k]))
        out.append(Residual("pauli", "pauli_commutator", (i + 1, j + 1),
                            max_abs(mat_sub(comm, target)), True))
    for i in range(3):
        out.append(Residual("pauli", "pauli_hermiticity", (i + 1,),
                            max_abs(mat_sub(dagger(s[i]), s[i])), True))
    return out


def _levi_civita(i: int, j: int, k: int) -> int:
    if len({i, j, k}) < 3:
        return 0
    return 1 if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1


def verify_all(gs: GammaSet) -> list[Residual]:
    return (check_clifford(gs, True) + check_clifford(gs, False)
            + check_adjoint_relations(gs, True) + check_adjoint_relations(gs, False)
            + check_squares(gs))


def slash(gs: GammaSet, v: Sequence) -> Matrix | np.ndarray:
    """sum_a g^a v_a. Exact if every component is exact, float otherwise."""
    if len(v) != 4:
        raise ValueError("slash needs four components")
    if all(not isinstance(x, (float, complex, np.number)) for x in v):
        acc = zeros(4)
        for g, x in zip(gs.gamma, v):
            acc = mat_add(acc, mat_scale(gr(x), g))
        return acc
    return np.einsum("a,aij->ij", np.asarray(v, dtype=complex), gs.arrays)


def as_exact(m: np.ndarray) -> Matrix:
    return matrix([[complex(x) for x in row] for row in m])


__all__ = [
    "METRIC", "ONE", "ZERO", "GammaSet", "PauliSet", "Representation", "Residual",
    "all_gamma_sets", "build_gamma_set", "check_adjoint_relations", "check_clifford",
    "check_pauli", "check_squares", "pauli_set", "slash", "verify_all",
]
