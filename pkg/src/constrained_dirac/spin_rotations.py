"""Rotations about the z axis acting on vectors, spinors and polarization tensors.

A four-vector V maps to the Hermitian 2x2 matrix V^0 I + V^mu sigma^mu. A z
rotation acts on it by conjugation with U = diag(e^{i phi/2}, e^{-i phi/2}).
Helicity phases are read off the rotated objects, not assumed.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .gamma_algebra import GammaSet, build_gamma_set

SCHEMA = "constrained-dirac/spin/1"
EPSILON = np.array([[0, 1], [-1, 0]], dtype=complex)
TOL = 1e-12


@dataclass(frozen=True)
class HermitianVectorMatrix:
    matrix: np.ndarray

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))

    def is_hermitian(self, tol: float = TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def components(self) -> np.ndarray:
        """Inverse of vector_to_matrix."""
        m = self.matrix
        v0 = (m[0, 0] + m[1, 1]) / 2
        v3 = (m[0, 0] - m[1, 1]) / 2
        v1 = (m[1, 0] + m[0, 1]) / 2
        v2 = (m[1, 0] - m[0, 1]) / 2j
        return np.array([v0, v1, v2, v3])


def vector_to_matrix(vec: Sequence[float]) -> HermitianVectorMatrix:
    v0, v1, v2, v3 = vec
    return HermitianVectorMatrix(np.array([[v0 + v3, v1 - 1j * v2],
                                           [v1 + 1j * v2, v0 - v3]], dtype=complex))


def minkowski_square(vec: Sequence[float]) -> float:
    v0, v1, v2, v3 = vec
    return -v0 * v0 + v1 * v1 + v2 * v2 + v3 * v3


def su2_z(phi: float) -> np.ndarray:
    return np.diag([cmath.exp(0.5j * phi), cmath.exp(-0.5j * phi)])


def rotate_z(v: HermitianVectorMatrix, phi: float) -> HermitianVectorMatrix:
    u = su2_z(phi)
    return HermitianVectorMatrix(u @ v.matrix @ u.conj().T)


def rotation_matrix_z(phi: float) -> np.ndarray:
    """4x4 action on (V^0, V^1, V^2, V^3) matching rotate_z."""
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[1, 0, 0, 0], [0, c, s, 0], [0, -s, c, 0], [0, 0, 0, 1]], dtype=float)


def rotate_vector(vec: Sequence[float], phi: float) -> np.ndarray:
    return rotation_matrix_z(phi) @ np.asarray(vec, dtype=float)


def spinor_rotation(gs: GammaSet, phi: float) -> np.ndarray:
    """Spinor representative exp(-(phi/2) gamma^1 gamma^2) of the z rotation."""
    g = gs.arrays
    return expm(-0.5 * phi * (g[1] @ g[2]))


def _phase(before: np.ndarray, after: np.ndarray) -> complex:
    """Scalar z with after = z * before; nan if not proportional."""
    before = np.asarray(before, dtype=complex).ravel()
    after = np.asarray(after, dtype=complex).ravel()
    k = int(np.argmax(np.abs(before)))
    z = after[k] / before[k]
    if np.max(np.abs(after - z * before)) > 1e-10:
        return complex("nan")
    return complex(z)


def _rotate_basis(phi: float) -> np.ndarray:
    """Rows give the rotated transverse basis vectors e'_1, e'_2 in terms of e_1, e_2."""
    return rotation_matrix_z(phi)[1:3, 1:3]


def photon_polarizations(phi: float) -> dict[str, complex]:
    r = _rotate_basis(phi)
    out = {}
    for label, s in (("+", 1), ("-", -1)):
        e = np.array([1, -1j * s])  # e_1 -+ i e_2
        out[label] = _phase(e, e @ r)
    return out


def graviton_polarizations(phi: float) -> dict[str, complex]:
    r = _rotate_basis(phi)
    plus = np.array([[1, 0], [0, -1]], dtype=complex)
    cross = np.array([[0, 1], [1, 0]], dtype=complex)
    out = {}
    for label, s in (("+", 1), ("-", -1)):
        e = plus - 1j * s * cross
        out[label] = _phase(e, r.T @ e @ r)
    return out


def tensor_checks(eps: np.ndarray, direction: Sequence[float] = (0, 0, 1), tol: float = TOL) -> dict:
    """Symmetric, traceless and transverse checks for a 3x3 polarization tensor."""
    eps = np.asarray(eps, dtype=complex)
    n = np.asarray(direction, dtype=float)
    return {
        "symmetric": bool(np.max(np.abs(eps - eps.T)) <= tol),
        "traceless": bool(abs(np.trace(eps)) <= tol),
        "transverse": bool(np.max(np.abs(eps @ n)) <= tol),
    }


def rotated_gw_tensor(phi: float, plus: float = 1.0, cross: float = 0.5) -> np.ndarray:
    eps = np.zeros((3, 3), dtype=complex)
    eps[0, 0], eps[1, 1] = plus, -plus
    eps[0, 1] = eps[1, 0] = cross
    r = rotation_matrix_z(phi)[1:, 1:]
    return r.T @ eps @ r


def helicity_phases(phi: float, gs: GammaSet | None = None) -> dict:
    gs = gs or build_gamma_set("dirac")
    u = su2_z(phi)
    psi_l = np.array([1, 0], dtype=complex)
    psi_r = np.array([1, 0], dtype=complex)
    bar_r = EPSILON @ psi_r.conj()
    bar_r_rot = EPSILON @ (u @ psi_r).conj()
    s = spinor_rotation(gs, phi)
    g12 = gs.arrays[1] @ gs.arrays[2]
    vals, vecs = np.linalg.eig(g12)
    up = vecs[:, int(np.argmin(np.abs(vals + 1j)))]
    return {
        "spinor": _phase(psi_l, u @ psi_l),
        "spinor_bar_r": _phase(bar_r, bar_r_rot),
        "dirac_spinor": _phase(up, s @ up),
        "photon": photon_polarizations(phi),
        "graviton": graviton_polarizations(phi),
    }


@dataclass
class Verdict:
    name: str
    ok: bool
    detail: str

    def to_json(self) -> dict:
        return {"name": self.name, "ok": self.ok, "detail": self.detail}


def _close(z: complex, w: complex, tol: float = TOL) -> bool:
    return abs(z - w) <= tol


def verify(phis: Sequence[float] = (0.3, math.pi / 2, math.pi, 2 * math.pi),
           gs: GammaSet | None = None) -> list[Verdict]:
    out = []
    vec = np.array([1.0, 0.3, -0.7, 0.2])
    null = np.array([math.sqrt(0.3 ** 2 + 0.4 ** 2 + 1.2 ** 2), 0.3, 0.4, 1.2])
    for phi in phis:
        v = vector_to_matrix(vec)
        rot = rotate_z(v, phi)
        via_vec = vector_to_matrix(rotate_vector(vec, phi))
        err = float(np.max(np.abs(rot.matrix - via_vec.matrix)))
        out.append(Verdict(f"route_agreement[phi={phi:.6g}]", err <= TOL, f"max diff {err:.3g}"))
        nm = rotate_z(vector_to_matrix(null), phi)
        out.append(Verdict(f"null_det_invariant[phi={phi:.6g}]", abs(nm.det) <= TOL, f"det {abs(nm.det):.3g}"))
        h = helicity_phases(phi, gs)
        checks = {
            "spinor": (h["spinor"], cmath.exp(0.5j * phi)),
            "spinor_bar_r": (h["spinor_bar_r"], cmath.exp(-0.5j * phi)),
            "dirac_spinor": (h["dirac_spinor"], cmath.exp(0.5j * phi)),
            "photon+": (h["photon"]["+"], cmath.exp(1j * phi)),
            "photon-": (h["photon"]["-"], cmath.exp(-1j * phi)),
            "graviton+": (h["graviton"]["+"], cmath.exp(2j * phi)),
            "graviton-": (h["graviton"]["-"], cmath.exp(-2j * phi)),
        }
        for name, (got, want) in checks.items():
            out.append(Verdict(f"{name}[phi={phi:.6g}]", _close(got, want), f"got {got:.12g}, want {want:.12g}"))
        tc = tensor_checks(rotated_gw_tensor(phi))
        out.append(Verdict(f"gw_tensor_tt[phi={phi:.6g}]", all(tc.values()), str(tc)))
    return out


def report(phis: Sequence[float] | None = None, gs: GammaSet | None = None) -> dict:
    verdicts = verify(phis, gs) if phis is not None else verify(gs=gs)
    return {
        "schema": SCHEMA,
        "verdicts": [v.to_json() for v in verdicts],
        "failures": [v.name for v in verdicts if not v.ok],
    }


__all__ = [
    "EPSILON", "HermitianVectorMatrix", "Verdict", "graviton_polarizations", "helicity_phases",
    "minkowski_square", "photon_polarizations", "report", "rotate_vector", "rotate_z",
    "rotated_gw_tensor", "rotation_matrix_z", "spinor_rotation", "su2_z", "tensor_checks",
    "vector_to_matrix", "verify",
]
