"""Shared numeric glue between lattice states and symbolic functionals."""
import numpy as np

from constrained_dirac.phase_space import FieldAtom


def state_values(state, u=None, ubar=None) -> dict:
    """Atom values of an on-shell state, optionally with multiplier values."""
    arrays = {"psi": state.psi, "psibar": state.psibar, "pi": state.pi, "pibar": state.pibar}
    if u is not None:
        arrays["dpsi"] = u
        arrays["dpsibar"] = ubar
    return {FieldAtom(k, a, i): complex(arr[i, a]) for k, arr in arrays.items()
            for i in range(arr.shape[0]) for a in range(4)}


def multipliers_from_rate(state, rate: np.ndarray):
    """u = gamma^0 d_0 psi and ubar = d_0 psibar gamma^0 from d_t psi."""
    c = float(state.constants.c)
    g0 = state.stencil.g0
    d0_psi = rate / c
    d0_psibar = d0_psi.conj() @ g0
    return d0_psi @ g0.T, d0_psibar @ g0


CRITERIA: list[str] = []


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    """Print and remember one pass/fail line, then assert."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title}" + (f" ({detail})" if detail else "")
    print(line)
    CRITERIA.append(line)
    assert ok, line
