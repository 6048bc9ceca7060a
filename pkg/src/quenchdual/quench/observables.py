"""Expectation values, Pauli strings and the force time-derivative.

Pauli action on basis states (bit 0 <-> Z = +1):
    Z_j|x> = (-1)^{x_j} |x>,   Y_j|x> = i (-1)^{x_j} |x xor e_j>.

The force derivative is
    Fdot_i = -i [F_i, X] = sum_{T containing i} s_T sum_{j in T, j != i} 2 Y_j Z_{T minus {i, j}},
one signed Pauli string per (term, j), never stored as a matrix.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import InputError
from ..instance import Instance, spin_signs
from .state import _check_state, apply_x, diagonal, flip

OBSERVABLES = ("X", "X_i", "HZ", "H", "Xminus_sq", "HZ2")


@lru_cache(maxsize=4)
def _signs(n: int) -> np.ndarray:
    out = spin_signs(n)
    out.setflags(write=False)
    return out


def norm_sq(psi: np.ndarray) -> float:
    return float(np.vdot(psi, psi).real)


def x_deficit(psi: np.ndarray, n: int) -> float:
    """n - <X>, accumulated from the small differences psi - X_b psi.

    Uses <X_b> = |psi|^2 - |psi - X_b psi|^2 / 2, which keeps full relative
    precision when the state is close to psi_+.
    """
    nrm = norm_sq(psi)
    total = n * (1.0 - nrm)
    for b in range(n):
        diff = psi - flip(psi, b)
        total += 0.5 * norm_sq(diff)
    return float(total)


def expect_x_i(psi: np.ndarray, i: int) -> float:
    return float(np.vdot(psi, flip(psi, i)).real)


def xminus_sq(psi: np.ndarray, n: int) -> float:
    """<(X - n)^2> = |(X - n) psi|^2."""
    return norm_sq(apply_x(psi, n) - n * psi)


def expectation(inst: Instance, alpha: float, psi: np.ndarray, observable: str, i: int | None = None) -> float:
    """<psi|O|psi> for O in X, X_i, HZ, H, Xminus_sq, HZ2."""
    _check_state(inst, psi)
    n = inst.n
    if observable == "X":
        return n - x_deficit(psi, n)
    if observable == "X_i":
        if i is None or not 0 <= i < n:
            raise InputError("observable X_i needs a qubit index in range")
        return expect_x_i(psi, i)
    prob = np.abs(psi) ** 2
    if observable == "HZ":
        return float(prob @ diagonal(inst))
    if observable == "HZ2":
        e = diagonal(inst).astype(float)
        return float(prob @ (e * e))
    if observable == "H":
        hz = float(prob @ diagonal(inst))
        return expectation(inst, alpha, psi, "X") + (alpha / inst.d) * hz
    if observable == "Xminus_sq":
        return xminus_sq(psi, n)
    raise InputError(f"unknown observable {observable!r}; expected one of {OBSERVABLES}")


# --------------------------------------------------------------------------
# Pauli strings


def apply_pauli(psi: np.ndarray, n: int, ys=(), zs=(), xs=()) -> np.ndarray:
    """Product of Z's, then X's, then Y's (on disjoint qubits) applied to psi."""
    out = np.array(psi, dtype=np.complex128)
    signs = _signs(n)
    for q in zs:
        out = out * signs[q]
    for q in xs:
        out = flip(out, q)
    for q in ys:
        out = 1j * flip(out * signs[q], q)
    return out


def fdot_strings(inst: Instance, i: int) -> list[tuple[float, int, tuple[int, ...]]]:
    """Fdot_i as a list of (coefficient, Y qubit, Z qubits)."""
    if not 0 <= i < inst.n:
        raise InputError(f"qubit index {i} out of range [0, {inst.n})")
    out = []
    for t in inst.incidence[i]:
        idx, sign = inst.terms[t]
        for j in idx:
            if j != i:
                out.append((2.0 * sign, j, tuple(m for m in idx if m not in (i, j))))
    return out


def apply_fdot(inst: Instance, i: int, psi: np.ndarray) -> np.ndarray:
    """Fdot_i psi, one Pauli string at a time."""
    _check_state(inst, psi)
    out = np.zeros_like(psi, dtype=np.complex128)
    for coeff, j, zq in fdot_strings(inst, i):
        out += coeff * apply_pauli(psi, inst.n, ys=(j,), zs=zq)
    return out


def y_fdot_sum(inst: Instance, psi: np.ndarray) -> float:
    """<psi| sum_i Y_i Fdot_i |psi>.

    Summing over i pairs every term T with each unordered {i, j} in T, with
    weight 4 s_T Y_i Y_j Z_{T minus {i,j}}; on basis states
    (Y_i Y_j Z_R psi)[x] = -(monomial T at x) psi[x xor e_i xor e_j].
    """
    _check_state(inst, psi)
    total = 0.0
    conj = psi.conj()
    index = np.arange(psi.size)
    for idx, sign in inst.terms:
        weighted = conj * _monomial(inst.n, idx)
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                partner = psi[index ^ ((1 << idx[a]) | (1 << idx[b]))]
                total -= 4.0 * sign * float(np.real(weighted @ partner))
    return total


def _monomial(n: int, idx) -> np.ndarray:
    signs = _signs(n)
    prod = signs[idx[0]].astype(np.int64)
    for m in idx[1:]:
        prod = prod * signs[m]
    return prod


def z_force_sum(inst: Instance, psi: np.ndarray) -> float:
    """<psi| sum_i 2 Z_i F_i |psi>, accumulated spin by spin."""
    _check_state(inst, psi)
    prob = np.abs(psi) ** 2
    total = 0.0
    for i in range(inst.n):
        zf = np.zeros(psi.size)
        for t in inst.incidence[i]:
            idx, sign = inst.terms[t]
            zf += sign * _monomial(inst.n, idx)
        # Z_i F_i is the sum of the monomials through i
        total += 2.0 * float(prob @ zf)
    return total


def duality_observable(inst: Instance, alpha: float, psi: np.ndarray, *, cross_check: bool = False):
    """<sum_i (2 Z_i F_i - Y_i Fdot_i)>.

    The Z F part is evaluated spin by spin; with ``cross_check`` the pair
    (value, |ZF part - 2k <H_Z>|) is returned.  ``alpha`` does not enter
    because F_i commutes with H_Z.
    """
    zf = z_force_sum(inst, psi)
    value = zf - y_fdot_sum(inst, psi)
    if cross_check:
        hz = float((np.abs(psi) ** 2) @ diagonal(inst))
        return value, abs(zf - 2 * inst.k * hz)
    return value
