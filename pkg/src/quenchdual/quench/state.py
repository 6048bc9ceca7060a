"""Statevector primitives for H = X + (alpha/d) H_Z.

Basis index bit b encodes the Z_b eigenvalue: bit 0 means +1.  States are
plain complex128 arrays of length 2^n.
"""
from __future__ import annotations

import logging
import math
import os

import numpy as np

from ..errors import InputError, PropagationError, ResourceLimitError
from ..instance import Instance, energy_table

log = logging.getLogger(__name__)

DEFAULT_MAX_QUBITS = 20
MAX_QUBITS_ENV = "QUENCHDUAL_MAX_QUBITS"
DEFAULT_TOLERANCE = 1e-10
KRYLOV_DIM = 30
MAX_STEPS = 100_000


def max_qubits() -> int:
    raw = os.environ.get(MAX_QUBITS_ENV)
    if raw is None:
        return DEFAULT_MAX_QUBITS
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{MAX_QUBITS_ENV} must be an integer, got {raw!r}") from None


def check_qubits(n: int) -> None:
    limit = max_qubits()
    if n > limit:
        raise ResourceLimitError(f"n={n} exceeds the statevector limit {limit} (set {MAX_QUBITS_ENV} to override)")


def num_qubits(psi: np.ndarray) -> int:
    n = int(psi.size).bit_length() - 1
    if psi.ndim != 1 or psi.size != 1 << n:
        raise InputError(f"state length {psi.size} is not a power of two")
    return n


def _check_state(inst: Instance, psi: np.ndarray) -> None:
    if psi.shape != (1 << inst.n,):
        raise InputError(f"state has shape {psi.shape}, expected ({1 << inst.n},)")


def plus_state(n: int) -> np.ndarray:
    """Uniform superposition, the +1 eigenstate of every X_i."""
    if n < 1:
        raise InputError("n must be positive")
    check_qubits(n)
    return np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128)


def basis_state(n: int, index: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[index] = 1.0
    return psi


def flip(psi: np.ndarray, b: int) -> np.ndarray:
    """X_b psi (a new array)."""
    return psi.reshape(-1, 2, 1 << b)[:, ::-1, :].reshape(-1)


def apply_x(psi: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros_like(psi)
    for b in range(n):
        out += flip(psi, b)
    return out


def diagonal(inst: Instance) -> np.ndarray:
    """Integer energy H_Z(x) for every basis index x."""
    check_qubits(inst.n)
    return energy_table(inst)


def apply_hamiltonian(inst: Instance, alpha: float, psi: np.ndarray) -> np.ndarray:
    """H psi with X as n bit-flip passes and H_Z as a diagonal multiply."""
    _check_state(inst, psi)
    out = apply_x(psi, inst.n)
    if alpha and inst.d:
        out += (alpha / inst.d) * diagonal(inst) * psi
    return out


def _lanczos(matvec, v: np.ndarray, m_max: int):
    """Lanczos with full reorthogonalization; returns (V, T, beta_last)."""
    N = v.size
    m_max = min(m_max, N)
    V = np.empty((m_max + 1, N), dtype=np.complex128)
    V[0] = v
    a = np.zeros(m_max)
    b = np.zeros(m_max)
    m = m_max
    for j in range(m_max):
        w = matvec(V[j])
        a[j] = np.vdot(V[j], w).real
        w -= a[j] * V[j]
        if j:
            w -= b[j - 1] * V[j - 1]
        w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        b[j] = np.linalg.norm(w)
        if b[j] < 1e-12 * max(1.0, abs(a[j])):
            m = j + 1
            b[j] = 0.0
            break
        V[j + 1] = w / b[j]
    T = np.diag(a[:m]) + np.diag(b[: m - 1], 1) + np.diag(b[: m - 1], -1)
    return V[:m], T, float(b[m - 1])


def evolve(inst: Instance, alpha: float, psi: np.ndarray, t: float, tolerance: float = DEFAULT_TOLERANCE, *,
           krylov_dim: int = KRYLOV_DIM, max_steps: int = MAX_STEPS) -> np.ndarray:
    """exp(-iHt) psi by short-iterative Lanczos with adaptive step size.

    Each step accepts the largest dt whose a-posteriori error estimate
    beta_m |[exp(-i T dt) e_1]_m| stays below tolerance * dt / t, so the
    per-step budgets add up to ``tolerance`` in vector norm.
    """
    _check_state(inst, psi)
    if not t >= 0:
        raise InputError(f"evolution time must be non-negative, got {t}")
    if not tolerance > 0:
        raise InputError("tolerance must be positive")
    psi = np.array(psi, dtype=np.complex128)
    if t == 0:
        return psi
    diag = (alpha / inst.d) * diagonal(inst).astype(float) if inst.d else np.zeros(psi.size)
    n = inst.n

    def matvec(v):
        return apply_x(v, n) + diag * v

    rate = tolerance / t
    elapsed, steps, dt = 0.0, 0, t
    while elapsed < t:
        if steps >= max_steps:
            raise PropagationError(
                f"step budget {max_steps} exhausted at t={elapsed:.6g} of {t:.6g} (tolerance {tolerance:g})")
        steps += 1
        nrm = np.linalg.norm(psi)
        V, T, beta = _lanczos(matvec, psi / nrm, krylov_dim)
        lam, S = np.linalg.eigh(T)
        dt = min(max(dt, 0.0) * 4.0 if steps > 1 else t, t - elapsed)
        while True:
            y = S @ (np.exp(-1j * lam * dt) * S[0].conj())
            err = beta * abs(y[-1]) * nrm
            if err <= rate * dt or beta == 0.0:
                break
            dt *= max(0.2, min(0.9, 0.9 * (rate * dt / err) ** (1.0 / T.shape[0])))
            if dt < 1e-14 * t:
                raise PropagationError(f"step size underflow at t={elapsed:.6g} (error estimate {err:.3g})")
        psi = nrm * (V.T @ y)
        elapsed = t if t - elapsed - dt <= 1e-15 * t else elapsed + dt
    log.debug("evolve: t=%g in %d Krylov steps", t, steps)
    return psi


def sample_bitstrings(psi: np.ndarray, shots: int, seed=None) -> np.ndarray:
    """Basis indices drawn from |psi|^2 (inverse-CDF on a cumulative sum)."""
    if shots < 0:
        raise InputError("shots must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cdf = np.cumsum(np.abs(psi) ** 2)
    idx = np.searchsorted(cdf, rng.random(shots) * cdf[-1], side="right")
    return np.minimum(idx, psi.size - 1)


def bitstring(index: int, n: int) -> str:
    """Bit b of the index as character b ('0' means Z_b = +1)."""
    return "".join(str((int(index) >> b) & 1) for b in range(n))


def product_state(qubits) -> np.ndarray:
    """Tensor product of single-qubit states; entry b acts on bit b."""
    out = np.ones(1, dtype=np.complex128)
    for q in qubits:
        out = np.kron(np.asarray(q, dtype=np.complex128), out)
    return out


def bloch_qubit(x: float, z: float) -> np.ndarray:
    """Real single-qubit state with <X> = x, <Z> = z (x^2 + z^2 = 1)."""
    phi = math.atan2(x, z)
    return np.array([math.cos(phi / 2), math.sin(phi / 2)], dtype=np.complex128)
