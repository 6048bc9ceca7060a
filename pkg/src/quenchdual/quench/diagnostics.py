"""Quantum-side diagnostics built on the statevector simulator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, InputError
from ..instance import Instance, evaluate, evaluate_multivector, gen_antiferromagnet
from .observables import _monomial, _signs, apply_fdot, fdot_strings, norm_sq, y_fdot_sum
from .state import (DEFAULT_TOLERANCE, _check_state, apply_x, bloch_qubit, check_qubits, diagonal, evolve, flip,
                    plus_state, product_state, sample_bitstrings)
from .trace import QuenchConfig, run_quench

# --------------------------------------------------------------------------
# combining measurement outcomes


@dataclass
class CombineSample:
    v1: np.ndarray
    v2: np.ndarray
    lhs: float          # H_Z(v1, v1, v2, ..., v2)
    rhs: float          # <chi| sum_i Y_i Fdot_i |chi> / (2 k (k - 1))
    s1: np.ndarray      # boolean mask of Y-measured qubits
    outcome: int        # measured basis index after the Y rotation


def rotate_to_y_basis(psi: np.ndarray, qubits) -> np.ndarray:
    """Amplitudes in the Y eigenbasis on ``qubits`` (bit 0 <-> Y = +1)."""
    out = np.array(psi, dtype=np.complex128)
    for q in qubits:
        v = out.reshape(-1, 2, 1 << q)
        a0, a1 = v[:, 0, :].copy(), v[:, 1, :].copy()
        v[:, 0, :] = (a0 - 1j * a1) / math.sqrt(2)
        v[:, 1, :] = (a0 + 1j * a1) / math.sqrt(2)
    return out


def y_eigenstate(y: int) -> np.ndarray:
    return np.array([1.0, 1j * y], dtype=np.complex128) / math.sqrt(2)


def combine_identity_constant(k: int) -> float:
    """Factor c with H_Z(v1, v1, v2, ...) = c <chi| sum_i Y_i Fdot_i |chi>."""
    return 1.0 / (2 * k * (k - 1))


def quantum_combine(inst: Instance, psi: np.ndarray, seed=None) -> CombineSample:
    """Measure a random subset in the Y basis and the rest in the Z basis.

    Each qubit joins S1 with probability 1/k.  The joint outcome has the
    law of sequential projective measurement; it is drawn once after
    rotating S1 into the Y basis.  v1 holds the Y outcomes on S1, v2 the Z
    outcomes off S1, and the post-measurement product state chi is rebuilt
    explicitly to evaluate the right-hand side.
    """
    k, n = inst.k, inst.n
    if k < 2:
        raise ContractError("quantum_combine needs k >= 2")
    _check_state(inst, psi)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    s1 = rng.random(n) < 1.0 / k
    rotated = rotate_to_y_basis(psi, np.flatnonzero(s1))
    outcome = int(sample_bitstrings(rotated, 1, rng)[0])
    bits = np.array([(outcome >> b) & 1 for b in range(n)])
    spins = 1 - 2 * bits
    v1 = np.where(s1, spins, 0).astype(float)
    v2 = np.where(s1, 0, spins).astype(float)
    qubits = [y_eigenstate(int(s)) if s1[b] else (np.array([1, 0]) if spins[b] > 0 else np.array([0, 1]))
              for b, s in enumerate(spins)]
    chi = product_state(qubits)
    lhs = evaluate_multivector(inst, [v1, v1] + [v2] * (k - 2))
    rhs = combine_identity_constant(k) * y_fdot_sum(inst, chi)
    return CombineSample(v1=v1, v2=v2, lhs=float(lhs), rhs=float(rhs), s1=s1, outcome=outcome)


# --------------------------------------------------------------------------
# witness state


def _check_subset(inst: Instance, S) -> np.ndarray:
    mask = np.zeros(inst.n, dtype=bool)
    S = np.asarray(S)
    if S.dtype == bool:
        if S.shape != (inst.n,):
            raise InputError("boolean S must have length n")
        return S.copy()
    if S.size and (S.min() < 0 or S.max() >= inst.n):
        raise InputError("S contains an out-of-range qubit")
    mask[S.astype(int)] = True
    return mask


def offset_forces(inst: Instance, S) -> np.ndarray:
    """(n, 2^n) diagonal of F_{Sbar,i}: the terms of F_i supported off S.

    Rows for i outside S are zero.
    """
    mask = _check_subset(inst, S)
    out = np.zeros((inst.n, 1 << inst.n))
    for i in np.flatnonzero(mask):
        for t in inst.incidence[i]:
            idx, sign = inst.terms[t]
            rest = [j for j in idx if j != i]
            if not mask[rest].any():
                out[i] += sign * _monomial(inst.n, rest)
    return out


def witness_angle(inst: Instance, p: float, x0: float) -> float:
    return p * x0 / math.sqrt(inst.d)


def _start_state(inst: Instance, mask: np.ndarray, w2_pattern) -> np.ndarray:
    if w2_pattern is None:
        return plus_state(inst.n)
    w2 = np.asarray(w2_pattern)
    if w2.shape != (inst.n,) or not np.all(np.isin(w2[~mask], (-1, 1))):
        raise InputError("w2_pattern must be a length-n vector with +-1 entries off S")
    plus = np.array([1, 1]) / math.sqrt(2)
    qubits = [plus if mask[b] else (np.array([1, 0]) if w2[b] > 0 else np.array([0, 1])) for b in range(inst.n)]
    return product_state(qubits)


def witness_state(inst: Instance, S, p: float, x0: float, w2_pattern=None) -> np.ndarray:
    """prod_{i in S} exp(i theta Y_i F_{Sbar,i}) applied to psi_+.

    With ``w2_pattern`` the off-S qubits start in the Z eigenstate given by
    the pattern instead of |+>.  The rotations commute (each is Y_i times a
    diagonal operator on off-S qubits) and are applied as
        cos(theta F) psi + i sin(theta F) Y_i psi.
    """
    check_qubits(inst.n)
    mask = _check_subset(inst, S)
    theta = witness_angle(inst, p, x0)
    psi = _start_state(inst, mask, w2_pattern)
    signs = _signs(inst.n)
    F = offset_forces(inst, mask)
    for i in np.flatnonzero(mask):
        ang = theta * F[i]
        y_psi = 1j * flip(psi * signs[i], i)
        psi = np.cos(ang) * psi + 1j * np.sin(ang) * y_psi
    return psi


def _off_s_weights(inst: Instance, mask: np.ndarray, w2_pattern) -> np.ndarray:
    """Probability of each basis index's off-S bits under the start state."""
    if w2_pattern is None:
        return np.full(1 << inst.n, 2.0 ** -inst.n)
    signs = _signs(inst.n)
    w2 = np.asarray(w2_pattern)
    hit = np.ones(1 << inst.n, dtype=bool)
    for b in np.flatnonzero(~mask):
        hit &= signs[b] == w2[b]
    return hit / hit.sum()


@dataclass
class WitnessReport:
    theta: float
    x_exact: dict[int, float]          # E cos(2 theta F_{Sbar,i})
    x_state: dict[int, float]          # <psi|X_i|psi>
    x_second_order: dict[int, float]   # 1 - 2 theta^2 E[F^2]
    x_remainder_bound: dict[int, float]  # (2/3) theta^4 E[F^4]
    hz_state: float                    # <psi|H_Z|psi>
    hz_product: float                  # E_off-S[H_Z with sin(2 theta F) on S]
    hz_linear: float                   # E_off-S[H_Z with 2 theta F on S]
    hz_remainder_bound: float
    max_abs_force: float


def witness_report(inst: Instance, S, p: float, x0: float, w2_pattern=None) -> WitnessReport:
    """Exact simulation of the witness state against its closed forms.

    Conjugating Z_i by exp(i theta F Y_i) gives cos(2 theta F) Z_i + sin(2 theta F) X_i,
    so each S qubit is a product-state qubit with <Z_i> = sin(2 theta F) and
    <X_i> = cos(2 theta F) for every off-S configuration.  The linearized
    value replaces sin(2 theta F) by 2 theta F = 2 x0 w1_i with w1_i = p F_i / sqrt(d).
    """
    mask = _check_subset(inst, S)
    theta = witness_angle(inst, p, x0)
    psi = witness_state(inst, mask, p, x0, w2_pattern)
    F = offset_forces(inst, mask)
    weight = _off_s_weights(inst, mask, w2_pattern)
    signs = _signs(inst.n).astype(float)
    x_exact, x_state, x_second, x_bound = {}, {}, {}, {}
    for i in np.flatnonzero(mask):
        i = int(i)
        x_exact[i] = float(weight @ np.cos(2 * theta * F[i]))
        x_state[i] = float(np.vdot(psi, flip(psi, i)).real)
        x_second[i] = float(1 - 2 * theta ** 2 * (weight @ F[i] ** 2))
        x_bound[i] = float(2.0 / 3.0 * theta ** 4 * (weight @ F[i] ** 4))
    # per-qubit Z values on each off-S configuration
    exact_z = np.where(mask[:, None], np.sin(2 * theta * F), signs)
    lin_z = np.where(mask[:, None], 2 * theta * F, signs)
    hz_product = hz_linear = bound = 0.0
    for idx, sign in inst.terms:
        on = [j for j in idx if mask[j]]
        hz_product += sign * float(weight @ np.prod(exact_z[list(idx)], axis=0))
        hz_linear += sign * float(weight @ np.prod(lin_z[list(idx)], axis=0))
        if on:
            ys = np.abs(lin_z[on])
            term = np.zeros(ys.shape[1])
            for a in range(len(on)):
                term += ys[a] ** 3 / 6 * np.prod(np.delete(ys, a, axis=0), axis=0)
            bound += float(weight @ term)
    hz_state = float((np.abs(psi) ** 2) @ diagonal(inst))
    return WitnessReport(
        theta=theta, x_exact=x_exact, x_state=x_state, x_second_order=x_second, x_remainder_bound=x_bound,
        hz_state=hz_state, hz_product=hz_product, hz_linear=hz_linear, hz_remainder_bound=bound,
        max_abs_force=float(np.abs(F).max()) if F.size else 0.0,
    )


# --------------------------------------------------------------------------
# three-state Krylov matrix


@dataclass
class Krylov3:
    matrix: np.ndarray      # 3x3 (or 2x2 when degenerate)
    alpha: float
    c: float                # N_T^{-1/2}
    d_coeff: float          # |2> = d_coeff H_Z|1> + e |0> + f |1>
    e: float
    f: float
    hz3: float              # <H_Z^3>_+
    bonami_bound: float     # 2^{3k/2} N_T^{3/2}
    degenerate: bool
    h02: float | None

    @property
    def bonami_ok(self) -> bool:
        return abs(self.hz3) <= self.bonami_bound


def krylov3(inst: Instance, alpha: float | None = None) -> Krylov3:
    """H restricted to span{psi_+, H_Z psi_+, H_Z^2 psi_+} (orthonormalized).

    ``alpha=None`` selects the dense value d / sqrt(N_T), which makes H_01 = 1.
    """
    check_qubits(inst.n)
    if inst.num_terms == 0:
        raise InputError("krylov3 needs at least one term")
    NT = inst.num_terms
    alpha = inst.d / math.sqrt(NT) if alpha is None else float(alpha)
    E = diagonal(inst).astype(float)
    zero = plus_state(inst.n)
    c = 1.0 / math.sqrt(norm_sq(E * zero))
    one = c * E * zero
    raw = E * one
    e = -np.vdot(zero, raw).real
    f = -np.vdot(one, raw).real
    rest = raw + e * zero + f * one
    rest -= np.vdot(zero, rest) * zero + np.vdot(one, rest) * one
    size = np.linalg.norm(rest)
    degenerate = size < 1e-10 * np.linalg.norm(raw)
    basis = [zero, one] if degenerate else [zero, one, rest / size]
    d_coeff = 0.0 if degenerate else 1.0 / size

    def H(v):
        return apply_x(v, inst.n) + (alpha / inst.d) * E * v

    M = np.array([[np.vdot(a, H(b)).real for b in basis] for a in basis])
    hz3 = float((np.abs(zero) ** 2) @ E ** 3)
    return Krylov3(
        matrix=M, alpha=alpha, c=c, d_coeff=d_coeff, e=e * d_coeff, f=f * d_coeff, hz3=hz3,
        bonami_bound=2.0 ** (1.5 * inst.k) * NT ** 1.5, degenerate=bool(degenerate),
        h02=None if degenerate else float(M[0, 2]),
    )


def krylov_h11(inst: Instance, alpha: float) -> float:
    """Closed form <1|H|1> = (n - 2k) + (alpha/d) <H_Z^3>_+ / N_T.

    |1> is an eigenstate of X with eigenvalue n - 2k: each monomial anticommutes
    with the k X_i on its support and commutes with the rest.
    """
    E = diagonal(inst).astype(float)
    hz3 = float(np.mean(E ** 3))
    return inst.n - 2 * inst.k + alpha / inst.d * hz3 / inst.num_terms


# --------------------------------------------------------------------------
# mean-field product states


@dataclass
class MeanFieldPoint:
    theta: float
    X: float
    HZ: float


def mean_field_scan(inst: Instance, z, thetas) -> list[MeanFieldPoint]:
    """Product states with <X_i> = cos(theta), <Z_i> = z_i sin(theta)."""
    value = evaluate(inst, z)
    return [MeanFieldPoint(theta=float(t), X=inst.n * math.cos(t), HZ=math.sin(t) ** inst.k * value)
            for t in thetas]


def mean_field_state(inst: Instance, z, theta: float) -> np.ndarray:
    check_qubits(inst.n)
    z = np.asarray(z)
    return product_state([bloch_qubit(math.cos(theta), int(zb) * math.sin(theta)) for zb in z])


# --------------------------------------------------------------------------
# velocity of the force


@dataclass
class VelocityReport:
    times: list[float]
    values: list[float]          # |Fdot_i exp(-iHv) psi_+|^2
    threshold: float | None      # (sqrt(d) / T)^2 when T is given
    above: list[bool] = field(default_factory=list)


def fdot_norm_plus(inst: Instance, i: int) -> float:
    """|Fdot_i psi_+|^2 from Pauli algebra: 4 (k-1)^2 deg(i).

    Strings from the same term multiply to X_j X_j' (expectation 1), strings
    from different terms leave a lone Z or Y (expectation 0).
    """
    fdot_strings(inst, i)  # range check
    return 4.0 * (inst.k - 1) ** 2 * len(inst.incidence[i])


def velocity_diagnostic(inst: Instance, alpha: float, i: int, times, T: float | None = None,
                        tolerance: float = DEFAULT_TOLERANCE) -> VelocityReport:
    """|Fdot_i psi(v)|^2 along the quench trajectory, at sorted times v."""
    times = [float(v) for v in times]
    if any(b < a for a, b in zip(times, times[1:])) or (times and times[0] < 0):
        raise InputError("times must be sorted and non-negative")
    psi = plus_state(inst.n)
    prev = 0.0
    values = []
    horizon = max(times[-1], 1e-300) if times else 1.0
    for v in times:
        if v > prev:
            psi = evolve(inst, alpha, psi, v - prev, tolerance * (v - prev) / horizon)
            prev = v
        values.append(norm_sq(apply_fdot(inst, i, psi)))
    threshold = None if T is None else (math.sqrt(inst.d) / T) ** 2
    above = [] if threshold is None else [val > threshold for val in values]
    return VelocityReport(times=times, values=values, threshold=threshold, above=above)


# --------------------------------------------------------------------------
# oscillation frequency of the antiferromagnet


@dataclass
class FrequencyEstimate:
    omega: float
    ratio: float                 # omega / sqrt(alpha)
    inconclusive: bool
    frequencies: np.ndarray = field(repr=False)
    power: np.ndarray = field(repr=False)
    series: np.ndarray = field(repr=False)


def dominant_frequency(times, values, pad: int = 8, min_contrast: float = 4.0):
    """Angular frequency of the periodogram peak with parabolic refinement.

    Returns ``(omega, freqs, power, inconclusive)``; the estimate is flagged
    inconclusive when the peak is not ``min_contrast`` times the median power.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.size < 4:
        raise InputError("need at least 4 samples")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
        raise InputError("samples must be uniformly spaced")
    y = y - y.mean()
    size = pad * t.size
    power = np.abs(np.fft.rfft(y, n=size)) ** 2
    freqs = 2 * np.pi * np.fft.rfftfreq(size, d=dt)
    j = int(np.argmax(power[1:])) + 1
    omega = freqs[j]
    if 1 <= j < power.size - 1:
        a, b, c = power[j - 1], power[j], power[j + 1]
        denom = a - 2 * b + c
        if denom != 0:
            omega += 0.5 * (a - c) / denom * (freqs[1] - freqs[0])
    inconclusive = bool(power[j] < min_contrast * max(np.median(power[1:]), 1e-300))
    return float(omega), freqs, power, inconclusive


def toy_frequency(n: int, alpha: float, t_max: float = 20.0, samples: int = 512,
                  tolerance: float = DEFAULT_TOLERANCE) -> FrequencyEstimate:
    """Dominant angular frequency of <H_Z>(t) for gen_antiferromagnet(n)."""
    if samples < 4:
        raise InputError("samples must be at least 4")
    inst = gen_antiferromagnet(n)
    check_qubits(n)
    times = list(np.linspace(0.0, t_max, samples))
    trace = run_quench(inst, QuenchConfig(alpha=alpha, t_final=t_max, sample_times=times, tolerance=tolerance,
                                          duality=False))
    series = trace.column("HZ")
    omega, freqs, power, inconclusive = dominant_frequency(times, series)
    return FrequencyEstimate(omega=omega, ratio=omega / math.sqrt(alpha), inconclusive=inconclusive,
                             frequencies=freqs, power=power, series=series)
