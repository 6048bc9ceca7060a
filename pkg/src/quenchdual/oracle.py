"""Brute-force ground truth and empirical probability checks."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ResourceLimitError
from .instance import (Instance, assignment_from_index, energy_table, gen_random_regular,
                       spin_signs, with_signs)

BRUTE_FORCE_LIMIT = 24
EXACT_FORCE_SPINS = 15


@dataclass
class SpectrumSummary:
    max_energy: int
    argmax: np.ndarray
    min_energy: int
    argmin: np.ndarray
    histogram: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "max_energy": self.max_energy,
            "argmax": [int(z) for z in self.argmax],
            "min_energy": self.min_energy,
            "argmin": [int(z) for z in self.argmin],
            "histogram": {str(e): c for e, c in sorted(self.histogram.items())},
        }


def _gray(t: np.ndarray | int):
    return t ^ (t >> 1)


def gray_code_energies(inst: Instance, limit: int = BRUTE_FORCE_LIMIT) -> np.ndarray:
    """Energy of every basis index, enumerated along a Gray code.

    The high ``L`` bits label independent blocks that are walked in lockstep;
    inside a block consecutive states differ in one low bit b, and the energy
    changes by -2 z_b F_b(z), which only touches the d terms containing b.
    """
    n = inst.n
    if n > limit:
        raise ResourceLimitError(f"n={n} exceeds the brute-force limit {limit}")
    L = min(n // 2, 12)
    m = n - L
    blocks = np.arange(1 << L, dtype=np.int64)
    # z[b] is spin b across all blocks; low bits start at 0 (z = +1)
    z = np.ones((n, blocks.size), dtype=np.int64)
    for j in range(L):
        z[m + j] = 1 - 2 * ((blocks >> j) & 1)
    energy = np.prod(z[inst.idx], axis=1).T @ inst.signs if inst.num_terms else np.zeros(blocks.size, np.int64)
    table = np.empty((blocks.size, 1 << m), dtype=np.int64)
    table[:, 0] = energy
    inc = [(inst.idx[list(ts)], inst.signs[list(ts)]) for ts in inst.incidence]
    for t in range(1, 1 << m):
        b = (t & -t).bit_length() - 1
        rows, sg = inc[b]
        if rows.size:
            local = (np.prod(z[rows], axis=1).T @ sg)  # z_b F_b(z) for each block
            energy = energy - 2 * local
        z[b] = -z[b]
        table[:, _gray(t)] = energy
    return table.reshape(-1)


def brute_force_optimum(inst: Instance, limit: int = BRUTE_FORCE_LIMIT) -> SpectrumSummary:
    """Exact max/min over all 2^n assignments (ties resolved to the smallest index)."""
    energies = gray_code_energies(inst, limit)
    lo = int(energies.min())
    counts = np.bincount(energies - lo)
    hist = {int(e + lo): int(c) for e, c in enumerate(counts) if c}
    imax = int(np.argmax(energies))
    imin = int(np.argmin(energies))
    return SpectrumSummary(
        max_energy=int(energies[imax]), argmax=assignment_from_index(imax, inst.n),
        min_energy=int(energies[imin]), argmin=assignment_from_index(imin, inst.n),
        histogram=hist,
    )


def hypercontractive_tail(t: float, k: int) -> float:
    """exp(-(k / 2e) t^(2/k)), valid for t >= (2e)^(k/2)."""
    return math.exp(-(k / (2 * math.e)) * t ** (2.0 / k))


@dataclass
class ForceMoments:
    mean_sq: float
    tail_table: list[tuple[float, float]]   # (t, Pr[|F_i| >= t sqrt(d)])
    mode: str
    samples: int | None = None

    def to_dict(self) -> dict:
        return {"mean_sq": self.mean_sq, "mode": self.mode, "samples": self.samples,
                "tail_table": [[t, p] for t, p in self.tail_table]}


def _force_terms(inst: Instance, i: int):
    """Sorted relevant spins and, per term of i, (positions into them, sign)."""
    rel = sorted({j for t in inst.incidence[i] for j in inst.terms[t][0] if j != i})
    pos = {j: a for a, j in enumerate(rel)}
    terms = [([pos[j] for j in inst.terms[t][0] if j != i], inst.terms[t][1]) for t in inst.incidence[i]]
    return rel, terms


def default_thresholds(k: int) -> list[float]:
    base = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0]
    return base + [(2 * math.e) ** (k / 2)]


def force_moment_stats(inst: Instance, i: int, mode: str = "exact", *, trials: int = 100_000, seed=None,
                       thresholds=None, conditioned: bool = True,
                       max_spins: int = EXACT_FORCE_SPINS) -> ForceMoments:
    """Second moment and tail frequencies of F_i(w2) under the S-construction.

    Each spin is in S (w2 = 0) with probability 1/2 and otherwise a uniform
    sign.  With ``conditioned=False`` every spin is a uniform sign.
    Exact mode enumerates the spins of i's terms only.
    """
    if not 0 <= i < inst.n:
        raise InputError(f"spin index {i} out of range [0, {inst.n})")
    thresholds = default_thresholds(inst.k) if thresholds is None else list(thresholds)
    rel, terms = _force_terms(inst, i)
    m = len(rel)
    if mode == "exact":
        values = np.array([0, 1, -1]) if conditioned else np.array([1, -1])
        weights = np.array([0.5, 0.25, 0.25]) if conditioned else np.array([0.5, 0.5])
        if m > max_spins:
            raise ResourceLimitError(f"exact mode needs {len(values)}^{m} states; limit is {max_spins} spins")
        grid = np.array(list(itertools.product(range(len(values)), repeat=m)), dtype=np.int64).reshape(-1, m)
        W = values[grid]
        prob = np.prod(weights[grid], axis=1) if m else np.ones(1)
        count = None
    elif mode == "sampled":
        if trials < 1:
            raise InputError("trials must be positive")
        rng = np.random.default_rng(seed)
        signs = rng.choice(np.array([-1, 1]), size=(trials, m))
        W = np.where(rng.random((trials, m)) < 0.5, 0, signs) if conditioned else signs
        prob = None
        count = trials
    else:
        raise InputError(f"unknown mode {mode!r}")
    F = np.zeros(W.shape[0], dtype=np.int64)
    for cols, sign in terms:
        F += sign * np.prod(W[:, cols], axis=1)
    scale = math.sqrt(inst.d)
    absF = np.abs(F)
    if prob is None:
        mean_sq = float(np.mean(F.astype(float) ** 2))
        table = [(float(t), np.count_nonzero(absF >= t * scale) / trials) for t in sorted(thresholds)]
    else:
        mean_sq = float(prob @ (F.astype(float) ** 2))
        table = [(float(t), float(prob @ (absF >= t * scale))) for t in sorted(thresholds)]
    return ForceMoments(mean_sq=mean_sq, tail_table=table, mode=mode, samples=count)


@dataclass
class ExtremeStats:
    values: np.ndarray          # max |H_Z| per trial
    normalized: np.ndarray      # max |H_Z| / (n sqrt(d))
    quantiles: dict[str, float]

    def to_dict(self) -> dict:
        return {"max_abs": [int(v) for v in self.values], "quantiles": self.quantiles}


def random_model_extremes(n: int, k: int, d: int, trials: int, seed=None, *, inst: Instance | None = None,
                          limit: int = BRUTE_FORCE_LIMIT) -> ExtremeStats:
    """max |H_Z| over random-sign copies of one fixed hypergraph.

    The hypergraph is ``inst``'s monomial set if given, otherwise a random
    regular one drawn from ``seed``.
    """
    if n > limit:
        raise ResourceLimitError(f"n={n} exceeds the brute-force limit {limit}")
    ss = np.random.SeedSequence(seed)
    graph_seq, sign_seq = ss.spawn(2)
    if inst is None:
        inst = gen_random_regular(n, k, d, np.random.default_rng(graph_seq))
    rng = np.random.default_rng(sign_seq)
    # monomial values over all basis states, reused for every sign draw
    zs = spin_signs(inst.n)
    mono = np.empty((inst.num_terms, 1 << inst.n), dtype=np.int8)
    for t, (idx, _) in enumerate(inst.terms):
        prod = zs[idx[0]].copy()
        for j in idx[1:]:
            prod *= zs[j]
        mono[t] = prod
    out = np.empty(trials, dtype=np.int64)
    for r in range(trials):
        signs = rng.choice(np.array([-1, 1], dtype=np.int64), size=inst.num_terms)
        energies = signs @ mono
        out[r] = int(np.abs(energies).max())
    norm = out / (inst.n * math.sqrt(inst.d))
    qs = {f"q{int(round(q * 100)):02d}": float(np.quantile(norm, q)) for q in (0.5, 0.9, 0.99)}
    qs["max"] = float(norm.max())
    return ExtremeStats(values=out, normalized=norm, quantiles=qs)


def second_moment_uniform(inst: Instance) -> float:
    """<H_Z^2> over uniform assignments, by exhaustive averaging."""
    e = energy_table(inst).astype(float)
    return float(np.mean(e * e))


def extremes_with_fixed_signs(inst: Instance, signs) -> SpectrumSummary:
    return brute_force_optimum(with_signs(inst, signs))
