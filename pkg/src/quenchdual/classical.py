"""Randomized classical algorithm and its amplification loop.

One run samples a half-density set S, fills the complement with random signs
(w2), sets w1 on S from the forces F_i(w2) and hands the pair to the item-1
combiner.  The greedy variant uses sign(F_i); the scaled variant uses
p * F_i / sqrt(d) clipped to [-1, 1].
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ContractError, DegenerateInputError, InputError
from .instance import Instance, evaluate, forces, round_randomized
from .polycombine import DEFAULT_GRID, CombineOutcome, combine_item1

log = logging.getLogger(__name__)

MAX_RESAMPLES = 64


def default_repetitions(d: int) -> int:
    return min(max(1, math.ceil(d * d)), 10_000)


@dataclass
class RunConfig:
    variant: str = "greedy"
    epsilon: float = 1.0
    p: float = 1.0
    repetitions: int | None = None
    grid_points: int = DEFAULT_GRID
    seed: int = 0

    def __post_init__(self):
        if self.variant not in ("greedy", "scaled"):
            raise InputError(f"unknown variant {self.variant!r}")
        if not self.epsilon > 0:
            raise InputError("epsilon must be positive")
        if self.variant == "scaled" and not 0 < self.p <= 1:
            raise InputError("p must lie in (0, 1]")
        if self.repetitions is not None and self.repetitions < 1:
            raise InputError("repetitions must be at least 1")

    def advisory_p_bound(self, k: int, c: float = 4.0) -> float:
        """(2 e c)^(-k/2); logged for the scaled variant, never enforced."""
        return (2 * math.e * c) ** (-k / 2)


@dataclass
class Step:
    S: np.ndarray      # boolean mask
    w1: np.ndarray
    w2: np.ndarray
    F: np.ndarray      # forces at w2
    C: float


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _sample_w2(inst: Instance, rng: np.random.Generator):
    S = rng.random(inst.n) < 0.5
    signs = rng.choice(np.array([-1, 1]), size=inst.n)
    w2 = np.where(S, 0, signs).astype(np.int64)
    return S, w2


def greedy_step(inst: Instance, seed=None) -> Step:
    """w1_i = sign(F_i(w2)) on S (ties to +1); C = sum_{i in S} |F_i(w2)|."""
    rng = _rng(seed)
    S, w2 = _sample_w2(inst, rng)
    F = forces(inst, w2)
    w1 = np.where(S, np.where(F >= 0, 1, -1), 0).astype(np.int64)
    C = int(np.sum(np.abs(F[S])))
    return Step(S=S, w1=w1, w2=w2, F=F, C=C)


def scaled_step(inst: Instance, p: float, seed=None) -> Step:
    """w1_i = clip(p F_i(w2) / sqrt(d), -1, 1) on S; C = sum_i F_i w1_i."""
    if not 0 < p <= 1:
        raise InputError("p must lie in (0, 1]")
    rng = _rng(seed)
    S, w2 = _sample_w2(inst, rng)
    F = forces(inst, w2)
    w1 = np.where(S, np.clip(p * F / math.sqrt(inst.d), -1.0, 1.0), 0.0)
    C = float(F @ w1)
    return Step(S=S, w1=w1, w2=w2.astype(float), F=F, C=C)


def sign_flip_odd_k(inst: Instance, z) -> np.ndarray:
    """Negate every spin; for odd k this negates the objective."""
    if inst.k % 2 == 0:
        raise ContractError(f"sign flip only reverses the objective for odd k, got k={inst.k}")
    return -np.asarray(z)


@dataclass
class DualityReport:
    branch: str
    C: float
    hz_w2: float
    hz_u: float
    rounded_energy: int
    s_size: int
    improvement_ratio: float
    seed: int
    repetition: int
    guarantee: float
    x: float | None
    witness_index: int | None
    resamples: int
    normalized_energy: int
    flipped: bool
    rounded: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rounded"] = "".join("0" if z > 0 else "1" for z in self.rounded)
        out.pop("u")
        return out


def _seed_sequence(seed: int, repetition: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(repetition,))


def _run_rep(inst: Instance, config: RunConfig, repetition: int) -> DualityReport:
    rng = np.random.default_rng(_seed_sequence(config.seed, repetition))
    for attempt in range(MAX_RESAMPLES):
        if config.variant == "greedy":
            step = greedy_step(inst, rng)
        else:
            step = scaled_step(inst, config.p, rng)
        if step.C <= 0:
            continue
        try:
            out: CombineOutcome = combine_item1(inst, step.w1, step.w2, config.epsilon, config.grid_points)
        except DegenerateInputError:
            continue
        break
    else:
        raise DegenerateInputError(f"C <= 0 on {MAX_RESAMPLES} consecutive samples")
    z = round_randomized(np.clip(out.u, -1.0, 1.0), rng)
    energy = evaluate(inst, z)
    flipped = inst.k % 2 == 1 and energy < 0
    return DualityReport(
        branch=out.branch,
        C=float(step.C),
        hz_w2=float(out.baseline),
        hz_u=float(out.value),
        rounded_energy=int(energy),
        s_size=int(step.S.sum()),
        improvement_ratio=float(out.value) / max(inst.num_terms, 1),
        seed=int(config.seed),
        repetition=int(repetition),
        guarantee=float(out.guarantee),
        x=out.x,
        witness_index=out.witness_index,
        resamples=attempt,
        normalized_energy=-energy if flipped else energy,
        flipped=bool(flipped),
        rounded=sign_flip_odd_k(inst, z) if flipped else z,
        u=out.u,
    )


def run_once(inst: Instance, config: RunConfig) -> DualityReport:
    """One pass of sampling, combining and rounding (repetition 0 of ``config.seed``).

    For odd k a negative rounded energy is reported with ``flipped`` set and
    ``rounded`` holding the negated assignment.
    """
    if config.variant == "scaled" and config.p > config.advisory_p_bound(inst.k):
        log.info("p=%g above advisory bound %.3g", config.p, config.advisory_p_bound(inst.k))
    return _run_rep(inst, config, 0)


@dataclass
class AmplifiedResult:
    best: DualityReport
    reports: list[DualityReport]
    summary: dict


def _summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    q = np.quantile(v, [0.1, 0.5, 0.9])
    return {"mean": float(v.mean()), "max": float(v.max()), "min": float(v.min()),
            "q10": float(q[0]), "q50": float(q[1]), "q90": float(q[2])}


def run_amplified(inst: Instance, config: RunConfig, workers: int = 1) -> AmplifiedResult:
    """Independent repetitions; keeps the largest sign-normalized rounded energy.

    Repetition r draws from SeedSequence(seed, spawn_key=(r,)), so a longer run
    extends a shorter one and its best energy can only grow.  Results do not
    depend on ``workers``.
    """
    reps = config.repetitions if config.repetitions is not None else default_repetitions(inst.d)
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_rep, [inst] * reps, [config] * reps, range(reps),
                                    chunksize=max(1, reps // (4 * workers))))
    else:
        reports = [_run_rep(inst, config, r) for r in range(reps)]
    best = max(reports, key=lambda rep: (rep.normalized_energy, -rep.repetition))
    summary = {
        "repetitions": reps,
        "branch_B_fraction": sum(r.branch == "B" for r in reports) / reps,
        "C": _summary([r.C for r in reports]),
        "rounded_energy": _summary([r.normalized_energy for r in reports]),
        "hz_u": _summary([r.hz_u for r in reports]),
    }
    return AmplifiedResult(best=best, reports=reports, summary=summary)


def random_baseline(inst: Instance, count: int, seed=None) -> int:
    """Best energy among ``count`` uniform random assignments (odd k: best |energy|)."""
    rng = _rng(seed)
    Z = rng.choice(np.array([-1, 1]), size=(count, inst.n))
    energies = np.prod(Z[:, inst.idx], axis=2) @ inst.signs
    if inst.k % 2:
        energies = np.abs(energies)
    return int(energies.max())


def check_report(inst: Instance, rep: DualityReport, epsilon: float, slack: float = 1e-9) -> bool:
    """Exactly one branch was taken and its inequality holds."""
    if rep.branch == "A":
        return rep.hz_u >= rep.hz_w2 + epsilon * rep.C / 6 - slack
    if rep.branch == "B":
        return abs(rep.hz_u) >= rep.guarantee - slack
    return False


