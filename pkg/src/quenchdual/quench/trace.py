"""Quench runs: evolve psi_+ through a list of times and record observables."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError
from ..instance import Instance, energy_table
from .observables import duality_observable, expectation, x_deficit, xminus_sq
from .state import DEFAULT_TOLERANCE, bitstring, evolve, plus_state, sample_bitstrings

log = logging.getLogger(__name__)

DEFAULT_SAMPLE_COUNT = 32
CSV_COLUMNS = ("t", "X", "HZ", "H", "Xvar", "duality_obs")


@dataclass
class QuenchConfig:
    alpha: float
    t_final: float
    sample_times: list[float] | None = None
    tolerance: float = DEFAULT_TOLERANCE
    seed: int = 0
    shots: int = 0
    duality: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputError("alpha must be positive")
        if not self.t_final >= 0:
            raise InputError("t_final must be non-negative")
        if not self.tolerance > 0:
            raise InputError("tolerance must be positive")
        if self.shots < 0:
            raise InputError("shots must be non-negative")
        if self.sample_times is None:
            self.sample_times = [float(t) for t in np.linspace(0.0, self.t_final, DEFAULT_SAMPLE_COUNT)]
        times = [float(t) for t in self.sample_times]
        if any(b < a for a, b in zip(times, times[1:])):
            raise InputError("sample_times must be sorted")
        if times and (times[0] < 0 or times[-1] > self.t_final):
            raise InputError("sample_times must lie within [0, t_final]")
        self.sample_times = times


@dataclass
class TracePoint:
    t: float
    X: float
    HZ: float
    H: float
    Xvar: float             # <(X - n)^2>
    duality_obs: float | None
    HZ2: float
    x_deficit: float        # n - <X>
    energy_balance: float   # <H_Z> - d (n - <X>) / alpha
    hvar_lhs: float         # sqrt(<(X - n)^2>)
    hvar_rhs: float         # (alpha/d) (sqrt(N_T) + sqrt(<H_Z^2>))
    norm_error: float


@dataclass
class QuenchTrace:
    points: list[TracePoint]
    samples: list[str] = field(default_factory=list)
    sample_energies: list[int] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for p in self.points:
            w.writerow([repr(float(getattr(p, c))) if getattr(p, c) is not None else "" for c in CSV_COLUMNS])
        for s in self.samples:
            w.writerow(["sample", s, "", "", "", ""])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "points": [vars(p).copy() for p in self.points],
            "samples": list(self.samples),
            "sample_energies": list(self.sample_energies),
        }


def observe(inst: Instance, alpha: float, psi: np.ndarray, t: float, duality: bool = True) -> TracePoint:
    n, d = inst.n, inst.d
    deficit = x_deficit(psi, n)
    hz = expectation(inst, alpha, psi, "HZ")
    hz2 = expectation(inst, alpha, psi, "HZ2")
    xvar = xminus_sq(psi, n)
    return TracePoint(
        t=float(t),
        X=n - deficit,
        HZ=hz,
        H=n - deficit + alpha / d * hz,
        Xvar=xvar,
        duality_obs=duality_observable(inst, alpha, psi) if duality else None,
        HZ2=hz2,
        x_deficit=deficit,
        energy_balance=hz - d * deficit / alpha,
        hvar_lhs=math.sqrt(xvar),
        hvar_rhs=alpha / d * (math.sqrt(inst.num_terms) + math.sqrt(hz2)),
        norm_error=abs(float(np.vdot(psi, psi).real) - 1.0),
    )


def run_quench(inst: Instance, config: QuenchConfig) -> QuenchTrace:
    """Evolve psi_+ through the sample times and measure at t_final.

    Each sample time continues from the previous state, with the tolerance
    split across intervals in proportion to their length.
    """
    log.info("quench instance=%s alpha=%g tolerance=%g seed=%d", inst.digest(), config.alpha,
             config.tolerance, config.seed)
    psi = plus_state(inst.n)
    points = []
    t_prev = 0.0
    horizon = max(config.t_final, 1e-300)
    stops = list(config.sample_times)
    for t in stops:
        if t > t_prev:
            psi = evolve(inst, config.alpha, psi, t - t_prev, config.tolerance * (t - t_prev) / horizon)
            t_prev = t
        points.append(observe(inst, config.alpha, psi, t, config.duality))
    if config.t_final > t_prev:
        psi = evolve(inst, config.alpha, psi, config.t_final - t_prev,
                     config.tolerance * (config.t_final - t_prev) / horizon)
    trace = QuenchTrace(points=points)
    if config.shots:
        idx = sample_bitstrings(psi, config.shots, np.random.default_rng(config.seed))
        trace.samples = [bitstring(x, inst.n) for x in idx]
        trace.sample_energies = [int(e) for e in energy_table(inst)[idx]]
    return trace
