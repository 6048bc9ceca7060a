"""Combining several fractional solutions into one.

Given vectors w1, w2 the objective restricted to the line x*w1 + w2 is a
univariate polynomial Q(x) of degree at most k.  Its coefficients drive three
constructions:

* item 2: maximize |Q| on [-1, 1]; a Chebyshev argument bounds the result
  below by |a1|/k (|a1|/(k-1) for even k);
* item 3: from k vectors, enumerate the 2^k sign patterns of
  u(x) = (1/k) sum_a x_a w_a and keep the one with the largest |H_Z|;
* item 1: either the signed maximum of Q improves on Q(0) by eps*C/6
  (branch A), or some coefficient a_i is at least C/(6 eps) and item 3 on
  (w1 x i, w2 x (k-i)) yields a large |H_Z| (branch B).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DegenerateInputError, InputError
from .instance import Instance, evaluate_multivector, multilinear_value

DEFAULT_GRID = 10_000


@dataclass(frozen=True)
class UniPoly:
    """Real polynomial a_0 + a_1 x + ... + a_k x^k."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0 or not np.all(np.isfinite(c)):
            raise InputError("polynomial coefficients must be a finite 1-d vector")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, x):
        return P.polyval(x, self.coeffs)

    def derivative_bound(self) -> float:
        """L = sum_i i |a_i|, a Lipschitz constant of Q on [-1, 1]."""
        return float(np.sum(np.arange(self.coeffs.size) * np.abs(self.coeffs)))

    def grid_tolerance(self, grid_points: int) -> float:
        return self.derivative_bound() * 2.0 / grid_points


def _check_pair(inst: Instance, w1, w2) -> tuple[np.ndarray, np.ndarray]:
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    if w1.shape != (inst.n,) or w2.shape != (inst.n,):
        raise InputError(f"line endpoints must both have length {inst.n}")
    return w1, w2


def chebyshev_nodes(count: int) -> np.ndarray:
    j = np.arange(count)
    return np.cos((2 * j + 1) * np.pi / (2 * count))


def restrict_to_line(inst: Instance, w1, w2) -> UniPoly:
    """Coefficients of x -> H_Z(x*w1 + w2), by interpolation at Chebyshev nodes."""
    w1, w2 = _check_pair(inst, w1, w2)
    nodes = chebyshev_nodes(inst.k + 1)
    values = np.array([multilinear_value(inst, x * w1 + w2) for x in nodes])
    vander = np.vander(nodes, inst.k + 1, increasing=True)
    return UniPoly(np.linalg.solve(vander, values))


def line_coefficients_multivector(inst: Instance, w1, w2) -> np.ndarray:
    """Second route to the same coefficients: a_i = C(k,i) H_Z(w1 x i, w2 x (k-i))."""
    w1, w2 = _check_pair(inst, w1, w2)
    k = inst.k
    return np.array([math.comb(k, i) * evaluate_multivector(inst, [w1] * i + [w2] * (k - i))
                     for i in range(k + 1)])


def sign_patterns(k: int) -> np.ndarray:
    """All of {-1,+1}^k in lexicographic order, (-1,...,-1) first."""
    return np.array(list(itertools.product((-1, 1), repeat=k)), dtype=np.int64)


def coefficient_by_sign_average(p: Callable[[np.ndarray], float], k: int):
    """Coefficient of x_1 x_2 ... x_k in a polynomial of order <= k.

    Returns ``(C, pattern, max_abs)`` where C = 2^-k sum_x (prod x) p(x) and
    ``pattern`` is the first sign pattern maximizing |p|; max_abs >= |C|.
    """
    patterns = sign_patterns(k)
    values = np.array([float(p(x)) for x in patterns])
    coeff = float(np.prod(patterns, axis=1) @ values) / 2 ** k
    best = int(np.argmax(np.abs(values)))
    return coeff, patterns[best], float(abs(values[best]))


def maximize_on_interval(q: UniPoly, mode: str = "absolute", grid_points: int = DEFAULT_GRID):
    """Grid search for the maximum of q (``signed``) or |q| (``absolute``) on [-1, 1].

    Returns ``(x, value)``; ``value`` is within ``q.grid_tolerance(grid_points)``
    of the true optimum.  Ties go to the smallest x.
    """
    if grid_points < 2:
        raise InputError("grid_points must be at least 2")
    if mode not in ("signed", "absolute"):
        raise InputError(f"unknown mode {mode!r}")
    xs = np.linspace(-1.0, 1.0, grid_points)
    ys = q(xs)
    if mode == "absolute":
        ys = np.abs(ys)
    j = int(np.argmax(ys))
    return float(xs[j]), float(ys[j])


@dataclass
class Item3Result:
    u: np.ndarray
    value: float          # H_Z(u)
    multiform: float      # C = H_Z(w_1, ..., w_k)
    sign_coefficient: float  # coefficient of prod x_a in Q(x_1..x_k), = k! C
    pattern: np.ndarray
    bound: float          # (k!/k^k) |C|


def _expand_basis(inst: Instance, basis) -> list[np.ndarray]:
    vectors: list[np.ndarray] = []
    for vec, mult in basis:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (inst.n,):
            raise InputError(f"basis vectors must have length {inst.n}")
        if np.any(np.abs(vec) > 1.0):
            raise InputError("basis vector entries must lie in [-1, 1]")
        if mult < 0:
            raise InputError("multiplicities must be non-negative")
        vectors.extend([vec] * int(mult))
    if len(vectors) != inst.k:
        raise InputError(f"multiplicities sum to {len(vectors)}, expected k={inst.k}")
    return vectors


def combine_item3(inst: Instance, basis: Sequence[tuple[np.ndarray, int]], c_target: float | None = None) -> Item3Result:
    """Best single vector from k (possibly repeated) vectors via sign patterns.

    ``c_target`` overrides the multilinear value used for the reported bound.
    """
    vectors = _expand_basis(inst, basis)
    W = np.stack(vectors)  # (k, n)
    k = inst.k

    def q(x):
        return multilinear_value(inst, x @ W)

    coeff, pattern, max_abs = coefficient_by_sign_average(q, k)
    u = (pattern @ W) / k
    multiform = evaluate_multivector(inst, vectors) if c_target is None else float(c_target)
    return Item3Result(
        u=u,
        value=multilinear_value(inst, u),
        multiform=multiform,
        sign_coefficient=coeff,
        pattern=pattern,
        bound=math.factorial(k) / k ** k * abs(multiform),
    )


@dataclass
class CombineOutcome:
    branch: str | None        # "A", "B", or None for item 2
    u: np.ndarray
    value: float              # H_Z(u)
    guarantee: float          # certified lower bound (see ``kind``)
    kind: str                 # "gain" (value - baseline >= guarantee) or "abs" (|value| >= guarantee)
    coeffs: np.ndarray
    C: float
    baseline: float           # Q(0) = H_Z(w2)
    x: float | None = None
    tolerance: float = 0.0    # grid error allowance on the guarantee
    witness_index: int | None = None
    witness_pattern: np.ndarray | None = field(default=None)

    def holds(self, slack: float = 1e-9) -> bool:
        if self.kind == "gain":
            return self.value - self.baseline >= self.guarantee - self.tolerance - slack
        return abs(self.value) >= self.guarantee - self.tolerance - slack

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "value": self.value,
            "guarantee": self.guarantee,
            "kind": self.kind,
            "C": self.C,
            "baseline": self.baseline,
            "x": self.x,
            "tolerance": self.tolerance,
            "coeffs": [float(c) for c in self.coeffs],
            "witness_index": self.witness_index,
            "witness_pattern": None if self.witness_pattern is None else [int(s) for s in self.witness_pattern],
        }


def chebyshev_bound(a1: float, k: int) -> float:
    """Lower bound on max |Q| over [-1, 1] given the linear coefficient."""
    return abs(a1) / (k if k % 2 else k - 1)


def combine_item2(inst: Instance, w1, w2, grid_points: int = DEFAULT_GRID) -> CombineOutcome:
    """Maximize |H_Z(x*w1 + w2)| over x in [-1, 1]."""
    w1, w2 = _check_pair(inst, w1, w2)
    if np.any(np.abs(w1) > 1.0) or np.any(np.abs(w2) > 1.0):
        raise InputError("w1 and w2 entries must lie in [-1, 1]")
    q = restrict_to_line(inst, w1, w2)
    x, _ = maximize_on_interval(q, "absolute", grid_points)
    u = x * w1 + w2
    a1 = float(q.coeffs[1]) if q.degree >= 1 else 0.0
    return CombineOutcome(
        branch=None, u=u, value=multilinear_value(inst, u), guarantee=chebyshev_bound(a1, inst.k),
        kind="abs", coeffs=q.coeffs, C=a1, baseline=float(q.coeffs[0]), x=x,
        tolerance=q.grid_tolerance(grid_points),
    )


def combine_item1(inst: Instance, w1, w2, epsilon: float, grid_points: int = DEFAULT_GRID) -> CombineOutcome:
    """Pretty-good-or-very-bad dichotomy for the pair (w1, w2).

    C is the linear coefficient of Q.  Branch A returns u = x*w1 + w2 with
    H_Z(u) >= H_Z(w2) + eps*C/6.  Otherwise branch B picks, among the i with
    |a_i| >= C/(6 eps), the one with the best certified item-3 bound
    (k!/k^k) |a_i| / C(k, i), and combines (w1 x i, w2 x (k-i)).
    """
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    w1, w2 = _check_pair(inst, w1, w2)
    k = inst.k
    q = restrict_to_line(inst, w1, w2)
    a = q.coeffs
    C = float(a[1])
    # interpolation leaves roundoff of order 1e-16 * |a|, so treat that band as zero
    if not C > 1e-12 * max(1.0, float(np.max(np.abs(a)))):
        raise DegenerateInputError(f"first-order coefficient C={C} is not positive")
    a0 = float(a[0])
    a_max = float(np.max(np.abs(a[1:])))
    # the grid plus the point C/(4 a_max), where Q(x) >= a0 + C^2/(6 a_max) is guaranteed
    xs = np.append(np.linspace(-1.0, 1.0, grid_points), C / (4.0 * a_max))
    ys = q(xs)
    j = int(np.argmax(ys))
    threshold = epsilon * C / 6.0
    if ys[j] >= a0 + threshold:
        x = float(xs[j])
        u = x * w1 + w2
        return CombineOutcome(
            branch="A", u=u, value=multilinear_value(inst, u), guarantee=threshold, kind="gain",
            coeffs=a, C=C, baseline=a0, x=x,
        )
    cutoff = C / (6.0 * epsilon)
    scale = math.factorial(k) / k ** k
    candidates = [i for i in range(1, k + 1) if abs(a[i]) >= cutoff]
    if not candidates:  # only reachable through rounding error
        candidates = [int(np.argmax(np.abs(a[1:]))) + 1]
    i = max(candidates, key=lambda i: (scale * abs(a[i]) / math.comb(k, i), -i))
    basis = [(w1, i)] + ([(w2, k - i)] if k - i else [])
    res = combine_item3(inst, basis)
    return CombineOutcome(
        branch="B", u=res.u, value=res.value, guarantee=scale * cutoff / math.comb(k, i), kind="abs",
        coeffs=a, C=C, baseline=a0, witness_index=i, witness_pattern=res.pattern,
    )
