"""MAX-K-LIN-2 instances: construction, generators, evaluation and file I/O.

An instance is a signed K-uniform hypergraph on ``n`` spins.  Each term is a
strictly increasing tuple of ``k`` spin indices with a sign in {-1, +1}, and
the objective is

    H_Z(z) = sum_terms sign * prod_{i in term} z_i.

Spin assignments use the values +1/-1 directly.  Exact integer arithmetic is
used whenever the input is a +-1 vector.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import GenerationError, InputError

Term = tuple[tuple[int, ...], int]


@dataclass(frozen=True)
class Instance:
    """Immutable signed K-uniform hypergraph with a degree bound.

    ``terms`` is kept in canonical sorted order; use :meth:`from_terms` to build
    an instance from unsorted data with ``d`` and ``regular`` inferred.
    """

    n: int
    k: int
    d: int
    terms: tuple[Term, ...]
    regular: bool = True

    def __post_init__(self):
        canonical = tuple(sorted((tuple(int(i) for i in idx), int(s)) for idx, s in self.terms))
        object.__setattr__(self, "terms", canonical)
        problems = validate_terms(self.n, self.k, self.terms)
        if problems:
            pos, msg = problems[0]
            raise InputError(f"term {pos}: {msg}" if pos is not None else msg)
        deg = self.degrees
        if self.regular:
            if np.any(deg != self.d):
                bad = int(np.flatnonzero(deg != self.d)[0])
                raise InputError(f"regular instance: spin {bad} has degree {deg[bad]}, expected {self.d}")
            if self.d * self.n != self.k * len(self.terms):
                raise InputError("regular instance: term count must equal d*n/k")
        else:
            maxdeg = int(deg.max()) if self.n else 0
            if self.d != maxdeg:
                raise InputError(f"non-regular instance: d={self.d} but maximum degree is {maxdeg}")

    @classmethod
    def from_terms(cls, n: int, k: int, terms: Iterable[tuple[Sequence[int], int]]) -> "Instance":
        """Build an instance, inferring ``d`` and the ``regular`` flag."""
        terms = tuple((tuple(sorted(int(i) for i in idx)), int(s)) for idx, s in terms)
        deg = np.zeros(n, dtype=np.int64)
        for idx, _ in terms:
            for i in idx:
                if 0 <= i < n:
                    deg[i] += 1
        d = int(deg.max()) if n else 0
        regular = bool(n) and bool(np.all(deg == d)) and d > 0
        return cls(n=n, k=k, d=d, terms=terms, regular=regular)

    @property
    def num_terms(self) -> int:
        """N_T, the number of monomials."""
        return len(self.terms)

    @cached_property
    def idx(self) -> np.ndarray:
        """(N_T, k) integer array of term indices."""
        if not self.terms:
            return np.zeros((0, self.k), dtype=np.int64)
        return np.array([t[0] for t in self.terms], dtype=np.int64)

    @cached_property
    def signs(self) -> np.ndarray:
        return np.array([t[1] for t in self.terms], dtype=np.int64)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.idx.ravel(), minlength=self.n).astype(np.int64)

    @cached_property
    def incidence(self) -> tuple[tuple[int, ...], ...]:
        """For each spin, the positions of the terms containing it."""
        inc: list[list[int]] = [[] for _ in range(self.n)]
        for t, (idx, _) in enumerate(self.terms):
            for i in idx:
                inc[i].append(t)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def masks(self) -> np.ndarray:
        """Bit mask of each term over basis-state indices (bit b <-> spin b)."""
        return np.array([sum(1 << i for i in idx) for idx, _ in self.terms], dtype=np.int64)

    def digest(self) -> str:
        """Short content hash of the canonical JSON form."""
        return hashlib.sha256(dumps_instance(self).encode()).hexdigest()[:16]


def validate_terms(n: int, k: int, terms: Sequence[Term]) -> list[tuple[int | None, str]]:
    """Return a list of (term position, message) for every invariant violation."""
    problems: list[tuple[int | None, str]] = []
    if n < 1:
        problems.append((None, f"n must be positive, got {n}"))
    if k < 2:
        problems.append((None, f"k must be at least 2, got {k}"))
    seen: dict[tuple[int, ...], int] = {}
    for pos, (idx, sign) in enumerate(terms):
        if sign not in (-1, 1):
            problems.append((pos, f"sign must be +1 or -1, got {sign}"))
        if len(idx) != k:
            problems.append((pos, f"expected {k} indices, got {len(idx)}"))
        if len(set(idx)) != len(idx):
            problems.append((pos, f"repeated index in {list(idx)}"))
        if any(i < 0 or i >= n for i in idx):
            problems.append((pos, f"index out of range [0, {n}) in {list(idx)}"))
        key = tuple(sorted(idx))
        if key in seen:
            problems.append((pos, f"duplicate monomial {list(key)} (also term {seen[key]})"))
        else:
            seen[key] = pos
    return problems


# --------------------------------------------------------------------------
# evaluation


def _as_vector(inst: Instance, v, name: str = "assignment") -> np.ndarray:
    v = np.asarray(v)
    if v.shape != (inst.n,):
        raise InputError(f"{name} has shape {v.shape}, expected ({inst.n},)")
    return v


def _is_spin_vector(z: np.ndarray) -> bool:
    return bool(np.all((z == 1) | (z == -1)))


def evaluate(inst: Instance, z) -> int:
    """Integer objective value of a +-1 assignment."""
    z = _as_vector(inst, z)
    if not _is_spin_vector(z):
        raise InputError("assignment entries must be exactly +1 or -1")
    z = z.astype(np.int64)
    if inst.num_terms == 0:
        return 0
    return int(np.prod(z[inst.idx], axis=1) @ inst.signs)


def multilinear_value(inst: Instance, v: np.ndarray) -> float:
    """Multilinear extension without range checks (vectors may exceed [-1, 1])."""
    if inst.num_terms == 0:
        return 0.0
    return float(np.prod(v[inst.idx], axis=1) @ inst.signs)


def evaluate_fractional(inst: Instance, v) -> float:
    """Multilinear extension of H_Z at a vector with entries in [-1, 1].

    Equals the expected objective under independent rounding with E[z_i] = v_i.
    """
    v = _as_vector(inst, v, "fractional assignment")
    if np.any(np.abs(v) > 1.0):
        raise InputError("fractional assignment entries must lie in [-1, 1]")
    if np.issubdtype(v.dtype, np.integer):
        return float(evaluate(inst, v)) if _is_spin_vector(v) else float(
            np.prod(v[inst.idx].astype(np.int64), axis=1) @ inst.signs
        )
    return multilinear_value(inst, v.astype(float))


def _distinct_arrangements(labels: Sequence[int]) -> list[tuple[int, ...]]:
    return sorted(set(itertools.permutations(labels)))


def evaluate_multivector(inst: Instance, vs: Sequence) -> float:
    """Symmetrized multilinear form H_Z(v_1, ..., v_k).

    Each term contributes the average over all k! assignments of vectors to its
    slots.  Equal input vectors are grouped, so the sum runs over the distinct
    arrangements of the grouped labels, each of which stands for the same
    number of permutations.
    """
    if len(vs) != inst.k:
        raise InputError(f"expected {inst.k} vectors, got {len(vs)}")
    arrays = [_as_vector(inst, v, "vector").astype(float) for v in vs]
    distinct: list[np.ndarray] = []
    labels: list[int] = []
    for a in arrays:
        for j, b in enumerate(distinct):
            if a is b or np.array_equal(a, b):
                labels.append(j)
                break
        else:
            labels.append(len(distinct))
            distinct.append(a)
    if inst.num_terms == 0:
        return 0.0
    stacked = np.stack(distinct)  # (m, n)
    arrangements = _distinct_arrangements(labels)
    total = np.zeros(inst.num_terms)
    for arr in arrangements:
        # slot s of every term reads from vector arr[s]
        total += np.prod(stacked[np.asarray(arr)[None, :], inst.idx], axis=1)
    return float((total / len(arrangements)) @ inst.signs)


def forces(inst: Instance, v) -> np.ndarray:
    """All forces F_i(v) at once.

    F_i is the sum over terms containing i of sign times the product of the
    other k-1 entries.  Integer dtype is preserved for integer input.
    """
    v = np.asarray(v)
    out = np.zeros(inst.n, dtype=np.int64 if np.issubdtype(v.dtype, np.integer) else float)
    if inst.num_terms == 0:
        return out
    vals = v[inst.idx]
    for p in range(inst.k):
        others = np.prod(np.delete(vals, p, axis=1), axis=1) * inst.signs
        np.add.at(out, inst.idx[:, p], others)
    return out


def force(inst: Instance, v, i: int) -> float:
    """Force on spin ``i``: the multilinear extension of z_i times i's terms."""
    if not 0 <= i < inst.n:
        raise InputError(f"spin index {i} out of range [0, {inst.n})")
    v = _as_vector(inst, v)
    total = 0
    for t in inst.incidence[i]:
        idx, sign = inst.terms[t]
        prod = sign
        for j in idx:
            if j != i:
                prod = prod * v[j]
        total = total + prod
    return total.item() if hasattr(total, "item") else total


# --------------------------------------------------------------------------
# generators


def gen_antiferromagnet(n: int) -> Instance:
    """All pairs with sign -1 on an even number of spins."""
    if n < 2 or n % 2:
        raise InputError(f"antiferromagnet needs an even n >= 2, got {n}")
    terms = [((i, j), -1) for i, j in itertools.combinations(range(n), 2)]
    return Instance(n=n, k=2, d=n - 1, terms=tuple(terms), regular=True)


def gen_cluster_antiferromagnet(m: int, d: int) -> Instance:
    """Order-2m antiferromagnet between ``d`` disjoint clusters of ``m`` spins."""
    if m < 1 or d < 2:
        raise InputError(f"cluster antiferromagnet needs m >= 1 and d >= 2, got m={m}, d={d}")
    clusters = [tuple(range(c * m, (c + 1) * m)) for c in range(d)]
    terms = [(a + b, -1) for a, b in itertools.combinations(clusters, 2)]
    return Instance(n=m * d, k=2 * m, d=d - 1, terms=tuple(terms), regular=True)


def gen_random_regular(n: int, k: int, d: int, seed=None, *, max_restarts: int = 200,
                       max_draws: int = 200) -> Instance:
    """Random d-regular k-uniform instance with i.i.d. uniform signs.

    Configuration-model pairing: the pool holds ``d`` stubs per spin and
    monomials are drawn as random k-subsets of the remaining stubs.  A draw that
    repeats a spin or an existing monomial is rejected; if ``max_draws`` draws
    in a row are rejected the construction restarts from an empty pool.
    """
    if n < k or k < 2 or d < 1:
        raise GenerationError(f"infeasible parameters n={n}, k={k}, d={d}")
    if (n * d) % k:
        raise GenerationError(f"k={k} must divide d*n={d * n}")
    if d > math.comb(n - 1, k - 1):
        raise GenerationError(f"d={d} exceeds the number of distinct monomials through a spin")
    rng = np.random.default_rng(seed)
    num_terms = n * d // k
    for _ in range(max_restarts):
        pool = list(np.repeat(np.arange(n), d))
        chosen: set[tuple[int, ...]] = set()
        order: list[tuple[int, ...]] = []
        stuck = False
        while pool:
            for _ in range(max_draws):
                pick = rng.choice(len(pool), size=k, replace=False)
                cand = tuple(sorted(int(pool[p]) for p in pick))
                if len(set(cand)) == k and cand not in chosen:
                    break
            else:
                stuck = True
                break
            chosen.add(cand)
            order.append(cand)
            for p in sorted(pick.tolist(), reverse=True):
                pool.pop(p)
        if stuck:
            continue
        signs = rng.choice(np.array([-1, 1]), size=num_terms)
        terms = tuple((t, int(s)) for t, s in zip(order, signs))
        return Instance(n=n, k=k, d=d, terms=terms, regular=True)
    raise GenerationError(f"no simple {k}-uniform {d}-regular hypergraph on {n} spins after {max_restarts} restarts")


def with_signs(inst: Instance, signs) -> Instance:
    """Same monomials, new signs (in canonical term order)."""
    signs = np.asarray(signs)
    if signs.shape != (inst.num_terms,):
        raise InputError("one sign per term required")
    terms = tuple((idx, int(s)) for (idx, _), s in zip(inst.terms, signs))
    return Instance(n=inst.n, k=inst.k, d=inst.d, terms=terms, regular=inst.regular)


def round_randomized(v, seed=None) -> np.ndarray:
    """Independent rounding: z_i = +1 with probability (1 + v_i) / 2."""
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(v) > 1.0):
        raise InputError("fractional assignment entries must lie in [-1, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return np.where(rng.random(v.shape) < (1.0 + v) / 2.0, 1, -1).astype(np.int64)


# --------------------------------------------------------------------------
# full energy table over basis states


def spin_signs(n: int) -> np.ndarray:
    """(n, 2**n) int8 array: entry [b, x] is +1 if bit b of x is 0 else -1."""
    x = np.arange(1 << n, dtype=np.int64)
    return (1 - 2 * ((x[None, :] >> np.arange(n)[:, None]) & 1)).astype(np.int8)


@lru_cache(maxsize=8)
def energy_table(inst: Instance) -> np.ndarray:
    """H_Z for every basis index (bit b = 0 means z_b = +1), as int64."""
    zs = spin_signs(inst.n)
    out = np.zeros(1 << inst.n, dtype=np.int64)
    for idx, sign in inst.terms:
        prod = zs[idx[0]].copy()
        for j in idx[1:]:
            prod *= zs[j]
        out += sign * prod.astype(np.int64)
    out.setflags(write=False)
    return out


def assignment_from_index(x: int, n: int) -> np.ndarray:
    return np.array([1 - 2 * ((x >> b) & 1) for b in range(n)], dtype=np.int64)


def index_from_assignment(z) -> int:
    return int(sum(1 << b for b, zb in enumerate(np.asarray(z)) if zb == -1))


# --------------------------------------------------------------------------
# JSON I/O


def dumps_instance(inst: Instance, meta: dict | None = None) -> str:
    """Canonical JSON text: header on one line, one term per line.

    ``meta`` is written on the header line and ignored by the loader; the
    digest is always taken without it.
    """
    extra = f'"meta": {json.dumps(meta, sort_keys=True)}, ' if meta else ""
    head = f'{{"n": {inst.n}, "k": {inst.k}, "d": {inst.d}, "regular": {"true" if inst.regular else "false"}, {extra}"terms": ['
    lines = [f'  {{"idx": [{", ".join(str(i) for i in idx)}], "sign": {s}}}' for idx, s in inst.terms]
    if not lines:
        return head + "]}\n"
    return head + "\n" + ",\n".join(lines) + "\n]}\n"


def save_instance(inst: Instance, path, meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_instance(inst, meta))


def _term_lines(text: str) -> list[int]:
    return [text.count("\n", 0, m.start()) + 1 for m in re.finditer(r'"idx"', text)]


def loads_instance(text: str) -> Instance:
    """Parse and validate instance JSON, reporting the offending line."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise InputError("line 1: top-level value must be an object")
    for key in ("n", "k", "d", "regular", "terms"):
        if key not in raw:
            raise InputError(f"line 1: missing field {key!r}")
    n, k, d, regular = raw["n"], raw["k"], raw["d"], raw["regular"]
    if not all(isinstance(x, int) and not isinstance(x, bool) for x in (n, k, d)):
        raise InputError("line 1: n, k, d must be integers")
    if not isinstance(regular, bool):
        raise InputError("line 1: regular must be a boolean")
    lines = _term_lines(text)

    def where(pos):
        return f"line {lines[pos]}" if pos is not None and pos < len(lines) else "line 1"

    terms = []
    for pos, t in enumerate(raw["terms"]):
        if not isinstance(t, dict) or "idx" not in t or "sign" not in t:
            raise InputError(f"{where(pos)}: term {pos} must have 'idx' and 'sign'")
        idx, sign = t["idx"], t["sign"]
        if not isinstance(idx, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in idx):
            raise InputError(f"{where(pos)}: term {pos} idx must be a list of integers")
        if not isinstance(sign, int) or isinstance(sign, bool):
            raise InputError(f"{where(pos)}: term {pos} sign must be an integer")
        if list(idx) != sorted(idx):
            raise InputError(f"{where(pos)}: term {pos} indices must be strictly increasing")
        terms.append((tuple(idx), sign))
    problems = validate_terms(n, k, terms)
    if problems:
        pos, msg = problems[0]
        raise InputError(f"{where(pos)}: {msg}")
    deg = Counter(i for idx, _ in terms for i in idx)
    if regular:
        for i in range(n):
            if deg.get(i, 0) != d:
                raise InputError(f"line 1: regular instance but spin {i} has degree {deg.get(i, 0)}, expected {d}")
    elif d != max(deg.values(), default=0):
        raise InputError(f"line 1: d={d} must equal the maximum degree {max(deg.values(), default=0)}")
    return Instance(n=n, k=k, d=d, terms=tuple(terms), regular=regular)


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return loads_instance(fh.read())
