"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary (see conftest) and, with
``-s``, as each criterion finishes.
"""
import itertools
import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from quenchdual.classical import RunConfig, random_baseline, run_amplified
from quenchdual.cli import main
from quenchdual.instance import (
    Instance,
    energy_table,
    evaluate_fractional,
    gen_antiferromagnet,
    gen_random_regular,
    spin_signs,
)
from quenchdual.oracle import brute_force_optimum, force_moment_stats, hypercontractive_tail
from quenchdual.polycombine import combine_item1, combine_item2, combine_item3, restrict_to_line
from quenchdual.quench import (
    QuenchConfig,
    evolve,
    krylov3,
    plus_state,
    quantum_combine,
    run_quench,
    toy_frequency,
    witness_report,
)

QUENCH_INSTANCES = [(14, 3, 3, 0), (12, 2, 5, 1), (12, 4, 3, 2), (14, 2, 3, 3), (12, 3, 4, 4)]
QUENCH_ALPHAS = (0.5, 2.0, 8.0)


def record(num, title, ok, detail):
    line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES[num] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def quench_traces():
    traces = []
    start = time.perf_counter()
    for n, k, d, seed in QUENCH_INSTANCES:
        inst = gen_random_regular(n, k, d, seed=seed)
        for alpha in QUENCH_ALPHAS:
            traces.append((inst, alpha, run_quench(inst, QuenchConfig(alpha=alpha, t_final=2.0, duality=False))))
    return traces, time.perf_counter() - start


# ---------------------------------------------------------------- 1


def test_criterion_01_exact_identities():
    start = time.perf_counter()
    worst = []
    for n, k, d, seed in [(16, 2, 5, 0), (15, 3, 4, 1), (16, 4, 3, 2)]:
        inst = gen_random_regular(n, k, d, seed=seed)
        Z = spin_signs(n).astype(np.int64)           # (n, 2^n)
        table = energy_table(inst).astype(np.int64)
        zf = np.zeros(1 << n, dtype=np.int64)
        for i in range(n):
            F = np.zeros(1 << n, dtype=np.int64)
            for t in inst.incidence[i]:
                idx, sign = inst.terms[t]
                F += sign * np.prod(Z[[j for j in idx if j != i]], axis=0)
            zf += Z[i] * F
        force_ok = np.array_equal(zf, k * table)
        moment_ok = int(np.sum(table * table)) == inst.num_terms * (1 << n)
        frac_ok = all(evaluate_fractional(inst, Z[:, x].astype(float)) == table[x] for x in range(1 << n))
        worst.append(force_ok and moment_ok and frac_ok)
    elapsed = time.perf_counter() - start
    record(1, "exact identities", all(worst) and elapsed < 10,
           f"k=2,3,4 exhaustive over 2^16/2^15 states, all identities exact={all(worst)}, {elapsed:.1f}s")


# ---------------------------------------------------------------- 2-4


def test_criterion_02_quench_conservation(quench_traces):
    traces, elapsed = quench_traces
    drift = max(np.max(np.abs(tr.column("H") - inst.n)) / inst.n for inst, _, tr in traces)
    balance = max(np.max(np.abs(tr.column("energy_balance"))) / inst.n for inst, _, tr in traces)
    counts = {len(tr.points) for _, _, tr in traces}
    record(2, "quench conservation", drift < 1e-9 and balance < 1e-8 and counts == {32} and elapsed < 120,
           f"max |<H>-n|/n={drift:.2e}, max balance residual/n={balance:.2e}, {len(traces)} runs, {elapsed:.1f}s")


def test_criterion_03_short_time_law():
    t = 1e-3
    ratios = []
    for n, k, d, seed in QUENCH_INSTANCES:
        inst = gen_random_regular(n, k, d, seed=seed)
        for alpha in QUENCH_ALPHAS:
            tr = run_quench(inst, QuenchConfig(alpha=alpha, t_final=t, sample_times=[t], duality=False))
            ratios.append(tr.points[0].x_deficit * d / (2 * alpha ** 2 * t ** 2 * n))
    record(3, "short-time law", all(0.999 <= r <= 1.001 for r in ratios),
           f"ratio range [{min(ratios):.6f}, {max(ratios):.6f}]")


def test_criterion_04_moment_inequality(quench_traces):
    traces, _ = quench_traces
    slack = min(np.min(tr.column("hvar_rhs") - tr.column("hvar_lhs")) for _, _, tr in traces)
    record(4, "moment inequality", slack >= -1e-8, f"minimum slack {slack:.4g} over all sampled times")


# ---------------------------------------------------------------- 5


def _random_small_instance(rng):
    k = int(rng.integers(2, 5))
    n = int(rng.integers(k + 1, 11))
    pool = list(itertools.combinations(range(n), k))
    count = int(rng.integers(1, min(len(pool), 12) + 1))
    chosen = [pool[j] for j in rng.choice(len(pool), count, replace=False)]
    return Instance.from_terms(n, k, [(idx, int(s)) for idx, s in zip(chosen, rng.choice([-1, 1], count))])


def _disjoint_pair(inst, rng):
    S = rng.random(inst.n) < 0.5
    w1 = np.where(S, rng.uniform(-1, 1, inst.n), 0.0)
    w2 = np.where(S, 0.0, rng.uniform(-1, 1, inst.n))
    return w1, w2


def test_criterion_05_combining_guarantees():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    trials = 1000
    ok3 = ok2 = ok1 = 0
    branches = {"A": 0, "B": 0}
    for _ in range(trials):
        inst = _random_small_instance(rng)
        k = inst.k
        res = combine_item3(inst, [(rng.uniform(-1, 1, inst.n), 1) for _ in range(k)])
        ok3 += abs(res.value) >= math.factorial(k) / k ** k * abs(res.multiform) - 1e-12
        w1, w2 = _disjoint_pair(inst, rng)
        out2 = combine_item2(inst, w1, w2, grid_points=2_000)
        ok2 += abs(out2.value) >= abs(out2.coeffs[1]) / k - out2.tolerance - 1e-12
        while True:
            w1, w2 = _disjoint_pair(inst, rng)
            a1 = restrict_to_line(inst, w1, w2).coeffs[1]
            if abs(a1) > 1e-9:
                break
            inst = _random_small_instance(rng)
        if a1 < 0:
            w1 = -w1
        eps = float(rng.choice([0.1, 0.5, 1.0, 4.0]))
        out1 = combine_item1(inst, w1, w2, eps, grid_points=2_000)
        if out1.branch == "A":
            good = out1.value - out1.baseline >= eps * out1.C / 6 - 1e-9
        elif out1.branch == "B":
            i = out1.witness_index
            good = (abs(out1.coeffs[i]) >= out1.C / (6 * eps) - 1e-9 and
                    abs(out1.value) >= math.factorial(k) / k ** k * out1.C / (6 * eps) / math.comb(k, i) - 1e-9)
        else:
            good = False
        branches[out1.branch] = branches.get(out1.branch, 0) + 1
        ok1 += good
    elapsed = time.perf_counter() - start
    record(5, "combining guarantees", ok3 == ok2 == ok1 == trials and elapsed < 60,
           f"item3 {ok3}/{trials}, item2 {ok2}/{trials}, item1 {ok1}/{trials} "
           f"(A {branches['A']}, B {branches['B']}), {elapsed:.1f}s")


# ---------------------------------------------------------------- 6


def test_criterion_06_adversarial_family():
    inst = gen_antiferromagnet(16)
    spectrum = brute_force_optimum(inst)
    rates = {}
    for eps in (1.0, 0.5, 0.25, 1 / math.sqrt(15)):
        res = run_amplified(inst, RunConfig(epsilon=eps, repetitions=200, seed=0))
        very_bad = sum(r.branch == "B" and r.hz_u <= -0.5 * inst.num_terms for r in res.reports)
        rates[eps] = very_bad / 200
    small = [rates[0.25], rates[1 / math.sqrt(15)]]
    ok = spectrum.max_energy == 8 and spectrum.min_energy == -120 and all(r >= 0.5 for r in small)
    sweep = ", ".join(f"eps={e:.3g}: {r:.3f}" for e, r in rates.items())
    record(6, "adversarial family", ok,
           f"brute force max={spectrum.max_energy} min={spectrum.min_energy}; "
           f"fraction branch B with H_Z(u) <= -N_T/2: {sweep} (need >= 0.5 for small eps)")


# ---------------------------------------------------------------- 7


def test_criterion_07_odd_k_positivity():
    positive = beats = 0
    metas = 50
    for meta_seed in range(metas):
        inst = gen_random_regular(120, 3, 9, seed=meta_seed)
        res = run_amplified(inst, RunConfig(epsilon=1.0, repetitions=200, seed=meta_seed))
        base = random_baseline(inst, 200, np.random.SeedSequence(meta_seed, spawn_key=(2 ** 31,)))
        positive += res.best.normalized_energy > 0
        beats += res.best.normalized_energy >= base
    record(7, "odd-k positivity", positive == metas and beats >= 0.9 * metas,
           f"best > 0 in {positive}/{metas} meta-seeds, >= random baseline in {beats}/{metas}")


# ---------------------------------------------------------------- 8


def test_criterion_08_force_moments():
    worst_moment = 0.0
    tail_ok = True
    details = []
    for n, k, d, seed in [(14, 2, 5, 0), (14, 3, 6, 1), (12, 4, 4, 2)]:
        inst = gen_random_regular(n, k, d, seed=seed)
        for i in range(n):
            m = force_moment_stats(inst, i).mean_sq
            worst_moment = max(worst_moment, abs(m - d / 2 ** (k - 1)))
        t = (2 * math.e) ** (k / 2)
        for i in range(3):
            res = force_moment_stats(inst, i, "sampled", trials=100_000, seed=seed * 10 + i, thresholds=[t])
            p = res.tail_table[0][1]
            bound = hypercontractive_tail(t, k)
            se = math.sqrt(max(bound * (1 - bound), 1.0 / res.samples) / res.samples)
            tail_ok &= p <= bound + 3 * se
            details.append(f"k={k}: {p:.2e}<={bound:.2e}")
    record(8, "force moments", worst_moment <= 1e-12 and tail_ok,
           f"max |E[F^2]-d/2^(k-1)|={worst_moment:.1e}; tails " + ", ".join(details[::3]))


# ---------------------------------------------------------------- 9


def test_criterion_09_combine_identity():
    worst = 0.0
    outcomes = 0
    for k, n, d, seed in [(3, 12, 3, 0), (4, 12, 3, 1)]:
        inst = gen_random_regular(n, k, d, seed=seed)
        psi = evolve(inst, 2.0, plus_state(n), 0.7)
        for s in range(50):
            sample = quantum_combine(inst, psi, np.random.default_rng([seed, s]))
            worst = max(worst, abs(sample.lhs - sample.rhs))
            outcomes += 1
    record(9, "measurement combining identity", worst <= 1e-10 and outcomes == 100,
           f"max |lhs - rhs| = {worst:.2e} over {outcomes} outcomes")


# ---------------------------------------------------------------- 10


def _dense_krylov(inst, alpha):
    n = inst.n
    E = energy_table(inst).astype(float)
    X = np.zeros((1 << n, 1 << n))
    for b in range(n):
        X += np.kron(np.kron(np.eye(1 << (n - 1 - b)), [[0, 1], [1, 0]]), np.eye(1 << b))
    H = X + alpha / inst.d * np.diag(E)
    basis = []
    for v in (np.full(1 << n, 2 ** (-n / 2)), None, None):
        v = v if v is not None else E * basis[-1]
        for b in basis:
            v = v - (b @ v) * b
        basis.append(v / np.linalg.norm(v))
    B = np.array(basis)
    return B @ H @ B.T


def test_criterion_10_krylov():
    h01 = c_err = entry = 0.0
    bonami = 0
    count = 20
    for seed in range(count):
        k = (2, 3, 4)[seed % 3]
        n, d = {2: (10, 3), 3: (9, 3), 4: (8, 2)}[k]
        inst = gen_random_regular(n, k, d, seed=seed)
        kr = krylov3(inst)
        h01 = max(h01, abs(kr.matrix[0, 1] - 1))
        c_err = max(c_err, abs(kr.c - inst.num_terms ** -0.5))
        if not kr.degenerate:
            entry = max(entry, float(np.max(np.abs(kr.matrix - _dense_krylov(inst, kr.alpha)))))
        bonami += kr.bonami_ok
    record(10, "Krylov dense case", h01 <= 1e-12 and c_err <= 1e-12 and entry <= 1e-10 and bonami == count,
           f"|H01-1|={h01:.1e}, |c-N_T^-1/2|={c_err:.1e}, max entry diff={entry:.1e}, Bonami {bonami}/{count}")


# ---------------------------------------------------------------- 11


def test_criterion_11_toy_frequency():
    start = time.perf_counter()
    est = {alpha: toy_frequency(14, alpha) for alpha in (1.0, 4.0)}
    elapsed = time.perf_counter() - start
    ratio = est[4.0].omega / est[1.0].omega
    ok = (all(0.85 <= e.ratio <= 1.15 for e in est.values()) and 1.8 <= ratio <= 2.2 and elapsed < 120)
    record(11, "toy frequency", ok,
           f"omega(1)={est[1.0].omega:.4f} (ratio {est[1.0].ratio:.3f}), omega(4)={est[4.0].omega:.4f} "
           f"(ratio {est[4.0].ratio:.3f}), omega(4)/omega(1)={ratio:.3f}, {elapsed:.1f}s")


# ---------------------------------------------------------------- 12


def test_criterion_12_witness_state():
    inst = gen_random_regular(16, 3, 3, seed=7)
    S = np.flatnonzero(np.random.default_rng(7).random(16) < 0.5)
    rep = witness_report(inst, S, 0.05, 1.0)
    x_err = max(abs(rep.x_state[i] - rep.x_exact[i]) for i in rep.x_exact)
    second = all(abs(rep.x_state[i] - rep.x_second_order[i]) <= rep.x_remainder_bound[i] + 1e-14
                 for i in rep.x_exact)
    hz_gap = abs(rep.hz_state - rep.hz_linear)
    record(12, "witness state", x_err <= 1e-10 and second and hz_gap <= rep.hz_remainder_bound,
           f"max |<X_i> - exact| = {x_err:.1e}, second-order within remainder={second}, "
           f"|<H_Z> - linearized| = {hz_gap:.2e} <= {rep.hz_remainder_bound:.2e}")


# ---------------------------------------------------------------- 13


def test_criterion_13_reproducibility(tmp_path):
    inst = tmp_path / "inst.json"
    assert main(["gen", "regular", "--n", "12", "--k", "3", "--d", "3", "--seed", "5", "--out", str(inst)]) == 0
    bench = tmp_path / "bench.json"
    bench.write_text(json.dumps({"task": "solve", "grid": {"epsilon": [1.0, 0.5]},
                                 "fixed": {"kind": "antiferromagnet", "n": 10}, "trials": 20}))
    commands = {
        "gen": ["gen", "cluster", "--m", "2", "--d", "3"],
        "solve": ["solve", str(inst), "--repetitions", "20", "--seed", "3"],
        "quench": ["quench", str(inst), "--alpha", "2", "--t-final", "1", "--samples", "8", "--shots", "10"],
        "optimum": ["oracle", "optimum", str(inst)],
        "forces": ["oracle", "forces", str(inst), "--mode", "sampled", "--trials", "1000", "--seed", "2"],
        "extremes": ["oracle", "extremes", "--n", "10", "--k", "3", "--d", "3", "--trials", "10"],
        "bench": ["bench", str(bench)],
    }
    identical = []
    for name, argv in commands.items():
        runs = []
        for rep in ("first", "second"):
            folder = tmp_path / rep / name
            out = folder / ("out.json" if name == "gen" else "out.csv" if name == "bench" else "out")
            assert main(argv + ["--out", str(out)]) == 0
            runs.append({p.name: p.read_bytes() for p in sorted(folder.iterdir())})
        if runs[0] == runs[1] and runs[0]:
            identical.append(name)
    record(13, "reproducibility", len(identical) == len(commands),
           f"byte-identical reruns for {len(identical)}/{len(commands)} commands ({', '.join(identical)})")
