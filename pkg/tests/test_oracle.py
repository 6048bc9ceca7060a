import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import small_instances
from quenchdual.errors import InputError, ResourceLimitError
from quenchdual.instance import (
    Instance,
    assignment_from_index,
    energy_table,
    evaluate,
    gen_antiferromagnet,
    gen_cluster_antiferromagnet,
    gen_random_regular,
)
from quenchdual.oracle import (
    brute_force_optimum,
    default_thresholds,
    extremes_with_fixed_signs,
    force_moment_stats,
    gray_code_energies,
    hypercontractive_tail,
    random_model_extremes,
    second_moment_uniform,
)


# ---------------------------------------------------------------- enumeration


def test_examples():
    s = brute_force_optimum(gen_antiferromagnet(4))
    assert (s.max_energy, s.min_energy) == (2, -6)
    s = brute_force_optimum(Instance.from_terms(2, 2, [((0, 1), 1)]))
    assert (s.max_energy, s.min_energy) == (1, -1)
    assert s.histogram == {1: 2, -1: 2}
    s = brute_force_optimum(gen_cluster_antiferromagnet(2, 3))
    assert (s.max_energy, s.min_energy) == (1, -3)


@pytest.mark.parametrize("n", [2, 6, 10, 16])
def test_antiferromagnet_extremes(n):
    s = brute_force_optimum(gen_antiferromagnet(n))
    assert s.max_energy == n // 2 and s.min_energy == -n * (n - 1) // 2
    assert sum(s.histogram.values()) == 2 ** n


@given(small_instances(n_max=12))
def test_gray_code_matches_table(inst):
    assert np.array_equal(gray_code_energies(inst), energy_table(inst).astype(np.int64))


def test_gray_code_random_assignments():
    inst = gen_random_regular(20, 4, 6, seed=2)
    table = gray_code_energies(inst)
    for x in np.random.default_rng(0).integers(0, 2 ** 20, 1000):
        assert table[x] == evaluate(inst, assignment_from_index(int(x), 20))


@given(small_instances(n_max=12))
def test_summary_invariants(inst):
    s = brute_force_optimum(inst)
    assert s.max_energy >= s.min_energy
    assert evaluate(inst, s.argmax) == s.max_energy and evaluate(inst, s.argmin) == s.min_energy
    assert sum(s.histogram.values()) == 2 ** inst.n
    table = energy_table(inst)
    if inst.k % 2 == 0:
        # z -> -z maps each index x to its complement with the same energy
        assert np.array_equal(table, table[::-1])
    else:
        assert np.array_equal(table, -table[::-1])
        assert {e: c for e, c in s.histogram.items()} == {-e: c for e, c in s.histogram.items()}


def test_limit_refusal():
    with pytest.raises(ResourceLimitError):
        brute_force_optimum(gen_antiferromagnet(26))
    with pytest.raises(ResourceLimitError):
        random_model_extremes(26, 2, 1, 1)


def test_to_dict():
    d = brute_force_optimum(gen_antiferromagnet(4)).to_dict()
    assert d["max_energy"] == 2 and d["histogram"]["-6"] == 2


# ---------------------------------------------------------------- force moments


@pytest.mark.parametrize("n,k,d", [(12, 2, 5), (14, 3, 6), (12, 4, 4)])
def test_exact_force_moment(n, k, d):
    inst = gen_random_regular(n, k, d, seed=n + k)
    for i in range(3):
        assert force_moment_stats(inst, i).mean_sq == pytest.approx(d / 2 ** (k - 1), abs=1e-12)
        assert force_moment_stats(inst, i, conditioned=False).mean_sq == pytest.approx(d, abs=1e-12)


def test_sampled_tails_and_monotonicity():
    inst = gen_random_regular(14, 3, 6, seed=1)
    res = force_moment_stats(inst, 0, "sampled", trials=50_000, seed=3)
    probs = [p for _, p in res.tail_table]
    assert all(a >= b for a, b in zip(probs, probs[1:]))
    t = (2 * math.e) ** (inst.k / 2)
    p = dict(res.tail_table)[t]
    bound = hypercontractive_tail(t, inst.k)
    assert p <= bound + 3 * math.sqrt(bound * (1 - bound) / res.samples)
    assert res.mean_sq == pytest.approx(inst.d / 4, rel=0.05)
    again = force_moment_stats(inst, 0, "sampled", trials=50_000, seed=3)
    assert again.to_dict() == res.to_dict()


def test_force_moment_errors():
    inst = gen_random_regular(12, 3, 6, seed=0)
    with pytest.raises(InputError):
        force_moment_stats(inst, 12)
    with pytest.raises(InputError):
        force_moment_stats(inst, 0, "other")
    with pytest.raises(ResourceLimitError):
        force_moment_stats(inst, 0, max_spins=3)
    assert default_thresholds(2)[-1] == pytest.approx(2 * math.e)


# ---------------------------------------------------------------- random model


def test_single_term_extremes():
    inst = Instance.from_terms(3, 3, [((0, 1, 2), 1)])
    stats = random_model_extremes(3, 3, 1, 20, seed=0, inst=inst)
    assert np.all(stats.values == 1)


def test_extremes_deterministic():
    a = random_model_extremes(12, 3, 3, 20, seed=5)
    b = random_model_extremes(12, 3, 3, 20, seed=5)
    assert a.to_dict() == b.to_dict()
    assert a.quantiles["q50"] <= a.quantiles["q90"] <= a.quantiles["q99"] <= a.quantiles["max"]


def test_second_moment_and_fixed_signs():
    inst = gen_random_regular(10, 3, 3, seed=4)
    assert second_moment_uniform(inst) == inst.num_terms
    flipped = extremes_with_fixed_signs(inst, -inst.signs)
    assert flipped.max_energy == -brute_force_optimum(inst).min_energy
