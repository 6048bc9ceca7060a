import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import small_instances
from quenchdual.classical import (
    RunConfig,
    check_report,
    default_repetitions,
    greedy_step,
    random_baseline,
    run_amplified,
    run_once,
    scaled_step,
    sign_flip_odd_k,
)
from quenchdual.errors import ContractError, InputError
from quenchdual.instance import evaluate, forces, gen_antiferromagnet, gen_random_regular
from quenchdual.polycombine import restrict_to_line

REG3 = gen_random_regular(24, 3, 6, seed=1)


# ---------------------------------------------------------------- steps


@given(small_instances(), st.integers(0, 2 ** 32 - 1))
def test_greedy_step_structure(inst, seed):
    step = greedy_step(inst, seed)
    assert np.all(step.w2[step.S] == 0) and np.all(np.abs(step.w2[~step.S]) == 1)
    assert np.all(step.w1[~step.S] == 0) and np.all(np.abs(step.w1[step.S]) == 1)
    assert np.array_equal(step.F, forces(inst, step.w2))
    # greedy signs maximize sum_i F_i w1_i over the cube restricted to S
    assert step.C == int(step.F @ step.w1) == int(np.abs(step.F[step.S]).sum())


@given(small_instances(), st.integers(0, 2 ** 32 - 1))
def test_greedy_linear_coefficient_equals_C(inst, seed):
    step = greedy_step(inst, seed)
    q = restrict_to_line(inst, step.w1, step.w2)
    assert q.coeffs[1] == pytest.approx(step.C, abs=1e-9 * max(1, inst.num_terms))


def test_scaled_step_without_clipping():
    p = 1 / math.sqrt(REG3.d)  # |F_i| <= d, so p F / sqrt(d) never leaves [-1, 1]
    step = scaled_step(REG3, p, seed=4)
    assert step.C == pytest.approx(p * np.sum(step.F[step.S] ** 2) / math.sqrt(REG3.d))
    assert np.all(np.abs(step.w1) <= 1)
    with pytest.raises(InputError):
        scaled_step(REG3, 1.5)


def test_scaled_mean_C():
    # E[C] = p (n/2) E[F^2] / sqrt(d) with E[F^2] = d / 2^(k-1)
    p = 1 / REG3.d
    values = [scaled_step(REG3, p, seed=s).C for s in range(4000)]
    expected = p * (REG3.n / 2) * REG3.d / 2 ** (REG3.k - 1) / math.sqrt(REG3.d)
    se = np.std(values) / math.sqrt(len(values))
    assert abs(np.mean(values) - expected) < 4 * se


def test_sign_flip():
    z = np.array([1, -1] * 12)
    assert evaluate(REG3, sign_flip_odd_k(REG3, z)) == -evaluate(REG3, z)
    with pytest.raises(ContractError):
        sign_flip_odd_k(gen_antiferromagnet(4), np.ones(4))


# ---------------------------------------------------------------- runs


def test_config_validation():
    for bad in ({"variant": "other"}, {"epsilon": 0}, {"variant": "scaled", "p": 0}, {"repetitions": 0}):
        with pytest.raises(InputError):
            RunConfig(**bad)
    assert default_repetitions(9) == 81


@pytest.mark.parametrize("variant", ["greedy", "scaled"])
def test_run_once_report(variant):
    config = RunConfig(variant=variant, epsilon=0.5, p=0.3, seed=7)
    rep = run_once(REG3, config)
    assert check_report(REG3, rep, config.epsilon)
    assert rep.normalized_energy == evaluate(REG3, rep.rounded) >= 0
    assert rep.rounded_energy == (-1 if rep.flipped else 1) * rep.normalized_energy
    assert rep.to_dict()["rounded"].count("0") == int(np.sum(rep.rounded > 0))
    assert run_once(REG3, config).to_dict() == rep.to_dict()


def test_amplified_extends_prefix():
    short = run_amplified(REG3, RunConfig(repetitions=5, seed=3))
    long = run_amplified(REG3, RunConfig(repetitions=20, seed=3))
    assert [r.to_dict() for r in long.reports[:5]] == [r.to_dict() for r in short.reports]
    assert long.best.normalized_energy >= short.best.normalized_energy
    assert long.reports[0].to_dict() == run_once(REG3, RunConfig(seed=3)).to_dict()
    assert 0 <= long.summary["branch_B_fraction"] <= 1
    assert all(check_report(REG3, r, 1.0) for r in long.reports)


def test_amplified_worker_independent():
    config = RunConfig(repetitions=6, seed=11)
    a = run_amplified(REG3, config)
    b = run_amplified(REG3, config, workers=2)
    assert [r.to_dict() for r in a.reports] == [r.to_dict() for r in b.reports]


@settings(max_examples=25)
@given(small_instances(n_max=10), st.integers(0, 1000), st.sampled_from([0.25, 1.0, 3.0]))
def test_every_report_satisfies_its_branch(inst, seed, eps):
    res = run_amplified(inst, RunConfig(epsilon=eps, repetitions=3, grid_points=2_000, seed=seed))
    assert all(check_report(inst, r, eps) for r in res.reports)


def test_random_baseline():
    inst = gen_antiferromagnet(6)
    assert random_baseline(inst, 500, seed=0) == 3  # balanced cut is optimal
    assert random_baseline(REG3, 50, seed=1) == random_baseline(REG3, 50, seed=1) >= 0
