import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import binomial_alpha
from glr.errors import BadLambda, ZeroPayoff
from glr.gainloss import (
    best_gain_loss,
    conjugate_V,
    fenchel_gap,
    gain_loss_ratio,
    is_gain_loss_free,
    utility_U,
)
from glr.random_trees import random_payoff, random_tree
from glr.scenario_tree import Payoff, Strategy, binomial, gain_vector


def test_ratio_examples():
    assert gain_loss_ratio(np.array([1.0, -1.0]), np.array([0.5, 0.5])) == 1.0
    assert gain_loss_ratio(np.array([2.0, -1.0]), np.array([0.3, 0.7])) == pytest.approx(6 / 7, rel=1e-15)
    assert gain_loss_ratio(np.array([0.0, 3.0]), np.array([0.5, 0.5])) == math.inf
    with pytest.raises(ZeroPayoff):
        gain_loss_ratio(np.zeros(2), np.array([0.5, 0.5]))


def test_ratio_accepts_payoff_and_dict():
    x = Payoff({1: 2.0, 2: -1.0})
    assert gain_loss_ratio(x, {2: 0.7, 1: 0.3}) == pytest.approx(6 / 7, rel=1e-15)


def test_utility_and_conjugate_examples():
    assert utility_U(0.0, 4.0) == 0.0
    assert utility_U(-3.0, 2.0) == -6.0
    assert utility_U(4.0, 5.0) == 4.0
    assert conjugate_V(2.0, 3.0) == 0.0
    assert conjugate_V(0.5, 3.0) == math.inf
    assert conjugate_V(1.0, 1.0) == 0.0
    with pytest.raises(BadLambda):
        utility_U(1.0, 0.5)


def test_fenchel_gap_examples():
    for lam in (1.0, 2.5, 7.0):
        assert fenchel_gap(1.0, 1.0, lam) == 0.0
        assert fenchel_gap(-1.0, lam, lam) == 0.0
    assert fenchel_gap(1.0, 2.0, 3.0) == 1.0


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(0.0, 20.0), st.floats(1.0, 10.0))
def test_fenchel_inequality(x, y, lam):
    assert fenchel_gap(x, y, lam) >= -1e-9 * max(1.0, abs(x * y))


def test_martingale_binomial_value_one(fair_coin):
    rep = best_gain_loss(fair_coin)
    assert rep.value == pytest.approx(1.0, abs=1e-12)


def test_up_down_value_two_long(up_down):
    rep = best_gain_loss(up_down)
    assert rep.value == pytest.approx(2.0, abs=1e-12)
    assert rep.attained
    assert rep.witness_strategy.positions[0][0] > 0


def test_constant_loss_endowment_not_attained(fair_coin):
    rep = best_gain_loss(fair_coin, Payoff({1: -1.0, 2: -1.0}))
    assert rep.value == pytest.approx(1.0, abs=1e-12)
    assert not rep.attained
    assert rep.witness_scale == 0.0


def test_positive_price_in_complete_market_is_infinite(up_down):
    # unique pricing weights (1/3, 2/3); price of this claim is 1/3
    rep = best_gain_loss(up_down, Payoff({1: 1.0, 2: 0.0}))
    assert rep.value == math.inf


def test_gain_loss_free_examples(fair_coin, up_down, arbitrage):
    assert is_gain_loss_free(fair_coin, 1.5)
    assert not is_gain_loss_free(up_down, 2.0)
    assert is_gain_loss_free(up_down, 2.0 + 1e-9)
    for lam in (1.5, 10.0, 1e6):
        assert not is_gain_loss_free(arbitrage, lam)


@pytest.mark.parametrize("up,down,p", [(2.0, 1.0, 0.5), (1.0, 3.0, 0.5), (0.5, 0.5, 0.2), (5.0, 0.1, 0.9)])
def test_binomial_matches_long_short_oracle(up, down, p):
    tree = binomial(up, -down, p)
    assert best_gain_loss(tree).value == pytest.approx(binomial_alpha(up, down, p), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_value_at_least_one_and_witness_split(seed):
    rng = np.random.default_rng(seed)
    tree = random_tree(rng)
    rep = best_gain_loss(tree)
    assert rep.value >= 1.0 - 1e-12
    x = gain_vector(tree, rep.witness_strategy).to_array(tree)
    if math.isfinite(rep.value):
        assert gain_loss_ratio(x, tree.leaf_probs) == pytest.approx(rep.value, rel=1e-9)
    else:
        assert np.all(x >= -1e-9) and np.any(x > 1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_random_strategies_never_beat_the_best(seed):
    rng = np.random.default_rng(seed)
    tree = random_tree(rng)
    best = best_gain_loss(tree).value
    for _ in range(5):
        x = gain_vector(tree, Strategy.from_array(tree, rng.normal(size=tree.gain_matrix.shape[1]))).to_array(tree)
        if np.any(x != 0.0):
            assert gain_loss_ratio(x, tree.leaf_probs) <= best + 1e-9 * max(1.0, best)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_monotone_in_endowment(seed):
    rng = np.random.default_rng(seed)
    tree = random_tree(rng)
    b1 = random_payoff(tree, rng)
    b2 = Payoff.from_array(tree, b1.to_array(tree) + rng.uniform(0.0, 0.5, size=len(tree.leaves)))
    v1, v2 = best_gain_loss(tree, b1).value, best_gain_loss(tree, b2).value
    assert v1 <= v2 + 1e-9 * max(1.0, v2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_endowment_witness_reproduces_value(seed):
    rng = np.random.default_rng(seed)
    tree = random_tree(rng)
    b = random_payoff(tree, rng)
    rep = best_gain_loss(tree, b)
    if math.isfinite(rep.value) and rep.attained:
        x = rep.witness_payoff.to_array(tree)
        assert rep.witness_scale > 0
        assert gain_loss_ratio(x, tree.leaf_probs) == pytest.approx(rep.value, rel=1e-7)
