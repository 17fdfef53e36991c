import math
from statistics import NormalDist

import numpy as np
import pytest
from scipy.special import ndtr

from glr.errors import BadSpec
from glr.examples import (
    BsDigitalSpec,
    ForkMarketSpec,
    bs_digital_gain,
    bs_mirror_gain,
    bs_monte_carlo,
    bs_series,
    fork_alpha_closed_form,
    fork_positions,
    fork_series,
    make_fork_market,
    norm_cdf,
)
from glr.gainloss import best_gain_loss
from glr.scenario_tree import terminal_measure

EPS = (0.5, 0.2, 0.1, 0.05)


def test_single_fork_is_plain_binomial():
    tree = make_fork_market(ForkMarketSpec(1))
    m = terminal_measure(tree)
    assert sorted(m) == [2, 3] and m[2] == 0.5 and m[3] == 0.5
    prices = {i: tree.node(i).prices[0] for i in (2, 3)}
    assert prices == {2: 2.0, 3: -2.0}


def test_four_forks_layout():
    tree = make_fork_market(ForkMarketSpec(4))
    m = terminal_measure(tree)
    assert len(tree.leaves) == 8
    assert all(v == pytest.approx(0.125, abs=1e-15) for v in m.values())


def test_weights_do_not_change_value():
    uniform = best_gain_loss(make_fork_market(ForkMarketSpec(2))).value
    skewed = best_gain_loss(make_fork_market(ForkMarketSpec(2, fork_weights=(0.9, 0.1)))).value
    assert uniform == pytest.approx(4 / 3, abs=1e-9)
    assert skewed == pytest.approx(uniform, abs=1e-9)


def test_closed_form_examples():
    cf = fork_alpha_closed_form(ForkMarketSpec(4))
    np.testing.assert_allclose(cf.per_fork, [1.0, 4 / 3, 1.5, 1.6], rtol=1e-15)
    assert cf.truncated_alpha == pytest.approx(1.6, rel=1e-15)
    assert cf.limit_alpha == 2.0
    one = fork_alpha_closed_form(ForkMarketSpec(1))
    assert one.truncated_alpha == 1.0 == one.limit_alpha / 2


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_lp_matches_closed_form_and_concentrates(n):
    spec = ForkMarketSpec(n)
    tree = make_fork_market(spec)
    rep = best_gain_loss(tree)
    assert rep.value == pytest.approx(2 / (1 + 1 / n), abs=1e-9)
    assert rep.value == pytest.approx(fork_alpha_closed_form(spec).truncated_alpha, abs=1e-9)
    pos = fork_positions(tree, rep.witness_strategy.positions)
    assert max(abs(x) for x in pos[:-1]) <= 1e-9
    assert pos[-1] > 0


def test_fork_series_increasing_below_limit():
    vals = [v for _, v in fork_series([2, 4, 8, 16])]
    assert all(a < b < 2.0 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("kwargs", [
    dict(fork_count=0), dict(fork_count=2, p_up=1.0), dict(fork_count=2, up_value=1.9),
    dict(fork_count=2, fork_weights=(1.0,)), dict(fork_count=2, fork_weights=(1.0, -1.0)),
])
def test_fork_spec_rejected(kwargs):
    with pytest.raises(BadSpec):
        make_fork_market(ForkMarketSpec(**kwargs))


def test_norm_cdf_against_scipy():
    for x in np.linspace(-8.0, 8.0, 161):
        assert norm_cdf(x) == pytest.approx(ndtr(x), abs=1e-15)
    # deep lower tail keeps relative accuracy
    for x in (-20.0, -30.0, -37.0):
        assert norm_cdf(x) == pytest.approx(ndtr(x), rel=1e-12)


@pytest.mark.parametrize("eps", EPS)
def test_bs_chains(eps):
    spec = BsDigitalSpec(0.4, 1.0, eps)
    dig, mir = bs_digital_gain(spec), bs_mirror_gain(spec)
    assert dig.ok and mir.ok
    assert dig.c_eps < eps * dig.p_eps
    assert dig.ratio > 1 / eps - dig.p_eps
    assert mir.b_eps > mir.q_eps / eps
    assert mir.ratio > (1 - mir.q_eps) / eps
    assert mir.q_eps < dig.p_eps


def test_bs_digital_hand_values():
    # sd of log Z is 0.4: p = Phi((ln 0.1 + 0.08)/0.4), c = Phi((ln 0.1 - 0.08)/0.4)
    d = bs_digital_gain(BsDigitalSpec(0.4, 1.0, 0.1))
    ref = NormalDist()
    assert d.p_eps == pytest.approx(ref.cdf((math.log(0.1) + 0.08) / 0.4), rel=1e-12)
    assert d.c_eps == pytest.approx(ref.cdf((math.log(0.1) - 0.08) / 0.4), rel=1e-12)
    assert d.ratio > 10 - d.p_eps


def test_bs_ratios_grow_as_eps_shrinks():
    rows = bs_series(0.4, 1.0, EPS)
    for (_, d0, m0), (_, d1, m1) in zip(rows, rows[1:]):
        assert d1 > d0 and m1 > m0


def test_mirror_blows_up():
    tiny = bs_mirror_gain(BsDigitalSpec(0.4, 1.0, 1e-6))
    assert tiny.q_eps < 1e-50 and tiny.ratio > 1e6


def test_eps_near_one_stays_finite():
    spec = BsDigitalSpec(1.0, 1.0, 0.999)
    d = bs_digital_gain(spec)
    assert math.isfinite(d.ratio) and d.ratio > 1 / 0.999 - d.p_eps
    mc = bs_monte_carlo(spec, samples=1_000_000, seed=3)
    assert abs(mc["p_eps"].value - d.p_eps) < 5e-4
    assert abs(mc["c_eps"].value - d.c_eps) < 5e-4


@pytest.mark.parametrize("kwargs", [dict(pi=0.0), dict(maturity=-1.0), dict(epsilon=1.0), dict(epsilon=0.0)])
def test_bs_spec_rejected(kwargs):
    args = dict(pi=0.4, maturity=1.0, epsilon=0.1) | kwargs
    with pytest.raises(BadSpec):
        bs_digital_gain(BsDigitalSpec(**args))
