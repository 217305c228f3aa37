import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oligoshare.data_impact import CostModel, FirmProfile
from oligoshare.duopoly import (
    BargainMethod,
    bargaining_closed_form,
    bargaining_exact,
    closed_form_lambda,
    cost_drop,
    criterion_function,
    f_bertrand,
    f_cournot,
    full_share_decision,
    profit_gains,
    share_threshold,
)
from oligoshare.errors import DomainError, InvalidParameters, NoIndividuallyRationalPoint
from oligoshare.market import MarketParams, Mode, solve_equilibrium

GRID_G = [0.1 * k for k in range(1, 10)]
GRID_B = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]


def pair(n1, n2, a=0.1, b=0.1, beta=1.0, cap=0.2, consent=(1.0, 1.0)):
    model = CostModel(a, b, beta, cap)
    return FirmProfile(0, n1, model, consent[0]), FirmProfile(1, n2, model, consent[1])


@pytest.mark.parametrize("mode", ["cournot", "bertrand"])
def test_complements_always_share(mode, rng):
    for _ in range(50):
        n1, n2 = (int(x) for x in rng.integers(1, 10_000, 2))
        assert full_share_decision(*pair(n1, n2, beta=rng.uniform(0.1, 1)), -0.2, mode).both_share


@given(n=st.integers(1, 10**6), gamma=st.floats(0.01, 0.99), beta=st.floats(0.05, 1.0))
def test_equal_sizes_share(n, gamma, beta):
    for mode in Mode:
        assert full_share_decision(*pair(n, n, beta=beta), gamma, mode).both_share


def test_large_firm_refuses_small_partner():
    d = full_share_decision(*pair(900, 100), 0.9, Mode.COURNOT)
    assert not d.firm1_gains and d.firm2_gains and not d.both_share
    assert d.consistent
    assert f_cournot(0.1, 0.9, 1.0) == pytest.approx(-0.709)


def test_decision_to_dict_keys():
    d = full_share_decision(*pair(300, 200), 0.5).to_dict()
    assert set(d) == {"firm1_gains", "firm2_gains", "both_share", "profit_deltas", "margins", "consistent"}


def test_consent_limits_visible_data():
    p1, p2 = pair(1000, 600, consent=(1.0, 0.0))
    d = full_share_decision(p1, p2, 0.5)
    assert d.margins[0] < 0  # firm 1 gives data but receives none
    assert d.profit_deltas[0] < 0


@pytest.mark.parametrize("mode", list(Mode))
def test_criterion_matches_equilibrium_profits(mode, rng):
    for _ in range(300):
        gamma = rng.uniform(-0.9, 0.95)
        beta = rng.uniform(0.1, 1.0)
        n1, n2 = (int(x) for x in rng.integers(1, 20_000, 2))
        p1, p2 = pair(n1, n2, a=rng.uniform(0, 0.5), beta=beta, b=0.05)
        d = full_share_decision(p1, p2, gamma, mode)
        params = MarketParams(2, gamma, mode)
        before = solve_equilibrium([p1.cost_model.cost(n1), p2.cost_model.cost(n2)], params).profits
        after = solve_equilibrium([p1.cost_model.cost(n1 + n2)] * 2, params).profits
        for gains, b, a in zip((d.firm1_gains, d.firm2_gains), before, after):
            if abs(a - b) > 1e-15:
                assert gains == (a > b)
        assert d.consistent


@pytest.mark.parametrize("mode", list(Mode))
def test_rescaled_criterion_reproduces_decisions(mode, rng):
    f = criterion_function(mode)
    for _ in range(300):
        gamma, beta = rng.uniform(0.05, 0.95), rng.uniform(0.1, 1.0)
        n1, n2 = (int(x) for x in rng.integers(1, 20_000, 2))
        d = full_share_decision(*pair(n1, n2, beta=beta), gamma, mode)
        for gains, other in ((d.firm1_gains, n2), (d.firm2_gains, n1)):
            value = float(f(other / (n1 + n2), gamma, beta))
            if abs(value) > 1e-12:
                assert gains == (value > 0)


def test_threshold_closed_form():
    assert share_threshold(1.0, 1.0, Mode.COURNOT) == pytest.approx(math.sqrt(2) - 1, abs=1e-11)


def test_threshold_vanishes_with_competition():
    beta = 0.7
    gammas = (1e-2, 1e-4, 1e-6)
    values = [share_threshold(g, beta) for g in gammas]
    assert values[0] > values[1] > values[2]
    # small-x expansion of the criterion: x**(beta + 1) ~ gamma / (2 beta)
    assert values[2] == pytest.approx((gammas[2] / (2 * beta)) ** (1 / (beta + 1)), rel=0.01)


@pytest.mark.parametrize("gamma", [0.0, -0.3])
def test_threshold_domain(gamma):
    with pytest.raises(DomainError):
        share_threshold(gamma, 0.5)


def test_threshold_bad_inputs():
    with pytest.raises(InvalidParameters):
        share_threshold(0.5, 0.0)
    with pytest.raises(InvalidParameters):
        share_threshold(1.5, 0.5)


def test_threshold_monotone_and_ordered():
    xc = np.array([[share_threshold(g, b, "cournot") for b in GRID_B] for g in GRID_G])
    xb = np.array([[share_threshold(g, b, "bertrand") for b in GRID_B] for g in GRID_G])
    for x in (xc, xb):
        assert np.all(np.diff(x, axis=0) > 0)
        assert np.all(np.diff(x, axis=1) > 0)
    assert np.all(xb >= xc)


@pytest.mark.parametrize("mode", list(Mode))
@pytest.mark.parametrize("gamma,beta", [(0.3, 0.4), (0.8, 0.9), (0.95, 1.0)])
def test_decision_flips_at_threshold(mode, gamma, beta):
    x_t = share_threshold(gamma, beta, mode)
    total = 10**7
    for shift, expected in ((-1e-6, False), (1e-6, True)):
        other = round((x_t + shift) * total)
        own = total - other
        d = full_share_decision(*pair(own, other, beta=beta), gamma, mode)
        assert d.firm1_gains is expected


def test_criterion_functions_vectorise():
    x = np.linspace(0.01, 0.99, 5)
    assert f_cournot(x, 0.5, 0.5).shape == (5,)
    assert f_bertrand(x, 0.5, 0.5).shape == (5,)


def test_cost_drop_precision():
    model = CostModel(0.1, 0.1, 0.7)
    direct = model.cost(1000) - model.cost(1000 + 1e-3)
    assert cost_drop(model, 1000, 1e-3) == pytest.approx(direct, rel=1e-6)
    assert cost_drop(model, 1000, 1e-12) > 0


def test_closed_form_equal_sizes():
    for g in (0.2, 0.6, 0.95):
        out = bargaining_closed_form(*pair(700, 700, beta=0.6), g)
        assert (out.lambda1, out.lambda2) == (1.0, 1.0)


def test_closed_form_small_partner_example():
    lam, clamped = closed_form_lambda(1000, 10, 0.8, 1.0)
    asym = (4 + 0.64) / 3.2 * 0.01**3
    assert lam == pytest.approx(1.436e-6, rel=1e-3)
    assert abs(lam / asym - 1) < 0.02 and not clamped


def test_closed_form_decreasing_in_gamma():
    values = [closed_form_lambda(1000, 300, g, 0.8)[0] for g in np.linspace(0.5, 0.9, 9)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_closed_form_reorders_and_applies_consent():
    big, small = pair(1000, 50, consent=(0.5, 0.3))
    out = bargaining_closed_form(small, big, 0.7)
    assert out.reordered
    assert out.lambda1 == 0.3
    assert out.lambda2 == pytest.approx(closed_form_lambda(1000, 50, 0.7, 1.0)[0])


def test_closed_form_needs_common_beta():
    p1 = FirmProfile(0, 100, CostModel(beta=0.5))
    p2 = FirmProfile(1, 50, CostModel(beta=0.6))
    with pytest.raises(InvalidParameters):
        bargaining_closed_form(p1, p2, 0.5)


def test_exact_equal_sizes():
    out = bargaining_exact(*pair(400, 400, beta=0.8), 0.6)
    assert (out.lambda1, out.lambda2) == (1.0, 1.0)
    assert out.method is BargainMethod.EXACT_NUMERIC


def test_exact_tiny_optimum():
    p1, p2 = pair(1000, 10, a=0.5, b=0.005)
    out = bargaining_exact(p1, p2, 0.8)
    assert out.lambda2 == 1.0
    assert out.lambda1 == pytest.approx(closed_form_lambda(1000, 10, 0.8, 1.0)[0], rel=1e-3)


def test_exact_matches_closed_form_in_smallness_regime(rng):
    for _ in range(10):
        a = rng.uniform(0, 0.5)
        n1, n2 = sorted((int(x) for x in rng.integers(2, 5000, 2)), reverse=True)
        beta, gamma = rng.uniform(0.2, 1.0), rng.uniform(0.1, 0.95)
        p1, p2 = pair(n1, n2, a=a, b=0.01 * (1 - a), beta=beta)
        exact = bargaining_exact(p1, p2, gamma)
        approx_ = bargaining_closed_form(p1, p2, gamma)
        assert exact.lambda2 >= 0.999
        assert abs(exact.lambda1 - approx_.lambda1) <= 0.05


def test_exact_against_fine_grid(rng):
    for _ in range(10):
        n1, n2 = (int(x) for x in rng.integers(5, 3000, 2))
        gamma = float(rng.choice([rng.uniform(0.2, 0.95), rng.uniform(-0.9, -0.1)]))
        p1, p2 = pair(n1, n2, a=0.3, b=0.007, beta=rng.uniform(0.2, 1.0))
        out = bargaining_exact(p1, p2, gamma)
        grid = np.linspace(0, 1, 1001)
        l1, l2 = np.meshgrid(grid, grid, indexing="ij")
        g1, g2 = profit_gains(p1, p2, gamma, l1, l2)
        nash = np.where((g1 >= 0) & (g2 >= 0), g1 * g2, -1.0)
        i, j = np.unravel_index(np.argmax(nash), nash.shape)
        assert out.nash_product >= nash[i, j] * (1 - 1e-12)
        assert abs(out.lambda1 - grid[i]) <= 2e-3 and abs(out.lambda2 - grid[j]) <= 2e-3


def test_exact_is_individually_rational(rng):
    for _ in range(20):
        n1, n2 = (int(x) for x in rng.integers(1, 5000, 2))
        p1, p2 = pair(n1, n2, beta=rng.uniform(0.1, 1), consent=tuple(rng.uniform(0, 1, 2)))
        out = bargaining_exact(p1, p2, rng.uniform(-0.5, 0.95))
        assert min(out.gains) >= -1e-12
        assert out.lambda1 <= p1.consent_fraction and out.lambda2 <= p2.consent_fraction


def test_exact_without_rational_sharing():
    p1, p2 = pair(800, 300, consent=(1.0, 0.0))
    out = bargaining_exact(p1, p2, 0.6)
    assert (out.lambda1, out.lambda2) == (0.0, 0.0) and not out.individually_rational
    with pytest.raises(NoIndividuallyRationalPoint):
        bargaining_exact(p1, p2, 0.6, strict=True)


def test_bargaining_rejects_perfect_substitutes():
    with pytest.raises(InvalidParameters):
        bargaining_exact(*pair(10, 5), 1.0)
