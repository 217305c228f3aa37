"""Two-firm data sharing: all-or-nothing decisions and Nash bargaining over fractions.

Cost drops are evaluated as ``b n**-beta * (1 - (1 + extra/n)**-beta)`` through
``expm1``/``log1p`` so that tiny sharing fractions keep full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy import optimize

from .data_impact import CostModel, FirmProfile, visible_size
from .errors import DomainError, InvalidParameters, NoIndividuallyRationalPoint
from .market import MarketParams, Mode, solve_equilibrium

THRESHOLD_XTOL = 1e-12


@dataclass(frozen=True)
class ShareDecision:
    firm1_gains: bool
    firm2_gains: bool
    both_share: bool
    # equilibrium profit change from sharing, per firm
    profit_deltas: tuple[float, float]
    # left minus right side of each firm's sharing inequality
    margins: tuple[float, float]
    # criterion signs agree with the equilibrium profit deltas
    consistent: bool

    def to_dict(self) -> dict:
        return {
            "firm1_gains": self.firm1_gains,
            "firm2_gains": self.firm2_gains,
            "both_share": self.both_share,
            "profit_deltas": list(self.profit_deltas),
            "margins": list(self.margins),
            "consistent": self.consistent,
        }


class BargainMethod(str, Enum):
    CLOSED_FORM = "closed_form"
    EXACT_NUMERIC = "exact_numeric"


@dataclass(frozen=True)
class BargainingOutcome:
    lambda1: float
    lambda2: float
    nash_product: float
    method: BargainMethod
    gains: tuple[float, float] = (0.0, 0.0)
    # closed form produced a value above 1 that was cut back
    clamped: bool = False
    # False when nothing beyond (0, 0) is individually rational
    individually_rational: bool = True
    # inputs were swapped internally so the larger firm came first
    reordered: bool = False

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "nash_product": self.nash_product,
            "method": self.method.value,
            "gains": list(self.gains),
            "clamped": self.clamped,
            "individually_rational": self.individually_rational,
            "reordered": self.reordered,
        }


def cost_drop(model: CostModel, n: float, extra):
    """``c(n) - c(n + extra)`` without cancellation; ``extra`` may be an array."""
    extra = np.asarray(extra, dtype=float)
    out = -model.b * n ** (-model.beta) * np.expm1(-model.beta * np.log1p(extra / n))
    return float(out) if out.ndim == 0 else out


def cost_drop_slope(model: CostModel, n: float, extra_per_unit: float, lam):
    """Derivative of ``cost_drop(model, n, lam * extra_per_unit)`` in ``lam``."""
    lam = np.asarray(lam, dtype=float)
    out = model.b * model.beta * extra_per_unit * (n + lam * extra_per_unit) ** (-model.beta - 1.0)
    return float(out) if out.ndim == 0 else out


def _own_weight(gamma: float, mode: Mode) -> float:
    # coefficient on a firm's own cost in its equilibrium markup (duopoly)
    return 2.0 if mode is Mode.COURNOT else 2.0 - gamma * gamma


def full_share_decision(
    p1: FirmProfile, p2: FirmProfile, gamma: float, mode: Mode | str = Mode.COURNOT
) -> ShareDecision:
    """Whether each firm gains from pooling all (consented) data with the other.

    A firm gains iff its weighted own cost drop beats ``gamma`` times the
    rival's drop; exact indifference counts as a gain. The same comparison is
    repeated through the market equilibria as a consistency check.
    """
    mode = Mode.parse(mode)
    params = MarketParams(2, gamma, mode)
    firms = (p1, p2)
    drops = [
        cost_drop(f.cost_model, f.n, visible_size(f, other) - f.n)
        for f, other in ((p1, p2), (p2, p1))
    ]
    w = _own_weight(gamma, mode)
    margins = (w * drops[0] - gamma * drops[1], w * drops[1] - gamma * drops[0])
    gains = tuple(mg >= 0.0 for mg in margins)

    before = [f.cost_model.cost(f.n) for f in firms]
    after = [
        f.cost_model.cost(visible_size(f, other))
        for f, other in ((p1, p2), (p2, p1))
    ]
    base = solve_equilibrium(before, params).profits
    shared = solve_equilibrium(after, params).profits
    deltas = (shared[0] - base[0], shared[1] - base[1])
    consistent = all(
        (d > 0) == (mg > 0) and (d < 0) == (mg < 0) or abs(d) <= 1e-15
        for d, mg in zip(deltas, margins)
    )
    return ShareDecision(
        firm1_gains=gains[0],
        firm2_gains=gains[1],
        both_share=gains[0] and gains[1],
        profit_deltas=deltas,
        margins=margins,
        consistent=consistent,
    )


def f_cournot(x, gamma: float, beta: float):
    """Sharing criterion rescaled by partner share ``x``; positive means gain."""
    xb = np.power(x, beta)
    yb = np.power(1.0 - np.asarray(x), beta)
    return 2.0 * xb - gamma * yb - (2.0 - gamma) * xb * yb


def f_bertrand(x, gamma: float, beta: float):
    xb = np.power(x, beta)
    yb = np.power(1.0 - np.asarray(x), beta)
    return (2.0 - gamma - gamma * gamma) * xb * (1.0 - yb) - gamma * (yb - xb)


def criterion_function(mode: Mode | str) -> Callable:
    return f_cournot if Mode.parse(mode) is Mode.COURNOT else f_bertrand


def share_threshold(gamma: float, beta: float, mode: Mode | str = Mode.COURNOT) -> float:
    """Smallest partner data share that makes full sharing profitable.

    Raises:
        DomainError: for ``gamma <= 0``, where sharing always pays.
    """
    if gamma <= 0:
        raise DomainError("no threshold for gamma <= 0: sharing is always profitable")
    if gamma > 1:
        raise InvalidParameters(f"gamma={gamma} must not exceed 1")
    if not 0 < beta <= 1:
        raise InvalidParameters(f"beta={beta} must lie in (0, 1]")
    f = criterion_function(mode)
    return optimize.bisect(
        lambda x: float(f(x, gamma, beta)), 0.0, 1.0, xtol=THRESHOLD_XTOL, maxiter=200
    )


def _common_beta(p1: FirmProfile, p2: FirmProfile) -> float:
    if p1.cost_model.beta != p2.cost_model.beta:
        raise InvalidParameters("closed-form bargaining needs a common beta")
    return p1.cost_model.beta


def _check_gamma(gamma: float) -> None:
    if not -1.0 < gamma < 1.0:
        raise InvalidParameters(f"gamma={gamma} must lie in (-1, 1) for duopoly bargaining")


def profit_gains(p1: FirmProfile, p2: FirmProfile, gamma: float, lam1, lam2):
    """Cournot profit gains over no sharing when firm i shares fraction ``lam_i``.

    Vectorised over ``lam1``/``lam2``. Evaluated in factored form
    (markup change times markup sum) to avoid subtracting nearly equal profits.
    """
    m1, m2 = p1.cost_model, p2.cost_model
    lam1 = np.asarray(lam1, dtype=float)
    lam2 = np.asarray(lam2, dtype=float)
    drop1 = cost_drop(m1, p1.n, lam2 * p2.n)
    drop2 = cost_drop(m2, p2.n, lam1 * p1.n)
    c1, c2 = m1.cost(p1.n), m2.cost(p2.n)
    base1 = 2.0 - gamma - 2.0 * c1 + gamma * c2
    base2 = 2.0 - gamma - 2.0 * c2 + gamma * c1
    d1 = 2.0 * drop1 - gamma * drop2
    d2 = 2.0 * drop2 - gamma * drop1
    scale = (4.0 - gamma * gamma) ** 2
    return d1 * (2.0 * base1 + d1) / scale, d2 * (2.0 * base2 + d2) / scale


def _gain_slopes(p1: FirmProfile, p2: FirmProfile, gamma: float, lam1: float, lam2: float, axis: int):
    """Partial derivatives of both gains in ``lam1`` (axis 0) or ``lam2`` (axis 1)."""
    m1, m2 = p1.cost_model, p2.cost_model
    drop1 = cost_drop(m1, p1.n, lam2 * p2.n)
    drop2 = cost_drop(m2, p2.n, lam1 * p1.n)
    c1, c2 = m1.cost(p1.n), m2.cost(p2.n)
    base1 = 2.0 - gamma - 2.0 * c1 + gamma * c2
    base2 = 2.0 - gamma - 2.0 * c2 + gamma * c1
    d1 = 2.0 * drop1 - gamma * drop2
    d2 = 2.0 * drop2 - gamma * drop1
    if axis == 0:
        s = cost_drop_slope(m2, p2.n, p1.n, lam1)
        dd1, dd2 = -gamma * s, 2.0 * s
    else:
        s = cost_drop_slope(m1, p1.n, p2.n, lam2)
        dd1, dd2 = 2.0 * s, -gamma * s
    scale = (4.0 - gamma * gamma) ** 2
    return dd1 * (2.0 * base1 + 2.0 * d1) / scale, dd2 * (2.0 * base2 + 2.0 * d2) / scale


def _outcome(p1, p2, gamma, lam1, lam2, method, **flags) -> BargainingOutcome:
    g1, g2 = profit_gains(p1, p2, gamma, lam1, lam2)
    g1, g2 = float(g1), float(g2)
    return BargainingOutcome(
        lambda1=float(lam1),
        lambda2=float(lam2),
        nash_product=max(g1, 0.0) * max(g2, 0.0),
        method=method,
        gains=(g1, g2),
        **flags,
    )


def closed_form_lambda(n_big: int, n_small: int, gamma: float, beta: float) -> tuple[float, bool]:
    """Approximate share of the larger firm's data and whether it was clamped to 1."""
    if gamma <= 0:
        return 1.0, False
    gate_lhs = (4.0 + gamma * gamma) / n_big**beta
    gate_rhs = 4.0 * gamma / n_small**beta + (2.0 - gamma) ** 2 / (n_big + n_small) ** beta
    if gate_lhs > gate_rhs:
        return 1.0, False
    ratio = n_small / n_big
    delta = (4.0 + gamma * gamma) / (4.0 * gamma)
    # 1 - (n_big / total)**beta, computed without cancellation
    tail = -math.expm1(-beta * math.log1p(ratio))
    t = delta * ratio**beta * tail
    if t >= 1.0:
        return 1.0, True
    lam = ratio * math.expm1(-math.log1p(-t) / beta)
    if lam > 1.0:
        return 1.0, True
    return lam, False


def bargaining_closed_form(p1: FirmProfile, p2: FirmProfile, gamma: float) -> BargainingOutcome:
    """Approximate Nash-bargaining fractions for Cournot duopoly.

    The smaller firm shares everything; the larger one shares the closed-form
    fraction. Consent limits are applied last.
    """
    _check_gamma(gamma)
    beta = _common_beta(p1, p2)
    reordered = p2.n > p1.n
    big, small = (p2, p1) if reordered else (p1, p2)
    lam_big, clamped = closed_form_lambda(big.n, small.n, gamma, beta)
    lam_big = min(lam_big, big.consent_fraction)
    lam_small = min(1.0, small.consent_fraction)
    lam1, lam2 = (lam_small, lam_big) if reordered else (lam_big, lam_small)
    return _outcome(
        p1, p2, gamma, lam1, lam2, BargainMethod.CLOSED_FORM,
        clamped=clamped, reordered=reordered,
    )


def _line_slopes(p1, p2, gamma, lam1, lam2, axis):
    """d/d(free coordinate) of the log Nash product, signed infinities off the IR set.

    Along lambda1 the receiving firm's gain (firm 2) rises; the giver's gain
    falls for gamma > 0 and does not fall otherwise. Along lambda2 the roles
    swap. An infeasible probe therefore tells which way the feasible
    interval lies.
    """
    g1, g2 = profit_gains(p1, p2, gamma, lam1, lam2)
    s1, s2 = _gain_slopes(p1, p2, gamma, lam1, lam2, axis=axis)
    receiver, giver = (g2, g1) if axis == 0 else (g1, g2)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = s1 / g1 + s2 / g2
    slope = np.where(giver <= 0.0, -np.inf if gamma > 0 else np.inf, slope)
    return np.where(receiver <= 0.0, np.inf, slope)


def _line_argmax(p1, p2, gamma, fixed, axis, cap, iters: int = 200):
    """Maximise the Nash product along the free coordinate for each value in ``fixed``.

    Vectorised bisection on the sign of the log-derivative over ``[0, cap]``.
    """
    fixed = np.asarray(fixed, dtype=float)

    def slope(t):
        lam = (t, fixed) if axis == 0 else (fixed, t)
        return _line_slopes(p1, p2, gamma, *lam, axis)

    lo = np.zeros_like(fixed)
    hi = np.full_like(fixed, cap)
    at_hi = slope(hi) >= 0.0
    at_lo = ~at_hi & (slope(lo) <= 0.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        up = slope(mid) > 0.0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    best = 0.5 * (lo + hi)
    best = np.where(at_hi, cap, best)
    return np.where(at_lo, 0.0, best)


def _nash(p1, p2, gamma, lam1, lam2):
    g1, g2 = profit_gains(p1, p2, gamma, lam1, lam2)
    return np.where((g1 >= 0.0) & (g2 >= 0.0), g1 * g2, -np.inf)


def bargaining_exact(
    p1: FirmProfile,
    p2: FirmProfile,
    gamma: float,
    grid: int = 201,
    tol: float = 1e-8,
    max_sweeps: int = 500,
    strict: bool = False,
) -> BargainingOutcome:
    """Global maximiser of the Nash product over the consented sharing box.

    Candidates are the ``grid`` x ``grid`` lattice plus, for every lattice
    line, the exact optimum along that line (the individually rational set
    can be a sliver far thinner than the lattice spacing). The best candidate
    (ties: lowest lambda1, then lowest lambda2) is refined by coordinate
    ascent until no coordinate moves by more than ``tol``.

    When no point other than (0, 0) is individually rational the result is
    (0, 0) with ``individually_rational=False``, or
    ``NoIndividuallyRationalPoint`` is raised if ``strict``.
    """
    _check_gamma(gamma)
    caps = (p1.consent_fraction, p2.consent_fraction)
    axes = [np.linspace(0.0, cap, grid) for cap in caps]
    l1, l2 = np.meshgrid(axes[0], axes[1], indexing="ij")
    cand1 = [l1.ravel()]
    cand2 = [l2.ravel()]
    cand1.append(_line_argmax(p1, p2, gamma, axes[1], 0, caps[0]))
    cand2.append(axes[1])
    cand1.append(axes[0])
    cand2.append(_line_argmax(p1, p2, gamma, axes[0], 1, caps[1]))
    c1 = np.concatenate(cand1)
    c2 = np.concatenate(cand2)
    values = _nash(p1, p2, gamma, c1, c2)
    top = values.max()
    if not top > 0.0:
        if strict:
            raise NoIndividuallyRationalPoint("no individually rational sharing beyond (0, 0)")
        return _outcome(p1, p2, gamma, 0.0, 0.0, BargainMethod.EXACT_NUMERIC, individually_rational=False)
    ties = np.flatnonzero(values == top)
    k = min(ties, key=lambda idx: (c1[idx], c2[idx]))
    point = [float(c1[k]), float(c2[k])]
    best = float(top)

    for _ in range(max_sweeps):
        moved = 0.0
        for axis in (0, 1):
            other = point[1 - axis]
            t = float(_line_argmax(p1, p2, gamma, np.array([other]), axis, caps[axis])[0])
            trial = list(point)
            trial[axis] = t
            value = float(_nash(p1, p2, gamma, *trial))
            if value >= best:
                moved = max(moved, abs(t - point[axis]))
                point, best = trial, value
        if moved <= tol:
            break
    return _outcome(p1, p2, gamma, point[0], point[1], BargainMethod.EXACT_NUMERIC)
