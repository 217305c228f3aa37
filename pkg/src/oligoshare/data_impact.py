"""Learning-curve cost model and its two-firm variants.

A firm that trains on ``n`` samples expects marginal cost ``a + b * n**-beta``.
The variants cover quadratic production costs, multiplicative substitution,
firm-specific learning curves and heterogeneous data (mean estimation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BetaMismatch, InfeasibleCosts, InvalidParameters, ZeroCost
from .market import EquilibriumOutcome, Mode, check_costs


@dataclass(frozen=True)
class CostModel:
    """Expected marginal cost curve ``a + b / n**beta``.

    ``max_overhead_ratio`` caps ``b / (1 - a)`` so that learning never moves
    costs far enough to push a competitor out of the market.
    """

    a: float = 0.1
    b: float = 0.1
    beta: float = 1.0
    max_overhead_ratio: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.a < 1.0:
            raise InvalidParameters(f"cost floor a={self.a} must lie in [0, 1)")
        if not self.b > 0.0:
            raise InvalidParameters(f"overhead b={self.b} must be positive")
        if not 0.0 < self.beta <= 1.0:
            raise InvalidParameters(f"beta={self.beta} must lie in (0, 1]")
        # slack so that b = cap * (1 - a) survives rounding
        if self.b / (1.0 - self.a) > self.max_overhead_ratio * (1.0 + 1e-12):
            raise InvalidParameters(
                f"b/(1-a)={self.b / (1.0 - self.a):.4g} exceeds cap {self.max_overhead_ratio}"
            )

    def cost(self, n: float) -> float:
        return expected_cost(n, self)

    def with_beta(self, beta: float) -> "CostModel":
        return CostModel(self.a, self.b, beta, self.max_overhead_ratio)


@dataclass(frozen=True)
class FirmProfile:
    id: int
    n: int
    cost_model: CostModel = CostModel()
    # share of the firm's own data it is allowed to hand to partners
    consent_fraction: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParameters(f"dataset size must be a positive integer, got {self.n}")
        if not 0.0 <= self.consent_fraction <= 1.0:
            raise InvalidParameters(f"consent_fraction={self.consent_fraction} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "n": self.n,
            "a": self.cost_model.a,
            "b": self.cost_model.b,
            "beta": self.cost_model.beta,
            "consent_fraction": self.consent_fraction,
        }


def expected_cost(n: float, model: CostModel) -> float:
    if n < 1:
        raise InvalidParameters(f"need at least one sample, got n={n}")
    return model.a + model.b * n ** (-model.beta)


def visible_size(own: FirmProfile, partner: FirmProfile) -> float:
    """Training-set size of ``own`` after full sharing under partner consent."""
    return own.n + partner.consent_fraction * partner.n


def heterogeneous_shared_cost(
    n_i: int, n_other: int, sigma2: float, model: CostModel
) -> float:
    """Expected cost after pooling data whose means differ with variance ``sigma2``.

    Only defined for mean estimation, i.e. ``beta == 1``.
    """
    if model.beta != 1.0:
        raise BetaMismatch(f"heterogeneous sharing needs beta=1, got {model.beta}")
    if sigma2 < 0:
        raise InvalidParameters("sigma2 must be nonnegative")
    if math.isinf(sigma2):
        return model.a + model.b / n_i
    s = 2.0 * sigma2
    return model.a + model.b * (s * n_other + 1.0) / (s * n_i * n_other + n_i + n_other)


def quadratic_cournot(costs: Sequence[float], k: float) -> EquilibriumOutcome:
    """Perfect-substitute duopoly with production cost ``c q + k q**2 / 2``."""
    if k < 0:
        raise InvalidParameters("k must be nonnegative")
    c = check_costs(costs, 2)
    q = np.array(
        [(1.0 + k + c[1 - i] - (2.0 + k) * c[i]) / ((1.0 + k) * (3.0 + k)) for i in range(2)]
    )
    for i in range(2):
        if q[i] <= 0.0:
            raise InfeasibleCosts(i, f"firm {i} produces {q[i]:.3g} <= 0")
    p = 1.0 - q.sum()
    return EquilibriumOutcome(
        quantities=tuple(q.tolist()),
        prices=(float(p), float(p)),
        profits=tuple(((2.0 + k) / 2.0 * q * q).tolist()),
        mode=Mode.COURNOT,
    )


def quadratic_share_criterion(n1: int, n2: int, k: float) -> tuple[bool, bool]:
    """Per-firm gain from full sharing under quadratic costs (beta = 1).

    Firm i's output rises iff ``(2 + k) drop_i > drop_-i``, which rearranges to
    ``(1 + k)(1/n_i - 1/N) > 1/n_-i - 1/n_i``.
    """
    total = n1 + n2
    sizes = (n1, n2)
    return tuple(
        (1.0 + k) * (1.0 / sizes[i] - 1.0 / total) > 1.0 / sizes[1 - i] - 1.0 / sizes[i]
        for i in range(2)
    )


def multiplicative_profits(costs: Sequence[float], alpha_budget: float) -> tuple[float, float]:
    """Duopoly profits when the goods take a fixed budget share ``alpha_budget``."""
    c1, c2 = (float(x) for x in costs)
    if c1 <= 0 or c2 <= 0:
        raise ZeroCost("multiplicative substitution needs strictly positive costs")
    if alpha_budget <= 0:
        raise InvalidParameters("alpha_budget must be positive")
    return (
        alpha_budget / (1.0 + c1 / c2) ** 2,
        alpha_budget / (1.0 + c2 / c1) ** 2,
    )


def multiplicative_larger_firm_loses(
    n1: int, n2: int, model: CostModel, alpha_budget: float = 1.0
) -> bool:
    """Whether full sharing strictly lowers the profit of the firm with more data.

    Always true when sizes differ: after pooling both firms face the same
    cost and split the market evenly.
    """
    if n1 == n2:
        raise InvalidParameters("sizes are equal; there is no larger firm")
    big = 0 if n1 > n2 else 1
    before = multiplicative_profits((model.cost(n1), model.cost(n2)), alpha_budget)
    pooled = model.cost(n1 + n2)
    after = multiplicative_profits((pooled, pooled), alpha_budget)
    return after[big] < before[big]


def asymmetric_readiness(
    n1: int, n2: int, models: tuple[CostModel, CostModel], gamma: float
) -> tuple[float, float]:
    """Readiness of each firm to pool data when learning curves differ.

    Firm ``i`` gains from sharing exactly when its value is positive.
    """
    shared = n1 + n2
    sizes = (n1, n2)
    drops = [
        models[i].b * (sizes[i] ** -models[i].beta - shared ** -models[i].beta)
        for i in range(2)
    ]
    return (2.0 * drops[0] - gamma * drops[1], 2.0 * drops[1] - gamma * drops[0])
