"""Linear-demand oligopoly: demand system, Cournot/Bertrand equilibria, welfare.

The representative consumer has quasi-linear quadratic utility with unit
intercepts, so every quantity here is dimensionless. Goods are symmetric
substitutes with a single substitutability ``gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    InfeasibleCosts,
    InfeasibleDemand,
    InvalidParameters,
    NoConvergence,
)

FEAS_TOL = 1e-12


class Mode(str, Enum):
    COURNOT = "cournot"
    BERTRAND = "bertrand"

    @classmethod
    def parse(cls, value: "Mode | str") -> "Mode":
        if isinstance(value, Mode):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParameters(f"unknown competition mode {value!r}") from None


@dataclass(frozen=True)
class MarketParams:
    """Market structure shared by all firms.

    ``gamma`` may equal 1 (perfect substitutes) for Cournot competition; the
    demand inversion and Bertrand solver need ``gamma < 1``. ``budget``
    defaults to ``m + 1``, which satisfies the consumer budget condition.
    """

    m: int
    gamma: float
    mode: Mode = Mode.COURNOT
    budget: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if self.budget is None:
            object.__setattr__(self, "budget", float(self.m + 1))
        if int(self.m) != self.m or self.m < 2:
            raise InvalidParameters(f"need an integer m >= 2, got {self.m}")
        lower = -1.0 / (self.m - 1)
        if not (lower < self.gamma <= 1.0):
            raise InvalidParameters(f"gamma={self.gamma} outside ({lower:.6g}, 1]")
        if self.mode is Mode.BERTRAND and self.gamma >= 1.0:
            raise InvalidParameters("Bertrand competition needs gamma < 1")
        if not self.budget > self.m:
            raise InvalidParameters(f"budget={self.budget} must exceed m={self.m}")


@dataclass(frozen=True)
class EquilibriumOutcome:
    quantities: tuple[float, ...]
    prices: tuple[float, ...]
    profits: tuple[float, ...]
    feasible: bool = True
    # some firm produces (numerically) zero at equilibrium
    boundary: bool = False
    mode: Mode = Mode.COURNOT

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "quantities": list(self.quantities),
            "prices": list(self.prices),
            "profits": list(self.profits),
            "feasible": self.feasible,
            "boundary": self.boundary,
        }


def _vector(values: Sequence[float], m: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (m,):
        raise InvalidParameters(f"{name} must have length {m}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameters(f"{name} must be finite")
    return arr


def check_costs(costs: Sequence[float], m: int) -> np.ndarray:
    """Validate an expected-marginal-cost vector (each entry in [0, 1))."""
    c = _vector(costs, m, "costs")
    if np.any(c < 0) or np.any(c >= 1):
        raise InvalidParameters(f"marginal costs must lie in [0, 1), got {c.tolist()}")
    return c


def inverse_demand(quantities: Sequence[float], params: MarketParams) -> np.ndarray:
    """Prices clearing the market for the given quantities."""
    q = _vector(quantities, params.m, "quantities")
    if np.any(q < 0):
        raise InvalidParameters("quantities must be nonnegative")
    g = params.gamma
    return 1.0 - (1.0 - g) * q - g * q.sum()


def _demand_numerators(p: np.ndarray, gamma: float) -> np.ndarray:
    # (1 - g)(1 - p_i) + g * sum_{j != i} (p_j - p_i)
    m = p.size
    others = p.sum() - p
    return (1.0 - gamma) * (1.0 - p) + gamma * (others - (m - 1) * p)


def demand_from_prices(prices: Sequence[float], params: MarketParams) -> np.ndarray:
    """Quantities demanded at the given prices.

    Raises:
        InfeasibleDemand: if some good would be demanded in negative amount.
    """
    if params.gamma >= 1.0:
        raise InvalidParameters("demand is not invertible for perfect substitutes (gamma=1)")
    p = _vector(prices, params.m, "prices")
    g, m = params.gamma, params.m
    q = _demand_numerators(p, g) / ((1.0 - g) * (1.0 + g * (m - 1)))
    bad = np.flatnonzero(q < -FEAS_TOL)
    if bad.size:
        raise InfeasibleDemand(f"negative demand for firm(s) {bad.tolist()} at prices {p.tolist()}")
    return np.where(q < 0, 0.0, q)


def check_demand_feasibility(
    prices: Sequence[float], params: MarketParams, allow_boundary: bool = True
) -> bool:
    """Whether the interior demand solution applies at these prices.

    Every good must be demanded in nonnegative amount (strictly positive when
    ``allow_boundary`` is false) and total spending must fit in the budget.
    """
    p = _vector(prices, params.m, "prices")
    g, m = params.gamma, params.m
    num = _demand_numerators(p, g)
    if allow_boundary:
        if np.any(num < -FEAS_TOL):
            return False
    elif np.any(num <= FEAS_TOL):
        return False
    if g >= 1.0:
        return True
    q = np.maximum(num, 0.0) / ((1.0 - g) * (1.0 + g * (m - 1)))
    return bool(float(q @ p) <= params.budget)


def cournot_margins(c: np.ndarray, gamma: float) -> np.ndarray:
    """Left minus right side of the Cournot positive-output condition, per firm."""
    m = c.size
    return (2.0 - gamma) * (1.0 - c) - gamma * ((m - 1) * c - (c.sum() - c))


def _first_violation(margins: np.ndarray) -> int | None:
    bad = np.flatnonzero(margins < -FEAS_TOL)
    return int(bad[0]) if bad.size else None


def cournot_equilibrium(costs: Sequence[float], params: MarketParams) -> EquilibriumOutcome:
    """Closed-form Cournot-Nash equilibrium; profits are squared quantities."""
    m, g = params.m, params.gamma
    c = check_costs(costs, m)
    margins = cournot_margins(c, g)
    bad = _first_violation(margins)
    if bad is not None:
        raise InfeasibleCosts(bad, f"firm {bad} would exit (Cournot margin {margins[bad]:.3g})")
    total = math.fsum(c)
    q = (2.0 - g - (2.0 + g * (m - 1)) * c + g * total) / ((2.0 - g) * (2.0 + (m - 1) * g))
    q = np.maximum(q, 0.0)
    p = inverse_demand(q, params)
    return EquilibriumOutcome(
        quantities=tuple(q.tolist()),
        prices=tuple(p.tolist()),
        profits=tuple((q * q).tolist()),
        boundary=bool(np.any(q <= FEAS_TOL)),
        mode=Mode.COURNOT,
    )


def bertrand_coefficients(params: MarketParams) -> tuple[float, float, float, float]:
    g, m = params.gamma, params.m
    d1 = 2 + g * (2 * m - 5) - g**2 * (2 * m - 3)
    d2 = 2 + 3 * g * (m - 2) + g**2 * (m**2 - 4 * m + 4)
    d3 = g + g**2 * (m - 2)
    d4 = 4 + 6 * g * (m - 2) + g**2 * (2 * m**2 - 9 * m + 9)
    return d1, d2, d3, d4


def bertrand_margins(c: np.ndarray, params: MarketParams) -> np.ndarray:
    d1, _, d3, _ = bertrand_coefficients(params)
    m = c.size
    return d1 * (1.0 - c) - d3 * ((m - 1) * c - (c.sum() - c))


def bertrand_equilibrium(costs: Sequence[float], params: MarketParams) -> EquilibriumOutcome:
    """Closed-form Bertrand-Nash equilibrium.

    Profits are evaluated as markup times demand rather than through the
    quadratic-prefactor shortcut.
    """
    if params.gamma >= 1.0:
        raise InvalidParameters("Bertrand competition needs gamma < 1")
    m = params.m
    c = check_costs(costs, m)
    margins = bertrand_margins(c, params)
    bad = _first_violation(margins)
    if bad is not None:
        raise InfeasibleCosts(bad, f"firm {bad} would price below cost (Bertrand margin {margins[bad]:.3g})")
    d1, d2, d3, d4 = bertrand_coefficients(params)
    total = math.fsum(c)
    p = (d1 + (d2 - d3) * c + d3 * total) / d4
    q = demand_from_prices(p, params)
    return EquilibriumOutcome(
        quantities=tuple(q.tolist()),
        prices=tuple(p.tolist()),
        profits=tuple(((p - c) * q).tolist()),
        boundary=bool(np.any(q <= FEAS_TOL)),
        mode=Mode.BERTRAND,
    )


def solve_equilibrium(costs: Sequence[float], params: MarketParams) -> EquilibriumOutcome:
    if params.mode is Mode.BERTRAND:
        return bertrand_equilibrium(costs, params)
    return cournot_equilibrium(costs, params)


def cournot_best_response(q: np.ndarray, c: np.ndarray, gamma: float) -> np.ndarray:
    others = q.sum() - q
    return np.maximum((1.0 - c - gamma * others) / 2.0, 0.0)


def bertrand_best_response(p: np.ndarray, c: np.ndarray, gamma: float) -> np.ndarray:
    m = p.size
    k = 1.0 + gamma * (m - 2)
    others = p.sum() - p
    return (1.0 - gamma + k * c + gamma * others) / (2.0 * k)


def equilibrium_oracle(
    costs: Sequence[float],
    params: MarketParams,
    damping: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> EquilibriumOutcome:
    """Nash equilibrium by damped simultaneous best-response iteration.

    Independent of the closed forms: it only uses each firm's first-order
    condition and computes profits as markup times quantity.
    """
    m, g = params.m, params.gamma
    c = check_costs(costs, m)
    if params.mode is Mode.COURNOT:
        br = lambda x: cournot_best_response(x, c, g)  # noqa: E731
        x = np.full(m, (1.0 - c.mean()) / 2.0)
    else:
        br = lambda x: bertrand_best_response(x, c, g)  # noqa: E731
        x = (1.0 + c) / 2.0
    for _ in range(max_iter):
        target = br(x)
        if np.max(np.abs(target - x)) <= tol:
            x = target
            break
        x = (1.0 - damping) * x + damping * target
    else:
        raise NoConvergence(f"best-response iteration did not converge in {max_iter} steps")

    if params.mode is Mode.COURNOT:
        q = x
        p = inverse_demand(q, params)
    else:
        p = x
        q = demand_from_prices(p, params)
    return EquilibriumOutcome(
        quantities=tuple(q.tolist()),
        prices=tuple(p.tolist()),
        profits=tuple(((p - c) * q).tolist()),
        boundary=bool(np.any(q <= FEAS_TOL)),
        mode=params.mode,
    )


def representative_utility(
    quantities: Sequence[float], prices: Sequence[float], params: MarketParams
) -> float:
    """Consumer utility with the whole residual budget spent on the outside good."""
    q = _vector(quantities, params.m, "quantities")
    p = _vector(prices, params.m, "prices")
    g = params.gamma
    total = q.sum()
    quad = (1.0 - g) * float(q @ q) + g * total * total
    return float(total - quad / 2.0 + (params.budget - float(p @ q)))


def duopoly_welfare(costs: Sequence[float], gamma: float, budget: float = 3.0) -> float:
    """Consumer utility plus both firms' profits at the Cournot duopoly equilibrium."""
    params = MarketParams(2, gamma, Mode.COURNOT, budget)
    c = check_costs(costs, 2)
    out = cournot_equilibrium(c, params)
    q1, q2 = out.quantities
    return (
        q1 + q2
        - (q1 * q1 + q2 * q2 + 2.0 * gamma * q1 * q2) / 2.0
        + budget
        - c[0] * q1
        - c[1] * q2
    )
