"""Coalition formation among m Cournot firms that pool training data inside blocks.

Three mechanisms are covered: the sequential proposal game (solved by
memoised backward induction, with a literal game-tree oracle), the alpha-core,
and the one-shot treaty games (consensus and opt-in).

Internally firms are indexed by rank: rank 0 holds the most data, ties broken
by ascending id. Sets of firms are bitmasks over ranks, and a partition is the
sorted tuple of its block masks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Iterable, Iterator, Sequence

from .data_impact import FirmProfile
from .errors import InfeasibleCosts, InvalidParameters, SizeLimitExceeded
from .market import MarketParams, Mode, cournot_equilibrium

MAX_GAME_FIRMS = 8
MAX_BRUTE_FORCE_FIRMS = 4
MAX_CORE_FIRMS = 6
DEFAULT_STATE_BUDGET = 2_000_000


class Partition:
    """Set of disjoint nonempty blocks of firm ids.

    Blocks are stored sorted (members ascending, blocks by smallest member),
    so equality and hashing do not depend on input order.
    """

    __slots__ = ("_blocks",)

    def __init__(self, blocks: Iterable[Iterable[int]]):
        canon = []
        seen: set[int] = set()
        for block in blocks:
            members = tuple(sorted(set(block)))
            if not members:
                raise InvalidParameters("partition blocks must be nonempty")
            if seen.intersection(members):
                raise InvalidParameters("partition blocks must be disjoint")
            seen.update(members)
            canon.append(members)
        self._blocks = tuple(sorted(canon))

    @classmethod
    def singletons(cls, ids: Iterable[int]) -> "Partition":
        return cls([i] for i in ids)

    @classmethod
    def grand(cls, ids: Iterable[int]) -> "Partition":
        return cls([list(ids)])

    @property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        return self._blocks

    @property
    def members(self) -> frozenset[int]:
        return frozenset(i for b in self._blocks for i in b)

    def block_of(self, firm: int) -> tuple[int, ...]:
        for b in self._blocks:
            if firm in b:
                return b
        raise KeyError(firm)

    def covers(self, ids: Iterable[int]) -> bool:
        return self.members == frozenset(ids)

    def __len__(self) -> int:
        return len(self._blocks)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self._blocks)

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and self._blocks == other._blocks

    def __hash__(self) -> int:
        return hash(self._blocks)

    def __repr__(self) -> str:
        inner = ", ".join("{" + ", ".join(map(str, b)) + "}" for b in self._blocks)
        return "{" + inner + "}"

    def to_list(self) -> list[list[int]]:
        return [list(b) for b in self._blocks]


class Solver(str, Enum):
    BACKWARD_INDUCTION = "backward_induction"
    BRUTE_FORCE = "brute_force"


@dataclass(frozen=True)
class GameResult:
    partition: Partition
    # aligned with the input profile order
    profits: tuple[float, ...]
    solver: Solver
    states: int = 0

    def to_dict(self) -> dict:
        return {
            "partition": self.partition.to_list(),
            "profits": list(self.profits),
            "solver": self.solver.value,
            "states": self.states,
        }


@dataclass(frozen=True)
class GameState:
    """A proposer's decision node in the sequential game (bitmasks over ranks)."""

    active_firms: int
    proposer: int
    available_offers: frozenset[int]
    formed_blocks: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.active_firms >> self.proposer & 1:
            raise InvalidParameters("proposer must be active")
        for offer in self.available_offers:
            if offer & ~self.active_firms or not offer >> self.proposer & 1:
                raise InvalidParameters("offers must be active subsets containing the proposer")


def set_partitions(items: Sequence) -> Iterator[list[list]]:
    """All partitions of ``items`` (Bell-number many)."""
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[head]] + part
        for k in range(len(part)):
            yield part[:k] + [[head] + part[k]] + part[k + 1:]


def _check_profiles(profiles: Sequence[FirmProfile]) -> None:
    if len(profiles) < 2:
        raise InvalidParameters("need at least two firms")
    ids = [p.id for p in profiles]
    if len(set(ids)) != len(ids):
        raise InvalidParameters("firm ids must be unique")


def size_order(profiles: Sequence[FirmProfile]) -> list[int]:
    """Input positions sorted by decreasing dataset size, ties by ascending id."""
    return sorted(range(len(profiles)), key=lambda k: (-profiles[k].n, profiles[k].id))


def partition_profits(
    partition: Partition, profiles: Sequence[FirmProfile], gamma: float
) -> tuple[float, ...]:
    """Cournot profits when every firm trains on the pooled data of its block.

    Raises:
        InfeasibleCosts: if some firm would exit at the induced costs.
    """
    _check_profiles(profiles)
    if not partition.covers(p.id for p in profiles):
        raise InvalidParameters("partition must cover exactly the given firms")
    size = {p.id: p.n for p in profiles}
    pooled = {i: sum(size[j] for j in block) for block in partition for i in block}
    costs = [p.cost_model.cost(pooled[p.id]) for p in profiles]
    out = cournot_equilibrium(costs, MarketParams(len(profiles), gamma, Mode.COURNOT))
    return out.profits


def avg_coalition_size(partition: Partition) -> float:
    return len(partition.members) / len(partition)


class _Table:
    """Profits of every partition of the ranked firms, keyed by sorted block masks."""

    def __init__(self, profiles: Sequence[FirmProfile], gamma: float):
        _check_profiles(profiles)
        self.profiles = profiles
        self.gamma = gamma
        self.order = size_order(profiles)
        self.m = m = len(profiles)
        self.ids = [profiles[k].id for k in self.order]
        self.sizes = [profiles[k].n for k in self.order]
        self.payoff: dict[tuple[int, ...], tuple[float, ...]] = {}
        for part in set_partitions(list(range(m))):
            key = tuple(sorted(sum(1 << r for r in block) for block in part))
            self.payoff[key] = self._rank_profits(key)
        full = 1 << m
        self.pooled = [sum(self.sizes[r] for r in range(m) if mask >> r & 1) for mask in range(full)]
        # larger is better: the lexicographically smallest id set wins
        self.lex = [
            tuple(-i for i in sorted(self.ids[r] for r in range(m) if mask >> r & 1)) + (math.inf,)
            for mask in range(full)
        ]
        self.keys = {key: tuple(self.outcome_key(key, r) for r in range(m)) for key in self.payoff}

    def _rank_profits(self, key: tuple[int, ...]) -> tuple[float, ...]:
        by_pos = partition_profits(self.to_partition(key), self.profiles, self.gamma)
        return tuple(by_pos[k] for k in self.order)

    def outcome_key(self, key: tuple[int, ...], proposer: int) -> tuple:
        """Proposer's ranking of final partitions, a total order on distinct outcomes.

        Profit first; on exact ties the larger pooled block, then the
        lexicographically smallest block of ids.
        """
        bit = 1 << proposer
        block = next(b for b in key if b & bit)
        return (self.payoff[key][proposer], self.pooled[block], self.lex[block])

    def to_partition(self, key: tuple[int, ...]) -> Partition:
        return Partition([self.ids[r] for r in range(self.m) if mask >> r & 1] for mask in key)

    def result(self, key: tuple[int, ...], solver: Solver, states: int = 0) -> GameResult:
        part = self.to_partition(key)
        by_rank = self.payoff[key]
        profits = [0.0] * self.m
        for r, k in enumerate(self.order):
            profits[k] = by_rank[r]
        return GameResult(part, tuple(profits), solver, states)


def _merge(formed: tuple[int, ...], block: int) -> tuple[int, ...]:
    return tuple(sorted(formed + (block,)))


def _submasks(mask: int) -> Iterator[int]:
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def _offers(active: int, proposer: int) -> list[int]:
    rest = active & ~(1 << proposer)
    return [s | (1 << proposer) for s in _submasks(rest)]


def _invitees(offer: int, proposer: int, m: int) -> list[int]:
    # response order: decreasing size, i.e. increasing rank
    return [r for r in range(m) if offer >> r & 1 and r != proposer]


class _Backward:
    """Memoised backward induction with exact pruning.

    At every proposer node the singleton offer stays available, so the
    proposer can always secure the outcome ``S`` of going alone. Offers whose
    accepted outcome ranks below ``S`` can never be chosen profitably and
    burning them leaves the continuation unchanged, so they are dropped.
    Within a node the remaining offers are scanned best outcome first; if the
    best is accepted it is the answer.
    """

    def __init__(self, table: _Table, budget: int):
        self.t = table
        self.budget = budget
        self.states = 0
        self.memo: dict[tuple[tuple[int, ...], int], tuple[int, ...]] = {}

    def _tick(self) -> None:
        self.states += 1
        if self.states > self.budget:
            raise SizeLimitExceeded(f"state budget {self.budget} exhausted")

    def value(self, formed: tuple[int, ...], active: int) -> tuple[int, ...]:
        if active == 0:
            return formed
        memo_key = (formed, active)
        hit = self.memo.get(memo_key)
        if hit is not None:
            return hit
        self._tick()
        t = self.t
        p = (active & -active).bit_length() - 1
        alone = self.value(_merge(formed, 1 << p), active & ~(1 << p))
        alone_key = t.outcome_key(alone, p)
        good = []
        for offer in _offers(active, p):
            if offer == 1 << p:
                continue
            acc = self.value(_merge(formed, offer), active & ~offer)
            k = t.outcome_key(acc, p)
            if k > alone_key:
                good.append((k, acc, _invitees(offer, p, t.m)))
        good.sort(key=lambda g: g[0], reverse=True)
        result = self._best(good, alone, alone_key) if good else alone
        self.memo[memo_key] = result
        return result

    def _best(self, good, alone, alone_key) -> tuple[int, ...]:
        payoff = self.t.payoff
        memo: dict[int, tuple[tuple, tuple[int, ...]]] = {0: (alone_key, alone)}

        def f(avail: int):
            hit = memo.get(avail)
            if hit is not None:
                return hit
            self._tick()
            best = (alone_key, alone)
            top = (avail & -avail).bit_length() - 1
            rest_mask = avail
            while rest_mask:
                i = (rest_mask & -rest_mask).bit_length() - 1
                rest_mask &= rest_mask - 1
                k, acc, voters = good[i]
                rej_key, rej = f(avail & ~(1 << i))
                pay_acc, pay_rej = payoff[acc], payoff[rej]
                accepted = all(pay_acc[v] >= pay_rej[v] for v in voters)
                cand = (k, acc) if accepted else (rej_key, rej)
                if cand[0] > best[0]:
                    best = cand
                if accepted and i == top:
                    # every reachable outcome ranks at most as high as this one
                    break
            memo[avail] = best
            return best

        return f((1 << len(good)) - 1)[1]


def _check_game_size(m: int, limit: int) -> None:
    if m > limit:
        raise SizeLimitExceeded(f"{m} firms exceeds the limit of {limit} for this solver")


def sequential_game_solve(
    profiles: Sequence[FirmProfile], gamma: float, budget: int = DEFAULT_STATE_BUDGET
) -> GameResult:
    """Subgame-perfect outcome of the sequential coalition proposal game.

    The largest active firm proposes coalitions containing itself, each at
    most once and in the order it prefers; invitees answer in decreasing size
    order and any refusal rejects the offer. Accepted blocks leave the game;
    proposing the singleton ends the proposer's turn. Responders accept when
    indifferent; proposer ties go to the larger pooled block, then to the
    lexicographically smallest id set.

    Raises:
        SizeLimitExceeded: for more than eight firms or when the explored
            state count passes ``budget``.
        InfeasibleCosts: when some partition of the firms is not a valid
            Cournot market.
    """
    _check_game_size(len(profiles), MAX_GAME_FIRMS)
    table = _Table(profiles, gamma)
    solver = _Backward(table, budget)
    key = solver.value((), (1 << table.m) - 1)
    return table.result(key, Solver.BACKWARD_INDUCTION, solver.states)


def brute_force_game_solve(profiles: Sequence[FirmProfile], gamma: float) -> GameResult:
    """Same game, expanded node by node with no memo table and no pruning.

    Each proposer node tries every remaining offer; each offer walks its
    invitees one at a time from the last responder back to the first.
    """
    _check_game_size(len(profiles), MAX_BRUTE_FORCE_FIRMS)
    table = _Table(profiles, gamma)
    payoff, keys, m = table.payoff, table.keys, table.m
    # static lookups only: offers of each active set and invitees of each offer
    offers = {a: tuple(sorted(_offers(a, (a & -a).bit_length() - 1))) for a in range(1, 1 << m)}
    invitees = {
        x: tuple(reversed(_invitees(x, (x & -x).bit_length() - 1, m))) for x in range(1, 1 << m)
    }
    counter = [0]

    def subgame(formed: tuple[int, ...], active: int) -> tuple[int, ...]:
        if active == 0:
            return formed
        p = (active & -active).bit_length() - 1
        root = GameState(active, p, frozenset(offers[active]), formed)
        return node(root.formed_blocks, root.active_firms, root.proposer, offers[active])

    def node(formed, active, p, available) -> tuple[int, ...]:
        counter[0] += 1
        best_key, best = None, None
        for offer in available:
            accepted = subgame(tuple(sorted(formed + (offer,))), active & ~offer)
            if offer == 1 << p:
                outcome = accepted
            else:
                rejected = node(formed, active, p, tuple(x for x in available if x != offer))
                # last responder decides first; an earlier one accepts only
                # if what follows is at least as good as a rejection
                outcome = accepted
                for v in invitees[offer]:
                    if payoff[outcome][v] < payoff[rejected][v]:
                        outcome = rejected
            k = keys[outcome][p]
            if best_key is None or k > best_key:
                best_key, best = k, outcome
        return best

    key = subgame((), (1 << table.m) - 1)
    return table.result(key, Solver.BRUTE_FORCE, counter[0])


def all_partitions(ids: Sequence[int]) -> Iterator[Partition]:
    for part in set_partitions(list(ids)):
        yield Partition(part)


def alpha_core_membership(
    partition: Partition, profiles: Sequence[FirmProfile], gamma: float
) -> bool:
    """Whether no group of firms can break away and gain whatever the others do.

    A group ``S`` blocks ``partition`` when every member of ``S`` strictly
    prefers ``S`` standing as a block under every partition of the remaining
    firms.
    """
    m = len(profiles)
    _check_game_size(m, MAX_CORE_FIRMS)
    ids = [p.id for p in profiles]
    cache: dict[Partition, tuple[float, ...]] = {}

    def profits(part: Partition) -> tuple[float, ...]:
        if part not in cache:
            cache[part] = partition_profits(part, profiles, gamma)
        return cache[part]

    base = profits(partition)
    for size in range(1, m + 1):
        for group in combinations(range(m), size):
            rest = [ids[k] for k in range(m) if k not in group]
            block = [ids[k] for k in group]
            blocked = True
            for counter in set_partitions(rest):
                alt = profits(Partition(counter + [block]))
                if any(base[k] >= alt[k] for k in group):
                    blocked = False
                    break
            if blocked:
                return False
    return True


def theorem3_partition(profiles: Sequence[FirmProfile], gamma: float) -> Partition:
    """Best two-block split into a prefix of the largest firms and the rest, for the largest firm.

    Ties go to the shorter prefix.
    """
    _check_profiles(profiles)
    order = size_order(profiles)
    ids = [profiles[k].id for k in order]
    top = order[0]
    best, best_profit = None, None
    for i in range(1, len(ids) + 1):
        blocks = [ids[:i]] + ([ids[i:]] if i < len(ids) else [])
        part = Partition(blocks)
        profit = partition_profits(part, profiles, gamma)[top]
        if best_profit is None or profit > best_profit:
            best, best_profit = part, profit
    return best


def _common_beta(profiles: Sequence[FirmProfile]) -> float:
    betas = {p.cost_model.beta for p in profiles}
    if len(betas) != 1:
        raise InvalidParameters("treaty criteria need a common beta")
    return betas.pop()


def universal_treaty_is_equilibrium(profiles: Sequence[FirmProfile], gamma: float) -> bool:
    """Whether all firms strictly prefer the grand coalition to going alone.

    Only the largest firm's inequality can bind:
    ``(2 - gamma) / n**beta < (2 + gamma (m - 1)) / n_1**beta - gamma sum_j 1 / n_j**beta``
    with ``n`` the total data.
    """
    _check_profiles(profiles)
    beta = _common_beta(profiles)
    m = len(profiles)
    sizes = sorted((p.n for p in profiles), reverse=True)
    total = sum(sizes)
    rhs = math.fsum(
        [(2.0 + gamma * (m - 1)) * sizes[0] ** -beta] + [-gamma * n ** -beta for n in sizes]
    )
    return (2.0 - gamma) * total ** -beta < rhs


def join_gain_holds(n_firm: int, n_block: int, block_size: int, m: int, gamma: float, beta: float) -> bool:
    """Whether a lone firm strictly gains by joining a block of ``block_size`` firms.

    With ``y = n_firm / n_block`` the condition reads
    ``(2 + gamma (m - 2)) (1 - y^b / (1+y)^b) > gamma |S| (y^b - y^b / (1+y)^b)``.
    """
    y = n_firm / n_block
    yb = y**beta
    ratio = yb / (1.0 + y) ** beta
    return (2.0 + gamma * (m - 2)) * (1.0 - ratio) > gamma * block_size * (yb - ratio)


def _treaty_partition(ids: Sequence[int], yes: frozenset[int]) -> Partition:
    blocks = [[i] for i in ids if i not in yes]
    if yes:
        blocks.append(sorted(yes))
    return Partition(blocks)


def treaty_deviation_ok(
    yes: frozenset[int], profiles: Sequence[FirmProfile], gamma: float
) -> bool:
    """Nash check of the opt-in treaty game: no firm gains by switching its answer."""
    ids = [p.id for p in profiles]
    base = partition_profits(_treaty_partition(ids, yes), profiles, gamma)
    for k, i in enumerate(ids):
        switched = yes - {i} if i in yes else yes | {i}
        alt = partition_profits(_treaty_partition(ids, switched), profiles, gamma)
        if alt[k] > base[k]:
            return False
    return True


def treaty_boundary_ok(i: int, profiles: Sequence[FirmProfile], gamma: float) -> bool:
    """The two boundary comparisons for the suffix set starting at rank ``i`` (0-based).

    The firm just outside must not gain by joining and the smallest-index
    member must not gain by leaving.
    """
    order = size_order(profiles)
    ids = [profiles[k].id for k in order]
    yes = frozenset(ids[i:])
    base = partition_profits(_treaty_partition(ids, yes), profiles, gamma)
    if i > 0:
        outsider = order[i - 1]
        joined = partition_profits(_treaty_partition(ids, yes | {ids[i - 1]}), profiles, gamma)
        if joined[outsider] > base[outsider]:
            return False
    first = order[i]
    left = partition_profits(_treaty_partition(ids, yes - {ids[i]}), profiles, gamma)
    return not left[first] > base[first]


@dataclass(frozen=True)
class TreatyReport:
    equilibria: tuple[frozenset[int], ...]
    # suffix sets where the two boundary checks and the full check disagree
    disagreements: tuple[frozenset[int], ...]

    def to_dict(self) -> dict:
        return {
            "equilibria": [sorted(s) for s in self.equilibria],
            "disagreements": [sorted(s) for s in self.disagreements],
        }


def treaty_report(profiles: Sequence[FirmProfile], gamma: float) -> TreatyReport:
    _check_profiles(profiles)
    order = size_order(profiles)
    ids = [profiles[k].id for k in order]
    found, disagree = [], []
    for i in range(len(ids)):
        yes = frozenset(ids[i:])
        full = treaty_deviation_ok(yes, profiles, gamma)
        if full != treaty_boundary_ok(i, profiles, gamma):
            disagree.append(yes)
        if full:
            found.append(yes)
    # nobody opting in: a lone "yes" changes nothing, so this always holds
    if treaty_deviation_ok(frozenset(), profiles, gamma):
        found.append(frozenset())
    return TreatyReport(tuple(found), tuple(disagree))


def treaty_equilibria(profiles: Sequence[FirmProfile], gamma: float) -> list[frozenset[int]]:
    """Opt-in sets that are Nash equilibria of the treaty game.

    Candidates are the suffixes of the size order (largest first) plus the
    empty set; each is confirmed by checking every firm's deviation.
    """
    return list(treaty_report(profiles, gamma).equilibria)


def game_feasible(profiles: Sequence[FirmProfile], gamma: float) -> bool:
    """Whether every partition of the firms yields a valid Cournot market."""
    try:
        _Table(profiles, gamma)
    except InfeasibleCosts:
        return False
    return True
