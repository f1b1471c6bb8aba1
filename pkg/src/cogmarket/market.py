"""Competitive market view of the channel assignment problem.

Each SU k values a bundle of channels by the sum of its best quota-many
single-channel values phi, where phi blends the SU rate and the PU utility
with weight lambda. Bundles beyond the quota add nothing, so demand under
prices is a greedy pick of positive-surplus channels. A synchronized English
auction raises the price of every channel wanted by two or more SUs until
contention clears, which lands at (approximately) a Walrasian equilibrium.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .assign import matching_welfare
from .matching import Matching


def single_channel_values(tables, lam: float) -> np.ndarray:
    """phi[k][l], the weighted value SU k and PU l generate together."""
    return tables.weighted_values(lam)


def _bundle_value(values_row, channels, quota) -> float:
    """Sum of the best quota-many positive values among the channels.

    Accumulation runs in decreasing value order (index breaking ties) so
    every caller produces bit-identical floats for the same bundle.
    """
    picked = sorted(((float(values_row[l]), l) for l in channels), key=lambda t: (-t[0], t[1]))
    total = 0.0
    for rank, (value, _) in enumerate(picked):
        if rank >= quota or value <= 0.0:
            break
        total += value
    return total


def satiated_utility(k: int, channels, tables, lam: float, quota: int) -> float:
    """SU k's value for a bundle; capped at quota channels, extras add zero."""
    return _bundle_value(single_channel_values(tables, lam)[k], channels, quota)


def net_utility(k: int, channels, prices, tables, lam: float, quota: int) -> float:
    """Bundle value minus the full price of the bundle."""
    price = float(sum(prices[l] for l in sorted(channels)))
    return satiated_utility(k, channels, tables, lam, quota) - price


def compute_demand(k: int, prices, tables, lam: float, quota: int) -> frozenset:
    """SU k's minimal optimal bundle at the given prices.

    Greedy in decreasing surplus (channel index on ties), stopping at the
    quota or at zero surplus. This attains the maximum net utility over all
    bundles and is contained in every other maximizer.
    """
    surplus = single_channel_values(tables, lam)[k] - np.asarray(prices, dtype=float)
    order = np.argsort(-surplus, kind="stable")
    wanted = order[surplus[order] > 0.0][:quota]
    return frozenset(int(l) for l in wanted)


def requirement(demand: frozenset, channels) -> int:
    """How many channels of the set the SU's demand actually uses."""
    return len(demand & frozenset(channels))


def excess_demand(demands) -> frozenset:
    """Channels wanted by at least two SUs.

    This is the minimal set maximizing total requirement minus set size,
    so raising exactly these prices never overshoots a clearing price.
    """
    counts = {}
    for d in demands:
        for l in d:
            counts[l] = counts.get(l, 0) + 1
    return frozenset(l for l, c in counts.items() if c >= 2)


@dataclass
class AuctionState:
    """One auction round: prices, per-SU demands, contested channels.

    demand_messages counts one broadcast per SU per round; the _changed
    variant only counts SUs whose demand moved since the previous round.
    """

    iteration: int
    prices: np.ndarray
    demands: list
    excess: frozenset
    demand_messages: int
    demand_messages_changed: int

    def to_dict(self) -> dict:
        masks = [sum(1 << l for l in d) for d in self.demands]
        return {
            "t": self.iteration,
            "prices": [float(p) for p in self.prices],
            "demand_masks": masks,
            "excess_size": len(self.excess),
        }


@dataclass
class WalrasOutcome:
    """Terminal prices and allocation; allocation[0] is the unassigned set,
    allocation[k + 1] the bundle of SU k."""

    prices: np.ndarray
    allocation: list
    welfare: float

    @property
    def unassigned(self) -> frozenset:
        return self.allocation[0]

    def bundle(self, k: int) -> frozenset:
        return self.allocation[k + 1]

    def as_matching(self, n_sus: int) -> Matching:
        channel_of = [None] * len(self.prices)
        for k in range(n_sus):
            for l in self.bundle(k):
                channel_of[l] = k
        return Matching.from_channel_map(channel_of, n_sus)

    def to_dict(self) -> dict:
        return {
            "prices": [float(p) for p in self.prices],
            "allocation": [sorted(b) for b in self.allocation],
            "welfare": self.welfare,
        }


def run_english_auction(tables, config, record_trace=False, backend=None):
    """Synchronized English auction over all channels.

    Prices start at config.initial_price; every round each SU reports its
    demand and each contested channel gains config.alpha. At termination
    every SU keeps its final demand set. Returns (WalrasOutcome, history)
    where history holds one AuctionState per round when record_trace is
    set, otherwise just the terminal state.
    """
    lam = config.lambda_
    quotas = np.asarray(config.quotas, dtype=np.int64)
    if len(quotas) != tables.n_sus:
        raise ValueError("config quotas do not match the utility tables")
    values = np.ascontiguousarray(single_channel_values(tables, lam), dtype=float)
    walk = _backend.get_price_walk(backend)
    prices, demand, iterations, messages, changed, trace = walk(
        values, quotas, float(config.alpha), float(config.initial_price), record_trace
    )

    bundles = [frozenset(int(l) for l in np.flatnonzero(demand[k])) for k in range(tables.n_sus)]
    taken = frozenset().union(*bundles) if bundles else frozenset()
    unassigned = frozenset(range(tables.n_channels)) - taken
    allocation = [unassigned] + bundles
    matching = Matching.from_channel_map(
        [next((k for k in range(tables.n_sus) if l in bundles[k]), None) for l in range(tables.n_channels)],
        tables.n_sus,
    )
    welfare = matching_welfare(matching, values)
    outcome = WalrasOutcome(prices=prices, allocation=allocation, welfare=welfare)

    history = []
    if record_trace:
        prev = None
        changed_running = 0
        for t, (p, dm, ex) in enumerate(trace):
            changed_running += tables.n_sus if prev is None else int((dm != prev).any(axis=1).sum())
            prev = dm
            history.append(
                AuctionState(
                    iteration=t,
                    prices=p,
                    demands=[frozenset(int(l) for l in np.flatnonzero(dm[k])) for k in range(tables.n_sus)],
                    excess=frozenset(int(l) for l in np.flatnonzero(ex)),
                    demand_messages=tables.n_sus * (t + 1),
                    demand_messages_changed=changed_running,
                )
            )
    else:
        history.append(
            AuctionState(
                iteration=iterations,
                prices=prices,
                demands=bundles,
                excess=frozenset(),
                demand_messages=messages,
                demand_messages_changed=changed,
            )
        )
    return outcome, history


def _all_bundle_values(values_row, prices, quota):
    """Net utility of every bundle over at most 16 channels, indexed by the
    little-endian channel bitmask. Same accumulation order as _bundle_value."""
    n = len(values_row)
    if n > 16:
        raise ValueError("bundle enumeration limited to 16 channels")
    masks = np.arange(1 << n)
    value = np.zeros(1 << n)
    count = np.zeros(1 << n, dtype=np.int64)
    order = sorted(range(n), key=lambda l: (-float(values_row[l]), l))
    for l in order:
        if float(values_row[l]) <= 0.0:
            break  # descending order, no later channel is worth taking
        member = (masks >> l) & 1 == 1
        take = member & (count < quota)
        value[take] += float(values_row[l])
        count[take] += 1
    cost = np.zeros(1 << n)
    for l in range(n):
        member = (masks >> l) & 1 == 1
        cost[member] += float(prices[l])
    return value - cost


def verify_walrasian(outcome: WalrasOutcome, tables, config, tolerance: float, rng=None) -> bool:
    """Check an outcome against the equilibrium conditions within tolerance.

    (a) the allocation partitions the channels, (b) every SU's bundle is
    within tolerance of its best achievable net utility, (c) unassigned
    channels still cost at most the initial price plus tolerance. Condition
    (b) enumerates all bundles up to 12 channels; above that it checks all
    single add, drop, and swap moves plus random probe bundles.
    """
    return not walrasian_violations(outcome, tables, config, tolerance, rng)


def walrasian_violations(outcome, tables, config, tolerance, rng=None) -> list:
    problems = []
    n_sus, n_channels = tables.n_sus, tables.n_channels
    lam = config.lambda_
    prices = np.asarray(outcome.prices, dtype=float)

    seen = set()
    for bundle in outcome.allocation:
        if bundle & seen:
            problems.append(f"allocation overlaps on {sorted(bundle & seen)}")
        seen |= bundle
    if seen != set(range(n_channels)):
        problems.append("allocation does not cover every channel")

    values = single_channel_values(tables, lam)
    for k in range(n_sus):
        quota = config.quotas[k]
        held = outcome.bundle(k)
        achieved = net_utility(k, held, prices, tables, lam, quota)
        best = _best_net_utility(k, values[k], prices, quota, n_channels, held, rng)
        if achieved < best - tolerance:
            problems.append(f"SU {k} leaves {best - achieved:.6g} net utility unclaimed")

    floor = config.initial_price + tolerance
    for l in sorted(outcome.unassigned):
        if prices[l] > floor:
            problems.append(f"unassigned channel {l} priced at {prices[l]:.6g}")
    return problems


def _best_net_utility(k, values_row, prices, quota, n_channels, held, rng):
    if n_channels <= 12:
        return float(_all_bundle_values(values_row, prices, quota).max())
    # large instance: local moves around the held bundle plus random probes
    candidates = {frozenset(held)}
    held = set(held)
    outside = [l for l in range(n_channels) if l not in held]
    for l in outside:
        candidates.add(frozenset(held | {l}))
    for l in held:
        candidates.add(frozenset(held - {l}))
        for m in outside:
            candidates.add(frozenset((held - {l}) | {m}))
    rng = rng or np.random.default_rng(0)
    for _ in range(256):
        size = int(rng.integers(0, quota + 1))
        probe = rng.choice(n_channels, size=size, replace=False) if size else []
        candidates.add(frozenset(int(l) for l in probe))
    best = -np.inf
    for bundle in candidates:
        value = _bundle_value(values_row, bundle, quota) - float(
            sum(prices[l] for l in sorted(bundle))
        )
        best = max(best, value)
    return best


def gross_substitutes_check(k, prices, higher_prices, tables, lam, quota, limit=16) -> bool:
    """Demand for channels whose price did not move must persist.

    With prices raised on some channels, every channel the SU demanded at
    the old prices whose price is unchanged must appear in some optimal
    bundle at the new prices. The fast path checks the greedy demand; the
    exhaustive path enumerates every maximizer (instances up to `limit`
    channels).
    """
    prices = np.asarray(prices, dtype=float)
    higher_prices = np.asarray(higher_prices, dtype=float)
    if (higher_prices < prices).any():
        raise ValueError("higher_prices must dominate prices componentwise")
    if (prices <= 0).any():
        raise ValueError("prices must be positive")
    before = compute_demand(k, prices, tables, lam, quota)
    kept = frozenset(l for l in before if higher_prices[l] == prices[l])
    after = compute_demand(k, higher_prices, tables, lam, quota)
    if kept <= after:
        return True
    n_channels = tables.n_channels
    if n_channels > limit:
        raise ValueError(f"exhaustive check limited to {limit} channels")
    values_row = single_channel_values(tables, lam)[k]
    net = _all_bundle_values(values_row, higher_prices, quota)
    best = net.max()
    for mask in np.flatnonzero(net == best):
        bundle = frozenset(l for l in range(n_channels) if (int(mask) >> l) & 1)
        if kept <= bundle:
            return True
    return False
