"""Pure numpy ascending-price walk, semantics identical to the compiled core."""

from __future__ import annotations

import math

import numpy as np


def auction_price_walk(values, quotas, alpha, epsilon, record_trace=False):
    """Raise prices on over-demanded channels until contention clears.

    values is the (K, L) single-channel value matrix, quotas the per-SU
    bundle caps. Every channel starts at price epsilon; each round every SU
    demands its best bundle (up to quota, positive surplus only, value then
    index order) and every channel wanted by two or more SUs gains alpha.

    Returns (prices, demand, iterations, messages, messages_changed, trace):
    final prices, the (K, L) uint8 terminal demand indicators, the number of
    price-raising rounds, demand messages counted once per SU per round,
    the same counting only SUs whose demand changed, and the per-round
    (prices, demand, excess) snapshots when record_trace is set.
    """
    values = np.asarray(values, dtype=float)
    n_users, n_goods = values.shape
    quotas = np.asarray(quotas, dtype=np.int64)
    prices = np.full(n_goods, float(epsilon))
    demand = np.zeros((n_users, n_goods), dtype=np.uint8)
    prev = np.zeros_like(demand)
    vmax = max(float(values.max(initial=0.0)), 0.0)
    max_rounds = int(math.ceil(n_goods * vmax / alpha)) + n_goods + 2
    iterations = 0
    messages = 0
    messages_changed = 0
    trace = [] if record_trace else None

    for rounds in range(max_rounds + 1):
        surplus = values - prices
        demand[:] = 0
        for k in range(n_users):
            order = np.argsort(-surplus[k], kind="stable")  # stable sort keeps index order on ties
            wanted = order[surplus[k, order] > 0.0][: quotas[k]]
            demand[k, wanted] = 1
        messages += n_users
        if rounds == 0:
            messages_changed += n_users
        else:
            messages_changed += int((demand != prev).any(axis=1).sum())
        excess = demand.sum(axis=0) >= 2
        if record_trace:
            trace.append((prices.copy(), demand.copy(), excess.copy()))
        if not excess.any():
            return prices, demand, iterations, messages, messages_changed, trace
        prices[excess] += alpha
        iterations += 1
        prev[:] = demand
    raise RuntimeError("auction failed to terminate within its price bound")
