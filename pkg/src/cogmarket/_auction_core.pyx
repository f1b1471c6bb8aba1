# cython: language_level=3
# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled ascending-price walk; mirror of _auction_py.auction_price_walk."""

from libc.math cimport ceil

import numpy as np


def auction_price_walk(const double[:, ::1] values, const long long[::1] quotas,
                       double alpha, double epsilon, bint record_trace=False):
    """See _auction_py.auction_price_walk; both backends return equal results."""
    cdef Py_ssize_t n_users = values.shape[0]
    cdef Py_ssize_t n_goods = values.shape[1]
    prices_arr = np.full(n_goods, epsilon, dtype=np.float64)
    demand_arr = np.zeros((n_users, n_goods), dtype=np.uint8)
    prev_arr = np.zeros((n_users, n_goods), dtype=np.uint8)
    excess_arr = np.zeros(n_goods, dtype=np.uint8)
    cdef double[::1] prices = prices_arr
    cdef unsigned char[:, ::1] demand = demand_arr
    cdef unsigned char[:, ::1] prev = prev_arr
    cdef unsigned char[::1] excess = excess_arr
    cdef Py_ssize_t k, l, slot, best, count
    cdef long long rounds, max_rounds, iterations = 0, messages = 0, changed = 0
    cdef double surplus, best_surplus, vmax = 0.0
    cdef bint differs, any_excess

    for k in range(n_users):
        for l in range(n_goods):
            if values[k, l] > vmax:
                vmax = values[k, l]
    max_rounds = <long long> ceil(n_goods * vmax / alpha) + n_goods + 2
    trace = [] if record_trace else None

    for rounds in range(max_rounds + 1):
        for k in range(n_users):
            for l in range(n_goods):
                demand[k, l] = 0
            # take the quota best positive-surplus channels, low index on ties
            for slot in range(quotas[k]):
                best = -1
                best_surplus = 0.0
                for l in range(n_goods):
                    if demand[k, l]:
                        continue
                    surplus = values[k, l] - prices[l]
                    if surplus > 0.0 and (best < 0 or surplus > best_surplus):
                        best = l
                        best_surplus = surplus
                if best < 0:
                    break
                demand[k, best] = 1
        messages += n_users
        if rounds == 0:
            changed += n_users
        else:
            for k in range(n_users):
                differs = False
                for l in range(n_goods):
                    if demand[k, l] != prev[k, l]:
                        differs = True
                        break
                if differs:
                    changed += 1
        any_excess = False
        for l in range(n_goods):
            count = 0
            for k in range(n_users):
                count += demand[k, l]
            excess[l] = 1 if count >= 2 else 0
            if excess[l]:
                any_excess = True
        if record_trace:
            trace.append((prices_arr.copy(), demand_arr.copy(),
                          excess_arr.astype(bool)))
        if not any_excess:
            return prices_arr, demand_arr, int(iterations), int(messages), int(changed), trace
        for l in range(n_goods):
            if excess[l]:
                prices[l] += alpha
        iterations += 1
        for k in range(n_users):
            for l in range(n_goods):
                prev[k, l] = demand[k, l]
    raise RuntimeError("auction failed to terminate within its price bound")
