"""Centralized assignment baselines for the weighted welfare objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .matching import Matching


@dataclass(frozen=True)
class AssignmentProblem:
    """Maximize the sum of values over channel assignments under quotas."""

    values: np.ndarray
    quotas: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "quotas", tuple(int(q) for q in self.quotas))
        if values.ndim != 2:
            raise ValueError("values must be a (K, L) matrix")
        if not np.isfinite(values).all() or (values < 0).any():
            raise ValueError("values must be finite and nonnegative")
        if len(self.quotas) != values.shape[0]:
            raise ValueError("quotas length must match the number of SUs")
        if any(q < 1 for q in self.quotas):
            raise ValueError("quotas must be at least 1")

    @classmethod
    def from_tables(cls, tables, lam: float, quotas) -> "AssignmentProblem":
        return cls(values=tables.weighted_values(lam), quotas=tuple(quotas))


def matching_welfare(matching: Matching, values: np.ndarray) -> float:
    """Total assigned value, accumulated in channel order."""
    total = 0.0
    for l, k in enumerate(matching.channel_of):
        if k is not None:
            total += float(values[k, l])
    return total


def hungarian_assign(problem: AssignmentProblem):
    """Optimal assignment via one unit-capacity row per quota slot."""
    n_sus, n_channels = problem.values.shape
    owners = np.repeat(np.arange(n_sus), problem.quotas)
    rows, cols = linear_sum_assignment(problem.values[owners], maximize=True)
    channel_of = [None] * n_channels
    for r, c in zip(rows, cols):
        channel_of[c] = int(owners[r])
    matching = Matching.from_channel_map(channel_of, n_sus)
    return matching, matching_welfare(matching, problem.values)


def brute_force_assign(problem: AssignmentProblem):
    """Exhaustive search over all quota-feasible assignments.

    Guarded to small instances; intended as an oracle for hungarian_assign.
    """
    n_sus, n_channels = problem.values.shape
    if n_channels > 10 or n_sus > 6:
        raise ValueError("brute force limited to at most 6 SUs and 10 channels")
    values = problem.values
    remaining = list(problem.quotas)
    choice = [None] * n_channels
    best_welfare = -1.0
    best_choice = None

    def search(l, acc):
        nonlocal best_welfare, best_choice
        if l == n_channels:
            if acc > best_welfare:
                best_welfare = acc
                best_choice = tuple(choice)
            return
        search(l + 1, acc)  # leave channel l with its PU
        for k in range(n_sus):
            if remaining[k] > 0:
                remaining[k] -= 1
                choice[l] = k
                search(l + 1, acc + values[k, l])
                choice[l] = None
                remaining[k] += 1

    search(0, 0.0)
    matching = Matching.from_channel_map(best_choice, n_sus)
    return matching, matching_welfare(matching, values)


def random_matching(quotas, n_channels: int, rng: np.random.Generator) -> Matching:
    """Uniform quota-feasible matching filling min(sum quotas, L) channels."""
    quotas = tuple(int(q) for q in quotas)
    copies = np.repeat(np.arange(len(quotas)), quotas)
    order = rng.permutation(len(copies))
    channels = rng.permutation(n_channels)
    channel_of = [None] * n_channels
    for i in range(min(len(copies), n_channels)):
        channel_of[channels[i]] = int(copies[order[i]])
    return Matching.from_channel_map(channel_of, len(quotas))
