"""Shared helpers for building synthetic utility tables."""

from __future__ import annotations

import numpy as np
import pytest

from cogmarket.channel import UtilityTables


def make_tables(u_su, u_pu, u_pu_free=None, u_pu_self=None) -> UtilityTables:
    """Tables from explicit arrays; free utility defaults to a value above
    every per-SU entry so the model invariant holds."""
    u_su = np.asarray(u_su, dtype=float)
    u_pu = np.asarray(u_pu, dtype=float)
    if u_pu_free is None:
        u_pu_free = u_pu.max(axis=1) + 0.5
    if u_pu_self is None:
        u_pu_self = np.zeros(u_pu.shape[0])
    return UtilityTables(
        u_su=u_su,
        u_pu=u_pu,
        u_pu_free=np.asarray(u_pu_free, dtype=float),
        u_pu_self=np.asarray(u_pu_self, dtype=float),
    )


def random_tables(rng: np.random.Generator, n_sus: int, n_channels: int) -> UtilityTables:
    """Positive continuous utilities; ties have probability zero."""
    return make_tables(
        rng.exponential(1.0, size=(n_sus, n_channels)),
        rng.exponential(1.0, size=(n_channels, n_sus)),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
