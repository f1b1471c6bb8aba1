"""Selects the auction kernel at import time.

The compiled core is preferred when present; set COGMARKET_PURE=1 to force
the numpy implementation. Both produce identical results.
"""

from __future__ import annotations

import os

from . import _auction_py

try:
    from . import _auction_core
except ImportError:
    _auction_core = None


def available_backends() -> dict:
    backends = {"python": _auction_py.auction_price_walk}
    if _auction_core is not None:
        backends["cython"] = _auction_core.auction_price_walk
    return backends


def default_backend() -> str:
    if os.environ.get("COGMARKET_PURE", "").strip() not in ("", "0"):
        return "python"
    return "cython" if _auction_core is not None else "python"


def get_price_walk(backend: str | None = None):
    """Kernel lookup; backend None means the import-time default."""
    name = backend or default_backend()
    backends = available_backends()
    if name not in backends:
        raise ValueError(f"unknown backend {name!r}, have {sorted(backends)}")
    return backends[name]
