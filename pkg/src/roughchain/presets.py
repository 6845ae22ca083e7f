"""Shared default parameter set and external reference prices.

All six families ship with the same base parameter set (the one used for the
repository's table and validation runs).  ``REFERENCE_PRICES`` holds external
Monte Carlo benchmark values used only to form relative-error columns in the
table workflow; they are data, not targets the engine is fitted to.
"""

from __future__ import annotations

from .models import MODEL_NAMES

__all__ = ["BASE_MARKET", "BASE_KERNEL", "BASE_OPTION", "model_params", "REFERENCE_PRICES"]

BASE_MARKET = {"s0": 10.0, "v0": 0.04, "rho": -0.75}
BASE_KERNEL = {"hurst": 0.12, "eps": 1e-8}
BASE_OPTION = {"kind": "call", "strike": 4.0, "maturity": 1.0, "rate": 0.0}
BASE_BARRIER = (2.0, 15.0)

_SHARED = {"r": 0.0, "q": 0.0, "eta": 4.0, "theta": 0.035, "sigma": 0.8}


def model_params(name: str) -> dict:
    """Default parameter dict for one family."""
    if name == "rough-heston":
        return dict(_SHARED)
    if name == "rough-42":
        return dict(_SHARED, a=0.02, b=0.05)
    if name == "rough-alpha-hyper":
        return {k: _SHARED[k] for k in ("r", "q", "eta", "theta", "sigma")} | {"a": 0.02}
    if name == "rough-sabr":
        return {"sigma": 0.8, "beta": 0.7}
    if name == "rough-heston-sabr":
        return dict(_SHARED, beta=0.7)
    if name == "rough-quadratic-slv":
        return dict(_SHARED, a=0.02, b=0.05, c=1.0)
    raise KeyError(f"unknown model {name!r}; choose one of {MODEL_NAMES}")


# external MC reference values (european, barrier(2,15), american) per family
REFERENCE_PRICES = {
    "rough-heston":        {"european": 6.0545, "barrier": 6.0492, "american": 6.0635},
    "rough-42":            {"european": 0.0362, "barrier": 0.0345, "american": 0.0418},
    "rough-alpha-hyper":   {"european": 6.0001, "barrier": 5.9753, "american": 6.1111},
    "rough-sabr":          {"european": 4.9269, "barrier": 4.8099, "american": 6.0000},
    "rough-heston-sabr":   {"european": 6.0018, "barrier": 6.0000, "american": 6.4410},
    "rough-quadratic-slv": {"european": 6.0000, "barrier": 5.9814, "american": 7.1658},
}
