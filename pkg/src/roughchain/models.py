"""The six rough stochastic local volatility families and their transforms.

Every family is a pair of dynamics

    dS = mu(S, V) dt + phi(V) nu(S) dW
    V  = V0 + int K(t, s) (b(V) ds + sigma(V) dB),   corr(W, B) = rho,

together with the decoupling transforms

    g(s) = int ds / nu(s)           (asset transform, strictly increasing)
    f(v) = int phi(v) / (c sigma(v)) dv   (variance transform)

where c is the chain scale: c = Keps for the shifted-kernel Markovian system
("markov" formulation) and c = 1 for the stabilized chain the engine prices
with by default ("stable").  The auxiliary state is X = g(S) - rho f(V), whose
drift `drift_theta` below is obtained from Ito's formula and is exact for any
scale c as long as the same c is used in the variance chain, in f and in theta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, ParameterError
from .kernel import KernelSpec, laplace_constants

__all__ = [
    "MODEL_NAMES",
    "ModelSpec",
    "MarketParams",
    "make_model",
    "chain_scale",
    "transform_f",
    "drift_theta",
]

MODEL_NAMES = (
    "rough-heston",
    "rough-42",
    "rough-alpha-hyper",
    "rough-sabr",
    "rough-heston-sabr",
    "rough-quadratic-slv",
)

ArrayLike = "float | np.ndarray"


@dataclass(frozen=True)
class MarketParams:
    """Initial state and correlation shared by all families."""

    s0: float
    v0: float
    rho: float

    def __post_init__(self):
        if not self.s0 > 0:
            raise ParameterError(f"s0 must be positive, got {self.s0}")
        if not abs(self.rho) < 1:
            raise ParameterError(f"rho must lie in (-1, 1), got {self.rho}")


@dataclass(frozen=True)
class ModelSpec:
    """Coefficient functions and transforms of one volatility family.

    All callables accept floats or numpy arrays.  ``f_primitive`` is the
    unscaled primitive int phi/sigma; the engine divides by the chain scale.
    ``asset_domain`` is "positive" (S > 0) or "real"; ``g_range`` bounds the
    image of g (used to clamp auxiliary grids inside the transform domain).
    """

    name: str
    params: dict
    mu: Callable
    nu: Callable
    nu_prime: Callable
    phi: Callable
    phi_prime: Callable
    b: Callable
    sigma: Callable
    sigma_prime: Callable
    g: Callable
    g_inverse_raw: Callable = field(repr=False)
    f_primitive: Callable = field(repr=False)
    asset_domain: str = "positive"
    g_range: tuple = (-np.inf, np.inf)
    variance_domain: str = "positive"

    def g_inverse(self, y):
        """Inverse asset transform; raises outside the open image of g."""
        yarr = np.asarray(y, dtype=float)
        lo, hi = self.g_range
        if np.any(yarr <= lo) or np.any(yarr >= hi):
            raise DomainError(
                f"{self.name}: g_inverse argument outside ({lo:.6g}, {hi:.6g})"
            )
        out = self.g_inverse_raw(yarr)
        return float(out) if np.isscalar(y) else out


def _require(params: dict, name: str, keys: tuple[str, ...]) -> dict:
    missing = [k for k in keys if k not in params]
    extra = [k for k in params if k not in keys]
    if missing:
        raise ParameterError(f"{name}: missing parameters {missing}")
    if extra:
        raise ParameterError(f"{name}: unknown parameters {extra}")
    return {k: float(params[k]) for k in keys}


def _check(cond: bool, name: str, what: str):
    if not cond:
        raise ParameterError(f"{name}: parameter domain violated: {what}")


def make_model(name: str, params: dict) -> ModelSpec:
    """Build the named family with validated parameters.

    Parameter sets (all floats):

    ========================  ==========================================
    rough-heston              r, q, eta, theta, sigma        (sigma > 0)
    rough-42                  r, q, eta, theta, sigma, a, b  (sigma > 0)
    rough-alpha-hyper         r, q, eta, theta, a, sigma     (theta, a, sigma > 0)
    rough-sabr                sigma, beta                    (sigma > 0, 0 <= beta < 1)
    rough-heston-sabr         r, q, eta, theta, sigma, beta  (eta, theta, sigma > 0, 0 <= beta < 1)
    rough-quadratic-slv       r, q, eta, theta, sigma, a, b, c
                              (a, eta, theta, sigma > 0 and 4ac > b^2)
    ========================  ==========================================
    """
    if name == "rough-heston":
        p = _require(params, name, ("r", "q", "eta", "theta", "sigma"))
        _check(p["sigma"] > 0, name, "sigma > 0")
        return _cir_log_model(name, p, phi=_sqrt_phi())

    if name == "rough-42":
        p = _require(params, name, ("r", "q", "eta", "theta", "sigma", "a", "b"))
        _check(p["sigma"] > 0, name, "sigma > 0")
        a, b = p["a"], p["b"]
        phi = (
            lambda v: a * np.sqrt(v) + b / np.sqrt(v),
            lambda v: 0.5 * a / np.sqrt(v) - 0.5 * b * v ** (-1.5),
        )
        spec = _cir_log_model(name, p, phi=phi)
        # f = int (a sqrt(u) + b/sqrt(u)) / (sigma sqrt(u)) du = (a v + b ln v)/sigma
        return _replace_f(spec, lambda v: (a * v + b * np.log(v)) / p["sigma"])

    if name == "rough-alpha-hyper":
        p = _require(params, name, ("r", "q", "eta", "theta", "a", "sigma"))
        _check(p["theta"] > 0, name, "theta > 0")
        _check(p["a"] > 0, name, "a > 0")
        _check(p["sigma"] > 0, name, "sigma > 0")
        r, q, eta, th, a, sg = (p[k] for k in ("r", "q", "eta", "theta", "a", "sigma"))
        return ModelSpec(
            name=name, params=p,
            mu=lambda s, v: (r - q) * s,
            nu=lambda s: s, nu_prime=lambda s: np.ones_like(np.asarray(s, float)),
            phi=np.exp, phi_prime=np.exp,
            b=lambda v: eta - th * np.exp(a * v),
            sigma=lambda v: np.full_like(np.asarray(v, float), sg),
            sigma_prime=lambda v: np.zeros_like(np.asarray(v, float)),
            g=np.log, g_inverse_raw=np.exp,
            f_primitive=lambda v: np.exp(v) / sg,
            asset_domain="positive", g_range=(-np.inf, np.inf),
            variance_domain="real",
        )

    if name == "rough-sabr":
        p = _require(params, name, ("sigma", "beta"))
        _check(p["sigma"] > 0, name, "sigma > 0")
        _check(0.0 <= p["beta"] < 1.0, name, "beta in [0, 1)")
        sg, beta = p["sigma"], p["beta"]
        return ModelSpec(
            name=name, params=p,
            mu=lambda s, v: np.zeros_like(np.asarray(s, float) * np.asarray(v, float)),
            nu=lambda s: s**beta,
            nu_prime=lambda s: beta * s ** (beta - 1.0),
            phi=lambda v: np.asarray(v, float),
            phi_prime=lambda v: np.ones_like(np.asarray(v, float)),
            b=lambda v: np.zeros_like(np.asarray(v, float)),
            sigma=lambda v: sg * np.asarray(v, float),
            sigma_prime=lambda v: np.full_like(np.asarray(v, float), sg),
            g=lambda s: s ** (1.0 - beta) / (1.0 - beta),
            g_inverse_raw=lambda y: ((1.0 - beta) * y) ** (1.0 / (1.0 - beta)),
            f_primitive=lambda v: np.asarray(v, float) / sg,
            asset_domain="positive", g_range=(0.0, np.inf),
            variance_domain="real",
        )

    if name == "rough-heston-sabr":
        p = _require(params, name, ("r", "q", "eta", "theta", "sigma", "beta"))
        _check(p["eta"] > 0, name, "eta > 0")
        _check(p["theta"] > 0, name, "theta > 0")
        _check(p["sigma"] > 0, name, "sigma > 0")
        _check(0.0 <= p["beta"] < 1.0, name, "beta in [0, 1)")
        r, q, eta, th, sg, beta = (
            p[k] for k in ("r", "q", "eta", "theta", "sigma", "beta")
        )
        sqrt_phi, sqrt_phi_p = _sqrt_phi()
        return ModelSpec(
            name=name, params=p,
            mu=lambda s, v: (r - q) * s,
            nu=lambda s: s**beta,
            nu_prime=lambda s: beta * s ** (beta - 1.0),
            phi=sqrt_phi, phi_prime=sqrt_phi_p,
            b=lambda v: eta * (th - v),
            sigma=lambda v: sg * np.sqrt(v),
            sigma_prime=lambda v: 0.5 * sg / np.sqrt(v),
            g=lambda s: s ** (1.0 - beta) / (1.0 - beta),
            g_inverse_raw=lambda y: ((1.0 - beta) * y) ** (1.0 / (1.0 - beta)),
            f_primitive=lambda v: np.asarray(v, float) / sg,
            asset_domain="positive", g_range=(0.0, np.inf),
        )

    if name == "rough-quadratic-slv":
        p = _require(params, name, ("r", "q", "eta", "theta", "sigma", "a", "b", "c"))
        _check(p["a"] > 0, name, "a > 0")
        _check(p["eta"] > 0, name, "eta > 0")
        _check(p["theta"] > 0, name, "theta > 0")
        _check(p["sigma"] > 0, name, "sigma > 0")
        _check(4 * p["a"] * p["c"] > p["b"] ** 2, name, "4ac > b^2")
        r, q, eta, th, sg, a, b, c = (
            p[k] for k in ("r", "q", "eta", "theta", "sigma", "a", "b", "c")
        )
        disc = np.sqrt(4 * a * c - b * b)
        sqrt_phi, sqrt_phi_p = _sqrt_phi()
        g = lambda s: 2.0 * np.arctan((2 * a * s + b) / disc) / disc
        return ModelSpec(
            name=name, params=p,
            mu=lambda s, v: (r - q) * s,
            nu=lambda s: a * s * s + b * s + c,
            nu_prime=lambda s: 2 * a * s + b,
            phi=sqrt_phi, phi_prime=sqrt_phi_p,
            b=lambda v: eta * (th - v),
            sigma=lambda v: sg * np.sqrt(v),
            sigma_prime=lambda v: 0.5 * sg / np.sqrt(v),
            g=g,
            g_inverse_raw=lambda y: (disc * np.tan(0.5 * disc * y) - b) / (2 * a),
            f_primitive=lambda v: np.asarray(v, float) / sg,
            asset_domain="real", g_range=(-np.pi / disc, np.pi / disc),
        )

    raise ParameterError(f"unknown model name {name!r}; choose one of {MODEL_NAMES}")


def _sqrt_phi():
    return (lambda v: np.sqrt(v), lambda v: 0.5 / np.sqrt(v))


def _cir_log_model(name, p, phi) -> ModelSpec:
    """Common structure of the log-asset families with CIR-type variance."""
    r, q, eta, th, sg = (p[k] for k in ("r", "q", "eta", "theta", "sigma"))
    phi_fn, phi_p = phi
    return ModelSpec(
        name=name, params=p,
        mu=lambda s, v: (r - q) * s,
        nu=lambda s: np.asarray(s, float),
        nu_prime=lambda s: np.ones_like(np.asarray(s, float)),
        phi=phi_fn, phi_prime=phi_p,
        b=lambda v: eta * (th - v),
        sigma=lambda v: sg * np.sqrt(v),
        sigma_prime=lambda v: 0.5 * sg / np.sqrt(v),
        g=np.log, g_inverse_raw=np.exp,
        f_primitive=lambda v: np.asarray(v, float) / sg,
        asset_domain="positive", g_range=(-np.inf, np.inf),
    )


def _replace_f(spec: ModelSpec, f_primitive) -> ModelSpec:
    from dataclasses import replace

    return replace(spec, f_primitive=f_primitive)


# --------------------------------------------------------------------------
# transforms and the auxiliary drift
# --------------------------------------------------------------------------

def chain_scale(kernel: KernelSpec, formulation: str = "stable") -> float:
    """Scale constant c of the variance chain.

    "markov" uses c = Keps (the shifted-kernel Markovian system exactly as
    derived); "stable" uses c = 1, the stabilized chain whose dynamics stay
    bounded as eps -> 0.  The same c must be used consistently in the variance
    generator, in transform_f and in drift_theta.
    """
    if formulation == "markov":
        return kernel.k_eps
    if formulation == "stable":
        return 1.0
    raise ParameterError(f"unknown formulation {formulation!r}")


def transform_f(v, model: ModelSpec, kernel: KernelSpec, formulation: str = "stable"):
    """Variance transform f(v) = int phi/(c sigma), c = chain scale."""
    return model.f_primitive(v) / chain_scale(kernel, formulation)


def drift_theta(
    x,
    v,
    model: ModelSpec,
    market: MarketParams,
    kernel: KernelSpec,
    formulation: str = "stable",
    variant: str = "lemma",
):
    """Drift of the auxiliary state X = g(S) - rho f(V) at (x, v).

    With c the chain scale, s = g^{-1}(x + rho f(v)) and the variance-chain
    drift d(v) = (v - V0) Rhat + c b(v):

        theta = mu(s,v)/nu(s) - nu'(s) phi(v)^2 / 2
                - (rho/2) c (sigma phi' - sigma' phi)(v)      [variant="lemma"]
                - rho d(v) phi(v) / (c sigma(v))

    ``variant="discretized"`` replaces the middle term by
    +(rho/2)(sigma phi' - sigma' phi)(v) with no scale factor, mirroring the
    alternative printed form; the two coincide for every family in which
    sigma phi' == sigma' phi (all but the 4/2 and alpha-hypergeometric).
    """
    c = chain_scale(kernel, formulation)
    _, _, rhat = laplace_constants(kernel)
    rho = market.rho
    f_v = model.f_primitive(v) / c
    s = model.g_inverse(np.asarray(x, float) + rho * f_v)
    phi_v = model.phi(v)
    sig_v = model.sigma(v)
    wron = model.sigma(v) * model.phi_prime(v) - model.sigma_prime(v) * phi_v
    if variant == "lemma":
        mid = -0.5 * rho * c * wron
    elif variant == "discretized":
        mid = +0.5 * rho * wron
    else:
        raise ParameterError(f"unknown theta variant {variant!r}")
    d_v = (np.asarray(v, float) - market.v0) * rhat + c * model.b(v)
    out = (
        model.mu(s, v) / model.nu(s)
        - 0.5 * model.nu_prime(s) * phi_v**2
        + mid
        - rho * d_v * phi_v / (c * sig_v)
    )
    return float(out) if np.isscalar(x) and np.isscalar(v) else out
