"""Command-line interface: price, table, compare-mc and selfcheck workflows.

Configuration is a single JSON document; every block mirrors one module's
parameters and unknown keys are rejected.  ``--set path=value`` overrides
individual entries (dotted paths, JSON-parsed values) and is recorded in the
output provenance.  All numeric output is printed with 17 significant digits.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 selfcheck failure.
"""

from __future__ import annotations

import argparse
import copy
import io
import json
import os
import sys

import numpy as np

from . import ctmc, matexp, presets
from .errors import ConfigError, ParameterError, RoughChainError
from .kernel import KernelSpec, laplace_constants, laplace_quadrature, perturbed_kernel
from .mc import McConfig, estimate_l2_rate, mc_price
from .models import MarketParams, make_model
from .pricing import (
    OptionSpec,
    price_bermudan,
    price_european_coupled,
    price_fast,
)

__all__ = ["default_config", "parse_config", "apply_overrides", "run", "main"]

_ENV_CONFIG = "ROUGHCHAIN_CONFIG"

_SCHEMA = {
    "model": {"name", "params"},
    "market": {"s0", "v0", "rho"},
    "kernel": {"hurst", "eps"},
    "numerics": {
        "n_x", "m_v", "method", "formulation", "theta_variant", "boundary",
        "rate_policy", "grid_style", "n_slices", "v_bounds", "x_bounds",
        "bermudan_dates",
    },
    "option": {"kind", "strike", "maturity", "rate", "barrier"},
    "mc": {"paths", "steps", "seed", "antithetic"},
}


def default_config() -> dict:
    """Shipped default: rough Heston, shared parameter set, fast method."""
    return {
        "model": {"name": "rough-heston", "params": presets.model_params("rough-heston")},
        "market": dict(presets.BASE_MARKET),
        "kernel": dict(presets.BASE_KERNEL),
        "numerics": {
            "n_x": 100, "m_v": 100, "method": "fast",
            "formulation": "stable", "theta_variant": "lemma",
            "boundary": "drift", "rate_policy": "upwind",
            "grid_style": "piecewise-uniform", "n_slices": 48,
            "v_bounds": None, "x_bounds": None, "bermudan_dates": None,
        },
        "option": dict(presets.BASE_OPTION, barrier=None),
        "mc": {"paths": 100000, "steps": 256, "seed": 20240, "antithetic": False},
    }


def parse_config(doc: dict) -> dict:
    """Validate a config document against the schema; returns a deep copy."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    cfg = default_config()
    for block, entries in doc.items():
        if block not in _SCHEMA:
            raise ConfigError(f"unknown config block {block!r}")
        if not isinstance(entries, dict):
            raise ConfigError(f"config block {block!r} must be an object")
        for key in entries:
            if key not in _SCHEMA[block]:
                raise ConfigError(f"unknown key {block}.{key}")
        cfg[block].update(copy.deepcopy(entries))
    return cfg


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply --set path=value entries (values parsed as JSON, else strings)."""
    out = copy.deepcopy(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects path=value, got {item!r}")
        path, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parts = path.split(".")
        node = out
        for p in parts[:-1]:
            if not isinstance(node, dict) or p not in node:
                raise ConfigError(f"unknown override path {path!r}")
            node = node[p]
        if parts[-1] not in node:
            raise ConfigError(f"unknown override path {path!r}")
        node[parts[-1]] = value
    return parse_config(out)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _build_system(cfg: dict) -> ctmc.GeneratorSet:
    model = make_model(cfg["model"]["name"], cfg["model"]["params"])
    market = MarketParams(**cfg["market"])
    kernel = KernelSpec(**cfg["kernel"])
    num = cfg["numerics"]
    return ctmc.assemble(
        model, market, kernel,
        n=num["n_x"], m=num["m_v"], style=num["grid_style"],
        v_bounds=tuple(num["v_bounds"]) if num["v_bounds"] else None,
        x_bounds=tuple(num["x_bounds"]) if num["x_bounds"] else None,
        formulation=num["formulation"], theta_variant=num["theta_variant"],
        boundary=num["boundary"], rate_policy=num["rate_policy"],
    )


def _option_from(cfg: dict) -> OptionSpec:
    opt = cfg["option"]
    barrier = tuple(opt["barrier"]) if opt.get("barrier") else None
    return OptionSpec(
        kind=opt["kind"], strike=opt["strike"], maturity=opt["maturity"],
        rate=opt.get("rate", 0.0), barrier=barrier,
        bermudan_dates=cfg["numerics"].get("bermudan_dates"),
    )


def _price_once(cfg: dict):
    gens = _build_system(cfg)
    option = _option_from(cfg)
    num = cfg["numerics"]
    if option.bermudan_dates:
        return price_bermudan(option, gens)
    if num["method"] == "coupled":
        return price_european_coupled(option, gens)
    if num["method"] == "fast":
        return price_fast(option, gens, n_slices=num["n_slices"])
    raise ConfigError(f"unknown numerics.method {num['method']!r}")


def _cmd_price(cfg: dict, provenance: dict, out) -> int:
    result = _price_once(cfg)
    doc = {
        "price": float(result.price),
        "price_repr": _fmt(result.price),
        "diagnostics": result.diagnostics,
        "provenance": provenance,
    }
    json.dump(doc, out, indent=2, default=float)
    out.write("\n")
    return 0


def _option_flavor(cfg) -> str:
    if cfg["numerics"].get("bermudan_dates"):
        return "american"
    if cfg["option"].get("barrier"):
        return "barrier"
    return "european"


def _cmd_table(cfg: dict, provenance: dict, out, sweep: str) -> int:
    name = cfg["model"]["name"]
    flavor = _option_flavor(cfg)
    bench = presets.REFERENCE_PRICES.get(name, {}).get(flavor)
    rows = []
    if sweep == "eps":
        header = "eps,price,benchmark,rel_error"
        for eps in (1e-4, 1e-5, 1e-6, 1e-7, 1e-8):
            c = copy.deepcopy(cfg)
            c["kernel"]["eps"] = eps
            price = _price_once(c).price
            rel = abs(price - bench) / bench if bench else float("nan")
            rows.append(f"{_fmt(eps)},{_fmt(price)},{_fmt(bench or float('nan'))},{_fmt(rel)}")
    elif sweep == "grid":
        header = "n,m,price,benchmark,rel_error"
        for size in (20, 40, 60, 80, 100):
            c = copy.deepcopy(cfg)
            c["numerics"]["n_x"] = c["numerics"]["m_v"] = size
            price = _price_once(c).price
            rel = abs(price - bench) / bench if bench else float("nan")
            rows.append(f"{size},{size},{_fmt(price)},{_fmt(bench or float('nan'))},{_fmt(rel)}")
    else:
        raise ConfigError(f"unknown sweep {sweep!r} (use 'eps' or 'grid')")
    out.write(f"# model={name} option={flavor} overrides={provenance['overrides']}\n")
    out.write(header + "\n")
    out.write("\n".join(rows) + "\n")
    return 0


def _cmd_compare_mc(cfg: dict, provenance: dict, out) -> int:
    result = _price_once(cfg)
    model = make_model(cfg["model"]["name"], cfg["model"]["params"])
    market = MarketParams(**cfg["market"])
    kernel = KernelSpec(**cfg["kernel"])
    mcc = McConfig(**cfg["mc"])
    option = _option_from(cfg)
    estimate, stderr = mc_price(option, model, market, kernel, mcc)
    z = (result.price - estimate) / stderr if stderr > 0 else float("inf")
    doc = {
        "ctmc_price": float(result.price),
        "mc_estimate": float(estimate),
        "mc_stderr": float(stderr),
        "z_score": float(z),
        "paths": mcc.paths,
        "steps": mcc.steps,
        "seed": mcc.seed,
        "provenance": provenance,
    }
    json.dump(doc, out, indent=2, default=float)
    out.write("\n")
    return 0


def _selfcheck_cases():
    """(name, callable) pairs; each raises on failure."""
    def kernel_identities():
        for h in (0.12, 0.3):
            for eps in (1e-2, 1e-4):
                spec = KernelSpec(hurst=h, eps=eps)
                _, r, rhat = laplace_constants(spec)
                r_q = laplace_quadrature("R", spec, tol=1e-10)
                num_q = laplace_quadrature("Rhat-numerator", spec, tol=1e-10)
                assert abs(r - r_q) <= 1e-8 * abs(r_q)
                assert abs(rhat + num_q / r_q) <= 1e-8 * abs(rhat)
                k_rep = laplace_quadrature("kernel", spec, tol=1e-12, t=1.0, s=0.5)
                k_cl = perturbed_kernel(1.0, 0.5, spec)
                assert abs(k_rep - k_cl) <= 1e-8 * k_cl

    def generator_validity():
        cfg = default_config()
        cfg["numerics"]["n_x"] = cfg["numerics"]["m_v"] = 50
        gens = _build_system(cfg)
        for g in (gens.q, *gens.lambdas):
            rep = ctmc.validate_generator(g)
            assert rep["max_abs_row_sum"] <= 1e-12 * max(1.0, rep["nu"])
            assert rep["min_off_diagonal"] >= 0.0
        # first moment is preserved by every interior row, upwinded or not
        v = gens.vgrid.nodes
        drift = gens.q @ v
        from .models import chain_scale

        _, _, rhat = laplace_constants(gens.kernel)
        c = chain_scale(gens.kernel, gens.formulation)
        want = (v - gens.market.v0) * rhat + c * gens.model.b(v)
        err = np.abs(drift[1:-1] - want[1:-1])
        assert err.max() <= 1e-9 * max(1.0, np.abs(want).max())

    def expm_properties():
        rng = np.random.default_rng(7)
        a = rng.random((40, 40))
        np.fill_diagonal(a, 0.0)
        gen = a - np.diag(a.sum(axis=1))
        ones = np.ones(40)
        act = matexp.expm_action(gen, ones, 0.7, tol=1e-12)
        assert np.abs(act - 1.0).max() <= 1e-10
        dense = matexp.expm_dense(gen, 0.7)
        w = rng.random(40)
        assert np.abs(dense @ w - matexp.expm_action(gen, w, 0.7, tol=1e-13)).max() <= 1e-10
        two = matexp.expm_action(gen, matexp.expm_action(gen, w, 0.3), 0.4)
        assert np.abs(two - matexp.expm_action(gen, w, 0.7)).max() <= 1e-9

    def pricing_identities():
        cfg = default_config()
        cfg["numerics"]["n_x"] = cfg["numerics"]["m_v"] = 30
        gens = _build_system(cfg)
        cfg_fwd = default_config()
        cfg_fwd["numerics"]["n_x"] = cfg_fwd["numerics"]["m_v"] = 50
        gens_fwd = _build_system(cfg_fwd)
        option = _option_from(cfg)
        eu = price_european_coupled(option, gens).price
        berm = price_bermudan(
            OptionSpec(option.kind, option.strike, option.maturity,
                       option.rate, bermudan_dates=1), gens).price
        assert abs(eu - berm) <= 1e-12 * max(1.0, eu)
        from .pricing import payoff_vector
        wide = OptionSpec(option.kind, option.strike, option.maturity,
                          option.rate, barrier=(0.0, 1e12))
        assert np.array_equal(payoff_vector(option, gens), payoff_vector(wide, gens))
        forward = price_fast(
            OptionSpec("call", 0.0, option.maturity, 0.0), gens_fwd).price
        assert abs(forward - gens_fwd.market.s0) <= 0.02 * gens_fwd.market.s0

    return [
        ("kernel Laplace identities", kernel_identities),
        ("generator validity", generator_validity),
        ("matrix exponential properties", expm_properties),
        ("pricing identities", pricing_identities),
    ]


def _cmd_selfcheck(out) -> int:
    failures = 0
    for name, fn in _selfcheck_cases():
        try:
            fn()
            out.write(f"[PASS] {name}\n")
        except Exception as exc:  # report and continue
            failures += 1
            out.write(f"[FAIL] {name}: {exc}\n")
    out.write(f"selfcheck: {'ok' if failures == 0 else f'{failures} failure(s)'}\n")
    return 0 if failures == 0 else 4


def _limit_threads(k: int | None):
    if k is None:
        return
    os.environ.setdefault("OMP_NUM_THREADS", str(k))
    os.environ.setdefault("OPENBLAS_NUM_THREADS", str(k))
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=k)
    except Exception:
        pass


def run(command: str, config_path: str | None, overrides: list[str],
        out=None, sweep: str = "eps", threads: int | None = None) -> int:
    """Execute one workflow; returns the process exit code."""
    out = out or sys.stdout
    _limit_threads(threads)
    try:
        if config_path is None:
            config_path = os.environ.get(_ENV_CONFIG)
        if config_path:
            with open(config_path) as fh:
                doc = json.load(fh)
        else:
            doc = {}
        cfg = parse_config(doc)
        cfg = apply_overrides(cfg, overrides)
        provenance = {
            "config_path": config_path,
            "overrides": list(overrides),
            "config": cfg,
        }
    except (OSError, json.JSONDecodeError, ConfigError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if command == "price":
            return _cmd_price(cfg, provenance, out)
        if command == "table":
            return _cmd_table(cfg, provenance, out, sweep)
        if command == "compare-mc":
            return _cmd_compare_mc(cfg, provenance, out)
        if command == "selfcheck":
            return _cmd_selfcheck(out)
        print(f"unknown command {command!r}", file=sys.stderr)
        return 2
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RoughChainError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="roughchain",
        description="Markov-chain pricing engine for rough stochastic local volatility models",
    )
    parser.add_argument("command", choices=["price", "table", "compare-mc", "selfcheck"])
    parser.add_argument("--config", help=f"JSON config path (default ${_ENV_CONFIG} or built-in)")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="PATH=VALUE", help="override a config entry (repeatable)")
    parser.add_argument("--sweep", choices=["eps", "grid"], default="eps",
                        help="table sweep dimension")
    parser.add_argument("--threads", type=int, default=None, help="BLAS thread budget")
    parser.add_argument("--out", help="write output to this file instead of stdout")
    args = parser.parse_args(argv)

    if args.out:
        buf = io.StringIO()
        code = run(args.command, args.config, args.overrides, buf, args.sweep, args.threads)
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
        return code
    return run(args.command, args.config, args.overrides, sys.stdout, args.sweep, args.threads)


if __name__ == "__main__":
    raise SystemExit(main())
