"""Generator matrices: variance chain Q, regime chains Lambda_l, coupled block.

Interior rows of every chain solve the local moment-matching system

    [ 1     1     1   ] [q_{i,i-1}]   [    0     ]
    [-h_i   0   h_{i+1}] [q_{i,i}  ] = [ drift_i  ]
    [h_i^2  0  h_{i+1}^2] [q_{i,i+1}]   [ diff2_i  ]

whose closed-form solution is the nonuniform central difference.  When a row
is drift-dominated (|drift| h > diff2) the central solution has a negative
off-diagonal; the "upwind" policy repairs only those rows by the one-sided
split that preserves the first moment exactly (at the cost of inflating the
second by |drift| h), while the "error" policy raises.

Boundary rows: "drift" keeps only the outflow drift (the state leaves a
truncation wall at its physical drift rate, no one-sided diffusion), "absorb"
zeroes the rows entirely.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import GeneratorError
from .grids import Grid, build_variance_grid, build_x_grid
from .kernel import KernelSpec, laplace_constants
from .models import MarketParams, ModelSpec, chain_scale, drift_theta, transform_f

__all__ = [
    "GeneratorSet",
    "tridiagonal_generator",
    "build_Q",
    "build_Lambda",
    "build_lambda_family",
    "build_coupled",
    "validate_generator",
    "assemble",
    "dump_triplets",
]


def tridiagonal_generator(
    grid: Grid,
    drift: np.ndarray,
    diff2: np.ndarray,
    boundary: str = "drift",
    rate_policy: str = "error",
) -> np.ndarray:
    """Moment-matched tridiagonal rate matrix on the given grid."""
    nodes = grid.nodes
    n = len(nodes)
    drift = np.broadcast_to(np.asarray(drift, float), (n,))
    diff2 = np.broadcast_to(np.asarray(diff2, float), (n,))
    if np.any(diff2 < 0):
        raise GeneratorError("negative squared diffusion input")
    h = grid.spacings
    hm, hp = h[:-1], h[1:]           # spacings left/right of interior nodes
    d, s2 = drift[1:-1], diff2[1:-1]

    lo = (s2 - d * hp) / (hm * (hm + hp))
    up = (s2 + d * hm) / (hp * (hm + hp))
    bad = (lo < 0) | (up < 0)
    if np.any(bad):
        if rate_policy == "error":
            i = 1 + int(np.argmax(bad))
            need = abs(d[i - 1]) * (nodes[-1] - nodes[0]) / max(s2[i - 1], 1e-300)
            raise GeneratorError(
                f"negative transition rate at node {i} (state {nodes[i]:.6g}): "
                f"|drift| h exceeds diffusion; roughly M >= {int(need) + 2} needed, "
                "or use rate_policy='upwind'"
            )
        if rate_policy != "upwind":
            raise GeneratorError(f"unknown rate policy {rate_policy!r}")
        lo = np.where(bad, s2 / (hm * (hm + hp)) + np.maximum(-d, 0.0) / hm, lo)
        up = np.where(bad, s2 / (hp * (hm + hp)) + np.maximum(d, 0.0) / hp, up)

    gen = np.zeros((n, n))
    idx = np.arange(1, n - 1)
    gen[idx, idx - 1] = lo
    gen[idx, idx + 1] = up
    gen[idx, idx] = -(lo + up)

    if boundary == "drift":
        gen[0, 1] = max(drift[0], 0.0) / h[0]
        gen[0, 0] = -gen[0, 1]
        gen[-1, -2] = max(-drift[-1], 0.0) / h[-1]
        gen[-1, -1] = -gen[-1, -2]
    elif boundary == "absorb":
        pass  # zero rows
    else:
        raise GeneratorError(f"unknown boundary treatment {boundary!r}")
    return gen


def build_Q(
    vgrid: Grid,
    model: ModelSpec,
    market: MarketParams,
    kernel: KernelSpec,
    formulation: str = "stable",
    boundary: str = "drift",
    rate_policy: str = "error",
) -> np.ndarray:
    """Variance-chain generator with drift (v-v0) Rhat + c b(v), diffusion (c sigma)^2."""
    c = chain_scale(kernel, formulation)
    _, _, rhat = laplace_constants(kernel)
    v = vgrid.nodes
    drift = (v - market.v0) * rhat + c * model.b(v)
    diff2 = (c * model.sigma(v)) ** 2
    return tridiagonal_generator(vgrid, drift, diff2, boundary, rate_policy)


def build_Lambda(
    xgrid: Grid,
    v_ell: float,
    model: ModelSpec,
    market: MarketParams,
    kernel: KernelSpec,
    formulation: str = "stable",
    boundary: str = "drift",
    rate_policy: str = "error",
    theta_variant: str = "lemma",
) -> np.ndarray:
    """Auxiliary-chain generator at frozen variance level v_ell."""
    th = drift_theta(
        xgrid.nodes, v_ell, model, market, kernel, formulation, theta_variant
    )
    diff2 = (1.0 - market.rho**2) * float(model.phi(v_ell)) ** 2
    return tridiagonal_generator(xgrid, th, diff2, boundary, rate_policy)


def build_lambda_family(xgrid, vgrid, model, market, kernel, **kw) -> np.ndarray:
    """All regime generators stacked as an (M, N, N) array."""
    return np.array(
        [build_Lambda(xgrid, v, model, market, kernel, **kw) for v in vgrid.nodes]
    )


def build_coupled(q: np.ndarray, lambdas: np.ndarray) -> sparse.csr_matrix:
    """NM x NM block rate matrix: block (l, j) = q_{lj} I_N, plus Lambda_l on the diagonal."""
    m = q.shape[0]
    n = lambdas.shape[-1]
    if q.shape != (m, m) or lambdas.shape != (m, n, n):
        raise GeneratorError(
            f"shape mismatch: Q {q.shape} vs Lambdas {np.shape(lambdas)}"
        )
    eye = sparse.identity(n, format="csr")
    coupled = sparse.kron(sparse.csr_matrix(q), eye, format="csr")
    coupled = coupled + sparse.block_diag(
        [sparse.csr_matrix(lam) for lam in lambdas], format="csr"
    )
    return coupled.tocsr()


def validate_generator(gen) -> dict:
    """Report row-sum defect, off-diagonal sign, and the uniformization bound."""
    if sparse.issparse(gen):
        g = gen.tocsr()
        row_sums = np.asarray(g.sum(axis=1)).ravel()
        diag = g.diagonal()
        off_min = (g - sparse.diags(diag)).min() if g.nnz else 0.0
    else:
        g = np.asarray(gen)
        row_sums = g.sum(axis=1)
        diag = np.diag(g)
        off = g - np.diag(diag)
        off_min = off.min()
    return {
        "shape": tuple(np.shape(gen)),
        "max_abs_row_sum": float(np.abs(row_sums).max()),
        "min_off_diagonal": float(off_min),
        "max_diag": float(diag.max()),
        "nu": float(np.abs(diag).max()),
    }


def dump_triplets(gen) -> str:
    """Sparse triplet text (row, col, value at 17 significant digits)."""
    coo = sparse.coo_matrix(gen)
    buf = io.StringIO()
    buf.write("row col value\n")
    order = np.lexsort((coo.col, coo.row))
    for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
        if v != 0.0:
            buf.write(f"{r} {c} {v:.17g}\n")
    return buf.getvalue()


@dataclass
class GeneratorSet:
    """Grids, generators and the build context of one chain system."""

    q: np.ndarray
    lambdas: np.ndarray
    vgrid: Grid
    xgrid: Grid
    model: ModelSpec
    market: MarketParams
    kernel: KernelSpec
    formulation: str = "stable"
    theta_variant: str = "lemma"
    boundary: str = "drift"
    rate_policy: str = "error"
    _coupled: sparse.csr_matrix | None = field(default=None, repr=False)
    _step_cache: dict = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return len(self.vgrid)

    @property
    def n(self) -> int:
        return len(self.xgrid)

    @property
    def coupled(self) -> sparse.csr_matrix:
        """NM x NM block generator, built on first use."""
        if self._coupled is None:
            self._coupled = build_coupled(self.q, self.lambdas)
        return self._coupled

    @cached_property
    def asset_states(self) -> np.ndarray:
        """Reconstructed asset levels s = g^{-1}(x_i + rho f(v_l)), shape (M, N)."""
        f_v = np.asarray(
            transform_f(self.vgrid.nodes, self.model, self.kernel, self.formulation)
        )
        args = self.xgrid.nodes[None, :] + self.market.rho * f_v[:, None]
        return self.model.g_inverse(args)

    @property
    def anchor_indices(self) -> tuple[int, int]:
        """(variance index l0, auxiliary index i0) of the initial state."""
        return self.vgrid.anchor_index, self.xgrid.anchor_index

    @property
    def flat_anchor(self) -> int:
        l0, i0 = self.anchor_indices
        return l0 * self.n + i0


def assemble(
    model: ModelSpec,
    market: MarketParams,
    kernel: KernelSpec,
    n: int = 100,
    m: int = 100,
    style: str = "piecewise-uniform",
    v_bounds: tuple[float, float] | None = None,
    x_bounds: tuple[float, float] | None = None,
    formulation: str = "stable",
    theta_variant: str = "lemma",
    boundary: str = "drift",
    rate_policy: str = "upwind",
) -> GeneratorSet:
    """Build grids and both generator layers for one model/market/kernel.

    Unlike the low-level builders this defaults to rate_policy="upwind":
    drift-dominated rows are expected near the variance floor for sqrt-type
    coefficient families at production grid sizes.
    """
    vgrid = build_variance_grid(m, market, model, style, v_bounds)
    xgrid = build_x_grid(
        n, market, model, kernel, style, x_bounds, formulation, vgrid
    )
    # coefficient positivity on the state rectangle
    v = vgrid.nodes
    if np.any(model.phi(v) <= 0) or np.any(model.sigma(v) <= 0):
        raise GeneratorError("phi or sigma not positive on the variance grid")
    q = build_Q(vgrid, model, market, kernel, formulation, boundary, rate_policy)
    lambdas = build_lambda_family(
        xgrid, vgrid, model, market, kernel,
        formulation=formulation, boundary=boundary,
        rate_policy=rate_policy, theta_variant=theta_variant,
    )
    gens = GeneratorSet(
        q=q, lambdas=lambdas, vgrid=vgrid, xgrid=xgrid,
        model=model, market=market, kernel=kernel,
        formulation=formulation, theta_variant=theta_variant,
        boundary=boundary, rate_policy=rate_policy,
    )
    if np.any(model.nu(gens.asset_states) <= 0):
        raise GeneratorError("nu not positive on the reconstructed asset states")
    return gens
