"""Pushing weighted expansions through pointwise functions.

Given expansions for independent inputs, the embedding of f(X, Y) is
estimated on the product grid of expansion points: every combination of
input points is mapped through f and given the product of the input
weights (normalized by the total mass). A paired variant maps aligned
samples without forming the grid, and a quantization helper turns a
weighted expansion back into an unweighted sample by repetition.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DegenerateNormalizer,
    DimensionMismatch,
    DomainError,
    InputError,
    NonPositiveWeight,
    SizeCapExceeded,
    WeightsNotNormalized,
)
from .embedding import WeightedExpansion
from .kernels import KernelSpec, as_points

DEFAULT_SIZE_CAP = 1_000_000

# Total input mass with absolute value at or below this cannot be
# normalized by.
_MASS_FLOOR = 1e-8


@dataclass(frozen=True)
class PointFunction:
    """A vectorized pointwise map with an optional domain guard.

    ``fn`` receives ``arity`` arrays of shape (n, d) and returns the
    mapped points, shape (n, d'). ``domain_guard`` receives the same
    arrays and returns a boolean mask marking VALID rows; rows the guard
    rejects abort the operation with :class:`DomainError` naming the
    first offending grid index.
    """

    name: str
    arity: int
    fn: Callable[..., np.ndarray]
    domain_guard: Callable[..., np.ndarray] | None = None


def _tile_for_grid(arrays: list[np.ndarray], sizes: list[int]) -> list[np.ndarray]:
    """Repeat/tile each (n_k, d) array so row r of every output holds the
    r-th combination in row-major order (last index fastest)."""
    out = []
    for k, arr in enumerate(arrays):
        inner = int(np.prod(sizes[k + 1 :], dtype=np.int64)) if k + 1 < len(sizes) else 1
        outer = int(np.prod(sizes[:k], dtype=np.int64)) if k > 0 else 1
        tiled = np.repeat(arr, inner, axis=0)
        if outer > 1:
            reps = (outer, 1) if tiled.ndim == 2 else outer
            tiled = np.tile(tiled, reps)
        out.append(tiled)
    return out


def _first_bad_index(valid: np.ndarray, sizes: list[int]) -> tuple:
    flat = int(np.flatnonzero(~valid)[0])
    return tuple(int(i) for i in np.unravel_index(flat, sizes))


def apply_nary(means: list[WeightedExpansion], g: PointFunction,
               out_spec: KernelSpec,
               size_cap: int = DEFAULT_SIZE_CAP) -> WeightedExpansion:
    """Push p independent expansions through a p-ary function.

    The output has one term per element of the product grid, laid out in
    row-major order (index over the last input varies fastest), with
    weight prod_k w_k / (prod_k sum(w_k)). The grid size is capped at
    ``size_cap`` and exceeding it raises :class:`SizeCapExceeded` before
    any allocation.
    """
    if not isinstance(g, PointFunction):
        raise InputError(f"g must be a PointFunction, got {type(g).__name__}")
    p = len(means)
    if p == 0:
        raise InputError("apply_nary needs at least one input expansion")
    if g.arity != p:
        raise InputError(f"{g.name} has arity {g.arity} but got {p} inputs")
    for mu in means:
        if not isinstance(mu, WeightedExpansion):
            raise InputError("inputs must be WeightedExpansion values")

    sizes = [mu.size for mu in means]
    total = 1
    for s in sizes:
        total *= s
        if total > size_cap:
            raise SizeCapExceeded(
                f"product grid of sizes {tuple(sizes)} exceeds cap {size_cap}"
            )

    masses = [float(np.sum(mu.weights)) for mu in means]
    norm = math.prod(masses)
    if abs(norm) <= _MASS_FLOOR:
        raise DegenerateNormalizer(
            f"total weight mass {norm!r} is too close to zero to normalize by"
        )

    args = _tile_for_grid([mu.points for mu in means], sizes)
    if g.domain_guard is not None:
        valid = np.asarray(g.domain_guard(*args), dtype=bool).reshape(-1)
        if not np.all(valid):
            raise DomainError(g.name, _first_bad_index(valid, sizes))
    Z = as_points(g.fn(*args))
    if Z.shape[0] != total:
        raise InputError(
            f"{g.name} returned {Z.shape[0]} rows for {total} grid combinations"
        )

    wparts = _tile_for_grid([mu.weights for mu in means], sizes)
    w = wparts[0].copy()
    for part in wparts[1:]:
        w *= part
    w /= norm
    return WeightedExpansion(Z, w, out_spec)


def apply_binary(mu_x: WeightedExpansion, mu_y: WeightedExpansion,
                 f: PointFunction, out_spec: KernelSpec,
                 size_cap: int = DEFAULT_SIZE_CAP) -> WeightedExpansion:
    """Binary special case of :func:`apply_nary` (same grid semantics)."""
    if f.arity != 2:
        raise InputError(f"apply_binary needs a binary function, {f.name} has arity {f.arity}")
    return apply_nary([mu_x, mu_y], f, out_spec, size_cap=size_cap)


def apply_paired(X, Y, f: PointFunction, out_spec: KernelSpec) -> WeightedExpansion:
    """Map aligned samples through f without forming the product grid.

    Produces the uniform expansion over f(X[i], Y[i]). This estimates
    the embedding of f under the JOINT law of the aligned pairs, which
    for dependent inputs differs from the independent-product estimate
    of :func:`apply_binary`.
    """
    if f.arity != 2:
        raise InputError(f"apply_paired needs a binary function, {f.name} has arity {f.arity}")
    Xp = as_points(X)
    Yp = as_points(Y)
    if Xp.shape[0] != Yp.shape[0]:
        raise DimensionMismatch(
            f"paired samples differ in length: {Xp.shape[0]} vs {Yp.shape[0]}"
        )
    if Xp.shape[0] == 0:
        raise InputError("apply_paired needs a nonempty sample")
    if f.domain_guard is not None:
        valid = np.asarray(f.domain_guard(Xp, Yp), dtype=bool).reshape(-1)
        if not np.all(valid):
            i = int(np.flatnonzero(~valid)[0])
            raise DomainError(f.name, (i,))
    Z = as_points(f.fn(Xp, Yp))
    m = Z.shape[0]
    return WeightedExpansion(Z, np.full(m, 1.0 / m), out_spec)


def quantize_to_sample(mu: WeightedExpansion, m: int) -> np.ndarray:
    """Expand a weighted expansion into an unweighted sample.

    Point i is repeated floor(m * w_i) times. Weights must be strictly
    positive and sum to one (within 1e-8). The result can be shorter
    than m; if every multiplicity rounds down to zero the returned
    sample is empty and a warning is issued.
    """
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise InputError(f"quantize_to_sample needs integer m >= 1, got {m!r}")
    w = mu.weights
    if np.any(w <= 0.0):
        raise NonPositiveWeight("quantization needs strictly positive weights")
    s = float(np.sum(w))
    if abs(s - 1.0) > 1e-8:
        raise WeightsNotNormalized(f"weights sum to {s!r}, expected 1")
    counts = np.floor(m * w).astype(np.int64)
    if not counts.any():
        warnings.warn("quantize_to_sample produced an empty sample; increase m",
                      RuntimeWarning, stacklevel=2)
        return np.empty((0, mu.dim), dtype=np.float64)
    return np.repeat(mu.points, counts, axis=0)


# ---------------------------------------------------------------------------
# builtin pointwise functions


def _all_rows(pred: np.ndarray) -> np.ndarray:
    return np.asarray(pred, dtype=bool).all(axis=1)


def _pow_guard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Real powers need a positive base; integer exponents are fine for
    # any nonzero base (and any base when the exponent is nonnegative).
    base_ok = _all_rows(a > 0.0)
    int_exp = _all_rows(b == np.floor(b))
    safe_base = _all_rows((a != 0.0) | (b >= 0.0))
    return base_ok | (int_exp & safe_base)


BUILTIN_FUNCTIONS: dict[str, PointFunction] = {
    "add": PointFunction("add", 2, lambda a, b: a + b),
    "sub": PointFunction("sub", 2, lambda a, b: a - b),
    "mul": PointFunction("mul", 2, lambda a, b: a * b),
    "div": PointFunction("div", 2, lambda a, b: a / b,
                         domain_guard=lambda a, b: _all_rows(b != 0.0)),
    "pow": PointFunction("pow", 2, lambda a, b: np.power(a, b),
                         domain_guard=_pow_guard),
    "neg": PointFunction("neg", 1, lambda a: -a),
    "abs": PointFunction("abs", 1, np.abs),
    "exp": PointFunction("exp", 1, np.exp),
    "log": PointFunction("log", 1, np.log,
                         domain_guard=lambda a: _all_rows(a > 0.0)),
    "square": PointFunction("square", 1, lambda a: a * a),
}
