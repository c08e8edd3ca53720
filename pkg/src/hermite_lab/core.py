"""Parameter domain and singularity-aware quadrature for the product kernel.

Everything downstream evaluates time integrals of

    prod_p (s - x_p)_+^{H - 3/2}

over intervals [a, b].  On the valid parameter range the exponent H - 3/2
lies in (-1, -1/2), so the integrand has a single integrable blow-up at the
largest kernel point inside the interval.  The quadrature here integrates
from that point upward and removes the blow-up exactly with the substitution
u = (s - x_max)^{H - 1/2}; for a single factor the substitution gives the
closed-form antiderivative, for several factors the substituted integrand is
bounded and is handled by graded Gauss-Legendre panels with refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IntervalError, ParameterError, ToleranceError

__all__ = [
    "HermiteParams",
    "QuadratureConfig",
    "DEFAULT_QUADRATURE",
    "derived_exponents",
    "truncated_power",
    "kernel_time_integral",
]

_GL_ORDER = 8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


@dataclass(frozen=True)
class HermiteParams:
    """Rank and Hurst parameter, with the exponents every formula derives from.

    Requires rank N >= 1 and hurst H in (1 - 1/(2N), 1).  The self-similarity
    exponent ``gamma = N(H-1) + 1`` then lies in (1/2, 1) and the variance
    exponent ``2 * gamma`` in (1, 2).
    """

    rank: int
    hurst: float

    def __post_init__(self):
        if not isinstance(self.rank, (int, np.integer)) or isinstance(self.rank, bool):
            raise ParameterError(f"rank must be an integer, got {self.rank!r}")
        if self.rank < 1:
            raise ParameterError(f"rank must be >= 1, got {self.rank}")
        object.__setattr__(self, "rank", int(self.rank))
        object.__setattr__(self, "hurst", float(self.hurst))
        lo = 1.0 - 1.0 / (2 * self.rank)
        if not (lo < self.hurst < 1.0):
            raise ParameterError(
                f"hurst must lie in ({lo:.6g}, 1) for rank {self.rank}, got {self.hurst}"
            )
        if not (0.5 < self.gamma < 1.0):
            raise ParameterError(f"derived exponent {self.gamma} outside (1/2, 1)")

    @property
    def gamma(self) -> float:
        """Self-similarity exponent N(H-1) + 1."""
        return self.rank * (self.hurst - 1.0) + 1.0

    @property
    def var_exponent(self) -> float:
        """Exponent of the increment second moment, 2N(H-1) + 2."""
        return 2.0 * self.gamma

    @property
    def kernel_exponent(self) -> float:
        """Power H - 3/2 of each kernel factor, in (-1, -1/2)."""
        return self.hurst - 1.5

    @property
    def singular_power(self) -> float:
        """H - 1/2: the power left after integrating one kernel factor."""
        return self.hurst - 0.5


def derived_exponents(params: HermiteParams) -> tuple[float, float]:
    """Return (gamma, var_exponent) = (N(H-1)+1, 2N(H-1)+2)."""
    return params.gamma, params.var_exponent


def truncated_power(y, alpha):
    """``y**alpha`` where y > 0 and 0 otherwise (also 0 at y = 0).

    Accepts scalars or arrays; the zero branch avoids evaluating negative or
    zero bases at negative exponents.
    """
    y_arr = np.asarray(y, dtype=float)
    pos = y_arr > 0
    out = np.zeros_like(y_arr)
    if np.any(pos):
        out[pos] = y_arr[pos] ** alpha
    if np.isscalar(y) or y_arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class QuadratureConfig:
    """Knobs for the adaptive panel quadrature.

    base_panels     starting panel count, doubled on each refinement pass
    split_tol       points closer than this (relative) are treated as coincident
    refinement_depth  maximum number of panel doublings
    tol             target absolute error
    """

    base_panels: int = 8
    split_tol: float = 1e-12
    refinement_depth: int = 10
    tol: float = 1e-9

    def __post_init__(self):
        if self.base_panels < 1 or self.refinement_depth < 1:
            raise ParameterError("panel count and refinement depth must be >= 1")
        if self.split_tol <= 0 or self.tol <= 0:
            raise ParameterError("tolerances must be > 0")


DEFAULT_QUADRATURE = QuadratureConfig()


def gauss_panel_rule(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flatten composite Gauss-Legendre nodes/weights over the given panel edges."""
    edges = np.asarray(edges, dtype=float)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def refine_to_tolerance(
    f: Callable[[np.ndarray], np.ndarray],
    edges_for: Callable[[int], np.ndarray],
    cfg: QuadratureConfig,
) -> tuple[float, float]:
    """Double panels until two consecutive composite rules agree within cfg.tol.

    Returns (value, error_estimate); raises ToleranceError with the best value
    and the achieved estimate when the depth budget runs out.
    """
    panels = cfg.base_panels
    nodes, weights = gauss_panel_rule(edges_for(panels))
    prev = float(weights @ f(nodes))
    cur, err = prev, math.inf
    for _ in range(cfg.refinement_depth):
        panels *= 2
        nodes, weights = gauss_panel_rule(edges_for(panels))
        cur = float(weights @ f(nodes))
        err = abs(cur - prev)
        if err <= cfg.tol:
            return cur, err
        prev = cur
    raise ToleranceError("quadrature did not reach the target tolerance", cur, err)


def kernel_time_integral(
    params: HermiteParams,
    a: float,
    b: float,
    x,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
    full_output: bool = False,
):
    """``integral_a^b prod_p (s - x_p)_+^{H-3/2} ds`` for one point x in R^N.

    The integrand vanishes for s <= max_p x_p, so the effective domain starts
    at the largest kernel point.  When that point lies in [a, b) the integral
    is singular there; the substitution u = (s - x_max)^{H-1/2} removes the
    blow-up (exactly for a single factor) and the remaining smooth factors are
    integrated on panels graded toward the singularity.

    With ``full_output=True`` returns ``(value, error_estimate)``.

    Raises IntervalError for a >= b, or when two kernel points coincide at the
    singular endpoint (the combined exponent 2H-3 < -1 is not integrable).
    """
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise IntervalError(f"need a < b (finite), got [{a}, {b}]")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if xs.shape != (params.rank,):
        raise ParameterError(f"x must have {params.rank} coordinates, got shape {xs.shape}")
    if not np.all(np.isfinite(xs)):
        raise ParameterError("kernel points must be finite")

    e = params.kernel_exponent
    q = params.singular_power
    xmax = float(xs.max())
    if xmax >= b:
        return (0.0, 0.0) if full_output else 0.0

    # Single factor: the substitution is the exact antiderivative.
    if xs.size == 1:
        hi = (b - xmax) ** q
        lo = (a - xmax) ** q if xmax < a else 0.0
        val = (hi - lo) / q
        return (val, 0.0) if full_output else val

    others = np.delete(xs, int(np.argmax(xs)))
    if xmax >= a:
        scale = max(1.0, abs(xmax))
        if np.any(xmax - others <= cfg.split_tol * scale):
            raise IntervalError(
                "coincident kernel points at the singular endpoint: "
                "combined exponent 2H-3 < -1 is not integrable"
            )
        u_max = (b - xmax) ** q
        inv_q = 1.0 / q
        grading = max(2.0, inv_q)

        def f(u):
            s = xmax + u[:, None] ** inv_q
            return np.prod((s - others[None, :]) ** e, axis=1) / q

        def edges(p):
            return u_max * np.linspace(0.0, 1.0, p + 1) ** grading

    else:

        def f(s):
            return np.prod((s[:, None] - xs[None, :]) ** e, axis=1)

        def edges(p):
            return np.linspace(a, b, p + 1)

    val, err = refine_to_tolerance(f, edges, cfg)
    return (val, err) if full_output else val
