"""Power-series (biconfluent Heun) solution of the scaled radial equation.

With F(r) = exp(-r^2/2) r^|l| h(r) and h(r) = sum_k c_k r^k, the
coefficients obey

    c_0 = 1,  c_1 = xi / (1 + 2|l|)
    c_{k+2} = [xi c_{k+1} - (Lambda - 2 - 2|l| - 2k) c_k] / ((k+2)(k+2+2|l|))

in terms of the dimensionless coupling xi and eigenvalue Lambda.  The
series becomes a polynomial of degree n when Lambda = 2n + 2 + 2|l| and
c_{n+1} = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NegativeRadius, TailNotDecayed

NODE_DEADBAND = 1e-12
TAIL_TOLERANCE = 1e-8


@dataclass(frozen=True)
class SeriesCoefficients:
    l_abs: int
    xi: float
    Lambda: float
    coeffs: tuple[float, ...]

    @property
    def K(self) -> int:
        return len(self.coeffs) - 1


@dataclass(frozen=True)
class RadialSamples:
    grid: NDArray[np.float64]
    values: NDArray[np.float64]
    l_abs: int
    normalized: bool = False


def coefficients(l_abs: int, xi: float, Lambda: float, K: int) -> SeriesCoefficients:
    """Run the three-term recurrence up to c_K."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if l_abs < 0:
        raise ValueError(f"l_abs must be non-negative, got {l_abs}")
    c = [1.0, xi / (1 + 2 * l_abs)]
    for k in range(K - 1):
        # fsum rounds the two-term numerator exactly once
        num = math.fsum((xi * c[k + 1], -(Lambda - 2 - 2 * l_abs - 2 * k) * c[k]))
        c.append(num / ((k + 2) * (k + 2 + 2 * l_abs)))
    return SeriesCoefficients(l_abs=l_abs, xi=float(xi), Lambda=float(Lambda), coeffs=tuple(c))


def truncation_lambda(n: int, l_abs: int) -> int:
    """Lambda fixed by the first truncation condition."""
    return 2 * n + 2 + 2 * l_abs


def termination_residual(n: int, l_abs: int, xi: float) -> float:
    """c_{n+1} at Lambda = 2n + 2 + 2|l|; zero exactly when the series terminates."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return coefficients(l_abs, xi, truncation_lambda(n, l_abs), n + 1).coeffs[n + 1]


def eval_radial(s: SeriesCoefficients, r: ArrayLike, n_trunc: int | None = None):
    """F(r) = exp(-r^2/2) r^|l| sum_{k <= n_trunc} c_k r^k.

    Accepts a scalar or an array of radii; returns the same shape.
    """
    if n_trunc is None:
        n_trunc = s.K
    if n_trunc > s.K:
        raise ValueError(f"n_trunc={n_trunc} exceeds computed order K={s.K}")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise NegativeRadius(f"radius must be non-negative, got min {r_arr.min()}")
    h = np.zeros_like(r_arr)
    for ck in reversed(s.coeffs[: n_trunc + 1]):
        h = h * r_arr + ck
    out = np.exp(-0.5 * r_arr**2) * r_arr**s.l_abs * h
    if np.ndim(r) == 0:
        return float(out)
    return out


def sample_radial(s: SeriesCoefficients, grid: ArrayLike, n_trunc: int | None = None) -> RadialSamples:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or np.any(np.diff(g) <= 0):
        raise ValueError("grid must be one-dimensional and strictly increasing")
    return RadialSamples(grid=g, values=eval_radial(s, g, n_trunc), l_abs=s.l_abs)


def node_count(samples: RadialSamples) -> int:
    """Strict sign changes of F on r > 0.

    Points with |F| below a dead-band of 1e-12 max|F| are skipped, so the
    zero at the origin and round-off wiggles are never counted.
    """
    mask = samples.grid > 0
    v = samples.values[mask]
    if v.size < 3:
        raise ValueError("need at least 3 interior points to count nodes")
    band = NODE_DEADBAND * np.max(np.abs(v))
    signs = np.sign(v[np.abs(v) > band])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def norm_squared(samples: RadialSamples) -> float:
    return float(np.trapezoid(samples.values**2 * samples.grid, samples.grid))


def normalize(samples: RadialSamples) -> RadialSamples:
    """Scale so that the trapezoidal integral of |F|^2 r dr equals one."""
    v = samples.values
    peak = np.max(np.abs(v))
    if not abs(v[-1]) < TAIL_TOLERANCE * peak:
        raise TailNotDecayed(
            f"|F(R)| = {abs(v[-1]):.3e} is not below {TAIL_TOLERANCE:g} * max|F| = {TAIL_TOLERANCE * peak:.3e}; "
            "extend the grid"
        )
    scale = 1.0 / math.sqrt(norm_squared(samples))
    return RadialSamples(grid=samples.grid, values=v * scale, l_abs=samples.l_abs, normalized=True)
