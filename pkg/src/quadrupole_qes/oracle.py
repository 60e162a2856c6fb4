"""Finite-difference eigensolver used to cross-check the analytic levels.

The scaled radial equation

    F'' + F'/r - l^2 F / r^2 - r^2 F - xi F / r + Lambda F = 0

is discretized on the cell-centred grid r_j = (j - 1/2) h, j = 1..N, with
the radial flux written in conservative form,

    -(1/r_j) [r_{j+1/2} (F_{j+1} - F_j) - r_{j-1/2} (F_j - F_{j-1})] / h^2,

and r_{1/2} = 0 so no boundary value at the origin is needed.  A Dirichlet
wall sits at r_max = (N + 1/2) h.  Scaling by sqrt(r_j) (the discrete
analogue of u = sqrt(r) F) makes the matrix symmetric tridiagonal.  The
scheme is second order for every |l|, including l = 0 where a plain
three-point stencil on the Liouville form does not converge to the
correct eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from . import heun
from .errors import ConvergenceFailure, GridTooCoarse, NoMatchingEigenvalue
from .quantize import QuantizedMode

SCHEME = "three-point-symmetrized"
MAX_SPACING = 0.02
MIN_POINTS = 500
DEFAULT_POINTS = 4000
DEFAULT_TOLERANCE = 1e-4
# stebz's default absolute tolerance is eps * ||A||_1, i.e. ~1e-10 at h ~ 1e-3;
# twice the underflow threshold asks for full relative accuracy instead
_FULL_ACCURACY = 2 * np.finfo(float).tiny


@dataclass(frozen=True)
class GridSpec:
    r_max: float = 10.0
    n_points: int = DEFAULT_POINTS
    scheme: str = SCHEME

    def __post_init__(self):
        if not self.r_max > 0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if self.n_points < MIN_POINTS:
            raise ValueError(f"n_points must be >= {MIN_POINTS}, got {self.n_points}")
        if self.scheme != SCHEME:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def h(self) -> float:
        return self.r_max / (self.n_points + 0.5)

    def refined(self, factor: int = 2) -> GridSpec:
        return GridSpec(self.r_max, self.n_points * factor, self.scheme)

    @classmethod
    def default_for(cls, Lambda: float, n_points: int = DEFAULT_POINTS) -> GridSpec:
        return cls(r_max=max(10.0, math.sqrt(Lambda) + 6.0), n_points=n_points)


@dataclass(frozen=True)
class TridiagonalOperator:
    diagonal: NDArray[np.float64]
    off_diagonal: NDArray[np.float64]
    r: NDArray[np.float64]
    h: float

    @property
    def size(self) -> int:
        return self.diagonal.size

    def dense(self) -> NDArray[np.float64]:
        return np.diag(self.diagonal) + np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)


@dataclass(frozen=True)
class VerificationReport:
    n: int
    l: int
    xi_star: float
    Lambda_analytic: float
    Lambda_numeric: float
    eigenindex: int
    node_count: int
    abs_error: float
    richardson_error_estimate: float
    passed: bool
    tolerance: float
    r_max: float
    n_points: int
    convergence_ratio: float | None = None

    @property
    def index_matches(self) -> bool:
        return self.eigenindex == self.node_count


def build_operator(l_abs: int, xi: float, g: GridSpec) -> TridiagonalOperator:
    h = g.h
    if h > MAX_SPACING:
        raise GridTooCoarse(f"grid spacing {h:.4g} exceeds {MAX_SPACING}")
    j = np.arange(1, g.n_points + 1, dtype=float)
    r = (j - 0.5) * h
    r_out = r + 0.5 * h
    r_in = r - 0.5 * h
    diag = (r_out + r_in) / (r * h * h) + (l_abs * l_abs) / r**2 + r**2 + xi / r
    off = -r_out[:-1] / (np.sqrt(r[:-1] * r[1:]) * h * h)
    return TridiagonalOperator(diagonal=diag, off_diagonal=off, r=r, h=h)


def sturm_count(diagonal, off_diagonal, x: float) -> int:
    """Number of eigenvalues strictly below x (LDL^T pivot signs)."""
    count = 0
    q = 1.0
    prev_e2 = 0.0
    for i, d in enumerate(diagonal):
        q = d - x - (prev_e2 / q if i else 0.0)
        if q == 0.0:
            q = -1e-300
        if q < 0:
            count += 1
        prev_e2 = off_diagonal[i] ** 2 if i < len(off_diagonal) else 0.0
    return count


def lowest_eigenvalues(matrix: TridiagonalOperator, k: int) -> list[float]:
    """k smallest eigenvalues, ascending, by Sturm-sequence bisection (LAPACK stebz)."""
    if not 1 <= k <= matrix.size:
        raise ValueError(f"k must be in [1, {matrix.size}], got {k}")
    try:
        vals = scipy.linalg.eigh_tridiagonal(
            matrix.diagonal,
            matrix.off_diagonal,
            eigvals_only=True,
            select="i",
            select_range=(0, k - 1),
            lapack_driver="stebz",
            tol=_FULL_ACCURACY,
        )
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(f"tridiagonal bisection failed for N={matrix.size}, k={k}: {exc}") from exc
    if vals.size != k or not np.all(np.isfinite(vals)):
        raise ConvergenceFailure(f"expected {k} finite eigenvalues, got {vals!r}")
    return [float(v) for v in vals]


def richardson(coarse, fine, order: int = 2):
    """One extrapolation step for halved spacing at the given convergence order."""
    f = 2**order
    return (f * np.asarray(fine) - np.asarray(coarse)) / (f - 1)


def spectrum(l_abs: int, xi: float, g: GridSpec, k: int) -> NDArray[np.float64]:
    return np.array(lowest_eigenvalues(build_operator(l_abs, xi, g), k))


def extrapolated_spectrum(l_abs: int, xi: float, g: GridSpec, k: int):
    """Return (Lambda(N), Lambda(2N), extrapolated) for the k lowest levels."""
    coarse = spectrum(l_abs, xi, g, k)
    fine = spectrum(l_abs, xi, g.refined(), k)
    return coarse, fine, richardson(coarse, fine)


def polynomial_nodes(n: int, l_abs: int, xi: float, r_max: float, samples: int = 4001) -> int:
    s = heun.coefficients(l_abs, xi, heun.truncation_lambda(n, l_abs), n)
    grid = np.linspace(0.0, r_max, samples)
    return heun.node_count(heun.sample_radial(s, grid))


def verify_mode(
    mode: QuantizedMode,
    g: GridSpec | None = None,
    *,
    xi: float | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    convergence_check: bool = False,
) -> VerificationReport:
    """Check that the analytic Lambda shows up in the discrete spectrum.

    ``xi`` overrides the coupling fed to the numerical operator (useful for
    detuning tests); the node count always refers to the analytic state.
    """
    Lam = float(mode.Lambda)
    l_abs = mode.l_abs
    if g is None:
        g = GridSpec.default_for(Lam)
    if g.r_max < math.sqrt(Lam) + 5:
        raise ValueError(f"r_max={g.r_max} too small for Lambda={Lam}; need >= sqrt(Lambda) + 5")
    xi_op = mode.xi_star if xi is None else xi
    nodes = polynomial_nodes(mode.n, l_abs, mode.xi_star, g.r_max)
    k = nodes + 3
    coarse, fine, extrap = extrapolated_spectrum(l_abs, xi_op, g, k)
    idx = int(np.argmin(np.abs(extrap - Lam)))
    err = float(abs(extrap[idx] - Lam))
    ratio = None
    if convergence_check:
        finest = spectrum(l_abs, xi_op, g.refined(4), k)
        denom = fine[idx] - finest[idx]
        ratio = float((coarse[idx] - fine[idx]) / denom) if denom != 0 else math.inf
    tol = tolerance * Lam
    report = VerificationReport(
        n=mode.n,
        l=mode.l,
        xi_star=float(xi_op),
        Lambda_analytic=Lam,
        Lambda_numeric=float(extrap[idx]),
        eigenindex=idx,
        node_count=nodes,
        abs_error=err,
        richardson_error_estimate=float(abs(extrap[idx] - fine[idx])),
        passed=err <= tol,
        tolerance=tolerance,
        r_max=g.r_max,
        n_points=g.n_points,
        convergence_ratio=ratio,
    )
    if err > 10 * tol:
        raise NoMatchingEigenvalue(
            f"nearest eigenvalue {extrap[idx]:.8g} is {err:.3g} from Lambda={Lam:g} "
            f"(limit {10 * tol:.3g})",
            report=report,
        )
    return report


def oscillator_levels(l_abs: int, k: int = 3, g: GridSpec | None = None):
    """Extrapolated xi = 0 levels next to the exact 4j + 2|l| + 2."""
    g = g or GridSpec()
    _, _, extrap = extrapolated_spectrum(l_abs, 0.0, g, k)
    exact = [4 * j + 2 * l_abs + 2 for j in range(k)]
    return [float(v) for v in extrap], exact
