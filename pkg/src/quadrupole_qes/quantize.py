"""Quantization: allowed couplings, cyclotron frequencies and energies.

The polynomial truncation of the radial series imposes two conditions.
The first fixes Lambda = 2n + 2 + 2|l|; the second, c_{n+1}(xi) = 0, is a
polynomial equation of degree n + 1 in the single coupling xi.  Each of its
positive roots fixes delta = 4 m^2 theta^2 / xi^2, which in turn admits two
cyclotron frequencies

    omega_pm = -2 Omega +- 2 sqrt(Omega^2 + delta^2 / m^2)

and the energy follows from

    E = sqrt(omega^2/4 + Omega omega) (n + |l| + 1) - omega l / 2 - Omega l.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import NoPositiveRoot, NonPositiveRadicand, ThetaNotZero, ZeroTheta
from .heun import truncation_lambda
from .model import PhysicalParams

BRANCHES = ("+", "-")


@dataclass(frozen=True)
class ConstraintPolynomial:
    """P(xi) = c_{n+1}(xi) with exact rational coefficients, lowest power first."""

    n: int
    l_abs: int
    poly_coeffs: tuple[Fraction, ...]

    @property
    def degree(self) -> int:
        return len(self.poly_coeffs) - 1

    @property
    def Lambda(self) -> int:
        return truncation_lambda(self.n, self.l_abs)

    def __call__(self, xi: float) -> float:
        acc = 0.0
        for a in reversed(self.poly_coeffs):
            acc = acc * xi + float(a)
        return acc


@dataclass(frozen=True)
class QuantizedMode:
    n: int
    l: int
    root_index: int
    branch: str
    xi_star: float
    delta: float
    omega: float
    energy: float
    degenerate: bool = False

    @property
    def l_abs(self) -> int:
        return abs(self.l)

    @property
    def Lambda(self) -> int:
        return truncation_lambda(self.n, self.l_abs)


# -- exact polynomial helpers (ascending coefficient lists) -------------------


def _trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _sub(a, b):
    n = max(len(a), len(b))
    a = list(a) + [Fraction(0)] * (n - len(a))
    b = list(b) + [Fraction(0)] * (n - len(b))
    return _trim([x - y for x, y in zip(a, b)])


def _scale(a, s):
    return [x * s for x in a]


def _shift(a):
    """Multiply by the variable."""
    return [Fraction(0)] + list(a)


def _derivative(a):
    return _trim([k * a[k] for k in range(1, len(a))] or [Fraction(0)])


def _rem(a, b):
    a = _trim(a)
    b = _trim(b)
    while len(a) >= len(b) and any(a):
        factor = a[-1] / b[-1]
        offset = len(a) - len(b)
        for i, bi in enumerate(b):
            a[offset + i] -= factor * bi
        a = _trim(a[:-1] or [Fraction(0)])
    return a


def _sturm_chain(q):
    chain = [_trim(q), _derivative(q)]
    while len(chain[-1]) > 1:
        r = _rem(chain[-2], chain[-1])
        if not any(r):
            break
        chain.append(_scale(r, -1))
    return chain


def _eval_exact(p, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for a in reversed(p):
        acc = acc * x + a
    return acc


def _variations(chain, x) -> int:
    if x is math.inf:
        vals = [p[-1] for p in chain]
    else:
        vals = [_eval_exact(p, x) for p in chain]
    signs = [v > 0 for v in vals if v != 0]
    return sum(1 for s0, s1 in zip(signs, signs[1:]) if s0 != s1)


# -- constraint polynomial ----------------------------------------------------


@lru_cache(maxsize=None)
def constraint_polynomial(n: int, l_abs: int) -> ConstraintPolynomial:
    """Run the recurrence symbolically in xi with Lambda = 2n + 2 + 2|l|."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if l_abs < 0:
        raise ValueError(f"l_abs must be non-negative, got {l_abs}")
    Lam = truncation_lambda(n, l_abs)
    c = [[Fraction(1)], [Fraction(0), Fraction(1, 1 + 2 * l_abs)]]
    for k in range(n):
        num = _sub(_shift(c[k + 1]), _scale(c[k], Lam - 2 - 2 * l_abs - 2 * k))
        c.append(_scale(num, Fraction(1, (k + 2) * (k + 2 + 2 * l_abs))))
    return ConstraintPolynomial(n=n, l_abs=l_abs, poly_coeffs=tuple(_trim(c[n + 1])))


def _even_part(poly: ConstraintPolynomial):
    """Split P(xi) = xi^parity * Q(xi^2); return (parity, Q)."""
    parity = poly.degree % 2
    return parity, [poly.poly_coeffs[j] for j in range(parity, poly.degree + 1, 2)]


def _isolate(chain, lo: Fraction, hi: Fraction, count: int, out: list):
    if count == 0:
        return
    if count == 1:
        out.append((lo, hi))
        return
    mid = (lo + hi) / 2
    while _eval_exact(chain[0], mid) == 0:
        mid = (mid + hi) / 2
    left = _variations(chain, lo) - _variations(chain, mid)
    _isolate(chain, lo, mid, left, out)
    _isolate(chain, mid, hi, count - left, out)


def _exact_sign(q_int, x: float) -> int:
    """Sign of Q(x^2) in integer arithmetic; equals the sign of P(x) for x > 0."""
    p, d = x.as_integer_ratio()
    p2, d2 = p * p, d * d
    deg = len(q_int) - 1
    acc = 0
    pw = 1
    for j, a in enumerate(q_int):
        acc += a * pw * d2 ** (deg - j)
        pw *= p2
    return (acc > 0) - (acc < 0)


def _polish(poly: ConstraintPolynomial, q_int, lo: float, hi: float) -> float:
    s_lo = _exact_sign(q_int, lo)
    dpoly = [float(k * a) for k, a in enumerate(poly.poly_coeffs)][1:]

    def dp(x):
        acc = 0.0
        for a in reversed(dpoly):
            acc = acc * x + a
        return acc

    # bracket to ~1e-9, Newton to convergence, then certify with exact signs
    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        s = _exact_sign(q_int, mid)
        if s == 0:
            return mid
        if s == s_lo:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(8):
        step = poly(x) / dp(x)
        x_new = x - step
        if not lo <= x_new <= hi:
            break
        if x_new == x:
            break
        x = x_new
    # exact bracket check: if the neighbours straddle the root we are within one ulp
    below, above = math.nextafter(x, -math.inf), math.nextafter(x, math.inf)
    if _exact_sign(q_int, below) * _exact_sign(q_int, above) <= 0:
        return x
    while hi - lo > 4 * math.ulp(hi):
        mid = 0.5 * (lo + hi)
        s = _exact_sign(q_int, mid)
        if s == 0:
            return mid
        if s == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def xi_search_bound(n: int, l_abs: int) -> float:
    return 2.0 * math.sqrt(truncation_lambda(n, l_abs) * (n + 2))


@lru_cache(maxsize=None)
def _positive_roots(n: int, l_abs: int) -> tuple[float, ...]:
    poly = constraint_polynomial(n, l_abs)
    parity, q = _even_part(poly)
    if len(q) == 1:
        return ()
    chain = _sturm_chain(q)
    zero = Fraction(0)
    total = _variations(chain, zero) - _variations(chain, math.inf)
    t_hi = Fraction(xi_search_bound(n, l_abs)) ** 2
    if _variations(chain, zero) - _variations(chain, t_hi) != total:
        # Cauchy bound on the roots of Q
        t_hi = 1 + max(abs(a / q[-1]) for a in q[:-1])
    intervals: list = []
    _isolate(chain, zero, t_hi, total, intervals)

    denom = math.lcm(*(a.denominator for a in q))
    q_int = [int(a * denom) for a in q]
    roots = []
    for a, b in sorted(intervals):
        lo = math.nextafter(math.sqrt(float(a)), 0.0)
        hi = math.nextafter(math.sqrt(float(b)), math.inf)
        while _exact_sign(q_int, lo) == _exact_sign(q_int, hi) != 0:
            # float rounding of the rational bracket may clip the root
            lo, hi = lo * (1 - 1e-15), hi * (1 + 1e-15)
        roots.append(_polish(poly, q_int, max(lo, 0.0), hi))
    return tuple(roots)


def solve_xi(n: int, l_abs: int) -> list[float]:
    """Strictly positive roots of the constraint polynomial, ascending.

    The negatives of these are also roots (parity), as is xi = 0 when n is
    even; neither is returned.
    """
    roots = _positive_roots(n, l_abs)
    if not roots:
        raise NoPositiveRoot(f"no positive coupling terminates the series for n={n}, |l|={l_abs}")
    return list(roots)


# -- frequencies and energies -------------------------------------------------


def delta_from_root(p: PhysicalParams, xi_star: float) -> float:
    if p.theta_pot == 0:
        raise ZeroTheta("theta = 0 leaves the coupling unconstrained; use landau_limit")
    if xi_star == 0:
        raise ZeroTheta("xi* = 0 does not fix delta")
    return 4.0 * p.m**2 * p.theta_pot**2 / xi_star**2


def omega_from_root(p: PhysicalParams, xi_star: float) -> tuple[float, float]:
    """Both frequency branches for a terminating coupling, via delta.

    Each branch is evaluated in the form free of cancellation for the sign
    of Omega at hand, so Omega = 0 and |Omega| >> delta/m are both regular.
    """
    r = delta_from_root(p, xi_star) / p.m
    Om = p.Omega
    s = math.hypot(Om, r)
    if Om > 0:
        w_plus = 2.0 * r * r / (Om + s)
        w_minus = -2.0 * (Om + s)
    else:
        w_plus = 2.0 * (s - Om)
        w_minus = -2.0 * r * r / (s - Om)
    return w_plus, w_minus


def energy_general(n: int, l: int, omega: float, Omega: float) -> float:
    radicand = omega * (0.25 * omega + Omega)
    if not radicand > 0:
        raise NonPositiveRadicand(f"omega^2/4 + Omega omega = {radicand} <= 0")
    return math.sqrt(radicand) * (n + abs(l) + 1) - 0.5 * omega * l - Omega * l


def energy_from_lambda(p: PhysicalParams, n: int, l: int, delta: float, omega: float) -> float:
    """Energy from Theta = delta * Lambda, inverted for E."""
    Lam = truncation_lambda(n, abs(l))
    return (delta * Lam - 2.0 * p.m * p.Omega * l - p.m * omega * l) / (2.0 * p.m)


def solve_level(p: PhysicalParams, n: int, l: int) -> list[QuantizedMode]:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if p.theta_pot == 0:
        raise ZeroTheta("theta = 0: use landau_limit with an explicit omega")
    sign = 1.0 if p.theta_pot > 0 else -1.0
    modes = []
    for idx, root in enumerate(solve_xi(n, abs(l))):
        xi = sign * root
        delta = delta_from_root(p, xi)
        for branch, omega in zip(BRANCHES, omega_from_root(p, xi)):
            modes.append(
                QuantizedMode(
                    n=n,
                    l=l,
                    root_index=idx,
                    branch=branch,
                    xi_star=xi,
                    delta=delta,
                    omega=omega,
                    energy=energy_general(n, l, omega, p.Omega),
                )
            )
    return modes


def landau_limit(p: PhysicalParams, n_r: int, l: int, omega: float) -> float:
    """Rotating-frame Landau level at theta = 0 (n_r = 0, 1, 2, ...)."""
    if p.theta_pot != 0:
        raise ThetaNotZero(f"landau_limit requires theta = 0, got {p.theta_pot}")
    if n_r < 0:
        raise ValueError(f"n_r must be >= 0, got {n_r}")
    radicand = omega * (0.25 * omega + p.Omega)
    if not radicand > 0:
        raise NonPositiveRadicand(f"omega^2/4 + Omega omega = {radicand} <= 0")
    return math.sqrt(radicand) * (2 * n_r + abs(l) + 1) - 0.5 * omega * l - p.Omega * l


# -- literal closed forms for n = 1, 2 ---------------------------------------


def _sqrt1pm1(x: float) -> float:
    """sqrt(1 + x) - 1 without cancellation for small x."""
    return math.expm1(0.5 * math.log1p(x))


def _closed_form(p: PhysicalParams, n: int, l: int, kappa: float, e0: float, xi2: int):
    """Shared assembly of omega = -2 Omega +- 2|Omega| S, E = e0 -+ |Omega| l S.

    ``kappa`` is the numerator under the root, S = sqrt(1 + kappa / Omega^2).
    Writing |Omega| keeps the "+" label on the positive frequency for either
    rotation sense.
    """
    Om = p.Omega
    aOm = abs(Om)
    if p.theta_pot == 0:
        modes = []
        for branch, w in (("+", -2 * Om + 2 * aOm), ("-", -2 * Om - 2 * aOm)):
            e = -0.5 * w * l - Om * l
            modes.append(QuantizedMode(n, l, 0, branch, 0.0, 0.0, w, e, degenerate=True))
        return tuple(modes)
    if Om == 0:
        root_term = math.sqrt(kappa)  # limit of |Omega| S
        w_plus = 2 * root_term
        w_minus = -2 * root_term
    else:
        x = kappa / Om**2
        root_term = aOm * math.sqrt(1 + x)
        w_plus = -2 * Om + 2 * aOm * (1 + _sqrt1pm1(x)) if Om < 0 else 2 * aOm * _sqrt1pm1(x)
        w_minus = -2 * Om - 2 * root_term if Om > 0 else -2 * aOm * _sqrt1pm1(x)
    delta = p.m**2 * p.theta_pot**2 * 4 / xi2
    xi = math.copysign(math.sqrt(xi2), p.theta_pot)
    return (
        QuantizedMode(n, l, 0, "+", xi, delta, w_plus, e0 - root_term * l),
        QuantizedMode(n, l, 0, "-", xi, delta, w_minus, e0 + root_term * l),
    )


def closed_form_n1(p: PhysicalParams, l: int) -> tuple[QuantizedMode, QuantizedMode]:
    a = 1 + 2 * abs(l)
    kappa = 4 * p.m**2 * p.theta_pot**4 / a**2
    e0 = 2 * p.m * p.theta_pot**2 * (abs(l) + 2) / a
    return _closed_form(p, 1, l, kappa, e0, 2 * a)


def closed_form_n2(p: PhysicalParams, l: int) -> tuple[QuantizedMode, QuantizedMode]:
    a = 3 + 4 * abs(l)
    kappa = p.m**2 * p.theta_pot**4 / a**2
    e0 = p.m * p.theta_pot**2 * (3 + abs(l)) / a
    return _closed_form(p, 2, l, kappa, e0, 4 * a)
