"""Odd Jacobi theta function, the bracket function built on it, and the
classical identities (addition, Frobenius determinant, L-term splitting,
quasi-periodicity) that every higher layer of the engine leans on.

All arithmetic is double-precision complex.  The bracket [u] is the theta
function evaluated at eta*u, where eta = r/L is the rational anisotropy of
the cyclic model; its zeros form the lattice (1/eta)Z + (tau/eta)Z and every
formula downstream divides by brackets, so callers are expected to stay off
that lattice (SingularPoint is raised when they do not).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateInput, NonConvergent, SingularPoint

#: magnitude below which a bracket is treated as sitting on the zero lattice
SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class EllipticContext:
    """Model constants shared by every formula.

    r, L: numerator/denominator of the anisotropy eta = r/L (coprime, L > 0).
    tau: modular parameter, Im tau > 0.
    series_tolerance, max_terms: truncation policy for the theta series.
    """

    r: int
    L: int
    tau: complex
    series_tolerance: float = 1e-16
    max_terms: int = 64

    def __post_init__(self):
        if self.L <= 0:
            raise DegenerateInput(f"period L must be positive, got {self.L}")
        if math.gcd(self.r, self.L) != 1:
            raise DegenerateInput(f"r={self.r} and L={self.L} must be coprime")
        if complex(self.tau).imag <= 0:
            raise DegenerateInput(f"Im tau must be positive, got {self.tau}")

    @property
    def eta(self) -> float:
        return self.r / self.L

    @property
    def p(self) -> complex:
        """Nome exp(2 pi i tau)."""
        return cmath.exp(2j * cmath.pi * self.tau)

    @property
    def q(self) -> complex:
        """Multiplier exp(2 pi i eta)."""
        return cmath.exp(2j * cmath.pi * self.eta)


@dataclass(frozen=True)
class BracketValue:
    """Bracket value and optional u-derivative from one truncation order."""

    value: complex
    deriv: complex | None = None


@lru_cache(maxsize=1 << 18)
def _theta1_series(z: complex, tau: complex, tol: float, max_terms: int,
                   with_deriv: bool) -> tuple[complex, complex]:
    """Sine series for the odd theta function and its z-derivative.

    Terms decay like |p|^(n^2/2); truncation stops once a term drops below
    tol times the largest term seen, which bounds the tail by one term.
    """
    value = 0.0 + 0.0j
    deriv = 0.0 + 0.0j
    running_max = 0.0
    ipitau = 1j * cmath.pi * tau
    for n in range(max_terms):
        try:
            amp = 2.0 * (-1) ** n * cmath.exp(ipitau * (n + 0.5) ** 2)
            arg = (2 * n + 1) * cmath.pi * z
            term = amp * cmath.sin(arg)
        except OverflowError:
            raise NonConvergent(
                f"theta series overflows at z={z} (argument too deep in the "
                "imaginary direction for double precision)") from None
        value += term
        if with_deriv:
            deriv += amp * (2 * n + 1) * cmath.pi * cmath.cos(arg)
        # track scale via the coefficient, not sin, so z on the real axis
        # (where sin may vanish) does not stop the series prematurely
        size = abs(amp) * max(1.0, abs(cmath.exp(1j * arg) - cmath.exp(-1j * arg)) / 2)
        running_max = max(running_max, size)
        if size < tol * running_max and n >= 1:
            return value, deriv
    raise NonConvergent(
        f"theta series did not settle in {max_terms} terms (tau={tau}); "
        "tau is likely too close to the real axis")


def theta1(z: complex, tau: complex, ctx: EllipticContext) -> complex:
    """Odd theta function of quasi-periods 1 and tau, by its sine series."""
    if complex(tau).imag <= 0:
        raise DegenerateInput(f"Im tau must be positive, got {tau}")
    val, _ = _theta1_series(complex(z), complex(tau), ctx.series_tolerance,
                            ctx.max_terms, False)
    return val


def theta1_deriv(z: complex, tau: complex, ctx: EllipticContext) -> complex:
    """d/dz of theta1, truncated at the same order as the value."""
    _, der = _theta1_series(complex(z), complex(tau), ctx.series_tolerance,
                            ctx.max_terms, True)
    return der


def theta1_product(z: complex, tau: complex, ctx: EllipticContext) -> complex:
    """Product form of theta1, kept as an internal cross-check of the series."""
    p = cmath.exp(2j * cmath.pi * tau)
    if abs(p) >= 1:
        raise DegenerateInput(f"|p| must be < 1, got {abs(p)}")
    out = 2.0 * cmath.exp(0.25j * cmath.pi * tau) * cmath.sin(cmath.pi * z)
    for n in range(1, ctx.max_terms):
        pn = p ** n
        factor = (1 - 2 * pn * cmath.cos(2 * cmath.pi * z) + pn * pn) * (1 - pn)
        out *= factor
        if abs(pn) < ctx.series_tolerance:
            return out
    raise NonConvergent(f"theta product did not settle in {ctx.max_terms} factors")


def bracket(u: complex, deriv_order: int, period_multiplier: int,
            ctx: EllipticContext) -> complex:
    """Bracket function [u]_m = theta1(eta*u; m*tau), or its u-derivative.

    deriv_order 1 returns d/du, i.e. eta * theta1'(eta*u; m*tau).
    """
    if deriv_order not in (0, 1):
        raise ValueError(f"deriv_order must be 0 or 1, got {deriv_order}")
    if period_multiplier < 1:
        raise ValueError("period_multiplier must be a positive integer")
    u = complex(u)
    if u == 0 and deriv_order == 0:
        return 0j
    z = ctx.eta * u
    mtau = period_multiplier * complex(ctx.tau)
    val, der = _theta1_series(z, mtau, ctx.series_tolerance, ctx.max_terms,
                              deriv_order == 1)
    return ctx.eta * der if deriv_order == 1 else val


def bracket_value(u: complex, ctx: EllipticContext,
                  period_multiplier: int = 1) -> BracketValue:
    """Value together with the derivative, from one truncation order."""
    u = complex(u)
    z = ctx.eta * u
    mtau = period_multiplier * complex(ctx.tau)
    val, der = _theta1_series(z, mtau, ctx.series_tolerance, ctx.max_terms, True)
    return BracketValue(value=val, deriv=ctx.eta * der)


def require_regular(value: complex, what: str = "bracket") -> complex:
    """Guard against dividing by a bracket that sits on the zero lattice."""
    if abs(value) < SINGULAR_TOL:
        raise SingularPoint(f"{what} has magnitude {abs(value):.3e} < {SINGULAR_TOL}")
    return value


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    """Extended Euclid: returns (g, x, y) with a*x + b*y = g."""
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


def modular_reduce(r1: int, r2: int, L: int, tau: complex) -> tuple[int, complex]:
    """Reduce the general cyclic case L*eta = r1 + r2*tau to a plain bracket.

    Returns (r, tau') with r = gcd(r1, r2) such that the Baxter-modified
    bracket built from (r1, r2) is proportional to theta1((r/L) u; tau').
    tau' = (b + a*tau)/(rt1 + rt2*tau) where r1 = r*rt1, r2 = r*rt2 and
    a*rt1 - b*rt2 = 1 comes from extended Euclid; Im tau' > 0 is automatic
    because the associated integer matrix has determinant one.
    """
    if L <= 0:
        raise DegenerateInput("period L must be positive")
    if r1 == 0 and r2 == 0:
        raise DegenerateInput("(r1, r2) = (0, 0) does not define an anisotropy")
    r = math.gcd(r1, r2)
    rt1, rt2 = r1 // r, r2 // r
    g, x, y = _egcd(rt1, rt2)
    assert g == 1
    a, b = x, -y  # a*rt1 - b*rt2 = 1
    denom = rt1 + rt2 * complex(tau)
    if abs(denom) < SINGULAR_TOL:
        raise DegenerateInput(f"rt1 + rt2*tau = {denom} is degenerate")
    tau_prime = (b + a * complex(tau)) / denom
    assert tau_prime.imag > 0
    return r, tau_prime


def modified_bracket(u: complex, r1: int, r2: int, L: int, tau: complex,
                     ctx: EllipticContext) -> complex:
    """Baxter-modified bracket for L*eta = r1 + r2*tau (used as an oracle
    for the modular reduction check; everything else stays in reduced form)."""
    eta = (r1 + r2 * complex(tau)) / L
    val, _ = _theta1_series(eta * complex(u), complex(tau),
                            ctx.series_tolerance, ctx.max_terms, False)
    return val * cmath.exp(1j * cmath.pi * r2 * eta / L * u * u)


def _scaled_residual(lhs: complex, rhs: complex) -> float:
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)


def elliptic_identity_residual(kind: str, point: tuple, size: int,
                               ctx: EllipticContext) -> float:
    """Scaled residual |LHS - RHS| / max(|LHS|, |RHS|, 1) for one identity.

    kind selects among:
      addition      point = (x, y, u, v)
      frobenius     point = (x_1..x_n, y_1..y_n, t), n = size
      sum_L         point = (u, gamma), L from ctx
      quasi_period  point = (u,), both quasi-periods checked
      L_period      point = (u,), sign flip over one full period
    """
    br = lambda u: bracket(u, 0, 1, ctx)
    if kind == "addition":
        x, y, u, v = point
        lhs = (br(x + u) * br(x - u) * br(y + v) * br(y - v)
               - br(x + v) * br(x - v) * br(y + u) * br(y - u))
        rhs = br(x + y) * br(x - y) * br(u + v) * br(u - v)
        return _scaled_residual(lhs, rhs)

    if kind == "frobenius":
        n = size
        xs, ys, t = point[:n], point[n:2 * n], point[2 * n]
        mat = np.empty((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                den = br(xs[i] - ys[j])
                require_regular(den, "frobenius denominator")
                mat[i, j] = br(xs[i] - ys[j] + t) / den
        lhs = complex(np.linalg.det(mat))
        num = 1.0 + 0j
        for i in range(n):
            for j in range(i + 1, n):
                num *= br(xs[i] - xs[j]) * br(ys[j] - ys[i])
        den = 1.0 + 0j
        for i in range(n):
            for j in range(n):
                den *= br(xs[i] - ys[j])
        rhs = br(t) ** (n - 1) * br(sum(xs) - sum(ys) + t) * num / den
        return _scaled_residual(lhs, rhs)

    if kind == "sum_L":
        u, gamma = point
        require_regular(br(u), "[u]")
        require_regular(br(gamma), "[gamma]")
        d0 = bracket(0, 1, 1, ctx)
        lhs = br(u + gamma) * d0 / (br(u) * br(gamma))
        d0L = bracket(0, 1, ctx.L, ctx)
        tau_over_eta = complex(ctx.tau) / ctx.eta
        rhs = 0j
        for k in range(ctx.L):
            shift = k * tau_over_eta
            rhs += (cmath.exp(2j * cmath.pi * ctx.eta * k * u)
                    * bracket(ctx.L * u + gamma + shift, 0, ctx.L, ctx) * d0L
                    / (bracket(ctx.L * u, 0, ctx.L, ctx)
                       * bracket(gamma + shift, 0, ctx.L, ctx)))
        return _scaled_residual(lhs, rhs)

    if kind == "quasi_period":
        (u,) = point
        res1 = _scaled_residual(br(u + 1 / ctx.eta), -br(u))
        phase = -cmath.exp(-1j * cmath.pi * ctx.tau) * cmath.exp(
            -2j * cmath.pi * ctx.eta * u)
        res2 = _scaled_residual(br(u + ctx.tau / ctx.eta), phase * br(u))
        return max(res1, res2)

    if kind == "L_period":
        (u,) = point
        return _scaled_residual(br(u + ctx.L), (-1) ** ctx.r * br(u))

    raise ValueError(f"unknown identity kind {kind!r}")
