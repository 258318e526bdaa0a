"""Twisted Bethe systems: residuals with analytic Jacobians, damped-Newton
path-following in the twist parameter, the small-twist seed census over all
(site subset, multiplier branch) pairs, transfer eigenvalues, and the
auxiliary function whose root-gradient determinant gives state norms.

The solver works on the rational (product) form of the equations; elliptic
logarithms are multivalued and no branch convention is imposed anywhere.
"""

from __future__ import annotations

import cmath
import itertools
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .elliptic import bracket, require_regular
from .errors import (CensusIncompleteWarning, DegenerateInput, NoConvergence,
                     NonConvergent, PathCollision, SingularPoint)
from .model import LatticeConfig
from .oracle import admissible_multipliers, check_multiplier

ADMISSIBLE_TOL = 1e-8
OFF_DIAGONAL_TOL = 1e-8
COLLISION_TOL = 1e-6
SEED_KAPPA = 1e-3


@dataclass(frozen=True)
class BetheSolution:
    """Converged root set of the twisted Bethe system, with classification."""

    roots: tuple
    omega: complex
    kappa: complex
    residual_norm: float
    admissible: bool
    off_diagonal: bool
    seed_label: tuple | None = None  # (site subset, multiplier branch)

    @property
    def n(self) -> int:
        return len(self.roots)


def _products(v, j, lat):
    """The two exchange products entering equation j, at the current roots."""
    br = lambda x: bracket(x, 0, 1, lat.ctx)
    p = q = 1.0 + 0j
    for l in range(len(v)):
        if l == j:
            continue
        p *= br(v[l] - v[j] + 1) / require_regular(br(v[l] - v[j]), "[v_l - v_j]")
        q *= br(v[j] - v[l] + 1) / require_regular(br(v[j] - v[l]), "[v_j - v_l]")
    return p, q


def bethe_residual(v, omega: complex, kappa: complex, lat: LatticeConfig) -> list:
    """Component j: a(v_j) prod_(l!=j) [v_l-v_j+1]/[v_l-v_j]
    - sign * kappa * omega^-2 * d(v_j) prod_(l!=j) [v_j-v_l+1]/[v_j-v_l]."""
    v = [complex(x) for x in v]
    coef = lat.sign_raleph * kappa * omega ** -2
    out = []
    for j in range(len(v)):
        p, q = _products(v, j, lat)
        out.append(lat.a_function(v[j]) * p - coef * lat.d_function(v[j]) * q)
    return out


def _residual_jacobian(v, omega, kappa, lat):
    """Residual vector and its analytic Jacobian in the roots."""
    n = len(v)
    ctx = lat.ctx
    br = lambda x, d=0: bracket(x, d, 1, ctx)
    coef = lat.sign_raleph * kappa * omega ** -2
    F = np.empty(n, dtype=complex)
    J = np.zeros((n, n), dtype=complex)
    for j in range(n):
        p, q = _products(v, j, lat)
        a_j = lat.a_function(v[j])
        d_j = lat.d_function(v[j])
        F[j] = a_j * p - coef * d_j * q
        # derivative w.r.t. v_j
        dp = dq = 0j
        for l in range(n):
            if l == j:
                continue
            dp += (-br(v[l] - v[j] + 1, 1) / br(v[l] - v[j] + 1)
                   + br(v[l] - v[j], 1) / br(v[l] - v[j]))
            dq += (br(v[j] - v[l] + 1, 1) / br(v[j] - v[l] + 1)
                   - br(v[j] - v[l], 1) / br(v[j] - v[l]))
        J[j, j] = (a_j * lat.a_function(v[j], deriv=True) * p + a_j * p * dp
                   - coef * d_j * (lat.d_function(v[j], deriv=True) * q + q * dq))
        for m in range(n):
            if m == j:
                continue
            dpm = (br(v[m] - v[j] + 1, 1) / br(v[m] - v[j] + 1)
                   - br(v[m] - v[j], 1) / br(v[m] - v[j]))
            dqm = (-br(v[j] - v[m] + 1, 1) / br(v[j] - v[m] + 1)
                   + br(v[j] - v[m], 1) / br(v[j] - v[m]))
            J[j, m] = a_j * p * dpm - coef * d_j * q * dqm
    return F, J


def scaled_residual_norm(v, omega, kappa, lat) -> float:
    """Largest residual component, scaled by the magnitude of the two sides."""
    coef = lat.sign_raleph * kappa * omega ** -2
    worst = 0.0
    for j in range(len(v)):
        p, q = _products(v, j, lat)
        lhs = lat.a_function(v[j]) * p
        rhs = coef * lat.d_function(v[j]) * q
        scale = max(abs(lhs) + abs(rhs), 1e-30)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


_NUMERIC_FAILURES = (SingularPoint, NonConvergent, OverflowError)


def _newton(v, omega, kappa, lat, tol=1e-12, max_iter=40):
    """Damped Newton iteration; returns refined roots or None.

    Stagnation at the roundoff floor counts as convergence provided the
    scaled residual is below 1e-10."""
    v = np.array([complex(x) for x in v])
    for _ in range(max_iter):
        try:
            if scaled_residual_norm(v, omega, kappa, lat) < tol:
                return v
            F, J = _residual_jacobian(v, omega, kappa, lat)
        except _NUMERIC_FAILURES:
            return None
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        fnorm = np.max(np.abs(F))
        lam, improved = 1.0, False
        for _ in range(10):
            cand = v + lam * step
            try:
                f_new = bethe_residual(cand, omega, kappa, lat)
            except _NUMERIC_FAILURES:
                lam /= 2
                continue
            if np.max(np.abs(f_new)) < fnorm:
                v, improved = cand, True
                break
            lam /= 2
        if not improved:
            break
    try:
        return v if scaled_residual_norm(v, omega, kappa, lat) < 1e-10 else None
    except _NUMERIC_FAILURES:
        return None


def classify(v, omega, kappa, lat, seed_label=None) -> BetheSolution:
    """Wrap refined roots with admissibility and separation flags."""
    br = lambda x: bracket(x, 0, 1, lat.ctx)
    v = tuple(complex(x) for x in v)
    admissible = True
    for vj in v:
        for x in lat.xi:
            if abs(br(vj - x)) < ADMISSIBLE_TOL:
                admissible = False
        for vl in v:
            if abs(br(vj - vl + 1)) < ADMISSIBLE_TOL:
                admissible = False
    off_diag = True
    for i in range(len(v)):
        for j in range(i + 1, len(v)):
            if abs(br(v[i] - v[j])) < OFF_DIAGONAL_TOL:
                off_diag = False
    return BetheSolution(
        roots=v, omega=complex(omega), kappa=complex(kappa),
        residual_norm=scaled_residual_norm(v, omega, kappa, lat),
        admissible=admissible, off_diagonal=off_diag, seed_label=seed_label)


def seed_roots(subset, omega: complex, lat: LatticeConfig,
               kappa: complex = SEED_KAPPA):
    """First-order small-twist roots for one (site subset, multiplier) pair.

    Each root sits a unit below its inhomogeneity, displaced linearly in the
    twist; the slope follows from expanding the equations about that point.
    """
    if lat.N != 2 * lat.n:
        raise DegenerateInput("the seed census assumes N = 2n")
    ctx = lat.ctx
    br = lambda x: bracket(x, 0, 1, ctx)
    d0 = bracket(0, 1, 1, ctx)
    roots = []
    for j, ij in enumerate(subset):
        slope = -(omega ** -2) * br(1) / d0
        for k in range(1, lat.N + 1):
            if k == ij:
                continue
            slope *= br(lat.xi[ij - 1] - lat.xi[k - 1] - 1) / br(lat.xi[ij - 1] - lat.xi[k - 1])
        for il in subset:
            if il == ij:
                continue
            slope *= br(lat.xi[ij - 1] - lat.xi[il - 1] + 1) / br(lat.xi[ij - 1] - lat.xi[il - 1] - 1)
        roots.append(lat.xi[ij - 1] - 1 + kappa * slope)
    return roots


def solve_bethe(seed: BetheSolution, kappa_target: complex, lat: LatticeConfig,
                steps: int = 200) -> BetheSolution:
    """Continue a converged solution along a straight twist segment.

    Adaptive stepping: initial fraction 0.05 of the segment, halved whenever
    Newton fails to reconverge, floored at 1e-4.  A path on which two roots
    come closer than the separation threshold is abandoned (PathCollision)
    rather than perturbed.
    """
    if seed.residual_norm > 1e-8:
        raise DegenerateInput(f"seed residual {seed.residual_norm:.2e} too large")
    kappa_target = complex(kappa_target)
    if kappa_target == seed.kappa:
        return seed
    br = lambda x: bracket(x, 0, 1, lat.ctx)
    v = np.array(seed.roots)
    t, dt = 0.0, 0.05
    k0, k1 = seed.kappa, kappa_target
    used = 0
    while t < 1.0:
        if used >= steps:
            raise NoConvergence(f"step budget {steps} exhausted at t={t:.3f}")
        t_next = min(1.0, t + dt)
        kappa = k0 + t_next * (k1 - k0)
        refined = _newton(v, seed.omega, kappa, lat)
        if refined is None:
            dt /= 2
            if dt < 1e-4:
                raise NoConvergence(
                    f"continuation stalled at t={t:.4f} (kappa={k0 + t * (k1 - k0):.4f})")
            continue
        for i in range(len(refined)):
            for j in range(i + 1, len(refined)):
                if abs(br(refined[i] - refined[j])) < COLLISION_TOL:
                    raise PathCollision(
                        f"roots {i + 1} and {j + 1} collided at kappa={kappa:.4f}")
        v, t = refined, t_next
        used += 1
        dt = min(2 * dt, 0.25)
    return classify(v, seed.omega, kappa_target, lat, seed_label=seed.seed_label)


def lattice_reduced_distance(ua: complex, ub: complex, lat: LatticeConfig) -> float:
    """|ua - ub| after removing the nearest combination of the two bracket
    periods 1/eta and tau/eta."""
    tau = complex(lat.ctx.tau)
    dz = lat.ctx.eta * (complex(ua) - complex(ub))
    m2 = round(dz.imag / tau.imag)
    dz -= m2 * tau
    dz -= round(dz.real)
    return abs(dz) / lat.ctx.eta


def _same_root_set(a, b, lat) -> bool:
    """Set equality modulo the period lattice (greedy matching)."""
    if len(a) != len(b):
        return False
    remaining = list(b)
    for ua in a:
        hit = None
        for idx, ub in enumerate(remaining):
            if lattice_reduced_distance(ua, ub, lat) < 1e-6:
                hit = idx
                break
        if hit is None:
            return False
        remaining.pop(hit)
    return True


def enumerate_solutions(kappa: complex, lat: LatticeConfig) -> list[BetheSolution]:
    """Seed-and-continue census over every (subset, multiplier) pair.

    Returns the deduplicated admissible off-diagonal solutions at the target
    twist; warns (does not raise) when the count falls short of the
    completeness number L * binom(N, n).
    """
    if lat.N != 2 * lat.n:
        raise DegenerateInput("the census assumes N = 2n")
    if lat.ctx.L % 2 == 0 or lat.ctx.L <= lat.n:
        raise DegenerateInput("the census assumes odd L with L > n")
    expected = lat.ctx.L * math.comb(lat.N, lat.n)
    found: list[BetheSolution] = []
    failures = []
    for ell, omega in enumerate(admissible_multipliers(lat)):
        for subset in itertools.combinations(range(1, lat.N + 1), lat.n):
            label = (subset, ell)
            roots0 = seed_roots(subset, omega, lat)
            refined = _newton(np.array(roots0), omega, SEED_KAPPA, lat)
            if refined is None:
                failures.append((label, "seed refinement failed"))
                continue
            seed = classify(refined, omega, SEED_KAPPA, lat, seed_label=label)
            try:
                sol = solve_bethe(seed, kappa, lat)
            except (NoConvergence, PathCollision) as exc:
                failures.append((label, str(exc)))
                continue
            if not (sol.admissible and sol.off_diagonal):
                failures.append((label, "solution inadmissible or diagonal"))
                continue
            if any(_same_root_set(sol.roots, other.roots, lat) for other in found):
                continue
            found.append(sol)
    if len(found) < expected:
        warnings.warn(
            f"census found {len(found)} of {expected} solutions "
            f"(failures: {failures})", CensusIncompleteWarning)
    return found


def eigenvalue_tau(u: complex, sol: BetheSolution, lat: LatticeConfig) -> complex:
    """Transfer eigenvalue at spectral point u for a converged solution."""
    br = lambda x: bracket(x, 0, 1, lat.ctx)
    term_a = sol.omega * lat.a_function(u)
    for vl in sol.roots:
        term_a *= br(vl - u + 1) / require_regular(br(vl - u), "[v_l - u]")
    term_d = lat.sign_raleph * sol.kappa / sol.omega * lat.d_function(u)
    for vl in sol.roots:
        term_d *= br(u - vl + 1) / require_regular(br(u - vl), "[u - v_l]")
    return term_a + term_d


def y_function(u: complex, sol: BetheSolution, lat: LatticeConfig):
    """Value of a(u) prod [v_l-u+1] + sign kappa omega^-2 d(u) prod [v_l-u-1]
    and its gradient in the roots (second-slot derivatives only).

    The sign factor (-1)^(r*aleph) multiplying the twisted half keeps the
    function vanishing at the roots for every sector, matching the equations
    solved here; at N = 2n it is one and the textbook form is recovered.
    """
    br = lambda x, d=0: bracket(x, d, 1, lat.ctx)
    coef = lat.sign_raleph * sol.kappa * sol.omega ** -2
    prod_p = [br(vl - u + 1) for vl in sol.roots]
    prod_m = [br(vl - u - 1) for vl in sol.roots]
    a_u, d_u = lat.a_function(u), lat.d_function(u)
    all_p = np.prod(prod_p) if prod_p else 1.0
    all_m = np.prod(prod_m) if prod_m else 1.0
    value = a_u * all_p + coef * d_u * all_m
    grads = []
    for k in range(len(sol.roots)):
        rest_p = np.prod([prod_p[l] for l in range(len(prod_p)) if l != k]) \
            if len(prod_p) > 1 else 1.0
        rest_m = np.prod([prod_m[l] for l in range(len(prod_m)) if l != k]) \
            if len(prod_m) > 1 else 1.0
        grads.append(a_u * br(sol.roots[k] - u + 1, 1) * rest_p
                     + coef * d_u * br(sol.roots[k] - u - 1, 1) * rest_m)
    return complex(value), grads


def y_jacobian_full(sol: BetheSolution, lat: LatticeConfig) -> np.ndarray:
    """Jacobian of the map v -> (Y(v_j; v))_j, i.e. the root-gradient matrix
    with the first-slot derivative folded into the diagonal."""
    br = lambda x, d=0: bracket(x, d, 1, lat.ctx)
    n = len(sol.roots)
    coef = lat.sign_raleph * sol.kappa * sol.omega ** -2
    out = np.zeros((n, n), dtype=complex)
    for j in range(n):
        u = sol.roots[j]
        _, grads = y_function(u, sol, lat)
        for k in range(n):
            out[j, k] = grads[k]
        # d/du of the value at fixed roots
        prod_p = [br(vl - u + 1) for vl in sol.roots]
        prod_m = [br(vl - u - 1) for vl in sol.roots]
        a_u, d_u = lat.a_function(u), lat.d_function(u)
        dp = 0j
        dm = 0j
        for k in range(n):
            rest_p = np.prod([prod_p[l] for l in range(n) if l != k]) if n > 1 else 1.0
            rest_m = np.prod([prod_m[l] for l in range(n) if l != k]) if n > 1 else 1.0
            dp += -br(sol.roots[k] - u + 1, 1) * rest_p
            dm += -br(sol.roots[k] - u - 1, 1) * rest_m
        du_term = (lat.a_function(u, deriv=True) * a_u * np.prod(prod_p)
                   + a_u * dp
                   + coef * (d_u * lat.d_function(u, deriv=True) * np.prod(prod_m)
                             + d_u * dm))
        out[j, j] += du_term
    return out
