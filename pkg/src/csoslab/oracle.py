"""Exact brute-force realization of the quantum space at desk scale: dense
monodromy operators, height-dependent state vectors, partition functions,
transfer-matrix action, local operators, quasi-local (factorizing-basis)
operators and the operator identities reconstructing local observables.

Everything here is assembled directly from the R-matrix, with no closed-form
shortcuts, so it serves as the ground truth for the determinant layer.
Operators are dense 2^N x 2^N complex matrices; the practical cap is N <= 12
and the intended regime is N <= 6.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .elliptic import bracket, require_regular
from .errors import (DegenerateInput, MultiplierNotAdmissible, SingularPoint,
                     SingularTransfer)
from .model import SPIN, LatticeConfig, r_matrix

HARD_SITE_CAP = 12


def site_bit(state: int, site: int, N: int) -> int:
    """Bit of 1-based `site` in a basis index (0 = up, 1 = down)."""
    return (state >> (N - site)) & 1


def state_weight(state: int, N: int) -> int:
    """Total spin (#up - #down) of a computational basis state."""
    return N - 2 * bin(state).count("1")


def sector_indices(N: int, weight: int) -> np.ndarray:
    """Basis indices of the fixed-weight sector, ascending."""
    return np.array([b for b in range(1 << N) if state_weight(b, N) == weight],
                    dtype=int)


def omega_pow(omega: complex, s: complex) -> complex:
    """omega**s through the principal logarithm; used consistently for the
    height-dependent multipliers so oracle and closed forms share a branch."""
    return cmath.exp(complex(s) * cmath.log(complex(omega)))


@dataclass(frozen=True)
class MonodromyOperator:
    kind: str
    u: complex
    s: complex
    matrix: np.ndarray


@dataclass(frozen=True)
class DynamicalState:
    """Height-resolved state: values[k] is the component at height s0 + k.

    direction 'ket' stores column vectors, 'bra' stores row vectors (the
    pairing is bilinear, no conjugation).  multiplier records the omega used
    when the state was built from Bethe data.
    """

    values: tuple
    direction: str
    multiplier: complex = 1.0

    def __post_init__(self):
        if self.direction not in ("ket", "bra"):
            raise ValueError("direction must be 'ket' or 'bra'")


@lru_cache(maxsize=256)
def _monodromy_blocks_raw(u: complex, s: complex, xi: tuple, ctx):
    """Auxiliary-space blocks (A, B, C, D) of the ordered R-matrix product.

    The height argument of the site-j factor is s plus the accumulated spin
    of sites 1..j-1 of the state the factor acts on, realized by conditioning
    on each computational basis state; no operator-valued height is built.
    """
    N = len(xi)
    dim = 1 << N
    full = np.eye(2 * dim, dtype=complex)
    for j in range(1, N + 1):
        factor = np.zeros((2 * dim, 2 * dim), dtype=complex)
        rcache: dict[int, np.ndarray] = {}
        mask = ((1 << (j - 1)) - 1) << (N - j + 1)
        for col in range(2 * dim):
            a_bit, b = col >> N, col & (dim - 1)
            w = (j - 1) - 2 * bin(b & mask).count("1")
            if w not in rcache:
                rcache[w] = r_matrix(u - xi[j - 1], s + w, ctx)
            rm = rcache[w]
            col4 = 2 * a_bit + site_bit(b, j, N)
            base = b & ~(1 << (N - j))
            for row4 in range(4):
                amp = rm[row4, col4]
                if amp == 0:
                    continue
                row = ((row4 >> 1) << N) | base | ((row4 & 1) << (N - j))
                factor[row, col] += amp
        full = factor @ full
    blocks = (full[:dim, :dim], full[:dim, dim:], full[dim:, :dim], full[dim:, dim:])
    for blk in blocks:
        blk.flags.writeable = False
    return blocks


def _monodromy_blocks(u: complex, s: complex, lat: LatticeConfig):
    return _monodromy_blocks_raw(u, s, lat.xi, lat.ctx)


def monodromy_entry(kind: str, u: complex, s: complex,
                    lat: LatticeConfig) -> MonodromyOperator:
    """One auxiliary-space block (A, B, C or D) of the monodromy matrix."""
    if lat.N > HARD_SITE_CAP:
        raise DegenerateInput(f"N = {lat.N} exceeds the dense-oracle cap {HARD_SITE_CAP}")
    try:
        idx = "ABCD".index(kind)
    except ValueError:
        raise ValueError(f"kind must be one of A, B, C, D, got {kind!r}") from None
    blocks = _monodromy_blocks(complex(u), complex(s), lat)
    return MonodromyOperator(kind=kind, u=u, s=s, matrix=blocks[idx])


def monodromy_full(u: complex, s: complex, lat: LatticeConfig) -> np.ndarray:
    """Full 2*2^N monodromy (auxiliary space outermost), for RTT checks."""
    a, b, c, d = _monodromy_blocks(complex(u), complex(s), lat)
    return np.block([[a, b], [c, d]])


def vacuum(lat: LatticeConfig, down: bool = False) -> np.ndarray:
    vec = np.zeros(1 << lat.N, dtype=complex)
    vec[(1 << lat.N) - 1 if down else 0] = 1.0
    return vec


def phi_weight(s: complex, omega: complex, n: int, lat: LatticeConfig,
               dual: bool = False) -> complex:
    """Height weight of a Bethe-type state: omega^s prod_j [1]/[s-j], or its
    dual partner omega^(-s) prod_j [s+j]/[1]."""
    br = lambda x: bracket(x, 0, 1, lat.ctx)
    one = br(1)
    if dual:
        out = omega_pow(omega, -s)
        for j in range(n):
            out *= br(s + j) / one
        return out
    out = omega_pow(omega, s)
    for j in range(1, n + 1):
        out *= one / require_regular(br(s - j), f"[s-{j}]")
    return out


def check_multiplier(omega: complex, lat: LatticeConfig, tol: float = 1e-10) -> None:
    defect = abs((-1) ** (lat.ctx.r * lat.n) * omega ** lat.ctx.L - 1.0)
    if defect > tol:
        raise MultiplierNotAdmissible(
            f"(-1)^(rn) omega^L differs from 1 by {defect:.2e}")


def admissible_multipliers(lat: LatticeConfig) -> list[complex]:
    """The L multipliers compatible with height periodicity."""
    r, n, L = lat.ctx.r, lat.n, lat.ctx.L
    base = cmath.exp(1j * cmath.pi * r * n / L)
    return [base * cmath.exp(2j * cmath.pi * ell / L) for ell in range(L)]


def bethe_state(direction: str, v, omega: complex, lat: LatticeConfig) -> DynamicalState:
    """Bethe-type state (ket) or its dual (bra) for arbitrary parameters v.

    ket:  s -> phi(s) B(v_1; s) B(v_2; s-1) ... B(v_n; s-n+1) |0>
    bra:  s -> <0| C(v_n; s-n) ... C(v_1; s-1) phi_dual(s)
    """
    check_multiplier(omega, lat)
    v = [complex(x) for x in v]
    if len(v) != lat.n:
        raise DegenerateInput(f"expected {lat.n} spectral parameters, got {len(v)}")
    values = []
    for s in lat.heights():
        if direction == "ket":
            vec = vacuum(lat)
            for j in range(lat.n, 0, -1):
                vec = monodromy_entry("B", v[j - 1], s - j + 1, lat).matrix @ vec
            vec = phi_weight(s, omega, lat.n, lat) * vec
        else:
            vec = vacuum(lat)
            for j in range(lat.n, 0, -1):
                vec = vec @ monodromy_entry("C", v[j - 1], s - j, lat).matrix
            vec = phi_weight(s, omega, lat.n, lat, dual=True) * vec
        values.append(vec)
    return DynamicalState(values=tuple(values), direction=direction, multiplier=omega)


def dyn_pair(bra: DynamicalState, ket: DynamicalState, lat: LatticeConfig,
             operator: np.ndarray | None = None) -> complex:
    """Bilinear pairing (1/L) sum_s <bra(s)| Op |ket(s)> over one height period."""
    if bra.direction != "bra" or ket.direction != "ket":
        raise ValueError("dyn_pair expects (bra, ket)")
    total = 0j
    for k in range(lat.ctx.L):
        left = bra.values[k]
        right = ket.values[k] if operator is None else operator @ ket.values[k]
        total += left @ right
    return total / lat.ctx.L


def random_dynamical_state(lat: LatticeConfig, rng, direction: str = "ket") -> DynamicalState:
    """Random state supported on the physical weight sector at every height."""
    idx = sector_indices(lat.N, lat.N - 2 * lat.n)
    values = []
    for _ in range(lat.ctx.L):
        vec = np.zeros(1 << lat.N, dtype=complex)
        vec[idx] = rng.standard_normal(len(idx)) + 1j * rng.standard_normal(len(idx))
        values.append(vec)
    return DynamicalState(values=tuple(values), direction=direction)


def partial_scalar_product_bf(u, v, s: complex, lat: LatticeConfig) -> complex:
    """Height-s overlap of a C-string with a B-string, by direct contraction."""
    n = lat.n
    if len(u) != n or len(v) != n:
        raise DegenerateInput(f"expected two sets of {n} parameters")
    ket = vacuum(lat)
    for j in range(n, 0, -1):
        ket = monodromy_entry("B", complex(v[j - 1]), s - j + 1, lat).matrix @ ket
    bra = vacuum(lat)
    for j in range(n, 0, -1):
        bra = bra @ monodromy_entry("C", complex(u[j - 1]), s - j, lat).matrix
    return complex(bra @ ket)


def partition_function_bf(u, xi, s: complex, ctx) -> complex:
    """Domain-wall partition function on an NxN lattice by direct contraction:
    N raising operators taking the all-down state to the all-up state."""
    N = len(u)
    if len(xi) != N:
        raise DegenerateInput("need as many inhomogeneities as spectral parameters")
    xi = tuple(complex(x) for x in xi)
    vec = np.zeros(1 << N, dtype=complex)
    vec[(1 << N) - 1] = 1.0
    for j in range(1, N + 1):
        c_block = _monodromy_blocks_raw(complex(u[j - 1]), complex(s + N - j), xi, ctx)[2]
        vec = c_block @ vec
    return complex(vec[0])


def transfer_apply(u: complex, psi: DynamicalState, kappa: complex,
                   lat: LatticeConfig) -> DynamicalState:
    """Action of the (twisted) transfer operator: weighted A/D blocks with the
    height argument stepping by one, taken modulo the period."""
    L = lat.ctx.L
    out = []
    if psi.direction == "ket":
        for k in range(L):
            s = lat.s0 + k
            up = monodromy_entry("A", u, s, lat).matrix @ psi.values[(k + 1) % L]
            dn = monodromy_entry("D", u, s, lat).matrix @ psi.values[(k - 1) % L]
            out.append(up + kappa * dn)
    else:
        for k in range(L):
            s = lat.s0 + k
            up = psi.values[(k - 1) % L] @ monodromy_entry("A", u, lat.s0 + (k - 1) % L, lat).matrix
            dn = psi.values[(k + 1) % L] @ monodromy_entry("D", u, lat.s0 + (k + 1) % L, lat).matrix
            out.append(up + kappa * dn)
    return DynamicalState(values=tuple(out), direction=psi.direction,
                          multiplier=psi.multiplier)


def local_operator(op: str, site: int, lat: LatticeConfig) -> np.ndarray:
    """Diagonal single-site operator on the full space (E_pp, E_mm, sigma_z)."""
    dim = 1 << lat.N
    diag = np.empty(dim, dtype=complex)
    for b in range(dim):
        up = site_bit(b, site, lat.N) == 0
        if op == "E_pp":
            diag[b] = 1.0 if up else 0.0
        elif op == "E_mm":
            diag[b] = 0.0 if up else 1.0
        elif op == "sigma_z":
            diag[b] = 1.0 if up else -1.0
        else:
            raise ValueError(f"unknown local operator {op!r}")
    return np.diag(diag)


def local_matrix_element_bf(op: str, site: int, bra: DynamicalState,
                            ket: DynamicalState, lat: LatticeConfig) -> complex:
    """(1/L) sum_s <bra(s)| Op_site |ket(s)> for a weight-preserving operator."""
    if not 1 <= site <= lat.N:
        raise ValueError(f"site must lie in 1..{lat.N}")
    return dyn_pair(bra, ket, lat, operator=local_operator(op, site, lat))


def f_basis_operator(kind: str, u: complex, s: complex, lat: LatticeConfig) -> np.ndarray:
    """Quasi-local lowering/raising operators of the factorizing basis.

    B_tilde carries height-operator prefactors: the global one is evaluated on
    the output state (one flip below the input weight); the per-term factor
    uses the spins of the untouched sites, which commute with the flip.
    """
    N, ctx, xi = lat.N, lat.ctx, lat.xi
    br = lambda x: bracket(x, 0, 1, ctx)
    one = br(1)
    dim = 1 << N
    out = np.zeros((dim, dim), dtype=complex)
    for b in range(dim):
        w_in = state_weight(b, N)
        for i in range(1, N + 1):
            bit = site_bit(b, i, N)
            if kind == "B_tilde":
                if bit != 0:
                    continue  # needs an up spin to lower
                w_other = w_in - 1
                term = (one * br(s + w_other + u - xi[i - 1])
                        / (require_regular(br(s + w_other), "[s+h]")
                           * require_regular(br(u - xi[i - 1] + 1), "[u-xi+1]")))
                term *= br(s - 1) / require_regular(br(s + w_in - 2), "[s+h]")
                target = b | (1 << (N - i))
            elif kind == "C_tilde":
                if bit != 1:
                    continue  # needs a down spin to raise
                term = (one * br(s - u + xi[i - 1])
                        / (require_regular(br(s), "[s]")
                           * require_regular(br(u - xi[i - 1] + 1), "[u-xi+1]")))
                target = b & ~(1 << (N - i))
            else:
                raise ValueError(f"unknown operator kind {kind!r}")
            for j in range(1, N + 1):
                if j == i:
                    continue
                up_j = site_bit(b, j, N) == 0
                if kind == "B_tilde":
                    if up_j:
                        term *= br(u - xi[j - 1]) / br(u - xi[j - 1] + 1)
                    else:
                        term *= br(xi[j - 1] - xi[i - 1] + 1) / br(xi[j - 1] - xi[i - 1])
                else:
                    if up_j:
                        term *= (br(u - xi[j - 1]) / br(u - xi[j - 1] + 1)
                                 * br(xi[i - 1] - xi[j - 1] + 1) / br(xi[i - 1] - xi[j - 1]))
            out[target, b] += term
    return out


def basis_state_with_downs(sites, lat: LatticeConfig) -> int:
    """Index of the basis state whose listed 1-based sites carry down spins."""
    b = 0
    for site in sites:
        b |= 1 << (lat.N - site)
    return b


# ---------------------------------------------------------------------------
# operators on the height-resolved space (functions of s with values in the
# fixed physical weight sector)
# ---------------------------------------------------------------------------

def fun_space_indices(lat: LatticeConfig) -> np.ndarray:
    return sector_indices(lat.N, lat.N - 2 * lat.n)


def transfer_fun_operator(u: complex, kappa: complex, lat: LatticeConfig) -> np.ndarray:
    """(Twisted) transfer operator as a dense matrix on the L * dim-sector
    space of height-resolved states."""
    idx = fun_space_indices(lat)
    d0, L = len(idx), lat.ctx.L
    big = np.zeros((L * d0, L * d0), dtype=complex)
    for k in range(L):
        s = lat.s0 + k
        a = monodromy_entry("A", u, s, lat).matrix[np.ix_(idx, idx)]
        d = monodromy_entry("D", u, s, lat).matrix[np.ix_(idx, idx)]
        big[k * d0:(k + 1) * d0, ((k + 1) % L) * d0:((k + 1) % L + 1) * d0] += a
        big[k * d0:(k + 1) * d0, ((k - 1) % L) * d0:((k - 1) % L + 1) * d0] += kappa * d
    return big


def lift_local_fun(op: np.ndarray, lat: LatticeConfig) -> np.ndarray:
    """Height-independent local operator lifted to the height-resolved space."""
    idx = fun_space_indices(lat)
    blk = op[np.ix_(idx, idx)]
    L = lat.ctx.L
    return np.kron(np.eye(L), blk)


def inverse_problem_residual(site: int, alpha: int, beta: int,
                             lat: LatticeConfig) -> float:
    """Max-norm residual of the local-operator reconstruction through the
    monodromy blocks, restricted to the weight-preserving case alpha == beta
    where the height-shift factor degenerates to the identity."""
    if alpha != beta:
        raise DegenerateInput("only the weight-preserving case alpha == beta is "
                              "defined on the height-resolved physical space")
    if not 1 <= site <= lat.N:
        raise ValueError(f"site must lie in 1..{lat.N}")
    idx = fun_space_indices(lat)
    d0, L = len(idx), lat.ctx.L
    kind = "A" if alpha == 1 else "D"

    def entry_fun(u):
        big = np.zeros((L * d0, L * d0), dtype=complex)
        shift = 1 if kind == "A" else -1
        for k in range(L):
            s = lat.s0 + k
            blk = monodromy_entry(kind, u, s, lat).matrix[np.ix_(idx, idx)]
            kk = (k + shift) % L
            big[k * d0:(k + 1) * d0, kk * d0:(kk + 1) * d0] += blk
        return big

    rhs = np.eye(L * d0, dtype=complex)
    for k in range(1, site):
        rhs = rhs @ transfer_fun_operator(lat.xi[k - 1], 1.0, lat)
    rhs = rhs @ entry_fun(lat.xi[site - 1])
    for k in range(site, 0, -1):
        t_k = transfer_fun_operator(lat.xi[k - 1], 1.0, lat)
        if np.linalg.cond(t_k) > 1e12:
            raise SingularTransfer(f"transfer operator at xi_{k} is numerically singular")
        rhs = np.linalg.solve(t_k.T, rhs.T).T  # rhs @ inv(t_k)
    op = "E_pp" if alpha == 1 else "E_mm"
    lhs = lift_local_fun(local_operator(op, site, lat), lat)
    return float(np.max(np.abs(lhs - rhs)))


def generating_function_bf(kappa: complex, m: int, bra: DynamicalState,
                           ket: DynamicalState, lat: LatticeConfig) -> complex:
    """Normalized expectation of the product over sites 1..m of the diagonal
    projector combination (up + kappa * down), by direct contraction."""
    if not 1 <= m <= lat.N:
        raise ValueError(f"m must lie in 1..{lat.N}")
    dim = 1 << lat.N
    diag = np.ones(dim, dtype=complex)
    for b in range(dim):
        for j in range(1, m + 1):
            if site_bit(b, j, lat.N):
                diag[b] *= kappa
    q_op = np.diag(diag)
    norm = dyn_pair(bra, ket, lat)
    require_regular(norm, "state normalization")
    return dyn_pair(bra, ket, lat, operator=q_op) / norm


def rtt_residual(u1: complex, u2: complex, s: complex, lat: LatticeConfig) -> float:
    """Max-norm residual of the quadratic exchange relation between two full
    monodromy matrices, with conditioned height shifts on both sides."""
    N = lat.N
    dim = 1 << N
    big = 4 * dim

    def embed_T(u, aux: int, conditioned: bool, s_base):
        """Monodromy on (aux space `aux`, quantum space); when conditioned,
        the height is shifted by the spin of the other auxiliary space."""
        out = np.zeros((big, big), dtype=complex)
        for other_bit in (0, 1):
            s_eff = s_base + SPIN[other_bit] if conditioned else s_base
            a, b, c, d = _monodromy_blocks(complex(u), complex(s_eff), lat)
            t2 = np.block([[a, b], [c, d]])
            for a_in in (0, 1):
                for a_out in (0, 1):
                    blk = t2[a_out * dim:(a_out + 1) * dim, a_in * dim:(a_in + 1) * dim]
                    if aux == 0:
                        row0 = (a_out << 1) | other_bit
                        col0 = (a_in << 1) | other_bit
                    else:
                        row0 = (other_bit << 1) | a_out
                        col0 = (other_bit << 1) | a_in
                    out[row0 * dim:(row0 + 1) * dim, col0 * dim:(col0 + 1) * dim] += blk
        return out

    def embed_R12(u, s_eff_fn):
        """R on the two auxiliary spaces, height possibly conditioned on the
        total quantum weight."""
        out = np.zeros((big, big), dtype=complex)
        rcache = {}
        for b in range(dim):
            w = state_weight(b, N)
            if w not in rcache:
                rcache[w] = r_matrix(u, s_eff_fn(w), lat.ctx)
            rm = rcache[w]
            for col4 in range(4):
                for row4 in range(4):
                    amp = rm[row4, col4]
                    if amp == 0:
                        continue
                    out[row4 * dim + b, col4 * dim + b] += amp
        return out

    u12 = u1 - u2
    lhs = (embed_R12(u12, lambda w: s + w)
           @ embed_T(u1, 0, False, s)
           @ embed_T(u2, 1, True, s))
    rhs = (embed_T(u2, 1, False, s)
           @ embed_T(u1, 0, True, s)
           @ embed_R12(u12, lambda w: s))
    return float(np.max(np.abs(lhs - rhs)))
