"""Combinatorial click kernel D[k, m] for multiplexed on-off detector systems.

The kernel gives the weight with which an m-photon Fock component contributes
to a k-click event of a system of N on-off diodes.  For parameters (tau, sigma)
it is defined by the alternating binomial sum

    D[k, m] = C(N, k) * sum_{j=0..k} C(k, j) (-1)^(k-j) (tau + sigma*j/N)^m

and satisfies the two-term recursion

    D[k, m] = (tau + sigma*k/N) * D[k, m-1]
              + sigma*(N-k+1)/N * D[k-1, m-1]

with D[0, 0] = 1, D[k, 0] = 0 for k > 0 and D[0, m] = tau^m.  In the detector
regime tau = 1 - eta, sigma = eta the rows are conditional click probabilities
and sum to one over k.

The direct sum cancels catastrophically (for k = m the result is smaller than
the largest term by a factor of roughly k! * (sigma / (N*tau + sigma*k))^k),
so three routes are provided:

* ``d_recursive`` -- default path; double precision with compensated
  (error-tracked) accumulation.  Forward stable in the probability regime
  where all mixing coefficients are non-negative.
* ``d_direct`` -- the alternating sum, evaluated with error-free transforms
  (double-double powers, exact splitting of the integer coefficients) and an
  exact final summation.  Test/cross-check path.
* ``d_exact`` -- big-integer rational evaluation.  Validation oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "DSymbolParams",
    "DSymbolTable",
    "d_direct",
    "d_exact",
    "d_recursive",
]

_SPLIT = 134217729.0  # 2**27 + 1, Dekker splitting constant


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a: float) -> tuple[float, float]:
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a: float, b: float) -> tuple[float, float]:
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _dd_mul(xh: float, xl: float, yh: float, yl: float) -> tuple[float, float]:
    p, e = _two_prod(xh, yh)
    e += xh * yl + xl * yh
    s, t = _two_sum(p, e)
    return s, t


def _dd_pow(xh: float, xl: float, n: int) -> tuple[float, float]:
    rh, rl = 1.0, 0.0
    bh, bl = xh, xl
    while n > 0:
        if n & 1:
            rh, rl = _dd_mul(rh, rl, bh, bl)
        n >>= 1
        if n:
            bh, bl = _dd_mul(bh, bl, bh, bl)
    return rh, rl


def _dd_base(tau: float, sigma: float, j: int, n_diodes: int) -> tuple[float, float]:
    """tau + sigma*j/N as a double-double, tracking the division remainder."""
    qh = j / n_diodes
    p, e = _two_prod(qh, float(n_diodes))
    ql = ((j - p) - e) / n_diodes
    # sigma * (qh, ql)
    sh, se = _two_prod(sigma, qh)
    se += sigma * ql
    # + tau
    hi, lo = _two_sum(tau, sh)
    lo += se
    return _two_sum(hi, lo)


@dataclass(frozen=True)
class DSymbolParams:
    """Kernel parameters: N on-off diodes and the exponential weights (tau, sigma)."""

    N: int
    tau: float
    sigma: float

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError(f"need at least one diode, got N={self.N}")
        if not (math.isfinite(self.tau) and math.isfinite(self.sigma)):
            raise ValueError("tau and sigma must be finite")

    @classmethod
    def for_detector(cls, n_diodes: int, eta: float) -> "DSymbolParams":
        """Probability-regime parameters tau = 1 - eta, sigma = eta."""
        return cls(n_diodes, 1.0 - eta, eta)


@dataclass(frozen=True)
class DSymbolTable:
    """Immutable dense table of D[k, m], 0 <= k <= kmax, 0 <= m <= mmax."""

    params: DSymbolParams
    kmax: int
    mmax: int
    values: np.ndarray  # shape (kmax+1, mmax+1), read-only

    def value(self, k: int, m: int) -> float:
        if not (0 <= k <= self.kmax and 0 <= m <= self.mmax):
            raise IndexError(f"(k={k}, m={m}) outside table bounds")
        return float(self.values[k, m])

    def row(self, k: int) -> np.ndarray:
        """Weights D[k, 0..mmax] for a fixed click number k."""
        return self.values[k]


def _check_indices(params: DSymbolParams, k: int, m: int) -> None:
    if k < 0 or m < 0:
        raise ValueError(f"indices must be non-negative, got k={k}, m={m}")
    if k > params.N:
        raise ValueError(f"k={k} exceeds the number of diodes N={params.N}")


def d_direct(params: DSymbolParams, k: int, m: int) -> float:
    """Evaluate D[k, m] by the alternating binomial sum.

    Powers are computed in double-double arithmetic and the integer binomial
    coefficients are split exactly, so the summation itself introduces no
    error beyond the final rounding; this keeps the heavy cancellation of the
    alternating sum under control.
    """
    _check_indices(params, k, m)
    pieces: list[float] = []
    cnk = math.comb(params.N, k)
    for j in range(k + 1):
        coeff = cnk * math.comb(k, j)
        if (k - j) & 1:
            coeff = -coeff
        bh, bl = _dd_base(params.tau, params.sigma, j, params.N)
        ph, pl = _dd_pow(bh, bl, m)
        ch = float(coeff)
        cl = float(coeff - int(ch))
        for c in (ch, cl):
            if c == 0.0:
                continue
            p, e = _two_prod(c, ph)
            pieces.append(p)
            pieces.append(e)
            pieces.append(c * pl)
    return math.fsum(pieces)


def d_exact(
    n_diodes: int,
    tau: Fraction | int | str | float,
    sigma: Fraction | int | str | float,
    k: int,
    m: int,
) -> Fraction:
    """Exact rational evaluation of the direct sum.

    ``tau`` and ``sigma`` are taken as exact rationals; floats are converted
    via their exact binary value, which is what the floating-point routes
    actually operate on.
    """
    params = DSymbolParams(n_diodes, float(Fraction(tau)), float(Fraction(sigma)))
    _check_indices(params, k, m)
    tau_q = Fraction(tau)
    sigma_q = Fraction(sigma)
    total = Fraction(0)
    cnk = math.comb(n_diodes, k)
    for j in range(k + 1):
        base = tau_q + sigma_q * j / n_diodes
        term = cnk * math.comb(k, j) * base**m
        total += -term if (k - j) & 1 else term
    return total


def _v_two_sum(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _v_two_prod(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = a * b
    ac = _SPLIT * a
    ah = ac - (ac - a)
    al = a - ah
    bc = _SPLIT * b
    bh = bc - (bc - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def d_recursive(params: DSymbolParams, kmax: int, mmax: int) -> DSymbolTable:
    """Fill a (kmax+1) x (mmax+1) table of D[k, m] by the two-term recursion.

    Each cell is accumulated with error tracking: the two products carry
    their rounding remainders, which are folded back before the next step.
    """
    if kmax < 0 or mmax < 0:
        raise ValueError("table bounds must be non-negative")
    if kmax > params.N:
        raise ValueError(f"kmax={kmax} exceeds the number of diodes N={params.N}")

    n = params.N
    karr = np.arange(1, kmax + 1, dtype=float)
    ca = params.tau + params.sigma * karr / n
    cb = params.sigma * (n - karr + 1.0) / n

    hi = np.zeros((kmax + 1, mmax + 1))
    lo = np.zeros((kmax + 1, mmax + 1))
    hi[0, 0] = 1.0
    if mmax >= 1:
        hi[0, 1:] = params.tau ** np.arange(1, mmax + 1)
    for m in range(1, mmax + 1):
        if kmax == 0:
            break
        t1h, t1e = _v_two_prod(ca, hi[1:, m - 1])
        t1e += ca * lo[1:, m - 1]
        t2h, t2e = _v_two_prod(cb, hi[:-1, m - 1])
        t2e += cb * lo[:-1, m - 1]
        sh, se = _v_two_sum(t1h, t2h)
        err = se + t1e + t2e
        hi[1:, m], lo[1:, m] = _v_two_sum(sh, err)

    values = hi + lo
    values.flags.writeable = False
    return DSymbolTable(params=params, kmax=kmax, mmax=mmax, values=values)
