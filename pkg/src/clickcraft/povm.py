"""Click-counting POVM elements and statistics for N-diode detector systems.

A light field split equally onto N on-off diodes with quantum efficiency eta
produces k in {0..N} simultaneous clicks.  All POVM elements are diagonal in
the Fock basis with weights given by the click kernel in the detector regime,

    Pi_k = sum_m D[k, m](tau=1-eta, sigma=eta) |m><m| ,

and sum to the identity.  The photoelectric (Poissonian) counting POVM

    P_k = sum_{m>=k} C(m, k) eta^k (1-eta)^(m-k) |m><m|

is the infinite-N limit; ``operator_norm_distance`` bounds the deviation
|tr(rho Pi_k) - tr(rho P_k)| <= ||P_k - Pi_k||_op for any state (both elements
are diagonal in a common basis, so the operator norm is a sup over m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsymbol import DSymbolParams, DSymbolTable, d_recursive

__all__ = [
    "ClickDistribution",
    "DetectorConfig",
    "DiagonalPOVMElement",
    "OperatorNormDistance",
    "click_kernel_table",
    "click_povm_element",
    "click_statistics",
    "operator_norm_distance",
    "photoelectric_element",
]


@dataclass(frozen=True)
class DetectorConfig:
    """One click-detector system: N on-off diodes of quantum efficiency eta."""

    N: int
    eta: float

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError(f"need at least one diode, got N={self.N}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"quantum efficiency must lie in [0, 1], got {self.eta}")


@dataclass(frozen=True)
class ClickDistribution:
    """Probabilities of k = 0..N clicks; entries in [0, 1], summing to one."""

    probs: np.ndarray
    det: DetectorConfig


@dataclass(frozen=True)
class DiagonalPOVMElement:
    """Fock-diagonal POVM element: weights over m = 0..cutoff-1.

    ``kind`` is "click" (finite-N element, weights vanish for m < k) or
    "photoelectric" (Poissonian counting element, defined for every k >= 0).
    """

    weights: np.ndarray
    kind: str
    k: int
    eta: float
    det: DetectorConfig | None = None


def click_kernel_table(det: DetectorConfig, kmax: int, mmax: int) -> DSymbolTable:
    """Kernel table in the detector regime tau = 1 - eta, sigma = eta."""
    return d_recursive(DSymbolParams.for_detector(det.N, det.eta), kmax, mmax)


def click_povm_element(det: DetectorConfig, k: int, cutoff: int) -> DiagonalPOVMElement:
    """Diagonal weights of Pi_k on the truncated Fock basis |0..cutoff-1>."""
    if not 0 <= k <= det.N:
        raise ValueError(f"click number k={k} outside 0..{det.N}")
    if cutoff < 1:
        raise ValueError("cutoff must be positive")
    table = click_kernel_table(det, k, cutoff - 1)
    weights = table.row(k).copy()
    weights.flags.writeable = False
    return DiagonalPOVMElement(weights=weights, kind="click", k=k, eta=det.eta, det=det)


def click_statistics(photon_dist: np.ndarray, det: DetectorConfig) -> ClickDistribution:
    """Click-counting distribution c_k = sum_m D[k, m] p_m of a photon distribution."""
    p = np.asarray(photon_dist, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("photon distribution must be a non-empty vector")
    if np.any(p < 0):
        raise ValueError("photon distribution has negative entries")
    if p.sum() > 1.0 + 1e-10:
        raise ValueError(f"photon distribution sums to {p.sum()} > 1")
    table = click_kernel_table(det, det.N, p.size - 1)
    probs = table.values @ p
    probs.flags.writeable = False
    return ClickDistribution(probs=probs, det=det)


def photoelectric_element(eta: float, k: int, cutoff: int) -> DiagonalPOVMElement:
    """Poissonian counting element P_k: weights C(m,k) eta^k (1-eta)^(m-k).

    At eta = 1 this is the k-photon projector.  Defined for every k >= 0;
    only k <= N has a click-counting counterpart.
    """
    if k < 0:
        raise ValueError("click number must be non-negative")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"quantum efficiency must lie in [0, 1], got {eta}")
    if cutoff < 1:
        raise ValueError("cutoff must be positive")
    weights = np.zeros(cutoff)
    for m in range(k, cutoff):
        if eta == 1.0:
            weights[m] = 1.0 if m == k else 0.0
        else:
            weights[m] = math.comb(m, k) * eta**k * (1.0 - eta) ** (m - k)
    weights.flags.writeable = False
    return DiagonalPOVMElement(weights=weights, kind="photoelectric", k=k, eta=eta)


@dataclass(frozen=True)
class OperatorNormDistance:
    """sup_m |P_k[m] - Pi_k[m]| with an explicit certificate for m >= cutoff.

    ``value`` = max(grid_sup, tail_bound); the tail bound is analytic (both
    weight sequences decay geometrically past the scanned range), so the sup
    is never silently truncated.
    """

    value: float
    grid_sup: float
    tail_bound: float
    cutoff: int


def _photoelectric_tail_sup(eta: float, k: int, start: int) -> float:
    """sup_{m >= start} C(m,k) eta^k (1-eta)^(m-k), exact.

    The sequence decreases once m > k/eta - 1; before that it is evaluated
    directly.
    """
    if eta == 1.0:
        return 1.0 if start <= k else 0.0

    def w(m: int) -> float:
        return math.comb(m, k) * eta**k * (1.0 - eta) ** (m - k)

    m_star = max(start, math.ceil(k / eta) - 1)
    return max(w(m) for m in range(start, m_star + 2))


def operator_norm_distance(det: DetectorConfig, k: int, cutoff: int = 512) -> OperatorNormDistance:
    """Operator-norm distance between the click element Pi_k and the
    photoelectric element P_k of the same (eta, k).

    Vanishes for k = 0 (the elements coincide) and decreases with the number
    of diodes: Pi_k approaches P_k as N grows.
    """
    if not 0 <= k <= det.N:
        raise ValueError(f"click number k={k} outside 0..{det.N}")
    if k == 0 or det.eta == 0.0:
        # k = 0: both elements are (1-eta)^m exactly.  eta = 0, k >= 1: both vanish.
        return OperatorNormDistance(0.0, 0.0, 0.0, cutoff)

    click = click_povm_element(det, k, cutoff).weights
    pe = photoelectric_element(det.eta, k, cutoff).weights
    grid_sup = float(np.max(np.abs(pe - click)))

    # tail: both sequences are non-negative, so |P - Pi| <= max of their sups
    pe_tail = _photoelectric_tail_sup(det.eta, k, cutoff)
    base = 1.0 - det.eta * (1.0 - k / det.N)  # dominant geometric base of D[k, m]
    click_tail = min(1.0, math.comb(det.N, k) * 2.0**k * base**cutoff)
    tail_bound = max(pe_tail, click_tail)
    return OperatorNormDistance(max(grid_sup, tail_bound), grid_sup, tail_bound, cutoff)
