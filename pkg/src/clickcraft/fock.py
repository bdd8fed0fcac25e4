"""Truncated Fock-space oracle: states, mode unitaries, POVM conditioning.

Everything here is brute force on a finite photon-number basis |0..d-1> and
serves as the independent cross-check for the closed-form phase-space
pipeline.  Unitaries are built by exponentiating the truncated generator;
both generators conserve an integer label (total photon number for the beam
splitter, photon-number difference for the two-mode squeezer), so the
exponential is taken block by block, which is exact and keeps the cost at
O(d^4) instead of O(d^6).

Truncation is never silent: state constructors fail when the requested cutoff
leaves more than ``tail_tol`` of probability outside the basis, and the
unitaries fail when the output accumulates more than ``tail_tol`` of weight on
the cutoff boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .povm import DetectorConfig, click_povm_element

__all__ = [
    "BeamSplitterConfig",
    "CutoffError",
    "DensityMatrix",
    "ProcessOutcome",
    "SqueezerConfig",
    "TwoModeDensityMatrix",
    "apply_beam_splitter",
    "apply_two_mode_squeezer",
    "condition_on_clicks",
    "make_state",
    "normally_ordered_moment",
    "photon_distribution",
    "suggest_cutoff",
    "tensor_product",
    "trace_out_detector_mode",
]

DEFAULT_TAIL_TOL = 1e-10
UNITARY_TAIL_TOL = 1e-8


class CutoffError(Exception):
    """The requested truncation cannot represent the state to the tail tolerance."""


@dataclass(frozen=True)
class BeamSplitterConfig:
    """Beam splitter with real amplitude transmission t in (0, 1); r = sqrt(1-t^2)."""

    t: float

    def __post_init__(self) -> None:
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"transmission must lie strictly in (0, 1), got t={self.t}")

    @property
    def r(self) -> float:
        return math.sqrt(1.0 - self.t * self.t)


@dataclass(frozen=True)
class SqueezerConfig:
    """Two-mode squeezer of strength xi >= 0; mu = cosh(xi), nu = sinh(xi)."""

    xi: float

    def __post_init__(self) -> None:
        if self.xi < 0:
            raise ValueError(f"squeezing strength must be >= 0, got xi={self.xi}")

    @classmethod
    def from_mu(cls, mu: float) -> "SqueezerConfig":
        if mu < 1.0:
            raise ValueError(f"gain must satisfy mu >= 1, got {mu}")
        return cls(math.acosh(mu))

    @property
    def mu(self) -> float:
        return math.cosh(self.xi)

    @property
    def nu(self) -> float:
        return math.sinh(self.xi)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DensityMatrix:
    """Single-mode operator on the truncated basis |0..cutoff-1>.

    Unnormalized conditional states (trace < 1) are allowed; the trace of a
    conditioned output is the probability of the conditioning event.
    """

    cutoff: int
    entries: np.ndarray  # (d, d) complex

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def normalized(self) -> "DensityMatrix":
        return DensityMatrix(self.cutoff, _readonly(self.entries / self.trace))

    def validate(self) -> None:
        """Check Hermiticity, positivity and trace bounds; raise on violation."""
        h = np.abs(self.entries - self.entries.conj().T).max()
        if h > 1e-12:
            raise ValueError(f"not Hermitian: max |rho - rho^dag| = {h}")
        evals = np.linalg.eigvalsh(self.entries)
        if evals.min() < -1e-10:
            raise ValueError(f"negative eigenvalue {evals.min()}")
        if not 0.0 < self.trace <= 1.0 + 1e-12:
            raise ValueError(f"trace {self.trace} outside (0, 1]")

    def to_jsonable(self) -> dict:
        """Row-major [re, im] pairs, for the CLI JSON dump format."""
        flat = self.entries.reshape(-1)
        return {
            "cutoff": self.cutoff,
            "entries": [[float(v.real), float(v.imag)] for v in flat],
        }


@dataclass(frozen=True)
class TwoModeDensityMatrix:
    """Two-mode operator, entries[p, q, r, s] <-> |p><q| (x) |r><s|."""

    cutoffs: tuple[int, int]
    entries: np.ndarray  # (dA, dA, dB, dB) complex

    @property
    def trace(self) -> float:
        return float(np.einsum("ppss->", self.entries).real)

    def validate(self) -> None:
        h = np.abs(self.entries - self.entries.conj().transpose(1, 0, 3, 2)).max()
        if h > 1e-12:
            raise ValueError(f"not Hermitian: max deviation {h}")
        d_a, d_b = self.cutoffs
        mat = self.entries.transpose(0, 2, 1, 3).reshape(d_a * d_b, d_a * d_b)
        evals = np.linalg.eigvalsh(mat)
        if evals.min() < -1e-10:
            raise ValueError(f"negative eigenvalue {evals.min()}")
        if not 0.0 < self.trace <= 1.0 + 1e-12:
            raise ValueError(f"trace {self.trace} outside (0, 1]")

    def to_jsonable(self) -> dict:
        flat = self.entries.reshape(-1)
        return {
            "cutoffs": list(self.cutoffs),
            "entries": [[float(v.real), float(v.imag)] for v in flat],
        }


@dataclass(frozen=True)
class ProcessOutcome:
    """Unnormalized conditional state plus its trace = probability of the event.

    Rare click patterns can land a hair below zero through roundoff of the
    alternating closed forms; anything beyond 1e-9 is rejected.
    """

    state: object  # DensityMatrix or PhaseSpaceMixture
    probability: float

    def __post_init__(self) -> None:
        if not -1e-9 <= self.probability <= 1.0 + 1e-9:
            raise ValueError(f"probability {self.probability} outside [0, 1]")


# ---------------------------------------------------------------------------
# state constructors
# ---------------------------------------------------------------------------


def _annihilation(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, d)), 1).astype(complex)


def _expm_antihermitian(gen: np.ndarray) -> np.ndarray:
    """exp(G) for anti-Hermitian G via the eigendecomposition of -iG."""
    w, v = np.linalg.eigh(-1j * gen)
    return (v * np.exp(1j * w)) @ v.conj().T


def _coherent_amplitudes(alpha: complex, d: int) -> np.ndarray:
    amps = np.zeros(d, dtype=complex)
    amps[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, d):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return amps


def make_state(
    kind: str,
    cutoff: int,
    *,
    alpha: complex = 0j,
    nbar: float = 0.0,
    omega: float = 0.0,
    n: int = 0,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> DensityMatrix | TwoModeDensityMatrix:
    """Build a normalized truncated state.

    Kinds: ``vacuum``, ``fock`` (photon number n), ``coherent`` (amplitude
    alpha), ``thermal`` (mean photon number nbar), ``displaced_thermal``
    (alpha, nbar) and the two-mode ``phase_diffused_tmsv`` (pair-correlation
    omega, diagonal (1-omega) sum omega^n |n,n><n,n|).

    Raises CutoffError when the truncated trace would fall below 1 - tail_tol.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be positive")
    d = cutoff
    if kind == "vacuum":
        rho = np.zeros((d, d), dtype=complex)
        rho[0, 0] = 1.0
        return DensityMatrix(d, _readonly(rho))
    if kind == "fock":
        if not 0 <= n < d:
            raise CutoffError(f"|{n}> needs cutoff > {n}, got {d}")
        rho = np.zeros((d, d), dtype=complex)
        rho[n, n] = 1.0
        return DensityMatrix(d, _readonly(rho))
    if kind == "coherent":
        amps = _coherent_amplitudes(alpha, d)
        norm = float(np.vdot(amps, amps).real)
        if norm < 1.0 - tail_tol:
            raise CutoffError(
                f"coherent |alpha|={abs(alpha):.4g} keeps only {norm:.12f} of its "
                f"weight below cutoff {d}; try {suggest_cutoff('coherent', alpha=alpha, tail_tol=tail_tol)}"
            )
        return DensityMatrix(d, _readonly(np.outer(amps, amps.conj())))
    if kind == "thermal":
        if nbar < 0:
            raise ValueError(f"mean photon number must be >= 0, got {nbar}")
        if nbar == 0:
            return make_state("vacuum", d)
        q = nbar / (nbar + 1.0)
        if q**d > tail_tol:
            raise CutoffError(
                f"thermal nbar={nbar} has tail {q ** d:.3g} at cutoff {d}; "
                f"try {suggest_cutoff('thermal', nbar=nbar, tail_tol=tail_tol)}"
            )
        probs = (1.0 - q) * q ** np.arange(d)
        return DensityMatrix(d, _readonly(np.diag(probs).astype(complex)))
    if kind == "displaced_thermal":
        if nbar == 0:
            return make_state("coherent", d, alpha=alpha, tail_tol=tail_tol)
        work = 2 * d + 32
        thermal = make_state("thermal", work, nbar=nbar, tail_tol=1e-14)
        a_op = _annihilation(work)
        disp = _expm_antihermitian(alpha * a_op.conj().T - np.conj(alpha) * a_op)
        full = disp @ thermal.entries @ disp.conj().T
        rho = full[:d, :d].copy()
        kept = float(np.trace(rho).real)
        if kept < 1.0 - tail_tol:
            raise CutoffError(
                f"displaced thermal (|alpha|={abs(alpha):.4g}, nbar={nbar}) keeps "
                f"only {kept:.12f} below cutoff {d}"
            )
        return DensityMatrix(d, _readonly(rho))
    if kind == "phase_diffused_tmsv":
        if not 0.0 < omega < 1.0:
            raise ValueError(f"pair weight must satisfy 0 < omega < 1, got {omega}")
        if omega**d > tail_tol:
            raise CutoffError(
                f"phase-diffused pair state omega={omega} has tail {omega ** d:.3g} "
                f"at cutoff {d}"
            )
        ent = np.zeros((d, d, d, d), dtype=complex)
        weights = (1.0 - omega) * omega ** np.arange(d)
        for m in range(d):
            ent[m, m, m, m] = weights[m]
        return TwoModeDensityMatrix((d, d), _readonly(ent))
    raise ValueError(f"unknown state kind {kind!r}")


def suggest_cutoff(
    kind: str,
    *,
    alpha: complex = 0j,
    nbar: float = 0.0,
    omega: float = 0.0,
    tail_tol: float = DEFAULT_TAIL_TOL,
    squeezer: SqueezerConfig | None = None,
) -> int:
    """Smallest cutoff holding the state's tail below tail_tol, with a x1.5
    headroom factor when a squeezer will amplify the state afterwards."""
    if kind == "coherent":
        lam = abs(alpha) ** 2
        d = max(8, int(lam + 12.0 * math.sqrt(lam + 1.0)))
        amps = _coherent_amplitudes(alpha, d)
        while float(np.vdot(amps, amps).real) < 1.0 - tail_tol:
            d = int(d * 1.5) + 1
            amps = _coherent_amplitudes(alpha, d)
        base_nbar = lam
    elif kind in ("thermal", "displaced_thermal"):
        q = nbar / (nbar + 1.0) if nbar > 0 else 0.0
        d = 8 if q == 0 else max(8, math.ceil(math.log(tail_tol) / math.log(q)))
        d += int(2 * abs(alpha) ** 2 + 10 * abs(alpha)) if kind == "displaced_thermal" else 0
        base_nbar = nbar + abs(alpha) ** 2
    elif kind == "phase_diffused_tmsv":
        d = max(8, math.ceil(math.log(tail_tol) / math.log(omega)))
        base_nbar = omega / (1.0 - omega)
    elif kind in ("vacuum", "fock"):
        d, base_nbar = 8, 0.0
    else:
        raise ValueError(f"unknown state kind {kind!r}")
    if squeezer is not None:
        amplified = squeezer.mu**2 * (base_nbar + 1.0) - 1.0
        q = amplified / (amplified + 1.0)
        d_sq = math.ceil(math.log(tail_tol) / math.log(q)) if q > 0 else 8
        d = max(d, d_sq)
        d = math.ceil(1.5 * d)
    return d


def tensor_product(a: DensityMatrix, b: DensityMatrix) -> TwoModeDensityMatrix:
    ent = np.einsum("pq,rs->pqrs", a.entries, b.entries)
    return TwoModeDensityMatrix((a.cutoff, b.cutoff), _readonly(ent))


def photon_distribution(state: DensityMatrix) -> np.ndarray:
    """p_n = <n|rho|n>; non-negative up to roundoff, sums to the trace."""
    return np.diag(state.entries).real.copy()


# ---------------------------------------------------------------------------
# mode unitaries via block exponentiation of the truncated generator
# ---------------------------------------------------------------------------


def _apply_blockwise(
    state: TwoModeDensityMatrix,
    blocks: list[tuple[np.ndarray, np.ndarray]],
    tail_tol: float,
    what: str,
) -> TwoModeDensityMatrix:
    """rho -> U rho U^dag for U = direct sum of (indices, unitary) blocks."""
    d_a, d_b = state.cutoffs
    dim = d_a * d_b
    mat = state.entries.transpose(0, 2, 1, 3).reshape(dim, dim).copy()
    for idx, u in blocks:
        mat[idx, :] = u @ mat[idx, :]
    for idx, u in blocks:
        mat[:, idx] = mat[:, idx] @ u.conj().T
    ent = mat.reshape(d_a, d_b, d_a, d_b).transpose(0, 2, 1, 3)

    diag = np.einsum("ppss->ps", ent).real
    boundary = float(diag[-1, :].sum() + diag[:, -1].sum() - diag[-1, -1])
    total = float(diag.sum())
    if total > 0 and boundary > tail_tol * total:
        raise CutoffError(
            f"{what}: boundary occupancy {boundary / total:.3g} exceeds the tail "
            f"tolerance {tail_tol}; increase the cutoff"
        )
    return TwoModeDensityMatrix(state.cutoffs, _readonly(ent))


def _beam_splitter_blocks(theta: float, d: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Blocks of exp(theta (a b^dag - a^dag b)); total photon number conserved."""
    blocks = []
    for total in range(2 * d - 1):
        p_lo, p_hi = max(0, total - d + 1), min(total, d - 1)
        ps = np.arange(p_lo, p_hi + 1)
        idx = ps * d + (total - ps)
        size = ps.size
        gen = np.zeros((size, size))
        for i, p in enumerate(ps[:-1]):
            r = total - p
            # -a^dag b couples (p+1, r-1) <- (p, r) with amplitude -sqrt((p+1) r);
            # this orientation sends |alpha, 0> to |t alpha, +r alpha>
            gen[i + 1, i] = -theta * math.sqrt((p + 1) * r)
            gen[i, i + 1] = theta * math.sqrt((p + 1) * r)
        blocks.append((idx, _expm_antihermitian(gen.astype(complex))))
    return blocks


def _squeezer_blocks(xi: float, d: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Blocks of exp(xi (a^dag b^dag - a b)); photon-number difference conserved."""
    blocks = []
    for diff in range(-(d - 1), d):
        ps = np.arange(max(0, diff), min(d, d + diff))
        idx = ps * d + (ps - diff)
        size = ps.size
        gen = np.zeros((size, size))
        for i, p in enumerate(ps[:-1]):
            r = p - diff
            # a^dag b^dag couples (p+1, r+1) <- (p, r): amplitude sqrt((p+1)(r+1))
            gen[i + 1, i] = xi * math.sqrt((p + 1) * (r + 1))
            gen[i, i + 1] = -xi * math.sqrt((p + 1) * (r + 1))
        blocks.append((idx, _expm_antihermitian(gen.astype(complex))))
    return blocks


def apply_beam_splitter(
    state: TwoModeDensityMatrix,
    bs: BeamSplitterConfig,
    tail_tol: float = UNITARY_TAIL_TOL,
) -> TwoModeDensityMatrix:
    """Mix the two modes on a beam splitter; |alpha, 0> maps to |t alpha, r alpha>.

    Built as exp(theta (a b^dag - a^dag b)) with t = cos(theta), exponentiated
    block by block over the conserved total photon number.
    """
    if state.cutoffs[0] != state.cutoffs[1]:
        raise ValueError(f"cutoffs must match, got {state.cutoffs}")
    theta = math.acos(bs.t)
    blocks = _beam_splitter_blocks(theta, state.cutoffs[0])
    return _apply_blockwise(state, blocks, tail_tol, "beam splitter")


def apply_two_mode_squeezer(
    state: TwoModeDensityMatrix,
    sq: SqueezerConfig,
    tail_tol: float = UNITARY_TAIL_TOL,
) -> TwoModeDensityMatrix:
    """Two-mode squeezing exp(xi (a^dag b^dag - a b)).

    Vacuum input acquires weights (1/mu^2) (nu/mu)^(2m) on |m, m>; mode
    amplitudes transform with gain mu = cosh(xi).
    """
    if state.cutoffs[0] != state.cutoffs[1]:
        raise ValueError(f"cutoffs must match, got {state.cutoffs}")
    if sq.xi == 0.0:
        return state
    blocks = _squeezer_blocks(sq.xi, state.cutoffs[0])
    return _apply_blockwise(state, blocks, tail_tol, "two-mode squeezer")


# ---------------------------------------------------------------------------
# conditioning and moments
# ---------------------------------------------------------------------------


def condition_on_clicks(
    state: TwoModeDensityMatrix, det: DetectorConfig, k: int
) -> ProcessOutcome:
    """Condition mode B on a k-click event of the detector system.

    Returns the unnormalized mode-A state sum_m D[k, m] rho[p, q, m, m] whose
    trace is the probability of seeing k clicks.
    """
    if not 0 <= k <= det.N:
        raise ValueError(f"click number k={k} outside 0..{det.N}")
    d_a, d_b = state.cutoffs
    weights = click_povm_element(det, k, d_b).weights
    out = np.einsum("pqmm,m->pq", state.entries, weights)
    reduced = DensityMatrix(d_a, _readonly(out))
    return ProcessOutcome(state=reduced, probability=reduced.trace)


def trace_out_detector_mode(state: TwoModeDensityMatrix) -> DensityMatrix:
    """Unconditional reduced state of mode A."""
    out = np.einsum("pqmm->pq", state.entries)
    return DensityMatrix(state.cutoffs[0], _readonly(out))


def normally_ordered_moment(state: DensityMatrix, p: int, q: int) -> complex:
    """tr(rho a^dag^p a^q) on the truncated basis.

    Warns when the top p+q Fock levels contribute more than 1e-8 of the
    moment, i.e. when the truncation starts to bite.
    """
    if p < 0 or q < 0:
        raise ValueError("moment orders must be non-negative")
    d = state.cutoff
    a_op = _annihilation(d)
    op = np.linalg.matrix_power(a_op.conj().T, p) @ np.linalg.matrix_power(a_op, q)
    val = complex(np.trace(state.entries @ op))
    guard = max(0, d - (p + q))
    trimmed = state.entries.copy()
    trimmed[guard:, :] = 0.0
    trimmed[:, guard:] = 0.0
    val_trim = complex(np.trace(trimmed @ op))
    if abs(val - val_trim) > 1e-8 * max(abs(val), 1e-300):
        warnings.warn(
            f"moment <a^dag^{p} a^{q}> draws {abs(val - val_trim):.3g} from the top "
            f"{p + q} Fock levels; increase the cutoff",
            stacklevel=2,
        )
    return val
