"""Truncated-Fock oracle: constructors, unitaries, conditioning, moments."""

import math

import numpy as np
import pytest

from clickcraft import (
    BeamSplitterConfig,
    CutoffError,
    DetectorConfig,
    SqueezerConfig,
    apply_beam_splitter,
    apply_two_mode_squeezer,
    condition_on_clicks,
    make_state,
    normally_ordered_moment,
    photon_distribution,
    suggest_cutoff,
    tensor_product,
    trace_out_detector_mode,
)


def coherent_vacuum(alpha, d):
    return tensor_product(make_state("coherent", d, alpha=alpha), make_state("vacuum", d))


# --- constructors -----------------------------------------------------------


def test_vacuum_state():
    rho = make_state("vacuum", 8)
    assert rho.entries[0, 0] == 1.0
    assert abs(rho.entries).sum() == 1.0


def test_thermal_state_geometric():
    rho = make_state("thermal", 48, nbar=0.5)
    p = photon_distribution(rho)
    n = np.arange(48)
    assert np.allclose(p, (1 / 1.5) * (0.5 / 1.5) ** n, rtol=1e-12)


def test_phase_diffused_tmsv_weights():
    state = make_state("phase_diffused_tmsv", 24, omega=0.25)
    for n in range(5):
        assert state.entries[n, n, n, n].real == pytest.approx(0.75 * 0.25**n, rel=1e-13)
    assert state.trace == pytest.approx(1.0, abs=1e-10)


def test_coherent_poisson_distribution():
    p = photon_distribution(make_state("coherent", 32, alpha=1.0))
    expect = np.array([math.exp(-1) / math.factorial(k) for k in range(32)])
    assert np.allclose(p, expect, atol=1e-14)


def test_fock_distribution():
    p = photon_distribution(make_state("fock", 8, n=2))
    assert p[2] == 1.0 and p.sum() == 1.0


def test_cutoff_errors():
    with pytest.raises(CutoffError):
        make_state("thermal", 8, nbar=2.0)
    with pytest.raises(CutoffError):
        make_state("coherent", 4, alpha=3.0)
    with pytest.raises(CutoffError):
        make_state("fock", 4, n=6)
    with pytest.raises(CutoffError):
        make_state("phase_diffused_tmsv", 6, omega=0.9)


def test_displaced_thermal_matches_moments():
    alpha0, nbar = 0.6 + 0.2j, 0.4
    rho = make_state("displaced_thermal", 40, alpha=alpha0, nbar=nbar)
    assert normally_ordered_moment(rho, 0, 1) == pytest.approx(alpha0, abs=1e-10)
    mean_n = normally_ordered_moment(rho, 1, 1).real
    assert mean_n == pytest.approx(abs(alpha0) ** 2 + nbar, rel=1e-10)


def test_suggest_cutoff_respects_tail():
    d = suggest_cutoff("thermal", nbar=0.5)
    assert (0.5 / 1.5) ** d <= 1e-10
    d_sq = suggest_cutoff("thermal", nbar=0.5, squeezer=SqueezerConfig.from_mu(1.4))
    assert d_sq > d


# --- beam splitter ----------------------------------------------------------


def test_beam_splitter_coherent_image():
    d, alpha, t = 28, 0.8, 0.7
    out = apply_beam_splitter(coherent_vacuum(alpha, d), BeamSplitterConfig(t))
    r = math.sqrt(1 - t * t)
    target = tensor_product(
        make_state("coherent", d, alpha=t * alpha), make_state("coherent", d, alpha=r * alpha)
    )
    fidelity = np.einsum("pqrs,qpsr->", out.entries, target.entries).real
    assert fidelity >= 1 - 1e-8


def test_beam_splitter_single_photon_split():
    t = 0.6
    r = math.sqrt(1 - t * t)
    inp = tensor_product(make_state("fock", 6, n=1), make_state("vacuum", 6))
    out = apply_beam_splitter(inp, BeamSplitterConfig(t))
    assert out.entries[1, 1, 0, 0].real == pytest.approx(t * t, abs=1e-12)
    assert out.entries[0, 0, 1, 1].real == pytest.approx(r * r, abs=1e-12)
    assert out.entries[1, 0, 0, 1].real == pytest.approx(t * r, abs=1e-12)


def test_beam_splitter_keeps_vacuum():
    vac = tensor_product(make_state("vacuum", 6), make_state("vacuum", 6))
    out = apply_beam_splitter(vac, BeamSplitterConfig(0.5))
    assert np.allclose(out.entries, vac.entries, atol=1e-14)


def test_beam_splitter_heisenberg_moments():
    # first and second moments of coherent inputs follow the linear mode map
    d, alpha, t = 30, 0.9 + 0.3j, 0.75
    r = math.sqrt(1 - t * t)
    out = apply_beam_splitter(coherent_vacuum(alpha, d), BeamSplitterConfig(t))
    rho_a = trace_out_detector_mode(out)
    assert normally_ordered_moment(rho_a, 0, 1) == pytest.approx(t * alpha, abs=1e-8)
    assert normally_ordered_moment(rho_a, 1, 1) == pytest.approx(abs(t * alpha) ** 2, abs=1e-8)
    rho_b = trace_out_detector_mode(
        type(out)(out.cutoffs, out.entries.transpose(2, 3, 0, 1))
    )
    assert normally_ordered_moment(rho_b, 0, 1) == pytest.approx(r * alpha, abs=1e-8)


def test_beam_splitter_preserves_trace_and_hermiticity():
    mixed = tensor_product(make_state("thermal", 24, nbar=0.4), make_state("vacuum", 24))
    out = apply_beam_splitter(mixed, BeamSplitterConfig(0.7))
    assert out.trace == pytest.approx(1.0, abs=1e-10)
    assert np.abs(out.entries - out.entries.conj().transpose(1, 0, 3, 2)).max() < 1e-10


def test_beam_splitter_rejects_mismatched_cutoffs():
    bad = tensor_product(make_state("vacuum", 6), make_state("vacuum", 8))
    with pytest.raises(ValueError):
        apply_beam_splitter(bad, BeamSplitterConfig(0.7))


def test_beam_splitter_config_validation():
    for t in (0.0, 1.0, 1.3):
        with pytest.raises(ValueError):
            BeamSplitterConfig(t)


# --- two-mode squeezer ------------------------------------------------------


def test_squeezer_vacuum_image():
    mu = 1.5
    sq = SqueezerConfig.from_mu(mu)
    vac = tensor_product(make_state("vacuum", 40), make_state("vacuum", 40))
    out = apply_two_mode_squeezer(vac, sq)
    assert out.entries[0, 0, 0, 0].real == pytest.approx(1 / mu**2, rel=1e-12)
    for m in (1, 2, 5):
        expect = (1 / mu**2) * (sq.nu / mu) ** (2 * m)
        assert out.entries[m, m, m, m].real == pytest.approx(expect, rel=1e-11)


def test_squeezer_zero_strength_is_identity():
    state = coherent_vacuum(0.5, 12)
    out = apply_two_mode_squeezer(state, SqueezerConfig(0.0))
    assert out is state


def test_squeezer_amplifies_mean_photon_number():
    mu, alpha, d = 1.5, 0.8, 64
    out = apply_two_mode_squeezer(coherent_vacuum(alpha, d), SqueezerConfig.from_mu(mu))
    rho_a = trace_out_detector_mode(out)
    mean_n = normally_ordered_moment(rho_a, 1, 1).real
    expect = mu**2 * alpha**2 + (mu**2 - 1)
    assert mean_n == pytest.approx(expect, abs=1e-6)


def test_squeezer_trace_preserved():
    mixed = tensor_product(make_state("thermal", 48, nbar=0.3), make_state("vacuum", 48))
    out = apply_two_mode_squeezer(mixed, SqueezerConfig.from_mu(1.3))
    assert out.trace == pytest.approx(1.0, abs=1e-10)


def test_squeezer_cutoff_guard():
    small = coherent_vacuum(0.8, 16)
    with pytest.raises(CutoffError):
        apply_two_mode_squeezer(small, SqueezerConfig.from_mu(1.5))


# --- conditioning -----------------------------------------------------------


def test_condition_factorizes_on_product_states():
    det = DetectorConfig(8, 0.7)
    rho_a = make_state("thermal", 20, nbar=0.4)
    rho_b = make_state("coherent", 20, alpha=0.9)
    joint = tensor_product(rho_a, rho_b)
    from clickcraft import click_povm_element

    for k in (0, 1, 3):
        outcome = condition_on_clicks(joint, det, k)
        weight = photon_distribution(rho_b) @ click_povm_element(det, k, 20).weights
        assert outcome.probability == pytest.approx(rho_a.trace * weight, rel=1e-12)
        assert np.allclose(outcome.state.entries, rho_a.entries * weight, atol=1e-14)


def test_condition_tmsv_diagonal():
    det = DetectorConfig(64, 0.95)
    state = make_state("phase_diffused_tmsv", 24, omega=0.25)
    outcome = condition_on_clicks(state, det, 2)
    from clickcraft import click_kernel_table

    kernel = click_kernel_table(det, 2, 23).row(2)
    expect = 0.75 * 0.25 ** np.arange(24) * kernel
    assert np.allclose(np.diag(outcome.state.entries).real, expect, rtol=1e-12)
    offdiag = outcome.state.entries - np.diag(np.diag(outcome.state.entries))
    assert np.abs(offdiag).max() == 0.0


def test_condition_partitions_trace():
    det = DetectorConfig(4, 0.6)
    state = apply_beam_splitter(coherent_vacuum(1.1, 32), BeamSplitterConfig(0.8))
    total = sum(condition_on_clicks(state, det, k).probability for k in range(5))
    assert total == pytest.approx(state.trace, abs=1e-9)


def test_condition_rejects_bad_k():
    state = make_state("phase_diffused_tmsv", 16, omega=0.2)
    with pytest.raises(ValueError):
        condition_on_clicks(state, DetectorConfig(4, 0.5), 5)


# --- moments ----------------------------------------------------------------


def test_moment_coherent_mean_photon():
    rho = make_state("coherent", 32, alpha=1.2)
    assert normally_ordered_moment(rho, 1, 1).real == pytest.approx(1.44, rel=1e-10)


def test_moment_thermal_second_order():
    rho = make_state("thermal", 64, nbar=0.5)
    assert normally_ordered_moment(rho, 2, 2).real == pytest.approx(0.5, rel=1e-10)


def test_moment_vacuum_vanishes():
    rho = make_state("vacuum", 8)
    for p, q in [(1, 0), (1, 1), (2, 2)]:
        assert abs(normally_ordered_moment(rho, p, q)) == 0.0


def test_moment_warns_when_truncation_bites():
    rho = make_state("thermal", 24, nbar=1.8, tail_tol=1e-2)
    with pytest.warns(UserWarning, match="cutoff"):
        normally_ordered_moment(rho, 2, 2)


def test_moments_converge_in_cutoff():
    # doubling the cutoff moves low-order moments by less than 1e-8
    for d in (32,):
        small = apply_beam_splitter(coherent_vacuum(0.8, d), BeamSplitterConfig(0.7))
        big = apply_beam_splitter(coherent_vacuum(0.8, 2 * d), BeamSplitterConfig(0.7))
        for p, q in [(1, 1), (2, 2), (2, 1)]:
            m_small = normally_ordered_moment(trace_out_detector_mode(small), p, q)
            m_big = normally_ordered_moment(trace_out_detector_mode(big), p, q)
            assert abs(m_small - m_big) < 1e-8


def test_density_matrix_validate_catches_bad_operators():
    rho = make_state("thermal", 16, nbar=0.2)
    rho.validate()
    bad = np.zeros((4, 4), dtype=complex)
    bad[0, 1] = 1.0
    bad[0, 0] = 1.0
    from clickcraft import DensityMatrix

    with pytest.raises(ValueError):
        DensityMatrix(4, bad).validate()


def test_jsonable_round_trip_shape():
    rho = make_state("coherent", 12, alpha=0.3 + 0.1j)
    payload = rho.to_jsonable()
    assert payload["cutoff"] == 12
    assert len(payload["entries"]) == 144
    assert all(len(pair) == 2 for pair in payload["entries"])
