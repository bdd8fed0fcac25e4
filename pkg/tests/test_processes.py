"""Protocol tests: heralding, subtraction, addition, composed amplification."""

import math

import numpy as np
import pytest

from clickcraft import (
    AdditionSpec,
    AmplifySpec,
    BeamSplitterConfig,
    DetectorConfig,
    PhaseSpaceMixture,
    SqueezerConfig,
    SubtractionSpec,
    add,
    amplify,
    amplify_closed_form,
    apply_beam_splitter,
    apply_two_mode_squeezer,
    condition_on_clicks,
    effective_sigma2,
    herald,
    herald_tmsv_distribution,
    make_state,
    moment,
    normally_ordered_moment,
    nu_for_sigma2,
    photon_distribution,
    probability_addition_displaced_thermal,
    probability_subtraction_displaced_thermal,
    probability_table,
    subtract,
    tensor_product,
)

RNG = np.random.default_rng(7)

DET16 = DetectorConfig(16, 0.8)
BS07 = BeamSplitterConfig(0.7)
SQ14 = SqueezerConfig.from_mu(1.4)

# composed-amplifier example set: both detectors N=4 at eta=0.5, mu=3/2, t=2/3
DET4 = DetectorConfig(4, 0.5)
SQ15 = SqueezerConfig.from_mu(1.5)
BS23 = BeamSplitterConfig(2.0 / 3.0)


def amplify_spec(k1=0, k2=0) -> AmplifySpec:
    return AmplifySpec(AdditionSpec(SQ15, DET4, k1), SubtractionSpec(BS23, DET4, k2))


# --- heralding ---------------------------------------------------------------


def test_herald_delegates_to_fock_conditioning():
    det = DetectorConfig(8, 0.6)
    state = make_state("phase_diffused_tmsv", 20, omega=0.3)
    a = herald(state, det, 1)
    b = condition_on_clicks(state, det, 1)
    assert a.probability == b.probability
    assert np.array_equal(a.state.entries, b.state.entries)


def test_herald_closed_form_matches_fock():
    det = DetectorConfig(64, 0.95)
    state = make_state("phase_diffused_tmsv", 26, omega=0.25)
    for k in (0, 1, 4):
        closed = herald_tmsv_distribution(0.25, det, k)
        oracle = photon_distribution(herald(state, det, k).state)
        assert np.abs(closed.weights[:26] - oracle).max() < 1e-10


def test_herald_no_click_distribution_is_geometric():
    det = DetectorConfig(32, 0.7)
    res = herald_tmsv_distribution(0.4, det, 0)
    ratio = res.weights[1:10] / res.weights[:9]
    assert np.allclose(ratio, 0.4 * (1 - 0.7), rtol=1e-12)


def test_herald_peaks_at_click_number():
    det = DetectorConfig(64, 0.95)
    for k in (0, 1, 4, 16):
        res = herald_tmsv_distribution(0.25, det, k)
        assert int(np.argmax(res.normalized)) == k


def test_herald_probabilities_partition():
    det = DetectorConfig(16, 0.85)
    total = math.fsum(
        herald_tmsv_distribution(0.25, det, k).probability for k in range(17)
    )
    assert total == pytest.approx(1.0, abs=1e-9)


def test_herald_fidelity_grows_with_diode_count():
    fidelities = [
        herald_tmsv_distribution(0.25, DetectorConfig(n, 1.0), 1).normalized[1]
        for n in (64, 256, 1024)
    ]
    assert fidelities[0] < fidelities[1] < fidelities[2]
    assert fidelities[-1] > 0.99


# --- subtraction -------------------------------------------------------------


def test_subtraction_thermal_closed_form():
    # thermal input: conditioned output P is the k-click factor at eta' times
    # the attenuated thermal Gaussian with nbar0 = t^2 nbar
    nbar = 0.5
    nbar0 = BS07.t**2 * nbar
    eta_p = DET16.eta * BS07.r**2 / BS07.t**2
    alphas = RNG.uniform(-2, 2, 100) + 1j * RNG.uniform(-2, 2, 100)
    for k in range(4):
        out = subtract(PhaseSpaceMixture.thermal(nbar), SubtractionSpec(BS07, DET16, k))
        e = np.exp(-eta_p * np.abs(alphas) ** 2 / DET16.N)
        direct = (
            math.comb(DET16.N, k)
            * e ** (DET16.N - k)
            * (1 - e) ** k
            * np.exp(-np.abs(alphas) ** 2 / nbar0)
            / (math.pi * nbar0)
        )
        assert np.allclose(out.state.evaluate(alphas), direct, rtol=1e-11, atol=1e-12)


def test_subtraction_coherent_no_click():
    beta = 0.9 + 0.2j
    spec = SubtractionSpec(BS07, DET16, 0)
    out = subtract(PhaseSpaceMixture.coherent(beta), spec)
    (d,) = out.state.deltas
    assert d.z == pytest.approx(BS07.t * beta)
    assert d.c == pytest.approx(math.exp(-DET16.eta * BS07.r**2 * abs(beta) ** 2), rel=1e-13)


def test_subtraction_vacuum_probabilities():
    for k in range(3):
        out = subtract(PhaseSpaceMixture.vacuum(), SubtractionSpec(BS07, DET16, k))
        assert out.probability == pytest.approx(1.0 if k == 0 else 0.0, abs=1e-14)


def test_subtraction_probability_partition():
    p_in = PhaseSpaceMixture.displaced_thermal(0.5 + 0.1j, 0.7)
    total = math.fsum(
        subtract(p_in, SubtractionSpec(BS07, DET16, k)).probability
        for k in range(DET16.N + 1)
    )
    assert total == pytest.approx(1.0, abs=1e-9)


def test_subtraction_effective_efficiency():
    spec = SubtractionSpec(BS07, DET16, 1)
    assert spec.eta_eff == pytest.approx(0.8 * 0.51 / 0.49)


# --- addition ----------------------------------------------------------------


def test_addition_zero_click_variance_matches_sigma2():
    beta = 0.4 - 0.3j
    out = add(PhaseSpaceMixture.coherent(beta), AdditionSpec(SQ14, DET16, 0))
    (g,) = out.state.gaussians
    assert 1.0 / g.a == pytest.approx(effective_sigma2(SQ14, DET16.eta), rel=1e-12)
    # the same number through the moment channel of the normalized output
    var = (
        moment(out.state, 1, 1) / out.probability
        - abs(moment(out.state, 0, 1) / out.probability) ** 2
    )
    assert var.real == pytest.approx(effective_sigma2(SQ14, DET16.eta), rel=1e-10)


def test_addition_thermal_noise_scale():
    # k = 0 on thermal input: Gaussian part keeps the amplified width through
    # the conditioning identity 1/a = (nbar0 (1-eta') + eta'...) closed form;
    # cross-check against the Fock oracle instead of trusting algebra
    d = 48
    joint = apply_two_mode_squeezer(
        tensor_product(make_state("thermal", d, nbar=0.5), make_state("vacuum", d)), SQ14
    )
    for k in range(4):
        pipe = add(PhaseSpaceMixture.thermal(0.5), AdditionSpec(SQ14, DET16, k))
        oracle = condition_on_clicks(joint, DET16, k)
        assert pipe.probability == pytest.approx(oracle.probability, rel=1e-9)
        for p, q in [(1, 1), (2, 2)]:
            assert moment(pipe.state, p, q).real == pytest.approx(
                normally_ordered_moment(oracle.state, p, q).real, rel=1e-8
            )


def test_addition_radial_oscillations_count_clicks():
    r = np.linspace(0, 6, 4001).astype(complex)
    for k in range(4):
        out = add(PhaseSpaceMixture.thermal(0.5), AdditionSpec(SQ14, DET16, k))
        vals = out.state.evaluate(r)
        signs = np.sign(vals[np.abs(vals) > 1e-30])
        assert int(np.sum(signs[1:] != signs[:-1])) == k


def test_addition_rejects_unpumped():
    with pytest.raises(ValueError):
        AdditionSpec(SqueezerConfig(0.0), DET16, 0)


def test_addition_probability_partition():
    p_in = PhaseSpaceMixture.coherent(0.6)
    total = math.fsum(
        add(p_in, AdditionSpec(SQ14, DET16, k)).probability for k in range(DET16.N + 1)
    )
    assert total == pytest.approx(1.0, abs=1e-9)


def test_structural_duality_of_effective_efficiencies():
    # the two pipelines share the click-factor core and differ only in the
    # attenuation-vs-noise front end and their effective efficiency
    sub_spec = SubtractionSpec(BS07, DET16, 2)
    add_spec = AdditionSpec(SQ14, DET16, 2)
    assert sub_spec.eta_eff == pytest.approx(DET16.eta * BS07.r**2 / BS07.t**2)
    assert add_spec.eta_eff == pytest.approx(DET16.eta * SQ14.nu**2 / SQ14.mu**2)


# --- closed-form probabilities ----------------------------------------------


ALPHA_NBAR_SET = [(0.0, 0.0), (0.0, 0.5), (0.8 + 0.3j, 0.0), (0.8 + 0.3j, 0.5)]


@pytest.mark.parametrize("alpha0,nbar", ALPHA_NBAR_SET)
@pytest.mark.parametrize("k", [0, 1, 2])
def test_subtraction_probability_closed_form(alpha0, nbar, k):
    spec = SubtractionSpec(BS07, DET16, k)
    closed = probability_subtraction_displaced_thermal(alpha0, nbar, spec)
    pipeline = subtract(PhaseSpaceMixture.displaced_thermal(alpha0, nbar), spec)
    assert closed == pytest.approx(pipeline.probability, abs=1e-10)


@pytest.mark.parametrize("alpha0,nbar", ALPHA_NBAR_SET)
@pytest.mark.parametrize("k", [0, 1, 2])
def test_addition_probability_closed_form(alpha0, nbar, k):
    spec = AdditionSpec(SQ14, DET16, k)
    closed = probability_addition_displaced_thermal(alpha0, nbar, spec)
    pipeline = add(PhaseSpaceMixture.displaced_thermal(alpha0, nbar), spec)
    assert closed == pytest.approx(pipeline.probability, abs=1e-10)


def test_vacuum_input_never_clicks():
    spec = SubtractionSpec(BS07, DET16, 0)
    assert probability_subtraction_displaced_thermal(0.0, 0.0, spec) == pytest.approx(1.0)
    for k in (1, 2):
        spec = SubtractionSpec(BS07, DET16, k)
        assert probability_subtraction_displaced_thermal(0.0, 0.0, spec) == pytest.approx(
            0.0, abs=1e-14
        )


def test_addition_spontaneous_pair_probabilities_sum():
    # vacuum input: clicks come from spontaneously generated pairs only
    total = math.fsum(
        probability_addition_displaced_thermal(0.0, 0.0, AdditionSpec(SQ14, DET16, k))
        for k in range(DET16.N + 1)
    )
    assert total == pytest.approx(1.0, abs=1e-9)


# --- composed amplification ---------------------------------------------------


def test_amplify_composition_matches_closed_form_pointwise():
    beta = 1 / math.sqrt(2)
    alphas = RNG.uniform(-2.5, 2.5, 1000) + 1j * RNG.uniform(-2.5, 2.5, 1000)
    for k1 in range(5):
        for k2 in range(5):
            composed = amplify(beta, amplify_spec(k1, k2)).state
            direct = amplify_closed_form(beta, amplify_spec(k1, k2))
            a = composed.evaluate(alphas)
            b = direct.evaluate(alphas)
            scale = np.abs(b).max()
            assert np.allclose(a, b, rtol=1e-8, atol=1e-8 * scale)


def test_amplify_accepts_mixture_input():
    out1 = amplify(0.5 + 0.0j, amplify_spec(1, 1))
    out2 = amplify(PhaseSpaceMixture.coherent(0.5), amplify_spec(1, 1))
    assert out1.probability == pytest.approx(out2.probability, rel=1e-14)


def test_amplify_rejects_unit_efficiency_first_detector():
    with pytest.raises(ValueError, match="delta"):
        AmplifySpec(
            AdditionSpec(SQ15, DetectorConfig(4, 1.0), 0), SubtractionSpec(BS23, DET4, 0)
        )


def test_probability_table_sums_to_one():
    table = probability_table(amplify_spec(), 1 / math.sqrt(2))
    assert table.shape == (5, 5)
    assert table.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(table >= 0)


def test_probability_table_rows_marginalize_to_addition_only():
    beta = 1 / math.sqrt(2)
    table = probability_table(amplify_spec(), beta)
    for k1 in range(5):
        expect = probability_addition_displaced_thermal(
            beta, 0.0, AdditionSpec(SQ15, DET4, k1)
        )
        assert table[k1].sum() == pytest.approx(expect, abs=1e-12)


def test_probability_table_phase_invariant():
    t1 = probability_table(amplify_spec(), 0.7)
    t2 = probability_table(amplify_spec(), 0.7 * np.exp(0.83j))
    assert np.abs(t1 - t2).max() < 1e-12


def test_amplify_negativity_grows_with_addition_clicks():
    # conditioned outputs develop negative fringes once k1 >= 1
    r = np.linspace(0, 4, 2001).astype(complex)
    mins = []
    for k1 in range(3):
        out = amplify(1 / math.sqrt(2), amplify_spec(k1, 0))
        mins.append(out.state.evaluate(r).min())
    assert mins[0] >= -1e-15
    assert mins[1] < -1e-3 and mins[2] < -1e-3


def test_amplify_against_fock_oracle_spot():
    # d = 56: the all-clicks elements keep the raw amplified tail (their
    # saturating term has no kernel suppression), so fourth-order moments
    # need more basis headroom than the probabilities do
    beta, d = 1 / math.sqrt(2), 56
    joint = apply_two_mode_squeezer(
        tensor_product(make_state("coherent", d, alpha=beta), make_state("vacuum", d)), SQ15
    )
    vac = make_state("vacuum", d)
    for k1, k2 in [(0, 0), (1, 1), (2, 0), (4, 4)]:
        after_add = condition_on_clicks(joint, DET4, k1).state
        joint2 = apply_beam_splitter(tensor_product(after_add, vac), BS23)
        oracle = condition_on_clicks(joint2, DET4, k2)
        outcome = amplify(beta, amplify_spec(k1, k2))
        assert outcome.probability == pytest.approx(oracle.probability, abs=5e-9)
        for p, q in [(1, 0), (1, 1), (2, 1), (2, 2)]:
            o = normally_ordered_moment(oracle.state, p, q)
            if abs(o) > 1e-10:
                assert moment(outcome.state, p, q) == pytest.approx(o, rel=1e-6)


# --- sigma^2 relation ---------------------------------------------------------


def test_sigma2_limits():
    assert effective_sigma2(SQ14, 1.0) == 0.0
    assert effective_sigma2(SQ14, 0.0) == pytest.approx(SQ14.nu**2, rel=1e-12)


def test_sigma2_value():
    assert effective_sigma2(SQ14, 0.8) == pytest.approx(0.96 * 0.2 / 1.768, rel=1e-10)


def test_sigma2_inverse_lookup():
    for eta in (0.0, 0.3, 0.8):
        for xi in (0.2, 0.9):
            sq = SqueezerConfig(xi)
            sigma2 = effective_sigma2(sq, eta)
            assert nu_for_sigma2(sigma2, eta) == pytest.approx(sq.nu, rel=1e-12)
    with pytest.raises(ValueError):
        nu_for_sigma2(0.5, 1.0)


# --- spec validation ----------------------------------------------------------


def test_spec_click_bounds():
    with pytest.raises(ValueError):
        SubtractionSpec(BS07, DET16, 17)
    with pytest.raises(ValueError):
        AdditionSpec(SQ14, DET16, -1)
