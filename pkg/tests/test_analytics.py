import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbsim.analytics import (
    DetuningConvention,
    DriveConfig,
    DriveVariant,
    Interaction,
    SidebandModel,
    analytic_rate_shift_slope,
    bracket,
    detunings,
    frequency_shift,
    nearest_interactions,
    self_consistent_matching,
    sideband_rate,
    term_catalog,
)
from sbsim.errors import NearResonanceError, NoConvergenceError
from sbsim.model import NormalModeParams, ObservedParams, normal_mode_transform

# normal-mode numbers of the measured device (from normal_mode_transform)
OBS = dict(omega_t_hz=6.8112e9, omega_r_hz=4.0755e9,
           a_t_hz=150e6, a_r_hz=1646.7, a_tr_hz=497e3)


@pytest.fixture(scope="module")
def chi_model(paper_circuit_module=None):
    from sbsim.model import CircuitParams

    nm = normal_mode_transform(CircuitParams(6.8131e9, 4.0823e9, 120.7e6, 137.4e6))
    return SidebandModel.from_normal_modes(nm)


@pytest.fixture(scope="module")
def obs_model():
    return SidebandModel.from_observed(ObservedParams(**OBS),
                                       convention=DetuningConvention.LADDER)


class TestDetunings:
    def test_paper_arithmetic(self):
        delta, sigma = detunings(6.8112e9, 137.4e6, 5.4434e9)
        assert delta == pytest.approx((6.8112e9 + 137.4e6) - 5.4434e9, abs=1.0)
        assert sigma == pytest.approx((6.8112e9 + 137.4e6) + 5.4434e9, abs=1.0)
        assert delta == pytest.approx(1.5052e9, rel=1e-4)
        assert sigma == pytest.approx(12.392e9, rel=1e-4)

    def test_matching_ratios_match_reported_values(self):
        omega_mat_bs = (OBS["omega_t_hz"] - OBS["omega_r_hz"]) / 2
        omega_mat_tms = (OBS["omega_t_hz"] + OBS["omega_r_hz"]) / 2
        d_bs, s_bs = detunings(OBS["omega_t_hz"], 137.4e6, omega_mat_bs)
        d_tms, s_tms = detunings(OBS["omega_t_hz"], 137.4e6, omega_mat_tms)
        assert d_bs / s_bs == pytest.approx(0.6, rel=0.15)
        assert d_tms / s_tms == pytest.approx(0.11, rel=0.15)
        # the values themselves, frozen
        assert d_bs / s_bs == pytest.approx(0.671, abs=0.005)
        assert d_tms / s_tms == pytest.approx(0.1215, abs=0.002)

    def test_zero_drive_symmetry(self):
        delta, sigma = detunings(5e9, 100e6, 0.0)
        assert delta == sigma

    def test_near_resonance_floor(self):
        with pytest.raises(NearResonanceError):
            detunings(5e9, 100e6, 5e9 + 100e6 - 1e3)


class TestBracket:
    def test_equal_detuning_symmetry(self):
        assert bracket(2.0, 2.0) == pytest.approx(1.0)  # 4/x^2 at x=2

    def test_algebraic_identity(self):
        assert bracket(1.0, 3.0) == pytest.approx(16.0 / 9.0)

    def test_variants(self):
        assert bracket(2.0, 4.0, DriveVariant.RWA_ONLY) == pytest.approx(1 / 4)
        assert bracket(2.0, 4.0, DriveVariant.CR_ONLY) == pytest.approx(1 / 16)

    @settings(max_examples=100, deadline=None)
    @given(delta=st.floats(1e6, 1e10), sigma=st.floats(1e6, 2e10))
    def test_decomposition_identity(self, delta, sigma):
        full = bracket(delta, sigma, DriveVariant.FULL)
        rwa = bracket(delta, sigma, DriveVariant.RWA_ONLY)
        cr = bracket(delta, sigma, DriveVariant.CR_ONLY)
        assert full == pytest.approx(rwa + cr + 2.0 / (delta * sigma), rel=1e-12)
        assert full > rwa  # the RWA underestimate, for positive detunings


class TestShiftAndRate:
    def test_zero_amplitude(self, obs_model):
        d_t, d_r = frequency_shift(obs_model, DriveConfig(5.4434e9, 0.0))
        assert d_t == 0.0 and d_r == 0.0
        assert sideband_rate(obs_model, DriveConfig(5.4434e9, 0.0)) == 0.0

    def test_paper_point_frozen_arithmetic(self, chi_model):
        """Direct Eq.-4 evaluation at the TMS matching with amp = 300 MHz."""
        drive = DriveConfig(5.4434e9, 300e6)
        delta = chi_model.omega_t_hz + chi_model.kerr_t_hz - drive.omega_d_hz
        sigma = chi_model.omega_t_hz + chi_model.kerr_t_hz + drive.omega_d_hz
        br = 1 / delta**2 + 2 / (delta * sigma) + 1 / sigma**2
        expected = -0.5 * 300e6**2 * chi_model.kerr_t_hz * br
        d_t, d_r = frequency_shift(chi_model, drive)
        assert d_t == pytest.approx(expected, rel=1e-12)
        assert abs(d_t) == pytest.approx(3.4e6, rel=0.05)  # the ~3.4 MHz scale
        assert d_t < 0  # drive pulls the transmon down

    def test_shift_ratio_exact(self, obs_model):
        d_t, d_r = frequency_shift(obs_model, DriveConfig(5.4434e9, 200e6))
        assert d_r / d_t == pytest.approx(obs_model.kerr_tr_hz / obs_model.kerr_t_hz,
                                          rel=1e-12)

    def test_rate_variant_ratio(self, obs_model):
        drive = DriveConfig(5.4434e9, 200e6)
        delta, sigma = (obs_model.ladder_freq_hz - drive.omega_d_hz,
                        obs_model.ladder_freq_hz + drive.omega_d_hz)
        r_full = sideband_rate(obs_model, drive, DriveVariant.FULL)
        r_rwa = sideband_rate(obs_model, drive, DriveVariant.RWA_ONLY)
        assert r_full / r_rwa == pytest.approx(
            bracket(delta, sigma) / bracket(delta, sigma, DriveVariant.RWA_ONLY),
            rel=1e-12)

    def test_slope_paper_value(self, chi_model):
        slope = analytic_rate_shift_slope(chi_model.kerr_t_hz, chi_model.kerr_r_hz)
        assert slope == pytest.approx(np.sqrt(0.384 / 137.4), rel=0.02)
        assert slope == pytest.approx(0.053, abs=0.002)

    @settings(max_examples=30, deadline=None)
    @given(amp=st.floats(1e6, 3e8), omega_d=st.sampled_from([1.3679e9, 5.4434e9]),
           variant=st.sampled_from(list(DriveVariant)))
    def test_quadratic_scaling_and_slope_invariance(self, amp, omega_d, variant):
        model = SidebandModel.from_observed(ObservedParams(**OBS),
                                            convention=DetuningConvention.LADDER)
        drive = DriveConfig(omega_d, amp)
        rate = sideband_rate(model, drive, variant)
        rate2 = sideband_rate(model, DriveConfig(omega_d, 2 * amp), variant)
        assert rate2 == pytest.approx(4 * rate, rel=1e-9)
        d_t, _ = frequency_shift(model, drive, variant)
        assert rate / abs(d_t) == pytest.approx(
            analytic_rate_shift_slope(model.kerr_t_hz, model.kerr_r_hz), rel=1e-9)


class TestSelfConsistentMatching:
    def test_zero_drive_exact_matching(self, obs_model):
        bs = self_consistent_matching(obs_model, 0.0, Interaction.BS)
        tms = self_consistent_matching(obs_model, 0.0, Interaction.TMS)
        assert bs.omega_mat_prime_hz == pytest.approx(1.36785e9, abs=1.0)
        assert tms.omega_mat_prime_hz == pytest.approx(5.44335e9, abs=1.0)
        assert bs.omega_sb_hz == 0.0 and bs.delta_omega_t_hz == 0.0

    def test_converges_within_four_iterations(self, obs_model):
        # contraction ratio ~ 2*d_omega/Delta ~ 5e-3: three updates reach the
        # 1 Hz tolerance, the fourth pass detects it
        pred = self_consistent_matching(obs_model, 300e6, Interaction.TMS,
                                        max_iter=4)
        assert pred.omega_mat_prime_hz < 5.44335e9  # shifted down
        with pytest.raises(NoConvergenceError):
            self_consistent_matching(obs_model, 300e6, Interaction.TMS, max_iter=2)

    def test_monotone_shift_with_amplitude(self, obs_model):
        mats = [self_consistent_matching(obs_model, a, Interaction.TMS).omega_mat_prime_hz
                for a in (0.0, 100e6, 200e6, 300e6)]
        assert all(np.diff(mats) < 0)  # d_omega_t < 0 pulls omega'_mat down

    def test_matching_override(self, obs_model):
        ref = 5.4430e9
        pred = self_consistent_matching(obs_model, 0.0, Interaction.TMS,
                                        matching_freq_hz=ref)
        assert pred.omega_mat_prime_hz == ref

    def test_nonconvergence_error(self, obs_model):
        with pytest.raises(NoConvergenceError):
            self_consistent_matching(obs_model, 300e6, Interaction.TMS,
                                     tol_hz=1e-12, max_iter=2)

    def test_record_fields(self, obs_model):
        rec = self_consistent_matching(obs_model, 100e6, Interaction.BS).record()
        assert list(rec) == ["interaction", "variant", "amp_d_hz", "omega_d_hz",
                             "delta_hz", "sigma_hz", "d_omega_t_hz", "d_omega_r_hz",
                             "omega_sb_hz", "omega_mat_prime_hz"]


class TestTermCatalog:
    def test_matching_conditions(self, obs_model):
        cat = {e.operator: e for e in term_catalog(obs_model, DriveConfig(5.4434e9, 100e6))}
        w_t, w_r = obs_model.omega_t_hz, obs_model.omega_r_hz
        assert cat["a b†"].matching_hz == pytest.approx(abs(w_t - w_r) / 2)
        assert cat["a† b†"].matching_hz == pytest.approx((w_t + w_r) / 2)
        assert cat["a b†²"].matching_hz == pytest.approx(abs(2 * w_r - w_t))
        assert cat["a† b†²"].matching_hz == pytest.approx(2 * w_r + w_t)
        assert cat["a² b†"].matching_hz == pytest.approx(abs(2 * w_t - w_r))
        assert cat["a†² b†"].matching_hz == pytest.approx(abs(w_t - w_r))
        assert cat["a† a"].matching_hz is None

    def test_zero_amplitude_zero_prefactors(self, obs_model):
        for e in term_catalog(obs_model, DriveConfig(5.4434e9, 0.0)):
            assert e.prefactor_hz == 0.0

    def test_quadratic_prefactor_scaling(self, obs_model):
        c1 = term_catalog(obs_model, DriveConfig(5.4434e9, 100e6))
        c2 = term_catalog(obs_model, DriveConfig(5.4434e9, 200e6))
        for e1, e2 in zip(c1, c2):
            assert e2.prefactor_hz == pytest.approx(4 * e1.prefactor_hz, rel=1e-12)

    def test_eq3_rate_convention(self, obs_model):
        """Omega_sb = 2 x (table prefactor) for the first-order sideband rows."""
        drive = DriveConfig(5.4434e9, 200e6)
        cat = {e.operator: e for e in term_catalog(obs_model, drive)}
        assert sideband_rate(obs_model, drive) == pytest.approx(
            2 * cat["a† b†"].prefactor_hz, rel=1e-12)


class TestNearestInteractions:
    def test_tms_hit(self, obs_model):
        hits = nearest_interactions(obs_model, 5.4434e9, 50e6, amp_d_hz=100e6)
        assert "a† b†" in [e.operator for e in hits]

    def test_bs_hit(self, obs_model):
        hits = nearest_interactions(obs_model, 1.3679e9, 50e6, amp_d_hz=100e6)
        assert "a b†" in [e.operator for e in hits]

    def test_empty_window(self, obs_model):
        assert nearest_interactions(obs_model, 2.0e9, 0.0) == []
