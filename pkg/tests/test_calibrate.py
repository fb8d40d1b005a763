import numpy as np
import pytest

from srdetect import exact_exp
from srdetect.calibrate import (
    calibrate_equalized,
    calibrate_threshold,
    equalizer_search,
    find_equalizer_headstart,
    spread,
    srp_characteristics,
)
from srdetect.core.errors import CalibrationError
from srdetect.fredholm import GridSpec, arl_false_alarm, operating_characteristics
from srdetect.montecarlo import estimate_arl
from srdetect.procedures import HeadStart
from srdetect.quasi_stationary import solve_qsd

from .conftest import A_GAMMA2, B_GAMMA2, E0_SRP_GAMMA2, R_A_GAMMA2

SPEC = GridSpec(128)


class TestSRPCharacteristics:
    def test_gamma_two(self, e12):
        chars = srp_characteristics(e12, B_GAMMA2, SPEC)
        assert chars.arl == pytest.approx(2.0, abs=1e-10)
        assert chars.add == pytest.approx(E0_SRP_GAMMA2, abs=1e-5)

    @pytest.mark.parametrize("B", [0.4, 1.3])
    def test_closed_forms(self, e12, B):
        chars = srp_characteristics(e12, B, SPEC)
        assert chars.arl == pytest.approx(exact_exp.srp_arl_exact(B), abs=1e-10)
        assert chars.add == pytest.approx(exact_exp.srp_add_exact(B), abs=1e-10)


class TestCalibrateThreshold:
    def test_srp(self, e12):
        B = calibrate_threshold(e12, "srp", 2.0, SPEC)
        assert B == pytest.approx(B_GAMMA2, abs=1e-8)

    def test_sr(self, e12):
        gamma = 1.8
        A = calibrate_threshold(e12, "sr", gamma, SPEC)
        assert exact_exp.phi_exact(0.0, A) == pytest.approx(gamma, abs=1e-9)

    def test_sr_r_with_fixed_head_start(self, e12):
        A = calibrate_threshold(e12, "sr-r", 2.0, SPEC, head_start=R_A_GAMMA2)
        assert A == pytest.approx(A_GAMMA2, abs=1e-4)
        assert arl_false_alarm(e12, A, SPEC)(R_A_GAMMA2) == pytest.approx(2.0, abs=1e-9)

    def test_gaussian_sr(self, gaussian):
        A = calibrate_threshold(gaussian, "sr", 50.0, SPEC)
        assert arl_false_alarm(gaussian, A, SPEC)(0.0) == pytest.approx(50.0, rel=1e-8)

    @pytest.mark.parametrize("procedure", ["srp", "sr"])
    def test_threshold_increases_with_gamma(self, e12, procedure):
        thresholds = [calibrate_threshold(e12, procedure, g, SPEC) for g in (1.2, 1.5, 2.0)]
        assert np.all(np.diff(thresholds) > 0)

    def test_gaussian_srp_confirmed_by_simulation(self, gaussian):
        B = calibrate_threshold(gaussian, "srp", 5.0)
        qsd = solve_qsd(gaussian, B)
        est = estimate_arl(gaussian, HeadStart.quasi_stationary(qsd), B, 100_000, seed=21)
        assert est.within(5.0, k=3)
        assert est.reliable

    def test_unattainable(self, e12):
        with pytest.raises(CalibrationError, match="unattainable"):
            calibrate_threshold(e12, "sr", 100.0, SPEC, max_threshold=1.5)

    def test_gamma_must_exceed_one(self, e12):
        with pytest.raises(ValueError, match="exceed 1"):
            calibrate_threshold(e12, "sr", 1.0)

    def test_unknown_procedure(self, e12):
        with pytest.raises(ValueError, match="unknown procedure"):
            calibrate_threshold(e12, "cusum", 2.0)

    def test_non_monotone_arl(self, e12, monkeypatch):
        import srdetect.calibrate as calibrate

        def wobbly(model, A, grid):
            return lambda r: 1.5 + np.sin(20.0 * A)

        monkeypatch.setattr(calibrate, "arl_false_alarm", wobbly)
        with pytest.raises(CalibrationError, match="not increasing"):
            calibrate_threshold(e12, "sr", 2.0)


class TestEqualizer:
    def test_search_finds_closed_form_head_start(self, e12):
        A = A_GAMMA2
        eq = equalizer_search(e12, A, SPEC)
        assert eq.head_start == pytest.approx(exact_exp.equalizer_headstart(A), abs=1e-4)
        assert eq.spread < 1e-6

    @pytest.mark.parametrize("A", [0.5, 1.0, 1.5])
    def test_find_matches_closed_form(self, e12, A):
        r = find_equalizer_headstart(e12, A, SPEC)
        assert isinstance(r, float)
        assert r == pytest.approx(np.sqrt(1.0 + A) - 1.0, abs=1e-6)

    def test_spread_zero_only_at_equalizer(self, e12):
        oc = operating_characteristics(e12, 1.0, SPEC)
        assert spread(oc, 0.0) > 0.05
        assert spread(oc, exact_exp.equalizer_headstart(1.0)) < 1e-8

    def test_calibrate_equalized(self, e12):
        eq = calibrate_equalized(e12, 2.0, SPEC)
        assert eq.threshold == pytest.approx(A_GAMMA2, abs=1e-4)
        assert eq.head_start == pytest.approx(R_A_GAMMA2, abs=1e-4)
        assert eq.arl == pytest.approx(2.0, abs=1e-8)
        assert eq.spread < 1e-6

    @pytest.mark.slow
    def test_gaussian_equalizer_is_flat(self, gaussian):
        eq = calibrate_equalized(gaussian, 20.0, GridSpec(96), nu_max=30)
        oc = operating_characteristics(gaussian, eq.threshold, GridSpec(96), nu_max=30)
        profile = oc.cadd_profile(eq.head_start)
        assert np.ptp(profile) == pytest.approx(eq.spread, abs=1e-8)
        assert eq.spread < spread(oc, 0.0)
