import pytest

from srdetect import exact_exp
from srdetect.fredholm import GridSpec
from srdetect.metrics import (
    ANALYTIC_NU_MAX,
    PerformanceReport,
    Provenance,
    compare_at_gamma,
    integral_add_lower_bound,
    lower_bound_holds,
    report_sr_r,
    report_srp,
    sup_add,
)

from .conftest import A_GAMMA2, B_GAMMA2, E0_SRP_GAMMA2, JP_SRR_GAMMA2

SPEC = GridSpec(128)


def _report(**kwargs):
    base = dict(procedure="sr", threshold=1.0, arl=1.7, cadd_by_nu=(1.3, 1.1),
                jp=1.3, ir_lower_bound=None, provenance=Provenance.NYSTROM)
    return PerformanceReport(**{**base, **kwargs})


class TestPerformanceReport:
    def test_jp_must_be_max(self):
        with pytest.raises(ValueError, match="maximum"):
            _report(jp=1.1)

    def test_empty_profile(self):
        with pytest.raises(ValueError, match="empty"):
            _report(cadd_by_nu=(), jp=0.0)

    def test_argmax_and_dict(self):
        report = _report(cadd_by_nu=(1.0, 1.4, 1.2), jp=1.4)
        assert report.argmax_nu == 1
        d = report.with_bound(1.25).to_dict()
        assert d["ir_lower_bound"] == 1.25
        assert d["provenance"] == "nystrom"
        assert d["cadd_by_nu"] == [1.0, 1.4, 1.2]


class TestBounds:
    def test_sup_add(self):
        assert sup_add([1.0, 3.0, 2.0]) == 3.0
        with pytest.raises(ValueError):
            sup_add([])

    def test_bound_without_head_start_is_relative_delay(self):
        assert integral_add_lower_bound(0.0, 5.0, 3.0, 2.0) == 1.5

    def test_bound_rejects_negative_r(self):
        with pytest.raises(ValueError, match="nonnegative"):
            integral_add_lower_bound(-1.0, 1.0, 1.0, 1.0)

    def test_lower_bound_holds(self):
        assert lower_bound_holds(1.30, 1.31, std_error=0.005)
        assert not lower_bound_holds(1.30, 1.31)
        assert lower_bound_holds(1.30, 1.31, tol=0.02)


class TestReports:
    def test_sr_r_at_equalizer(self, e12):
        r = exact_exp.equalizer_headstart(A_GAMMA2)
        report = report_sr_r(e12, A_GAMMA2, r, SPEC)
        assert report.jp == pytest.approx(JP_SRR_GAMMA2, abs=5e-5)
        assert report.ir_lower_bound == pytest.approx(report.jp, abs=1e-8)
        assert report.arl == pytest.approx(2.0, abs=1e-4)
        assert report.head_start == r

    def test_sr_peaks_at_zero(self, e12):
        report = report_sr_r(e12, A_GAMMA2, 0.0, SPEC)
        assert report.argmax_nu == 0
        assert report.jp > report.ir_lower_bound

    def test_head_start_below_threshold(self, e12):
        with pytest.raises(ValueError, match="head start"):
            report_sr_r(e12, 1.0, 1.0, SPEC)

    def test_srp(self, e12):
        report = report_srp(e12, B_GAMMA2, SPEC, nu_max=10)
        assert report.arl == pytest.approx(2.0, abs=1e-10)
        assert report.jp == pytest.approx(E0_SRP_GAMMA2, abs=1e-5)
        assert len(report.cadd_by_nu) == 11
        assert report.head_start is None


class TestCompareAtGamma:
    def test_analytic(self, e12):
        cmp = compare_at_gamma(e12, 2.0)
        assert cmp.srp.provenance is Provenance.ANALYTIC
        assert cmp.srp.jp == pytest.approx(E0_SRP_GAMMA2, abs=1e-5)
        assert cmp.srr.jp == pytest.approx(JP_SRR_GAMMA2, abs=1e-5)
        assert cmp.gap > 0
        assert len(cmp.srp.cadd_by_nu) == ANALYTIC_NU_MAX + 1
        assert cmp.srp.ir_lower_bound == cmp.srr.ir_lower_bound
        assert cmp.srr.ir_lower_bound == pytest.approx(cmp.srr.jp, abs=1e-12)
        assert lower_bound_holds(cmp.srp.jp, cmp.srp.ir_lower_bound)

    def test_analytic_needs_exact_model(self, gaussian):
        with pytest.raises(ValueError, match="theta=2"):
            compare_at_gamma(gaussian, 2.0)

    def test_numeric_agrees_with_analytic(self, e12):
        numeric = compare_at_gamma(e12, 2.0, route="numeric", grid_spec=SPEC)
        analytic = compare_at_gamma(e12, 2.0)
        assert numeric.srp.provenance is Provenance.NYSTROM
        assert numeric.srp.jp == pytest.approx(analytic.srp.jp, abs=1e-6)
        assert numeric.srr.jp == pytest.approx(analytic.srr.jp, abs=1e-6)
        assert numeric.srr.threshold == pytest.approx(analytic.srr.threshold, abs=1e-6)

    def test_unknown_route(self, e12):
        with pytest.raises(ValueError, match="unknown route"):
            compare_at_gamma(e12, 2.0, route="simulation")
