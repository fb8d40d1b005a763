import math

import numpy as np
import pytest

from srdetect import exact_exp
from srdetect.core.errors import SolverError
from srdetect.fredholm import (
    GridFunction,
    GridSpec,
    QuadratureGrid,
    add_at_change_zero,
    arl_false_alarm,
    cadd,
    delay_and_survival_sequences,
    make_grid,
    operating_characteristics,
    pre_operator,
    psi,
    solve_second_kind,
)
from srdetect.metrics import integral_add_lower_bound

from .conftest import A_GAMMA2, JP_SRR_GAMMA2, R_A_GAMMA2

R_POINTS = np.linspace(0.0, 0.99 * A_GAMMA2, 37)


def _constant_kernel(c):
    return lambda x, r: np.full(np.broadcast(x, r).shape, c)


class TestQuadratureGrid:
    @pytest.mark.parametrize("scheme", ["gauss_legendre", "trapezoid"])
    def test_weights_sum_to_length(self, scheme):
        grid = make_grid(1.7, 64, scheme)
        assert grid.weights.sum() == pytest.approx(1.7, abs=1e-12)
        assert np.all(np.diff(grid.nodes) > 0)

    def test_gauss_legendre_integrates_polynomials(self):
        grid = make_grid(2.0, 16)
        assert grid.integrate(grid.nodes ** 7) == pytest.approx(2.0 ** 8 / 8, rel=1e-13)

    def test_too_few_nodes(self):
        with pytest.raises(ValueError, match="at least 8"):
            make_grid(1.0, 4)

    def test_bad_weights(self):
        with pytest.raises(ValueError, match="sum"):
            QuadratureGrid(1.0, np.linspace(0.1, 0.9, 8), np.full(8, 0.1), "trapezoid")

    def test_unknown_scheme(self):
        with pytest.raises(ValueError, match="scheme"):
            make_grid(1.0, 16, "simpson")

    def test_grid_must_match_threshold(self, e12):
        with pytest.raises(ValueError, match="threshold"):
            arl_false_alarm(e12, 1.0, make_grid(1.5, 16))


class TestGridFunction:
    def test_node_values_exact(self):
        grid = make_grid(1.0, 16)
        values = np.sin(grid.nodes)
        f = GridFunction(grid, values, lambda r: np.zeros_like(r))
        assert f(grid.nodes[3]) == values[3]
        assert f(0.5) == 0.0

    def test_linear_fallback(self):
        grid = make_grid(1.0, 16, "trapezoid")
        f = GridFunction(grid, 2.0 * grid.nodes)
        assert f(0.3) == pytest.approx(0.6)

    def test_non_finite_rejected(self):
        grid = make_grid(1.0, 8)
        with pytest.raises(SolverError, match="non-finite"):
            GridFunction(grid, np.full(8, np.nan))


class TestSolveSecondKind:
    def test_zero_kernel(self):
        grid = make_grid(1.0, 32)
        u = solve_second_kind(_constant_kernel(0.0), GridFunction.constant(grid, 1.0), grid)
        np.testing.assert_allclose(u.values, 1.0)
        assert u(0.123) == pytest.approx(1.0)

    def test_constant_kernel_geometric_series(self):
        A, c = 1.5, 0.4
        grid = make_grid(A, 32)
        u = solve_second_kind(_constant_kernel(c), GridFunction.constant(grid, 1.0), grid)
        np.testing.assert_allclose(u.values, 1.0 / (1.0 - c * A), rtol=1e-13)
        assert u(0.77) == pytest.approx(1.0 / (1.0 - c * A), rel=1e-13)

    def test_singular_system_reported(self):
        A = 1.5
        grid = make_grid(A, 32)
        with pytest.raises(SolverError, match="ill-conditioned"):
            solve_second_kind(_constant_kernel(1.0 / A), GridFunction.constant(grid, 1.0), grid)

    def test_operator_reuses_factorisation(self, e12, grid_gamma2):
        op = pre_operator(e12, grid_gamma2)
        phi = op.solve(GridFunction.constant(grid_gamma2, 1.0))
        lu = op._lu
        op.solve(phi)
        assert op._lu is lu


class TestClosedFormAgreement:
    @pytest.mark.parametrize("A", [0.5, 1.0, A_GAMMA2])
    def test_phi(self, e12, A):
        phi = arl_false_alarm(e12, A, make_grid(A, 256))
        r = R_POINTS * A / A_GAMMA2
        expected = [exact_exp.phi_exact(x, A) for x in r]
        np.testing.assert_allclose(phi(r), expected, atol=1e-8, rtol=0)

    @pytest.mark.parametrize("A", [0.5, 1.0, A_GAMMA2])
    def test_delta0(self, e12, A):
        delta0 = add_at_change_zero(e12, A, make_grid(A, 256))
        r = R_POINTS * A / A_GAMMA2
        expected = [exact_exp.delta0_exact(x, A) for x in r]
        np.testing.assert_allclose(delta0(r), expected, atol=1e-8, rtol=0)

    @pytest.mark.parametrize("A", [1.0, A_GAMMA2])
    def test_trapezoid_keeps_origin_node(self, e12, A):
        grid = make_grid(A, 2049, "trapezoid")
        assert grid.nodes[0] == 0.0
        phi = arl_false_alarm(e12, A, grid)
        delta0 = add_at_change_zero(e12, A, grid)
        assert phi(0.0) == pytest.approx(exact_exp.phi_exact(0.0, A), abs=1e-5)
        assert delta0(0.0) == pytest.approx(exact_exp.delta0_exact(0.0, A), abs=1e-5)

    def test_phi_at_equalizer_is_two(self, e12, grid_gamma2):
        assert arl_false_alarm(e12, A_GAMMA2, grid_gamma2)(R_A_GAMMA2) == pytest.approx(2.0, abs=1e-4)

    def test_delta0_at_equalizer(self, e12, grid_gamma2):
        assert add_at_change_zero(e12, A_GAMMA2, grid_gamma2)(R_A_GAMMA2) == pytest.approx(
            JP_SRR_GAMMA2, abs=5e-5)

    def test_phi_at_zero_for_unit_threshold(self, e12):
        expected = 1.0 + 0.5 / (1.0 - 0.5 * math.log(2.0))
        assert arl_false_alarm(e12, 1.0)(0.0) == pytest.approx(expected, abs=1e-10)

    def test_psi(self, e12, grid_gamma2):
        p = psi(e12, A_GAMMA2, grid_gamma2)
        expected = [exact_exp.psi_exact(x, A_GAMMA2) for x in R_POINTS]
        np.testing.assert_allclose(p(R_POINTS), expected, atol=1e-8, rtol=0)

    def test_tiny_threshold(self, e12):
        A = 1e-9
        assert arl_false_alarm(e12, A)(0.0) == pytest.approx(1.0, abs=1e-8)
        assert add_at_change_zero(e12, A)(0.0) == pytest.approx(1.0, abs=1e-8)
        assert psi(e12, A)(0.0) == pytest.approx(1.0, abs=1e-8)

    def test_lower_bound_attained_at_equalizer(self, e12, grid_gamma2):
        oc = operating_characteristics(e12, A_GAMMA2, grid_gamma2)
        r = exact_exp.equalizer_headstart(A_GAMMA2)
        bound = integral_add_lower_bound(r, oc.delta0(r), oc.psi(r), oc.phi(r))
        assert bound == pytest.approx(JP_SRR_GAMMA2, abs=5e-5)
        assert bound == pytest.approx(exact_exp.sup_add_exact(r, A_GAMMA2), abs=1e-8)


class TestSequences:
    def test_base_case(self, e12, grid_gamma2):
        deltas, rhos = delay_and_survival_sequences(e12, A_GAMMA2, grid_gamma2, 0)
        assert len(deltas) == len(rhos) == 1
        np.testing.assert_array_equal(rhos[0].values, 1.0)

    def test_cadd_constant_from_step_one(self, e12, grid_gamma2):
        deltas, rhos = delay_and_survival_sequences(e12, A_GAMMA2, grid_gamma2, 20)
        target = exact_exp.delta_bar_exact(A_GAMMA2)
        for nu in range(1, 21):
            np.testing.assert_allclose(cadd(deltas[nu], rhos[nu]).values, target, atol=1e-10)

    def test_rho_one_closed_form(self, e12, grid_gamma2):
        _, rhos = delay_and_survival_sequences(e12, A_GAMMA2, grid_gamma2, 3)
        for nu in (1, 2, 3):
            expected = [exact_exp.rho_exact(nu, x, A_GAMMA2) for x in R_POINTS]
            np.testing.assert_allclose(rhos[nu](R_POINTS), expected, atol=1e-11)

    def test_survival_nonincreasing_and_sums_to_arl(self, e12, grid_gamma2):
        deltas, rhos = delay_and_survival_sequences(e12, A_GAMMA2, grid_gamma2, 60)
        values = np.array([p.values for p in rhos])
        assert np.all(values > 0) and np.all(values <= 1)
        assert np.all(np.diff(values, axis=0) <= 1e-15)
        phi = arl_false_alarm(e12, A_GAMMA2, grid_gamma2)
        np.testing.assert_allclose(values.sum(axis=0), phi.values, rtol=1e-10)

    def test_partial_sums_approach_psi(self, e12, grid_gamma2):
        deltas, _ = delay_and_survival_sequences(e12, A_GAMMA2, grid_gamma2, 50)
        total = np.sum([d.values for d in deltas], axis=0)
        np.testing.assert_allclose(total, psi(e12, A_GAMMA2, grid_gamma2).values, rtol=1e-10)

    def test_cadd_at_zero_is_delta0(self, e12, grid_gamma2):
        deltas, rhos = delay_and_survival_sequences(e12, A_GAMMA2, grid_gamma2, 0)
        np.testing.assert_array_equal(cadd(deltas[0], rhos[0]).values, deltas[0].values)

    def test_degenerate_survival(self, grid_gamma2):
        tiny = GridFunction(grid_gamma2, np.full(grid_gamma2.size, 1e-13))
        with pytest.raises(SolverError, match="degenerate"):
            cadd(tiny, tiny)

    def test_negative_nu_max(self, e12):
        with pytest.raises(ValueError, match="nonnegative"):
            delay_and_survival_sequences(e12, 1.0, None, -1)


class TestOperatingCharacteristics:
    def test_truncation_stops_early_for_equalizer(self, e12, grid_gamma2):
        oc = operating_characteristics(e12, A_GAMMA2, grid_gamma2)
        assert 5 <= oc.nu_max <= 10

    def test_survival_guard(self, e12):
        # ρ_10 ≈ 0.05 · 0.0477^9 at A = 0.1, far below 1e-12
        oc = operating_characteristics(e12, 0.1, GridSpec(64), nu_max=10)
        with pytest.raises(SolverError, match="lower nu_max"):
            oc.cadd_profile(0.0)
        auto = operating_characteristics(e12, 0.1, GridSpec(64))
        assert np.all(np.isfinite(auto.cadd_profile(0.0)))

    def test_explicit_nu_max(self, e12, grid_gamma2):
        oc = operating_characteristics(e12, A_GAMMA2, grid_gamma2, nu_max=20)
        assert oc.nu_max == 20

    def test_profile_is_flat_at_equalizer(self, e12, grid_gamma2):
        oc = operating_characteristics(e12, A_GAMMA2, grid_gamma2, nu_max=20)
        r = exact_exp.equalizer_headstart(A_GAMMA2)
        profile = oc.cadd_profile(r)
        assert len(profile) == 21
        assert np.ptp(profile) < 1e-8

    def test_profile_peaks_at_zero_without_head_start(self, e12, grid_gamma2):
        profile = operating_characteristics(e12, A_GAMMA2, grid_gamma2).cadd_profile(0.0)
        assert np.argmax(profile) == 0
        assert profile[0] == pytest.approx(exact_exp.delta0_exact(0.0, A_GAMMA2), abs=1e-10)

    def test_phi_nonincreasing_in_head_start(self, e12, grid_gamma2):
        oc = operating_characteristics(e12, A_GAMMA2, grid_gamma2)
        assert np.all(np.diff(oc.phi(R_POINTS)) <= 0)

    def test_grid_refinement(self, e12):
        coarse = operating_characteristics(e12, 1.2, GridSpec(256), nu_max=3)
        fine = operating_characteristics(e12, 1.2, GridSpec(512), nu_max=3)
        r = np.linspace(0.0, 1.1, 23)
        for name in ("phi", "delta0", "psi"):
            a, b = getattr(coarse, name)(r), getattr(fine, name)(r)
            assert np.max(np.abs(a - b)) < 1e-8

    def test_gaussian_model_solves(self, gaussian):
        oc = operating_characteristics(gaussian, 10.0, GridSpec(256), nu_max=5)
        assert np.all(oc.phi.values >= 1.0)
        assert np.all(oc.delta0.values >= 1.0)
        assert oc.phi(0.0) > oc.phi(5.0)

    def test_at(self, e12, grid_gamma2):
        oc = operating_characteristics(e12, A_GAMMA2, grid_gamma2, nu_max=2)
        point = oc.at(0.0)
        assert point["phi"] == pytest.approx(exact_exp.phi_exact(0.0, A_GAMMA2), abs=1e-10)
