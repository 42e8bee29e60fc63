import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tde_plankton import equilibria, model
from tde_plankton.exceptions import DomainError, NoCoexistenceError, NotExistError
from tde_plankton.model import ModelParams

from conftest import bisect_oracle, trapezoid


class TestThresholds:
    def test_nt1_against_bisection_oracle(self, table1):
        p = table1()
        oracle = bisect_oracle(
            lambda n: model.f_uptake(n, p) - p.lam / p.mu, 0.0, 1.0
        )
        assert equilibria.compute_nt1(p) == pytest.approx(oracle, abs=1e-12)
        assert equilibria.compute_nt1(p) == pytest.approx(2.8897e-3, abs=1e-7)

    def test_nt1_at_half_saturating_mortality(self):
        p = ModelParams(lam=5.9 / 2)
        assert equilibria.compute_nt1(p) == pytest.approx(p.k, rel=1e-14)

    def test_ceiling_matches_quoted_value(self, table1):
        p = table1(delta0=0.17)
        assert equilibria.m_ceiling(p) == pytest.approx(19.77, abs=0.01)

    def test_ceiling_infinite_without_juvenile_mortality(self, table1):
        assert math.isinf(equilibria.m_ceiling(table1(delta0=0.0)))

    def test_ceiling_unit_case(self):
        # gamma*g = delta*e with unit juvenile mortality gives a ceiling of 1
        p = ModelParams(gamma=1.0, g=math.e, delta=1.0, delta0=1.0)
        assert equilibria.m_ceiling(p) == pytest.approx(1.0, rel=1e-14)


class TestP2Star:
    def test_no_delay_closed_form(self, table1):
        for delta0 in (0.0, 0.17):
            p = table1(delta0=delta0, m=0.0)
            expect = model.h_inverse(p.delta / (p.gamma * p.g), p)
            assert equilibria.solve_p2star(p) == pytest.approx(expect, rel=1e-14)
            assert equilibria.solve_p2star(p) == pytest.approx(3.5941e-2, abs=1e-6)

    def test_maturity_six_against_oracle(self, table1):
        p = table1(delta0=0.17, m=6.0)

        def residual(q):
            return (
                model.r_growth(q, p)
                * math.log(p.gamma * p.g * model.h_grazing(q, p) / p.delta)
                - p.delta0 * p.m
            )

        oracle = bisect_oracle(residual, 0.04, 10.0, tol=1e-13)
        val = equilibria.solve_p2star(p)
        assert val == pytest.approx(oracle, rel=1e-10)
        assert val == pytest.approx(0.236, abs=1e-3)

    def test_blows_up_toward_ceiling(self, table1):
        vals = [
            equilibria.solve_p2star(table1(delta0=0.17, m=m))
            for m in (19.0, 19.5, 19.7)
        ]
        assert vals[0] < vals[1] < vals[2]
        assert vals[2] > 100.0 and math.isfinite(vals[2])

    def test_beyond_ceiling_rejected(self, table1):
        with pytest.raises(NoCoexistenceError):
            equilibria.solve_p2star(table1(delta0=0.17, m=19.8))

    def test_monotone_in_maturity(self, table1):
        grid = np.linspace(0.0, 17.0, 9)
        vals = [equilibria.solve_p2star(table1(delta0=0.17, m=float(m))) for m in grid]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestNt2:
    def test_no_delay_value(self, table1):
        p = table1(delta0=0.17, m=0.0)
        expect = equilibria.compute_nt1(p) + equilibria.solve_p2star(p)
        assert equilibria.compute_nt2(p) == pytest.approx(expect, rel=1e-14)
        assert equilibria.compute_nt2(p) == pytest.approx(3.8831e-2, abs=1e-6)

    def test_independent_of_maturity_without_juvenile_mortality(self, table1):
        a = equilibria.compute_nt2(table1(delta0=0.0, m=0.0))
        b = equilibria.compute_nt2(table1(delta0=0.0, m=12.0))
        assert a == b

    def test_increases_with_maturity_under_mortality(self, table1):
        a = equilibria.compute_nt2(table1(delta0=0.17, m=0.0))
        b = equilibria.compute_nt2(table1(delta0=0.17, m=6.0))
        assert b > a

    def test_exceeds_nt1(self, table1):
        p = table1(delta0=0.17, m=6.0)
        report = equilibria.thresholds(p)
        assert report.nt2 > report.nt1


def _independent_e2_oracle(p):
    """Nested bisection re-derivation of the coexistence state (test-local)."""
    p2 = bisect_oracle(
        lambda q: model.r_growth(q, p)
        * math.log(p.gamma * p.g * model.h_grazing(q, p) / p.delta)
        - p.delta0 * p.m,
        model.h_inverse(p.delta / (p.gamma * p.g), p) * (1 + 1e-10),
        1e3,
        tol=1e-13,
    ) if p.delta0 > 0 and p.m > 0 else model.h_inverse(p.delta / (p.gamma * p.g), p)
    r2 = model.r_growth(p2, p)
    disc = p.m / r2 if p.delta0 == 0 else (1 - math.exp(-p.delta0 * p.m / r2)) / p.delta0
    h2 = model.h_grazing(p2, p)

    def balance(n):
        z = (p.mu * model.f_uptake(n, p) - p.lam) * p2 / (p.g * h2)
        return n + p2 + z * (1 + p.gamma * p.g * h2 * disc) - p.n_total

    n2 = bisect_oracle(balance, equilibria.compute_nt1(p), p.n_total, tol=1e-14)
    z2 = (p.mu * model.f_uptake(n2, p) - p.lam) * p2 / (p.g * h2)
    return n2, p2, z2


class TestSolveE2:
    def test_table_values_against_nested_oracle(self, table1):
        p = table1(delta0=0.0, m=5.0, n_total=1.0)
        eq = equilibria.solve_e2(p)
        n2, p2, z2 = _independent_e2_oracle(p)
        assert eq.residual <= 1e-10 * max(1.0, p.n_total)
        assert eq.n_star == pytest.approx(n2, rel=1e-9)
        assert eq.p_star == pytest.approx(p2, rel=1e-9)
        assert eq.z_star == pytest.approx(z2, rel=1e-9)
        assert all(0 < v < p.n_total for v in (eq.n_star, eq.p_star, eq.z_star))

    def test_collapses_to_threshold_at_onset(self, table1):
        p = table1(delta0=0.17, m=4.0)
        nt2 = equilibria.compute_nt2(p)
        eq = equilibria.solve_e2(table1(delta0=0.17, m=4.0, n_total=nt2 * (1 + 1e-8)))
        assert eq.z_star < 1e-6
        assert eq.n_star == pytest.approx(equilibria.compute_nt1(p), rel=1e-6)

    def test_biomass_moves_nutrient_not_phytoplankton(self, table1):
        eqs = [
            equilibria.solve_e2(table1(delta0=0.17, m=6.0, n_total=nt))
            for nt in (1.0, 2.0, 4.0)
        ]
        assert eqs[0].p_star == eqs[1].p_star == eqs[2].p_star
        assert eqs[0].n_star < eqs[1].n_star < eqs[2].n_star
        assert eqs[0].z_star < eqs[1].z_star < eqs[2].z_star

    def test_below_threshold_rejected(self, table1):
        p = table1(delta0=0.17, m=6.0)
        nt2 = equilibria.compute_nt2(p)
        with pytest.raises(NotExistError):
            equilibria.solve_e2(table1(delta0=0.17, m=6.0, n_total=0.9 * nt2))

    def test_delta0_continuity(self, table1):
        a = equilibria.solve_e2(table1(delta0=1e-8, m=5.0, n_total=1.0))
        b = equilibria.solve_e2(table1(delta0=0.0, m=5.0, n_total=1.0))
        assert a.n_star == pytest.approx(b.n_star, rel=1e-5)
        assert a.z_star == pytest.approx(b.z_star, rel=1e-5)

    @settings(max_examples=60, deadline=None)
    @given(
        m_frac=st.floats(min_value=0.0, max_value=0.9),
        lg_nt=st.floats(min_value=0.05, max_value=2.0),
        delta0=st.sampled_from([0.0, 0.05, 0.17]),
        l=st.floats(min_value=0.02, max_value=1.0),
    )
    def test_residual_property(self, m_frac, lg_nt, delta0, l):
        p = ModelParams(delta0=delta0, l=l, m=0.0, n_total=1.0)
        ceiling = equilibria.m_ceiling(p)
        m = m_frac * min(ceiling, 30.0)
        p = ModelParams(delta0=delta0, l=l, m=m, n_total=1.0)
        nt2 = equilibria.compute_nt2(p)
        p = ModelParams(delta0=delta0, l=l, m=m, n_total=nt2 * 10 ** lg_nt)
        eq = equilibria.solve_e2(p)
        assert eq.residual <= 1e-10 * max(1.0, p.n_total)
        assert equilibria.compute_nt2(p) > equilibria.compute_nt1(p)
        # coexistence implies the phytoplankton-only state exists too
        assert equilibria.solve_e1(p).exists


class TestSpectrum:
    def test_zero_for_phytoplankton_only(self, table1):
        p = table1(delta0=0.17, m=5.0, n_total=0.02)
        e1 = equilibria.solve_e1(p)
        s = np.linspace(0, p.m, 7)
        assert np.all(equilibria.equilibrium_spectrum(e1, s, p) == 0.0)

    def test_flat_without_juvenile_mortality(self, table1):
        p = table1(delta0=0.0, m=5.0, n_total=1.0)
        e2 = equilibria.solve_e2(p)
        s = np.linspace(0, p.m, 9)
        rho = equilibria.equilibrium_spectrum(e2, s, p)
        expect = (
            p.gamma * p.g * e2.z_star * model.h_grazing(e2.p_star, p)
            / model.r_growth(e2.p_star, p)
        )
        assert np.all(rho == pytest.approx(expect, rel=1e-14))

    def test_conservation_closure_by_quadrature(self, table1):
        # oracle: 1e4-panel trapezoid of the spectrum closes the biomass budget
        p = table1(delta0=0.17, m=6.0, n_total=1.0)
        e2 = equilibria.solve_e2(p)
        s = np.linspace(0.0, p.m, 10_001)
        pool = trapezoid(equilibria.equilibrium_spectrum(e2, s, p), s)
        total = e2.n_star + e2.p_star + e2.z_star + pool
        assert total == pytest.approx(p.n_total, abs=1e-8)

    def test_outside_maturity_range_rejected(self, table1):
        p = table1(delta0=0.17, m=6.0, n_total=1.0)
        e2 = equilibria.solve_e2(p)
        with pytest.raises(DomainError):
            equilibria.equilibrium_spectrum(e2, 6.5, p)


class TestSweep:
    def test_regimes_partition_the_grid(self, table1):
        p = table1(delta0=0.17, m=5.0)
        nt1 = equilibria.compute_nt1(p)
        nt2 = equilibria.compute_nt2(p)
        grid = np.logspace(-4, 2, 200)
        rows = equilibria.classify_and_sweep(p, grid)
        for row in rows:
            if row.kind == "degenerate":
                continue
            if row.n_total < nt1:
                assert row.kind == "e0"
                assert row.n_star == row.n_total and row.p_star == 0.0
            elif row.n_total < nt2:
                assert row.kind == "E1"
                assert row.n_star == pytest.approx(nt1, rel=1e-12)
            else:
                assert row.kind == "E2"
                assert row.z_star > 0

    def test_phytoplankton_linear_in_middle_regime(self, table1):
        p = table1(delta0=0.17, m=5.0)
        nt1 = equilibria.compute_nt1(p)
        nt2 = equilibria.compute_nt2(p)
        grid = np.linspace(nt1 * 1.5, nt2 * 0.9, 20)
        rows = equilibria.classify_and_sweep(p, grid)
        for row in rows:
            assert row.p_star == pytest.approx(row.n_total - nt1, rel=1e-12)

    def test_threshold_point_tagged_degenerate(self, table1):
        p = table1(delta0=0.17, m=5.0)
        nt2 = equilibria.compute_nt2(p)
        rows = equilibria.classify_and_sweep(p, np.array([nt2 * 0.5, nt2, nt2 * 2]))
        assert rows[1].kind == "degenerate"
        assert math.isnan(rows[1].n_star)

    def test_decreasing_grid_rejected(self, table1):
        with pytest.raises(DomainError):
            equilibria.classify_and_sweep(table1(), np.array([1.0, 0.5]))


class TestResolveRStar:
    def test_prefers_coexistence_equilibrium(self, table1):
        p = table1(delta0=0.17, m=6.0, n_total=1.0)
        e2 = equilibria.solve_e2(p)
        assert equilibria.resolve_r_star(p).r_star == pytest.approx(
            model.r_growth(e2.p_star, p), rel=1e-14
        )

    def test_falls_back_to_phytoplankton_only(self, table1):
        p = table1(delta0=0.17, m=6.0, n_total=0.02)
        e1 = equilibria.solve_e1(p)
        assert equilibria.resolve_r_star(p).r_star == pytest.approx(
            model.r_growth(e1.p_star, p), rel=1e-14
        )

    def test_falls_back_to_total_biomass(self, table1):
        p = table1(delta0=0.17, m=6.0, n_total=1e-3)
        assert equilibria.resolve_r_star(p).r_star == pytest.approx(
            model.r_growth(1e-3, p), rel=1e-14
        )

    def test_explicit_value_wins(self, table1):
        p = table1(delta0=0.17, m=6.0, n_total=1.0, r_star=0.25)
        assert equilibria.resolve_r_star(p).r_star == 0.25
