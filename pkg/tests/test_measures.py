import json
import math

import numpy as np
import pytest

from perfectsim import (
    CouplingTicket,
    InvalidLawError,
    Prob1D,
    SupercriticalError,
    dominates,
    fixed_point_sigma,
    ks_one_sample,
    monotone_coupled_pair,
)
from perfectsim.measures import ExpPiece, ParetoPiece, UniformPiece

from lawgen import random_law

ATOM_EXP = Prob1D(1.0, atoms=[(1.0, 0.5)], pieces=[ExpPiece(1.0, 1.0, 0.5)])


class TestSurvival:
    def test_whole_mass_above(self):
        assert Prob1D.point_mass(1.0).survival(0.5) == 1.0

    def test_right_continuity_at_atom(self):
        d = Prob1D.point_mass(1.0)
        assert d.survival(1.0) == 0.0
        assert d.survival_left(1.0) == 1.0

    def test_exponential_piece_closed_form(self):
        assert ATOM_EXP.survival(2.0) == pytest.approx(0.5 * math.exp(-1.0), abs=1e-15)

    def test_truncated_pieces(self):
        d = Prob1D(
            1.0,
            pieces=[ExpPiece(1.0, 1.0, 0.5, hi=2.0), ParetoPiece(2.0, 0.5, hi=4.0)],
        )
        assert d.survival(0.9) == 1.0
        assert d.survival(2.0) == pytest.approx(0.5)
        assert d.survival(4.0) == 0.0
        # halfway survival of the truncated pareto: (2/3 - 1/2)/(1 - 1/2)
        assert d.survival(3.0) == pytest.approx(0.5 * (2 / 3 - 0.5) / 0.5)


class TestQuantile:
    def test_degenerate(self):
        assert Prob1D.point_mass(3.0).quantile(0.7) == 3.0

    def test_uniform_inversion(self):
        d = Prob1D(1.0, pieces=[UniformPiece(1.0, 2.0, 1.0)])
        assert d.quantile(0.25) == pytest.approx(1.25)

    def test_atom_plus_exponential(self):
        assert ATOM_EXP.quantile(0.75) == pytest.approx(1.0 + math.log(2.0), abs=1e-12)

    @pytest.mark.parametrize("p", [-0.1, 0.0, 1.0, 1.7])
    def test_rejects_bad_p(self, p):
        with pytest.raises(InvalidLawError):
            ATOM_EXP.quantile(p)

    def test_generalized_inverse_consistency(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            d = random_law(rng)
            for p in rng.uniform(1e-6, 1 - 1e-6, 40):
                t = d.quantile(p)
                assert d.cdf(t) >= p - 1e-9
                eps = 1e-9 * max(1.0, abs(t))
                assert d.cdf(t - eps) < p + 1e-9


class TestSample:
    def test_deterministic_given_ticket(self):
        t = CouplingTicket(0.37)
        assert ATOM_EXP.sample(t) == ATOM_EXP.sample(t)

    def test_point_mass_ignores_ticket(self):
        d = Prob1D.point_mass(1.0)
        for u in (0.01, 0.5, 0.99):
            assert d.sample(CouplingTicket(u)) == 1.0

    def test_uniform_median(self):
        d = Prob1D(1.0, pieces=[UniformPiece(1.0, 2.0, 1.0)])
        assert d.sample(CouplingTicket(0.5)) == pytest.approx(1.5)

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.2, 1.1])
    def test_ticket_validation(self, u):
        with pytest.raises(InvalidLawError):
            CouplingTicket(u)

    def test_sampling_reproduces_law(self):
        # KS of 1e5 inverse-CDF draws against the closed-form CDF
        d = Prob1D(
            1.0,
            atoms=[(1.0, 0.3)],
            pieces=[UniformPiece(1.0, 2.0, 0.3), ExpPiece(2.0, 1.5, 0.4)],
        )
        rng = np.random.default_rng(81)
        us = rng.random(100_000) * (1 - 2e-12) + 1e-12
        draws = [d.quantile(u) for u in us]
        stat, ok = ks_one_sample(draws, d.cdf, lambda t: 1.0 - d.survival_left(t))
        assert ok, f"KS statistic {stat} above the 0.01 critical value"


class TestDominates:
    def test_reflexive(self):
        rng = np.random.default_rng(11)
        for _ in range(15):
            d = random_law(rng)
            assert dominates(d, d)

    def test_point_mass_at_bottom_is_minimal(self):
        rng = np.random.default_rng(12)
        bottom = Prob1D.point_mass(1.0)
        for _ in range(15):
            assert dominates(bottom, random_law(rng, lb=1.0))

    def test_atom_counterexample(self):
        a = Prob1D.point_mass(2.0, lower_bound=1.0)
        b = Prob1D(1.0, atoms=[(1.0, 0.5), (2.0, 0.5)])
        # survival(a, 1) = 1 > 0.5 = survival(b, 1)
        assert not dominates(a, b)
        assert dominates(b, a)

    def test_needs_common_lower_bound(self):
        with pytest.raises(InvalidLawError):
            dominates(Prob1D.point_mass(0.0), Prob1D.point_mass(1.0))


class TestMonotoneCoupledPair:
    def test_equal_laws_give_equal_pair(self):
        for u in (0.1, 0.5, 0.93):
            x, y = monotone_coupled_pair(ATOM_EXP, ATOM_EXP, CouplingTicket(u))
            assert x == y

    def test_components_computed_independently(self):
        a = Prob1D.point_mass(1.0)
        b = Prob1D(1.0, pieces=[UniformPiece(1.0, 2.0, 1.0)])
        assert monotone_coupled_pair(a, b, CouplingTicket(0.9)) == (1.0, pytest.approx(1.9))

    def test_ordered_over_ticket_sweep(self):
        a = ATOM_EXP
        b = Prob1D(1.0, pieces=[ExpPiece(1.0, 0.5, 1.0)])
        assert dominates(a, b)
        rng = np.random.default_rng(13)
        for u in rng.random(10_000) * (1 - 2e-9) + 1e-9:
            x, y = monotone_coupled_pair(a, b, CouplingTicket(u))
            assert x <= y


class TestFixedPointSigma:
    def test_large_gap_limit(self):
        assert fixed_point_sigma(50.0) < 1e-20

    def test_log5_against_iteration_oracle(self):
        d = math.log(5.0)
        s = 0.5
        for _ in range(400):
            s = math.exp(-d * (1.0 - s))
        got = fixed_point_sigma(d)
        assert got == pytest.approx(s, abs=1e-10)
        assert got == pytest.approx(0.3529, abs=2e-4)

    @pytest.mark.parametrize("d", [1.0, 0.5, -3.0])
    def test_supercritical_rejected(self, d):
        with pytest.raises(SupercriticalError):
            fixed_point_sigma(d)

    def test_residual_and_monotonicity(self):
        ds = [1.05, 1.2, 1.6094, 2.0, 3.0, 5.0, 10.0]
        sigmas = []
        for d in ds:
            s = fixed_point_sigma(d)
            assert abs(s - math.exp(-d * (1.0 - s))) < 1e-12
            sigmas.append(s)
        assert all(a > b for a, b in zip(sigmas[:-1], sigmas[1:]))


class TestInvariants:
    def test_survival_non_increasing(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            d = random_law(rng)
            top = d.far_quantile(1 - 1e-9)
            ts = np.linspace(d.lower_bound - 0.5, top + 0.5, 300)
            vals = [d.survival(t) for t in ts]
            assert all(a >= b - 1e-12 for a, b in zip(vals[:-1], vals[1:]))
            assert d.survival(d.lower_bound - 1e-9) == pytest.approx(1.0, abs=1e-12)

    def test_mass_validation(self):
        with pytest.raises(InvalidLawError):
            Prob1D(1.0, atoms=[(1.0, 0.6)], pieces=[ExpPiece(1.0, 1.0, 0.5)])

    def test_overlapping_pieces_rejected(self):
        with pytest.raises(InvalidLawError):
            Prob1D(1.0, pieces=[UniformPiece(1.0, 3.0, 0.5), UniformPiece(2.0, 4.0, 0.5)])

    def test_interior_atom_rejected(self):
        with pytest.raises(InvalidLawError):
            Prob1D(1.0, atoms=[(1.5, 0.5)], pieces=[UniformPiece(1.0, 2.0, 0.5)])


class TestSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            d = random_law(rng)
            d2 = Prob1D.from_dict(json.loads(json.dumps(d.to_dict())))
            assert d2.to_dict() == d.to_dict()
            ts = np.linspace(d.lower_bound, d.far_quantile(1 - 1e-6), 50)
            for t in ts:
                assert d2.survival(t) == d.survival(t)
