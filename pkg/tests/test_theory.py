import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from critiq import theory
from critiq.bessel import SWITCH, i1e
from critiq.dists import calibrate, parse_distribution
from critiq.errors import CriticalityError, DegenerateModelError, ParameterError

INV_SQRT_PI = 1 / math.sqrt(math.pi)
# mpmath, 30 digits: quad of exp(-2t) I1(2t)/t over [1, inf)
MM1_SURVIVAL_AT_1 = 0.5237776118026087


def model(a, s, lam=1.0, rho=1.0):
    return calibrate(parse_distribution(a), parse_distribution(s), lam, rho)


class TestBessel:
    def test_against_scipy_dense(self):
        z = np.concatenate([np.linspace(0, 60, 6001), np.logspace(-8, 8, 400)])
        ref = special.ive(1, z)
        np.testing.assert_allclose(i1e(z), ref, rtol=1e-14, atol=1e-300)

    @pytest.mark.parametrize("z", [SWITCH * (1 - 1e-12), SWITCH, SWITCH * (1 + 1e-12)])
    def test_switch_is_continuous(self, z):
        assert i1e(z) == pytest.approx(special.ive(1, z), rel=1e-14)

    def test_small_argument(self):
        assert i1e(0.0) == 0.0
        assert i1e(1e-10) == pytest.approx(5e-11, rel=1e-9)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            i1e(-1.0)

    @given(st.floats(min_value=0, max_value=1e6))
    def test_property(self, z):
        assert i1e(z) == pytest.approx(special.ive(1, z), rel=1e-13, abs=1e-300)


class TestMM1BusySurvival:
    def test_total_mass(self):
        assert theory.mm1_busy_survival(1.0, 0.0) == pytest.approx(1.0, abs=1e-10)

    def test_density_integrates_to_one(self):
        f = lambda t: theory.mm1_busy_density(1.0, t)
        parts = [integrate.quad(f, a, b, limit=400, epsabs=0, epsrel=1e-12)[0]
                 for a, b in [(0, 1), (1, 100), (100, 1e4)]]
        tail = integrate.quad(f, 1e4, np.inf, limit=400)[0]
        assert abs(sum(parts) + tail - 1.0) < 1e-6

    def test_frozen_quadrature_oracle(self):
        assert theory.mm1_busy_survival(1.0, 1.0) == pytest.approx(MM1_SURVIVAL_AT_1, rel=1e-12)

    @pytest.mark.parametrize("lam", [0.25, 1.0, 3.0])
    def test_closed_form_oracle(self, lam):
        # P(B > x) = exp(-z) (I0(z) + I1(z)), z = 2 lam x; differentiate to recover the density
        x = np.array([0, 1e-4, 0.01, 0.3, 1, 2.5, 10, 100, 1e3, 1e5, 1e8])
        z = 2 * lam * x
        np.testing.assert_allclose(
            theory.mm1_busy_survival(lam, x), special.ive(0, z) + special.ive(1, z), rtol=1e-8
        )

    def test_monotone_and_tail_matches_stated_asymptotic(self):
        x = np.logspace(-3, 7, 60)
        s = theory.mm1_busy_survival(1.0, x)
        assert np.all(np.diff(s) < 0)
        big = x >= 100
        np.testing.assert_allclose(np.sqrt(x[big]) * s[big], INV_SQRT_PI, rtol=0.01)
        # convergence to 1/sqrt(pi) from below keeps tightening
        assert math.sqrt(1e7) * theory.mm1_busy_survival(1.0, 1e7) == pytest.approx(INV_SQRT_PI, rel=1e-6)

    def test_domain(self):
        with pytest.raises(ParameterError):
            theory.mm1_busy_survival(1.0, -0.1)
        with pytest.raises(ParameterError):
            theory.mm1_busy_survival(0.0, 1.0)


class TestConstants:
    def test_mm1(self):
        r = theory.constants(model("exp:1", "exp:1"))
        assert r.bravo_limit == pytest.approx(0.72676, abs=5e-6)
        assert r.tail_constant_general == pytest.approx(0.56419, abs=5e-6)
        assert r.tail_constant_mm1 == r.tail_constant_mg1 == pytest.approx(INV_SQRT_PI, rel=1e-15)
        assert r.asymptotic_variance == r.bravo_limit  # lam = 1

    def test_mg1_deterministic_service(self):
        r = theory.constants(model("exp:1", "det:1"))
        assert r.tail_constant_mg1 == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)
        assert r.tail_constant_mg1 == pytest.approx(0.79788, abs=5e-6)
        assert r.mean_idle_source == "M/G/1"
        assert r.tail_constant_gm1 is None

    def test_gm1_erlang_arrivals(self):
        r = theory.constants(model("erlang:2,2", "exp:1"))
        assert r.mean_idle == r.mean_idle_gm1 == 0.75
        assert r.tail_constant_gm1 == pytest.approx(math.sqrt(1.5 / (2 * math.pi)), rel=1e-15)
        assert r.tail_constant_gm1 == pytest.approx(0.4886, abs=5e-5)
        assert r.tail_constant_general == pytest.approx(r.tail_constant_gm1, rel=1e-14)

    def test_general_needs_mean_idle(self):
        m = model("erlang:2,2", "h2:2")
        r = theory.constants(m)
        assert r.tail_constant_general is None and r.mean_idle is None
        r = theory.constants(m, mean_idle=0.8)
        assert r.tail_constant_general == pytest.approx(0.8 * math.sqrt(2 / (math.pi * 2.5)))
        assert r.mean_idle_source == "given"

    def test_zero_scv_gives_zero_bravo_limit(self):
        assert theory.bravo_limit(0.0, 0.0) == 0.0

    def test_rejections(self):
        with pytest.raises(CriticalityError):
            theory.constants(model("exp:1", "exp:1", rho=0.9))
        with pytest.raises(DegenerateModelError):
            theory.constants(model("det:1", "det:1"))
        with pytest.raises(ParameterError):
            theory.constants(model("erlang:2,2", "h2:2"), mean_idle=-1.0)

    @given(
        lam=st.floats(min_value=1e-3, max_value=1e3),
        ca2=st.floats(min_value=1e-3, max_value=50),
        cs2=st.floats(min_value=1e-3, max_value=50),
    )
    def test_specialisation_web(self, lam, ca2, cs2):
        # general constant with E[I] = 1/lam and ca2 = 1 is the M/G/1 constant
        assert theory.tail_constant(1 / lam, lam, 1.0, cs2) == pytest.approx(
            theory.tail_constant_mg1(lam, cs2), rel=1e-13)
        # G/M/1 with its own E[I]
        assert theory.tail_constant(theory.mean_idle_gm1(lam, ca2), lam, ca2, 1.0) == pytest.approx(
            theory.tail_constant_gm1(lam, ca2), rel=1e-13)
        mm1 = theory.tail_constant_mm1(lam)
        assert theory.tail_constant_gm1(lam, 1.0) == pytest.approx(mm1, rel=1e-14)
        assert theory.tail_constant_mg1(lam, 1.0) == pytest.approx(mm1, rel=1e-14)
        # busy and count tails differ by P(B > x) ~ P(N > lam x)
        assert theory.n_tail_constant(1.0, lam, ca2, cs2) / math.sqrt(lam) == pytest.approx(
            theory.tail_constant(1.0, lam, ca2, cs2), rel=1e-13)
        assert theory.bravo_limit(ca2, cs2) > 0
        assert theory.asymptotic_variance(lam, ca2, cs2) == pytest.approx(lam * theory.bravo_limit(ca2, cs2))
