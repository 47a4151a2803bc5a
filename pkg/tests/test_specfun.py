"""Special-function checks against independent oracles and closed forms."""

import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from sv32mc import specfun

# ---------------------------------------------------------------------------
# Independent log-gamma oracle: recurrence shift into the deep right
# half-plane plus the Stirling series with Bernoulli-number corrections.
# Shares no code with the Lanczos path under test.
# ---------------------------------------------------------------------------

_BERNOULLI = (
    1 / 6,
    -1 / 30,
    1 / 42,
    -1 / 30,
    5 / 66,
    -691 / 2730,
    7 / 6,
    -3617 / 510,
)


def stirling_loggamma(z: complex, shift: int = 40) -> complex:
    w = complex(z)
    corr = 0.0 + 0.0j
    for _ in range(shift):
        corr += cmath.log(w)
        w += 1.0
    out = (w - 0.5) * cmath.log(w) - w + 0.5 * math.log(2.0 * math.pi)
    for i, b in enumerate(_BERNOULLI, start=1):
        out += b / ((2 * i) * (2 * i - 1) * w ** (2 * i - 1))
    return out - corr


# Frozen output of stirling_loggamma(1 + 1j); agrees with 40-digit
# arbitrary-precision evaluation to ~1e-14.
LOGGAMMA_1_PLUS_I = complex(-0.6509231993018564, -0.3016403204675332)

# I_0(1) summed to 30 terms in exact rational arithmetic:
# sum_k 1 / (4^k (k!)^2) -> 1.2660658777520084.
I0_AT_1 = 1.2660658777520084


def ratio_value(mu, nu, z):
    return specfun.bessel_i_ratio(mu, nu, z)


class TestLogGamma:
    def test_trivial_values(self):
        assert specfun.log_gamma_complex(1.0) == 0.0
        assert abs(specfun.log_gamma_complex(5.0) - math.log(24.0)) < 1e-13
        assert abs(specfun.log_gamma_complex(0.5) - 0.5 * math.log(math.pi)) < 1e-13

    def test_real_inputs_have_zero_imaginary_part(self):
        for x in (0.1, 0.5, 1.0, 3.7, 120.0):
            assert specfun.log_gamma_complex(x).imag == 0.0

    def test_against_stirling_oracle_at_1_plus_i(self):
        got = specfun.log_gamma_complex(1 + 1j)
        oracle = stirling_loggamma(1 + 1j)
        assert abs(got - oracle) < 1e-12
        assert abs(got - LOGGAMMA_1_PLUS_I) < 1e-12

    def test_against_stirling_oracle_on_grid(self):
        for re in (-3.3, -0.2, 0.7, 2.0, 40.0):
            for im in (-7.0, -0.5, 0.4, 15.0):
                z = complex(re, im)
                assert abs(specfun.log_gamma_complex(z) - stirling_loggamma(z)) < 1e-11

    def test_pole_errors(self):
        for z in (0.0, -1.0, -2.0, -17.0):
            with pytest.raises(specfun.PoleError):
                specfun.log_gamma_complex(z)

    def test_reflection_identity_mod_2pi(self):
        # exp(lhs - rhs) == 1 tests the identity modulo 2*pi*i.
        rng = np.random.default_rng(11)
        for _ in range(40):
            z = complex(rng.uniform(-4, 4), rng.uniform(0.05, 4) * rng.choice([-1, 1]))
            lhs = specfun.log_gamma_complex(z) + specfun.log_gamma_complex(1 - z)
            rhs = cmath.log(math.pi) - cmath.log(cmath.sin(math.pi * z))
            assert abs(cmath.exp(lhs - rhs) - 1.0) < 1e-10

    def test_vectorized_matches_scalar(self):
        zs = np.array([1 + 1j, 0.5 + 0j, 3 - 2j, -1.5 + 0.3j])
        vec = specfun.log_gamma_complex(zs)
        for i, z in enumerate(zs):
            assert vec[i] == specfun.log_gamma_complex(complex(z))


class TestBesselI:
    def test_half_integer_closed_form(self):
        # I_{1/2}(z) = sqrt(2/(pi z)) sinh(z)
        for z in np.geomspace(0.1, 50.0, 25):
            got = specfun.bessel_i_log(0.5, z)
            log_sinh = z + math.log1p(-math.exp(-2.0 * z)) - math.log(2.0)
            ref = 0.5 * math.log(2.0 / (math.pi * z)) + log_sinh
            assert abs(math.expm1(got.log_magnitude - ref)) < 1e-10
            assert got.phase == 0.0

    def test_i0_at_1_against_series_oracle(self):
        acc = Fraction(0)
        fact = 1
        for k in range(30):
            if k > 0:
                fact *= k
            acc += Fraction(1, 4**k * fact * fact)
        oracle = float(acc)
        assert abs(oracle - I0_AT_1) < 1e-15
        got = specfun.bessel_i_log(0.0, 1.0)
        assert abs(got.log_magnitude - math.log(oracle)) < 1e-12

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            nu = complex(rng.uniform(0.5, 120.0), rng.uniform(0.1, 80.0))
            z = rng.uniform(0.2, 300.0)
            a = specfun.bessel_i_log(nu, z)
            b = specfun.bessel_i_log(np.conj(nu), z)
            assert abs(a.log_magnitude - b.log_magnitude) < 1e-12
            assert abs(a.phase + b.phase) < 1e-12 or abs(abs(a.phase) - math.pi) < 1e-12

    @pytest.mark.parametrize("nu", [1.0, 2.5, 7.0])
    @pytest.mark.parametrize("z", [0.5, 5.0, 50.0])
    def test_recurrence(self, nu, z):
        def val(order):
            ls = specfun.bessel_i_log(order, z)
            return ls.to_complex().real

        lhs = val(nu - 1.0) - val(nu + 1.0)
        rhs = (2.0 * nu / z) * val(nu)
        assert abs(lhs - rhs) <= 1e-9 * abs(rhs)

    def test_branch_continuity_at_switch(self):
        # The series and asymptotic branches must agree where they meet.
        for nu in (0.5, 1.0, 2.5, 7.0):
            for z in np.linspace(specfun.Z_SWITCH - 10.0, specfun.Z_SWITCH + 10.0, 9):
                nu_arr = np.asarray(complex(nu))
                z_arr = np.asarray(float(z))
                ser = specfun._log_bessel_i_series(nu_arr, z_arr)
                asy, ok = specfun._log_bessel_i_asym(nu_arr, z_arr)
                assert bool(ok)
                assert abs(complex(ser) - complex(asy)) < 1e-8

    def test_asym_fallback_large_order(self):
        # Just above the switch with a large order the expansion cannot
        # certify accuracy and the series must take over seamlessly.
        got = specfun.bessel_i_log(101.0, 450.0)
        ser = complex(specfun._log_bessel_i_series(np.asarray(101.0 + 0j), np.asarray(450.0)))
        assert abs(got.log_magnitude - ser.real) < 1e-12

    def test_series_term_cap_raises(self):
        with pytest.raises(specfun.NonConvergenceError):
            specfun._log_bessel_i_series(np.asarray(0.5 + 0j), np.asarray(50_000.0))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            specfun.bessel_i_log(0.5, -1.0)
        with pytest.raises(ValueError):
            specfun.bessel_i_log(-1.5, 1.0)

    def test_phase_normalized(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            nu = complex(rng.uniform(1, 200), -rng.uniform(1, 200))
            z = rng.uniform(1.0, 350.0)
            got = specfun.bessel_i_log(nu, z)
            assert -math.pi < got.phase <= math.pi


class TestBesselRatio:
    def test_equal_orders_give_exactly_one(self):
        for nu in (1.0, 2.5, 101.0):
            assert ratio_value(nu, nu, 7.3) == 1.0 + 0.0j

    def test_real_order_dominance_small_z(self):
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 30
        nu, mu, z = 2.0, 5.0, 0.3
        got = ratio_value(mu, nu, z)
        ref = complex(mpmath.besseli(mu, z) / mpmath.besseli(nu, z))
        assert abs(got - ref) < 1e-12 * abs(ref) + 1e-15
        assert abs(got) < 1.0

    def test_modulus_bounded_for_complex_orders(self):
        # Orders of the characteristic-function form sqrt(nu^2 - i t); the
        # bound |ratio| <= 1 is verified empirically on a grid.
        nu = 101.0
        for t in (1e-2, 1.0, 1e2, 1e4, 1e6):
            for z in (0.5, 5.0, 47.0, 300.0, 1e4):
                mu = complex(np.sqrt(complex(nu**2, -t)))
                val = ratio_value(mu, nu, z)
                assert abs(val) <= 1.0 + 1e-9

    def test_no_overflow_at_huge_argument(self):
        val = ratio_value(2.5, 1.0, 1.0e6)
        assert np.isfinite(val.real) and np.isfinite(val.imag)
        assert abs(val) <= 1.0 + 1e-9


def test_log_scaled_to_complex():
    ls = specfun.LogScaled(log_magnitude=math.log(2.0), phase=math.pi / 2)
    val = ls.to_complex()
    assert abs(val - 2.0j) < 1e-15
