"""Complex-order special functions: log-gamma and the modified Bessel function I.

Everything here is evaluated in log scale so that Bessel values at large
argument (or ratios of them) never overflow.  Orders may be complex; the
argument is always real and positive, which is the only case this package
ever needs.

All functions are pure and accept either scalars or numpy arrays; array
inputs are evaluated elementwise with per-element convergence control, so
results do not depend on how calls are batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LogScaled",
    "PoleError",
    "NonConvergenceError",
    "log_gamma_complex",
    "bessel_i_log",
    "bessel_i_log_arr",
    "bessel_i_ratio",
]


class PoleError(ValueError):
    """Raised when log-gamma is requested at a nonpositive integer."""


class NonConvergenceError(RuntimeError):
    """Raised when a series fails its stopping rule within the term cap."""


# Lanczos approximation, g = 7, 9 coefficients (Godfrey's set).  Relative
# accuracy is well below 1e-13 on Re(z) >= 0.5, which covers every call made
# by the Bessel series (orders there always have real part >= 0).
_LANCZOS_G = 7.0
_LANCZOS_C = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)

_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)

# Bessel evaluation controls.  The ascending series is absolutely convergent
# for every finite argument; the asymptotic branch takes over for large
# argument where the series would need O(z) terms.
Z_SWITCH = 400.0
_SERIES_RTOL = 1e-17
_SERIES_MAX_TERMS = 10_000
_ASYM_RTOL = 1e-11
_ASYM_MAX_TERMS = 200

# Exact power-of-two rescale used to keep linear-space partial sums inside
# the double range; multiplying by it is lossless.
_RESCALE = 2.0**-512
_RESCALE_LOG = 512.0 * math.log(2.0)
_RESCALE_TRIGGER = 2.0**500


@dataclass(frozen=True)
class LogScaled:
    """A nonzero complex number stored as exp(log_magnitude) * exp(i*phase).

    phase is normalized to (-pi, pi].
    """

    log_magnitude: float
    phase: float

    def to_complex(self) -> complex:
        """Collapse to an ordinary complex value (may overflow by design)."""
        return math.exp(self.log_magnitude) * complex(
            math.cos(self.phase), math.sin(self.phase)
        )


def _wrap_phase(p):
    """Map angles to (-pi, pi]."""
    return np.pi - np.remainder(np.pi - np.asarray(p), 2.0 * np.pi)


def log_gamma_complex(z):
    """Principal branch of log Gamma(z) for complex z.

    Accepts scalars or arrays.  For real z > 0 the imaginary part is exactly
    zero.  Arguments with Re(z) < 0.5 are shifted into the right half-plane
    with the recurrence log Gamma(z) = log Gamma(z+1) - Log z, which keeps
    the principal branch (both sides are analytic on the cut plane and agree
    on the positive reals).

    Raises PoleError at nonpositive integers on the real axis.
    """
    z_arr = np.asarray(z, dtype=complex)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)

    on_real_axis = z_arr.imag == 0.0
    at_pole = on_real_axis & (z_arr.real <= 0.0) & (z_arr.real == np.floor(z_arr.real))
    if np.any(at_pole):
        raise PoleError(f"log-gamma pole at z = {z_arr[at_pole][0]}")

    out = np.empty_like(z_arr)

    # Shift left-half-plane arguments to Re >= 0.5, collecting Log(z + k).
    shift_log = np.zeros_like(z_arr)
    w = z_arr.copy()
    need = w.real < 0.5
    while np.any(need):
        shift_log[need] += np.log(w[need])
        w[need] += 1.0
        need = w.real < 0.5

    # Intermediates are bound to names throughout: numpy's temporary elision
    # (in-place reuse of >=256KiB temporaries) changes kernel paths and with
    # it the last ulp, which would make results depend on batch size.
    acc = np.full_like(w, _LANCZOS_C[0])
    for k in range(1, len(_LANCZOS_C)):
        den = w + (k - 1)
        term = _LANCZOS_C[k] / den
        acc += term
    t = w + (_LANCZOS_G - 0.5)
    log_t = np.log(t)
    main = (w - 0.5) * log_t
    log_acc = np.log(acc)
    out = _HALF_LOG_TWO_PI + main - t + log_acc - shift_log

    # Keep real inputs exactly real (the formula leaves a zero imaginary
    # part up to rounding; pin it).
    real_in = on_real_axis & (z_arr.real > 0.0)
    if np.any(real_in):
        out = np.where(real_in, out.real + 0.0j, out)

    if scalar:
        val = complex(out[0])
        return val
    return out


def _log_bessel_i_series(nu, z, active=None):
    """Ascending-series log(I_nu(z)), elementwise over broadcast arrays.

    Writes log values (log|I| + i*arg I, phase unwrapped only up to the
    final wrap) for the elements selected by `active` and returns the full
    complex array; inactive elements are left as NaN.
    """
    nu_b, z_b = np.broadcast_arrays(np.asarray(nu, dtype=complex), np.asarray(z, dtype=float))
    shape = nu_b.shape
    if active is None:
        active = np.ones(shape, dtype=bool)

    out = np.full(shape, np.nan, dtype=complex)
    if not np.any(active):
        return out

    nu_a = nu_b[active]
    z_a = z_b[active]

    # First term (z/2)^nu / Gamma(nu+1), kept in log form; the remaining
    # terms are accumulated in linear space through the exact ratio
    # recurrence r_k = r_{k-1} * (z^2/4) / (k * (nu + k)).  Intermediates
    # are named so numpy cannot elide temporaries into in-place kernels,
    # which would make the last ulp depend on array size.
    half_z = z_a / 2.0
    log_half_z = np.log(half_z)
    first = nu_a * log_half_z
    lg = log_gamma_complex(nu_a + 1.0)
    c0 = first - lg

    q = z_a * z_a / 4.0
    r = np.ones_like(nu_a)
    s = np.ones_like(nu_a)
    scale_log = np.zeros(nu_a.shape, dtype=float)
    running = np.ones(nu_a.shape, dtype=bool)

    for k in range(1, _SERIES_MAX_TERMS + 1):
        den = nu_a + k
        den = den * k
        ratio = q / den
        r_next = r * ratio
        s_next = s + r_next
        r = np.where(running, r_next, r)
        s = np.where(running, s_next, s)

        abs_s = np.abs(s)
        big = running & (abs_s > _RESCALE_TRIGGER)
        if np.any(big):
            r_small = r * _RESCALE
            s_small = s * _RESCALE
            r = np.where(big, r_small, r)
            s = np.where(big, s_small, s)
            scale_log = np.where(big, scale_log + _RESCALE_LOG, scale_log)
            abs_s = np.abs(s)

        abs_r = np.abs(r)
        thresh = _SERIES_RTOL * abs_s
        running &= ~(abs_r < thresh)
        if not np.any(running):
            break
    else:
        raise NonConvergenceError(
            f"Bessel series did not converge within {_SERIES_MAX_TERMS} terms "
            f"(max z in call: {z_a.max():g})"
        )

    log_s = np.log(s)
    total = c0 + log_s
    total = total + scale_log
    out[active] = total
    return out


def _log_bessel_i_asym(nu, z, active=None):
    """Large-argument asymptotic log(I_nu(z)), truncated at the smallest term.

    Returns (log values, ok mask); ok is False where the expansion cannot
    reach _ASYM_RTOL before its terms start growing, in which case the
    caller should fall back to the series.
    """
    nu_b, z_b = np.broadcast_arrays(np.asarray(nu, dtype=complex), np.asarray(z, dtype=float))
    shape = nu_b.shape
    if active is None:
        active = np.ones(shape, dtype=bool)

    out = np.full(shape, np.nan, dtype=complex)
    ok = np.zeros(shape, dtype=bool)
    if not np.any(active):
        return out, ok

    nu_a = nu_b[active]
    z_a = z_b[active]

    four_nu2 = 4.0 * nu_a
    four_nu2 = four_nu2 * nu_a
    t = np.ones_like(nu_a)
    s = np.ones_like(nu_a)
    best = np.full(nu_a.shape, np.inf)  # magnitude of the first omitted term
    running = np.ones(nu_a.shape, dtype=bool)

    for k in range(1, _ASYM_MAX_TERMS + 1):
        num = four_nu2 - (2.0 * k - 1.0) ** 2
        den = 8.0 * k * z_a
        step = num / den
        t_next = -t * step
        abs_t_next = np.abs(t_next)
        abs_t = np.abs(t)
        grew = abs_t_next >= abs_t
        # Terms that start growing mark the optimal truncation point; the
        # first omitted term bounds the error.
        best = np.where(running & grew, abs_t_next, best)
        running &= ~grew
        s_next = s + t_next
        s = np.where(running, s_next, s)
        t = np.where(running, t_next, t)
        abs_t = np.abs(t)
        abs_s = np.abs(s)
        thresh = _SERIES_RTOL * abs_s
        tiny = running & (abs_t < thresh)
        best = np.where(tiny, abs_t, best)
        running &= ~tiny
        if not np.any(running):
            break
    best = np.where(running, np.abs(t), best)

    abs_s = np.abs(s)
    ok_a = best <= _ASYM_RTOL * abs_s
    two_pi_z = 2.0 * np.pi * z_a
    log_term = 0.5 * np.log(two_pi_z)
    log_s = np.log(s)
    vals = z_a - log_term
    vals = vals + log_s
    out_a = np.where(ok_a, vals, np.nan + 0.0j)

    out[active] = out_a
    ok[active] = ok_a
    return out, ok


def bessel_i_log_arr(nu, z):
    """log I_nu(z) elementwise: real part log|I|, imaginary part arg(I).

    nu may be complex (Re(nu) > -1), z must be real and positive.  Uses the
    ascending series for z <= Z_SWITCH and the large-argument asymptotic
    expansion above, falling back to the series wherever the expansion
    cannot certify _ASYM_RTOL accuracy (large |nu| relative to z).
    """
    nu_b, z_b = np.broadcast_arrays(np.asarray(nu, dtype=complex), np.asarray(z, dtype=float))
    if np.any(~(z_b > 0.0)):
        raise ValueError("bessel argument must be positive")
    if np.any(nu_b.real <= -1.0):
        raise ValueError("order must satisfy Re(nu) > -1")

    use_asym = z_b > Z_SWITCH
    out = np.full(nu_b.shape, np.nan, dtype=complex)

    if np.any(use_asym):
        vals, ok = _log_bessel_i_asym(nu_b, z_b, active=use_asym)
        out[ok] = vals[ok]
        remaining = ~ok
    else:
        remaining = np.ones(nu_b.shape, dtype=bool)

    remaining &= np.isnan(out.real)
    if np.any(remaining):
        vals = _log_bessel_i_series(nu_b, z_b, active=remaining)
        out[remaining] = vals[remaining]

    out = out.real + 1j * _wrap_phase(out.imag)
    return out


def bessel_i_log(nu, z: float) -> LogScaled:
    """Log-scaled I_nu(z) for a single (possibly complex) order nu and z > 0."""
    val = bessel_i_log_arr(np.asarray(complex(nu)), np.asarray(float(z)))
    val = complex(val)
    return LogScaled(log_magnitude=val.real, phase=float(_wrap_phase(val.imag)))


def bessel_i_ratio(mu, nu, z: float) -> complex:
    """I_mu(z) / I_nu(z) via log-space subtraction; never overflows.

    mu may be complex; nu is the (real) reference order.
    """
    pair = bessel_i_log_arr(np.array([complex(mu), complex(nu)]), np.asarray(float(z)))
    return complex(np.exp(pair[0] - pair[1]))
