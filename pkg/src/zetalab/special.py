"""Complex special functions: log-gamma, digamma, Riemann zeta and the
modified Hurwitz zeta function.

Everything here works on numpy arrays of complex numbers and returns a
Python scalar when called with a scalar.  Gamma ratios should always be
formed as differences of :func:`log_gamma` values followed by a single
exponential; the individual gamma values underflow long before the
ratios do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209008240243
LOG_2PI = math.log(2.0 * math.pi)
LOG_PI = math.log(math.pi)
_TWO_PI_LD = np.longdouble("6.28318530717958647692528676655900577")

POLE_TOL = 1e-12


class PoleError(ValueError):
    """Raised when a function is evaluated at (or within tolerance of) a pole."""


@lru_cache(maxsize=None)
def bernoulli_numbers(count: int) -> tuple[Fraction, ...]:
    """Return B_0 .. B_{count-1} as exact fractions (B_1 = -1/2)."""
    b = [Fraction(0)] * count
    for m in range(count):
        b[m] = Fraction(1, 1) if m == 0 else Fraction(0)
        if m > 0:
            acc = Fraction(0)
            for k in range(m):
                acc += math.comb(m + 1, k) * b[k]
            b[m] = -acc / (m + 1)
    return tuple(b)


def _even_bernoulli(kmax: int) -> np.ndarray:
    """B_2, B_4, ..., B_{2 kmax} as floats."""
    b = bernoulli_numbers(2 * kmax + 1)
    return np.array([float(b[2 * k]) for k in range(1, kmax + 1)])


_STIRLING_K = 8
_B_STIRLING = _even_bernoulli(_STIRLING_K)
_LGAMMA_COEF = np.array(
    [_B_STIRLING[k - 1] / (2 * k * (2 * k - 1)) for k in range(1, _STIRLING_K + 1)]
)
_DIGAMMA_COEF = np.array(
    [_B_STIRLING[k - 1] / (2 * k) for k in range(1, _STIRLING_K + 1)]
)


def _as_complex_array(z):
    arr = np.asarray(z, dtype=complex)
    return np.atleast_1d(arr), arr.ndim == 0


def _finish(out: np.ndarray, scalar: bool):
    return complex(out[0]) if scalar else out


def _check_gamma_poles(z: np.ndarray) -> None:
    near_int = np.abs(z - np.round(z.real)) <= POLE_TOL
    bad = near_int & (np.round(z.real) <= 0)
    if bad.any():
        raise PoleError(f"gamma pole at z={complex(z[bad][0])}")


def _shift_count(z: np.ndarray) -> np.ndarray:
    """Integer shift that moves Re z >= 0 points out to |z| >= 10."""
    need = np.abs(z) < 10.0
    return np.where(need, np.ceil(np.maximum(10.0 - z.real, 0.0)), 0.0).astype(int)


def _lgamma_right(z: np.ndarray) -> np.ndarray:
    """Principal ln Gamma for Re z >= 0 via recurrence-lifted Stirling."""
    n = _shift_count(z)
    correction = np.zeros_like(z)
    for k in range(int(n.max(initial=0))):
        mask = n > k
        correction[mask] += np.log(z[mask] + k)
    w = z + n
    inv = 1.0 / w
    inv2 = inv * inv
    series = np.zeros_like(w)
    for c in _LGAMMA_COEF[::-1]:
        series = series * inv2 + c
    series *= inv
    return (w - 0.5) * np.log(w) - w + 0.5 * LOG_2PI + series - correction


def _log_sin_pi_upper(z: np.ndarray) -> np.ndarray:
    """Analytic branch of ln sin(pi z) on the closed upper half plane."""
    q = np.exp(2j * np.pi * z)
    return complex(math.log(0.5), 0.5 * math.pi) - 1j * np.pi * z + np.log1p(-q)


def _lgamma_left(z: np.ndarray) -> np.ndarray:
    """Principal ln Gamma for Re z < 0 via reflection, continued from above."""
    lower = (z.imag < 0) | ((z.imag == 0) & np.signbit(z.imag))
    w = np.where(lower, np.conj(z), z)
    val = LOG_PI - _log_sin_pi_upper(w) - _lgamma_right(1.0 - w)
    return np.where(lower, np.conj(val), val)


def log_gamma(z):
    """Principal branch of ln Gamma(z).

    The imaginary part is the continuous one obtained from the positive real
    axis, with the branch cut on the negative real axis (same convention as
    ``scipy.special.loggamma``).  Raises :class:`PoleError` at non-positive
    integers.
    """
    arr, scalar = _as_complex_array(z)
    _check_gamma_poles(arr)
    out = np.empty_like(arr)
    left = arr.real < 0
    if (~left).any():
        out[~left] = _lgamma_right(arr[~left])
    if left.any():
        out[left] = _lgamma_left(arr[left])
    return _finish(out, scalar)


def gamma(z):
    """Gamma(z) = exp(log_gamma(z))."""
    return np.exp(log_gamma(z))


def _log1p_minus_x(x: np.ndarray) -> np.ndarray:
    """log(1 + x) - x without cancellation for small |x|."""
    small = np.abs(x) < 0.1
    out = np.log1p(x) - x
    if small.any():
        xs = x[small]
        acc = np.zeros_like(xs)
        for k in range(18, 1, -1):
            acc = acc * xs + (-1) ** (k + 1) / k
        out[small] = acc * xs * xs
    return out


def log_gamma_diff(w, h):
    """ln Gamma(w + h) - ln Gamma(w) for Re w > 0 and Re(w + h) > 0.

    The difference is formed from O(h) quantities, so it keeps full relative
    accuracy when |h| is small compared with |w| (where subtracting two
    log-gamma values of size |w| ln|w| would lose most digits).
    """
    w, scalar = _as_complex_array(w)
    h = np.broadcast_to(np.asarray(h, dtype=complex), w.shape).copy()
    if np.any(w.real <= 0) or np.any((w + h).real <= 0):
        raise ValueError("log_gamma_diff needs Re w > 0 and Re(w + h) > 0")
    n = np.maximum(_shift_count(w), _shift_count(w + h))
    correction = np.zeros_like(w)
    for k in range(int(n.max(initial=0))):
        mask = n > k
        correction[mask] += np.log1p(h[mask] / (w[mask] + k))
    W = w + n
    x = h / W
    inv_a = 1.0 / W
    inv_b = 1.0 / (W + h)
    series = np.zeros_like(W)
    pa, pb = inv_a, inv_b
    for c in _LGAMMA_COEF:
        series += c * (pb - pa)
        pa = pa * inv_a * inv_a
        pb = pb * inv_b * inv_b
    val = h * np.log(W) + W * _log1p_minus_x(x) + (h - 0.5) * np.log1p(x) + series
    return _finish(val - correction, scalar)


_ZETA_INT = None


def log_gamma_1p(z):
    """ln Gamma(1 + z), using the Taylor series about 0 when |z| < 0.5."""
    global _ZETA_INT
    arr, scalar = _as_complex_array(z)
    out = np.empty_like(arr)
    small = np.abs(arr) < 0.5
    if (~small).any():
        out[~small] = log_gamma(1.0 + arr[~small])
    if small.any():
        if _ZETA_INT is None:
            _ZETA_INT = np.array(
                [zeta(float(k)).real for k in range(2, 60)]
            )
        zs = arr[small]
        acc = np.zeros_like(zs)
        for k in range(59, 1, -1):
            acc = acc * zs + (-1) ** k * _ZETA_INT[k - 2] / k
        out[small] = (acc * zs - EULER_GAMMA) * zs
    return _finish(out, scalar)


def _cot_pi(z: np.ndarray) -> np.ndarray:
    """cot(pi z) without overflow for large |Im z|."""
    upper = z.imag >= 0
    q = np.where(upper, np.exp(2j * np.pi * z), np.exp(-2j * np.pi * z))
    return np.where(upper, 1j * (q + 1.0) / (q - 1.0), 1j * (1.0 + q) / (1.0 - q))


def _digamma_right(z: np.ndarray) -> np.ndarray:
    n = _shift_count(z)
    correction = np.zeros_like(z)
    for k in range(int(n.max(initial=0))):
        mask = n > k
        correction[mask] += 1.0 / (z[mask] + k)
    w = z + n
    inv2 = 1.0 / (w * w)
    series = np.zeros_like(w)
    for c in _DIGAMMA_COEF[::-1]:
        series = series * inv2 + c
    series *= inv2
    return np.log(w) - 0.5 / w - series - correction


def digamma(z):
    """Psi(z) = Gamma'(z)/Gamma(z)."""
    arr, scalar = _as_complex_array(z)
    _check_gamma_poles(arr)
    out = np.empty_like(arr)
    left = arr.real < 0
    if (~left).any():
        out[~left] = _digamma_right(arr[~left])
    if left.any():
        zl = arr[left]
        out[left] = _digamma_right(1.0 - zl) - np.pi * _cot_pi(zl)
    return _finish(out, scalar)


def stirling_gamma(sigma: float, xi: float, conjugate: bool = False) -> complex:
    """Leading Stirling approximation of Gamma(sigma + i xi) for large xi > 0.

    With ``conjugate=True`` the approximation of Gamma(sigma - i xi) is
    returned instead.  No error term is included.
    """
    if xi <= 0:
        raise ValueError("xi must be positive")
    sign = -1.0 if conjugate else 1.0
    modulus = math.sqrt(2 * math.pi) * xi ** (sigma - 0.5) * math.exp(-math.pi * xi / 2)
    phase = sign * (-math.pi / 4 - xi + xi * math.log(xi) + math.pi * sigma / 2)
    return modulus * complex(math.cos(phase), math.sin(phase))


# ---------------------------------------------------------------------------
# zeta and modified Hurwitz zeta (Euler-Maclaurin)


@dataclass(frozen=True)
class ZetaConfig:
    """Truncation controls for the Euler-Maclaurin zeta evaluator.

    The direct sum runs to N = max(min_terms, ceil(terms_per_height * |Im s|)),
    capped at ``max_terms``; ``corrections`` Bernoulli terms B_2 .. B_{2K}
    are added.  Phases t*ln(n) are reduced in extended precision once
    |Im s| exceeds ``extended_phase_above``.
    """

    min_terms: int = 50
    terms_per_height: float = 2.0
    max_terms: int = 4_000_000
    corrections: int = 15
    extended_phase_above: float = 1e3
    chunk: int = 1 << 15


DEFAULT_ZETA = ZetaConfig()
_B_ZETA = _even_bernoulli(30)


@lru_cache(maxsize=4)
def _em_coefficients(kmax: int) -> np.ndarray:
    return np.array(
        [_B_ZETA[k - 1] / math.factorial(2 * k) for k in range(1, kmax + 1)]
    )


def _power_sum(s: np.ndarray, alpha: float, nmax: int, cfg: ZetaConfig) -> np.ndarray:
    """sum_{n=1}^{nmax} (n + alpha)^(-s) for every entry of s."""
    total = np.zeros(s.shape, dtype=complex)
    if nmax < 1:
        return total
    rows = max(1, (1 << 22) // min(nmax, cfg.chunk))
    if s.size > rows:
        for i in range(0, s.size, rows):
            total[i:i + rows] = _power_sum(s[i:i + rows], alpha, nmax, cfg)
        return total
    sig = s.real[:, None]
    tt = s.imag
    extended = np.max(np.abs(tt), initial=0.0) > cfg.extended_phase_above
    t_ld = tt.astype(np.longdouble)[:, None]
    for start in range(1, nmax + 1, cfg.chunk):
        stop = min(nmax, start + cfg.chunk - 1)
        n = np.arange(start, stop + 1, dtype=np.float64) + alpha
        if extended:
            logn_ld = np.log(n.astype(np.longdouble))
            phase = np.mod(t_ld * logn_ld[None, :], _TWO_PI_LD).astype(np.float64)
            logn = logn_ld.astype(np.float64)
        else:
            logn = np.log(n)
            phase = tt[:, None] * logn[None, :]
        terms = np.exp(-sig * logn[None, :]) * (np.cos(phase) - 1j * np.sin(phase))
        total += terms.sum(axis=1)
    return total


_GROUP = 128


def _em_zeta(s: np.ndarray, alpha: float, cfg: ZetaConfig, n_terms: int | None) -> np.ndarray:
    if n_terms is None and s.size > _GROUP:
        # Group points of similar height so each group gets its own truncation.
        order = np.argsort(np.abs(s.imag), kind="stable")
        out = np.empty_like(s)
        for i in range(0, s.size, _GROUP):
            idx = order[i:i + _GROUP]
            out[idx] = _em_zeta(s[idx], alpha, cfg, None)
        return out
    if n_terms is None:
        height = float(np.max(np.abs(s.imag), initial=0.0))
        n_terms = max(cfg.min_terms, int(math.ceil(cfg.terms_per_height * height)))
        n_terms = min(n_terms, cfg.max_terms)
    N = n_terms
    head = _power_sum(s, alpha, N - 1, cfg)
    x = N + alpha
    logx = math.log(x)
    xs = np.exp(-s * logx)  # x^{-s}
    out = head + x * xs / (s - 1.0) + 0.5 * xs
    # Bernoulli corrections: B_{2k}/(2k)! * s(s+1)...(s+2k-2) * x^{-s-2k+1}
    coef = _em_coefficients(cfg.corrections)
    rising = s.copy()
    power = xs / x
    for k in range(1, cfg.corrections + 1):
        out += coef[k - 1] * rising * power
        rising = rising * (s + 2 * k - 1) * (s + 2 * k)
        power = power / (x * x)
    return out


def _check_zeta_pole(s: np.ndarray) -> None:
    if np.any(np.abs(s - 1.0) <= POLE_TOL):
        raise PoleError("zeta pole at s=1")


def hurwitz_zeta1(s, alpha: float, cfg: ZetaConfig = DEFAULT_ZETA, n_terms: int | None = None):
    """Analytic continuation of sum_{n>=1} (n + alpha)^(-s), alpha >= 0."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    arr, scalar = _as_complex_array(s)
    _check_zeta_pole(arr)
    return _finish(_em_zeta(arr, float(alpha), cfg, n_terms), scalar)


def zeta(s, cfg: ZetaConfig = DEFAULT_ZETA, n_terms: int | None = None):
    """Riemann zeta function by Euler-Maclaurin summation.

    Arrays are evaluated with a common truncation chosen from the largest
    |Im s| in the batch, so callers should batch points of similar height.
    """
    arr, scalar = _as_complex_array(s)
    _check_zeta_pole(arr)
    # Evaluate on the upper half plane and conjugate, so that the reality
    # property zeta(conj s) = conj zeta(s) holds bit for bit.
    lower = arr.imag < 0
    w = np.where(lower, np.conj(arr), arr)
    val = _em_zeta(w, 0.0, cfg, n_terms)
    return _finish(np.where(lower, np.conj(val), val), scalar)


def zeta_abs_sq(sigma, t, cfg: ZetaConfig = DEFAULT_ZETA):
    """|zeta(sigma + i t)|^2 (real, nonnegative)."""
    val = zeta(np.asarray(sigma) + 1j * np.asarray(t), cfg)
    return np.abs(val) ** 2 if isinstance(val, np.ndarray) else abs(val) ** 2


# ---------------------------------------------------------------------------
# Riemann-Siegel path for sigma = 1/2 at large height


def riemann_siegel_theta(t):
    """theta(t) = Im ln Gamma(1/4 + i t/2) - (t/2) ln pi."""
    t = np.asarray(t, dtype=float)
    val = np.imag(log_gamma(0.25 + 0.5j * t)) - 0.5 * t * LOG_PI
    return float(val) if np.ndim(val) == 0 else val


def _rs_c0(p):
    return np.cos(2 * np.pi * (p * p - p - 1.0 / 16)) / np.cos(2 * np.pi * p)


def _rs_c0_third_derivative(p: float, radius: float = 0.05, nodes: int = 64) -> float:
    """Third derivative of C0 by the trapezoidal Cauchy integral."""
    theta = 2 * np.pi * np.arange(nodes) / nodes
    w = radius * np.exp(1j * theta)
    vals = _rs_c0(p + w)
    return float(np.real(6.0 * np.mean(vals / w**3)))


def siegel_z(t: float) -> float:
    """Hardy's Z(t) from the Riemann-Siegel formula with two correction terms."""
    if t < 10:
        raise ValueError("Riemann-Siegel path requires t >= 10")
    a = math.sqrt(t / (2 * math.pi))
    N = int(math.floor(a))
    p = a - N
    th = riemann_siegel_theta(t)
    n = np.arange(1, N + 1, dtype=np.longdouble)
    phase = np.mod(np.longdouble(th) - np.longdouble(t) * np.log(n), _TWO_PI_LD)
    main = 2.0 * float(np.sum(np.cos(phase.astype(float)) / np.sqrt(n.astype(float))))
    c0 = float(_rs_c0(p))
    c1 = -_rs_c0_third_derivative(p) / (96 * math.pi**2)
    rem = (-1) ** (N - 1) * a**-0.5 * (c0 + c1 / a)
    return main + rem


def zeta_half_rs(t: float) -> complex:
    """zeta(1/2 + i t) = exp(-i theta(t)) Z(t) via Riemann-Siegel."""
    th = riemann_siegel_theta(t)
    return complex(siegel_z(t) * np.exp(-1j * th))
