"""Leading-order asymptotics of the window integrals and their numerical checks.

J3: the integral over (t^(d2-1), 1 - t^(d3-1)) with the factor lambda^(i tau t),
its reduced form G e^(itF), the stationary-point term and the two endpoint
terms.

J4: the principal-value integral over (-t^(d4), t^(d3)), the closed form of its
reduced integrand J4~, and the contour integral E4 with its pole and saddle
contributions.

All o(1) factors of the leading formulas are taken as 1; accuracy is judged
against direct quadrature.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .expsums import IndexKind, IndexSetSpec, PowerTable, Weight, sum_over
from .kernel import StripPoint, kernel_K, kernel_K_u, kernel_re
from .quadrature import (
    ContourPath,
    QuadResult,
    arc,
    cut_lip,
    hankel,
    integrate,
    integrate_contour,
    integrate_pv,
    line,
)
from .special import PoleError

TRANSITION_WIDTHS = 3.0
POLE_TOL = 1e-9


class TransitionError(ValueError):
    """A stationary point, pole or endpoint is too close for the leading formula."""


# ---------------------------------------------------------------------------
# J3


def _j3_window(t: float, d2: float, d3: float) -> tuple[float, float]:
    lo, hi = t ** (d2 - 1), 1 - t ** (d3 - 1)
    if not lo < hi:
        raise ValueError(f"empty window ({lo:.4g}, {hi:.4g}) at t={t}")
    return lo, hi


def F_phase(tau, lam: float):
    """F(tau, lambda) = (1 - tau) ln(1 - tau) + tau ln tau + tau ln lambda."""
    tau = np.asarray(tau, dtype=float)
    return (1 - tau) * np.log1p(-tau) + tau * np.log(tau) + tau * math.log(lam)


def F_tau(tau, lam: float):
    """dF/dtau = ln(lambda tau / (1 - tau))."""
    tau = np.asarray(tau, dtype=float)
    return np.log(tau) - np.log1p(-tau) + math.log(lam)


def G_amp(sigma: float, tau):
    """G(sigma, tau) = (1 - tau)^(-1/2) tau^(sigma - 1/2)."""
    tau = np.asarray(tau, dtype=float)
    return (1 - tau) ** -0.5 * tau ** (sigma - 0.5)


def stationary_point(lam: float) -> float:
    return 1.0 / (1.0 + lam)


def F_at_stationary(lam: float) -> float:
    return -math.log1p(1.0 / lam)


def F_second_at_stationary(lam: float) -> float:
    return (1 + lam) ** 2 / lam


def _j3_phase_rate(t: float, lo: float, hi: float, lam: float) -> float:
    return t * float(np.max(np.abs(F_tau(np.array([lo, hi]), lam)))) + 1.0


def J3_numeric(p: StripPoint, d2: float, d3: float, lam: float, tol: float = 1e-10) -> QuadResult:
    """(t/pi) * integral of K(sigma, t, tau) lambda^(i tau t) over the J3 window."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    t = p.t
    lo, hi = _j3_window(t, d2, d3)
    ll = math.log(lam)

    def f(tau):
        return (t / math.pi) * kernel_K(p.sigma, t, tau) * np.exp(1j * t * ll * tau)

    return integrate(f, lo, hi, tol=tol, phase_rate=_j3_phase_rate(t, lo, hi, lam),
                     breakpoints=[stationary_point(lam)] if lo < stationary_point(lam) < hi else None)


def J3_reduced(p: StripPoint, d2: float, d3: float, lam: float, tol: float = 1e-12) -> QuadResult:
    """J3~ = integral of G(sigma, tau) e^(i t F(tau, lambda)) over the J3 window."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    t = p.t
    lo, hi = _j3_window(t, d2, d3)

    def f(tau):
        return G_amp(p.sigma, tau) * np.exp(1j * t * F_phase(tau, lam))

    tau1 = stationary_point(lam)
    return integrate(f, lo, hi, tol=tol, phase_rate=_j3_phase_rate(t, lo, hi, lam),
                     breakpoints=[tau1] if lo < tau1 < hi else None)


def J3_from_reduced(p: StripPoint, reduced: complex) -> complex:
    """J3 ~ sqrt(2t/pi) e^(-i pi/4) J3~."""
    return math.sqrt(2 * p.t / math.pi) * cmath.exp(-0.25j * math.pi) * reduced


def stationary_in_window(t: float, d2: float, d3: float, lam: float) -> bool:
    """1/(t^(1-d3) - 1) < lambda < t^(1-d2) - 1."""
    return 1.0 / (t ** (1 - d3) - 1) < lam < t ** (1 - d2) - 1


def J3_S(p: StripPoint, lam: float, d2: float = 0.5, d3: float = 0.5) -> tuple[complex, bool]:
    """Stationary-point term sqrt(2 pi/t) e^(i pi/4) lambda^(it) / (1 + lambda)^(sigma + it).

    The flag is False, and the value 0, when the stationary point lies outside
    the window.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    t, sigma = p.t, p.sigma
    if not stationary_in_window(t, d2, d3, lam):
        return 0j, False
    log_val = 1j * t * math.log(lam) - (sigma + 1j * t) * math.log1p(lam)
    return math.sqrt(2 * math.pi / t) * cmath.exp(0.25j * math.pi + log_val), True


def _fresnel_width(t: float, lam: float) -> float:
    return 1.0 / math.sqrt(t * F_second_at_stationary(lam))


def _check_endpoint(t: float, lam: float, endpoint: float, log_term: float, label: str) -> None:
    if log_term == 0.0:
        raise TransitionError(f"{label}: dF/dtau vanishes at the endpoint")
    if abs(stationary_point(lam) - endpoint) < TRANSITION_WIDTHS * _fresnel_width(t, lam):
        raise TransitionError(f"{label}: stationary point within the transition band of the endpoint")


def J3_U(p: StripPoint, d3: float, lam: float) -> complex:
    """Upper-endpoint term of J3~ (enters with a minus sign)."""
    t, sigma = p.t, p.sigma
    eps = t ** (d3 - 1)
    T3 = t ** d3
    log_term = math.log(lam * (t ** (1 - d3) - 1))
    _check_endpoint(t, lam, 1 - eps, log_term, "upper endpoint")
    lg = (
        1j * (d3 - 1) * T3 * math.log(t)
        + (sigma - 0.5 + 1j * (t - T3)) * math.log1p(-eps)
        + 1j * (t - T3) * math.log(lam)
    )
    return 1j * t ** (-d3 / 2) / math.sqrt(t) * cmath.exp(lg) / log_term


def J3_L(p: StripPoint, d2: float, lam: float) -> complex:
    """Lower-endpoint term of J3~ (enters with a plus sign)."""
    t, sigma = p.t, p.sigma
    eps = t ** (d2 - 1)
    T2 = t ** d2
    log_term = math.log(lam / (t ** (1 - d2) - 1))
    _check_endpoint(t, lam, eps, log_term, "lower endpoint")
    lg = (
        (-0.5 + 1j * (t - T2)) * math.log1p(-eps)
        + 1j * T2 * math.log(lam)
        + 1j * (d2 - 1) * T2 * math.log(t)
    )
    return 1j * t ** (d2 * (sigma - 0.5)) / t ** (sigma + 0.5) * cmath.exp(lg) / log_term


def endpoint_term(p: StripPoint, lam: float, tau_end: float) -> complex:
    """-G e^(itF) / (i t F') at an endpoint, evaluated directly from G and F.

    This is the boundary term of one integration by parts; J3_U and J3_L are
    its closed forms at the upper and lower endpoint.
    """
    g = G_amp(p.sigma, tau_end)
    fp = F_tau(tau_end, lam)
    return complex(-g * np.exp(1j * p.t * F_phase(tau_end, lam)) / (1j * p.t * fp))


@dataclass
class J3Comparison:
    """Reduced quadrature against the leading terms."""

    reduced: complex
    stationary: complex
    upper: complex
    lower: complex
    has_stationary: bool

    @property
    def leading(self) -> complex:
        """J3_S - J3_U."""
        return self.stationary - self.upper

    @property
    def rel_err(self) -> float:
        return abs(self.leading - self.reduced) / abs(self.reduced)

    @property
    def rel_err_with_lower(self) -> float:
        return abs(self.leading + self.lower - self.reduced) / abs(self.reduced)


def compare_J3(p: StripPoint, d2: float, d3: float, lam: float, tol: float = 1e-11) -> J3Comparison:
    red = J3_reduced(p, d2, d3, lam, tol=tol).value
    s, flag = J3_S(p, lam, d2, d3)
    return J3Comparison(red, s, J3_U(p, d3, lam), J3_L(p, d2, lam), flag)


# ---------------------------------------------------------------------------
# I3~ assembly


def in_transition_band(lam, t: float, d3: float, c: float = 1.0):
    """Pairs whose ratio lambda sits where the upper endpoint meets the stationary point.

    |ln(lambda (t^(1-d3) - 1))| < c t^(-d3/2).
    """
    return np.abs(np.log(np.asarray(lam) * (t ** (1 - d3) - 1))) < c * t ** (-d3 / 2)


@dataclass
class AssembledSum:
    """A sum-assembled asymptotic value with its parts."""

    value: float
    parts: dict = field(default_factory=dict)


def I3_tilde(p: StripPoint, d2: float, d3: float, band: float = 1.0) -> AssembledSum:
    """2 Re{S_M} minus the upper-endpoint double sum over pairs outside the transition band."""
    t, s = p.t, p.s
    T = int(math.floor(t))
    T3 = t ** d3
    sm = sum_over(IndexSetSpec(IndexKind.M, t, d2=d2, d3=d3), Weight.SM_WEIGHT, p)
    m = np.arange(1, T + 1, dtype=float)
    lam = m[None, :] / m[:, None]  # rows m1, columns m2
    skip = in_transition_band(lam, t, d3, band)
    p1 = PowerTable(s - 1j * T3, T)[1:]
    p2 = PowerTable(s.conjugate() + 1j * T3, T)[1:]
    with np.errstate(divide="ignore"):
        denom = np.log(lam * (t ** (1 - d3) - 1))
    terms = np.where(skip, 0, p1[:, None] * p2[None, :] / np.where(skip, 1, denom))
    inner = complex(math.fsum(np.real(terms).ravel()), math.fsum(np.imag(terms).ravel()))
    eps = t ** (d3 - 1)
    pref = cmath.exp(
        0.25j * math.pi
        + (p.sigma - 0.5 + 1j * (t - T3)) * math.log1p(-eps)
        + 1j * (d3 - 1) * T3 * math.log(t)
    ) * t ** (-d3 / 2)
    upper = -math.sqrt(2 / math.pi) * (pref * inner).real
    main = 2 * sm.value.real
    return AssembledSum(main + upper, {
        "stationary": main,
        "upper": upper,
        "band_pairs": int(skip.sum()),
        "stationary_pairs": sm.terms,
    })


def partial_sum_sq(sigma: float, heights, N: int, block: int = 256) -> np.ndarray:
    """|sum_{m<=N} m^(-sigma - i y)|^2 for each height y."""
    y = np.atleast_1d(np.asarray(heights, dtype=float))
    logm = np.log(np.arange(1, N + 1, dtype=float))
    amp = np.exp(-sigma * logm)
    out = np.empty(y.shape)
    for k in range(0, y.size, block):
        ph = np.outer(y[k:k + block], logm)
        out[k:k + block] = np.abs((amp * np.exp(-1j * ph)).sum(axis=1)) ** 2
    return out


def I3_tilde_direct(p: StripPoint, d2: float, d3: float, tol: float = 1e-9) -> QuadResult:
    """Sum over the square of (m1 m2)^(-sigma) Re J3(m2/m1), as one integral.

    The double sum of lambda^(i tau t) (m1 m2)^(-sigma) is |sum m^(-sigma - i tau t)|^2,
    so the whole sum is (t/pi) * integral of Re K |partial sum|^2 over the window.
    """
    t = p.t
    lo, hi = _j3_window(t, d2, d3)
    N = int(math.floor(t))

    def f(tau):
        return (t / math.pi) * kernel_re(p.sigma, t, tau) * partial_sum_sq(p.sigma, tau * t, N)

    return integrate(f, lo, hi, tol=tol, phase_rate=t * (math.log(t) + 2))


@dataclass
class BandAttribution:
    """How much of the I3~ residual comes from pairs in the transition band."""

    direct: float
    assembled: float
    band_exact: float
    band_pairs: int

    @property
    def corrected(self) -> float:
        return self.assembled + self.band_exact

    @property
    def rel_err_assembled(self) -> float:
        return abs(self.assembled - self.direct) / abs(self.direct)

    @property
    def rel_err_corrected(self) -> float:
        return abs(self.corrected - self.direct) / abs(self.direct)


def I3_band_attribution(p: StripPoint, d2: float, d3: float, band: float = 2.0,
                        tol: float = 1e-9) -> BandAttribution:
    """Compare I3~ with the direct sum after adding exact J3 values for the band pairs.

    Pairs in the transition band are left out of the assembled sum; adding
    (m1 m2)^(-sigma) Re J3(m2/m1) for them, computed by quadrature once per
    distinct ratio, shows how much of the residual they carry.
    """
    t = p.t
    T = int(math.floor(t))
    m = np.arange(1, T + 1, dtype=float)
    lam = m[None, :] / m[:, None]
    cache: dict[tuple[int, int], float] = {}
    total = []
    pairs = np.argwhere(in_transition_band(lam, t, d3, band))
    for i, j in pairs:
        g = math.gcd(int(i) + 1, int(j) + 1)
        key = ((int(j) + 1) // g, (int(i) + 1) // g)
        if key not in cache:
            cache[key] = J3_numeric(p, d2, d3, key[0] / key[1], tol=tol).value.real
        total.append(((i + 1) * (j + 1)) ** -p.sigma * cache[key])
    assembled = I3_tilde(p, d2, d3, band=band).value
    direct = I3_tilde_direct(p, d2, d3).value.real
    return BandAttribution(direct, assembled, math.fsum(total), len(pairs))


# ---------------------------------------------------------------------------
# J4~ and the reflection series


def S_reflection(A: complex, terms: int = 1_000_000) -> tuple[complex, complex]:
    """(series, closed) for S = (1/2pi) sum_k [1/(k+1-b) - 1/(k+b)], b = 1/4 - (i/2pi) ln A.

    The series is truncated after ``terms`` terms and the tail is approximated
    by (2b - 1)/terms.  The closed value is (i/2)(-1 + 2/(1 - iA)).
    """
    A = complex(A)
    if abs(1 - 1j * A) < POLE_TOL:
        raise PoleError("S is singular at A = -i")
    if A == 0:
        raise ValueError("A must be nonzero")
    b = 0.25 - 1j * cmath.log(A) / (2 * math.pi)
    k = np.arange(terms, dtype=float)
    series_terms = 1 / (k + 1 - b) - 1 / (k + b)
    partial = complex(math.fsum(series_terms.real), math.fsum(series_terms.imag))
    partial += (2 * b - 1) / terms
    closed = 0.5j * (-1 + 2 / (1 - 1j * A))
    return partial / (2 * math.pi), closed


def S_tangent(A: complex) -> complex:
    """-(1/2) tan(pi/4 + (i/2) ln A), the same value as the closed form of S."""
    return -0.5 * cmath.tan(math.pi / 4 + 0.5j * cmath.log(complex(A)))


def _j4_reduced_integrand(sigma: float, t: float, A: complex):
    lnA = cmath.log(A)
    argA, lnabs = lnA.imag, lnA.real

    def h(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        # e^(pi x/2) / (e^(-pi x) - e^(pi x)) written without overflow.
        log_mag = 0.5 * math.pi * x - math.pi * ax - x * argA + (sigma - 0.5) * np.log1p(-x / t)
        phase = x * lnabs + x + (t - x) * np.log1p(-x / t)
        return -np.sign(x) * np.exp(log_mag + 1j * phase) / (-np.expm1(-2 * math.pi * ax))

    return h


def J4_tilde_numeric(p: StripPoint, d3: float, d4: float, A: complex, tol: float = 1e-12,
                     rtol: float = 1e-11) -> QuadResult:
    """Principal value of the reduced J4 integrand over (-t^d4, t^d3), by symmetric pairing."""
    A = complex(A)
    if A == 0:
        raise ValueError("A must be nonzero")
    t = p.t
    h = _j4_reduced_integrand(p.sigma, t, A)
    rate = abs(cmath.log(A).real) + 2.0
    return integrate_pv(h, -t ** d4, t ** d3, 0.0, tol=tol, rtol=rtol, phase_rate=rate)


def J4_tilde_subtracted(p: StripPoint, d3: float, d4: float, A: complex, tol: float = 1e-12,
                        rtol: float = 1e-11) -> QuadResult:
    """Cross-check of J4_tilde_numeric: remove -1/(2 pi x) analytically.

    The pole of 1/(e^(-pi x) - e^(pi x)) at 0 is simple with residue -1/(2 pi)
    and the other factors equal 1 there.
    """
    t = p.t
    h = _j4_reduced_integrand(p.sigma, t, complex(A))
    lo, hi = -t ** d4, t ** d3

    def reg(x):
        return h(x) + 1 / (2 * math.pi * x)

    rate = abs(cmath.log(complex(A)).real) + 2.0
    r = integrate(reg, lo, hi, tol=tol, rtol=rtol, breakpoints=[0.0], phase_rate=rate)
    shift = -math.log(hi / -lo) / (2 * math.pi)
    return QuadResult(r.value + shift, r.abs_error_estimate, r.evaluations, r.intervals)


def J4_tilde_closed(t: float, d3: float, A: complex) -> complex:
    """(i/2)(-1 + 2/(1 - iA)) + e^(i t^d3 ln A) e^(-pi t^d3 / 2) / (pi/2 - i ln A)."""
    A = complex(A)
    if abs(1 - 1j * A) < POLE_TOL:
        raise PoleError("closed form is singular at A = -i")
    lnA = cmath.log(A)
    T = t ** d3
    return 0.5j * (-1 + 2 / (1 - 1j * A)) + cmath.exp(1j * T * lnA - 0.5 * math.pi * T) / (0.5 * math.pi - 1j * lnA)


def J4_numeric(p: StripPoint, d3: float, d4: float, ratio: float, tol: float = 1e-11) -> QuadResult:
    """(1/pi) PV integral of Gamma(ix) Gamma(s - ix)/Gamma(s) (m1/m2)^(ix) over (-t^d4, t^d3)."""
    t = p.t
    lr = math.log(ratio)

    def f(x):
        x = np.asarray(x, dtype=float)
        return kernel_K_u(p.sigma, t, x) * np.exp(1j * lr * x) / math.pi

    return integrate_pv(f, -t ** d4, t ** d3, 0.0, tol=tol, phase_rate=abs(lr) + math.log(t) + 2)


# ---------------------------------------------------------------------------
# E4


def _e4_omega_integrand(T: float, a: float):
    """(1/pi) e^(T[w - pi/2 + i ln(a w)]) / (w [pi/2 - i ln(a w)]), principal logarithm."""
    la = math.log(a)

    def f(w):
        lg = la + np.log(w)
        return np.exp(T * (w - 0.5 * math.pi + 1j * lg)) / (w * (0.5 * math.pi - 1j * lg)) / math.pi

    return f


def _e4_z_integrand(T: float, M: float):
    lm = math.log(M)

    def f(z):
        lg = lm + np.log(z)
        return np.exp(z + 1j * T * lg - 0.5 * math.pi * T) / (z * (0.5 * math.pi - 1j * lg)) / math.pi

    return f


def _outer_path(T: float, r0: float = 2.0) -> ContourPath:
    """Deformation of the radius-1 Hankel loop in w on which Re(exponent) <= 0."""
    L = r0 + 0.5 * math.pi + 60.0 / T
    return ContourPath([
        cut_lip(L, r0, upper=False),
        line(-r0, -r0 - 1j),
        line(-r0 - 1j, -1j),
        line(-1j, 1.0),
        line(1.0, 1j),
        line(1j, -r0),
        cut_lip(r0, L, upper=True),
    ])


def _inner_path(T: float, a: float, r0: float = 2.0) -> ContourPath:
    """Deformation of the radius-1/T loop in w that keeps the pole -i/a outside.

    Only needed when 1 < a < T; the path rises along the imaginary axis from
    -i and passes the pole on its left by a small semicircle.
    """
    L = r0 + 0.5 * math.pi + 60.0 / T
    yp = 1.0 / a
    rho = min(0.4 * (1 - yp), 0.4 * yp, 2.0 / (T * (a - 1)))
    return ContourPath([
        cut_lip(L, r0, upper=False),
        line(-r0, -r0 - 1j),
        line(-r0 - 1j, -1j),
        line(-1j, -1j * (yp + rho)),
        arc(-1j * yp, rho, -0.5 * math.pi, -1.5 * math.pi),
        line(-1j * (yp - rho), 1.0),
        line(1.0, 1j),
        line(1j, -r0),
        cut_lip(r0, L, upper=True),
    ])


def pole_condition(t: float, d3: float, M: float) -> bool:
    """Pole term present iff m1/m2 = M t lies in (t^(1-d3), t), i.e. 1 < M t^d3 < t^d3."""
    T = t ** d3
    return 1.0 < M * T < T


def E4_numeric(t: float, d3: float, M: float, tol: float = 1e-10, form: str = "z_unit",
               method: str = "deformed") -> QuadResult:
    """E4 as a Hankel contour integral.

    ``form='z_unit'`` is the loop of radius 1 in z (radius t^(-d3) in w = z/t^d3),
    which defines E4.  ``form='w_unit'`` is the loop of radius 1 in w, whose
    value is the saddle part E4^SD.  ``method='deformed'`` integrates over
    paths on which the exponential factor is bounded; ``method='hankel'``
    follows the circular loops literally and is only usable for small t^d3.
    """
    if M <= 0:
        raise ValueError("M must be positive")
    T = t ** d3
    a = M * T
    if form not in ("z_unit", "w_unit"):
        raise ValueError(f"unknown form {form}")
    if form == "z_unit" and abs(M - 1) < POLE_TOL:
        raise PoleError("pole on the contour (m1/m2 = t)")
    if form == "w_unit" and abs(a - 1) < POLE_TOL:
        raise PoleError("pole on the unit circle in w")
    if method == "hankel":
        if 0.5 * math.pi * T > 200:
            raise ValueError("literal Hankel loops overflow for this t^d3; use method='deformed'")
        radius = 1.0 if form == "z_unit" else T
        trunc = radius + 0.5 * math.pi * T + 60.0
        path = hankel(radius, trunc)
        return integrate_contour(_e4_z_integrand(T, M), path, tol=tol, rtol=tol)
    if method != "deformed":
        raise ValueError(f"unknown method {method}")
    f = _e4_omega_integrand(T, a)
    if form == "w_unit" or not pole_condition(t, d3, M):
        path = _outer_path(T)
    else:
        path = _inner_path(T, a)
    return integrate_contour(f, path, tol=tol, rtol=tol)


def E4_sd_leading(t: float, d3: float, M: float) -> complex:
    """Leading saddle value -sqrt(2/(pi T)) e^(i pi/4) e^(-iT) a^(iT) / ln a, T = t^d3, a = M T.

    With a = (m1/m2) t^(d3-1) this is the saddle contribution at w = -i,
    where the amplitude equals -1/ln a.
    """
    T = t ** d3
    a = M * T
    la = math.log(a)
    if la == 0.0:
        raise TransitionError("saddle and pole coincide")
    return -math.sqrt(2 / (math.pi * T)) * cmath.exp(0.25j * math.pi - 1j * T + 1j * T * la) / la


def E4_pole_term(M: float) -> complex:
    return 2 * cmath.exp(-1j / M)


@dataclass
class E4Parts:
    total: complex
    pole: complex
    saddle: complex
    pole_present: bool


def E4_decomposed(t: float, d3: float, M: float, widths: float = TRANSITION_WIDTHS) -> E4Parts:
    """2 e^(-i/M) [iff the pole condition holds] + leading saddle term."""
    T = t ** d3
    a = M * T
    if abs(1 / a - 1) < widths * T ** -0.5:
        raise TransitionError(f"pole |w_p| = {1 / a:.4g} within the transition band of the saddle")
    present = pole_condition(t, d3, M)
    pole = E4_pole_term(M) if present else 0j
    sd = E4_sd_leading(t, d3, M)
    return E4Parts(pole + sd, pole, sd, present)


def reflection_identity_value(ratio: float, t: float) -> complex:
    """(i/2pi) * loop integral of (e^z/z)(-1 + 2/(1 - iA)) with A = ratio z / t, from residues.

    The loop integral of e^z/z is 2 pi i and, with c = t/ratio, the loop
    integral of e^z/(z (z + ic)) is 2 pi / c; 1 - iA = -(i/c)(z + ic).
    """
    c = t / ratio
    loop_a = 2j * math.pi
    loop_b = (2 * math.pi / c) / (-1j / c)
    return 1j / (2 * math.pi) * (-loop_a + 2 * loop_b)


def reflection_identity_numeric(ratio: float, t: float, tol: float = 1e-11) -> complex:
    """The same loop integral by quadrature on a Hankel contour."""
    M = ratio / t

    def f(z):
        A = M * z
        return np.exp(z) / z * (-1 + 2 / (1 - 1j * A))

    radius = min(1.0, 0.5 / M)
    r = integrate_contour(f, hankel(radius, 60.0), tol=tol, rtol=tol)
    return 1j / (2 * math.pi) * r.value


def J4_leading(p: StripPoint, d3: float, ratio: float, tol: float = 1e-10) -> complex:
    """-1 + E4 with M = (m1/m2)/t, E4 by contour quadrature."""
    M = ratio / p.t
    return -1 + E4_numeric(p.t, d3, M, tol=tol).value


# ---------------------------------------------------------------------------
# I4~ assembly


def I4_tilde(p: StripPoint, d3: float, d4: float, band: float = TRANSITION_WIDTHS) -> AssembledSum:
    """-S_R + 2 Re{S_4^P} + Re{sum E4^SD}, the saddle sum skipping transition pairs."""
    t, s = p.t, p.s
    T = int(math.floor(t))
    Td = t ** d3
    plain = sum_over(IndexSetSpec(IndexKind.FULL_SQUARE, t), Weight.PLAIN, p)
    s4p = sum_over(IndexSetSpec(IndexKind.M4, t, d3=d3), Weight.S4P_WEIGHT, p)
    m = np.arange(1, T + 1, dtype=float)
    ratio = m[:, None] / m[None, :]  # rows m1, columns m2
    la = np.log(ratio * t ** (d3 - 1))
    skip = np.abs(np.exp(-la) - 1) < band * Td ** -0.5
    p1 = PowerTable(s, T)[1:]
    p2 = PowerTable(s.conjugate(), T)[1:]
    sd = -math.sqrt(2 / (math.pi * Td)) * np.exp(0.25j * math.pi - 1j * Td + 1j * Td * la) / np.where(skip, 1, la)
    terms = np.where(skip, 0, p1[:, None] * p2[None, :] * sd)
    sd_sum = complex(math.fsum(np.real(terms).ravel()), math.fsum(np.imag(terms).ravel()))
    parts = {
        "full_square": -plain.value.real,
        "pole": 2 * s4p.value.real,
        "saddle": sd_sum.real,
        "band_pairs": int(skip.sum()),
    }
    return AssembledSum(parts["full_square"] + parts["pole"] + parts["saddle"], parts)


def I4_tilde_direct(p: StripPoint, d3: float, d4: float, tol: float = 1e-9) -> QuadResult:
    """(1/pi) integral over (-t^d4, t^d3) of Re{Gamma(ix) Gamma(s-ix)/Gamma(s)} |partial sum|^2.

    The real part of the kernel is finite at x = 0, so no principal value is needed.
    """
    t = p.t
    N = int(math.floor(t))

    def f(x):
        x = np.asarray(x, dtype=float)
        return kernel_re(p.sigma, t, 1 - x / t) * partial_sum_sq(p.sigma, t - x, N) / math.pi

    return integrate(f, -t ** d4, t ** d3, tol=tol, breakpoints=[0.0], phase_rate=math.log(t) * 2 + 2)


# ---------------------------------------------------------------------------
# generic stationary phase


@dataclass
class PhaseProblem:
    """Integral of g(t, tau) e^(i t F(tau)) over a window, F(tau) = f(tau) + tau ln lambda.

    ``df`` and ``d2f`` are derivatives of f; they are approximated by central
    differences when omitted.
    """

    g: Callable[[float, np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], np.ndarray]
    lam: float
    window: tuple[float, float]
    df: Callable[[np.ndarray], np.ndarray] | None = None
    d2f: Callable[[np.ndarray], np.ndarray] | None = None

    def F(self, tau):
        return self.f(tau) + np.asarray(tau) * math.log(self.lam)

    def dF(self, tau):
        if self.df is not None:
            return self.df(tau) + math.log(self.lam)
        h = 1e-6 * max(1.0, abs(float(tau)))
        return (self.f(tau + h) - self.f(tau - h)) / (2 * h) + math.log(self.lam)

    def d2F(self, tau):
        if self.d2f is not None:
            return self.d2f(tau)
        h = 1e-4 * max(1.0, abs(float(tau)))
        return (self.f(tau + h) - 2 * self.f(tau) + self.f(tau - h)) / h ** 2


class NoStationaryPoint(ValueError):
    """dF/dtau has no root inside the window."""


@dataclass
class StationaryPhaseResult:
    value: complex
    tau1: float
    endpoint_terms: tuple[complex, complex]


def stationary_phase_generic(prob: PhaseProblem, t: float) -> StationaryPhaseResult:
    """sqrt(2 pi/(t |F''|)) g(tau1) e^(i t F(tau1) + i pi/4 sgn F'') at the root tau1 of F'."""
    a, b = prob.window
    da, db = float(prob.dF(a)), float(prob.dF(b))
    if da * db > 0:
        raise NoStationaryPoint("dF/dtau does not change sign on the window")
    tau1 = brentq(lambda x: float(prob.dF(x)), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    f2 = float(prob.d2F(tau1))
    if f2 == 0.0:
        raise NoStationaryPoint("degenerate stationary point")
    g1 = complex(np.asarray(prob.g(t, tau1)))
    val = math.sqrt(2 * math.pi / (t * abs(f2))) * g1 * cmath.exp(
        1j * t * float(prob.F(tau1)) + 0.25j * math.pi * math.copysign(1.0, f2)
    )

    def boundary(x, sign):
        gx = complex(np.asarray(prob.g(t, x)))
        return sign * gx * cmath.exp(1j * t * float(prob.F(x))) / (1j * t * float(prob.dF(x)))

    return StationaryPhaseResult(val, tau1, (boundary(a, -1), boundary(b, 1)))


def phase_integral(prob: PhaseProblem, t: float, tol: float = 1e-12) -> QuadResult:
    """Direct quadrature of the integral of g e^(itF) over the window."""
    a, b = prob.window

    def h(tau):
        return np.asarray(prob.g(t, tau), dtype=complex) * np.exp(1j * t * prob.F(tau))

    rate = t * max(abs(float(prob.dF(a))), abs(float(prob.dF(b)))) + 1.0
    return integrate(h, a, b, tol=tol, phase_rate=rate)
