"""Kernel, forcing term and the windowed integral equation for |zeta|^2.

For 0 < sigma < 1 and t > 0 the function |zeta(sigma + i tau t)|^2 satisfies

    (t/pi) * PV int Re{K(sigma, t, tau)} |zeta(sigma + i tau t)|^2 dtau + G(sigma, t) = 0,

with K = Gamma(it - i tau t) Gamma(sigma + i tau t) / Gamma(sigma + i t).
K is exponentially small outside [-t^(d1-1), 1 + t^(d4-1)], and this module
evaluates the identity on that window, its split into four subintervals,
and related bound comparisons.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .quadrature import QuadResult, integrate
from .special import (
    EULER_GAMMA,
    LOG_2PI,
    DEFAULT_ZETA,
    PoleError,
    ZetaConfig,
    digamma,
    log_gamma,
    log_gamma_1p,
    log_gamma_diff,
    zeta,
)


@dataclass(frozen=True)
class StripPoint:
    """Point s = sigma + i t of the critical strip."""

    sigma: float
    t: float

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not self.t > 0.0:
            raise ValueError(f"t must be positive, got {self.t}")

    @property
    def s(self) -> complex:
        return complex(self.sigma, self.t)


@dataclass(frozen=True)
class DeltaWindow:
    """Window exponents (d1, d2, d3, d4), each in (0, 1)."""

    d1: float = 0.3
    d2: float = 0.5
    d3: float = 0.3
    d4: float = 0.3

    def __post_init__(self):
        for name in ("d1", "d2", "d3", "d4"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")

    def admissible(self, t: float) -> bool:
        """True when the middle interval [t^(d2-1), 1 - t^(d3-1)] is nonempty."""
        return t ** (self.d2 - 1) < 1 - t ** (self.d3 - 1)

    def intervals(self, t: float) -> list[tuple[float, float]]:
        """The four intervals L1..L4."""
        a = -t ** (self.d1 - 1)
        b = 1.0 / t
        c = t ** (self.d2 - 1)
        d = 1.0 - t ** (self.d3 - 1)
        e = 1.0 + t ** (self.d4 - 1)
        return [(a, b), (b, c), (c, d), (d, e)]


@dataclass
class ResidualReport:
    """Comparison of two evaluations of the same quantity."""

    lhs: complex
    rhs: complex
    abs_err: float
    rel_err: float
    details: dict = field(default_factory=dict)

    @classmethod
    def compare(cls, lhs: complex, rhs: complex, **details) -> "ResidualReport":
        abs_err = abs(lhs - rhs)
        rel_err = abs_err / max(abs(lhs), abs(rhs), 1e-300)
        return cls(complex(lhs), complex(rhs), abs_err, rel_err, details)


# ---------------------------------------------------------------------------
# kernel


def kernel_K(sigma: float, t: float, tau):
    """K(sigma, t, tau) = Gamma(it - i tau t) Gamma(sigma + i tau t) / Gamma(sigma + i t).

    Evaluated in log space.  Writing u = t(1 - tau), the factor
    Gamma(iu) = Gamma(1 + iu)/(iu) isolates the simple pole at tau = 1, and
    for |u| < t/2 the remaining log-gamma difference is formed directly from
    O(u) terms so that Re K keeps its digits next to tau = 1.
    """
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    out = kernel_K_u(sigma, t, t * (1.0 - tau_arr))
    return complex(out[0]) if np.ndim(tau) == 0 else out


def kernel_K_u(sigma: float, t: float, u):
    """K as a function of u = t(1 - tau): Gamma(iu) Gamma(sigma + it - iu) / Gamma(sigma + it).

    Taking u directly avoids the roundoff of forming 1 - u/t, which matters
    when a principal value around u = 0 is computed by pairing +-u.
    """
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u_arr == 0.0):
        raise PoleError("kernel K has a pole at tau = 1")
    w = complex(sigma, t)
    out = np.empty(u_arr.shape, dtype=complex)
    near = np.abs(u_arr) < 0.5 * t
    if near.any():
        un = u_arr[near]
        logn = log_gamma_1p(1j * un) + log_gamma_diff(np.full(un.shape, w), -1j * un)
        out[near] = np.exp(logn) / (1j * un)
    if (~near).any():
        uf = u_arr[~near]
        logf = log_gamma(1j * uf) + log_gamma(w - 1j * uf) - log_gamma(w)
        out[~near] = np.exp(logf)
    return complex(out[0]) if np.ndim(u) == 0 else out


def kernel_re(sigma: float, t: float, tau):
    """Re K(sigma, t, tau); finite at tau = 1 where it is defined by continuity."""
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    at_pole = tau_arr == 1.0
    out = np.empty(tau_arr.shape, dtype=float)
    if (~at_pole).any():
        out[~at_pole] = np.real(kernel_K(sigma, t, tau_arr[~at_pole]))
    if at_pole.any():
        # Re K -> d/du Im N(u) at u = 0, with N(u) = Gamma(1+iu)Gamma(w-iu)/Gamma(w).
        out[at_pole] = -EULER_GAMMA - np.real(digamma(complex(sigma, t)))
    return float(out[0]) if np.ndim(tau) == 0 else out


# ---------------------------------------------------------------------------
# forcing term


def G_exact(sigma: float, t: float) -> float:
    """Forcing term G(sigma, t) of the integral equation (real)."""
    if sigma == 0.5:
        psi = digamma(complex(0.5, t)).real
        return psi + 2 * EULER_GAMMA - LOG_2PI + 2.0 / (1.0 + 4.0 * t * t)
    s = complex(sigma, t)
    ratio = np.exp(log_gamma(1.0 - s.conjugate()) - log_gamma(s))
    z1 = zeta(2 * sigma - 1).real
    val = (
        zeta(2 * sigma).real
        + 2.0 * ratio.real * math.gamma(2 * sigma - 1) * z1
        + 2.0 * (sigma - 1.0) * z1 / ((sigma - 1.0) ** 2 + t * t)
    )
    return float(val)


def G_asym(sigma: float, t: float) -> float:
    """Leading large-t form of G: ln t + 2 gamma - ln 2 pi on the critical line,
    zeta(2 sigma) + 2 Gamma(2 sigma - 1) zeta(2 sigma - 1) sin(pi sigma) t^(1 - 2 sigma)
    otherwise."""
    if sigma == 0.5:
        return math.log(t) + 2 * EULER_GAMMA - LOG_2PI
    g = math.gamma(2 * sigma - 1)
    return float(
        zeta(2 * sigma).real
        + 2.0 * g * zeta(2 * sigma - 1).real * math.sin(math.pi * sigma) * t ** (1 - 2 * sigma)
    )


# ---------------------------------------------------------------------------
# |zeta|^2 with a node cache


class ZetaSqCache:
    """Thread-safe cache of |zeta(sigma + i rho)|^2 keyed by (sigma, rho).

    Heights are rounded to 1e-12 relative granularity for the key.
    """

    def __init__(self, cfg: ZetaConfig = DEFAULT_ZETA):
        self.cfg = cfg
        self._store: dict[tuple[float, float], float] = {}
        self._lock = threading.Lock()

    @staticmethod
    def _key(sigma: float, rho: float) -> tuple[float, float]:
        return (sigma, float(f"{rho:.12e}"))

    def __call__(self, sigma: float, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        keys = [self._key(sigma, r) for r in rho.ravel()]
        out = np.empty(rho.size)
        with self._lock:
            hits = [self._store.get(k) for k in keys]
        missing = [i for i, h in enumerate(hits) if h is None]
        if missing:
            vals = np.abs(zeta(sigma + 1j * rho.ravel()[missing], self.cfg)) ** 2
            with self._lock:
                for i, v in zip(missing, vals):
                    self._store[keys[i]] = float(v)
                    hits[i] = float(v)
        out[:] = hits
        return out.reshape(rho.shape)

    def __len__(self) -> int:
        return len(self._store)


def zeta_abs_sq(p: StripPoint, cfg: ZetaConfig = DEFAULT_ZETA) -> float:
    """|zeta(sigma + i t)|^2."""
    return abs(zeta(p.s, cfg)) ** 2


# ---------------------------------------------------------------------------
# windowed integral equation


def _window_integrand(sigma: float, t: float, cache: ZetaSqCache | None):
    zsq = cache if cache is not None else ZetaSqCache()

    def f(tau):
        return (t / math.pi) * kernel_re(sigma, t, tau) * zsq(sigma, tau * t)

    return f


def _breakpoints(t: float, w: DeltaWindow) -> list[float]:
    pts = [0.0, 1.0]
    if w.admissible(t):
        pts += [t ** (w.d2 - 1), 1 - t ** (w.d3 - 1)]
    return pts


def tail_bound(t: float, w: DeltaWindow) -> float:
    """Size of the kernel outside the window, e^(-pi t^d1) + e^(-pi t^d4), times ln t."""
    return (math.exp(-math.pi * t ** w.d1) + math.exp(-math.pi * t ** w.d4)) * max(1.0, math.log(t))


def window_integral(
    p: StripPoint,
    w: DeltaWindow,
    tol: float = 1e-8,
    cache: ZetaSqCache | None = None,
    lo: float | None = None,
    hi: float | None = None,
) -> QuadResult:
    """(t/pi) * integral of Re K |zeta|^2 over [lo, hi] (default: the full window)."""
    t = p.t
    a = -t ** (w.d1 - 1) if lo is None else lo
    b = 1 + t ** (w.d4 - 1) if hi is None else hi
    f = _window_integrand(p.sigma, t, cache)
    # Re K oscillates with frequency about ln(t) in tau*t; bound the phase rate.
    rate = t * (math.log(t) + 2.0)
    return integrate(f, a, b, tol=tol, rtol=tol, breakpoints=_breakpoints(t, w), phase_rate=rate,
                     max_phase=math.pi)


def ie_residual(
    p: StripPoint,
    w: DeltaWindow = DeltaWindow(),
    tol: float = 1e-8,
    cache: ZetaSqCache | None = None,
):
    """Residual of the windowed integral equation at p.

    lhs is the windowed integral, rhs is -G_exact.  ``details`` carries the
    quadrature error estimate, the tail bound and the work count.
    """
    r = window_integral(p, w, tol, cache)
    rhs = -G_exact(p.sigma, p.t)
    return ResidualReport.compare(
        r.value.real,
        rhs,
        quad_error=r.abs_error_estimate,
        tail_bound=tail_bound(p.t, w),
        evaluations=r.evaluations,
    )


def I_split(
    p: StripPoint,
    w: DeltaWindow,
    tol: float = 1e-8,
    cache: ZetaSqCache | None = None,
) -> dict[str, QuadResult]:
    """I1..I4 over the intervals L1..L4, plus their sum under key 'total'."""
    if not w.admissible(p.t):
        raise ValueError("window not admissible at this t")
    cache = cache if cache is not None else ZetaSqCache()
    out = {}
    total = None
    for j, (a, b) in enumerate(w.intervals(p.t), start=1):
        r = window_integral(p, w, tol, cache, lo=a, hi=b)
        out[f"I{j}"] = r
        total = r if total is None else total + r
    out["total"] = total
    return out


def I_single(p: StripPoint, w: DeltaWindow, j: int, tol: float = 1e-8) -> QuadResult:
    """One of I1..I4 on its own."""
    a, b = w.intervals(p.t)[j - 1]
    return window_integral(p, w, tol, None, lo=a, hi=b)


def I1_bound(sigma: float, t: float, d1: float) -> float:
    """Growth shape of I1: t^(-sigma + (2 - 4 sigma/3) d1) for sigma <= 1/2,
    t^(-sigma + (5/3 - 2 sigma/3) d1) otherwise."""
    if sigma <= 0.5:
        return t ** (-sigma + (2 - 4 * sigma / 3) * d1)
    return t ** (-sigma + (5.0 / 3 - 2 * sigma / 3) * d1)


def I2_bound(sigma: float, t: float, d2: float) -> float:
    """Growth shape of I2 (constants dropped)."""
    if sigma < 0.5:
        return t ** (-sigma + 2 * (1 - sigma) * d2) * zeta(2 - 2 * sigma).real
    if sigma == 0.5:
        return t ** (-0.5 + d2) * math.log(t)
    return t ** (-sigma + (sigma + 0.5) * d2) * zeta(2 * sigma).real


# ---------------------------------------------------------------------------
# second moment


def atkinson_main(T: float) -> float:
    """T ln T + (2 gamma - 1 - ln 2 pi) T."""
    return T * math.log(T) + (2 * EULER_GAMMA - 1 - LOG_2PI) * T


def atkinson_moment(T: float, sigma: float = 0.5, tol: float = 1e-6, lower: float = 1.0) -> QuadResult:
    """Integral of |zeta(sigma + i rho)|^2 over rho in [lower, T]."""
    if T <= lower:
        raise ValueError("need T > lower")

    def f(rho):
        return np.abs(zeta(sigma + 1j * rho)) ** 2

    return integrate(f, lower, T, tol=tol, rtol=tol * 1e-3, phase_rate=math.log(T) + 2,
                     breakpoints=np.linspace(lower, T, int(T - lower) + 1), max_phase=math.pi)
