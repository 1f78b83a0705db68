"""Double exponential sums over ratio-constrained index sets.

All sets live inside the square 1 <= m1, m2 <= [t].  For every set used
here the admissible m2 for fixed m1 form one interval, so a set is stored as
three integer arrays (m1, lo, hi) and sums are evaluated row by row.

Powers m^(-s) come from a table exp(-s ln m).  Row sums use numpy's pairwise
summation and rows are merged with ``math.fsum`` in a fixed order, so the
result does not depend on how rows are grouped into chunks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .kernel import ResidualReport, StripPoint

FULL_SQUARE_CAP = 20_000
SNAP_TOL = 1e-9


class IndexKind(enum.Enum):
    """Index sets of the double sums.

    Literal sets follow their defining inequalities as written:
      FULL_SQUARE  1 <= m1, m2 <= [t]
      M            m2/m1 in (1/(t^(1-d3) - 1), t^(1-d2) - 1)
      M2           m2/m1 > t^(1-d2)
      M3           m2/m1 < 1/(t^(1-d3) - 1)
      M4           m1/m2 in (t^(1-d3), t)
      N7           m2/m1 in (t^(1-d2) - 1, t^(1-d1) - 1)
      M7           m2/m1 in (t^(d1-1), t^(d2-1))
      G_STRIP      1 <= m <= [t], [t] + 1 <= n <= [t] + m   (pairs (m, n))
    The complements of M inside the square are
      M2_COMPLEMENT  m2/m1 >= t^(1-d2) - 1
      M3_COMPLEMENT  m2/m1 <= 1/(t^(1-d3) - 1)
    and COVER_A / COVER_B are the two explicit-limit blocks of the
    index-cover decomposition, with the limits written there.
    """

    FULL_SQUARE = "full_square"
    M = "M"
    M2 = "M2"
    M3 = "M3"
    M4 = "M4"
    N7 = "N7"
    M7 = "M7"
    G_STRIP = "g_strip"
    M2_COMPLEMENT = "M2_complement"
    M3_COMPLEMENT = "M3_complement"
    COVER_A = "cover_A"
    COVER_B = "cover_B"


class Weight(enum.Enum):
    SM_WEIGHT = "sm"      # m2^(-conj s) (m1 + m2)^(-s)
    PLAIN = "plain"       # m1^(-s) m2^(-conj s)
    S4P_WEIGHT = "s4p"    # m1^(-s) m2^(-conj s) exp(-i (m2/m1) t)


def integer_part(x: float, snap: bool = False) -> int:
    """[x] as floor.  With ``snap`` a value within SNAP_TOL of an integer is rounded."""
    if snap:
        r = round(x)
        if abs(x - r) <= SNAP_TOL * max(1.0, abs(x)):
            return int(r)
    return int(math.floor(x))


def _strict_below(x: np.ndarray) -> np.ndarray:
    """Largest integer m with m < x."""
    return (np.ceil(x) - 1).astype(np.int64)


def _strict_above(x: np.ndarray) -> np.ndarray:
    """Smallest integer m with m > x."""
    return (np.floor(x) + 1).astype(np.int64)


@dataclass(frozen=True)
class IndexSetSpec:
    """A ratio-constrained index set at height t."""

    kind: IndexKind
    t: float
    d1: float | None = None
    d2: float | None = None
    d3: float | None = None
    snap: bool = False

    def _need(self, *names: str) -> list[float]:
        vals = []
        for n in names:
            v = getattr(self, n)
            if v is None or not 0.0 < v < 1.0:
                raise ValueError(f"{self.kind.value} needs {n} in (0, 1)")
            vals.append(v)
        return vals

    @property
    def size(self) -> int:
        return integer_part(self.t, self.snap)

    def rows(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(m1, lo, hi): for each m1 the admissible m2 are lo..hi (may be empty)."""
        t = self.t
        T = self.size
        if T < 1:
            raise ValueError("t must be at least 1")
        m1 = np.arange(1, T + 1, dtype=np.int64)
        x = m1.astype(float)
        one = np.ones_like(m1)
        full = np.full_like(m1, T)
        k = self.kind
        ip = lambda v: integer_part(v, self.snap)  # noqa: E731
        if k is IndexKind.FULL_SQUARE:
            lo, hi = one, full
        elif k is IndexKind.G_STRIP:
            lo, hi = T + 1 + 0 * m1, T + m1
        elif k is IndexKind.M:
            d2, d3 = self._need("d2", "d3")
            c2, c3 = t ** (1 - d2) - 1, t ** (1 - d3) - 1
            lo = _strict_above(x / c3)
            hi = _strict_below(x * c2)
        elif k is IndexKind.M2:
            (d2,) = self._need("d2")
            lo, hi = _strict_above(x * t ** (1 - d2)), full
        elif k is IndexKind.M3:
            (d3,) = self._need("d3")
            lo, hi = one, _strict_below(x / (t ** (1 - d3) - 1))
        elif k is IndexKind.M2_COMPLEMENT:
            (d2,) = self._need("d2")
            lo, hi = np.ceil(x * (t ** (1 - d2) - 1)).astype(np.int64), full
        elif k is IndexKind.M3_COMPLEMENT:
            (d3,) = self._need("d3")
            lo, hi = one, np.floor(x / (t ** (1 - d3) - 1)).astype(np.int64)
        elif k is IndexKind.M4:
            (d3,) = self._need("d3")
            # m1/m2 in (t^(1-d3), t)  <=>  m2 in (m1/t, m1/t^(1-d3))
            lo = _strict_above(x / t)
            hi = _strict_below(x / t ** (1 - d3))
        elif k is IndexKind.N7:
            d1, d2 = self._need("d1", "d2")
            lo = _strict_above(x * (t ** (1 - d2) - 1))
            hi = _strict_below(x * (t ** (1 - d1) - 1))
        elif k is IndexKind.M7:
            d1, d2 = self._need("d1", "d2")
            lo = _strict_above(x * t ** (d1 - 1))
            hi = _strict_below(x * t ** (d2 - 1))
        elif k is IndexKind.COVER_A:
            (d3,) = self._need("d3")
            c3 = t ** (1 - d3) - 1
            top = ip(t / c3) - 1
            lo = np.array([ip(c3 * a) + 1 for a in m1], dtype=np.int64)
            hi = np.where(m1 <= top, full, 0)
        elif k is IndexKind.COVER_B:
            (d2,) = self._need("d2")
            c2 = t ** (1 - d2) - 1
            first = ip(t ** (1 - d2))
            hi = np.array([ip(a / c2) - 1 for a in m1], dtype=np.int64)
            hi = np.where(m1 >= first, hi, 0)
            lo = one
        else:  # pragma: no cover
            raise ValueError(k)
        if k is not IndexKind.G_STRIP:
            lo = np.maximum(lo, 1)
            hi = np.minimum(hi, T)
        return m1, lo, hi

    def pairs(self) -> Iterator[tuple[int, int]]:
        m1, lo, hi = self.rows()
        for a, l, h in zip(m1, lo, hi):
            for b in range(int(l), int(h) + 1):
                yield int(a), b

    def count(self) -> int:
        _, lo, hi = self.rows()
        return int(np.maximum(hi - lo + 1, 0).sum())

    def contains(self, m1: int, m2: int) -> bool:
        """Membership by the defining inequality (independent of ``rows``)."""
        t, T = self.t, self.size
        k = self.kind
        if k is IndexKind.G_STRIP:
            return 1 <= m1 <= T and T + 1 <= m2 <= T + m1
        if not (1 <= m1 <= T and 1 <= m2 <= T):
            return False
        r = m2 / m1
        if k is IndexKind.FULL_SQUARE:
            return True
        if k is IndexKind.M:
            return 1 / (t ** (1 - self.d3) - 1) < r < t ** (1 - self.d2) - 1
        if k is IndexKind.M2:
            return r > t ** (1 - self.d2)
        if k is IndexKind.M3:
            return r < 1 / (t ** (1 - self.d3) - 1)
        if k is IndexKind.M2_COMPLEMENT:
            return r >= t ** (1 - self.d2) - 1
        if k is IndexKind.M3_COMPLEMENT:
            return r <= 1 / (t ** (1 - self.d3) - 1)
        if k is IndexKind.M4:
            return t ** (1 - self.d3) < m1 / m2 < t
        if k is IndexKind.N7:
            return t ** (1 - self.d2) - 1 < r < t ** (1 - self.d1) - 1
        if k is IndexKind.M7:
            return t ** (self.d1 - 1) < r < t ** (self.d2 - 1)
        raise ValueError(f"no predicate form for {k.value}")


@dataclass
class SumValue:
    """A finite sum with its term count and the compensated-summation correction."""

    value: complex
    terms: int
    compensation: float = 0.0


class PowerTable:
    """m^(-s) for m = 1..n as exp(-s ln m)."""

    def __init__(self, s: complex, n: int):
        m = np.arange(1, n + 1, dtype=float)
        logm = np.log(m)
        self.s = complex(s)
        self.values = np.concatenate([[0j], np.exp(-self.s.real * logm - 1j * self.s.imag * logm)])

    def __getitem__(self, idx):
        return self.values[idx]


def _fsum_complex(parts: list[complex]) -> complex:
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


def _accumulate(row_values: Iterator[complex]) -> tuple[complex, float]:
    parts = list(row_values)
    exact = _fsum_complex(parts)
    naive = complex(sum(parts)) if parts else 0j
    return exact, abs(exact - naive)


def sum_over(spec: IndexSetSpec, weight: Weight, p: StripPoint, rows_per_chunk: int = 256) -> SumValue:
    """Exact sum of the chosen weight over the index set."""
    if spec.kind is IndexKind.FULL_SQUARE and spec.size > FULL_SQUARE_CAP:
        raise ValueError(f"t={spec.t} above the full-square cap {FULL_SQUARE_CAP}")
    s = p.s
    T = spec.size
    m1, lo, hi = spec.rows()
    keep = hi >= lo
    m1, lo, hi = m1[keep], lo[keep], hi[keep]
    terms = int((hi - lo + 1).sum())
    if terms == 0:
        return SumValue(0j, 0, 0.0)
    nmax = int(max(hi.max(), m1.max())) + (T if weight is Weight.SM_WEIGHT else 0)
    ps = PowerTable(s, nmax)
    psb = PowerTable(s.conjugate(), nmax)

    def rows():
        for start in range(0, m1.size, rows_per_chunk):
            for a, l, h in zip(m1[start:start + rows_per_chunk], lo[start:start + rows_per_chunk],
                               hi[start:start + rows_per_chunk]):
                b = np.arange(l, h + 1)
                if weight is Weight.SM_WEIGHT:
                    yield complex(np.sum(psb[b] * ps[a + b]))
                elif weight is Weight.PLAIN:
                    yield complex(ps[a] * np.sum(psb[b]))
                else:
                    ph = np.exp(-1j * (b / a) * p.t)
                    yield complex(ps[a] * np.sum(psb[b] * ph))

    value, comp = _accumulate(rows())
    return SumValue(value, terms, comp)


def partial_zeta_sum(s: complex, n: int) -> complex:
    """sum_{m=1}^{n} m^(-s), compensated."""
    tab = PowerTable(s, n)[1:]
    return complex(math.fsum(tab.real), math.fsum(tab.imag))


def sum_SR(p: StripPoint) -> SumValue:
    """(sum_{m<=[t]} m^(-s)) (sum_{m<=[t]} m^(-conj s)) = |partial sum|^2."""
    if p.t < 1:
        raise ValueError("t must be at least 1")
    N = int(math.floor(p.t))
    a = partial_zeta_sum(p.s, N)
    b = partial_zeta_sum(p.s.conjugate(), N)
    prod = a * b
    return SumValue(prod, N * N, abs(prod.imag))


def g_sum(u: complex, v: complex, N: int) -> complex:
    """g(u, v) = sum_{m=1}^{N} sum_{n=N+1}^{N+m} m^(-u) n^(-v)."""
    pu = PowerTable(u, N)
    pv = PowerTable(v, 2 * N)
    parts = [complex(pu[m] * np.sum(pv[np.arange(N + 1, N + m + 1)])) for m in range(1, N + 1)]
    return _fsum_complex(parts)


def f_sum(u: complex, v: complex, N: int) -> complex:
    """f(u, v) = sum_{m1=1}^{N} sum_{m2=1}^{N} m2^(-u) (m1 + m2)^(-v)."""
    pu = PowerTable(u, N)
    pv = PowerTable(v, 2 * N)
    m = np.arange(1, N + 1)
    parts = [complex(pu[m2] * np.sum(pv[m + m2])) for m2 in range(1, N + 1)]
    return _fsum_complex(parts)


def sum_g(p: StripPoint) -> SumValue:
    """g(conj s, s) with N = [t]."""
    if p.t < 1:
        raise ValueError("t must be at least 1")
    N = int(math.floor(p.t))
    return SumValue(g_sum(p.s.conjugate(), p.s, N), N * (N + 1) // 2)


def check_fg_identity(u: complex, v: complex, N: int) -> ResidualReport:
    """f(u,v) + f(v,u) + sum m^(-u-v) against (sum m^(-u))(sum n^(-v)) + g(u,v) + g(v,u).

    Both sides are built by brute-force double loops over the defining ranges.
    """
    if N < 1:
        raise ValueError("N must be positive")
    m = np.arange(1, N + 1, dtype=float)
    lm = np.log(m)
    lm2 = np.log(np.arange(1, 2 * N + 1, dtype=float))
    pw = lambda z, logs: np.exp(-complex(z) * logs)  # noqa: E731
    mu, mv, muv = pw(u, lm), pw(v, lm), pw(complex(u) + complex(v), lm)
    nu, nv = pw(u, lm2), pw(v, lm2)
    idx = np.arange(N)[:, None] + np.arange(N)[None, :] + 1  # (m1 + m2) - 1 as index
    f_uv = np.sum(mu[None, :] * nv[idx])
    f_vu = np.sum(mv[None, :] * nu[idx])
    tri = np.arange(N)[:, None] >= np.arange(N)[None, :]  # n - N - 1 <= m - 1
    n_idx = N + np.arange(N)[None, :]
    g_uv = np.sum(np.where(tri, mu[:, None] * nv[n_idx], 0))
    g_vu = np.sum(np.where(tri, mv[:, None] * nu[n_idx], 0))
    lhs = f_uv + f_vu + np.sum(muv)
    rhs = np.sum(mu) * np.sum(mv) + g_uv + g_vu
    scale = np.sum(np.abs(mu)) * np.sum(np.abs(mv)) * 3
    return ResidualReport.compare(complex(lhs), complex(rhs), scale=float(scale))


def check_SR_SM_relation(p: StripPoint) -> ResidualReport:
    """2 Re{full-square SM sum} against S_R - sum m^(-2 sigma) + 2 Re{g(conj s, s)}."""
    full = sum_over(IndexSetSpec(IndexKind.FULL_SQUARE, p.t), Weight.SM_WEIGHT, p)
    sr = sum_SR(p)
    N = int(math.floor(p.t))
    diag = math.fsum(float(m) ** (-2 * p.sigma) for m in range(1, N + 1))
    g = sum_g(p)
    lhs = 2 * full.value.real
    rhs = sr.value.real - diag + 2 * g.value.real
    return ResidualReport.compare(lhs, rhs, scale=abs(sr.value) + diag + 2 * abs(g.value))


def check_partition(p: StripPoint, d2: float, d3: float, literal: bool = True) -> ResidualReport:
    """Full-square SM sum against S_M + S_2 + S_3.

    ``literal=True`` takes S_2, S_3 over M2, M3 as their inequalities are
    written; ``literal=False`` uses the complements of M instead.
    """
    t = p.t
    full = sum_over(IndexSetSpec(IndexKind.FULL_SQUARE, t), Weight.SM_WEIGHT, p)
    sm = sum_over(IndexSetSpec(IndexKind.M, t, d2=d2, d3=d3), Weight.SM_WEIGHT, p)
    k2 = IndexKind.M2 if literal else IndexKind.M2_COMPLEMENT
    k3 = IndexKind.M3 if literal else IndexKind.M3_COMPLEMENT
    s2 = sum_over(IndexSetSpec(k2, t, d2=d2), Weight.SM_WEIGHT, p)
    s3 = sum_over(IndexSetSpec(k3, t, d3=d3), Weight.SM_WEIGHT, p)
    rhs = sm.value + s2.value + s3.value
    return ResidualReport.compare(
        full.value, rhs, terms_full=full.terms, terms_parts=sm.terms + s2.terms + s3.terms
    )


@dataclass
class CoverResult:
    """Outcome of an index-cover check."""

    ok: bool
    missing: list[tuple[int, int]]
    overlapping: list[tuple[int, int]]

    def __bool__(self) -> bool:
        return self.ok


def _cover_blocks(t: float, d2: float, d3: float, literal: bool) -> list[IndexSetSpec | tuple]:
    T = int(math.floor(t))
    if literal:
        return [IndexSetSpec(IndexKind.COVER_A, t, d3=d3), IndexSetSpec(IndexKind.COVER_B, t, d2=d2)]
    # Explicit limits of the exact complements of M:
    #   m1 = 1..[t/c2],      m2 = ceil(c2 m1)..[t]
    #   m1 = ceil(c3)..[t],  m2 = 1..[m1/c3]
    c2, c3 = t ** (1 - d2) - 1, t ** (1 - d3) - 1
    a_rows = [(m1, math.ceil(c2 * m1), T) for m1 in range(1, min(T, int(math.floor(t / c2))) + 1)]
    b_rows = [(m1, 1, int(math.floor(m1 / c3))) for m1 in range(max(1, math.ceil(c3)), T + 1)]
    return [a_rows, b_rows]


def check_index_cover(t: float, d2: float, d3: float, literal: bool = True, max_report: int = 10) -> CoverResult:
    """Exhaustively check that M and the two explicit blocks partition the square.

    ``literal=True`` uses the block limits exactly as written in the
    decomposition lemma; ``literal=False`` uses the limits of the exact
    complements of M.
    """
    T = int(math.floor(t))
    counts = np.zeros((T + 1, T + 1), dtype=np.int32)

    def add_rows(rows):
        for m1, l, h in rows:
            l, h = max(int(l), 1), min(int(h), T)
            if h >= l:
                counts[m1, l:h + 1] += 1

    m1, lo, hi = IndexSetSpec(IndexKind.M, t, d2=d2, d3=d3).rows()
    add_rows(zip(m1, lo, hi))
    for block in _cover_blocks(t, d2, d3, literal):
        if isinstance(block, IndexSetSpec):
            add_rows(zip(*block.rows()))
        else:
            add_rows(block)
    sq = counts[1:, 1:]
    miss = np.argwhere(sq == 0) + 1
    over = np.argwhere(sq > 1) + 1
    return CoverResult(
        ok=bool(miss.size == 0 and over.size == 0),
        missing=[tuple(map(int, x)) for x in miss[:max_report]],
        overlapping=[tuple(map(int, x)) for x in over[:max_report]],
    )


def sum_eq130(t: float, d2: float) -> SumValue:
    """sum_{m=[t^(1-d2)]}^{[t]} sum_{n=m+1}^{[m(1+t^(d2-1))]} n^(-1/2-it) m^(-1/2+it)."""
    if t < 4:
        raise ValueError("t must be at least 4")
    T = int(math.floor(t))
    m_first = max(1, int(math.floor(t ** (1 - d2))))
    ms = np.arange(m_first, T + 1)
    tops = np.floor(ms * (1 + t ** (d2 - 1))).astype(np.int64)
    nmax = int(max(tops.max(), T))
    s = complex(0.5, t)
    ps = PowerTable(s, nmax)
    psb = PowerTable(s.conjugate(), nmax)
    parts, terms = [], 0
    for m, top in zip(ms, tops):
        if top >= m + 1:
            n = np.arange(m + 1, top + 1)
            parts.append(complex(psb[m] * np.sum(ps[n])))
            terms += n.size
    value, comp = _accumulate(iter(parts))
    return SumValue(value, terms, comp)


def sum_section7(t: float, d1: float, d2: float, variant: str) -> SumValue:
    """The section-7 model sums.

    F12: sum over N7 of sqrt(m2/m1) / (m2^(1/2-it) (m1+m2)^(1/2+it))
    F17: sum over M7 of exp(i (m2/m1) t) / (sqrt(m1) sqrt(m1+m2))
    F18: sum over M7 of exp(i (m2/m1) t) / sqrt(m1 m2)
    """
    if t < 4:
        raise ValueError("t must be at least 4")
    variant = variant.upper()
    kind = IndexKind.N7 if variant == "F12" else IndexKind.M7
    if variant not in ("F12", "F17", "F18"):
        raise ValueError(f"unknown variant {variant}")
    if d1 >= d2:
        return SumValue(0j, 0, 0.0)
    m1, lo, hi = IndexSetSpec(kind, t, d1=d1, d2=d2).rows()
    parts, terms = [], 0
    for a, l, h in zip(m1, lo, hi):
        if h < l:
            continue
        b = np.arange(l, h + 1, dtype=float)
        a = float(a)
        if variant == "F12":
            # sqrt(m2/m1) m2^(-1/2+it) (m1+m2)^(-1/2-it) = (m1 (m1+m2))^(-1/2) (m2/(m1+m2))^(it)
            val = np.exp(1j * t * np.log(b / (a + b))) / np.sqrt(a * (a + b))
        elif variant == "F17":
            val = np.exp(1j * (b / a) * t) / np.sqrt(a * (a + b))
        else:
            val = np.exp(1j * (b / a) * t) / np.sqrt(a * b)
        parts.append(complex(np.sum(val)))
        terms += b.size
    value, comp = _accumulate(iter(parts))
    return SumValue(value, terms, comp)


def kf_bound(sigma: float, t: float) -> float:
    """Shape t^(1/2 - 5 sigma/3) ln t (sigma <= 1/2) or t^(1/3 - 4 sigma/3) ln t."""
    if sigma <= 0.5:
        return t ** (0.5 - 5 * sigma / 3) * math.log(t)
    return t ** (1.0 / 3 - 4 * sigma / 3) * math.log(t)


def diagonal_gap(p: StripPoint) -> float:
    """2 Re{full-square SM sum} - |sum_{m<=[t]} m^(-s)|^2."""
    full = sum_over(IndexSetSpec(IndexKind.FULL_SQUARE, p.t), Weight.SM_WEIGHT, p)
    return 2 * full.value.real - sum_SR(p).value.real


@dataclass
class ChangeOfVariables:
    """F18 against its image under m1 = n1 + n2, m2 = n1."""

    f18: complex
    reindexed: complex
    f12_conj: complex
    reindex_rel_err: float
    approx_rel_err: float


def section7_change_of_variables(t: float, d1: float, d2: float) -> ChangeOfVariables:
    """Relate the F18 sum to the conjugate of the F12 sum.

    The substitution m1 = n1 + n2, m2 = n1 turns F18 into a sum over
    n1/(n1+n2) in (t^(d1-1), t^(d2-1)), n1 + n2 <= [t], of
    exp(i t n1/(n1+n2)) / sqrt(n1 (n1+n2)); this re-indexed sum is computed
    separately and must agree with F18 exactly.  Replacing
    t n1/(n1+n2) by -t ln(n2/(n1+n2)) gives the conjugate of the F12 term,
    which is accurate only while t (n1/(n1+n2))^2 is small.
    """
    f18 = sum_section7(t, d1, d2, "F18").value
    f12 = sum_section7(t, d1, d2, "F12").value
    T = int(math.floor(t))
    lo_r, hi_r = t ** (d1 - 1), t ** (d2 - 1)
    parts = []
    for n in range(2, T + 1):  # n = n1 + n2
        n1 = np.arange(1, n)
        x = n1 / n
        keep = (x > lo_r) & (x < hi_r)
        if keep.any():
            parts.append(complex(np.sum(np.exp(1j * t * x[keep]) / np.sqrt(n1[keep] * float(n)))))
    re = _fsum_complex(parts)
    scale = max(abs(f18), 1e-300)
    return ChangeOfVariables(f18, re, f12.conjugate(), abs(re - f18) / scale, abs(f12.conjugate() - f18) / scale)
