import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from group_utils import CapExceededError, RegimeError, get_max_order

EXP_MINUS_GAMMA = 0.56145948356688516982
SIX_OVER_PI_SQUARED = 6.0 / math.pi ** 2

# Grids are built to at least this u so sweeps share one cached grid.
GRID_SPAN = 12

# Accepted range of count/estimate for rough numbers, checked only for
# p >= ROUGH_WINDOW_MIN_P and u >= ROUGH_WINDOW_MIN_U.
ROUGH_WINDOW = (0.5, 2.0)
ROUGH_WINDOW_MIN_P = 10 ** 4
ROUGH_WINDOW_MIN_U = 1.2


# ==================================================
# 1. SIEVE
# ==================================================

@dataclass(frozen=True)
class SieveTables:
    """
    Linear-sieve tables over 0..limit. Entries 0 and 1 hold 0 in spf and
    False in prime_flags; phi[1] = 1.
    """
    limit: int
    smallest_prime_factor: np.ndarray
    prime_flags: np.ndarray
    prime_count_prefix: np.ndarray
    phi: np.ndarray

    def spf(self, x: int) -> int:
        self.check(x)
        return int(self.smallest_prime_factor[x])

    def check(self, x: int) -> None:
        if not (2 <= x <= self.limit):
            raise CapExceededError(f"{x} outside sieve range 2..{self.limit}")

    def primes(self) -> np.ndarray:
        return np.flatnonzero(self.prime_flags)


def build_sieve(N: int, max_limit: Optional[int] = None) -> SieveTables:
    """Linear smallest-prime-factor sieve, with Euler's phi computed alongside."""
    cap = max_limit if max_limit is not None else get_max_order()
    if N < 2:
        raise RegimeError(f"sieve limit must be >= 2, got {N}")
    if N > cap:
        raise CapExceededError(f"sieve limit {N} above cap {cap}")
    spf = [0] * (N + 1)
    phi = [0] * (N + 1)
    phi[1] = 1
    primes = []
    for i in range(2, N + 1):
        if spf[i] == 0:
            spf[i] = i
            phi[i] = i - 1
            primes.append(i)
        si = spf[i]
        for q in primes:
            m = q * i
            if q > si or m > N:
                break
            spf[m] = q
            phi[m] = phi[i] * q if q == si else phi[i] * (q - 1)
    spf_arr = np.array(spf, dtype=np.int64)
    flags = np.zeros(N + 1, dtype=bool)
    flags[np.array(primes, dtype=np.int64)] = True
    prefix = np.cumsum(flags, dtype=np.int64)
    phi_arr = np.array(phi, dtype=np.int64)
    for arr in (spf_arr, flags, prefix, phi_arr):
        arr.setflags(write=False)
    return SieveTables(N, spf_arr, flags, prefix, phi_arr)


@lru_cache(maxsize=8)
def cached_sieve(N: int) -> SieveTables:
    return build_sieve(N)


def sieve_at_least(N: int, tables: Optional[SieveTables] = None) -> SieveTables:
    if tables is not None and tables.limit >= N:
        return tables
    return cached_sieve(max(N, 2))


def prime_count(x: int, tables: Optional[SieveTables] = None) -> int:
    """π(x), exact."""
    if x < 2:
        return 0
    tables = sieve_at_least(x, tables)
    return int(tables.prime_count_prefix[x])


def euler_phi(n: int, tables: Optional[SieveTables] = None) -> int:
    if n < 1:
        raise RegimeError(f"phi is defined for n >= 1, got {n}")
    if n == 1:
        return 1
    if tables is not None and n <= tables.limit:
        return int(tables.phi[n])
    result, m, q = n, n, 2
    while q * q <= m:
        if m % q == 0:
            while m % q == 0:
                m //= q
            result -= result // q
        q += 1
    if m > 1:
        result -= result // m
    return result


def totient_ratio_count(lam: int, tables: Optional[SieveTables] = None) -> int:
    """phi(1) + 2(phi(2) + ... + phi(lam)): the number of reduced fractions a/b with a, b <= lam."""
    if lam < 1:
        raise RegimeError(f"lambda must be >= 1, got {lam}")
    if lam == 1:
        return 1
    tables = sieve_at_least(lam, tables)
    return 2 * int(tables.phi[1:lam + 1].sum()) - 1


def is_rough(x: int, lam: int, tables: SieveTables) -> bool:
    """True when no prime <= lam divides x."""
    tables.check(x)
    return int(tables.smallest_prime_factor[x]) > lam


def rough_count(lo: int, hi: int, lam: int, tables: Optional[SieveTables] = None) -> int:
    """Integers x in (lo, hi] whose smallest prime factor exceeds lam."""
    if hi <= lo:
        return 0
    tables = sieve_at_least(hi, tables)
    start = max(lo + 1, 2)
    return int(np.count_nonzero(tables.smallest_prime_factor[start:hi + 1] > lam))


def pnt_lower_estimate(p: int, lam: int) -> float:
    """(p/λ)/log(p/λ) - λ/log λ, the counting step behind the prime-interval size."""
    x = p / lam
    return x / math.log(x) - lam / math.log(lam)


# ==================================================
# 2. BUCHSTAB'S FUNCTION
# ==================================================

def _lagrange4(x: float):
    """Cubic Lagrange weights on the nodes 0, 1, 2, 3 evaluated at x."""
    return (
        -(x - 1) * (x - 2) * (x - 3) / 6,
        x * (x - 2) * (x - 3) / 2,
        -x * (x - 1) * (x - 3) / 2,
        x * (x - 1) * (x - 2) / 6,
    )


@dataclass(frozen=True)
class BuchstabGrid:
    """ω sampled on u = 1 + i·h; 1/h is an integer so u = 2 is a grid point."""
    h: float
    u_max: float
    values: np.ndarray

    @property
    def steps_per_unit(self) -> int:
        return int(round(1 / self.h))

    def at(self, u: float) -> float:
        if u < 1:
            raise RegimeError(f"Buchstab's function is defined for u >= 1, got {u}")
        if u <= 2:
            return 1.0 / u
        if u > self.u_max + 1e-12:
            raise RegimeError(f"u={u} beyond grid end {self.u_max}")
        pos = (u - 1) / self.h
        i = int(round(pos))
        if abs(pos - i) < 1e-9:
            return float(self.values[i])
        return _interpolate(self.values, pos, self.steps_per_unit, len(self.values) - 1)


def _interpolate(values, pos: float, n: int, last: int) -> float:
    """
    Cubic interpolation at fractional grid position pos using only stored
    values up to index `last`. Stencils never straddle index n (u = 2),
    where ω' jumps.
    """
    j = int(math.floor(pos))
    if j + 1 <= n:
        s = min(max(j - 1, 0), n - 3)
    else:
        s = max(j - 1, n)
    s = min(s, last - 3)
    w = _lagrange4(pos - s)
    return float(w[0] * values[s] + w[1] * values[s + 1] + w[2] * values[s + 2] + w[3] * values[s + 3])


@lru_cache(maxsize=16)
def buchstab_grid(u_max: float, h: float = 1e-3) -> BuchstabGrid:
    """
    ω(u) = 1/u on [1, 2]; for u > 2 integrates ω'(u) = (ω(u-1) - ω(u))/u with
    classical RK4. The delayed value at a half step comes from cubic
    interpolation of the stored history.
    """
    if h <= 0 or h > 0.01:
        raise RegimeError(f"step must satisfy 0 < h <= 0.01, got {h}")
    n = int(round(1 / h))
    if abs(n * h - 1) > 1e-9:
        raise RegimeError(f"1/h must be an integer so that u = 2 lies on the grid, got h={h}")
    u_max = max(float(u_max), 2.0)
    total = int(math.ceil((u_max - 1) * n - 1e-9))
    total = max(total, n)
    values = np.empty(total + 1, dtype=np.float64)
    for i in range(n + 1):
        values[i] = 1.0 / (1 + i / n)

    def f(u, w, delayed):
        return (delayed - w) / u

    for i in range(n, total):
        u = 1 + i * h
        w = values[i]
        d0 = values[i - n]
        d_half = _interpolate(values, i - n + 0.5, n, i)
        d1 = values[i - n + 1]
        k1 = f(u, w, d0)
        k2 = f(u + h / 2, w + h / 2 * k1, d_half)
        k3 = f(u + h / 2, w + h / 2 * k2, d_half)
        k4 = f(u + h, w + h * k3, d1)
        values[i + 1] = w + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    values.setflags(write=False)
    return BuchstabGrid(h, 1 + total * h, values)


def buchstab_omega(u: float, h: float = 1e-3) -> float:
    if u < 1:
        raise RegimeError(f"Buchstab's function is defined for u >= 1, got {u}")
    if u <= 2:
        return 1.0 / u
    return buchstab_grid(float(max(GRID_SPAN, math.ceil(u))), h).at(u)


# ==================================================
# 3. INTERVAL REPORTS
# ==================================================

@dataclass
class RoughCountReport:
    p: int
    lam: int
    count: int
    u: float
    omega: float
    estimate: float
    ratio: float

    @property
    def in_window(self) -> Optional[bool]:
        """None when the instance is outside the regime the window is checked in."""
        if self.p < ROUGH_WINDOW_MIN_P or self.u < ROUGH_WINDOW_MIN_U:
            return None
        lo, hi = ROUGH_WINDOW
        return lo <= self.ratio <= hi

    def to_dict(self):
        return {
            'p': self.p, 'lambda': self.lam, 'count': self.count, 'u': self.u,
            'omega': self.omega, 'estimate': self.estimate, 'ratio': self.ratio,
        }


def check_rough_regime(p: int, lam: int) -> None:
    """2 <= λ <= 0.9·sqrt(p), as 100·λ² <= 81·p in integers."""
    if lam < 2:
        raise RegimeError(f"lambda must be >= 2, got {lam}")
    if 100 * lam * lam > 81 * p:
        raise RegimeError(f"lambda={lam} exceeds 0.9*sqrt(p) for p={p}")


def rough_count_vs_buchstab(p: int, lam: int, h: float = 1e-3,
                            tables: Optional[SieveTables] = None,
                            count: Optional[int] = None) -> RoughCountReport:
    """
    Exact count of λ-rough x in (λ, p/λ] next to (p/(λ log λ))·ω(u). Pass
    count when the rough set was already built.
    """
    check_rough_regime(p, lam)
    if count is None:
        count = rough_count(lam, p // lam, lam, tables)
    u = math.log(p / lam) / math.log(lam)
    omega = buchstab_omega(u, h)
    estimate = p / (lam * math.log(lam)) * omega
    return RoughCountReport(p, lam, count, u, omega, estimate, count / estimate)


@dataclass
class RoughWindowSummary:
    """
    Tally of count/estimate over a sweep. Instances with p large enough
    but u below ROUGH_WINDOW_MIN_U are kept apart as `gated`.
    """
    checked: int = 0
    outside: int = 0
    gated: int = 0
    small_p: int = 0
    checked_range: Optional[tuple] = None
    gated_range: Optional[tuple] = None

    def add(self, report: RoughCountReport) -> None:
        if report.p < ROUGH_WINDOW_MIN_P:
            self.small_p += 1
            return
        if report.u < ROUGH_WINDOW_MIN_U:
            self.gated += 1
            self.gated_range = _widen(self.gated_range, report.ratio)
            return
        self.checked += 1
        self.checked_range = _widen(self.checked_range, report.ratio)
        if not report.in_window:
            self.outside += 1

    def notes(self):
        lines = []
        if self.checked_range:
            lo, hi = self.checked_range
            lines.append(f"count/estimate over {self.checked} checked instances: [{lo:.3f}, {hi:.3f}]")
        else:
            lines.append(f"no instance with p >= {ROUGH_WINDOW_MIN_P} and u >= {ROUGH_WINDOW_MIN_U}; window not checked")
        if self.gated_range:
            lo, hi = self.gated_range
            lines.append(f"{self.gated} instances with p >= {ROUGH_WINDOW_MIN_P} but u < {ROUGH_WINDOW_MIN_U} "
                         f"not checked, count/estimate in [{lo:.3f}, {hi:.3f}]")
        if self.small_p:
            lines.append(f"{self.small_p} instances with p < {ROUGH_WINDOW_MIN_P} not checked against the window")
        return lines


def _widen(span: Optional[tuple], value: float) -> tuple:
    if span is None:
        return value, value
    return min(span[0], value), max(span[1], value)
