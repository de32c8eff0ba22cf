import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from covering_utils import middle_third_set
from group_utils import (
    Group,
    GroupSet,
    InvariantViolation,
    RegimeError,
    SetSpecError,
    Subgroup,
    coset_transversal,
    cyclic_subgroup,
    format_set,
    multmod_group,
)
from numth_utils import (
    SIX_OVER_PI_SQUARED,
    SieveTables,
    check_rough_regime,
    prime_count,
    rough_count,
    sieve_at_least,
    totient_ratio_count,
)
from packing_utils import exact_nu, is_packing, packing_certificate
from setalg_utils import parse_label, parse_set_literal, ratio_set


# ==================================================
# 1. SUBGROUPS AND TRANSVERSALS
# ==================================================

def subgroup_transversal_pair(G: Group, H: Subgroup) -> Tuple[GroupSet, GroupSet]:
    """A = H, B = one representative per coset; A∘B tiles G, so ν(H) = |G|/|H|."""
    A = H.elements
    B = coset_transversal(G, H)
    cert = packing_certificate(A, B)
    if not cert.is_packing or cert.product_cardinality != G.order:
        raise InvariantViolation(f"transversal of {format_set(A)} does not tile {G.spec}")
    return A, B


def coset_representative_pair(G: Group, H: Subgroup) -> Tuple[GroupSet, GroupSet]:
    """The converse arrangement: A is the transversal and B = H packs it."""
    B, A = subgroup_transversal_pair(G, H)
    if not is_packing(A, B):
        raise InvariantViolation(f"{format_set(B)} does not pack its coset representatives")
    return A, B


# ==================================================
# 2. TIGHTNESS & GRADED SETS
# ==================================================

def _ceil_sqrt(k: int) -> int:
    return math.isqrt(k - 1) + 1 if k > 1 else 1


def _power_set(G: Group, g: int, exponents) -> GroupSet:
    return GroupSet.from_indices(G, [G.power(g, e) for e in exponents])


@dataclass(frozen=True)
class TightnessSpec:
    G: Group
    g: int
    k: int
    d: int
    A1: GroupSet
    A2: GroupSet
    A: GroupSet


def tightness_set(G: Group, g: int) -> TightnessSpec:
    """
    A = {g, ..., g^d} ∪ {g^d, g^2d, ..., g^(d·d)} with d = ⌈√k⌉. Every exponent
    difference in (-k, k) is reached, so A∘A⁻¹ is all of ⟨g⟩ while |A| < 2d.
    """
    k = G.element_order(g)
    if k < 2:
        raise RegimeError(f"generator must have order >= 2, got order {k}")
    d = _ceil_sqrt(k)
    A1 = _power_set(G, g, range(1, d + 1))
    A2 = _power_set(G, g, (j * d for j in range(1, d + 1)))
    A = A1 | A2
    if len(A) >= 2 * d:
        raise InvariantViolation(f"|A|={len(A)} not below 2d={2 * d}")
    H = cyclic_subgroup(G, g).elements
    if ratio_set(A) != H:
        raise InvariantViolation(f"ratio set of {format_set(A)} differs from ⟨g⟩")
    return TightnessSpec(G, g, k, d, A1, A2, A)


@dataclass
class TightnessReport:
    spec: TightnessSpec
    nu: int
    status: str
    subgroup_bound: float      # |G|/k
    square_bound: float        # 16|G|/|A|²

    @property
    def holds(self) -> bool:
        return self.nu <= self.subgroup_bound < self.square_bound


def check_tightness(spec: TightnessSpec, budget: Optional[int] = None) -> TightnessReport:
    """ν(A) <= |G|/k < 16|G|/|A|² with ν from the exact solver."""
    G, A = spec.G, spec.A
    result = exact_nu(A, budget=budget)
    report = TightnessReport(spec, result.value, result.status,
                             G.order / spec.k, 16 * G.order / len(A) ** 2)
    # |G|/k < 16|G|/|A|² is |A|² < 16k
    if len(A) ** 2 >= 16 * spec.k:
        raise InvariantViolation(f"|A|²={len(A) ** 2} not below 16k={16 * spec.k}")
    if result.exact and result.value * spec.k > G.order:
        raise InvariantViolation(f"ν={result.value} above |G|/k={G.order // spec.k}")
    return report


@dataclass(frozen=True)
class GradedSpec:
    G: Group
    g: int
    k: int
    m: int
    m_prime: int
    A: GroupSet

    @property
    def ratio_radius(self) -> int:
        return self.m * self.m_prime - 1

    @property
    def expected_ratio_size(self) -> int:
        return min(2 * self.m * self.m_prime - 1, self.k)

    @property
    def expected_nu(self) -> int:
        return (self.G.order // self.k) * (self.k // (self.m * self.m_prime))

    @property
    def alpha(self) -> float:
        return graded_alpha(self.m, self.m_prime)


def graded_alpha(m: int, m_prime: int) -> float:
    """Exponent α with |A'∘A'⁻¹| ≈ |A'|^(1+α)."""
    return math.log(m * m_prime) / math.log(m + m_prime) - 1


def graded_set(G: Group, g: int, m: int, m_prime: int) -> GradedSpec:
    """A' = {g^i : 1 <= i <= m} ∪ {g^(jm) : 1 <= j <= m'}."""
    k = G.element_order(g)
    if m < 1 or m_prime < 1:
        raise RegimeError(f"m and m' must be positive, got {m}, {m_prime}")
    if m * m_prime > k:
        raise RegimeError(f"m·m'={m * m_prime} exceeds the order k={k} of g")
    A = _power_set(G, g, range(1, m + 1)) | _power_set(G, g, (j * m for j in range(1, m_prime + 1)))
    spec = GradedSpec(G, g, k, m, m_prime, A)
    if len(A) != m + m_prime - 1:
        raise InvariantViolation(f"|A'|={len(A)} differs from m+m'-1={m + m_prime - 1}")
    radius = spec.ratio_radius
    expected = _power_set(G, g, range(-radius % k, -radius % k + 2 * radius + 1))
    D = ratio_set(A)
    if D != expected or len(D) != spec.expected_ratio_size:
        raise InvariantViolation(f"ratio set of {format_set(A)} is not {{g^t : |t| <= {radius}}}")
    return spec


def graded_parameters(k: int) -> Iterator[Tuple[int, int]]:
    """Every (m, m') with m·m' <= k, m ascending then m'."""
    for m in range(1, k + 1):
        for m_prime in range(1, k // m + 1):
            yield m, m_prime


# ==================================================
# 3. INTERVALS IN THE MULTIPLICATIVE GROUP
# ==================================================

@dataclass(frozen=True)
class IntervalSpec:
    p: int
    lam: int
    A: GroupSet


def interval_set(p: int, lam: int) -> IntervalSpec:
    G = multmod_group(p)
    if not 1 <= lam <= p - 1:
        raise RegimeError(f"lambda must lie in 1..{p - 1}, got {lam}")
    return IntervalSpec(p, lam, GroupSet.from_labels(G, range(1, lam + 1)))


def _check_interval_packing(p: int, lam: int, A: GroupSet, B: GroupSet, what: str) -> None:
    if B:
        top = max(B.labels())
        # products a·b stay below p as integers
        if lam * top > p:
            raise InvariantViolation(f"{what}: λ·max(B) = {lam * top} exceeds p = {p}")
    if not is_packing(A, B):
        raise InvariantViolation(f"{what} for p={p}, λ={lam} is not a packing set")


def prime_interval_set(p: int, lam: int, tables: Optional[SieveTables] = None) -> GroupSet:
    """Primes q with λ < q <= ⌊p/λ⌋; unique factorisation makes them an A-packing set."""
    check_rough_regime(p, lam)
    A = interval_set(p, lam).A
    upper = p // lam
    tables = sieve_at_least(upper, tables)
    B = GroupSet.from_labels(A.parent, [q for q in range(lam + 1, upper + 1) if tables.prime_flags[q]])
    expected = prime_count(upper, tables) - prime_count(lam, tables)
    if len(B) != expected:
        raise InvariantViolation(f"|B|={len(B)} differs from π({upper}) - π({lam}) = {expected}")
    if 2 * lam * lam <= p and not B:
        raise InvariantViolation(f"no prime in ({lam}, {upper}] although 2λ <= p/λ")
    _check_interval_packing(p, lam, A, B, "prime interval set")
    return B


def rough_interval_set(p: int, lam: int, tables: Optional[SieveTables] = None) -> GroupSet:
    """Integers in (λ, ⌊p/λ⌋] with no prime factor <= λ."""
    check_rough_regime(p, lam)
    A = interval_set(p, lam).A
    upper = p // lam
    tables = sieve_at_least(upper, tables)
    spf = tables.smallest_prime_factor
    B = GroupSet.from_labels(A.parent, [x for x in range(lam + 1, upper + 1) if spf[x] > lam])
    expected = rough_count(lam, upper, lam, tables)
    if len(B) != expected:
        raise InvariantViolation(f"|B|={len(B)} differs from the sieve count {expected} of {lam}-rough x <= {upper}")
    primes = np.flatnonzero(tables.prime_flags[lam + 1:upper + 1]) + lam + 1
    if not all(A.parent.index(int(q)) in B for q in primes):
        raise InvariantViolation("rough interval set misses a prime in its window")
    _check_interval_packing(p, lam, A, B, "rough interval set")
    return B


@dataclass
class RatioCountReport:
    p: int
    lam: int
    ratio_size: int
    totient_count: Optional[int]
    full_group: bool
    density: float

    @property
    def exact_match(self) -> Optional[bool]:
        if self.totient_count is None:
            return None
        return self.ratio_size == self.totient_count

    @property
    def expected_full(self) -> bool:
        return 2 * self.lam >= self.p + 1

    def to_dict(self):
        return {
            'p': self.p, 'lambda': self.lam, 'ratioSize': self.ratio_size,
            'totientCount': self.totient_count, 'exactMatch': self.exact_match,
            'fullGroup': self.full_group, 'density': self.density,
            'densityTarget': SIX_OVER_PI_SQUARED,
        }


def ratio_count_checks(p: int, lam: int, tables: Optional[SieveTables] = None) -> RatioCountReport:
    """
    |{1..λ}∘{1..λ}⁻¹| in the multiplicative group mod p. Below √p it equals
    the number of reduced fractions a/b with a, b <= λ; the ratio set is the
    whole group exactly when 2λ >= p + 1.
    """
    A = interval_set(p, lam).A
    D = ratio_set(A)
    count = totient_ratio_count(lam, tables) if lam * lam < p else None
    report = RatioCountReport(p, lam, len(D), count, len(D) == p - 1, len(D) / lam ** 2)
    if report.exact_match is False:
        raise InvariantViolation(f"|AA⁻¹|={len(D)} differs from the totient count {count} at p={p}, λ={lam}")
    if report.full_group != report.expected_full:
        raise InvariantViolation(f"AA⁻¹ = F_p* is {report.full_group} at p={p}, λ={lam}")
    return report


# ==================================================
# 4. NAMED CONSTRUCTIONS
# ==================================================

def _ints(body: str, count: int, name: str):
    try:
        values = [int(part) for part in body.split(',')]
    except ValueError:
        raise SetSpecError(f"bad parameters {body!r} for {name}")
    if len(values) != count:
        raise SetSpecError(f"{name} takes {count} parameter(s), got {len(values)}")
    return values


def resolve_set_spec(G: Group, spec: str) -> Tuple[GroupSet, Optional[GroupSet]]:
    """
    A set literal or a named construction, returned as (A, B). B is the
    packing set the construction comes with, or None.

      subgroup:g       A = ⟨g⟩, B = coset transversal
      tightness:g      A = {g..g^d} ∪ {g^d..g^(d·d)}
      graded:g,m,m'    A' of the graded family
      interval:λ       {1..λ} (also interval:1..L)
      primes:λ         A = {1..λ}, B = primes in (λ, p/λ]
      rough:λ          A = {1..λ}, B = λ-rough integers in (λ, p/λ]
      middlethird      {x : p/3 <= x <= 2p/3}
    """
    spec = (spec or '').strip()
    name, _, body = spec.partition(':')
    if name == 'subgroup' and body:
        H = cyclic_subgroup(G, G.index(parse_label(G, body)))
        return subgroup_transversal_pair(G, H)
    if name == 'tightness':
        (g,) = _ints(body, 1, name)
        return tightness_set(G, G.index(g)).A, None
    if name == 'graded':
        g, m, m_prime = _ints(body, 3, name)
        return graded_set(G, G.index(g), m, m_prime).A, None
    if name in ('interval', 'primes', 'rough', 'middlethird') and G.kind != 'multmod':
        raise SetSpecError(f"{name} sets live in a multmod group, not {G.spec}")
    if name == 'interval' and '..' not in body:
        (lam,) = _ints(body, 1, name)
        return interval_set(G.p, lam).A, None
    if name in ('primes', 'rough'):
        (lam,) = _ints(body, 1, name)
        build = prime_interval_set if name == 'primes' else rough_interval_set
        return interval_set(G.p, lam).A, build(G.p, lam)
    if spec == 'middlethird':
        return middle_third_set(G.p), None
    return parse_set_literal(G, spec), None
