import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from construction_utils import (
    check_tightness,
    graded_parameters,
    graded_set,
    interval_set,
    prime_interval_set,
    ratio_count_checks,
    rough_interval_set,
    subgroup_transversal_pair,
    tightness_set,
)
from covering_utils import (
    check_cov_nu_relation,
    check_interval_cover,
    check_middle_third,
    covering_bounds,
    exact_cov,
    greedy_cover,
)
from group_utils import (
    Group,
    GroupSet,
    PacknuError,
    all_subgroups,
    cyclic_group,
    format_set,
    multmod_group,
    product_group,
)
from numth_utils import (
    EXP_MINUS_GAMMA,
    RoughWindowSummary,
    build_sieve,
    buchstab_grid,
    buchstab_omega,
    rough_count_vs_buchstab,
)
from packing_utils import (
    check_symmetry_proposition,
    exact_nu,
    greedy_packing,
    packing_bounds,
    packing_certificate,
)
from scan_utils import primes_in
from setalg_utils import product_set, random_subset, ratio_set

# failures kept per claim; the count covers all of them
MAX_LISTED_FAILURES = 10

FAST_P_LIMIT = 10 ** 5


@dataclass
class VerifyOptions:
    fast: bool = False
    inject_fault: bool = False
    seed: int = 20240601
    nu_budget: Optional[int] = None
    cov_budget: int = 20_000
    middle_third_budget: int = 200_000
    # upper end of the prime sweeps behind the interval packing claims
    prime_limit: int = 10007


@dataclass
class ClaimResult:
    name: str
    description: str
    instances: int = 0
    failure_count: int = 0
    failures: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failure_count == 0

    def fail(self, message: str) -> None:
        self.failure_count += 1
        if len(self.failures) < MAX_LISTED_FAILURES:
            self.failures.append(message)

    def to_dict(self):
        return {
            'claim': self.name, 'passed': self.passed, 'instances': self.instances,
            'failures': self.failure_count, 'seconds': round(self.seconds, 3),
            'details': self.failures, 'notes': self.notes,
        }


def group_matrix(max_order: int = 48) -> List[Group]:
    """Cyclic groups, Z2 x Zn, Z2 x Z2 x Zn and multiplicative groups mod p up to max_order."""
    groups = [cyclic_group(n) for n in range(2, 49)]
    groups += [product_group(2, n) for n in range(2, 25)]
    groups += [product_group(2, 2, n) for n in range(2, 13)]
    groups += [multmod_group(p) for p in primes_in(3, 47)]
    return [G for G in groups if G.order <= max_order]


def _small_subset(G: Group, rng: np.random.Generator, limit: Optional[int] = None) -> GroupSet:
    return random_subset(G, rng, max_size=limit or max(2, math.isqrt(G.order) + 1))


# ==================================================
# 1. PACKING CLAIMS
# ==================================================

def claim_characterization(opts: VerifyOptions, result: ClaimResult) -> None:
    rng = np.random.default_rng(opts.seed)
    for G in group_matrix():
        for _ in range(200):
            A, B = _small_subset(G, rng), _small_subset(G, rng)
            direct = len(product_set(A, B)) == len(A) * len(B)
            criterion = len(ratio_set(A) & ratio_set(B)) == 1
            result.instances += 1
            if direct != criterion:
                result.fail(f"{G.spec} A={format_set(A)} B={format_set(B)}: "
                            f"direct count says {direct}, ratio criterion says {criterion}")


def claim_sandwich(opts: VerifyOptions, result: ClaimResult) -> None:
    rng = np.random.default_rng(opts.seed + 1)
    unknown = 0
    for G in group_matrix():
        for _ in range(50):
            A = random_subset(G, rng, max_size=G.order // 2 + 1)
            weak, ruzsa, upper = packing_bounds(A)
            greedy = len(greedy_packing(A))
            nu = exact_nu(A, budget=opts.nu_budget)
            result.instances += 1
            if not nu.exact:
                unknown += 1
            chain = [weak, ruzsa, greedy, nu.value, upper]
            if chain != sorted(chain):
                result.fail(f"{G.spec} A={format_set(A)}: weak<=ruzsa<=greedy<=nu<=upper violated by {chain}")
    if unknown:
        result.notes.append(f"{unknown} instances hit the node budget; their best packing was used")


def claim_subgroup_exactness(opts: VerifyOptions, result: ClaimResult) -> None:
    for G in group_matrix():
        for H in all_subgroups(G):
            expected = G.order // H.order
            A, B = subgroup_transversal_pair(G, H)
            nu = exact_nu(A, budget=opts.nu_budget)
            cov = exact_cov(A, budget=opts.cov_budget)
            result.instances += 1
            if len(B) != expected or nu.value != expected or cov.value != expected:
                result.fail(f"{G.spec} H={format_set(A)}: expected {expected}, "
                            f"got transversal {len(B)}, nu {nu.value}, cov {cov.value}")


def claim_tightness(opts: VerifyOptions, result: ClaimResult) -> None:
    for n in (16, 24, 36, 48, 60):
        G = cyclic_group(n)
        for k in range(4, n + 1):
            if n % k:
                continue
            spec = tightness_set(G, n // k)
            report = check_tightness(spec, budget=opts.nu_budget)
            result.instances += 1
            if not report.holds or report.status != 'exact' or len(spec.A) >= 2 * spec.d:
                result.fail(f"{G.spec} g={n // k} (k={k}): nu={report.nu} ({report.status}), "
                            f"|G|/k={report.subgroup_bound:g}, 16|G|/|A|^2={report.square_bound:g}")


def claim_graded(opts: VerifyOptions, result: ClaimResult) -> None:
    G = cyclic_group(60)
    g = 5
    achieved = set()
    for m, m_prime in graded_parameters(G.element_order(g)):
        spec = graded_set(G, g, m, m_prime)
        nu = exact_nu(spec.A, budget=opts.nu_budget)
        ratio_size = len(ratio_set(spec.A))
        result.instances += 1
        achieved.add(nu.value)
        if nu.value != spec.expected_nu or ratio_size != spec.expected_ratio_size or not nu.exact:
            result.fail(f"{G.spec} g={g} m={m} m'={m_prime}: expected nu {spec.expected_nu} and "
                        f"|AA^-1| {spec.expected_ratio_size}, got {nu.value} ({nu.status}) and {ratio_size}")
    result.notes.append(f"nu values reached: {sorted(achieved)}")


def claim_symmetry(opts: VerifyOptions, result: ClaimResult) -> None:
    rng = np.random.default_rng(opts.seed + 2)
    for G in group_matrix(max_order=36):
        sets = [random_subset(G, rng, max_size=G.order // 3 + 1) for _ in range(30)]
        sets += [GroupSet.singleton(G, x) for x in range(G.order)]
        sets += [H.elements for H in all_subgroups(G)]
        for A in sets:
            nu = exact_nu(A, budget=opts.nu_budget)
            if not nu.exact:
                result.notes.append(f"skipped {G.spec} A={format_set(A)}: no certified maximum packing set")
                continue
            report = check_symmetry_proposition(A, nu.witness)
            result.instances += 1
            if not report.passed:
                result.fail(f"{G.spec} A={format_set(A)} B={format_set(nu.witness)}: "
                            f"{'; '.join(report.failed)} (counterexample {G.label(report.counterexample)})")


# ==================================================
# 2. INTERVAL & NUMBER-THEORY CLAIMS
# ==================================================

def claim_interval_ratio_count(opts: VerifyOptions, result: ClaimResult) -> None:
    limit = 2000
    tables = build_sieve(limit)
    # reduced fractions a/b with a, b <= lam, counted from a gcd grid
    grid = np.arange(1, limit + 1)
    coprime = np.gcd(grid[:, None], grid[None, :]) == 1
    brute = np.diagonal(coprime.cumsum(axis=0).cumsum(axis=1))
    formula = 2 * np.cumsum(tables.phi[1:limit + 1]) - 1
    mismatched = np.flatnonzero(brute != formula)
    result.instances += limit
    for lam in mismatched[:MAX_LISTED_FAILURES]:
        result.fail(f"lambda={lam + 1}: fraction count {brute[lam]} but totient sum {formula[lam]}")
    result.failure_count += max(0, len(mismatched) - MAX_LISTED_FAILURES)

    for p in primes_in(3, 1009):
        for lam in range(1, math.isqrt(p - 1) + 1):
            result.instances += 1
            try:
                ratio_count_checks(p, lam, tables)
            except PacknuError as e:
                result.fail(f"p={p} lambda={lam}: {e}")

    if opts.fast:
        result.notes.append(f"density check at p=1000003 skipped (fast mode, p > {FAST_P_LIMIT})")
        return
    report = ratio_count_checks(1_000_003, 1000, tables)
    result.instances += 1
    result.notes.append(f"|AA^-1|/lambda^2 = {report.density:.5f} at p=1000003, lambda=1000")
    if not 0.595 <= report.density <= 0.620:
        result.fail(f"density {report.density:.5f} outside [0.595, 0.620]")


def claim_interval_full_group(opts: VerifyOptions, result: ClaimResult) -> None:
    for p in primes_in(5, 97):
        for lam in range(1, p):
            result.instances += 1
            try:
                ratio_count_checks(p, lam)
            except PacknuError as e:
                result.fail(f"p={p} lambda={lam}: {e}")


def _regime(p: int):
    lam = 2
    while 100 * lam * lam <= 81 * p:
        yield lam
        lam += 1


def _fault(B: GroupSet) -> GroupSet:
    """Flips membership of 2·min(B); with q = min(B) this gives 1·(2q) = 2·q."""
    G = B.parent
    return B.toggled(G.index(2 * G.label(B.min_element())))


def claim_prime_interval_packing(opts: VerifyOptions, result: ClaimResult) -> None:
    tables = build_sieve(max(2, opts.prime_limit // 2))
    constant = math.inf
    for p in primes_in(29, opts.prime_limit):
        for lam in _regime(p):
            result.instances += 1
            try:
                B = prime_interval_set(p, lam, tables)
            except PacknuError as e:
                result.fail(f"p={p} lambda={lam}: {e}")
                continue
            if opts.inject_fault and B:
                B = _fault(B)
                cert = packing_certificate(interval_set(p, lam).A, B)
                if not cert.is_packing:
                    a1, b1, a2, b2 = (B.parent.label(x) for x in cert.collision)
                    result.fail(f"p={p} lambda={lam}: B is not a packing set, "
                                f"{a1}*{b1} = {a2}*{b2} = {a1 * b1 % p} (mod {p})")
                    continue
            if B:
                constant = min(constant, len(B) * lam * math.log(p) / p)
    result.notes.append(f"min |B|*lambda*log(p)/p over nonempty instances: {constant:.4f}")


def claim_rough_interval_packing(opts: VerifyOptions, result: ClaimResult) -> None:
    tables = build_sieve(max(2, opts.prime_limit // 2))
    window = RoughWindowSummary()
    for p in primes_in(29, opts.prime_limit):
        for lam in _regime(p):
            result.instances += 1
            try:
                B = rough_interval_set(p, lam, tables)
                report = rough_count_vs_buchstab(p, lam, count=len(B))
            except PacknuError as e:
                result.fail(f"p={p} lambda={lam}: {e}")
                continue
            window.add(report)
            if report.in_window is False:
                result.fail(f"p={p} lambda={lam}: count/estimate = {report.ratio:.3f} "
                            f"(u={report.u:.3f}) outside [0.5, 2]")
    result.notes.extend(window.notes())


def claim_buchstab(opts: VerifyOptions, result: ClaimResult) -> None:
    grid = buchstab_grid(12.0, 1e-3)
    n = grid.steps_per_unit
    head = grid.values[:n + 1]
    exact_head = 1.0 / (1 + np.arange(n + 1) / n)
    result.instances += n + 1
    if not np.array_equal(head, exact_head):
        result.fail("omega(u) differs from 1/u on grid points of [1, 2]")

    omega10 = buchstab_omega(10.0, 1e-3)
    result.instances += 1
    result.notes.append(f"omega(10) = {omega10:.10f}")
    if abs(omega10 - EXP_MINUS_GAMMA) > 1e-5:
        result.fail(f"|omega(10) - e^-gamma| = {abs(omega10 - EXP_MINUS_GAMMA):.2e} > 1e-5")

    # on [2, 3] omega(u) = (1 + log(u - 1)) / u
    reference = (1 + math.log(1.5)) / 2.5
    errors = [abs(buchstab_omega(2.5, h) - reference) for h in (1e-2, 5e-3, 2.5e-3)]
    result.instances += 1
    result.notes.append("errors at u=2.5: " + ', '.join(f"{e:.2e}" for e in errors))
    if any(b > a for a, b in zip(errors, errors[1:])):
        result.fail(f"error at u=2.5 grows under refinement: {errors}")


# ==================================================
# 3. COVERING CLAIMS
# ==================================================

def claim_covering_bounds(opts: VerifyOptions, result: ClaimResult) -> None:
    rng = np.random.default_rng(opts.seed + 3)
    groups = group_matrix()
    per_group = 8 if opts.fast else 20
    for G in groups:
        for _ in range(per_group):
            A = random_subset(G, rng, max_size=G.order // 2 + 1)
            lower, upper = covering_bounds(A)
            greedy = len(greedy_cover(A))
            cov = exact_cov(A, budget=opts.cov_budget)
            result.instances += 1
            if greedy > upper + 1e-9 or cov.value < math.ceil(lower - 1e-9):
                result.fail(f"{G.spec} A={format_set(A)}: greedy {greedy} vs upper {upper:.3f}, "
                            f"cov {cov.value} vs lower {lower:.3f}")

    for _ in range(100):
        G = groups[int(rng.integers(len(groups)))]
        A = _small_subset(G, rng)
        report = check_cov_nu_relation(A, nu_budget=opts.nu_budget, cover_budget=opts.cov_budget)
        result.instances += 1
        if not report.holds:
            result.fail(f"{G.spec} A={format_set(A)}: cov(AA^-1)={report.cov_ratio.value} > nu={report.nu}")

    for p in primes_in(3, 199):
        for lam in range(1, math.isqrt(p) + 1):
            report = check_interval_cover(p, lam, budget=opts.cov_budget, exact=not opts.fast)
            result.instances += 1
            if not report.holds:
                result.fail(f"p={p} lambda={lam}: cov={report.cov.value} not below 2p/lambda={report.threshold:.2f}")
    if opts.fast:
        result.notes.append(f"fast mode: {per_group} random sets per group, interval covers settled by greedy where it suffices")


def claim_middle_third(opts: VerifyOptions, result: ClaimResult) -> None:
    unknown = 0
    for p in primes_in(5, 199):
        report = check_middle_third(p, budget=opts.middle_third_budget)
        result.instances += 1
        if not report.cov.exact:
            unknown += 1
        if not report.passed:
            result.fail(f"p={p}: cov in [{report.cov.certified_lower}, {report.cov.value}] "
                        f"but bounds are [{report.lower:.3f}, {report.upper:.3f})")
    if unknown:
        result.notes.append(f"{unknown} primes certified by refuted sizes and the best cover, not an exact value")


CLAIMS: Dict[str, tuple] = {
    'characterization': (claim_characterization,
                         "packing by direct count agrees with (AA^-1) ∩ (BB^-1) = {1}"),
    'sandwich': (claim_sandwich,
                 "ceil(|G|/|A|^2) <= ceil(|G|/|AA^-1|) <= greedy <= nu <= floor(|G|/|A|)"),
    'subgroup-exactness': (claim_subgroup_exactness, "nu(H) = cov(H) = |G|/|H| for every subgroup"),
    'tightness-construction': (claim_tightness, "nu(A) <= |G|/k < 16|G|/|A|^2 with AA^-1 = <g>"),
    'graded-coverage': (claim_graded, "nu(A') = (|G|/k)·floor(k/(mm')) and |A'A'^-1| = min(2mm'-1, k)"),
    'interval-ratio-count': (claim_interval_ratio_count,
                             "|AA^-1| = phi(1) + 2(phi(2) + ... + phi(lambda)) below sqrt(p)"),
    'interval-ratio-full-group': (claim_interval_full_group, "AA^-1 = F_p* iff lambda >= (p+1)/2"),
    'prime-interval-packing': (claim_prime_interval_packing,
                               "primes in (lambda, p/lambda] pack {1..lambda}"),
    'rough-interval-packing': (claim_rough_interval_packing,
                               "lambda-rough integers in (lambda, p/lambda] pack {1..lambda}"),
    'buchstab': (claim_buchstab, "omega(u) = 1/u on [1, 2] and omega(u) -> e^-gamma"),
    'symmetry': (claim_symmetry, "Sym(B) = Sym(BB^-1) and the Sym(AA^-1) decomposition"),
    'covering-bounds': (claim_covering_bounds,
                        "|G|/|A| <= cov(A) <= (|G|/|A|)(log|A|+1), cov(AA^-1) <= nu(A), cov({1..lambda}) < 2p/lambda"),
    'middle-third': (claim_middle_third, "log(p-1)/log 3 <= cov(middle third) < 3(log p + 1)"),
}


def run_claim(name: str, opts: VerifyOptions,
              on_done: Optional[Callable[[ClaimResult], None]] = None) -> ClaimResult:
    func, description = CLAIMS[name]
    result = ClaimResult(name, description)
    started = time.perf_counter()
    try:
        func(opts, result)
    except PacknuError as e:
        result.fail(f"aborted: {type(e).__name__}: {e}")
    result.seconds = time.perf_counter() - started
    if on_done:
        on_done(result)
    return result


def run_suite(opts: VerifyOptions, names: Optional[List[str]] = None,
              on_done: Optional[Callable[[ClaimResult], None]] = None) -> List[ClaimResult]:
    names = list(CLAIMS) if not names else names
    unknown = [n for n in names if n not in CLAIMS]
    if unknown:
        raise KeyError(f"unknown claim(s): {', '.join(unknown)}")
    return [run_claim(name, opts, on_done) for name in names]
