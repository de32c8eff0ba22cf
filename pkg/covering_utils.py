import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from group_utils import (
    CapExceededError,
    EmptySetError,
    Group,
    GroupSet,
    InvariantViolation,
    RegimeError,
    env_int,
    format_set,
    multmod_group,
)
from packing_utils import exact_nu
from setalg_utils import product_set, ratio_set

DEFAULT_COV_CAP = 512
DEFAULT_COV_BUDGET = 500_000

# rows of A processed per bincount when updating greedy scores
SCORE_CHUNK = 1 << 20


def cov_cap() -> int:
    return env_int('PACKNU_COV_CAP', DEFAULT_COV_CAP)


def cov_budget() -> int:
    return env_int('PACKNU_COV_BUDGET', DEFAULT_COV_BUDGET)


def _require_nonempty(A: GroupSet) -> None:
    if not A:
        raise EmptySetError("A must be nonempty")


# ==================================================
# 1. PREDICATE & BOUNDS
# ==================================================

def is_covering(A: GroupSet, B: GroupSet) -> bool:
    A.same_parent(B)
    return len(product_set(A, B)) == A.parent.order


def covering_bounds(A: GroupSet) -> Tuple[float, float]:
    """|G|/|A| <= cov(A) <= (|G|/|A|)(log|A| + 1)."""
    _require_nonempty(A)
    base = A.parent.order / len(A)
    return base, base * (math.log(len(A)) + 1)


def _upper_int(A: GroupSet) -> int:
    return math.ceil(covering_bounds(A)[1] - 1e-9)


def _lower_int(A: GroupSet) -> int:
    return -(-A.parent.order // len(A))


# ==================================================
# 2. GREEDY COVER
# ==================================================

def greedy_cover(A: GroupSet) -> GroupSet:
    """
    Repeatedly adds the translate A∘x covering the most uncovered elements,
    lowest index on ties. Scores start at |A| and drop by one for every
    x ∈ A⁻¹∘c whenever c becomes covered.
    """
    _require_nonempty(A)
    G = A.parent
    a = A.members()
    a_inv = G.invert(a)
    score = np.full(G.order, len(a), dtype=np.int64)
    covered = np.zeros(G.order, dtype=bool)
    chosen = []
    remaining = G.order
    rows = max(1, SCORE_CHUNK // len(a))
    while remaining:
        x = int(np.argmax(score))
        if score[x] <= 0:
            raise InvariantViolation("greedy cover stalled with uncovered elements")
        chosen.append(x)
        hit = G.compose(a, x)
        fresh = hit[~covered[hit]]
        covered[fresh] = True
        remaining -= len(fresh)
        for start in range(0, len(fresh), rows):
            losers = G.compose(fresh[start:start + rows, None], a_inv[None, :]).ravel()
            score -= np.bincount(losers, minlength=G.order)
    B = GroupSet.from_indices(G, chosen)
    if len(B) > _upper_int(A):
        raise InvariantViolation(f"greedy cover of size {len(B)} above (|G|/|A|)(log|A|+1)")
    return B


# ==================================================
# 3. EXACT cov(A)
# ==================================================

@dataclass
class CovResult:
    value: int
    witness: GroupSet
    status: str  # 'exact', 'unknown', or 'greedy' when no search ran
    nodes: int
    # every size below this was refuted
    certified_lower: int

    @property
    def exact(self) -> bool:
        return self.status == 'exact'


class _BudgetExhausted(Exception):
    pass


class _CoverSearch:
    """Depth-first decision search: can U be covered with k more translates?"""

    def __init__(self, A: GroupSet, budget: int):
        G = A.parent
        self.n = G.order
        a = A.members()
        # table[i, x] = a_i∘x, candidates[u] = A⁻¹∘u
        self.table = G.compose(a[:, None], G.elements()[None, :])
        self.candidates = G.compose(G.elements()[:, None], G.invert(a)[None, :])
        self.budget = budget
        self.nodes = 0

    def scores(self, U: np.ndarray, excluded: np.ndarray) -> np.ndarray:
        s = U[self.table].sum(axis=0)
        s[excluded] = 0
        return s

    def within(self, U: np.ndarray, excluded: np.ndarray, k: int) -> Optional[List[int]]:
        self.nodes += 1
        if self.nodes > self.budget:
            raise _BudgetExhausted()
        need = int(np.count_nonzero(U))
        if need == 0:
            return []
        if k == 0:
            return None
        s = self.scores(U, excluded)
        if k >= self.n:
            top = int(s.sum())
        else:
            top = int(np.partition(s, self.n - k)[self.n - k:].sum())
        if top < need:
            return None

        open_u = np.flatnonzero(U)
        options = ~excluded[self.candidates[open_u]]
        counts = options.sum(axis=1)
        pick = int(np.argmin(counts))
        if counts[pick] == 0:
            return None
        xs = np.unique(self.candidates[open_u[pick]][options[pick]])
        xs = xs[np.lexsort((xs, -s[xs]))]

        excluded = excluded.copy()
        for x in xs:
            x = int(x)
            child = U.copy()
            child[self.table[:, x]] = False
            found = self.within(child, excluded, k - 1)
            if found is not None:
                return [x] + found
            excluded[x] = True
        return None


def exact_cov(A: GroupSet, budget: Optional[int] = None, cap: Optional[int] = None) -> CovResult:
    """
    Minimum covering set by iterative deepening from ⌈|G|/|A|⌉ up to one
    below the greedy size. Translating a cover keeps it a cover, so the
    identity is fixed in B.
    """
    _require_nonempty(A)
    G = A.parent
    cap = cov_cap() if cap is None else cap
    budget = cov_budget() if budget is None else budget
    if G.order > cap:
        raise CapExceededError(f"|G|={G.order} above the exact cover cap {cap}")
    lower = _lower_int(A)
    best = greedy_cover(A)
    if len(best) <= lower:
        return CovResult(len(best), best, 'exact', 0, len(best))

    search = _CoverSearch(A, budget)
    U0 = ~A.bits
    none_excluded = np.zeros(G.order, dtype=bool)
    for k in range(lower, len(best)):
        try:
            found = search.within(U0, none_excluded, k - 1)
        except _BudgetExhausted:
            return CovResult(len(best), best, 'unknown', search.nodes, k)
        if found is not None:
            witness = GroupSet.from_indices(G, [G.identity] + found)
            if len(witness) != k or not is_covering(A, witness):
                raise InvariantViolation(f"cover witness {format_set(witness)} is invalid")
            return CovResult(k, witness, 'exact', search.nodes, k)
    return CovResult(len(best), best, 'exact', search.nodes, len(best))


# ==================================================
# 4. MIDDLE THIRD & RELATIONS
# ==================================================

def middle_third_set(p: int) -> GroupSet:
    """Residues x with p/3 <= x <= 2p/3, compared as p <= 3x <= 2p."""
    if p <= 3:
        raise RegimeError(f"middle third needs p > 3, got {p}")
    G = multmod_group(p)
    A = GroupSet.from_labels(G, [x for x in range(1, p) if p <= 3 * x <= 2 * p])
    if not A or len(A) < p // 3 - 1:
        raise InvariantViolation(f"middle third of {p} has only {len(A)} elements")
    return A


def middle_third_bounds(p: int) -> Tuple[float, float]:
    """log(p-1)/log 3 <= cov < 3(log p + 1)."""
    return math.log(p - 1) / math.log(3), 3 * (math.log(p) + 1)


@dataclass
class MiddleThirdReport:
    p: int
    size_a: int
    lower: float
    upper: float
    cov: CovResult

    @property
    def passed(self) -> bool:
        # the refuted levels certify the lower side even without an exact value
        return self.cov.certified_lower >= self.lower - 1e-12 and self.cov.value < self.upper

    def to_dict(self):
        return {
            'p': self.p, 'sizeA': self.size_a, 'lower': self.lower, 'upper': self.upper,
            'covExact': self.cov.value if self.cov.exact else None,
            'covBest': self.cov.value, 'certifiedLower': self.cov.certified_lower,
            'status': self.cov.status, 'passed': self.passed,
        }


def check_middle_third(p: int, budget: Optional[int] = None) -> MiddleThirdReport:
    A = middle_third_set(p)
    lower, upper = middle_third_bounds(p)
    report = MiddleThirdReport(p, len(A), lower, upper, exact_cov(A, budget=budget))
    if report.cov.exact and not report.passed:
        raise InvariantViolation(
            f"cov={report.cov.value} for the middle third of {p} outside [{lower:.3f}, {upper:.3f})")
    return report


@dataclass
class CovNuReport:
    cov_ratio: CovResult
    nu: int
    nu_status: str

    @property
    def holds(self) -> bool:
        # cov <= best cover found and nu >= best packing found
        return self.cov_ratio.value <= self.nu


def check_cov_nu_relation(A: GroupSet, nu_budget: Optional[int] = None,
                          cover_budget: Optional[int] = None) -> CovNuReport:
    """cov(A∘A⁻¹) <= ν(A): a maximum packing set covers G by the ratio set."""
    D = ratio_set(A)
    cov = exact_cov(D, budget=cover_budget)
    nu = exact_nu(A, budget=nu_budget)
    report = CovNuReport(cov, nu.value, nu.status)
    if cov.exact and nu.exact and cov.value > nu.value:
        raise InvariantViolation(f"cov(A∘A⁻¹)={cov.value} exceeds ν(A)={nu.value} for A={format_set(A)}")
    return report


@dataclass
class IntervalCoverReport:
    p: int
    lam: int
    cov: CovResult
    threshold: float

    @property
    def holds(self) -> bool:
        return self.cov.value < self.threshold


def check_interval_cover(p: int, lam: int, budget: Optional[int] = None,
                         exact: bool = True) -> IntervalCoverReport:
    """
    Observational: cov({1..λ}) < 2p/λ in the multiplicative group mod p.
    With exact=False a greedy cover below the threshold settles it without a search.
    """
    G = multmod_group(p)
    if not 1 <= lam <= p - 1:
        raise RegimeError(f"lambda must lie in 1..{p - 1}, got {lam}")
    A = GroupSet.from_labels(G, range(1, lam + 1))
    threshold = 2 * p / lam
    if not exact:
        best = greedy_cover(A)
        if len(best) < threshold:
            greedy = CovResult(len(best), best, 'greedy', 0, _lower_int(A))
            return IntervalCoverReport(p, lam, greedy, threshold)
    return IntervalCoverReport(p, lam, exact_cov(A, budget=budget), threshold)


# ==================================================
# 5. REPORTS
# ==================================================

@dataclass
class CoverReport:
    A: GroupSet
    B: GroupSet
    covers: bool
    lower: float
    upper: float
    cov_exact: Optional[int] = None
    middle_third_lower: Optional[float] = None
    middle_third_upper: Optional[float] = None
    nodes_explored: Optional[int] = None
    status: str = 'ok'

    def to_dict(self):
        return {
            'group': self.A.parent.spec,
            'A': format_set(self.A),
            'B': format_set(self.B),
            'covers': self.covers,
            'sizeB': len(self.B),
            'lower': self.lower,
            'upper': self.upper,
            'covExact': self.cov_exact,
            'middleThirdLower': self.middle_third_lower,
            'middleThirdUpper': self.middle_third_upper,
            'nodesExplored': self.nodes_explored,
        }


def _is_middle_third(A: GroupSet) -> bool:
    G: Group = A.parent
    if G.kind != 'multmod' or G.p <= 3:
        return False
    return A == middle_third_set(G.p)


def cover_report(A: GroupSet, B: Optional[GroupSet] = None, exact: bool = False,
                 budget: Optional[int] = None) -> CoverReport:
    lower, upper = covering_bounds(A)
    cov_value, nodes, status = None, None, 'ok'
    if exact:
        result = exact_cov(A, budget=budget)
        nodes = result.nodes
        if result.exact:
            cov_value = result.value
        else:
            status = 'unknown'
        if B is None:
            B = result.witness
    elif B is None:
        B = greedy_cover(A)
    mt_lower = mt_upper = None
    if _is_middle_third(A):
        mt_lower, mt_upper = middle_third_bounds(A.parent.p)
    return CoverReport(A, B, is_covering(A, B), lower, upper, cov_value,
                       mt_lower, mt_upper, nodes, status)
