from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from group_utils import (
    CapExceededError,
    EmptySetError,
    Group,
    GroupSet,
    InvariantViolation,
    NotPackingError,
    SetSpecError,
    env_int,
    format_set,
)
from setalg_utils import product_set, ratio_set, symmetry_group

DEFAULT_NU_CAP = 4096
DEFAULT_NU_BUDGET = 2_000_000


def nu_cap() -> int:
    return env_int('PACKNU_NU_CAP', DEFAULT_NU_CAP)


def nu_budget() -> int:
    return env_int('PACKNU_NU_BUDGET', DEFAULT_NU_BUDGET)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _require_nonempty(A: GroupSet) -> None:
    if not A:
        raise EmptySetError("A must be nonempty")


# ==================================================
# 1. THE PACKING PREDICATE
# ==================================================

@dataclass
class PackingCertificate:
    is_packing: bool
    product_cardinality: int
    expected_cardinality: int
    ratio_intersection: GroupSet
    # a1∘b1 = a2∘b2 with (a1, b1) != (a2, b2), present when not packing
    collision: Optional[Tuple[int, int, int, int]] = None


def _find_collision(A: GroupSet, B: GroupSet, x: int) -> Tuple[int, int, int, int]:
    """For x in (A∘A⁻¹) ∩ (B∘B⁻¹), x != id: a1∘a2⁻¹ = x = b2∘b1⁻¹ gives a1∘b1 = a2∘b2."""
    G = A.parent
    a = A.members()
    hits = np.flatnonzero(A.bits[G.compose(x, a)])
    a2 = int(a[hits[0]])
    a1 = G.op(x, a2)
    b = B.members()
    hits = np.flatnonzero(B.bits[G.compose(x, b)])
    b1 = int(b[hits[0]])
    b2 = G.op(x, b1)
    return a1, b1, a2, b2


def packing_certificate(A: GroupSet, B: GroupSet) -> PackingCertificate:
    """
    Computes the packing predicate twice, by counting |A∘B| and by the
    criterion (A∘A⁻¹) ∩ (B∘B⁻¹) = {id}, and insists that both agree.
    """
    _require_nonempty(A)
    A.same_parent(B)
    G = A.parent
    expected = len(A) * len(B)
    if not B:
        return PackingCertificate(True, 0, 0, GroupSet.empty(G))
    product_size = len(product_set(A, B))
    direct = product_size == expected
    meet = ratio_set(A) & ratio_set(B)
    criterion = len(meet) == 1
    if direct != criterion:
        raise InvariantViolation(
            f"direct count ({product_size} vs {expected}) and ratio criterion "
            f"(|meet|={len(meet)}) disagree for A={format_set(A)}, B={format_set(B)}")
    collision = None
    if not direct:
        x = int(next(iter(meet - GroupSet.singleton(G, G.identity))))
        collision = _find_collision(A, B, x)
    return PackingCertificate(direct, product_size, expected, meet, collision)


def is_packing(A: GroupSet, B: GroupSet) -> bool:
    return packing_certificate(A, B).is_packing


def packing_bounds(A: GroupSet) -> Tuple[int, int, int]:
    """(⌈|G|/|A|²⌉, ⌈|G|/|A∘A⁻¹|⌉, ⌊|G|/|A|⌋)."""
    _require_nonempty(A)
    order = A.parent.order
    lower_weak = _ceil_div(order, len(A) ** 2)
    lower_ruzsa = _ceil_div(order, len(ratio_set(A)))
    upper_trivial = order // len(A)
    return lower_weak, lower_ruzsa, upper_trivial


# ==================================================
# 2. GREEDY (RUZSA) PACKING
# ==================================================

OrderSpec = Union[None, str, Sequence[int], np.ndarray]


def resolve_order(G: Group, order: OrderSpec = None) -> np.ndarray:
    """None/'natural' -> ascending indices; 'random:SEED' -> seeded permutation."""
    if order is None or (isinstance(order, str) and order == 'natural'):
        return G.elements()
    if isinstance(order, str):
        if not order.startswith('random:'):
            raise SetSpecError(f"order must be 'natural' or 'random:SEED', got {order!r}")
        try:
            seed = int(order.split(':', 1)[1])
        except ValueError:
            raise SetSpecError(f"bad seed in order {order!r}")
        return np.random.default_rng(seed).permutation(G.order).astype(np.int64)
    perm = np.asarray(order, dtype=np.int64)
    if perm.shape != (G.order,) or not np.array_equal(np.sort(perm), G.elements()):
        raise SetSpecError("order must be a permutation of all group elements")
    return perm


def greedy_packing(A: GroupSet, order: OrderSpec = None) -> GroupSet:
    """
    Scans G in `order` and keeps x whenever A∘x misses A∘B. x clashes with
    b exactly when x ∈ (A∘A⁻¹)∘b, so the blocked region is (A∘A⁻¹)∘B.
    """
    _require_nonempty(A)
    G = A.parent
    D = ratio_set(A).members()
    blocked = np.zeros(G.order, dtype=bool)
    chosen = []
    for x in resolve_order(G, order):
        x = int(x)
        if blocked[x]:
            continue
        chosen.append(x)
        blocked[G.compose(x, D)] = True
    B = GroupSet.from_indices(G, chosen)
    # a maximal B leaves no element unblocked: G = A⁻¹∘A∘B
    if not blocked.all():
        raise InvariantViolation("greedy packing is not maximal")
    lower_ruzsa = _ceil_div(G.order, len(D))
    if len(B) < lower_ruzsa:
        raise InvariantViolation(f"greedy packing of size {len(B)} below the covering-lemma bound {lower_ruzsa}")
    return B


# ==================================================
# 3. EXACT ν(A): MAXIMUM INDEPENDENT SET IN THE CAYLEY GRAPH
# ==================================================

@dataclass
class NuResult:
    value: int
    witness: GroupSet
    status: str  # 'exact' or 'unknown'
    nodes: int
    upper: int

    @property
    def exact(self) -> bool:
        return self.status == 'exact'


def _mask(bits: np.ndarray) -> int:
    return int.from_bytes(np.packbits(bits, bitorder='little').tobytes(), 'little')


def _color_classes(P: int, closed: List[int]) -> Tuple[List[int], List[int]]:
    """
    Greedy partition of P into cliques of the conflict graph, lowest index
    first. Returns vertices in class order and the running class count, so
    colors[i] bounds the independent set available among vertices[:i+1].
    """
    vertices, colors = [], []
    color = 0
    Q = P
    while Q:
        color += 1
        R = Q
        while R:
            low = R & -R
            v = low.bit_length() - 1
            R &= closed[v]
            R &= ~low
            Q &= ~low
            vertices.append(v)
            colors.append(color)
    return vertices, colors


class _Frame:
    __slots__ = ('P', 'vertices', 'colors', 'i', 'size', 'chosen')

    def __init__(self, P, closed, size, chosen):
        self.P = P
        self.vertices, self.colors = _color_classes(P, closed)
        self.i = len(self.vertices) - 1
        self.size = size
        self.chosen = chosen


def exact_nu(A: GroupSet, budget: Optional[int] = None, order: OrderSpec = None,
             cap: Optional[int] = None) -> NuResult:
    """
    ν(A) as the independence number of the Cayley graph on G with connection
    set A∘A⁻¹ minus the identity, by colour-bounded branch and bound.

    The graph is vertex-transitive, so some maximum independent set contains
    the identity; the search fixes it. `order` relabels the vertices; it may
    change the witness and node count but never the value.
    """
    _require_nonempty(A)
    G = A.parent
    cap = nu_cap() if cap is None else cap
    budget = nu_budget() if budget is None else budget
    if G.order > cap:
        raise CapExceededError(f"|G|={G.order} above the exact packing cap {cap}")
    lower_weak, lower_ruzsa, upper = packing_bounds(A)
    perm = resolve_order(G, order)
    pos = np.empty(G.order, dtype=np.int64)
    pos[perm] = np.arange(G.order)

    best = greedy_packing(A, perm)
    if len(best) >= upper:
        return NuResult(len(best), best, 'exact', 0, upper)

    D = ratio_set(A).members()
    # closed[v]: v together with every vertex it conflicts with, in position space
    closed = []
    for v in range(G.order):
        nb = np.zeros(G.order, dtype=bool)
        nb[pos[G.compose(int(perm[v]), D)]] = True
        closed.append(_mask(nb))
    start = int(pos[G.identity])
    everything = (1 << G.order) - 1

    best_size = len(best)
    best_positions = None
    nodes = 0
    status = 'exact'
    root_P = everything & ~closed[start]
    if root_P == 0:
        if best_size < 1:
            best_size, best_positions = 1, [start]
    else:
        stack = [_Frame(root_P, closed, 1, start)]
        while stack:
            frame = stack[-1]
            if frame.i < 0:
                stack.pop()
                continue
            v = frame.vertices[frame.i]
            c = frame.colors[frame.i]
            frame.i -= 1
            if frame.size + c <= best_size:
                stack.pop()
                continue
            nodes += 1
            if nodes > budget:
                status = 'unknown'
                break
            child_P = frame.P & ~closed[v]
            frame.P &= ~(1 << v)
            if child_P == 0:
                if frame.size + 1 > best_size:
                    best_size = frame.size + 1
                    best_positions = [f.chosen for f in stack] + [v]
                    if best_size >= upper:
                        break
            else:
                stack.append(_Frame(child_P, closed, frame.size + 1, v))

    if best_positions is not None:
        best = GroupSet.from_indices(G, perm[np.array(best_positions, dtype=np.int64)])
    if len(best) != best_size:
        raise InvariantViolation("witness size disagrees with the search value")
    if not is_packing(A, best):
        raise InvariantViolation(f"solver witness {format_set(best)} is not a packing set")
    if status == 'exact' and not (lower_ruzsa <= best_size <= upper):
        raise InvariantViolation(f"ν={best_size} outside [{lower_ruzsa}, {upper}]")
    return NuResult(best_size, best, status, nodes, upper)


# ==================================================
# 4. REPORTS
# ==================================================

@dataclass
class PackingReport:
    A: GroupSet
    B: GroupSet
    is_packing: bool
    product_cardinality: int
    lower_weak: int
    lower_ruzsa: int
    upper_trivial: int
    nu_exact: Optional[int] = None
    nodes_explored: Optional[int] = None
    status: str = 'ok'

    def to_dict(self):
        return {
            'group': self.A.parent.spec,
            'A': format_set(self.A),
            'B': format_set(self.B),
            'isPacking': self.is_packing,
            'lowerWeak': self.lower_weak,
            'lowerRuzsa': self.lower_ruzsa,
            'upperTrivial': self.upper_trivial,
            'nuExact': self.nu_exact,
            'nodesExplored': self.nodes_explored,
        }


def packing_report(A: GroupSet, B: Optional[GroupSet] = None, exact: bool = False,
                   budget: Optional[int] = None, order: OrderSpec = None) -> PackingReport:
    """Bounds for A plus a packing set: the given B, the exact witness or the greedy one."""
    lower_weak, lower_ruzsa, upper = packing_bounds(A)
    nu_value, nodes, status = None, None, 'ok'
    if exact:
        result = exact_nu(A, budget=budget, order=order)
        nodes = result.nodes
        if result.exact:
            nu_value = result.value
        else:
            status = 'unknown'
        if B is None:
            B = result.witness
    elif B is None:
        B = greedy_packing(A, order)
    cert = packing_certificate(A, B)
    return PackingReport(A, B, cert.is_packing, cert.product_cardinality, lower_weak,
                         lower_ruzsa, upper, nu_value, nodes, status)


# ==================================================
# 5. SYMMETRIES OF MAXIMUM PACKING SETS
# ==================================================

@dataclass
class SymmetryReport:
    sym_b: GroupSet
    sym_ratio_b: GroupSet
    sym_ratio_a: GroupSet
    lhs: GroupSet   # Sym(A∘A⁻¹) ∩ A∘A⁻¹
    rhs: GroupSet   # (Sym(A∘A⁻¹) minus Sym(B)) plus the identity
    symmetry_equal: bool
    decomposition_equal: bool
    disjoint_union: bool
    counterexample: Optional[int] = None
    failed: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failed


def check_symmetry_proposition(A: GroupSet, B: GroupSet) -> SymmetryReport:
    """
    For a maximum packing set B of A: Sym(B) = Sym(B∘B⁻¹), and
    Sym(A∘A⁻¹) ∩ A∘A⁻¹ is the disjoint union of Sym(A∘A⁻¹) minus Sym(B)
    with the identity.
    """
    _require_nonempty(A)
    if not B:
        raise NotPackingError("B must be a nonempty packing set")
    if not is_packing(A, B):
        raise NotPackingError(f"{format_set(B)} is not an A-packing set")
    G = A.parent
    ident = GroupSet.singleton(G, G.identity)
    ratio_a = ratio_set(A)
    sym_b = symmetry_group(B)
    sym_ratio_b = symmetry_group(ratio_set(B))
    sym_ratio_a = symmetry_group(ratio_a)
    lhs = sym_ratio_a & ratio_a
    difference = sym_ratio_a - sym_b
    rhs = difference | ident
    disjoint = difference.isdisjoint(ident)

    failed, counterexample = [], None
    symmetry_equal = sym_b == sym_ratio_b
    if not symmetry_equal:
        failed.append('Sym(B) = Sym(B∘B⁻¹)')
        diff = (sym_b - sym_ratio_b) | (sym_ratio_b - sym_b)
        counterexample = next(iter(diff))
    decomposition_equal = lhs == rhs
    if not decomposition_equal:
        failed.append('Sym(A∘A⁻¹) ∩ A∘A⁻¹ = (Sym(A∘A⁻¹) minus Sym(B)) ⊔ {1}')
        if counterexample is None:
            counterexample = next(iter((lhs - rhs) | (rhs - lhs)))
    if not disjoint:
        failed.append('disjoint union')
    return SymmetryReport(sym_b, sym_ratio_b, sym_ratio_a, lhs, rhs, symmetry_equal,
                          decomposition_equal, disjoint, counterexample, failed)
