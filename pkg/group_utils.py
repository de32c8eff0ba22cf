import os
import re
from dataclasses import dataclass
from functools import cached_property
from math import prod
from typing import Iterable, List, Optional, Tuple

import numpy as np
from dotenv import load_dotenv

load_dotenv()

DEFAULT_MAX_ORDER = 2 ** 26
TABLE_CAP = 2 ** 16

KINDS = ('cyclic', 'product', 'multmod')

# Deterministic for every n < 3.3 * 10^24, which covers all 64-bit inputs.
MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


# ==================================================
# 1. ERRORS
# ==================================================

class PacknuError(Exception):
    """Base class for every error raised by the toolkit."""


class GroupSpecError(PacknuError, ValueError):
    pass


class SetSpecError(PacknuError, ValueError):
    pass


class ParentMismatchError(PacknuError, ValueError):
    pass


class EmptySetError(PacknuError, ValueError):
    pass


class RegimeError(PacknuError, ValueError):
    pass


class CapExceededError(PacknuError, ValueError):
    pass


class NotPackingError(PacknuError, ValueError):
    pass


class InvariantViolation(PacknuError, AssertionError):
    """An internal certificate disagreed with the value it certifies."""


# ==================================================
# 2. CONFIGURATION & PRIMALITY
# ==================================================

def env_int(name: str, default: int) -> int:
    """Reads a positive integer from the environment, falling back to default."""
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw.strip().replace('_', ''))
    except ValueError:
        print(f"[Warning] {name}={raw!r} is not an integer, using {default}")
        return default
    if value < 1:
        print(f"[Warning] {name}={raw!r} must be positive, using {default}")
        return default
    return value


def get_max_order() -> int:
    return env_int('PACKNU_MAX_ORDER', DEFAULT_MAX_ORDER)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin on the fixed 64-bit witness set."""
    if n < 2:
        return False
    for q in MR_WITNESSES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _modpow_array(base: np.ndarray, exp: int, mod: int) -> np.ndarray:
    """Elementwise base**exp % mod; safe in int64 while mod < 2**31."""
    result = np.ones_like(base)
    base = base % mod
    while exp:
        if exp & 1:
            result = result * base % mod
        base = base * base % mod
        exp >>= 1
    return result


# ==================================================
# 3. GROUP
# ==================================================

@dataclass(frozen=True)
class Group:
    """
    A finite abelian group presented on dense indices 0..order-1.

    cyclic:  index i is the residue i, composed by addition mod n.
    product: index is the mixed-radix encoding of a tuple, last coordinate
             fastest, composed componentwise.
    multmod: index i is the residue i+1 mod p, composed by multiplication.
    The identity is index 0 in every presentation.
    """
    kind: str
    moduli: Tuple[int, ...]

    @cached_property
    def order(self) -> int:
        if self.kind == 'multmod':
            return self.moduli[0] - 1
        return prod(self.moduli)

    @cached_property
    def strides(self) -> Tuple[int, ...]:
        out, acc = [], 1
        for n in reversed(self.moduli):
            out.append(acc)
            acc *= n
        return tuple(reversed(out))

    @property
    def identity(self) -> int:
        return 0

    @property
    def p(self) -> int:
        if self.kind != 'multmod':
            raise GroupSpecError(f"{self.spec} is not a multiplicative group mod p")
        return self.moduli[0]

    @property
    def spec(self) -> str:
        if self.kind == 'cyclic':
            return f"cyclic:{self.moduli[0]}"
        if self.kind == 'product':
            return "product:" + 'x'.join(str(n) for n in self.moduli)
        return f"multmod:{self.moduli[0]}"

    def __repr__(self):
        return f"Group({self.spec})"

    # --- vectorized primitives -------------------------------------------

    def _digits(self, xs):
        return [(xs // s) % n for s, n in zip(self.strides, self.moduli)]

    def compose(self, xs, ys):
        """Group composition on (broadcastable) index arrays."""
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        if self.kind == 'cyclic':
            return (xs + ys) % self.moduli[0]
        if self.kind == 'multmod':
            p = self.moduli[0]
            return (xs + 1) * (ys + 1) % p - 1
        out = np.zeros(np.broadcast(xs, ys).shape, dtype=np.int64)
        for dx, dy, s, n in zip(self._digits(xs), self._digits(ys), self.strides, self.moduli):
            out += ((dx + dy) % n) * s
        return out

    def invert(self, xs):
        xs = np.asarray(xs, dtype=np.int64)
        if self.kind == 'cyclic':
            return (-xs) % self.moduli[0]
        if self.kind == 'multmod':
            p = self.moduli[0]
            return _modpow_array(xs + 1, p - 2, p) - 1
        out = np.zeros(xs.shape, dtype=np.int64)
        for d, s, n in zip(self._digits(xs), self.strides, self.moduli):
            out += ((-d) % n) * s
        return out

    # --- scalar primitives -----------------------------------------------

    def op(self, x: int, y: int) -> int:
        self.check_index(x)
        self.check_index(y)
        return int(self.compose(x, y))

    def inv(self, x: int) -> int:
        self.check_index(x)
        if self.kind == 'multmod':
            p = self.moduli[0]
            return pow(x + 1, -1, p) - 1
        return int(self.invert(x))

    def power(self, g: int, e: int) -> int:
        """g composed with itself e times (e >= 0), by repeated squaring."""
        result, base = self.identity, g
        while e:
            if e & 1:
                result = self.op(result, base)
            base = self.op(base, base)
            e >>= 1
        return result

    def element_order(self, g: int) -> int:
        self.check_index(g)
        k, x = 1, g
        while x != self.identity:
            x = int(self.compose(x, g))
            k += 1
        return k

    def check_index(self, x) -> None:
        if not (0 <= int(x) < self.order):
            raise SetSpecError(f"index {x} outside {self.spec} (order {self.order})")

    # --- labels ----------------------------------------------------------

    def label(self, x: int):
        """Canonical label of index x: residue, tuple or residue mod p."""
        self.check_index(x)
        if self.kind == 'cyclic':
            return int(x)
        if self.kind == 'multmod':
            return int(x) + 1
        return tuple(int(d) for d in self._digits(np.int64(x)))

    def index(self, label) -> int:
        """Inverse of label(); residues are reduced into the group."""
        if self.kind == 'cyclic':
            return int(label) % self.moduli[0]
        if self.kind == 'multmod':
            p = self.moduli[0]
            r = int(label) % p
            if r == 0:
                raise SetSpecError(f"0 is not an element of {self.spec}")
            return r - 1
        if isinstance(label, int):
            label = (label,)
        label = tuple(label)
        if len(label) != len(self.moduli):
            raise SetSpecError(f"label {label} has {len(label)} coordinates, {self.spec} needs {len(self.moduli)}")
        return sum((int(c) % n) * s for c, n, s in zip(label, self.moduli, self.strides))

    def elements(self) -> np.ndarray:
        return np.arange(self.order, dtype=np.int64)


def make_group(kind: str, *moduli: int, max_order: Optional[int] = None) -> Group:
    """
    Builds a Group after checking every presentation precondition.
    cyclic(n), product(n1, ..., nk) or multmod(p) with p prime.
    """
    cap = max_order if max_order is not None else get_max_order()
    if kind not in KINDS:
        raise GroupSpecError(f"unknown group kind {kind!r}, expected one of {', '.join(KINDS)}")
    if not moduli:
        raise GroupSpecError(f"{kind} needs at least one modulus")
    moduli = tuple(int(n) for n in moduli)
    if kind in ('cyclic', 'multmod') and len(moduli) != 1:
        raise GroupSpecError(f"{kind} takes exactly one modulus, got {len(moduli)}")
    if kind == 'multmod':
        if not is_prime(moduli[0]):
            raise GroupSpecError(f"{moduli[0]} not prime")
    elif any(n < 1 for n in moduli):
        raise GroupSpecError(f"moduli must be >= 1, got {moduli}")
    group = Group(kind, moduli)
    if group.order == 0:
        raise GroupSpecError("group of order 0")
    if group.order > cap:
        raise GroupSpecError(f"order {group.order} above cap {cap} (set PACKNU_MAX_ORDER to raise it)")
    return group


def cyclic_group(n: int) -> Group:
    return make_group('cyclic', n)


def product_group(*moduli: int) -> Group:
    return make_group('product', *moduli)


def multmod_group(p: int) -> Group:
    return make_group('multmod', p)


_GROUP_SPEC = re.compile(r'^\s*(cyclic|product|multmod)\s*:\s*([0-9_x\s]+?)\s*$')


def parse_group_spec(spec: str, max_order: Optional[int] = None) -> Group:
    """Parses `cyclic:N`, `product:N1xN2x...` or `multmod:P`."""
    match = _GROUP_SPEC.match(spec or '')
    if not match:
        raise GroupSpecError(f"cannot parse group spec {spec!r} (expected cyclic:N, product:N1xN2, multmod:P)")
    kind, body = match.groups()
    parts = [part.strip() for part in body.split('x')]
    try:
        moduli = [int(part.replace('_', '')) for part in parts]
    except ValueError:
        raise GroupSpecError(f"bad modulus in group spec {spec!r}")
    if kind != 'product' and len(moduli) != 1:
        raise GroupSpecError(f"{kind} spec {spec!r} takes a single modulus")
    return make_group(kind, *moduli, max_order=max_order)


def op(G: Group, x: int, y: int) -> int:
    return G.op(x, y)


def inv(G: Group, x: int) -> int:
    return G.inv(x)


# ==================================================
# 4. GROUP SETS
# ==================================================

class GroupSet:
    """
    A subset of a group's elements held as a dense boolean membership array.
    Instances are immutable: every operation returns a new set.
    """
    __slots__ = ('parent', '_bits', '_card')

    def __init__(self, parent: Group, bits):
        bits = np.array(bits, dtype=bool, copy=True)
        if bits.shape != (parent.order,):
            raise SetSpecError(f"membership array of shape {bits.shape} does not fit {parent.spec}")
        bits.setflags(write=False)
        self.parent = parent
        self._bits = bits
        self._card = int(np.count_nonzero(bits))

    @classmethod
    def from_indices(cls, parent: Group, indices: Iterable[int]) -> 'GroupSet':
        idx = np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= parent.order):
            raise SetSpecError(f"indices outside {parent.spec}")
        bits = np.zeros(parent.order, dtype=bool)
        bits[idx] = True
        return cls(parent, bits)

    @classmethod
    def from_labels(cls, parent: Group, labels: Iterable) -> 'GroupSet':
        return cls.from_indices(parent, [parent.index(label) for label in labels])

    @classmethod
    def empty(cls, parent: Group) -> 'GroupSet':
        return cls(parent, np.zeros(parent.order, dtype=bool))

    @classmethod
    def full(cls, parent: Group) -> 'GroupSet':
        return cls(parent, np.ones(parent.order, dtype=bool))

    @classmethod
    def singleton(cls, parent: Group, x: int) -> 'GroupSet':
        return cls.from_indices(parent, [x])

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    def members(self) -> np.ndarray:
        return np.flatnonzero(self._bits).astype(np.int64)

    def labels(self) -> List:
        return [self.parent.label(int(x)) for x in self.members()]

    def same_parent(self, other: 'GroupSet') -> None:
        if self.parent != other.parent:
            raise ParentMismatchError(f"sets live in {self.parent.spec} and {other.parent.spec}")

    def __len__(self):
        return self._card

    def __bool__(self):
        return self._card > 0

    def __iter__(self):
        return (int(x) for x in self.members())

    def __contains__(self, x):
        return 0 <= int(x) < self.parent.order and bool(self._bits[int(x)])

    def __eq__(self, other):
        if not isinstance(other, GroupSet):
            return NotImplemented
        return self.parent == other.parent and np.array_equal(self._bits, other._bits)

    def __hash__(self):
        return hash((self.parent, self._bits.tobytes()))

    def __or__(self, other):
        self.same_parent(other)
        return GroupSet(self.parent, self._bits | other._bits)

    def __and__(self, other):
        self.same_parent(other)
        return GroupSet(self.parent, self._bits & other._bits)

    def __sub__(self, other):
        self.same_parent(other)
        return GroupSet(self.parent, self._bits & ~other._bits)

    def __le__(self, other):
        self.same_parent(other)
        return not np.any(self._bits & ~other._bits)

    def __ge__(self, other):
        return other <= self

    def isdisjoint(self, other: 'GroupSet') -> bool:
        self.same_parent(other)
        return not np.any(self._bits & other._bits)

    def with_element(self, x: int) -> 'GroupSet':
        self.parent.check_index(x)
        bits = self._bits.copy()
        bits[x] = True
        return GroupSet(self.parent, bits)

    def toggled(self, x: int) -> 'GroupSet':
        self.parent.check_index(x)
        bits = self._bits.copy()
        bits[x] = not bits[x]
        return GroupSet(self.parent, bits)

    def min_element(self) -> int:
        if not self._card:
            raise EmptySetError("empty set has no minimum")
        return int(np.argmax(self._bits))

    def __repr__(self):
        shown = self.labels()[:12]
        more = ", ..." if self._card > 12 else ""
        return f"GroupSet({self.parent.spec}, {{{', '.join(str(x) for x in shown)}{more}}})"


def format_set(A: GroupSet) -> str:
    """Set literal for reports: `{1,2,3}` with product labels as `(a,b)`."""
    def fmt(label):
        if isinstance(label, tuple):
            return '(' + ','.join(str(c) for c in label) + ')'
        return str(label)
    return '{' + ','.join(fmt(label) for label in A.labels()) + '}'


# ==================================================
# 5. SUBGROUPS & COSETS
# ==================================================

@dataclass(frozen=True)
class Subgroup:
    parent: Group
    elements: GroupSet
    generator: Optional[int] = None

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def index_in_parent(self) -> int:
        return self.parent.order // self.order


def _is_closed(S: GroupSet) -> bool:
    G = S.parent
    members = S.members()
    if G.identity not in S:
        return False
    for start in range(0, len(members), 256):
        chunk = G.compose(members[start:start + 256, None], members[None, :])
        if not np.all(S.bits[chunk]):
            return False
    return True


def cyclic_subgroup(G: Group, g: int) -> Subgroup:
    """H = {g, g^2, ..., g^k = id} with k the order of g."""
    G.check_index(g)
    powers, x = [g], g
    while x != G.identity:
        x = int(G.compose(x, g))
        powers.append(x)
    return Subgroup(G, GroupSet.from_indices(G, powers), generator=g)


def subgroup_from_set(S: GroupSet) -> Subgroup:
    if not _is_closed(S):
        raise InvariantViolation(f"{format_set(S)} is not closed in {S.parent.spec}")
    return Subgroup(S.parent, S)


def coset_transversal(G: Group, H: Subgroup) -> GroupSet:
    """Smallest index of every coset x∘H; exactly |G|/|H| elements."""
    if H.parent != G or not _is_closed(H.elements):
        raise InvariantViolation("coset_transversal needs a subgroup of G")
    if G.order % H.order:
        raise InvariantViolation(f"|H|={H.order} does not divide |G|={G.order}")
    seen = np.zeros(G.order, dtype=bool)
    reps = []
    h = H.elements.members()
    for x in range(G.order):
        if seen[x]:
            continue
        reps.append(x)
        seen[G.compose(x, h)] = True
    if len(reps) != G.order // H.order:
        raise InvariantViolation("coset count differs from |G|/|H|")
    return GroupSet.from_indices(G, reps)


def all_subgroups(G: Group) -> List[Subgroup]:
    """
    Every subgroup of a small abelian group: cyclic subgroups closed under
    the join H∘K, which is again a subgroup because G is abelian.
    """
    if G.order > TABLE_CAP:
        raise CapExceededError(f"subgroup enumeration capped at order {TABLE_CAP}")
    found = {}
    for g in range(G.order):
        H = cyclic_subgroup(G, g)
        found.setdefault(H.elements, H)
    frontier = list(found)
    while frontier:
        fresh = []
        current = list(found)
        for S in frontier:
            for T in current:
                joined = np.zeros(G.order, dtype=bool)
                joined[G.compose(S.members()[:, None], T.members()[None, :]).ravel()] = True
                J = GroupSet(G, joined)
                if J not in found:
                    found[J] = Subgroup(G, J)
                    fresh.append(J)
        frontier = fresh
    return sorted(found.values(), key=lambda H: (H.order, H.elements.members().tolist()))
