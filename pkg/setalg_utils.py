import re
import concurrent.futures
from pathlib import Path
from typing import Optional

import numpy as np

from group_utils import (
    EmptySetError,
    Group,
    GroupSet,
    InvariantViolation,
    SetSpecError,
    cyclic_subgroup,
)

# Rows of the |A| x |B| composition table evaluated per numpy call.
CHUNK_CELLS = 1 << 22


# ==================================================
# 1. PRODUCT SETS
# ==================================================

def _or_products(G: Group, a_members: np.ndarray, b_members: np.ndarray) -> np.ndarray:
    """Membership array of {a∘b} for the given index arrays."""
    acc = np.zeros(G.order, dtype=bool)
    if not len(a_members) or not len(b_members):
        return acc
    rows = max(1, CHUNK_CELLS // len(b_members))
    for start in range(0, len(a_members), rows):
        chunk = G.compose(a_members[start:start + rows, None], b_members[None, :])
        acc[chunk.ravel()] = True
    return acc


def product_set(A: GroupSet, B: GroupSet, workers: int = 1) -> GroupSet:
    """
    A∘B = {a∘b : a in A, b in B}.

    Every a contributes the translate a∘B, ORed into one accumulator. With
    workers > 1 the members of A are split across threads; OR is
    order-independent so the result is bit-identical to the sequential one.
    """
    A.same_parent(B)
    G = A.parent
    a, b = A.members(), B.members()
    if len(a) > len(b):
        a, b = b, a
    if workers <= 1 or len(a) < 2 * workers:
        acc = _or_products(G, a, b)
    else:
        parts = np.array_split(a, workers)
        acc = np.zeros(G.order, dtype=bool)
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            for partial in executor.map(lambda part: _or_products(G, part, b), parts):
                acc |= partial
    result = GroupSet(G, acc)
    if len(result) > min(len(A) * len(B), G.order):
        raise InvariantViolation("product set larger than the trivial bound")
    return result


def inverse_set(A: GroupSet) -> GroupSet:
    G = A.parent
    return GroupSet.from_indices(G, G.invert(A.members()))


def ratio_set(A: GroupSet, workers: int = 1) -> GroupSet:
    """A∘A⁻¹; contains the identity and is closed under inversion."""
    if not A:
        raise EmptySetError("ratio set of an empty set")
    return product_set(A, inverse_set(A), workers=workers)


def translate(x: int, T: GroupSet) -> GroupSet:
    G = T.parent
    G.check_index(x)
    return GroupSet.from_indices(G, G.compose(x, T.members()))


def symmetry_group(T: GroupSet) -> GroupSet:
    """
    Sym(T) = {x : x∘T = T}.

    Any symmetry maps the smallest member t0 into T, so the candidates are
    T∘t0⁻¹, a subset of T∘T⁻¹.
    """
    if not T:
        raise EmptySetError("symmetry group of an empty set")
    G = T.parent
    members = T.members()
    t0 = int(members[0])
    candidates = G.compose(members, G.inv(t0))
    keep = np.zeros(len(candidates), dtype=bool)
    rows = max(1, CHUNK_CELLS // len(members))
    for start in range(0, len(candidates), rows):
        block = G.compose(candidates[start:start + rows, None], members[None, :])
        keep[start:start + rows] = np.all(T.bits[block], axis=1)
    return GroupSet.from_indices(G, candidates[keep])


def is_subgroup(S: GroupSet) -> bool:
    if S.parent.identity not in S:
        return False
    return product_set(S, S) == S


# ==================================================
# 2. RANDOM SETS & SET LITERALS
# ==================================================

def random_subset(G: Group, rng: np.random.Generator, size: Optional[int] = None,
                  max_size: Optional[int] = None) -> GroupSet:
    """Uniform subset of the given size; size itself uniform when omitted."""
    if size is None:
        upper = G.order if max_size is None else max(1, min(max_size, G.order))
        size = int(rng.integers(1, upper + 1))
    picks = rng.choice(G.order, size=size, replace=False)
    return GroupSet.from_indices(G, picks)


_INTERVAL = re.compile(r'^interval\s*:\s*(-?\d+)\s*\.\.\s*(-?\d+)$')
_TUPLE = re.compile(r'\(([^()]*)\)')


def parse_label(G: Group, token: str):
    token = token.strip()
    try:
        if token.startswith('('):
            return tuple(int(part) for part in token.strip('()').split(','))
        if G.kind == 'product' and '.' in token:
            return tuple(int(part) for part in token.split('.'))
        return int(token)
    except ValueError:
        raise SetSpecError(f"bad element label {token!r}")


def parse_label_list(G: Group, body: str) -> GroupSet:
    """Comma separated labels; product labels as `(a,b)` or `a.b`."""
    tokens = []
    rest = _TUPLE.sub(lambda m: ' ' + m.group(0).replace(',', ';') + ' ', body)
    for raw in rest.split(','):
        raw = raw.strip()
        if raw:
            tokens.append(raw.replace(';', ','))
    return GroupSet.from_labels(G, [parse_label(G, token) for token in tokens])


def parse_set_literal(G: Group, spec: str) -> GroupSet:
    """
    Explicit `{3,4,6}`, `interval:1..L` (multmod only), `subgroup:g` or
    `@path` for a file of newline separated labels.
    """
    spec = (spec or '').strip()
    if spec.startswith('{') and spec.endswith('}'):
        return parse_label_list(G, spec[1:-1])
    match = _INTERVAL.match(spec)
    if match:
        if G.kind != 'multmod':
            raise SetSpecError("interval sets need a multmod group")
        lo, hi = int(match.group(1)), int(match.group(2))
        if not (1 <= lo <= hi <= G.p - 1):
            raise SetSpecError(f"interval {lo}..{hi} outside 1..{G.p - 1}")
        return GroupSet.from_labels(G, range(lo, hi + 1))
    if spec.startswith('subgroup:'):
        g = G.index(parse_label(G, spec.split(':', 1)[1]))
        return cyclic_subgroup(G, g).elements
    if spec.startswith('@'):
        path = Path(spec[1:])
        try:
            lines = path.read_text(encoding='utf-8').splitlines()
        except OSError as e:
            raise SetSpecError(f"cannot read set file {path}: {e}")
        labels = [parse_label(G, line) for line in lines if line.strip() and not line.startswith('#')]
        return GroupSet.from_labels(G, labels)
    raise SetSpecError(f"cannot parse set spec {spec!r}")
