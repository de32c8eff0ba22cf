"""
Unit Tests for packing sets - predicate, bounds, greedy and exact ν(A)

Run with: python test_packing.py
Or with pytest: pytest test_packing.py -v
"""

import itertools
import unittest

import numpy as np

from group_utils import (
    CapExceededError,
    EmptySetError,
    GroupSet,
    NotPackingError,
    SetSpecError,
    cyclic_group,
    multmod_group,
    product_group,
)
from packing_utils import (
    check_symmetry_proposition,
    exact_nu,
    greedy_packing,
    is_packing,
    packing_bounds,
    packing_certificate,
    packing_report,
    resolve_order,
)
from setalg_utils import random_subset


def brute_nu(A):
    """Largest B containing the identity with |A∘B| = |A||B|, by enumeration."""
    G = A.parent
    others = [x for x in range(G.order) if x != G.identity]
    best = 1
    for size in range(2, G.order // len(A) + 1):
        found = False
        for combo in itertools.combinations(others, size - 1):
            B = GroupSet.from_indices(G, [G.identity, *combo])
            if is_packing(A, B):
                found = True
                break
        if not found:
            break
        best = size
    return best


# ================================================================================
# THE PACKING PREDICATE
# ================================================================================

class TestPackingPredicate(unittest.TestCase):

    def test_coset_tiling(self):
        """{0,5} is packed by {0,1,2,3,4} in cyclic(10)"""
        G = cyclic_group(10)
        A = GroupSet.from_labels(G, [0, 5])
        B = GroupSet.from_labels(G, [0, 1, 2, 3, 4])
        cert = packing_certificate(A, B)
        self.assertTrue(cert.is_packing)
        self.assertEqual(cert.product_cardinality, 10)
        self.assertEqual(cert.ratio_intersection.labels(), [0])
        self.assertIsNone(cert.collision)

    def test_collision_reported(self):
        """A failing pair comes with a1∘b1 = a2∘b2"""
        G = cyclic_group(10)
        A = GroupSet.from_labels(G, [0, 1])
        B = GroupSet.from_labels(G, [0, 1])
        cert = packing_certificate(A, B)
        self.assertFalse(cert.is_packing)
        a1, b1, a2, b2 = cert.collision
        self.assertEqual(G.op(a1, b1), G.op(a2, b2))
        self.assertNotEqual((a1, b1), (a2, b2))
        self.assertIn(a1, A)
        self.assertIn(b2, B)

    def test_criterion_agrees_with_count(self):
        """Direct count and ratio criterion agree on random pairs"""
        rng = np.random.default_rng(20240601)
        for G in (cyclic_group(24), product_group(2, 12), multmod_group(29)):
            for _ in range(100):
                A = random_subset(G, rng, max_size=6)
                B = random_subset(G, rng, max_size=6)
                pairs = {G.op(a, b) for a, b in itertools.product(A, B)}
                self.assertEqual(is_packing(A, B), len(pairs) == len(A) * len(B))

    def test_empty_b_is_vacuous(self):
        """The empty set packs anything"""
        G = cyclic_group(7)
        self.assertTrue(is_packing(GroupSet.full(G), GroupSet.empty(G)))

    def test_empty_a(self):
        """A must be nonempty"""
        G = cyclic_group(7)
        with self.assertRaises(EmptySetError):
            packing_bounds(GroupSet.empty(G))


# ================================================================================
# BOUNDS & GREEDY
# ================================================================================

class TestBoundsAndGreedy(unittest.TestCase):

    def test_bounds_example(self):
        """cyclic(36), A={0,6,12,18}: (3, 6, 9)"""
        G = cyclic_group(36)
        A = GroupSet.from_labels(G, [0, 6, 12, 18])
        self.assertEqual(packing_bounds(A), (3, 6, 9))

    def test_greedy_subgroup(self):
        """Greedy on ⟨6⟩ picks one element per coset"""
        G = cyclic_group(36)
        A = GroupSet.from_labels(G, [0, 6, 12, 18, 24, 30])
        self.assertEqual(greedy_packing(A).labels(), [0, 1, 2, 3, 4, 5])

    def test_greedy_random_order(self):
        """A seeded order gives a reproducible maximal packing set"""
        G = cyclic_group(40)
        A = GroupSet.from_labels(G, [0, 1, 3])
        first = greedy_packing(A, 'random:7')
        self.assertEqual(first, greedy_packing(A, 'random:7'))
        self.assertTrue(is_packing(A, first))

    def test_bad_order(self):
        """Orders other than natural, random:SEED or a permutation are rejected"""
        G = cyclic_group(6)
        for order in ('shuffled', 'random:x', [0, 1, 2]):
            with self.assertRaises(SetSpecError):
                resolve_order(G, order)

    def test_sandwich(self):
        """weak <= ruzsa <= greedy <= nu <= upper on random sets"""
        rng = np.random.default_rng(99)
        for G in (cyclic_group(30), product_group(2, 2, 6), multmod_group(37)):
            for _ in range(15):
                A = random_subset(G, rng, max_size=G.order // 2 + 1)
                weak, ruzsa, upper = packing_bounds(A)
                greedy = len(greedy_packing(A))
                nu = exact_nu(A)
                self.assertTrue(nu.exact)
                self.assertEqual([weak, ruzsa, greedy, nu.value, upper],
                                 sorted([weak, ruzsa, greedy, nu.value, upper]))


# ================================================================================
# EXACT ν(A)
# ================================================================================

class TestExactNu(unittest.TestCase):

    def test_tightness_example(self):
        """cyclic(36), A={0,6,12,18}: ν = 6"""
        G = cyclic_group(36)
        result = exact_nu(GroupSet.from_labels(G, [0, 6, 12, 18]))
        self.assertEqual(result.value, 6)
        self.assertTrue(result.exact)

    def test_interval_mod_13(self):
        """{1,2,3} in F_13*: ν = 3"""
        G = multmod_group(13)
        A = GroupSet.from_labels(G, [1, 2, 3])
        result = exact_nu(A)
        self.assertEqual(result.value, 3)
        self.assertTrue(is_packing(A, result.witness))

    def test_subgroup(self):
        """ν({0,5}) = 5 in cyclic(10)"""
        result = exact_nu(GroupSet.from_labels(cyclic_group(10), [0, 5]))
        self.assertEqual(result.value, 5)

    def test_matches_brute_force(self):
        """Exact solver agrees with subset enumeration on small groups"""
        rng = np.random.default_rng(1)
        for G in (cyclic_group(12), product_group(2, 6), multmod_group(13)):
            for _ in range(8):
                A = random_subset(G, rng, max_size=4)
                self.assertEqual(exact_nu(A).value, brute_nu(A), msg=f"{G.spec} {A}")

    def test_order_invariance(self):
        """The vertex order changes the search, never the value"""
        rng = np.random.default_rng(4)
        G = cyclic_group(45)
        for _ in range(5):
            A = random_subset(G, rng, max_size=5)
            values = {exact_nu(A, order=order).value for order in (None, 'random:1', 'random:2')}
            self.assertEqual(len(values), 1)

    def test_cap(self):
        """Groups above the cap are refused"""
        with self.assertRaises(CapExceededError):
            exact_nu(GroupSet.from_labels(cyclic_group(10), [0, 1]), cap=8)

    def test_budget_exhaustion(self):
        """A zero budget either needs no search or reports unknown with a valid witness"""
        rng = np.random.default_rng(8)
        G = cyclic_group(200)
        A = random_subset(G, rng, size=6)
        result = exact_nu(A, budget=0)
        self.assertTrue(result.status == 'unknown' or result.nodes == 0)
        self.assertTrue(is_packing(A, result.witness))
        self.assertGreaterEqual(result.value, len(greedy_packing(A)))

    def test_report(self):
        """packing_report carries the bounds, the exact value and the JSON keys"""
        G = multmod_group(13)
        report = packing_report(GroupSet.from_labels(G, [1, 2, 3]), exact=True)
        data = report.to_dict()
        self.assertEqual(data['group'], 'multmod:13')
        self.assertEqual(data['A'], '{1,2,3}')
        self.assertEqual(data['nuExact'], 3)
        self.assertTrue(data['isPacking'])
        self.assertEqual(set(data), {'group', 'A', 'B', 'isPacking', 'lowerWeak', 'lowerRuzsa',
                                     'upperTrivial', 'nuExact', 'nodesExplored'})


# ================================================================================
# SYMMETRIES OF MAXIMUM PACKING SETS
# ================================================================================

class TestSymmetryProposition(unittest.TestCase):

    def test_small_cyclic(self):
        """cyclic(12), A={0,1} with a maximum B passes"""
        G = cyclic_group(12)
        A = GroupSet.from_labels(G, [0, 1])
        B = exact_nu(A).witness
        report = check_symmetry_proposition(A, B)
        self.assertTrue(report.passed, msg=report.failed)
        self.assertEqual(report.sym_b, report.sym_ratio_b)

    def test_subgroup(self):
        """A = ⟨4⟩ in cyclic(12) with its transversal"""
        G = cyclic_group(12)
        A = GroupSet.from_labels(G, [0, 4, 8])
        report = check_symmetry_proposition(A, exact_nu(A).witness)
        self.assertTrue(report.passed, msg=report.failed)

    def test_not_packing(self):
        """A B that does not pack A is refused"""
        G = cyclic_group(12)
        A = GroupSet.from_labels(G, [0, 1])
        with self.assertRaises(NotPackingError):
            check_symmetry_proposition(A, GroupSet.from_labels(G, [0, 1]))


if __name__ == '__main__':
    print("=" * 80)
    print("Packing Tests")
    print("=" * 80)
    print("\nExact values are checked against subset enumeration at small scale.\n")

    unittest.main(verbosity=2)
