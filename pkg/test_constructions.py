"""
Unit Tests for constructions - transversals, tightness, graded sets, intervals

Run with: python test_constructions.py
Or with pytest: pytest test_constructions.py -v
"""

import unittest

from construction_utils import (
    check_tightness,
    coset_representative_pair,
    graded_alpha,
    graded_parameters,
    graded_set,
    interval_set,
    prime_interval_set,
    ratio_count_checks,
    resolve_set_spec,
    rough_interval_set,
    subgroup_transversal_pair,
    tightness_set,
)
from group_utils import (
    GroupSet,
    RegimeError,
    SetSpecError,
    cyclic_group,
    cyclic_subgroup,
    multmod_group,
    product_group,
)
from numth_utils import build_sieve
from packing_utils import exact_nu, is_packing
from setalg_utils import product_set, ratio_set


# ================================================================================
# SUBGROUPS & TRANSVERSALS
# ================================================================================

class TestTransversalPairs(unittest.TestCase):

    def test_subgroup_pair(self):
        """H = {0,5}: B = {0,1,2,3,4} and A∘B is all of cyclic(10)"""
        G = cyclic_group(10)
        A, B = subgroup_transversal_pair(G, cyclic_subgroup(G, 5))
        self.assertEqual(B.labels(), [0, 1, 2, 3, 4])
        self.assertEqual(len(product_set(A, B)), 10)

    def test_converse_pair(self):
        """Coset representatives are packed by the subgroup itself"""
        G = product_group(2, 6)
        H = cyclic_subgroup(G, G.index((0, 2)))
        A, B = coset_representative_pair(G, H)
        self.assertEqual(B, H.elements)
        self.assertTrue(is_packing(A, B))
        self.assertEqual(len(A) * len(B), G.order)


# ================================================================================
# TIGHTNESS & GRADED SETS
# ================================================================================

class TestTightness(unittest.TestCase):

    def test_order_six(self):
        """g = 6 in cyclic(36): A = {0,6,12,18}, ν = 6"""
        G = cyclic_group(36)
        spec = tightness_set(G, 6)
        self.assertEqual(spec.A.labels(), [0, 6, 12, 18])
        self.assertEqual((spec.k, spec.d), (6, 3))
        report = check_tightness(spec)
        self.assertEqual(report.nu, 6)
        self.assertTrue(report.holds)

    def test_full_cyclic(self):
        """g = 1 in cyclic(16): the ratio set is the whole group"""
        G = cyclic_group(16)
        spec = tightness_set(G, 1)
        self.assertEqual(spec.A.labels(), [0, 1, 2, 3, 4, 8, 12])
        self.assertEqual(len(ratio_set(spec.A)), 16)

    def test_order_four(self):
        """g = 2 in cyclic(8): ratio set {0,2,4,6}"""
        spec = tightness_set(cyclic_group(8), 2)
        self.assertEqual(spec.A.labels(), [0, 2, 4])
        self.assertEqual(ratio_set(spec.A).labels(), [0, 2, 4, 6])

    def test_size_bound(self):
        """|A| < 2⌈√k⌉ for every generator of cyclic(60)"""
        G = cyclic_group(60)
        for g in range(1, 60):
            spec = tightness_set(G, g)
            self.assertLess(len(spec.A), 2 * spec.d)

    def test_identity_rejected(self):
        """The identity generates nothing useful"""
        with self.assertRaises(RegimeError):
            tightness_set(cyclic_group(10), 0)


class TestGradedSets(unittest.TestCase):

    def test_example(self):
        """cyclic(60), g = 5, m = 2, m' = 3: |A'| = 4, ratio size 11, ν = 10"""
        G = cyclic_group(60)
        spec = graded_set(G, 5, 2, 3)
        self.assertEqual(spec.A.labels(), [5, 10, 20, 30])
        self.assertEqual(spec.expected_ratio_size, 11)
        self.assertEqual(len(ratio_set(spec.A)), 11)
        self.assertEqual(spec.expected_nu, 10)
        self.assertEqual(exact_nu(spec.A).value, 10)

    def test_covers_subgroup(self):
        """g = 6 in cyclic(36), m = 3, m' = 2: the ratio set is all of ⟨6⟩"""
        G = cyclic_group(36)
        spec = graded_set(G, 6, 3, 2)
        self.assertEqual(ratio_set(spec.A), cyclic_subgroup(G, 6).elements)

    def test_parameters(self):
        """Every (m, m') with m·m' <= k, in order"""
        pairs = list(graded_parameters(4))
        self.assertEqual(pairs, [(1, 1), (1, 2), (1, 3), (1, 4), (2, 1), (2, 2), (3, 1), (4, 1)])

    def test_regime(self):
        """m·m' above k is refused"""
        with self.assertRaises(RegimeError):
            graded_set(cyclic_group(60), 5, 4, 4)

    def test_alpha(self):
        """α(m, m) is log(m²)/log(2m) - 1"""
        self.assertAlmostEqual(graded_alpha(1, 1), -1.0)
        self.assertAlmostEqual(graded_alpha(2, 2), 0.0)
        self.assertGreater(graded_alpha(10, 10), 0.5)


# ================================================================================
# INTERVALS IN F_p*
# ================================================================================

class TestIntervals(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.tables = build_sieve(2000)

    def test_interval(self):
        """interval_set(13, 3) is {1,2,3}"""
        self.assertEqual(interval_set(13, 3).A.labels(), [1, 2, 3])
        with self.assertRaises(RegimeError):
            interval_set(13, 0)

    def test_primes_101_9(self):
        """p = 101, λ = 9: B = {11}"""
        self.assertEqual(prime_interval_set(101, 9, self.tables).labels(), [11])

    def test_primes_1009_10(self):
        """p = 1009, λ = 10: 21 primes in (10, 100]"""
        self.assertEqual(len(prime_interval_set(1009, 10, self.tables)), 21)

    def test_primes_101_5(self):
        """p = 101, λ = 5: B = {7,11,13,17,19} packs {1..5}"""
        B = prime_interval_set(101, 5, self.tables)
        self.assertEqual(B.labels(), [7, 11, 13, 17, 19])
        self.assertTrue(is_packing(interval_set(101, 5).A, B))

    def test_rough_211_4(self):
        """p = 211, λ = 4: 16 integers coprime to 6 in (4, 52], 13 of them prime"""
        B = rough_interval_set(211, 4, self.tables)
        self.assertEqual(len(B), 16)
        for x in (25, 35, 49):
            self.assertIn(B.parent.index(x), B)
        self.assertEqual(len(prime_interval_set(211, 4, self.tables)), 13)

    def test_rough_contains_primes(self):
        """Every prime of the interval set is also in the rough set"""
        for p, lam in ((211, 4), (1009, 10), (1009, 17)):
            B = rough_interval_set(p, lam, self.tables)
            primes = prime_interval_set(p, lam, self.tables)
            self.assertTrue(all(i in B for i in primes))

    def test_rough_101_5(self):
        """p = 101, λ = 5: no composite 5-rough number up to 20"""
        self.assertEqual(rough_interval_set(101, 5, self.tables).labels(), [7, 11, 13, 17, 19])

    def test_regime(self):
        """λ above 0.9·√p or below 2 is refused"""
        with self.assertRaises(RegimeError):
            prime_interval_set(101, 10)
        with self.assertRaises(RegimeError):
            rough_interval_set(101, 1)

    def test_ratio_counts(self):
        """|AA⁻¹| = 11 at p = 101, λ = 4 and 7 at p = 13, λ = 3"""
        self.assertEqual(ratio_count_checks(101, 4, self.tables).ratio_size, 11)
        report = ratio_count_checks(13, 3, self.tables)
        self.assertEqual(report.ratio_size, 7)
        self.assertTrue(report.exact_match)

    def test_full_group(self):
        """AA⁻¹ = F_7* exactly from λ = 4 on"""
        self.assertTrue(ratio_count_checks(7, 6).full_group)
        self.assertTrue(ratio_count_checks(7, 4).full_group)
        self.assertFalse(ratio_count_checks(7, 3).full_group)


# ================================================================================
# NAMED CONSTRUCTIONS
# ================================================================================

class TestResolveSetSpec(unittest.TestCase):

    def test_subgroup(self):
        """subgroup:5 returns H and its transversal"""
        A, B = resolve_set_spec(cyclic_group(10), 'subgroup:5')
        self.assertEqual(A.labels(), [0, 5])
        self.assertEqual(B.labels(), [0, 1, 2, 3, 4])

    def test_constructions(self):
        """tightness, graded, interval, primes, rough and middlethird"""
        self.assertEqual(resolve_set_spec(cyclic_group(36), 'tightness:6')[0].labels(), [0, 6, 12, 18])
        self.assertEqual(len(resolve_set_spec(cyclic_group(60), "graded:5,2,3")[0]), 4)
        G = multmod_group(101)
        self.assertEqual(resolve_set_spec(G, 'interval:3')[0].labels(), [1, 2, 3])
        self.assertEqual(resolve_set_spec(G, 'interval:1..3')[0].labels(), [1, 2, 3])
        A, B = resolve_set_spec(G, 'primes:5')
        self.assertEqual(len(B), 5)
        self.assertEqual(len(A), 5)
        self.assertEqual(resolve_set_spec(G, 'rough:5')[1].labels(), [7, 11, 13, 17, 19])
        self.assertEqual(resolve_set_spec(multmod_group(7), 'middlethird')[0].labels(), [3, 4])

    def test_literal_fallback(self):
        """Anything else is a set literal"""
        A, B = resolve_set_spec(cyclic_group(10), '{0,5}')
        self.assertEqual(A, GroupSet.from_labels(cyclic_group(10), [0, 5]))
        self.assertIsNone(B)

    def test_errors(self):
        """Bad parameters and wrong groups raise SetSpecError"""
        with self.assertRaises(SetSpecError):
            resolve_set_spec(cyclic_group(60), 'graded:5,2')
        with self.assertRaises(SetSpecError):
            resolve_set_spec(cyclic_group(60), 'primes:5')
        with self.assertRaises(SetSpecError):
            resolve_set_spec(cyclic_group(60), 'tightness:x')


if __name__ == '__main__':
    print("=" * 80)
    print("Construction Tests")
    print("=" * 80)
    print("\nEvery construction checks its own invariants; these tests pin the values.\n")

    unittest.main(verbosity=2)
