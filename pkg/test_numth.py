"""
Unit Tests for number theory helpers - sieve, totients, rough numbers, Buchstab

Run with: python test_numth.py
Or with pytest: pytest test_numth.py -v
"""

import math
import unittest
from fractions import Fraction

from group_utils import CapExceededError, RegimeError
from numth_utils import (
    EXP_MINUS_GAMMA,
    SIX_OVER_PI_SQUARED,
    build_sieve,
    buchstab_grid,
    buchstab_omega,
    check_rough_regime,
    euler_phi,
    is_rough,
    pnt_lower_estimate,
    prime_count,
    rough_count,
    RoughWindowSummary,
    rough_count_vs_buchstab,
    totient_ratio_count,
)


# ================================================================================
# SIEVE
# ================================================================================

class TestSieve(unittest.TestCase):

    def test_ten(self):
        """N = 10: primes {2,3,5,7}, spf(9) = 3"""
        tables = build_sieve(10)
        self.assertEqual(list(tables.primes()), [2, 3, 5, 7])
        self.assertEqual(tables.spf(9), 3)

    def test_two(self):
        """N = 2: primes {2}"""
        self.assertEqual(list(build_sieve(2).primes()), [2])

    def test_prime_count(self):
        """π(100) = 25"""
        self.assertEqual(prime_count(100, build_sieve(100)), 25)
        self.assertEqual(prime_count(1), 0)

    def test_spf_matches_trial_division(self):
        """Smallest prime factors agree with trial division"""
        tables = build_sieve(3000)
        for n in range(2, 3001):
            d = next(q for q in range(2, n + 1) if n % q == 0)
            self.assertEqual(tables.spf(n), d)

    def test_limits(self):
        """Limits below 2 or above the cap are refused"""
        with self.assertRaises(RegimeError):
            build_sieve(1)
        with self.assertRaises(CapExceededError):
            build_sieve(1000, max_limit=100)
        with self.assertRaises(CapExceededError):
            build_sieve(10).spf(11)


class TestTotients(unittest.TestCase):

    def test_values(self):
        """φ(1) = 1, φ(12) = 4, φ(q) = q - 1"""
        tables = build_sieve(100)
        self.assertEqual(euler_phi(1), 1)
        self.assertEqual(euler_phi(12, tables), 4)
        self.assertEqual(euler_phi(97, tables), 96)

    def test_sieve_agrees_with_factoring(self):
        """The sieve's φ agrees with trial-division φ"""
        tables = build_sieve(500)
        for n in range(1, 501):
            self.assertEqual(int(tables.phi[n]), euler_phi(n))

    def test_ratio_count(self):
        """λ = 1, 3, 4 give 1, 7, 11 reduced fractions"""
        self.assertEqual(totient_ratio_count(1), 1)
        self.assertEqual(totient_ratio_count(3), 7)
        self.assertEqual(totient_ratio_count(4), 11)

    def test_ratio_count_brute_force(self):
        """Distinct a/b with a, b <= λ, counted with Fraction"""
        for lam in range(1, 25):
            distinct = {Fraction(a, b) for a in range(1, lam + 1) for b in range(1, lam + 1)}
            self.assertEqual(totient_ratio_count(lam), len(distinct))

    def test_density(self):
        """totient_ratio_count(1000)/1000² lies in [0.595, 0.620]"""
        density = totient_ratio_count(1000) / 1000 ** 2
        self.assertGreaterEqual(density, 0.595)
        self.assertLessEqual(density, 0.620)
        self.assertAlmostEqual(SIX_OVER_PI_SQUARED, 0.6079271, places=6)


# ================================================================================
# ROUGH NUMBERS
# ================================================================================

class TestRough(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.tables = build_sieve(1000)

    def test_is_rough(self):
        """25 is 4-rough, not 5-rough; 49 is 6-rough"""
        self.assertTrue(is_rough(25, 4, self.tables))
        self.assertFalse(is_rough(25, 5, self.tables))
        self.assertTrue(is_rough(49, 6, self.tables))

    def test_rough_count(self):
        """16 integers in (4, 52] are coprime to 6"""
        self.assertEqual(rough_count(4, 52, 4, self.tables), 16)
        self.assertEqual(rough_count(10, 10, 3, self.tables), 0)

    def test_regime(self):
        """2 <= λ <= 0.9·√p"""
        check_rough_regime(101, 9)
        with self.assertRaises(RegimeError):
            check_rough_regime(101, 10)
        with self.assertRaises(RegimeError):
            check_rough_regime(101, 1)

    def test_report(self):
        """p = 1009, λ = 10: exact count next to the Buchstab estimate"""
        report = rough_count_vs_buchstab(1009, 10)
        self.assertEqual(report.count, rough_count(10, 100, 10))
        u = math.log(100.9) / math.log(10)
        self.assertAlmostEqual(report.u, u)
        self.assertAlmostEqual(report.estimate, 1009 / (10 * math.log(10)) * buchstab_omega(u))
        self.assertAlmostEqual(report.ratio, report.count / report.estimate)
        # below the checked regime the window is not applied
        self.assertIsNone(report.in_window)

    def test_window_large_p(self):
        """Above the regime threshold the count stays within a factor of 2"""
        report = rough_count_vs_buchstab(10007, 20)
        self.assertTrue(report.in_window)

    def test_given_count_is_kept(self):
        """A count passed in is reported as is"""
        report = rough_count_vs_buchstab(1009, 10, count=7)
        self.assertEqual(report.count, 7)
        self.assertAlmostEqual(report.ratio, 7 / report.estimate)

    def test_window_summary_counts_gated(self):
        """p = 10007: instances with u < 1.2 are tallied apart, not dropped"""
        tables = build_sieve(10007)
        window = RoughWindowSummary()
        for lam in range(2, 91):
            window.add(rough_count_vs_buchstab(10007, lam, tables=tables))
        self.assertEqual(window.checked + window.gated, 89)
        self.assertGreaterEqual(window.gated, 20)
        self.assertLess(window.gated_range[0], 0.5)
        self.assertEqual(window.outside, 0)
        notes = window.notes()
        self.assertTrue(any(f"{window.gated} instances" in line and 'not checked' in line
                            for line in notes))

    def test_window_summary_small_p(self):
        """Below p = 10^4 nothing is checked"""
        window = RoughWindowSummary()
        window.add(rough_count_vs_buchstab(1009, 10))
        self.assertEqual(window.small_p, 1)
        self.assertEqual(window.checked, 0)
        self.assertIn('window not checked', window.notes()[0])

    def test_pnt_estimate(self):
        """(p/λ)/log(p/λ) - λ/log λ"""
        self.assertAlmostEqual(pnt_lower_estimate(1009, 10),
                               100.9 / math.log(100.9) - 10 / math.log(10))


# ================================================================================
# BUCHSTAB'S FUNCTION
# ================================================================================

class TestBuchstab(unittest.TestCase):

    def test_exact_branch(self):
        """ω(u) = 1/u on [1, 2]"""
        self.assertAlmostEqual(buchstab_omega(1.5), 2 / 3)
        self.assertEqual(buchstab_omega(2.0), 0.5)
        self.assertEqual(buchstab_omega(1.0), 1.0)

    def test_second_branch(self):
        """ω(u) = (1 + log(u - 1))/u on [2, 3]"""
        for u in (2.25, 2.5, 2.9):
            self.assertAlmostEqual(buchstab_omega(u), (1 + math.log(u - 1)) / u, places=6)

    def test_off_grid_is_plain_float(self):
        """Interpolated values are Python floats"""
        self.assertIs(type(buchstab_omega(2.5003)), float)
        self.assertIs(type(buchstab_omega(4.1234)), float)

    def test_limit(self):
        """ω(10) is e^-γ to 1e-5"""
        self.assertLess(abs(buchstab_omega(10.0) - EXP_MINUS_GAMMA), 1e-5)

    def test_grid_head(self):
        """Grid values on [1, 2] are exactly 1/u"""
        grid = buchstab_grid(12.0, 1e-2)
        n = grid.steps_per_unit
        for i in range(n + 1):
            self.assertEqual(grid.values[i], 1.0 / (1 + i / n))

    def test_domain(self):
        """u < 1 is outside the domain"""
        with self.assertRaises(RegimeError):
            buchstab_omega(0.5)


if __name__ == '__main__':
    print("=" * 80)
    print("Number Theory Tests")
    print("=" * 80)
    print("\nSieve values are checked against trial division and Fraction counts.\n")

    unittest.main(verbosity=2)
