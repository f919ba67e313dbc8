import math
import os
import sys
import unittest

import numpy as np

# Add project root to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from tools.comparison import TriangleSides
from tools.core import SpaceDescriptor
from tools.curvature import (
    FittedSign,
    Verdict,
    bound_violation_certificate,
    dyadic_grid,
    median_defect,
    quadruple_search,
    scaling_exponent,
    validate_lambda_grid,
)
from tools.errors import PreconditionError
from tools.lp_spaces import LorentzVector, lp_lorentz_norm, parallelogram_defect


class TestMedianDefect(unittest.TestCase):
    def setUp(self):
        self.x = LorentzVector(2, 0)
        self.y = LorentzVector(1, 0.25)

    def test_minkowski_has_no_defect(self):
        rng = np.random.default_rng(17)
        space = SpaceDescriptor.lorentz_plane(2)
        for _ in range(200):
            t = rng.uniform(1, 3)
            a = rng.uniform(-0.5, 0.5) * t
            s = rng.uniform(0.05, 0.95) * (t - abs(a)) / 2
            b = rng.uniform(-0.9, 0.9) * s
            defect = median_defect(space, LorentzVector(t, a), LorentzVector(s, b), 1.0)
            self.assertAlmostEqual(defect, 0.0, delta=1e-13)

    def test_defect_is_linear_in_lambda(self):
        space = SpaceDescriptor.lorentz_plane(4)
        base = median_defect(space, self.x, self.y, 1.0)
        self.assertGreater(base, 0)
        for lam in dyadic_grid(1, 10):
            self.assertAlmostEqual(median_defect(space, self.x, self.y, lam) / (lam * base), 1.0,
                                   delta=1e-9)

    def test_defect_sign_follows_the_parallelogram_defect(self):
        for p in (1.5, 3.0, 4.0):
            space = SpaceDescriptor.lorentz_plane(p)
            energy = parallelogram_defect(self.x, self.y, p)
            defect = median_defect(space, self.x, self.y, 0.5)
            self.assertEqual(np.sign(defect), -np.sign(energy), msg=f"p={p}")

    def test_l1_normed_plane(self):
        space = SpaceDescriptor.normed_plane(1)
        self.assertAlmostEqual(median_defect(space, LorentzVector(1, 0), LorentzVector(0, 1), 1.0), 1.0)

    def test_preconditions(self):
        space = SpaceDescriptor.lorentz_plane(3)
        with self.assertRaises(PreconditionError):
            median_defect(space, self.x, self.y, 0.0)
        with self.assertRaises(PreconditionError):
            median_defect(space, LorentzVector(1, 0), LorentzVector(1, 0), 0.5)
        with self.assertRaises(PreconditionError):
            median_defect(SpaceDescriptor.normed_plane(3), LorentzVector(1, 0), LorentzVector(2, 0), 0.5)
        with self.assertRaises(PreconditionError):
            median_defect(SpaceDescriptor.sphere(1.0), self.x, self.y, 0.5)


class TestScalingExponent(unittest.TestCase):
    def test_lp_plane_scales_linearly(self):
        profile = scaling_exponent(SpaceDescriptor.lorentz_plane(4), dyadic_grid(1, 8),
                                   x=LorentzVector(2, 0), y=LorentzVector(1, 0.25))
        self.assertAlmostEqual(profile.fitted_exponent, 1.0, delta=0.05)
        self.assertIs(profile.fitted_sign, FittedSign.POSITIVE)
        self.assertEqual(len(profile.defects), 8)

    def test_cylinder_matches_plane_for_small_vectors(self):
        x, y = LorentzVector(2, 0), LorentzVector(1, 0.25)
        plane = scaling_exponent(SpaceDescriptor.lorentz_plane(3), dyadic_grid(1, 8), x=x, y=y)
        cylinder = scaling_exponent(SpaceDescriptor.lorentz_cylinder(3), dyadic_grid(1, 8), x=x, y=y)
        np.testing.assert_allclose(plane.defects, cylinder.defects, rtol=1e-12)

    def test_sphere_scales_cubically(self):
        profile = scaling_exponent(SpaceDescriptor.sphere(1.0), dyadic_grid(4, 10),
                                   sides=TriangleSides(1, 1, 1))
        self.assertAlmostEqual(profile.fitted_exponent, 3.0, delta=0.1)
        self.assertIs(profile.fitted_sign, FittedSign.POSITIVE)

    def test_minkowski_profile_is_zero(self):
        profile = scaling_exponent(SpaceDescriptor.lorentz_plane(2), dyadic_grid(1, 10),
                                   x=LorentzVector(2, 0), y=LorentzVector(1, 0.25))
        self.assertTrue(profile.is_zero)
        self.assertTrue(math.isnan(profile.fitted_exponent))

    def test_profile_csv(self):
        profile = scaling_exponent(SpaceDescriptor.lorentz_plane(4), dyadic_grid(1, 6),
                                   x=LorentzVector(2, 0), y=LorentzVector(1, 0.25))
        lines = profile.to_csv().splitlines()
        self.assertEqual(lines[0], "lambda,defect,comparison_median,space_median")
        self.assertEqual(len(lines), 7)
        self.assertTrue(lines[1].startswith("0.5,"))

    def test_grid_validation(self):
        with self.assertRaises(PreconditionError):
            validate_lambda_grid(dyadic_grid(1, 5))
        with self.assertRaises(PreconditionError):
            validate_lambda_grid([0.5, 0.25, 0.2, 0.125, 0.0625, 0.03125])
        with self.assertRaises(PreconditionError):
            validate_lambda_grid(list(reversed(dyadic_grid(1, 6))))
        with self.assertRaises(PreconditionError):
            scaling_exponent(SpaceDescriptor.sphere(1.0), dyadic_grid(1, 6))
        self.assertEqual(dyadic_grid(1, 3), [0.5, 0.25, 0.125])


class TestQuadrupleSearch(unittest.TestCase):
    def test_witness_for_every_non_euclidean_exponent(self):
        for p in (1, 1.25, 1.5, 3, 4, 8):
            space = SpaceDescriptor.lorentz_plane(p)
            witness = quadruple_search(space)
            self.assertIsNotNone(witness, msg=f"p={p}")
            self.assertGreater(abs(witness.defect), 1e-6, msg=f"p={p}")
            self.assertAlmostEqual(parallelogram_defect(witness.x, witness.y, p), witness.defect,
                                   delta=1e-12)

    def test_witness_beats_the_reference_pair(self):
        self.assertGreaterEqual(abs(quadruple_search(SpaceDescriptor.lorentz_plane(4)).defect),
                                1.738e-3)
        self.assertGreaterEqual(abs(quadruple_search(SpaceDescriptor.lorentz_plane(1)).defect), 1.0)

    def test_minkowski_has_no_witness(self):
        self.assertIsNone(quadruple_search(SpaceDescriptor.lorentz_plane(2)))

    def test_preconditions(self):
        with self.assertRaises(PreconditionError):
            quadruple_search(SpaceDescriptor.normed_plane(3))
        with self.assertRaises(PreconditionError):
            quadruple_search(SpaceDescriptor.lorentz_plane("inf"))
        with self.assertRaises(PreconditionError):
            quadruple_search(SpaceDescriptor.lorentz_plane(3), grid_radius=0.1)

    def test_swapped_pair_has_opposite_defect(self):
        for p in (1.5, 4.0, 8.0):
            witness = quadruple_search(SpaceDescriptor.lorentz_plane(p))
            u = (witness.x + witness.y).scaled(0.5)
            v = (witness.x - witness.y).scaled(0.5)
            self.assertAlmostEqual(parallelogram_defect(u, v, p), -0.5 * witness.defect,
                                   delta=1e-12 * max(1.0, abs(witness.defect)))


class TestBoundCertificate(unittest.TestCase):
    def setUp(self):
        self.x = LorentzVector(2, 0)
        self.y = LorentzVector(1, 0.25)

    def test_p4_pair_violates_both_bounds(self):
        space = SpaceDescriptor.lorentz_plane(4)
        for k in (1.0, -1.0, 0.1, -0.1):
            certificate = bound_violation_certificate(space, self.x, self.y, k)
            self.assertIs(certificate.verdict, Verdict.VIOLATES_LOWER, msg=f"k={k}")
            self.assertIs(certificate.swapped_verdict, Verdict.VIOLATES_UPPER, msg=f"k={k}")
            self.assertEqual(certificate.levels_used, 20)
            self.assertEqual(len(certificate.margins), 3)
            for lam, difference, error in certificate.margins:
                self.assertGreater(abs(difference), 10 * error)

    def test_lorentzian_comparison_uses_the_model_law(self):
        space = SpaceDescriptor.lorentz_plane(4)
        norm = lambda v, lam: lp_lorentz_norm(v.scaled(lam), 4)
        differences = {}
        for k in (1.0, -1.0):
            certificate = bound_violation_certificate(space, self.x, self.y, k, max_levels=3)
            self.assertEqual([lam for lam, _, _ in certificate.margins], [0.5, 0.25, 0.125])
            for lam, difference, _ in certificate.margins:
                a, b, c = norm(self.y, lam), norm(self.x, lam), norm(self.x - self.y, lam)
                if k > 0:
                    model = math.acosh((math.cosh(a) + math.cosh(b)) / (2 * math.cosh(c / 2)))
                else:
                    model = math.acos((math.cos(a) + math.cos(b)) / (2 * math.cos(c / 2)))
                median = norm((self.x + self.y).scaled(0.5), lam)
                self.assertAlmostEqual(difference, median - model, delta=1e-12, msg=f"k={k} λ={lam}")
            differences[k] = [difference for _, difference, _ in certificate.margins]
        for positive, negative in zip(differences[1.0], differences[-1.0]):
            self.assertLess(positive, negative)

    def test_minkowski_is_consistent(self):
        space = SpaceDescriptor.lorentz_plane(2)
        certificate = bound_violation_certificate(space, self.x, self.y, 1.0)
        self.assertIs(certificate.verdict, Verdict.CONSISTENT)
        self.assertIs(certificate.swapped_verdict, Verdict.CONSISTENT)
        self.assertIsNone(certificate.violation)

    def test_l1_normed_plane(self):
        space = SpaceDescriptor.normed_plane(1)
        for k in (1.0, -1.0):
            certificate = bound_violation_certificate(space, LorentzVector(1, 0), LorentzVector(0, 1), k)
            self.assertIs(certificate.verdict, Verdict.VIOLATES_UPPER)
            self.assertIs(certificate.swapped_verdict, Verdict.VIOLATES_LOWER)
            self.assertIs(certificate.violation, Verdict.VIOLATES_UPPER)

    def test_certificate_dict(self):
        certificate = bound_violation_certificate(SpaceDescriptor.lorentz_plane(4), self.x, self.y, 0.1)
        data = certificate.to_dict()
        self.assertEqual(data["verdict"], "violatesLowerBound")
        self.assertEqual(data["swapped_verdict"], "violatesUpperBound")
        self.assertEqual(data["k_probe"], 0.1)

    def test_preconditions(self):
        space = SpaceDescriptor.lorentz_plane(4)
        with self.assertRaises(PreconditionError):
            bound_violation_certificate(space, self.x, self.y, 0.0)
        with self.assertRaises(PreconditionError):
            bound_violation_certificate(space, LorentzVector(1, 0), LorentzVector(1, 0), 1.0)


if __name__ == '__main__':
    unittest.main()
