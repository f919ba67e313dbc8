import json
import math
import os
import sys
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

# Add project root to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from tools.core import P_INF, Chart, Event, SpaceDescriptor, sample_net
from tools.errors import ChartMismatchError, PreconditionError
from tools.lp_spaces import (
    DefectMode,
    LorentzVector,
    check_future_quadruple,
    lorentz_norm_array,
    lp_lorentz_norm,
    lp_norm,
    lp_plane_distance,
    parallelogram_defect,
    reverse_triangle_violations,
    separation_matrix,
    space_norm,
    splitting_triples,
    tau_infinity,
    tau_p,
    unit_hyperboloid,
)

FIXTURE = os.path.join(os.path.dirname(__file__), "test_expected_closed_forms.json")

exponents = st.one_of(st.floats(min_value=1.0, max_value=12.0), st.just(P_INF))
eighths = st.integers(min_value=-40, max_value=40).map(lambda k: k / 8)


class TestTimeSeparation(unittest.TestCase):
    def setUp(self):
        with open(FIXTURE) as f:
            self.expected = json.load(f)

    def test_closed_forms(self):
        for case in self.expected["tau"]:
            space = SpaceDescriptor.lorentz_plane(case["p"])
            value = tau_p(Event(*case["from"]), Event(*case["to"]), space)
            self.assertAlmostEqual(value, case["value"], places=14, msg=case)

    def test_infinity_is_the_time_difference(self):
        space = SpaceDescriptor.lorentz_plane("inf")
        self.assertEqual(tau_infinity(Event(0, 0), Event(3, 1), space), 3.0)
        self.assertEqual(tau_infinity(Event(0, 0), Event(1, 1), space), 0.0)

    def test_cylinder_minimal_lift(self):
        space = SpaceDescriptor.lorentz_cylinder(2)
        c = space.circumference
        value = tau_p(space.event(0, 0.1), space.event(1, c - 0.1), space)
        self.assertAlmostEqual(value, math.sqrt(1 - 0.2 ** 2), places=12)

    def test_chart_mismatch(self):
        with self.assertRaises(ChartMismatchError):
            tau_p(Event(0, 0), Event(1, 0), SpaceDescriptor.lorentz_cylinder(2))
        with self.assertRaises(PreconditionError):
            tau_p(Event(0, 0, Chart.NORMED_PLANE), Event(1, 0, Chart.NORMED_PLANE),
                  SpaceDescriptor.normed_plane(2))

    def test_exponent_below_one(self):
        with self.assertRaises(PreconditionError):
            lp_lorentz_norm(LorentzVector(1, 0), 0.5)

    def test_kernel_is_stable_near_the_light_cone(self):
        s = 1 - 1e-12
        delta = 1 - s
        for p in (3.0, 7.5, 40.0):
            expected = -math.expm1(p * math.log1p(-delta))
            value = float(lorentz_norm_array(1.0, s, p))
            self.assertAlmostEqual(value / expected ** (1 / p), 1.0, places=9)
        self.assertAlmostEqual(float(lorentz_norm_array(1.0, s, 2.0)),
                               math.sqrt(delta * (2 - delta)), delta=1e-18)

    @settings(max_examples=200, deadline=None)
    @given(p=exponents,
           t=st.floats(min_value=0.1, max_value=10.0),
           ratio=st.floats(min_value=-0.99, max_value=0.99),
           lam=st.floats(min_value=0.01, max_value=100.0))
    def test_homogeneity(self, p, t, ratio, lam):
        v = LorentzVector(t, ratio * t)
        scaled = lp_lorentz_norm(v.scaled(lam), p)
        self.assertAlmostEqual(scaled, lam * lp_lorentz_norm(v, p), delta=1e-12 * lam * t)

    @settings(max_examples=200, deadline=None)
    @given(p=exponents,
           a=st.tuples(eighths, eighths), b=st.tuples(eighths, eighths))
    def test_positive_exactly_when_chronological(self, p, a, b):
        space = SpaceDescriptor.lorentz_plane(p)
        ea, eb = Event(*a), Event(*b)
        chronological = eb.t - ea.t > abs(eb.x - ea.x)
        self.assertEqual(tau_p(ea, eb, space) > 0, chronological)

    def test_reverse_triangle_random_sweep(self):
        rng = np.random.default_rng(7)
        n = 100_000
        for p in (1.0, 1.5, 2.0, 3.0, 10.0, P_INF):
            u0 = rng.uniform(0.05, 2.0, n)
            u1 = rng.uniform(-0.999, 0.999, n) * u0
            v0 = rng.uniform(0.05, 2.0, n)
            v1 = rng.uniform(-0.999, 0.999, n) * v0
            whole = lorentz_norm_array(u0 + v0, u1 + v1, p)
            parts = lorentz_norm_array(u0, u1, p) + lorentz_norm_array(v0, v1, p)
            violations = np.count_nonzero(whole < parts - 1e-12)
            self.assertEqual(violations, 0, msg=f"p={p}")

    def test_net_reverse_triangle(self):
        for p in (1.0, 2.0, 5.0, "inf"):
            net = sample_net(SpaceDescriptor.lorentz_cylinder(p), 4, 8)
            self.assertEqual(reverse_triangle_violations(net), [], msg=f"p={p}")

    def test_splitting_triples(self):
        nx = 32
        # (0,0) → (1/3,0) → (2/3, 2π/32): timelike legs with a bend at the middle point
        bent = (0, nx, 2 * nx + 1)
        diagonal = (0, nx + 1, 2 * nx + 2)
        column = (0, nx, 2 * nx)
        flat = splitting_triples(sample_net(SpaceDescriptor.lorentz_plane(1), 4, nx), tolerance=1e-12)
        curved = splitting_triples(sample_net(SpaceDescriptor.lorentz_plane(3), 4, nx), tolerance=1e-12)
        self.assertIn(bent, flat)
        self.assertNotIn(bent, curved)
        # collinear triples split for every p by homogeneity
        for triple in (diagonal, column):
            self.assertIn(triple, flat)
            self.assertIn(triple, curved)

    def test_separation_matrix_matches_pointwise(self):
        space = SpaceDescriptor.lorentz_cylinder(2.5)
        points = [space.event(t, x) for t, x in ((0, 0), (0.4, 6.1), (0.9, 0.3), (1.0, 3.0))]
        matrix = separation_matrix(space, points)
        for i, a in enumerate(points):
            for j, b in enumerate(points):
                self.assertEqual(matrix[i, j], tau_p(a, b, space))


class TestNorms(unittest.TestCase):
    def test_lp_norm(self):
        self.assertEqual(lp_norm(LorentzVector(3, -4), 2), 5.0)
        self.assertEqual(lp_norm(LorentzVector(3, -4), 1), 7.0)
        self.assertEqual(lp_norm(LorentzVector(3, -4), "inf"), 4.0)
        self.assertAlmostEqual(lp_plane_distance(Event(0, 0), Event(1, 1), 3), 2 ** (1 / 3))

    def test_space_norm(self):
        v = LorentzVector(2, 1)
        self.assertAlmostEqual(space_norm(SpaceDescriptor.lorentz_plane(2), v), math.sqrt(3))
        self.assertAlmostEqual(space_norm(SpaceDescriptor.normed_plane(2), v), math.sqrt(5))
        with self.assertRaises(PreconditionError):
            space_norm(SpaceDescriptor.sphere(1.0), v)

    @settings(max_examples=100, deadline=None)
    @given(x1=st.floats(min_value=-3.0, max_value=3.0), p=st.floats(min_value=1.0, max_value=4.0))
    def test_unit_hyperboloid(self, x1, p):
        self.assertAlmostEqual(lp_lorentz_norm(unit_hyperboloid(x1, p), p), 1.0, places=9)

    def test_unit_hyperboloid_rejects_infinity(self):
        with self.assertRaises(PreconditionError):
            unit_hyperboloid(0.5, "inf")


class TestParallelogramDefect(unittest.TestCase):
    def setUp(self):
        self.x = LorentzVector(2, 0)
        self.y = LorentzVector(1, 0.25)

    def test_l1_example(self):
        self.assertEqual(parallelogram_defect(self.x, self.y, 1), 1.0)

    def test_p4_closed_form(self):
        expected = 8 + math.sqrt(1 - 4 ** -4) - math.sqrt(81 - 4 ** -4)
        value = parallelogram_defect(self.x, self.y, 4)
        self.assertAlmostEqual(value, expected, delta=1e-13)
        self.assertAlmostEqual(value, -1.7380196e-3, delta=1e-9)

    def test_p2_is_flat(self):
        rng = np.random.default_rng(11)
        n = 10_000
        t = rng.uniform(1, 3, n)
        a = rng.uniform(-0.5, 0.5, n) * t
        s = rng.uniform(0.01, 0.99, n) * (t - np.abs(a)) / 2
        b = rng.uniform(-0.9, 0.9, n) * s
        norm = lambda v0, v1: lorentz_norm_array(v0, v1, 2.0) ** 2
        defects = 2 * norm(t, a) + 2 * norm(s, b) - norm(t + s, a + b) - norm(t - s, a - b)
        self.assertLess(float(np.max(np.abs(defects))), 1e-12)
        for i in range(200):
            x, y = LorentzVector(t[i], a[i]), LorentzVector(s[i], b[i])
            self.assertAlmostEqual(parallelogram_defect(x, y, 2), 0.0, delta=1e-12)

    def test_riemann_mode(self):
        e1, e2 = LorentzVector(1, 0), LorentzVector(0, 1)
        self.assertAlmostEqual(parallelogram_defect(e1, e2, 1, DefectMode.RIEMANN), -4.0)
        self.assertAlmostEqual(parallelogram_defect(e1, e2, 2, "riemann"), 0.0, places=14)
        self.assertAlmostEqual(parallelogram_defect(e1, e2, "inf", "riemann"), 2.0)

    def test_swapped_pair_flips_sign(self):
        for p in (1.5, 4.0):
            u, v = (self.x + self.y).scaled(0.5), (self.x - self.y).scaled(0.5)
            self.assertAlmostEqual(parallelogram_defect(u, v, p),
                                   -0.5 * parallelogram_defect(self.x, self.y, p), delta=1e-12)

    def test_inadmissible_quadruple(self):
        with self.assertRaises(PreconditionError):
            parallelogram_defect(LorentzVector(1, 0), LorentzVector(1, 0), 3)
        with self.assertRaises(PreconditionError):
            check_future_quadruple(SpaceDescriptor.lorentz_plane(3), LorentzVector(1, 0),
                                   LorentzVector(0.5, 0.6))


if __name__ == '__main__':
    unittest.main()
