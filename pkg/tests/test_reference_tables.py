import contextlib
import io
import math
import os
import shutil
import sys
import tempfile
import unittest
from unittest.mock import patch

# Add project root to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from tools.core import P_INF
from utils import generate_reference_tables as tables


class TestReferenceTables(unittest.TestCase):
    def test_boundary_profile(self):
        lines = tables.boundary_profile_table([2.0, P_INF], 4).splitlines()
        self.assertEqual(lines[0], "p,phi,tau")
        self.assertEqual(len(lines), 1 + 2 * 5)
        self.assertEqual(lines[1], "2.0,0,1")
        p, phi, tau = lines[3].split(",")
        self.assertEqual(phi, "0.5")
        self.assertAlmostEqual(float(tau), math.sqrt(0.75), places=15)
        self.assertEqual(lines[5], "2.0,1,0")

    def test_identity_bound(self):
        lines = tables.identity_bound_table([1.0, 2.0]).splitlines()
        self.assertEqual(lines[0], "p,q,gh_identity_upper")
        self.assertEqual(lines[1], "1.0,1.0,0")
        self.assertAlmostEqual(float(lines[2].split(",")[2]), (math.sqrt(2) - 1) / 2, places=12)

    def test_omega_and_limits(self):
        omega = tables.omega_table([1.0, 2.0]).splitlines()
        self.assertEqual(omega[0], "N,omega_N")
        self.assertAlmostEqual(float(omega[1].split(",")[1]), 1.0, places=14)
        self.assertAlmostEqual(float(omega[2].split(",")[1]), 0.5, places=14)
        limits = tables.v_limit_table([2.0, P_INF], [1.0, 2.0]).splitlines()
        self.assertEqual(len(limits), 3)
        self.assertEqual(limits[1], "2.0,1,infinite,")
        self.assertTrue(limits[2].startswith("2.0,2,finite,"))

    def test_main_writes_every_table(self):
        output_dir = tempfile.mkdtemp(prefix="lorlab-tables-")
        try:
            argv = ["generate_reference_tables.py", "--p-grid", "1,2", "--samples", "8",
                    "--output-dir", output_dir]
            with patch.object(sys, "argv", argv), contextlib.redirect_stdout(io.StringIO()):
                tables.main()
            self.assertEqual(sorted(os.listdir(output_dir)),
                             ["boundary_profile.csv", "gh_identity_upper.csv", "omega_n.csv", "v_limits.csv"])
        finally:
            shutil.rmtree(output_dir)


if __name__ == '__main__':
    unittest.main()
