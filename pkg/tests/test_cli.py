import contextlib
import io
import json
import math
import os
import shutil
import sys
import tempfile
import unittest
from unittest.mock import patch

# Add project root to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import main
from tools.errors import InconclusiveError
from tools.run_config import build_parser, parse_config


class TestCommandLine(unittest.TestCase):
    def setUp(self):
        self.output_dir = tempfile.mkdtemp(prefix="lorlab-test-")
        self.env = patch.dict(os.environ, {"LORLAB_OUTPUT_DIR": self.output_dir})
        self.env.start()

    def tearDown(self):
        self.env.stop()
        if os.path.exists(self.output_dir):
            shutil.rmtree(self.output_dir)

    def run_cli(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            code = main.main(list(argv))
        return code, stdout.getvalue(), stderr.getvalue()

    def read(self, name):
        with open(os.path.join(self.output_dir, name)) as f:
            return f.read()

    def test_tau(self):
        code, out, _ = self.run_cli("tau", "--p", "1", "--from", "0,0", "--to", "3,1")
        self.assertEqual(code, 0)
        self.assertEqual(out.strip(), "2")

    def test_tau_infinity_and_cylinder(self):
        _, out, _ = self.run_cli("tau", "--p", "inf", "--from", "0,0", "--to", "3,1")
        self.assertEqual(out.strip(), "3")
        _, out, _ = self.run_cli("tau", "--p", "2", "--space", "cylinder", "--height", "1",
                                 "--from", "0,0.1", "--to", f"1,{2 * math.pi - 0.1}")
        self.assertAlmostEqual(float(out.strip()), math.sqrt(1 - 0.04), places=12)

    def test_validation_errors(self):
        code, _, err = self.run_cli("tau", "--p", "0.5", "--from", "0,0", "--to", "1,0")
        self.assertEqual(code, 2)
        self.assertIn("❌", err)
        self.assertEqual(self.run_cli("tau", "--bogus", "1")[0], 2)
        self.assertEqual(self.run_cli("tau", "--p", "2", "--from", "0,0")[0], 2)
        self.assertEqual(self.run_cli("net", "--height", "4")[0], 2)
        self.assertEqual(self.run_cli("gh-sweep", "--p-list", "2,1")[0], 2)
        self.assertEqual(self.run_cli("defect", "--p", "3", "--x", "1,0", "--y", "1,0")[0], 2)

    def test_inconclusive_exit_code(self):
        with patch("main.dimension_estimate", side_effect=InconclusiveError("no bracket")):
            code, _, err = self.run_cli("hausdorff", "--p", "1.5")
        self.assertEqual(code, 3)
        self.assertIn("inconclusive", err)

    def test_internal_error_exit_code(self):
        with patch("main.tau_p", side_effect=RuntimeError("boom")):
            code, _, _ = self.run_cli("tau", "--p", "3", "--from", "0,0", "--to", "1,0")
        self.assertEqual(code, 4)

    def test_net_to_stdout_and_file(self):
        code, out, _ = self.run_cli("net", "--p", "2", "--nt", "2", "--nx", "1")
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual(data["sep"], [[0, 1], [0, 0]])

        code, out, _ = self.run_cli("net", "--p", "2", "--nt", "2", "--nx", "1", "--out", "net.json")
        self.assertEqual(code, 0)
        self.assertIn("✓ wrote", out)
        self.assertEqual(json.loads(self.read("net.json"))["sep"], [[0, 1], [0, 0]])
        manifest = json.loads(self.read("net.json.manifest.json"))
        self.assertEqual(manifest["config"]["command"], "net")
        self.assertEqual(manifest["result"], {"points": 2})
        self.assertIn("wall_time_seconds", manifest)

    def test_defect(self):
        code, out, _ = self.run_cli("defect", "--p", "1", "--x", "2,0", "--y", "1,0.25", "--out", "e.json")
        self.assertEqual(code, 0)
        self.assertIn("E = 1", out)
        result = json.loads(self.read("e.json"))
        self.assertEqual(result["parallelogram_defect"], 1.0)

    def test_curvature_scan(self):
        code, out, _ = self.run_cli("curvature-scan", "--p", "4", "--x", "2,0", "--y", "1,0.25",
                                    "--lambda-last", "12", "--out", "profile.csv")
        self.assertEqual(code, 0)
        text = self.read("profile.csv")
        self.assertTrue(text.startswith("# command: curvature-scan"))
        self.assertIn("lambda,defect,comparison_median,space_median", text)
        result = json.loads(self.read("profile.csv.manifest.json"))["result"]
        self.assertAlmostEqual(result["fitted_exponent"], 1.0, delta=0.05)
        self.assertEqual(len(result["certificates"]), 4)
        self.assertEqual({c["verdict"] for c in result["certificates"]}, {"violatesLowerBound"})

    def test_curvature_scan_on_the_sphere(self):
        code, out, _ = self.run_cli("curvature-scan", "--space", "sphere", "--k", "1", "--sides", "1,1,1",
                                    "--lambda-first", "4", "--lambda-last", "10")
        self.assertEqual(code, 0)
        exponent = float(out.split("=")[1].split("(")[0])
        self.assertAlmostEqual(exponent, 3.0, delta=0.1)

    def test_noldus(self):
        code, out, _ = self.run_cli("noldus", "--p", "8", "--nt", "3", "--nx", "16", "--out", "noldus.csv")
        self.assertEqual(code, 0)
        self.assertIn("covering number", out)
        result = json.loads(self.read("noldus.csv.manifest.json"))["result"]
        self.assertEqual(result["slice_time"], 0.5)
        self.assertTrue(result["distinguishes_points"])
        self.assertGreater(len(result["steepness"]), 0)

    def test_gh_sweep_is_deterministic(self):
        argv = ["gh-sweep", "--p-list", "1,2", "--nt", "3", "--nx", "3", "--restarts", "1", "--seed", "3"]
        self.assertEqual(self.run_cli(*argv, "--out", "a.csv")[0], 0)
        self.assertEqual(self.run_cli(*argv, "--out", "b.csv", "--threads", "2")[0], 0)
        self.assertEqual(self.read("a.csv"), self.read("b.csv"))
        self.assertIn("p,q,upper_closed,upper_search,lower_noldus,mesh_t,mesh_x", self.read("a.csv"))

    def test_hausdorff(self):
        code, out, _ = self.run_cli("hausdorff", "--p", "1.5", "--max-levels", "20", "--out", "h.csv")
        self.assertEqual(code, 0)
        result = json.loads(self.read("h.csv.manifest.json"))["result"]
        self.assertAlmostEqual(result["dimension"], 1.5, delta=0.05)
        self.assertNotEqual(result["measure"], "infinite")
        self.assertIn(result["scheme"]["scheme"], ("tiltedSplit", "symmetricSplit"))
        self.assertEqual(self.run_cli("hausdorff", "--p", "inf")[0], 2)


class TestConfiguration(unittest.TestCase):
    def setUp(self):
        self.config_dir = tempfile.mkdtemp(prefix="lorlab-config-")

    def tearDown(self):
        shutil.rmtree(self.config_dir)

    def write(self, name, text):
        path = os.path.join(self.config_dir, name)
        with open(path, "w") as f:
            f.write(text)
        return path

    def test_flags_override_file(self):
        path = self.write("run.cfg", "# tau example\np = 1\nfrom = 0,0\nto = 3,1\n")
        cfg = parse_config(["tau", "--config", path])
        self.assertEqual(cfg.p, "1.0")
        self.assertEqual(cfg.to_event, (3.0, 1.0))
        cfg = parse_config(["tau", "--config", path, "--p", "2"])
        self.assertEqual(cfg.p, "2.0")
        self.assertEqual(cfg.from_event, (0.0, 0.0))

    def test_json_config(self):
        path = self.write("run.json", json.dumps({"p-list": "1,1.5,inf", "nt": 4, "nx": 4}))
        cfg = parse_config(["gh-sweep"], config_file=path)
        self.assertEqual(cfg.p_list, ["1.0", "1.5", "inf"])
        self.assertEqual(cfg.space, "cylinder")

    def test_unknown_key_is_rejected(self):
        path = self.write("bad.cfg", "colour = blue\n")
        stderr = io.StringIO()
        with contextlib.redirect_stderr(stderr):
            code = main.main(["tau", "--config", path])
        self.assertEqual(code, 2)

    def test_echo_reproduces_the_run(self):
        cfg = parse_config(["curvature-scan", "--p", "inf", "--k-probes", "1,-1"])
        again = type(cfg)(**cfg.echo())
        self.assertEqual(again, cfg)
        self.assertEqual(cfg.k_probes, [1.0, -1.0])

    def test_threads_from_environment(self):
        with patch.dict(os.environ, {"LORLAB_THREADS": "3"}):
            self.assertEqual(parse_config(["net"]).threads, 3)

    def test_help_lists_every_command(self):
        text = build_parser().format_help()
        for command in ("tau", "defect", "curvature-scan", "noldus", "gh-sweep", "hausdorff", "net"):
            self.assertIn(command, text)


if __name__ == '__main__':
    unittest.main()
