"""End-to-end checks of the psf executable: exit codes, artifacts, schemas, stable headers."""

import csv
import json
import os
import subprocess
import sys
import tempfile
import time
import unittest
from pathlib import Path

import jsonschema

PSF, SCHEMAS, GOLDEN, CONFIGS = (Path(p).resolve() for p in sys.argv[1:5])


def run(*args, env=None, cwd=None):
    return subprocess.run([str(PSF), *map(str, args)], capture_output=True, text=True, env=env, cwd=cwd)


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def validate(path, name):
    jsonschema.validate(json.loads(Path(path).read_text()), schema(name))


def rows_of(path):
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def header(path):
    return Path(path).read_text().splitlines()[0]


class Cli(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def config(self, name, **sections):
        path = self.tmp / name
        path.write_text(json.dumps(sections, indent=2))
        return path

    def test_feasibility_table(self):
        r = run("feasibility")
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertIn(" 1000 ", r.stdout)
        self.assertIn(" 1000000", r.stdout)
        self.assertIn("K*tau", r.stdout)
        self.assertIn("K/tau", r.stdout)
        self.assertEqual(run("feasibility", "--alpha", "0").returncode, 1)

    def test_shipped_config_validates(self):
        validate(CONFIGS / "default.json", "config")

    def test_rollout_artifacts(self):
        a, b = self.tmp / "a", self.tmp / "b"
        self.assertEqual(run("rollout", "--out", a).returncode, 0)
        self.assertEqual(run("rollout", "--out", b).returncode, 0)
        for name in ("trajectory.csv", "trajectory_meta.json"):
            self.assertEqual((a / name).read_bytes(), (b / name).read_bytes(), name)
        validate(a / "trajectory_meta.json", "trajectory_meta")
        self.assertEqual(header(a / "trajectory.csv"), header(GOLDEN / "trajectory_header.csv"))
        rows = rows_of(a / "trajectory.csv")
        self.assertEqual(len(rows), 1200)
        self.assertEqual(rows[-1]["reward"], "4")

    def test_filter_smoke_and_schemas(self):
        cfg = self.config("smoke.json", grid={"n": 2})
        out = self.tmp / "smoke"
        start = time.monotonic()
        r = run("filter", "--config", cfg, "--out", out)
        elapsed = time.monotonic() - start
        self.assertIn(r.returncode, (0, 2, 3), r.stderr)
        self.assertLess(elapsed, 1.0)
        validate(out / "report.json", "report")
        validate(out / "timings.json", "timings")
        validate(out / "config.json", "config")
        self.assertEqual(header(out / "scores.csv"), header(GOLDEN / "scores_header.csv"))
        report = json.loads((out / "report.json").read_text())
        for rnd in report["rounds"]:
            for ev in rnd["events"]:
                field = out / ev["field_file"]
                self.assertEqual(header(field), header(GOLDEN / "field_header.csv"))
                self.assertEqual(len(field.read_text().splitlines()), 1 + 2 * 2)

    def test_default_filter_table(self):
        out = self.tmp / "default"
        r = run("filter", "--out", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        rows = rows_of(out / "scores.csv")
        self.assertEqual(sorted((row["cause"], row["distribution"]) for row in rows),
                         [("contact", "p"), ("contact", "p_prime"), ("motor", "p"), ("motor", "p_prime")])
        motor_nominal = next(row for row in rows if row["cause"] == "motor" and row["distribution"] == "p")
        self.assertGreaterEqual(float(motor_nominal["score"]), 0.75)
        self.assertEqual(motor_nominal["safe"], "0")
        summary = run("report", out / "report.json")
        self.assertEqual(summary.returncode, 0)
        self.assertIn("decision: rollout", summary.stdout)

    def test_workers_do_not_change_the_report(self):
        cfg = self.config("g8.json", grid={"n": 8})
        a, b = self.tmp / "w1", self.tmp / "w8"
        self.assertEqual(run("filter", "--config", cfg, "--workers", 1, "--seed", 5, "--out", a).returncode, 0)
        self.assertEqual(run("filter", "--config", cfg, "--workers", 8, "--seed", 5, "--out", b).returncode, 0)
        self.assertEqual((a / "report.json").read_bytes(), (b / "report.json").read_bytes())
        self.assertEqual(json.loads((a / "report.json").read_text())["seed"], 5)

    def test_exit_codes(self):
        exhausted = self.config("exhausted.json", grid={"n": 4}, probe={"budget": 0})
        self.assertEqual(run("filter", "--config", exhausted, "--out", self.tmp / "e").returncode, 3)
        narrow = self.config("narrow.json", grid={"n": 4}, safety={"epsilon": 0.1},
                             distribution={"sigma": {"mass": 0.05, "friction": 0.05}})
        self.assertEqual(run("filter", "--config", narrow, "--out", self.tmp / "n").returncode, 2)
        heavy = self.config("heavy.json", grid={"n": 4}, distribution={"mean": {"mass": 2.0}})
        r = run("filter", "--config", heavy, "--out", self.tmp / "h")
        self.assertEqual(r.returncode, 2)
        self.assertIsNotNone(json.loads((self.tmp / "h" / "report.json").read_text())["rounds"][0]["nominal_unsafe"])

    def test_config_errors(self):
        bad = self.tmp / "bad.json"
        bad.write_text('{\n  "grid": {"n": 4},\n  "safety": {\n    "epsilon": 1.5\n  }\n}\n')
        r = run("filter", "--config", bad)
        self.assertEqual(r.returncode, 1)
        self.assertIn(f"{bad}:4: safety.epsilon", r.stderr)
        r = run("rollout", "--config", bad)
        self.assertEqual(r.returncode, 1)
        self.assertEqual(run("filter", "--config", self.tmp / "missing.json").returncode, 1)
        self.assertEqual(run().returncode, 1)
        self.assertEqual(run("report", self.tmp / "missing.json").returncode, 1)

    def test_output_dir_environment(self):
        env = dict(os.environ, PSF_OUTPUT_DIR=str(self.tmp / "from_env"))
        self.assertEqual(run("rollout", env=env, cwd=self.tmp).returncode, 0)
        self.assertTrue((self.tmp / "from_env" / "trajectory.csv").exists())
        self.assertEqual(run("rollout", "--out", self.tmp / "flag", env=env, cwd=self.tmp).returncode, 0)
        self.assertTrue((self.tmp / "flag" / "trajectory.csv").exists())


if __name__ == "__main__":
    unittest.main(argv=sys.argv[:1], verbosity=2)
