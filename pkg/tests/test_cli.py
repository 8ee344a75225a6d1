import json

import numpy as np
import pytest

from reachcert.cli import run


def _write_system(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture
def random_walk_file(tmp_path):
    return _write_system(
        tmp_path,
        "rw.json",
        {
            "A": [[1.0]],
            "B": [[1.0]],
            "noise": {"kind": "uniform-box", "half_widths": [1.0]},
            "target": {"center": [0.0], "radius": 2.0, "norm": "euclidean"},
        },
    )


@pytest.fixture
def stable_file(tmp_path):
    return _write_system(
        tmp_path,
        "stable.json",
        {
            "A": [[0.5, 0.1], [0.0, 0.3]],
            "B": [[1.0, 0.0], [0.0, 1.0]],
            "noise": {"kind": "uniform-box", "half_widths": [1.0, 1.0]},
            "target": {"center": [0.0, 0.0], "radius": 1.0, "norm": "euclidean"},
        },
    )


@pytest.fixture
def unstable_file(tmp_path):
    return _write_system(
        tmp_path,
        "unstable.json",
        {
            "A": [[2.0]],
            "B": [[1.0]],
            "noise": {"kind": "uniform-box", "half_widths": [1.0]},
            "target": {"center": [0.0], "radius": 1.0, "norm": "euclidean"},
        },
    )


class TestClassifyCommand:
    def test_random_walk_verdict(self, random_walk_file, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert run(["classify", "--system", random_walk_file, "--out", out]) == 0
        report = json.loads((tmp_path / "out" / "classify.json").read_text())
        assert report["classify"]["outcome"] == "ReachableCritical"
        assert report["input"]["sha256"]
        assert "ReachableCritical" in capsys.readouterr().out

    def test_missing_system_file(self, tmp_path):
        assert run(["classify", "--system", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2

    def test_missing_target(self, tmp_path):
        path = _write_system(
            tmp_path,
            "notarget.json",
            {"A": [[1.0]], "B": [[1.0]], "noise": {"kind": "uniform-box", "half_widths": [1.0]}},
        )
        assert run(["classify", "--system", path, "--out", str(tmp_path)]) == 2

    def test_target_flag_overrides(self, tmp_path):
        path = _write_system(
            tmp_path,
            "notarget.json",
            {"A": [[1.0]], "B": [[1.0]], "noise": {"kind": "uniform-box", "half_widths": [1.0]}},
        )
        assert run(
            ["classify", "--system", path, "--target-radius", "1.0", "--out", str(tmp_path)]
        ) == 0

    def test_byte_identical_reports_modulo_timing(self, random_walk_file, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = str(tmp_path / name)
            assert run(["classify", "--system", random_walk_file, "--out", out]) == 0
            report = json.loads((tmp_path / name / "classify.json").read_text())
            report.pop("timings")
            outs.append(json.dumps(report, sort_keys=True))
        assert outs[0] == outs[1]


class TestCertifyVerifyRoundTrip:
    def test_stable_round_trip(self, stable_file, tmp_path):
        out = str(tmp_path / "out")
        assert run(["certify", "--system", stable_file, "--out", out]) == 0
        cert_path = str(tmp_path / "out" / "certificate.json")
        assert (
            run(
                [
                    "verify",
                    "--system",
                    stable_file,
                    "--certificate",
                    cert_path,
                    "--samples",
                    "2000",
                    "--out",
                    out,
                ]
            )
            == 0
        )
        report = json.loads((tmp_path / "out" / "verify.json").read_text())
        assert report["passed"] is True
        assert report["drift"]["exact"] is True

    def test_no_certificate_for_unstable(self, unstable_file, tmp_path, capsys):
        assert run(["certify", "--system", unstable_file, "--out", str(tmp_path)]) == 2
        assert "no certificate exists" in capsys.readouterr().err

    def test_bad_certificate_schema(self, stable_file, tmp_path):
        bad = tmp_path / "bad_cert.json"
        bad.write_text(
            json.dumps(
                {
                    "kind": "quadratic",
                    "Q": [[1.0, 2.0], [2.0, 1.0]],
                    "compact_radius_sq": 1.0,
                    "r0": 0.5,
                    "b": 0.1,
                    "delta": 0.05,
                }
            )
        )
        assert (
            run(
                [
                    "verify",
                    "--system",
                    stable_file,
                    "--certificate",
                    str(bad),
                    "--out",
                    str(tmp_path),
                ]
            )
            == 2
        )

    def test_failing_certificate_exits_one(self, random_walk_file, tmp_path):
        # Identity Q on the random walk: positive drift everywhere.
        bad = tmp_path / "wrong.json"
        bad.write_text(
            json.dumps(
                {
                    "kind": "quadratic",
                    "Q": [[1.0]],
                    "compact_radius_sq": 1.0,
                    "r0": 0.9,
                    "b": 0.5,
                    "delta": 0.05,
                }
            )
        )
        assert (
            run(
                [
                    "verify",
                    "--system",
                    random_walk_file,
                    "--certificate",
                    str(bad),
                    "--samples",
                    "2000",
                    "--out",
                    str(tmp_path),
                ]
            )
            == 1
        )


class TestSimulateCommand:
    def test_report_and_csv(self, random_walk_file, tmp_path):
        out = str(tmp_path / "out")
        rc = run(
            [
                "simulate",
                "--system",
                random_walk_file,
                "--x0",
                "5",
                "--horizon",
                "2000",
                "--trajectories",
                "50",
                "--csv",
                "--csv-trajectories",
                "2",
                "--out",
                out,
            ]
        )
        assert rc == 0
        report = json.loads((tmp_path / "out" / "simulate.json").read_text())
        assert report["ensemble"]["trajectories"] == 50
        lines = (tmp_path / "out" / "trajectories.csv").read_text().splitlines()
        assert lines[0] == "trajectory_id,k,x1"
        assert len(lines) == 1 + 2 * 2001

    def test_decay_occupancy_csv(self, random_walk_file, tmp_path):
        out = str(tmp_path / "out")
        rc = run(
            [
                "simulate",
                "--system",
                random_walk_file,
                "--horizon",
                "10",
                "--trajectories",
                "2000",
                "--decay",
                "--csv",
                "--csv-trajectories",
                "0",
                "--out",
                out,
            ]
        )
        assert rc == 0
        report = json.loads((tmp_path / "out" / "simulate.json").read_text())
        assert "slope" in report["decay"]
        lines = (tmp_path / "out" / "occupancy.csv").read_text().splitlines()
        assert lines[0] == "k,p_hat"


class TestReproCommand:
    def test_example2(self, tmp_path, capsys):
        assert run(["repro", "example2", "--samples", "20000", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "repro-example2.json").read_text())
        assert report["passed"] is True
        assert report["example2"]["quadratics"][0]["delta_v"] == pytest.approx(1.0 / 6.0)

    def test_example1_refute(self, tmp_path):
        assert run(["repro", "example1-refute", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "repro-example1-refute.json").read_text())
        assert all(row["witness_i"] is not None for row in report["refutations"])

    def test_example1_bounds(self, tmp_path):
        assert run(["repro", "example1-bounds", "--samples", "2000", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "repro-example1-bounds.json").read_text())
        assert all(c["fraction_within_bounds"] == 1.0 for c in report["bounds"]["cases"])

    def test_example1_certificate(self, tmp_path):
        assert (
            run(["repro", "example1-certificate", "--samples", "3000", "--out", str(tmp_path)]) == 0
        )
        report = json.loads((tmp_path / "repro-example1-certificate.json").read_text())
        assert report["drift"]["passed"] is True
        assert report["variant"]["passed"] is True
