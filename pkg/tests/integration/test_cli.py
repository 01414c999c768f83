"""End-to-end tests of the einstein-lab command line."""

import json

import pytest

from einstein_lab.cli import build_parser, main

CORNER = ["--family", "cmetric", "--mu", "16", "--nu", "8"]


def _error_record(stderr: str) -> dict:
    records = [json.loads(line) for line in stderr.splitlines() if line.startswith("{")]
    assert len(records) == 1
    return records[0]


class TestVerify:
    def test_passes(self, capsys):
        assert main(["verify", *CORNER, "-n", "5"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["passed"]
        assert report["family"] == "cmetric"
        assert len(report["points"]) == 5
        for row in report["points"]:
            assert row["closed_form_rel_error"] <= 1e-7
            assert row["norm_gap"] == pytest.approx(24.0, abs=1e-6)

    def test_wrong_lambda_fails(self, capsys):
        assert main(["verify", *CORNER, "-n", "3", "--lambda", "0"]) == 1
        assert not json.loads(capsys.readouterr().out)["passed"]

    def test_single_point_csv(self, capsys):
        assert main(["verify", *CORNER, "--point=-0.6,-0.2", "--format", "csv"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("x,y,einstein_residual")
        assert len(lines) == 2

    def test_point_outside_domain(self, capsys):
        assert main(["verify", *CORNER, "--point", "0.5,0.2"]) == 2
        captured = capsys.readouterr()
        assert captured.out == ""
        assert _error_record(captured.err)["error"] == "outside_domain"


class TestErrors:
    def test_validation_error(self, capsys):
        params = '{"family": "cmetric", "params": {"mu": 1, "zeta": 2}}'
        assert main(["roots", "--params", params]) == 2
        assert _error_record(capsys.readouterr().err)["error"] == "validation"

    def test_params_must_be_an_object(self, capsys):
        assert main(["roots", "--params", "[1,2]"]) == 2
        captured = capsys.readouterr()
        assert "Traceback" not in captured.err
        assert _error_record(captured.err)["error"] == "validation"

    def test_missing_command(self, capsys):
        assert main([]) == 2
        assert _error_record(capsys.readouterr().err)["error"] == "usage"

    def test_unknown_flag(self, capsys):
        assert main(["roots", *CORNER, "--frobnicate"]) == 2
        assert _error_record(capsys.readouterr().err)["error"] == "usage"

    def test_missing_family(self, capsys):
        assert main(["roots"]) == 2
        assert _error_record(capsys.readouterr().err)["error"] == "usage"

    def test_half_given_periods(self, capsys):
        assert main(["weyl-l2", *CORNER, "--period-phi", "1"]) == 2
        assert _error_record(capsys.readouterr().err)["error"] == "usage"


class TestRegion:
    def test_csv(self, capsys):
        assert main(["region", "--mu-range", "1,16,2", "--nu-range", "0.5,8,2"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == (
            "mu,nu,inside,nearest_curve,distance,"
            "nu=2sqrt(mu),nu=mu-2sqrt(mu),nu=2mu,nu=-mu"
        )
        assert len(lines) == 5
        assert lines[1].startswith("1,0.5,True,")

    def test_empty_grid(self, capsys):
        assert main(["region", "--mu-range", "0,1,0"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("mu,nu,inside")
        assert len(out.splitlines()) == 1

    def test_json(self, capsys):
        argv = ["region", "--mu-range", "16,16,1", "--nu-range", "8,8,1", "--format", "json"]
        assert main(argv) == 0
        grid = json.loads(capsys.readouterr().out)["grid"]
        assert grid == [
            {
                "mu": 16.0,
                "nu": 8.0,
                "inside": False,
                "nearest_curve": "nu=2sqrt(mu)",
                "distance": 0.0,
            }
        ]

    def test_svg_is_deterministic(self, tmp_path):
        paths = [tmp_path / "a.svg", tmp_path / "b.svg"]
        for path in paths:
            argv = ["region", "--mu-range", "0,17,6", "--nu-range=-1,13,5", "--format", "svg"]
            assert main([*argv, "--out", str(path)]) == 0
        first, second = (p.read_text(encoding="utf-8") for p in paths)
        assert first.startswith("<?xml")
        assert first == second

    def test_bad_range(self, capsys):
        assert main(["region", "--mu-range", "0,1"]) == 2
        assert _error_record(capsys.readouterr().err)["error"] == "usage"


class TestClassify:
    def test_auto_periods(self, capsys):
        assert main(["classify", *CORNER, "--auto-periods"]) == 0
        report = json.loads(capsys.readouterr().out)
        kinds = [e["kind"] for e in report["bulk"]["ends"]]
        assert kinds == ["smooth_axis", "cusp", "cusp", "smooth_axis"]
        assert [e["kind"] for e in report["boundary"]] == [
            "smooth",
            "separating_cusp",
            "separating_cusp",
            "smooth",
        ]
        assert len(report["regions"]) == 3

    def test_cuspidal_naked_family(self, capsys):
        argv = ["classify", "--family", "naked", "--alpha1=-1", "--alpha4", "1", "--auto-periods"]
        assert main(argv) == 0
        boundary = json.loads(capsys.readouterr().out)["boundary"]
        assert boundary[0]["kind"] == "cusp"
        assert boundary[-1]["kind"] == "cusp"

    def test_default_naked_family(self, capsys):
        argv = ["classify", "--family", "naked", "--alpha1=-0.5", "--alpha4", "3", "--auto-periods"]
        assert main(argv) == 0
        boundary = json.loads(capsys.readouterr().out)["boundary"]
        assert boundary[-1]["kind"] == "naked"

    def test_requires_periods(self, capsys):
        assert main(["classify", *CORNER]) == 2
        record = _error_record(capsys.readouterr().err)
        assert record["error"] == "precondition_violated"
        assert record["message"].startswith("periods")


class TestSweep:
    def test_neck_csv(self, capsys):
        assert main(["sweep", "--path", "neck", "--family", "cmetric", "--mu", "12"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "eps,center,partner,location,min_circumference,shape_ratio"
        assert len(lines) == 4

    def test_cone_to_naked(self, capsys):
        argv = ["sweep", "--path", "cone-to-naked", "--values=-0.1,-0.01", "--format", "json"]
        assert main(argv) == 0
        rows = json.loads(capsys.readouterr().out)["rows"]
        assert [r["kind"] for r in rows] == ["cone", "cone"]
        assert rows[0]["angle"] > rows[1]["angle"]

    def test_workers_keep_input_order(self, capsys):
        argv = ["sweep", "--path", "cusp-to-naked", "--values", "0.1,0.05"]
        assert main(argv) == 0
        serial = capsys.readouterr().out
        assert main([*argv, "--workers", "2"]) == 0
        assert capsys.readouterr().out == serial
        assert serial.splitlines()[1].startswith("0.1,")

    def test_cusp_to_naked_weyl_l2(self, capsys):
        argv = ["sweep", "--path", "cusp-to-naked", "--with-l2", "--format", "json"]
        assert main(argv) == 0
        rows = json.loads(capsys.readouterr().out)["rows"]
        assert [r["parameter"] for r in rows] == pytest.approx([0.1, 0.01, 0.001, 0.0])
        norms = [r["weyl_l2"] for r in rows[:-1]]
        assert all(a < b for a, b in zip(norms, norms[1:]))
        assert rows[-1]["kind"] == "naked"
        assert rows[-1]["weyl_l2"] is None

    def test_degeneration_needs_naked_family(self, capsys):
        assert main(["sweep", "--path", "cusp-to-naked", *CORNER]) == 2
        assert _error_record(capsys.readouterr().err)["error"] == "precondition_violated"


class TestBoundaryAndVolume:
    def test_boundary_endpoint(self, capsys):
        argv = ["boundary", "--family", "naked", "--alpha1", "-1", "--alpha4", "1"]
        assert main([*argv, "--endpoint", "1", "--auto-periods"]) == 0
        (end,) = json.loads(capsys.readouterr().out)["ends"]
        assert end["kind"] == "cusp"
        assert end["pattern"] == [3, 1]

    def test_boundary_curvature(self, capsys):
        argv = ["boundary", "--family", "cmetric", "--mu", "0", "--nu", "0"]
        assert main([*argv, "--endpoint", "lo", "--auto-periods", "--at=-0.5"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["curvature"]["sectional_curvature"] == pytest.approx(0.25)
        assert report["ends"][0]["kind"] == "smooth"

    def test_weyl_l2(self, capsys):
        assert main(["weyl-l2", *CORNER]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["value"] == pytest.approx(256.0, rel=1e-9)
        assert report["schema"] == "einstein-lab/1"

    def test_out_file(self, tmp_path, capsys):
        target = tmp_path / "l2.json"
        assert main(["weyl-l2", *CORNER, "--out", str(target)]) == 0
        assert capsys.readouterr().out == ""
        assert json.loads(target.read_text(encoding="utf-8"))["value"] == pytest.approx(256.0)

    def test_no_svg_for_json_only_commands(self, capsys):
        assert main(["weyl-l2", *CORNER, "--format", "svg"]) == 2
        assert _error_record(capsys.readouterr().err)["error"] == "usage"


def test_parser_lists_every_command():
    parser = build_parser()
    help_text = parser.format_help()
    for command in ("verify", "curvature", "roots", "region", "classify", "sweep", "boundary"):
        assert command in help_text
