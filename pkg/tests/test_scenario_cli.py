import json

import pytest

from bakrylab.cli import builtin_names, builtin_text, main
from bakrylab.runner import run
from bakrylab.scenario import ScenarioError, format_scenario, parse_scenario, schema_document

MINIMAL = """
name = tiny
check = integrate

[model]
n = 4

[parameters]
x0 = -0.5
t_max = 3
"""


def test_parse_minimal_applies_defaults():
    cfg = parse_scenario(MINIMAL)
    assert cfg.name == "tiny" and cfg.check == "integrate"
    assert cfg.output == "bakrylab-out/tiny"
    assert cfg.params["x0"] == -0.5 and cfg.params["rtol"] == 1e-10
    assert cfg.params["N"].is_infinite
    model = cfg.model.build()
    assert model.n == 4 and model.warp(0.3) == 1.0


def test_parse_warp_expression_and_comments():
    text = MINIMAL.replace("n = 4", 'n = 3\nwarp = "exp(-t)"  # contracting')
    model = parse_scenario(text).model.build()
    assert model.warp(1.0) == pytest.approx(0.36787944117144233)


@pytest.mark.parametrize(
    "edit, line, fragment",
    [
        (("x0 = -0.5", "x0 = -0.5\nbogus = 1"), 10, "bogus"),
        (("n = 4", "n = 4\nwarp = exp(-t"), 7, "warp"),
        (("t_max = 3", "t_max = -1"), 10, "t_max"),
        (("n = 4", "n = 2.5"), 6, "n"),
        (("[parameters]", "[params]"), 8, "params"),
    ],
)
def test_errors_carry_line_numbers(edit, line, fragment):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(MINIMAL.replace(*edit))
    assert any(ln == line and fragment in msg for ln, msg in info.value.errors), info.value.errors


def test_large_N_bound_rejected_below_n():
    text = """name = b
check = lemma-bound
[model]
n = 4
[parameters]
bound = finite-N
N = 1
delta = 1
"""
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    assert info.value.errors[0][0] == 7 and "N > n" in info.value.errors[0][1]


def test_gap_dimension_rejected():
    with pytest.raises(ScenarioError, match="not admissible"):
        parse_scenario(MINIMAL.replace("x0 = -0.5", "x0 = -0.5\nN = 3"))


@pytest.mark.parametrize("name", builtin_names())
def test_canonical_form_round_trips(name):
    cfg = parse_scenario(builtin_text(name))
    text = format_scenario(cfg)
    again = parse_scenario(text)
    assert again == cfg
    assert format_scenario(again) == text
    assert again.config_hash == cfg.config_hash


def test_builtins_pass_and_are_deterministic(tmp_path):
    for name in builtin_names():
        cfg = parse_scenario(builtin_text(name))
        a = run(cfg, out=tmp_path / "a" / name)
        b = run(cfg, out=tmp_path / "b" / name)
        assert a.passed, (name, [v for v in a.verdicts if not v["passed"]])
        ra = (tmp_path / "a" / name / "report.json").read_bytes()
        assert ra == (tmp_path / "b" / name / "report.json").read_bytes()
        assert json.loads(ra)["config_hash"] == cfg.config_hash


def test_cli_run_and_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.scn"
    good.write_text(MINIMAL)
    assert main(["run", str(good), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "tiny" / "report.json").is_file()
    assert (tmp_path / "out" / "tiny" / "trajectory.csv").is_file()

    failing = tmp_path / "failing.scn"
    failing.write_text(MINIMAL + "expect_blowup = no\n")
    assert main(["run", str(failing), "--out", str(tmp_path / "out2")]) == 1

    bad = tmp_path / "bad.scn"
    bad.write_text(MINIMAL.replace("x0 = -0.5", "x0 = oops"))
    assert main(["run", str(bad)]) == 2
    assert main(["check", str(bad)]) == 2
    assert main(["check", str(good)]) == 0
    assert main(["run", "no-such-scenario"]) == 2
    err = capsys.readouterr().err
    assert "bad.scn:9" in err


def test_cli_parallel_jobs(tmp_path):
    names = builtin_names()[:3]
    assert main(["run", *names, "--jobs", "3", "--out", str(tmp_path)]) == 0
    assert all((tmp_path / n / "report.json").is_file() for n in names)


def test_cli_self_check(capsys):
    assert main(["check", "--seed", "7"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5 and "FAIL" not in out
    assert main(["check", "--seed", "-1"]) == 2


def test_cli_examples_and_schema(tmp_path, capsys):
    assert main(["examples"]) == 0
    listed = capsys.readouterr().out
    assert all(name in listed for name in builtin_names())
    path = tmp_path / "schema.json"
    assert main(["export-schema", "--out", str(path)]) == 0
    schema = json.loads(path.read_text())
    assert schema == json.loads(json.dumps(schema_document()))
    assert set(schema["checks"]) >= {"integrate", "theorem", "mcflow", "rigidity"}
