import json

import pytest
from hypothesis import given, settings, strategies as st

from lyzlab.cli import ConfigError, RunConfig, main
from lyzlab.io import read_field, read_json


@settings(max_examples=50)
@given(
    st.integers(0, 2**64 - 1),
    st.sampled_from([4, 6, 8, 16]),
    st.floats(1e-4, 0.1),
    st.floats(1e-12, 1e-6),
)
def test_config_json_round_trip(seed, N, t_min, tol):
    cfg = RunConfig(seed=seed, N=N)
    cfg.schedule.t_min = t_min
    cfg.solver.tol = tol
    assert RunConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        "[]",
        '{"bogus": 1}',
        '{"n": 7}',
        '{"N": 5}',
        '{"seed": -1}',
        '{"chi": {"kind": "other"}}',
        '{"chi": {"C": [[1.0]]}}',
        '{"schedule": {"ratio": 1.5}}',
        '{"n": 3, "chi": {"kind": "suite4d"}}',
    ],
)
def test_bad_configs_are_rejected(text):
    with pytest.raises(ConfigError):
        RunConfig.from_json(text)


def test_bad_config_exits_1(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"N": 5}')
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert main(["gen", "--threads", "0", "--out", str(tmp_path / "o")]) == 1


def test_missing_input_exits_3(tmp_path):
    assert main(["gen", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 3
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"chi_path": str(tmp_path / "nope.lyzf")}))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3


def test_non_critical_path_exits_1(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"n": 2, "N": 4, "chi": {"C": [[1.0, 0.0], [0.0, 0.5]]}}')
    assert main(["path", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_gen_is_deterministic_and_flags_override(tmp_path):
    for d in ("a", "b"):
        assert main(["gen", "--out", str(tmp_path / d), "--grid", "4", "--seed", "9"]) == 0
    a = (tmp_path / "a" / "chi.lyzf").read_bytes()
    assert a == (tmp_path / "b" / "chi.lyzf").read_bytes()
    chi = read_field(tmp_path / "a" / "chi.lyzf")
    assert chi.grid.N == 4 and chi.grid.n == 3
    cfg = read_json(tmp_path / "a" / "config.json")
    assert cfg["seed"] == 9 and cfg["N"] == 4


def test_gen_solve_path_report(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "n": 3, "N": 4,
        "chi": {"modes": [[[1, 0, 0, 1, 0, 0], 0.05, 0.0]]},
        "schedule": {"t0": 0.2, "ratio": 0.5, "t_min": 0.05},
    }))
    out = tmp_path / "o"
    assert main(["gen", "--config", str(cfg), "--out", str(out)]) == 0
    cfg2 = tmp_path / "c2.json"
    data = json.loads(cfg.read_text())
    data["chi_path"] = str(out / "chi.lyzf")
    cfg2.write_text(json.dumps(data))
    assert main(["solve", "--config", str(cfg2), "--out", str(out)]) == 0
    assert read_json(out / "u.json")["converged"] is True
    assert main(["path", "--config", str(cfg2), "--out", str(out)]) == 0
    header = (out / "trace.csv").read_text().splitlines()[0]
    assert header.startswith("t,hat_theta,target_theta,c_solved")
    assert read_json(out / "summary.json")["all_converged"] is True
    assert main(["weaklab", "--out", str(out), "--samples", "200", "--n", "2"]) == 0
    assert main(["report", "--out", str(out)]) == 0
    report = read_json(out / "report.json")
    assert report["reports"]["weaklab.json"] is True and report["all_pass"] is True


def test_report_on_missing_directory_exits_3(tmp_path):
    assert main(["report", "--out", str(tmp_path / "absent")]) == 3
