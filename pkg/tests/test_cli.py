"""Command-line behavior: scenario parsing, artifacts, exit codes.

Artifacts must be reproducible: the echoed scenario re-parses to an
equal Scenario, trace files are byte-identical across repeat runs and
thread settings, and the only timestamp lives in summary.json metadata.
"""

import json
import math
import os

import numpy as np
import pytest

from mlwave import (
    ConfigError,
    ForcingSpec,
    LinearProblem,
    OperatorSpecConfig,
    PicardConfig,
    SpectralField,
    make_operator,
    ml_e,
    solve_linear,
)
from mlwave.cli import Scenario, main, parse_scenario
from mlwave.mittag_leffler import DEFAULT_PRECISION, MLQuery

PI = math.pi


def scenario_doc(**over):
    doc = {
        "alpha": 1.5,
        "operator": {"kind": "dirichlet_laplacian_interval",
                     "lengths": [PI]},
        "u0": [1.0],
    }
    doc.update(over)
    return doc


def scenario_text(**over):
    return json.dumps(scenario_doc(**over))


def write_config(tmp_path, name="scn.json", **over):
    path = tmp_path / name
    path.write_text(scenario_text(**over))
    return str(path)


class TestParseScenario:
    def test_defaults_fill_in(self):
        scn = parse_scenario(scenario_text())
        assert scn.alpha == 1.5
        assert scn.N_modes == 8
        assert scn.u0 == (1.0,) + (0.0,) * 7
        assert scn.u1 == (0.0,) * 8
        assert scn.kind == "linear"
        assert scn.forcing is None and scn.nonlinearity is None
        assert scn.t_end == 1.0 and scn.dt == 0.01
        assert scn.picard["tol"] == 1e-10
        assert scn.picard["max_iter"] == 50
        assert scn.output is None

    def test_not_json(self):
        with pytest.raises(ConfigError, match="not valid JSON"):
            parse_scenario("{nope")

    def test_not_an_object(self):
        with pytest.raises(ConfigError, match="JSON object"):
            parse_scenario("[1, 2]")

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown scenario key"):
            parse_scenario(scenario_text(solver="magic"))

    def test_unknown_nested_keys(self):
        with pytest.raises(ConfigError, match="unknown operator key"):
            parse_scenario(scenario_text(
                operator={"kind": "dirichlet_laplacian_interval",
                          "lengths": [PI], "spin": 2}))
        with pytest.raises(ConfigError, match="unknown grid key"):
            parse_scenario(scenario_text(grid={"t_end": 1.0, "stop": 2.0}))
        with pytest.raises(ConfigError, match="unknown picard key"):
            parse_scenario(scenario_text(picard={"iterations": 3}))
        with pytest.raises(ConfigError, match="unknown forcing key"):
            parse_scenario(scenario_text(forcing={"kind": "zero", "amp": 1}))
        with pytest.raises(ConfigError, match="unknown nonlinearity key"):
            parse_scenario(scenario_text(
                nonlinearity={"kind": "sine", "c": 0.1}))

    def test_missing_required_key(self):
        doc = scenario_doc()
        del doc["u0"]
        with pytest.raises(ConfigError, match="missing required key 'u0'"):
            parse_scenario(json.dumps(doc))

    def test_violations_are_itemized(self):
        with pytest.raises(ConfigError) as err:
            parse_scenario(scenario_text(
                alpha=0.5, grid={"t_end": 1.0, "dt": 0.3}))
        msg = str(err.value)
        assert msg.startswith("invalid scenario:")
        assert "alpha must lie in (1, 2]" in msg
        assert "does not divide" in msg
        assert msg.count("\n  - ") == 2

    def test_classical_limit_needs_flag(self):
        with pytest.raises(ConfigError, match="--allow-limit"):
            parse_scenario(scenario_text(alpha=2.0))
        scn = parse_scenario(scenario_text(alpha=2.0), allow_limit=True)
        assert scn.alpha == 2.0

    def test_classical_limit_rejects_nonlinearity(self):
        text = scenario_text(alpha=2.0, nonlinearity={"kind": "zero"})
        with pytest.raises(ConfigError, match="alpha < 2"):
            parse_scenario(text, allow_limit=True)

    def test_mode_profile_names(self):
        scn = parse_scenario(scenario_text(u0="phi3", N_modes=4))
        assert scn.u0 == (0.0, 0.0, 1.0, 0.0)
        scn = parse_scenario(scenario_text(u0="zero", N_modes=2))
        assert scn.u0 == (0.0, 0.0)

    def test_mode_profile_out_of_range(self):
        with pytest.raises(ConfigError, match="exceeds N_modes"):
            parse_scenario(scenario_text(u0="phi9", N_modes=4))

    def test_unknown_profile_name(self):
        with pytest.raises(ConfigError, match="unknown profile name"):
            parse_scenario(scenario_text(u0="gaussian"))

    def test_coefficient_list_pads(self):
        scn = parse_scenario(scenario_text(u0=[1.0, -2.0], N_modes=5))
        assert scn.u0 == (1.0, -2.0, 0.0, 0.0, 0.0)

    def test_coefficient_list_too_long(self):
        with pytest.raises(ConfigError, match="exceed N_modes"):
            parse_scenario(scenario_text(u0=[1.0] * 9, N_modes=4))

    def test_coefficients_from_file(self, tmp_path):
        f = tmp_path / "u0.csv"
        f.write_text("n,c_n\n1,0.5\n3,-2.0\n")
        scn = parse_scenario(scenario_text(u0={"file": str(f)}, N_modes=4))
        assert scn.u0 == (0.5, 0.0, -2.0, 0.0)

    def test_coefficient_file_missing(self, tmp_path):
        bad = str(tmp_path / "nope.csv")
        with pytest.raises(ConfigError, match="file not found"):
            parse_scenario(scenario_text(u0={"file": bad}))

    def test_coefficient_file_mode_out_of_range(self, tmp_path):
        f = tmp_path / "u0.csv"
        f.write_text("n,c_n\n7,1.0\n")
        with pytest.raises(ConfigError, match="outside 1..4"):
            parse_scenario(scenario_text(u0={"file": str(f)}, N_modes=4))

    def test_forcing_and_nonlinearity_exclusive(self):
        with pytest.raises(ConfigError, match="not both"):
            parse_scenario(scenario_text(
                forcing={"kind": "zero"},
                nonlinearity={"kind": "zero"}))

    def test_step_must_divide_horizon(self):
        with pytest.raises(ConfigError, match="does not divide"):
            parse_scenario(scenario_text(grid={"t_end": 1.0, "dt": 0.3}))

    def test_mode_count_validation(self):
        with pytest.raises(ConfigError, match="positive integer"):
            parse_scenario(scenario_text(N_modes=0))
        with pytest.raises(ConfigError, match="positive integer"):
            parse_scenario(scenario_text(N_modes=True))

    def test_forcing_profile_resolved(self):
        scn = parse_scenario(scenario_text(
            N_modes=3,
            forcing={"kind": "separable", "g": "phi2",
                     "h_name": "constant", "h_params": {"value": 2}}))
        assert scn.forcing["g"] == [0.0, 1.0, 0.0]
        assert scn.forcing["h_params"] == {"value": 2.0}

    def test_forcing_unknown_kind(self):
        with pytest.raises(ConfigError, match="forcing: unknown kind"):
            parse_scenario(scenario_text(forcing={"kind": "pulse"}))

    def test_nonlinearity_catalog_error_is_itemized(self):
        with pytest.raises(ConfigError, match="nonlinearity:"):
            parse_scenario(scenario_text(
                nonlinearity={"kind": "power", "params": {"r": 3.0}}))

    def test_picard_overrides_are_validated(self):
        with pytest.raises(ConfigError, match="picard:"):
            parse_scenario(scenario_text(picard={"tol": -1.0}))
        scn = parse_scenario(scenario_text(
            nonlinearity={"kind": "sine", "params": {"c": 0.1}},
            picard={"max_iter": 30, "window_init": 0.25}))
        assert scn.picard["max_iter"] == 30
        assert scn.picard["window_init"] == 0.25
        assert scn.picard["tol"] == 1e-10

    def test_echo_round_trip_linear(self, tmp_path):
        f = tmp_path / "u0.csv"
        f.write_text("n,c_n\n1,0.5\n2,-0.25\n")
        scn = parse_scenario(scenario_text(
            N_modes=4,
            u0={"file": str(f)},
            u1="phi2",
            forcing={"kind": "separable", "g": [1, 0.5],
                     "h_name": "sinusoid",
                     "h_params": {"amplitude": 2, "omega": 3, "phase": 0}},
            grid={"t_end": 2, "dt": 0.02},
            output="results"))
        again = parse_scenario(json.dumps(scn.echo()))
        assert again == scn
        # echoed document stands alone: no reference to the input file
        assert "file" not in json.dumps(scn.echo())

    def test_echo_round_trip_semilinear(self):
        scn = parse_scenario(scenario_text(
            N_modes=2,
            u0=[0.5, -0.25],
            u1=[0, 0.3],
            nonlinearity={"kind": "power", "params": {"c": 1, "r": 3}},
            picard={"tol": 1e-11, "window_init": 0.5}))
        again = parse_scenario(json.dumps(scn.echo()))
        assert again == scn
        assert isinstance(again, Scenario)

    def test_echo_round_trip_classical_limit(self):
        scn = parse_scenario(scenario_text(alpha=2.0), allow_limit=True)
        again = parse_scenario(json.dumps(scn.echo()), allow_limit=True)
        assert again == scn


class TestSolveLinearCli:
    def config(self, tmp_path):
        return write_config(
            tmp_path,
            N_modes=3,
            u0=[1.0, 0.5],
            u1="phi2",
            forcing={"kind": "separable", "g": [2.0],
                     "h_name": "constant", "h_params": {"value": 1.0}})

    def test_writes_all_artifacts(self, tmp_path):
        cfg = self.config(tmp_path)
        out = tmp_path / "out"
        assert main(["solve", "linear", "--config", cfg,
                     "--out", str(out)]) == 0
        assert (out / "trace.csv").is_file()
        assert (out / "norms.csv").is_file()
        assert (out / "summary.json").is_file()

        header = (out / "trace.csv").read_text().splitlines()[0]
        assert header == ("t,u_c_1,u_c_2,u_c_3,dtu_c_1,dtu_c_2,dtu_c_3,"
                          "dalpha_c_1,dalpha_c_2,dalpha_c_3")
        nheader = (out / "norms.csv").read_text().splitlines()[0]
        assert nheader == "t,norm_Vgamma_u,norm_L2_dtu,norm_Vminusgamma_dalpha"

    def test_trace_matches_library_solution(self, tmp_path):
        cfg = self.config(tmp_path)
        out = tmp_path / "out"
        main(["solve", "linear", "--config", cfg, "--out", str(out)])

        op = make_operator(OperatorSpecConfig(
            kind="dirichlet_laplacian_interval", lengths=(PI,)))
        p = LinearProblem(
            op, 1.5,
            SpectralField(op, np.array([1.0, 0.5, 0.0]), 3),
            SpectralField(op, np.array([0.0, 1.0, 0.0]), 3),
            ForcingSpec(kind="separable",
                        g=SpectralField(op, np.array([2.0, 0.0, 0.0]), 3),
                        h_name="constant", h_params={"value": 1.0}))
        trace = solve_linear(p, np.linspace(0.0, 1.0, 101))

        rows = (out / "trace.csv").read_text().splitlines()[1:]
        assert len(rows) == 101
        last = [float(v) for v in rows[-1].split(",")]
        assert last[0] == 1.0
        # 17 significant digits round-trip doubles exactly
        assert last[1:4] == list(trace.u_coeffs[-1])
        assert last[4:7] == list(trace.dtu_coeffs[-1])
        assert last[7:10] == list(trace.dalpha_coeffs[-1])

    def test_summary_contents(self, tmp_path):
        cfg = self.config(tmp_path)
        out = tmp_path / "out"
        main(["solve", "linear", "--config", cfg, "--out", str(out)])
        doc = json.loads((out / "summary.json").read_text())
        assert doc["status"] == "completed"
        assert doc["final_time"] == 1.0
        assert set(doc["final_norms"]) == {
            "u_Vgamma", "dtu_L2", "dalpha_Vminusgamma"}
        assert isinstance(doc["warnings"], list)
        assert "generated_at" in doc["metadata"]
        # the echoed scenario re-parses to the scenario that actually ran
        scn = parse_scenario(json.dumps(doc["scenario"]))
        assert scn == parse_scenario(open(cfg).read())

    def test_timestamp_confined_to_metadata(self, tmp_path):
        cfg = self.config(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        main(["solve", "linear", "--config", cfg, "--out", str(a)])
        main(["solve", "linear", "--config", cfg, "--out", str(b)])
        da = json.loads((a / "summary.json").read_text())
        db = json.loads((b / "summary.json").read_text())
        da.pop("metadata")
        db.pop("metadata")
        assert da == db

    def test_repeat_runs_byte_identical(self, tmp_path, monkeypatch):
        cfg = self.config(tmp_path)
        blobs = []
        for name, threads in (("r1", "1"), ("r2", "4"), ("r3", None)):
            if threads is None:
                monkeypatch.delenv("MLWAVE_THREADS", raising=False)
            else:
                monkeypatch.setenv("MLWAVE_THREADS", threads)
            out = tmp_path / name
            assert main(["solve", "linear", "--config", cfg,
                         "--out", str(out)]) == 0
            blobs.append(((out / "trace.csv").read_bytes(),
                          (out / "norms.csv").read_bytes()))
        assert blobs[0] == blobs[1] == blobs[2]

    def test_scenario_output_dir_is_fallback(self, tmp_path):
        dest = tmp_path / "from-scenario"
        cfg = write_config(tmp_path, output=str(dest))
        assert main(["solve", "linear", "--config", cfg]) == 0
        assert (dest / "trace.csv").is_file()

    def test_no_output_dir_anywhere(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        assert main(["solve", "linear", "--config", cfg]) == 1
        assert "no output directory" in capsys.readouterr().err

    def test_mode_mismatch(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        rc = main(["solve", "semilinear", "--config", cfg,
                   "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "solve linear" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["solve", "linear", "--config",
                   str(tmp_path / "ghost.json"), "--out", str(tmp_path)])
        assert rc == 1
        assert "cannot read config" in capsys.readouterr().err

    def test_classical_limit_flag(self, tmp_path, capsys):
        cfg = write_config(tmp_path, alpha=2.0)
        out = str(tmp_path / "o")
        assert main(["solve", "linear", "--config", cfg, "--out", out]) == 1
        assert "--allow-limit" in capsys.readouterr().err
        assert main(["solve", "linear", "--config", cfg, "--out", out,
                     "--allow-limit"]) == 0


class TestSolveSemilinearCli:
    def test_zero_kind_matches_linear_byte_for_byte(self, tmp_path):
        common = dict(N_modes=2, u0=[0.5, -0.25], u1=[0.0, 0.3])
        lin = write_config(tmp_path, "lin.json", **common)
        semi = write_config(tmp_path, "semi.json",
                            nonlinearity={"kind": "zero"}, **common)
        lo, so = tmp_path / "lin-out", tmp_path / "semi-out"
        assert main(["solve", "linear", "--config", lin,
                     "--out", str(lo)]) == 0
        assert main(["solve", "semilinear", "--config", semi,
                     "--out", str(so)]) == 0
        assert (lo / "trace.csv").read_bytes() == \
            (so / "trace.csv").read_bytes()
        assert (lo / "norms.csv").read_bytes() == \
            (so / "norms.csv").read_bytes()

    def test_outcome_document(self, tmp_path):
        cfg = write_config(
            tmp_path, N_modes=2, u0=[0.5, -0.25], u1=[0.0, 0.3],
            nonlinearity={"kind": "sine", "params": {"c": 0.2}})
        out = tmp_path / "out"
        assert main(["solve", "semilinear", "--config", cfg,
                     "--out", str(out)]) == 0
        doc = json.loads((out / "outcome.json").read_text())
        assert doc["status"] == "completed"
        assert doc["T_end"] == 1.0
        assert doc["T_est"] is None
        assert len(doc["windows"]) >= 1
        for w in doc["windows"]:
            assert set(w) == {"start", "end", "iterations",
                              "contraction_estimate"}
        assert doc["strong_check"]["verdict"] == "strong"
        scn = parse_scenario(json.dumps(doc["scenario"]))
        assert scn == parse_scenario(open(cfg).read())

    def test_blowup_still_exits_zero(self, tmp_path):
        cfg = write_config(
            tmp_path, N_modes=1, u0=[20.0],
            nonlinearity={"kind": "power", "params": {"c": 1.0, "r": 3.0}},
            grid={"t_end": 0.1, "dt": 0.001},
            picard={"blowup_threshold": 1e6})
        out = tmp_path / "out"
        assert main(["solve", "semilinear", "--config", cfg,
                     "--out", str(out)]) == 0
        doc = json.loads((out / "outcome.json").read_text())
        assert doc["status"] == "maximal_time_detected"
        assert 0.0 < doc["T_est"] < 0.1
        rows = (out / "trace.csv").read_text().splitlines()[1:]
        assert float(rows[-1].split(",")[0]) == doc["T_est"]

    def test_inadmissible_growth_is_config_error(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            operator={"kind": "dirichlet_laplacian_box",
                      "lengths": [1.0, 1.0, 1.0]},
            u0=[0.1],
            nonlinearity={"kind": "power", "params": {"c": 1.0, "r": 9.5}})
        rc = main(["solve", "semilinear", "--config", cfg,
                   "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "r*" in capsys.readouterr().err


class TestMlCli:
    def test_eval_prints_full_precision(self, capsys):
        assert main(["ml", "eval", "--alpha", "1.5", "--beta", "1.0",
                     "--x", "-2.0"]) == 0
        printed = capsys.readouterr().out.strip()
        expected = ml_e(MLQuery(alpha=1.5, beta=1.0, x=-2.0),
                        DEFAULT_PRECISION)
        assert float(printed) == expected
        assert len(printed.replace("-", "").replace(".", "")
                   .replace("e", " ").split()[0]) >= 15

    def test_eval_with_tolerance(self, capsys):
        assert main(["ml", "eval", "--alpha", "1.2", "--beta", "1.2",
                     "--x", "-5.0", "--tol", "1e-8"]) == 0
        assert capsys.readouterr().out.strip()

    def test_eval_missing_argument_is_usage_error(self, capsys):
        assert main(["ml", "eval", "--alpha", "1.5", "--beta", "1.0"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_eval_overflow_is_numeric_failure(self, capsys):
        rc = main(["ml", "eval", "--alpha", "1.5", "--beta", "1.0",
                   "--x", "20000"])
        assert rc == 2
        assert "numeric failure" in capsys.readouterr().err

    def test_verify_passes(self, capsys):
        assert main(["ml", "verify"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out


class TestCriticalityCli:
    def test_plain_embedding_number(self, capsys):
        assert main(["criticality", "--qa", "3", "--alpha", "1.5"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["case"] == "I"
        assert doc["alpha0"] == pytest.approx(4.0 / 3.0)
        assert doc["r_star"] == 9.0
        assert doc["subcritical"] is False
        assert doc["theta_A"] == 0.75

    def test_operator_json(self, capsys):
        op = json.dumps({"kind": "dirichlet_laplacian_interval",
                         "lengths": [PI]})
        assert main(["criticality", "--operator", op,
                     "--alpha", "1.5"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["q_A"] == "inf"
        assert doc["r_star"] == "unbounded"
        assert doc["subcritical"] is True
        assert doc["supercritical_range_empty"] is True

    def test_box_operator_json(self, capsys):
        op = json.dumps({"kind": "dirichlet_laplacian_box",
                         "lengths": [1.0, 1.0, 1.0]})
        assert main(["criticality", "--operator", op,
                     "--alpha", "1.5"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["q_A"] == 3.0
        assert doc["r_star"] == 9.0

    def test_requires_exactly_one_subject(self, capsys):
        assert main(["criticality", "--alpha", "1.5"]) == 1
        op = json.dumps({"kind": "dirichlet_laplacian_interval",
                         "lengths": [PI]})
        assert main(["criticality", "--qa", "3", "--operator", op,
                     "--alpha", "1.5"]) == 1

    def test_table_rows(self, capsys):
        assert main(["criticality", "--qa", "3", "--alpha", "1.5",
                     "--table"]) == 0
        out = capsys.readouterr().out
        assert "kind,delta,d,q_A,alpha0" in out
        assert "dirichlet_laplacian,0,1,inf,2" in out
        assert "dirichlet_laplacian,0,3,3,1.3333333333333333" in out
        assert "dirichlet_laplacian,0,4,2,none" in out
        assert "wentzell,1,3,3,1.3333333333333333" in out
        assert "dirichlet_to_neumann,0,3,2,none" in out


class TestVerifyCli:
    @pytest.mark.parametrize("suite", ["ml", "linear", "semilinear",
                                       "rates", "convergence"])
    def test_suite_passes_and_writes_report(self, suite, tmp_path, capsys):
        assert main(["verify", "--suite", suite,
                     "--out", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "report.json").read_text())
        assert doc["suite"] == suite
        assert doc["passed"] is True
        assert len(doc["checks"]) >= 3
        for check in doc["checks"]:
            assert set(check) == {"name", "passed", "detail"}
            assert check["passed"] is True
        assert "FAIL" not in capsys.readouterr().out

    def test_unknown_suite_is_usage_error(self, capsys):
        assert main(["verify", "--suite", "everything"]) == 1
        assert "usage" in capsys.readouterr().err


class TestConvergenceCli:
    def test_homogeneous_is_exact(self, tmp_path, capsys):
        cfg = write_config(tmp_path, N_modes=2, u0=[1.0, 0.5],
                           grid={"t_end": 0.5, "dt": 0.005})
        out = tmp_path / "rep"
        assert main(["convergence", "--config", cfg,
                     "--out", str(out)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["dts"] == [0.005, 0.0025, 0.00125]
        assert doc["orders"] == ["exact"]
        saved = json.loads((out / "convergence.json").read_text())
        assert saved["orders"] == ["exact"]
        assert "scenario" in saved

    def test_forced_order_near_two(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, N_modes=2, u0=[0.5, -0.25], u1=[0.0, 0.3],
            forcing={"kind": "separable", "g": [1.0, 0.5],
                     "h_name": "sinusoid",
                     "h_params": {"amplitude": 2.0, "omega": 3.0}},
            grid={"t_end": 1.0, "dt": 0.004})
        assert main(["convergence", "--config", cfg]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert all(o >= 1.8 for o in doc["orders"])

    def test_too_few_levels(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        assert main(["convergence", "--config", cfg, "--levels", "2"]) == 1
        assert "at least 3" in capsys.readouterr().err


class TestDispatch:
    def test_unknown_subcommand_prints_usage(self, capsys):
        assert main(["frobnicate"]) == 1
        err = capsys.readouterr().err
        assert "usage" in err
        assert "frobnicate" in err

    def test_no_arguments_prints_usage(self, capsys):
        assert main([]) == 1
        assert "usage" in capsys.readouterr().err

    def test_bad_thread_cap(self, capsys, monkeypatch):
        assert main(["--threads", "0", "ml", "verify"]) == 1
        monkeypatch.setenv("MLWAVE_THREADS", "many")
        assert main(["criticality", "--qa", "3", "--alpha", "1.5"]) == 1
        assert "MLWAVE_THREADS" in capsys.readouterr().err

    def test_console_script_is_wired(self):
        from importlib.metadata import entry_points
        eps = entry_points(group="console_scripts")
        ours = [ep for ep in eps if ep.name == "mlwave"]
        assert ours and ours[0].value == "mlwave.cli:main"
