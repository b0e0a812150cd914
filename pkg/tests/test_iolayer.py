import io
import json
import subprocess
import sys
from fractions import Fraction as F
from pathlib import Path

import pytest

from pivp import (
    parse_accuracy,
    parse_problem,
    problem_to_system,
    read_trace,
    run_cli,
    serialize_problem,
    solve_pivp_variable,
    write_trace,
)
from pivp.adaptive import Success
from pivp.errors import ParameterError, ProblemFormatError
from tests.test_polyvec import spiking_system

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"
SPIKING = PROBLEMS / "spiking4.json"
BLOWUP = PROBLEMS / "blowup.json"


class TestParseProblem:
    def test_spiking_file(self):
        spec = parse_problem(SPIKING.read_text())
        assert spec.dim == 2
        assert spec.y0 == (F(0), F(1))
        assert spec.closed_form == "spiking:4"
        p = problem_to_system(spec)
        assert p.degree() == 1
        assert p.coefficient_mass() == 5

    def test_wrong_y0_length_names_field(self):
        doc = json.loads(SPIKING.read_text())
        doc["y0"] = ["0", "1", "2"]
        with pytest.raises(ProblemFormatError) as excinfo:
            parse_problem(json.dumps(doc))
        assert excinfo.value.location == "y0"

    def test_empty_component_is_zero_polynomial(self):
        doc = json.loads(SPIKING.read_text())
        doc["polys"][1] = []
        spec = parse_problem(json.dumps(doc))
        assert problem_to_system(spec).components[1].terms == {}

    def test_malformed_rational_located(self):
        doc = json.loads(SPIKING.read_text())
        doc["polys"][0][0]["coeff"] = "4.0"
        with pytest.raises(ProblemFormatError) as excinfo:
            parse_problem(json.dumps(doc))
        assert excinfo.value.location == "polys[0][0].coeff"

    def test_zero_denominator_rejected(self):
        doc = json.loads(SPIKING.read_text())
        doc["t0"] = "1/0"
        with pytest.raises(ProblemFormatError):
            parse_problem(json.dumps(doc))

    def test_duplicate_multi_index_rejected(self):
        doc = json.loads(SPIKING.read_text())
        doc["polys"][1].append({"coeff": "2", "exponents": [0, 1]})
        with pytest.raises(ProblemFormatError) as excinfo:
            parse_problem(json.dumps(doc))
        assert "duplicate" in str(excinfo.value)

    def test_exponent_length_mismatch(self):
        doc = json.loads(SPIKING.read_text())
        doc["polys"][0][0]["exponents"] = [0, 1, 0]
        with pytest.raises(ProblemFormatError) as excinfo:
            parse_problem(json.dumps(doc))
        assert "exponents" in excinfo.value.location

    def test_floats_rejected(self):
        doc = json.loads(SPIKING.read_text())
        doc["y0"] = [0.0, "1"]
        with pytest.raises(ProblemFormatError):
            parse_problem(json.dumps(doc))

    def test_invalid_json_positioned(self):
        with pytest.raises(ProblemFormatError) as excinfo:
            parse_problem("{not json")
        assert "line" in str(excinfo.value)

    def test_serialize_round_trip(self):
        spec = parse_problem(SPIKING.read_text())
        assert parse_problem(serialize_problem(spec)) == spec


class TestTraceRoundTrip:
    @pytest.fixture(scope="class")
    def solved(self):
        out = solve_pivp_variable(0, (F(0), F(1)), spiking_system(4), 1, F(1, 1024), 64)
        assert isinstance(out, Success)
        return out

    def test_round_trip_bit_exact(self, solved):
        sink = io.StringIO()
        write_trace(solved.trace, solved.diagnostics, sink, final_hint=F(64))
        rows, summary = read_trace(sink.getvalue())
        assert len(rows) == solved.diagnostics.steps
        for row, rec in zip(rows, solved.trace):
            assert row["i"] == rec.index
            assert row["t_start"] == rec.t_start
            assert row["delta_t"] == rec.delta_t
            assert row["beta"] == rec.beta
            assert row["omega"] == rec.omega
            assert row["y_norm_after"] == max(abs(v) for v in rec.y_after)
        assert summary["steps"] == solved.diagnostics.steps
        assert summary["sum_beta"] == solved.diagnostics.sum_beta
        assert summary["max_rsize"] == solved.diagnostics.max_rsize
        assert summary["final_hint"] == 64

    def test_rows_strictly_increasing(self, solved):
        sink = io.StringIO()
        write_trace(solved.trace, solved.diagnostics, sink)
        rows, _ = read_trace(sink.getvalue())
        starts = [row["t_start"] for row in rows]
        assert all(a < b for a, b in zip(starts, starts[1:]))

    def test_empty_trace(self):
        out = solve_pivp_variable(0, (F(1),), spiking_system(4)._replace_dummy, 0, F(1, 4), 1) if False else None
        sink = io.StringIO()
        from pivp.adaptive import Diagnostics

        write_trace(
            (), Diagnostics(0, F(0), 4, 0, 0), sink, final_hint=None
        )
        text = sink.getvalue().splitlines()
        assert len(text) == 2
        assert text[0] == "i,t_start,delta_t,beta,omega,y_norm_after"
        assert text[1].startswith("# steps=0")
        rows, summary = read_trace(sink.getvalue())
        assert rows == [] and summary["final_hint"] is None


class TestParseAccuracy:
    def test_shorthand_equals_rational(self):
        assert parse_accuracy("2^-10") == parse_accuracy("1/1024") == F(1, 1024)

    @pytest.mark.parametrize("bad", ["2^-", "2^-x", "2^10x", "", "0.5"])
    def test_rejects_malformed(self, bad):
        with pytest.raises(ParameterError):
            parse_accuracy(bad)


def _cli(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(argv, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


class TestCli:
    def test_solve_problem_file(self, tmp_path):
        trace_path = tmp_path / "trace.csv"
        code, out, err = _cli(
            [str(SPIKING), "--time", "2", "--eps", "2^-10", "--trace", str(trace_path)]
        )
        assert code == 0, err
        assert "y[0] = " in out and "y[1] = " in out
        assert "~=" in out  # decimal rendering alongside the exact value
        assert "final_hint=" in out and "steps=" in out
        rows, summary = read_trace(trace_path.read_text())
        assert rows and summary["steps"] == len(rows)

    def test_quiet_prints_only_rationals(self):
        code, out, err = _cli([str(SPIKING), "--time", "1", "--quiet"])
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 2
        from pivp import parse_rational

        for line in lines:
            parse_rational(line)

    def test_blow_up_exhausts_hints(self):
        code, out, err = _cli([str(BLOWUP), "--time", "2", "--max-hint", "16"])
        assert code == 2
        assert "16" in err
        assert "exhausted" in err

    def test_fixed_hint_success(self):
        code, out, err = _cli([str(SPIKING), "--time", "1", "--hint", "64"])
        assert code == 0

    def test_fixed_hint_abort(self):
        code, out, err = _cli([str(BLOWUP), "--time", "2", "--hint", "4"])
        assert code == 2
        assert "aborted" in err

    def test_builtin_benchmark(self):
        code, out, err = _cli(["--builtin", "exp", "--time", "1", "--quiet"])
        assert code == 0
        code, out, err = _cli(["--builtin", "spiking:4", "--time", "1", "--quiet"])
        assert code == 0

    def test_accuracy_flag_forms_agree(self):
        code_a, out_a, _ = _cli(["--builtin", "exp", "--time", "1", "--eps", "2^-12", "--quiet"])
        code_b, out_b, _ = _cli(["--builtin", "exp", "--time", "1", "--eps", "1/4096", "--quiet"])
        assert code_a == code_b == 0
        assert out_a == out_b

    def test_parse_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        code, out, err = _cli([str(bad), "--time", "1"])
        assert code == 3
        assert "error:" in err

    def test_missing_time_flag(self):
        code, out, err = _cli([str(SPIKING)])
        assert code == 3

    def test_problem_and_builtin_conflict(self):
        code, out, err = _cli([str(SPIKING), "--builtin", "exp", "--time", "1"])
        assert code == 3

    def test_missing_file(self):
        code, out, err = _cli(["nope.json", "--time", "1"])
        assert code == 3

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "pivp", "--builtin", "decay", "--time", "1", "--quiet"],
            capture_output=True,
            text=True,
            cwd=str(PROBLEMS.parent),
        )
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout.strip()
