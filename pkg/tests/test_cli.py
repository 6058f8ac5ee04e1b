"""
Tests for src/cli.py
"""

import json
import pytest
from unittest.mock import patch


def _config(**campos):
    from src.cli import parse_config
    return parse_config(json.dumps(campos))


class TestParseConfig:
    """Tests for parse_config."""

    def test_schema_example(self):
        """Test the documented run example is valid."""
        config = _config(scenario="example1", schedule={"scripted": [1]}, x0=[0, 1], mode="run")
        assert config.mode == "run"
        assert config.schedule.policy == "scripted"
        assert config.schedule.script == (1,)
        assert config.schedule.fallback == "round_robin"
        assert config.x0 == (0, 1)

    def test_defaults(self):
        """Test defaults are applied."""
        config = _config(scenario="example1", mode="certificate")
        assert config.mode == "certificate"
        assert config.stop.max_iters == 100_000
        assert config.stop.cauchy_tol == 1e-10
        assert config.stop.cauchy_window == 50
        assert config.stride == 100
        assert config.seed == 0

    def test_unknown_keys_listed(self):
        """Test unknown keys are reported by name."""
        from src.cli import ConfigError
        with pytest.raises(ConfigError, match="bogus, extra"):
            _config(scenario="example1", extra=1, bogus=2)

    def test_unknown_stop_keys(self):
        """Test nested unknown keys carry their prefix."""
        from src.cli import ConfigError
        with pytest.raises(ConfigError, match="stop.tolerance"):
            _config(scenario="example1", stop={"tolerance": 1})

    def test_unknown_scenario(self):
        """Test unknown scenario names are rejected."""
        from src.cli import ConfigError
        with pytest.raises(ConfigError, match="desconocido"):
            _config(scenario="nope", mode="run")

    def test_x0_dimension_mismatch(self):
        """Test x0 must match the scenario dimension."""
        from src.cli import ConfigError
        with pytest.raises(ConfigError, match="dimensión"):
            _config(scenario="example1", x0=[1, 2, 3])

    def test_p_below_one(self, temp_dir):
        """Test operator files with p < 1 are rejected."""
        from src.cli import ConfigError
        archivo = temp_dir / "p.json"
        archivo.write_text(json.dumps({"p": 0.5, "operators": [[[1]]]}), encoding="utf-8")
        with pytest.raises(ConfigError):
            _config(scenario=str(archivo))

    def test_invalid_json(self):
        """Test malformed documents raise ConfigError."""
        from src.cli import ConfigError, parse_config
        with pytest.raises(ConfigError, match="JSON inválido"):
            parse_config("{scenario: }")

    def test_invalid_mode(self):
        """Test modes outside the allowed set are rejected."""
        from src.cli import ConfigError
        with pytest.raises(ConfigError):
            _config(scenario="example1", mode="plot")

    def test_script_index_out_of_range(self):
        """Test scripted indices are checked against the operator count."""
        from src.cli import ConfigError
        with pytest.raises(ConfigError):
            _config(scenario="example1", schedule={"scripted": [3]})

    def test_random_x0(self):
        """Test random(seed) x0 literal."""
        config = _config(scenario="von_neumann_2proj", params={"dim": 6}, x0="random(5)")
        assert config.x0 == "random(5)"

    def test_markov_shorthand(self):
        """Test markov transition shorthand."""
        config = _config(scenario="example1", schedule={"markov": [[0.5, 0.5], [0.5, 0.5]]}, seed=3)
        assert config.schedule.policy == "markov"
        assert config.schedule.transition == ((0.5, 0.5), (0.5, 0.5))

    def test_catalog_needs_no_scenario(self):
        """Test catalog mode does not require a scenario."""
        assert _config(mode="catalog").scenario is None


class TestSerializeConfig:
    """Tests for serialize_config round-trip."""

    @pytest.mark.parametrize("campos", [
        {"scenario": "example1", "schedule": {"scripted": [1]}, "x0": [0, 1], "mode": "run"},
        {"scenario": "example1", "schedule": {"scripted": [2, 1], "fallback": "none"}, "exact": True},
        {"scenario": "example1", "schedule": {"markov": [[0.5, 0.5], [0.25, 0.75]], "seed": 4}},
        {"scenario": "von_neumann_2proj", "params": {"dim": 8, "seed": 2}, "x0": "random(1)",
         "stop": {"max_iters": 500, "cauchy_tol": 1e-12}, "stride": 1, "output": "salida"},
        {"mode": "catalog"},
    ])
    def test_round_trip(self, campos):
        """Test parse_config(serialize_config(c)) == c."""
        from src.cli import parse_config, serialize_config
        config = _config(**campos)
        assert parse_config(serialize_config(config)) == config


class TestCombinarConfig:
    """Tests for combinar_config."""

    def test_flags_override_file(self):
        """Test command-line values replace document values."""
        from src.cli import combinar_config
        texto = json.dumps({"scenario": "example1", "seed": 1, "mode": "run"})
        config = combinar_config(texto, {"seed": 9, "mode": "check", "output": None})
        assert config.seed == 9
        assert config.mode == "check"
        assert config.output is None

    def test_without_document(self):
        """Test flags alone build a config."""
        from src.cli import combinar_config
        config = combinar_config(None, {"mode": "certificate", "scenario": "example1"})
        assert config.mode == "certificate"


class TestRunCli:
    """Tests for run_cli."""

    def test_certificate_mode(self, temp_dir, capsys):
        """Test certificate JSON with constraints 1/2 and 1/3."""
        from src.cli import run_cli
        config = _config(scenario="example1", mode="certificate", output=str(temp_dir))
        assert run_cli(config) == 0
        datos = json.loads((temp_dir / "certificate.json").read_text(encoding="utf-8"))
        assert datos["constraints"] == {"T1": "1/2", "T2": "1/3"}
        assert datos["consistent"] is False
        assert json.loads(capsys.readouterr().out) == datos

    def test_run_mode_example1(self, temp_dir):
        """Test scripted [1] run writes trace and summary with limit [0.5, 0]."""
        from src.cli import run_cli
        config = _config(scenario="example1", schedule={"scripted": [1]}, x0=[0, 1], mode="run", output=str(temp_dir))
        assert run_cli(config) == 0
        resumen = json.loads((temp_dir / "summary.json").read_text(encoding="utf-8"))
        assert resumen["limit"] == [0.5, 0.0]
        assert resumen["stop_reason"] == "converged"
        assert (temp_dir / "trace.csv").read_text(encoding="utf-8").startswith("n,r_n,norm,increment\n")

    def test_check_mode_reports_non_contraction(self, temp_dir, doubling_operator_file):
        """Test check mode reports 2 x identity and exits 0."""
        from src.cli import run_cli
        config = _config(scenario=str(doubling_operator_file), mode="check", output=str(temp_dir))
        assert run_cli(config) == 0
        datos = json.loads((temp_dir / "check.json").read_text(encoding="utf-8"))
        assert datos["operators"][0]["contraction"] == "no"
        assert datos["operators"][0]["w_prime"] is None

    def test_run_mode_non_contraction_exits_one(self, temp_dir, doubling_operator_file):
        """Test run mode refuses non-contractions with exit 1."""
        from src.cli import run_cli
        config = _config(scenario=str(doubling_operator_file), mode="run", output=str(temp_dir))
        assert run_cli(config) == 1
        assert not (temp_dir / "summary.json").exists()

    def test_check_mode_example1(self, temp_dir):
        """Test check verdicts for Example 1."""
        from src.cli import run_cli
        config = _config(scenario="example1", mode="check", output=str(temp_dir))
        assert run_cli(config) == 0
        datos = json.loads((temp_dir / "check.json").read_text(encoding="utf-8"))
        assert [op["w_prime"]["status"] for op in datos["operators"]] == ["holds", "holds"]
        assert [op["adjoint_w_prime"]["status"] for op in datos["operators"]] == ["fails", "fails"]
        assert datos["common_fixed_space_dim"] == 1
        assert all(s["face_preserved"] for s in datos["support_invariance"])
        assert not any(s["pointwise_fixed"] for s in datos["support_invariance"])

    @pytest.mark.parametrize("p,directo,adjunto", [(1, "holds", "fails"), ("inf", "fails", "holds")])
    def test_check_mode_float_diagonals(self, temp_dir, p, directo, adjunto):
        """Test check mode on float diagonal contractions in l1 and linf."""
        from src.cli import run_cli
        config = _config(
            scenario="diagonal_contractions", params={"dim": 3, "p": p}, mode="check", output=str(temp_dir),
        )
        assert run_cli(config) == 0
        datos = json.loads((temp_dir / "check.json").read_text(encoding="utf-8"))
        assert {op["w_prime"]["status"] for op in datos["operators"]} == {directo}
        assert {op["adjoint_w_prime"]["status"] for op in datos["operators"]} == {adjunto}
        assert all(s["face_preserved"] for s in datos["support_invariance"])
        assert all(len(s["anchor"]) == 3 for s in datos["support_invariance"])

    def test_falsify_mode(self, temp_dir):
        """Test falsify mode writes falsify.json."""
        from src.cli import run_cli
        config = _config(scenario="rotation_counterexample", mode="falsify", output=str(temp_dir), budget=2)
        assert run_cli(config) == 0
        datos = json.loads((temp_dir / "falsify.json").read_text(encoding="utf-8"))
        assert datos["verdict_hint"] == "candidate_violation"

    def test_catalog_mode(self, temp_dir):
        """Test catalog mode lists every scenario."""
        from src.cli import run_cli
        from src.scenarios import SCENARIO_BUILDERS
        assert run_cli(_config(mode="catalog", output=str(temp_dir))) == 0
        datos = json.loads((temp_dir / "catalog.json").read_text(encoding="utf-8"))
        assert [s["name"] for s in datos["scenarios"]] == list(SCENARIO_BUILDERS)

    def test_certificate_requires_two_dimensions(self, temp_dir):
        """Test certificate mode on a 6-dimensional scenario exits 1."""
        from src.cli import run_cli
        config = _config(scenario="von_neumann_2proj", params={"dim": 6}, mode="certificate", output=str(temp_dir))
        assert run_cli(config) == 1

    def test_audit_violation_exits_two(self, temp_dir):
        """Test audit violations map to exit 2."""
        from src.cli import run_cli
        config = _config(scenario="example1", mode="run", output=str(temp_dir))
        with patch("src.engine.AuditReport.violations", new=["monotonía"]):
            assert run_cli(config) == 2

    def test_io_failure_exits_one(self, temp_dir):
        """Test unwritable output directory exits 1."""
        from src.cli import run_cli
        config = _config(scenario="example1", mode="certificate", output=str(temp_dir))
        with patch("src.cli.crear_directorio_ejecucion", return_value=None):
            assert run_cli(config) == 1

    def test_byte_identical_outputs(self, temp_dir):
        """Test identical config and seed reproduce trace.csv and summary.json."""
        from src.cli import run_cli
        salidas = []
        for nombre in ("a", "b"):
            config = _config(
                scenario="random_projections", params={"n_ops": 3, "dim": 6, "seed": 1},
                schedule="seeded_uniform", seed=5, mode="run", output=str(temp_dir / nombre),
            )
            assert run_cli(config) == 0
            salidas.append(((temp_dir / nombre / "trace.csv").read_bytes(), (temp_dir / nombre / "summary.json").read_bytes()))
        assert salidas[0] == salidas[1]
