"""
Tests for src/main.py
"""

import io
import json
import pytest
from unittest.mock import patch


class TestMain:
    """Tests for the argv front end."""

    def test_certificate_subcommand(self, temp_dir):
        """Test certificate subcommand with flags only."""
        from src.main import main
        assert main(["certificate", "--scenario", "example1", "--output", str(temp_dir)]) == 0
        assert (temp_dir / "certificate.json").exists()

    def test_config_file_with_override(self, temp_dir):
        """Test --seed overrides the config document."""
        from src.main import main
        archivo = temp_dir / "config.json"
        archivo.write_text(json.dumps({"scenario": "example1", "seed": 1}), encoding="utf-8")
        with patch("src.main.run_cli", return_value=0) as run_cli:
            assert main(["run", "--config", str(archivo), "--seed", "7", "--output", str(temp_dir)]) == 0
        config = run_cli.call_args[0][0]
        assert config.seed == 7
        assert config.mode == "run"

    def test_config_from_stdin(self, temp_dir):
        """Test '-' reads the config from standard input."""
        from src.main import main
        documento = json.dumps({"scenario": "example1", "output": str(temp_dir)})
        with patch("sys.stdin", io.StringIO(documento)):
            assert main(["certificate", "--config", "-"]) == 0

    def test_exact_flag(self, temp_dir):
        """Test --exact is forwarded as True."""
        from src.main import main
        with patch("src.main.run_cli", return_value=0) as run_cli:
            main(["check", "--scenario", "example1", "--exact"])
        assert run_cli.call_args[0][0].exact is True

    def test_missing_config_file(self, temp_dir):
        """Test unreadable config exits 1."""
        from src.main import main
        assert main(["run", "--config", str(temp_dir / "no_existe.json")]) == 1

    def test_invalid_config_exits_one(self):
        """Test validation errors exit 1."""
        from src.main import main
        assert main(["run", "--scenario", "nope"]) == 1

    def test_unknown_subcommand(self):
        """Test argparse rejects unknown subcommands."""
        from src.main import main
        with pytest.raises(SystemExit):
            main(["plot"])
