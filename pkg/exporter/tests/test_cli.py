"""Command-line surface: success echo, artifacts, exit codes."""

from click.testing import CliRunner

from melrag_exporter import load_manifest
from melrag_exporter.cli import export_cmd, main


def test_export_command_writes_artifacts(workspace):
    out = workspace.root / "cli.mmeb"
    result = CliRunner().invoke(export_cmd, [
        "--cases", str(workspace.cases_path),
        "--images-dir", str(workspace.images_dir),
        "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    assert result.output == f"exported 3 cases (0 skipped) dims (2048, 768) -> {out}\n"
    assert out.is_file()
    assert load_manifest(out).count == 3


def test_main_maps_usage_errors(workspace, capsys, tmp_path):
    code = main([
        "--cases", str(workspace.cases_path),
        "--images-dir", str(workspace.images_dir),
        "--out", str(tmp_path / "x.mmeb"),
        "--batch-size", "0",
    ])
    assert code == 1
    assert "batch-size" in capsys.readouterr().err


def test_missing_cases_file_fails(workspace, tmp_path):
    result = CliRunner().invoke(export_cmd, [
        "--cases", str(tmp_path / "absent.jsonl"),
        "--images-dir", str(workspace.images_dir),
        "--out", str(tmp_path / "x.mmeb"),
    ])
    assert result.exit_code != 0


def test_required_options_enforced():
    result = CliRunner().invoke(export_cmd, [])
    assert result.exit_code != 0
    assert "--cases" in result.output


def test_backbone_choices_validated(workspace, tmp_path):
    result = CliRunner().invoke(export_cmd, [
        "--cases", str(workspace.cases_path),
        "--images-dir", str(workspace.images_dir),
        "--out", str(tmp_path / "x.mmeb"),
        "--backbone", "alexnet",
    ])
    assert result.exit_code != 0


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
    assert "--backbone" in capsys.readouterr().out
