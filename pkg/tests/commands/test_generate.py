import json

from pathlib import Path

from click.testing import CliRunner

from spbtrack.io import read_feature_sidecar, read_kitti_tracks
from spbtrack.main import cli
from tests.conftest import write_text


def test_generate_writes_the_scenario(
    runner: CliRunner, scenario_dir: Path
) -> None:
    names = sorted(p.name for p in scenario_dir.iterdir())
    assert names == [
        "det.txt",
        "features.csv",
        "gt.txt",
        "run.manifest.json",
    ]
    gt = read_kitti_tracks(scenario_dir / "gt.txt")
    assert {o.track_id for o in gt} == {1, 2}
    assert len(read_feature_sidecar(scenario_dir / "features.csv")) == 20
    manifest = json.loads((scenario_dir / "run.manifest.json").read_text())
    assert manifest["command"] == "generate"
    assert manifest["seed"] == 5


def test_seed_override(
    runner: CliRunner, scenario_file: Path, tmp_path: Path
) -> None:
    outputs = []
    for name, seed in (("a", "1"), ("b", "1"), ("c", "2")):
        result = runner.invoke(
            cli,
            [
                "generate",
                "--spec",
                str(scenario_file),
                "--out-dir",
                str(tmp_path / name),
                "--seed",
                seed,
            ],
        )
        assert result.exit_code == 0, result.stderr
        outputs.append((tmp_path / name / "det.txt").read_bytes())
    assert outputs[0] == outputs[1]
    assert outputs[0] != outputs[2]


def test_invalid_scenario(runner: CliRunner, tmp_path: Path) -> None:
    spec = write_text(tmp_path / "bad.conf", ["dropout_rate = 2"])
    result = runner.invoke(
        cli,
        ["generate", "--spec", str(spec), "--out-dir", str(tmp_path / "o")],
    )
    assert result.exit_code == 1
    assert "dropout_rate" in result.stderr
