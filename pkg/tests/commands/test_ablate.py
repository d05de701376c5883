from pathlib import Path

import pandas as pd
import pytest

from click.testing import CliRunner, Result

from spbtrack.commands.ablate import METRIC_COLUMNS, parse_sweep
from spbtrack.exceptions import ConfigTypeError, UnknownKeyError
from spbtrack.main import cli
from tests.conftest import EAGER


def ablate(
    runner: CliRunner, scenario_file: Path, out: Path, *extra: str
) -> Result:
    return runner.invoke(
        cli,
        [
            "ablate",
            "--scenario",
            str(scenario_file),
            "--out",
            str(out),
            *EAGER,
            *extra,
        ],
    )


def test_parse_sweep() -> None:
    assert parse_sweep("variant:kf, ukf,dukf") == (
        "variant",
        ["kf", "ukf", "dukf"],
    )
    assert parse_sweep("pos_sigma:0.1,0.2")[0] == "pos_sigma"
    with pytest.raises(ConfigTypeError):
        parse_sweep("variant")
    with pytest.raises(UnknownKeyError):
        parse_sweep("wobble:1,2")


def test_single_cell_matches_track_and_eval(
    runner: CliRunner, scenario_file: Path, tmp_path: Path
) -> None:
    out = tmp_path / "cell.csv"
    result = ablate(runner, scenario_file, out, "--sweep", "variant:dukf")
    assert result.exit_code == 0, result.stderr
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["variant", "seeds"] + METRIC_COLUMNS
    assert len(frame) == 1
    assert frame.loc[0, "MOTA"] == 1.0
    assert frame.loc[0, "IDs"] == 0


def test_cross_product_and_per_seed_rows(
    runner: CliRunner, scenario_file: Path, tmp_path: Path
) -> None:
    out = tmp_path / "grid.csv"
    result = ablate(
        runner,
        scenario_file,
        out,
        "--sweep",
        "variant:kf,ukf,dukf",
        "--sweep",
        "pos_sigma:0.0,0.1",
        "--seeds",
        "2",
        "--per-seed",
    )
    assert result.exit_code == 0, result.stderr
    means = pd.read_csv(out)
    assert len(means) == 6
    assert means["seeds"].tolist() == [2] * 6
    variants = [v for v in ("kf", "ukf", "dukf") for _ in range(2)]
    assert means["variant"].tolist() == variants

    per_seed = pd.read_csv(tmp_path / "grid.per_seed.csv")
    assert len(per_seed) == 12
    assert sorted(set(per_seed["seed"])) == [5, 6]
    assert (tmp_path / "grid.manifest.json").is_file()


def test_ablation_is_deterministic(
    runner: CliRunner, scenario_file: Path, tmp_path: Path
) -> None:
    args = ["--sweep", "pos_sigma:0.05,0.2", "--seeds", "2"]
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    assert ablate(runner, scenario_file, first, *args).exit_code == 0
    assert ablate(runner, scenario_file, second, *args).exit_code == 0
    assert first.read_bytes() == second.read_bytes()


def test_decimated_ablation(
    runner: CliRunner, scenario_file: Path, tmp_path: Path
) -> None:
    out = tmp_path / "5hz.csv"
    result = ablate(
        runner, scenario_file, out, "--sweep", "dt:0.2", "--decimate", "2"
    )
    assert result.exit_code == 0, result.stderr
    assert pd.read_csv(out).loc[0, "GT"] == 20
