"""Command-line interface, exercised in process at desk scale."""

import json

import pytest

from calibra.cli import main


@pytest.fixture(scope="module")
def staged(tmp_path_factory):
    """One tiny shock-tube pipeline shared by the command tests."""
    root = tmp_path_factory.mktemp("cli")
    arch = root / "arch"
    rc = main(
        [
            "fom",
            "--case",
            "sod",
            "--grid",
            "120",
            "--tf",
            "0.1",
            "--snapshots",
            "4",
            "--out",
            str(arch),
        ]
    )
    assert rc == 0
    arts = root / "arts"
    rc = main(
        [
            "offline",
            "--archive",
            str(arch),
            "--out",
            str(arts),
            "--control",
            "5",
            "--max-iter",
            "10",
            "--tau",
            "1e-3",
            "--cal-epochs",
            "300",
            "--coeff-epochs",
            "300",
        ]
    )
    assert rc == 0
    return root


def test_fom_writes_archive_and_refuses_clobber(staged):
    arch = staged / "arch"
    assert (arch / "manifest.json").exists()
    rc = main(
        ["fom", "--case", "sod", "--grid", "120", "--tf", "0.1", "--out", str(arch)]
    )
    assert rc == 2


def test_calibrate_outputs(staged):
    out = staged / "cal.json"
    rc = main(
        [
            "calibrate",
            "--archive",
            str(staged / "arch"),
            "--control",
            "5",
            "--max-iter",
            "10",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["format"] == "calibra-calibration"
    table = (staged / "cal.csv").read_text().splitlines()
    assert len(table) == 5  # header + one row per snapshot
    assert table[0] == "t,index,residual,nit,success,theta0,theta1,theta2"


def test_online_writes_table_and_figure(staged):
    out = staged / "online"
    rc = main(
        [
            "online",
            "--artifacts",
            str(staged / "arts"),
            "--mu",
            "0.05",
            "--N",
            "1",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    csvs = list(out.glob("online_*.csv"))
    pngs = list(out.glob("online_*.png"))
    assert len(csvs) == 1 and len(pngs) == 1
    header = csvs[0].read_text().splitlines()[0]
    assert header == "x,reference,physical,eulerian"


def test_errors_report(staged):
    out = staged / "errs"
    rc = main(
        [
            "errors",
            "--artifacts",
            str(staged / "arts"),
            "--archive",
            str(staged / "arch"),
            "--N",
            "1,2",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    lines = (out / "errors.csv").read_text().splitlines()
    assert lines[0] == "t,N,eulerian,ale,eulerian_proj,ale_proj"
    assert len(lines) == 1 + 2 * 4
    assert (out / "errors.png").exists()


def test_eigs_report(staged):
    out = staged / "eigs"
    rc = main(
        ["eigs", "--artifacts", str(staged / "arts"), "--out", str(out)]
    )
    assert rc == 0
    lines = (out / "eigenvalues.csv").read_text().splitlines()
    assert lines[0] == "component,k,eulerian_ratio,ale_ratio"
    assert (out / "eigenvalues.png").exists()


def test_study_order(staged):
    out = staged / "study"
    rc = main(
        [
            "study",
            "--archive",
            str(staged / "arch"),
            "--what",
            "order",
            "--mode",
            "equispaced",
            "--interior",
            "3",
            "--max-iter",
            "5",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    lines = (out / "order_study_equispaced.csv").read_text().splitlines()
    assert lines[0].startswith("strategy,")
    # five strategies over four snapshots: 4 + 1 + 4 + 1 + 4 rows
    assert len(lines) == 15
    assert (out / "order_study_equispaced.png").exists()


def test_validate(staged, capsys):
    good = staged / "good.json"
    good.write_text(json.dumps({"case": "sod", "grid": [100]}))
    assert main(["validate", str(good)]) == 0
    assert "ok" in capsys.readouterr().out
    bad = staged / "bad.json"
    bad.write_text(json.dumps({"case": "sod", "junk": 1}))
    assert main(["validate", str(bad)]) == 2


def test_run_preset_end_to_end(tmp_path):
    out = tmp_path / "run"
    rc = main(
        [
            "run",
            "sod",
            "--grid",
            "64",
            "--snapshots",
            "3",
            "--max-iter",
            "5",
            "--epochs",
            "100",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["case"] == "sod"
    assert set(summary["basis_sizes"]) == {"rho", "mx", "E"}
    assert set(summary["basis_sizes"]["rho"]) == {"ale_active", "eulerian_active"}
    assert (out / "errors.csv").exists()
    assert (out / "errors.png").exists()
    assert (out / "eigenvalues.csv").exists()
    assert (out / "eigenvalues.png").exists()


def test_exit_codes(staged, tmp_path):
    # 2: malformed grid
    assert (
        main(["fom", "--case", "sod", "--grid", "4", "--out", str(tmp_path / "x")]) == 2
    )
    # 2: missing archive
    assert (
        main(["calibrate", "--archive", str(tmp_path / "none"), "--out", str(tmp_path / "c.json")])
        == 2
    )
    # 3: unphysical state loses positivity
    assert (
        main(
            [
                "fom",
                "--case",
                "sod",
                "--grid",
                "64",
                "--tf",
                "0.05",
                "--param",
                "pL=-1",
                "--out",
                str(tmp_path / "bad"),
            ]
        )
        == 3
    )
    # 6: more modes than the artifacts serve
    assert (
        main(
            [
                "online",
                "--artifacts",
                str(staged / "arts"),
                "--mu",
                "0.05",
                "--N",
                "99",
                "--out",
                str(tmp_path / "on"),
            ]
        )
        == 6
    )


def test_unknown_subcommand_exits_via_parser():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
