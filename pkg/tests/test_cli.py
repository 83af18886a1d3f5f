import json
import math

import numpy as np
import pytest

from gravmoments.cli import main


def _read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_eotvos_terrestrial_rows(tmp_path):
    out = tmp_path / "run"
    code = main(
        ["eotvos", "--g", "10", "--d2g", "1e-12", "--width", "1e-10,1", "--out", str(out)]
    )
    assert code == 0
    header, rows = _read_csv(out / "eotvos.csv")
    assert header == ["g", "d2g", "dxx", "eta"]
    etas = [float(r[3]) for r in rows]
    assert etas[0] == pytest.approx(0.5e-33)
    assert etas[1] == pytest.approx(0.5e-13)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "eotvos"
    assert manifest["parameters"]["width"] == [1e-10, 1.0]


def test_csv_values_round_trip_at_17_digits(tmp_path):
    out = tmp_path / "run"
    assert main(["eotvos", "--width", "0.3333333333333333,2.5", "--out", str(out)]) == 0
    _, rows = _read_csv(out / "eotvos.csv")
    for row in rows:
        for text in row:
            value = float(text)
            assert f"{value:.17g}" == text


def test_byte_identical_reruns(tmp_path):
    args = [
        "return-time",
        "--u",
        "1e-2",
        "--eps-grid",
        "-0.6:-0.4:3",
        "--seed",
        "7",
    ]
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(out_a)]) == 0
    assert main(args + ["--out", str(out_b)]) == 0
    assert (out_a / "return_time.csv").read_bytes() == (
        out_b / "return_time.csv"
    ).read_bytes()
    assert (out_a / "manifest.json").read_bytes() == (out_b / "manifest.json").read_bytes()


def test_return_time_includes_classical_baseline(tmp_path):
    out = tmp_path / "run"
    code = main(
        ["return-time", "--u", "1e-2", "--eps-grid", "-0.5:-0.5:1", "--out", str(out)]
    )
    assert code == 0
    header, rows = _read_csv(out / "return_time.csv")
    assert header == ["epsilon", "u", "t_return", "status"]
    by_u = {float(r[1]): r for r in rows}
    assert 0.0 in by_u and 0.01 in by_u
    assert float(by_u[0.0][2]) == pytest.approx(math.pi + 2.0, rel=1e-6)
    assert float(by_u[0.01][2]) < float(by_u[0.0][2])
    assert all(r[3] == "ok" for r in rows)


def test_return_time_kinetic_abscissa(tmp_path):
    out_c = tmp_path / "classical"
    out_k = tmp_path / "kinetic"
    base = ["return-time", "--u", "1e-3", "--eps-grid", "-0.5:-0.5:1"]
    assert main(base + ["--out", str(out_c)]) == 0
    assert main(base + ["--abscissa", "kinetic", "--out", str(out_k)]) == 0
    _, rows_c = _read_csv(out_c / "return_time.csv")
    _, rows_k = _read_csv(out_k / "return_time.csv")
    # kinetic = classical + 1/r0, times identical
    assert float(rows_k[0][0]) == pytest.approx(float(rows_c[0][0]) + 1.0)
    assert float(rows_k[0][2]) == pytest.approx(float(rows_c[0][2]), rel=1e-12)


def test_reconstruct_matches_gaussian_closed_form(tmp_path):
    out = tmp_path / "run"
    code = main(
        [
            "reconstruct",
            "--order",
            "2",
            "--x-mean",
            "0.5",
            "--dxx",
            "0.49",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    header, rows = _read_csv(out / "reconstruction.csv")
    assert header == ["x", "rho", "dtheta_dx", "theta"]
    for row in rows[:: len(rows) // 7]:
        x, rho = float(row[0]), float(row[1])
        closed = math.exp(-((x - 0.5) ** 2) / (2.0 * 0.49)) / math.sqrt(
            2.0 * math.pi * 0.49
        )
        assert rho == pytest.approx(closed, rel=1e-10, abs=1e-14)
    assert float(rows[0][3]) == 0.0  # theta integrated from the first grid point


def test_simulate_writes_trajectory_and_manifest(tmp_path):
    out = tmp_path / "run"
    code = main(
        [
            "simulate",
            "--potential",
            "newtonian",
            "--x0",
            "1.0",
            "--p0",
            "1.0",
            "--s0",
            "0.05",
            "--u-casimir",
            "1e-4",
            "--t-final",
            "2.0",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    header, rows = _read_csv(out / "trajectory.csv")
    assert header == ["t", "x", "p", "s", "ps", "energy", "casimir"]
    energies = np.array([float(r[5]) for r in rows])
    assert np.abs(energies - energies[0]).max() / abs(energies[0]) < 1e-7
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"


def test_simulate_singularity_gives_exit_3_with_partial_artifact(tmp_path):
    out = tmp_path / "run"
    code = main(
        [
            "simulate",
            "--potential",
            "free",
            "--s0",
            "1.0",
            "--ps0",
            "-2.0",
            "--u-casimir",
            "0.0",
            "--t-final",
            "2.0",
            "--out",
            str(out),
        ]
    )
    assert code == 3
    assert (out / "trajectory.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "singular"


def test_interferometer_rows(tmp_path):
    out = tmp_path / "run"
    code = main(
        [
            "interferometer",
            "--pulse-spacing",
            "1.0",
            "--hbar-k",
            "2.0",
            "--g",
            "0.0",
            "--gradient",
            "0.0,1e-3",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    header, rows = _read_csv(out / "mz_phase.csv")
    assert header == ["T", "k", "gradient", "separation", "dtheta"]
    assert len(rows) == 2
    free_row = rows[0]
    assert abs(float(free_row[3])) < 1e-9  # zero separation without a gradient
    assert abs(float(free_row[4])) < 1e-7
    grad_row = rows[1]
    assert float(grad_row[3]) != 0.0


def test_config_file_with_cli_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("g = 10\nd2g = 1e-12\nwidth = 1e-10\n# comment line\n")
    out = tmp_path / "run"
    code = main(
        ["eotvos", "--config", str(cfg), "--width", "1.0", "--out", str(out)]
    )
    assert code == 0
    _, rows = _read_csv(out / "eotvos.csv")
    assert len(rows) == 1
    assert float(rows[0][3]) == pytest.approx(0.5e-13)  # override wins


def test_unknown_config_key_is_exit_2(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("nonsense = 1\n")
    assert main(["eotvos", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_bad_value_is_exit_2(tmp_path):
    assert main(["eotvos", "--g", "ten", "--out", str(tmp_path / "o")]) == 2
    assert (
        main(
            [
                "return-time",
                "--eps-grid",
                "bad-grid",
                "--out",
                str(tmp_path / "o2"),
            ]
        )
        == 2
    )


def test_svg_flag_writes_plot(tmp_path):
    out = tmp_path / "run"
    code = main(
        [
            "return-time",
            "--u",
            "1e-2",
            "--eps-grid",
            "-0.5:-0.4:2",
            "--svg",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    svg = (out / "return_time.svg").read_text()
    assert svg.lstrip().startswith("<?xml")
