import pytest
import yaml
from naqc.cli import MAX_SIZE_HEADER, SWEEP_MID_HEADER, fit_size, main
from naqc.compiler import read_program
from naqc.fidelity import FIDELITY_HEADER
from naqc.lossim import (
    HOLE_FIDELITY_HEADER,
    HOLES_HEADER,
    OVERHEAD_HEADER,
    SENSITIVITY_HEADER,
    TRACE_HEADER,
)
from naqc.utilities import read_csv


def _config(tmp_path, text):
    path = tmp_path / "naqc.yaml"
    path.write_text(text)
    return str(path)


def _header(path):
    with open(str(path)) as fin:
        return fin.readline().strip().split(",")


def test_fit_size():
    """
    """
    assert fit_size("bv", 10) == 10
    assert fit_size("cuccaro", 11) == 10
    assert fit_size("cnu", 50) == 49
    assert fit_size("cuccaro", 3) is None


def test_print_config(capsys):
    """
    """
    assert main(["print-config", "--seed", "7"]) == 0
    data = yaml.safe_load(capsys.readouterr().out)
    assert data["sweep"]["seed"] == 7
    assert data["hardware"]["mid"] == 3.0


def test_compile_benchmark(tmp_path, capsys):
    """
    """
    out = tmp_path / "out"
    argv = ["compile", "--benchmark", "bv", "--size", "10", "--mid", "13", "--out", str(out)]
    assert main(argv) == 0
    printed = capsys.readouterr().out
    assert "gates=29" in printed
    assert "swaps=0" in printed
    cp = read_program(str(out / "bv_10.sched"))
    assert cp.grid.mid == 13
    assert cp.swap_count == 0

    output = str(tmp_path / "ideal.sched")
    assert main(argv + ["--ideal-no-zones", "--output", output]) == 0
    ideal = read_program(output)
    assert ideal.ideal_no_zones
    assert ideal.gate_count == cp.gate_count


def test_compile_circuit_file(tmp_path, capsys):
    """
    """
    circuit = tmp_path / "pair.circ"
    circuit.write_text("naqc-circuit v1\nqubits 2\nh 0\ncx 0,1\nmeasure 0,1\n")
    out = tmp_path / "out"
    assert main(["compile", "--circuit", str(circuit), "--out", str(out)]) == 0
    assert "gates=2" in capsys.readouterr().out
    assert read_program(str(out / "pair.sched")).gate_count == 2


def test_compile_errors(tmp_path, capsys):
    """
    """
    circuit = tmp_path / "bad.circ"
    circuit.write_text("naqc-circuit v1\nqubits 2\ncx 0,5\n")
    assert main(["compile", "--circuit", str(circuit), "--out", str(tmp_path)]) == 1
    assert "line 3" in capsys.readouterr().err

    assert main(["compile", "--benchmark", "bv", "--out", str(tmp_path)]) == 1
    assert "--size" in capsys.readouterr().err
    assert main(["compile", "--benchmark", "bv", "--size", "200", "--out", str(tmp_path)]) == 1
    missing = str(tmp_path / "missing.yaml")
    assert main(["print-config", "--config", missing]) == 1
    assert main(["print-config", "--config", _config(tmp_path, "grid: 1\n")]) == 1


def test_usage_errors():
    """
    """
    assert main([]) == 1
    assert main(["assemble"]) == 1
    assert main(["compile", "--benchmark", "grover", "--size", "4"]) == 1
    assert main(["--help"]) == 0


def test_sweep_mid(tmp_path):
    """
    """
    cfg = _config(
        tmp_path,
        "hardware:\n  width: 5\n  height: 5\n"
        "sweep:\n  benchmarks: [bv, cuccaro]\n  sizes: [6, 40]\n  mids: [1, 2]\n",
    )
    out = tmp_path / "a"
    with pytest.warns(UserWarning, match="Skipping"):
        assert main(["sweep-mid", "--config", cfg, "--out", str(out)]) == 0
    assert _header(out / "sweep_mid.csv") == SWEEP_MID_HEADER
    rows = read_csv(str(out / "sweep_mid.csv"))
    assert len(rows) == 5
    assert [row["benchmark"] for row in rows] == ["bv"] * 2 + ["cuccaro"] * 3
    # below MID sqrt(2) only the decomposed adder is compiled
    assert rows[2]["mid"] == "1.0"
    assert rows[2]["decomposed"] == "1"
    assert rows[3]["decomposed"] == "0"
    assert rows[3]["native3q"] == "4"
    assert rows[4]["decomposed"] == "1"
    for row in rows:
        assert int(row["ideal_depth"]) <= int(row["depth"])

    again = tmp_path / "b"
    with pytest.warns(UserWarning):
        main(["sweep-mid", "--config", cfg, "--out", str(again)])
    assert (out / "sweep_mid.csv").read_text() == (again / "sweep_mid.csv").read_text()


def test_sweep_error(tmp_path, capsys):
    """
    """
    cfg = _config(
        tmp_path,
        "hardware:\n  width: 3\n  height: 3\n"
        "sweep:\n  benchmarks: [bv]\n  error_size: 6\n  error_mid: 2\n"
        "  p2_values: [0.9, 1.0]\n",
    )
    assert main(["sweep-error", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert "p2" in capsys.readouterr().out
    assert _header(tmp_path / "fidelity.csv") == FIDELITY_HEADER + ["error_rate"]
    assert len(read_csv(str(tmp_path / "fidelity.csv"))) == 2
    assert _header(tmp_path / "max_size.csv") == MAX_SIZE_HEADER
    sizes = [int(row["max_size"]) for row in read_csv(str(tmp_path / "max_size.csv"))]
    assert sizes[0] <= sizes[1] == 9


def test_loss(tmp_path):
    """
    """
    cfg = _config(
        tmp_path,
        "hardware:\n  width: 4\n  height: 4\n"
        "loss:\n  p_vacuum: 0.0\n  p_measure: 0.0\n"
        "sweep:\n  loss_benchmark: bv\n  loss_size: 4\n  loss_mids: [2]\n"
        "  strategies: [AlwaysReload, VirtualRemap, CompileSmallReroute]\n"
        "  trials: 2\n  target_shots: 5\n  loss_factors: [1, 10]\n"
        "  sensitivity_strategies: [VirtualRemap]\n  sensitivity_trials: 2\n"
        "  sensitivity_max_shots: 20\n",
    )
    assert main(["loss", "--config", cfg, "--out", str(tmp_path)]) == 0
    for fname, header in (
        ("holes.csv", HOLES_HEADER),
        ("trace.csv", TRACE_HEADER),
        ("overhead.csv", OVERHEAD_HEADER),
        ("loss_sensitivity.csv", SENSITIVITY_HEADER),
        ("hole_fidelity.csv", HOLE_FIDELITY_HEADER),
    ):
        assert _header(tmp_path / fname) == header
    assert len(read_csv(str(tmp_path / "holes.csv"))) == 6
    overhead = read_csv(str(tmp_path / "overhead.csv"))
    assert [row["strategy"] for row in overhead] == [
        "AlwaysReload",
        "VirtualRemap",
        "CompileSmallReroute",
    ]
    assert all(row["reloads"] == "0" for row in overhead)
    sensitivity = read_csv(str(tmp_path / "loss_sensitivity.csv"))
    assert [float(row["shots_before_reload"]) for row in sensitivity] == [20.0, 20.0]
