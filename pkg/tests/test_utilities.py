import io
import pytest
import numpy as np
from naqc.fp import fp_lep, fp_ltp, fp_nearest
from naqc.utilities import print_table, read_csv, sweep, write_csv


def test_sweep_keeps_order():
    """
    """
    params = [3, -1, 4, -1, 5]
    assert sweep(abs, params) == [3, 1, 4, 1, 5]
    assert sweep(abs, params, processes=2) == [3, 1, 4, 1, 5]
    assert sweep(abs, []) == []


def test_csv(tmp_path):
    """
    """
    path = str(tmp_path / "nested" / "rows.csv")
    rows = [
        {"name": "bv", "ok": True, "p": 0.1 + 0.2, "n": np.int64(3)},
        {"name": "cnu", "ok": np.bool_(False), "p": np.float64(1.0), "n": 4},
    ]
    assert write_csv(path, ["name", "ok", "p", "n"], rows) == path
    back = read_csv(path)
    assert back[0] == {"name": "bv", "ok": "1", "p": repr(0.1 + 0.2), "n": "3"}
    assert back[1] == {"name": "cnu", "ok": "0", "p": "1.0", "n": "4"}
    with pytest.raises(ValueError):
        write_csv(path, ["name"], [{"name": "bv", "extra": 1}])


def test_print_table():
    """
    """
    out = io.StringIO()
    print_table([[0.9, 1.0], [4, 9]], ["p2", "bv"], [2, 0], out_file=out)
    lines = out.getvalue().splitlines()
    assert lines[0].split() == ["p2", "bv"]
    assert lines[1].split() == ["0.90", "4"]
    assert lines[2].split() == ["1.00", "9"]


def test_print_table_stdout(capsys):
    """
    """
    print_table([[0.5], [3]], ["p2", "cnu"], [1, 0])
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["p2", "cnu"]
    assert lines[1].split() == ["0.5", "3"]


def test_fp():
    """
    """
    diag = np.hypot(1, 1)
    assert fp_nearest(diag) == fp_nearest(np.sqrt(2))
    assert fp_lep(np.sqrt(8) / 2, diag)
    assert not fp_ltp(np.sqrt(8) / 2, diag)
    assert fp_ltp(diag, 2)
    assert fp_nearest(1 / 3) == np.around(1 / 3, 10)
