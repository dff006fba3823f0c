import csv
import os
import sys
from multiprocessing import Pool
from typing import Callable, Iterable, List, Sequence
import numpy as np


def sweep(func: Callable, params: Iterable, processes: int = 1) -> List:
    """
    Evaluate a function over a list of parameters, in parallel when
    more than one process is requested.  Results are returned in the
    order of ``params`` regardless of completion order.

    :param func: Function object taking one item in the `params` list.
        It must be picklable (a module-level function) when
        ``processes`` > 1.
    :param params: List of parameter values to sweep over.
    :param processes: Max number of parallel processes.  1 runs in the
        calling process.
    """
    params = list(params)
    if processes is None or processes <= 1 or len(params) <= 1:
        return [func(param) for param in params]

    with Pool(processes=processes) as pool:
        ret_vals = list(pool.map(func, params))
    return ret_vals


def write_csv(path: str, header: Sequence[str], rows: Iterable[dict]) -> str:
    """
    Write rows to a CSV file with a fixed column order.  Floats are
    written with repr precision so identical inputs give byte-identical
    files.

    :param path: Output file path.  Parent directories are created.
    :param header: Column names, in output order.
    :param rows: Dicts keyed by column name.  Extra keys are an error.

    :returns: The path written.
    """
    dirname = os.path.dirname(os.path.abspath(path))
    if not os.path.exists(dirname):
        os.makedirs(dirname)

    with open(path, "w", newline="") as fout:
        writer = csv.DictWriter(
            fout, fieldnames=list(header), lineterminator="\n"
        )
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _csv_value(val) for key, val in row.items()})
    return path


def read_csv(path: str) -> List[dict]:
    """
    Read a CSV written by ``write_csv`` back as a list of string
    dicts.
    """
    with open(path, newline="") as fin:
        return list(csv.DictReader(fin))


def _csv_value(val):
    """
    """
    if isinstance(val, (bool, np.bool_)):
        return int(val)
    if isinstance(val, (float, np.floating)):
        return repr(float(val))
    if isinstance(val, np.integer):
        return int(val)
    return val


def print_table(
    data, col_names: List[str], prec: List[int], out_file=None,
) -> None:
    """
    Data is multidimensional list, where each inner list corresponds
    to a column.  Writes to standard output unless ``out_file`` is
    given.
    """
    if out_file is None:
        out_file = sys.stdout
    extra_space = 3
    data = np.array(data, dtype=float)
    col_widths = [
        max(
            int(
                _val_digits(np.amax(np.absolute(data[col])))
                + prec[col]
                + 2
                + extra_space
            ),
            len(col_names[col]) + extra_space,
        )
        for col in range(len(col_names))
    ]
    for i, col in enumerate(col_names):
        out_file.write("{:{width}}".format(col, width=col_widths[i]))
    out_file.write("\n")

    data = data.T
    for row in data:
        for i, val in enumerate(row):
            out_file.write(
                "{:<{width}.{prec}f}".format(
                    val, width=col_widths[i], prec=prec[i]
                )
            )
        out_file.write("\n")


def _val_digits(val: float) -> int:
    """
    Compute the number of decimal digits needed to display the
    integral portion of a value.
    """
    # assume negative for simplicity
    extra_digits = 2

    if val < 10:
        return extra_digits + 1

    return int(np.log10(val)) + extra_digits
