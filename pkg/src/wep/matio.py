"""Text matrix files and structured text reports.

Matrix file layout (blank lines and ``#`` comments are ignored)::

    rows 2
    cols 2
    data
    1.0000000000000000e+00 0.0000000000000000e+00
    ...

``data`` is followed by ``rows * cols`` lines, one ``re im`` pair per
entry in row-major order.  Values are written with 17 significant digits,
which round-trips every double exactly.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

PathLike = Union[str, Path]


class MatrixFileError(ValueError):
    def __init__(self, msg: str, line: int = 0, fieldname: str = "", source: str = ""):
        self.line = line
        self.field = fieldname
        where = f"{source or '<matrix>'}:{line}" if line else (source or "<matrix>")
        if fieldname:
            where += f" [{fieldname}]"
        super().__init__(f"{where}: {msg}")


def format_matrix(a) -> str:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError("matrix must be 2-D")
    lines = [f"rows {a.shape[0]}", f"cols {a.shape[1]}", "data"]
    for z in a.reshape(-1):
        lines.append(f"{z.real:.16e} {z.imag:.16e}")
    return "\n".join(lines) + "\n"


def parse_matrix(text: str, source: str = "") -> np.ndarray:
    header = {}
    data = []
    in_data = False
    last = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        last = lineno
        if not in_data:
            parts = line.split()
            key = parts[0].lower()
            if key == "data":
                if len(parts) != 1:
                    raise MatrixFileError("'data' takes no arguments", lineno, "data", source)
                in_data = True
                continue
            if key not in ("rows", "cols"):
                raise MatrixFileError(f"unknown field {parts[0]!r}", lineno, parts[0], source)
            if len(parts) != 2:
                raise MatrixFileError(f"expected '{key} <integer>'", lineno, key, source)
            try:
                value = int(parts[1])
            except ValueError:
                raise MatrixFileError(f"not an integer: {parts[1]!r}", lineno, key, source) from None
            if value < 1:
                raise MatrixFileError(f"{key} must be positive", lineno, key, source)
            header[key] = value
            continue
        parts = line.split()
        entry = len(data)
        if len(parts) != 2:
            raise MatrixFileError(f"entry {entry}: expected 're im', got {len(parts)} values",
                                  lineno, "data", source)
        try:
            re, im = float(parts[0]), float(parts[1])
        except ValueError:
            raise MatrixFileError(f"entry {entry}: not a number", lineno, "data", source) from None
        if not (math.isfinite(re) and math.isfinite(im)):
            raise MatrixFileError(f"entry {entry}: non-finite value", lineno, "data", source)
        data.append(complex(re, im))
    for key in ("rows", "cols"):
        if key not in header:
            raise MatrixFileError(f"missing field '{key}'", 0, key, source)
    if not in_data:
        raise MatrixFileError("missing 'data' section", 0, "data", source)
    expected = header["rows"] * header["cols"]
    if len(data) != expected:
        raise MatrixFileError(f"expected {expected} entries, found {len(data)}", last, "data", source)
    return np.array(data, dtype=np.complex128).reshape(header["rows"], header["cols"])


def read_matrix(path: PathLike) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MatrixFileError(f"cannot read: {exc.strerror}", 0, "", str(path)) from None
    return parse_matrix(text, str(path))


def write_matrix(path: PathLike, a) -> None:
    Path(path).write_text(format_matrix(a))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6e}"
    return str(value)


def format_report(fields: Iterable[Tuple[str, object]], notes: Sequence[str] = ()) -> str:
    """``key = value`` lines followed by a ``#`` prose section."""
    lines = [f"{k} = {_fmt(v)}" for k, v in fields]
    if notes:
        lines.append("")
        lines.extend(f"# {n}" for n in notes)
    return "\n".join(lines) + "\n"
