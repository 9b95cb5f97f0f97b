"""Matrix load/store: MatrixMarket *array* format and headerless CSV.

CSV holds one matrix row per line; complex entries are written ``a+bi``.
Malformed input raises :class:`MatrixFormatError` carrying the 1-based line
number of the offending line.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "MatrixFormatError",
    "read_matrix",
    "write_matrix",
    "read_mtx",
    "write_mtx",
    "read_csv",
    "write_csv",
    "parse_complex",
    "format_complex",
]


class MatrixFormatError(ValueError):
    def __init__(self, msg, path=None, lineno=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}"
        super().__init__(f"{where}: {msg}" if where else msg)
        self.path = path
        self.lineno = lineno


def parse_complex(token: str) -> complex:
    """Parse ``'1.5'``, ``'-2i'``, ``'1e-3-4.5i'``; a trailing ``j`` is accepted too."""
    t = token.strip()
    if not t:
        raise ValueError("empty entry")
    if t[-1] in "iI":
        t = t[:-1] + "j"
    try:
        return complex(t)
    except ValueError:
        raise ValueError(f"cannot parse entry {token!r}") from None


def format_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}i"


def read_mtx(path) -> np.ndarray:
    """Read a dense MatrixMarket array file (real or complex, general)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixFormatError("empty file", path, 1)
    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket":
        raise MatrixFormatError("missing %%MatrixMarket banner", path, 1)
    obj, fmt, field, sym = (h.lower() for h in header[1:])
    if obj != "matrix" or fmt != "array":
        raise MatrixFormatError(f"only 'matrix array' is supported, got '{obj} {fmt}'", path, 1)
    if field not in ("real", "double", "integer", "complex"):
        raise MatrixFormatError(f"unsupported field {field!r}", path, 1)
    if sym != "general":
        raise MatrixFormatError(f"unsupported symmetry {sym!r}", path, 1)
    is_complex = field == "complex"

    body = [(i + 1, ln) for i, ln in enumerate(lines[1:], start=1) if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixFormatError("missing size line", path, len(lines))
    lineno, size_line = body[0]
    parts = size_line.split()
    try:
        rows, cols = (int(p) for p in parts)
    except ValueError:
        raise MatrixFormatError(f"bad size line {size_line!r}", path, lineno) from None
    if rows <= 0 or cols <= 0:
        raise MatrixFormatError("dimensions must be positive", path, lineno)

    entries = body[1:]
    if len(entries) != rows * cols:
        ln = entries[-1][0] if entries else lineno
        raise MatrixFormatError(
            f"expected {rows * cols} entries, found {len(entries)}", path, ln
        )
    data = np.empty(rows * cols, dtype=np.complex128 if is_complex else np.float64)
    for idx, (ln, text) in enumerate(entries):
        parts = text.split()
        try:
            if is_complex:
                if len(parts) != 2:
                    raise ValueError
                data[idx] = complex(float(parts[0]), float(parts[1]))
            else:
                if len(parts) != 1:
                    raise ValueError
                data[idx] = float(parts[0])
        except ValueError:
            raise MatrixFormatError(f"bad entry {text.strip()!r}", path, ln) from None
    return data.reshape((rows, cols), order="F")


def write_mtx(path, A) -> None:
    A = np.asarray(A)
    if A.ndim == 1:
        A = A[:, None]
    is_complex = np.iscomplexobj(A)
    field = "complex" if is_complex else "real"
    rows, cols = A.shape
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix array {field} general\n")
        fh.write(f"{rows} {cols}\n")
        for z in A.ravel(order="F"):
            if is_complex:
                fh.write(f"{z.real:.17g} {z.imag:.17g}\n")
            else:
                fh.write(f"{float(z):.17g}\n")


def read_csv(path) -> np.ndarray:
    rows = []
    width = None
    is_complex = False
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            tokens = line.strip().split(",")
            if width is None:
                width = len(tokens)
            elif len(tokens) != width:
                raise MatrixFormatError(
                    f"expected {width} entries, found {len(tokens)}", path, lineno
                )
            try:
                vals = [parse_complex(t) for t in tokens]
            except ValueError as exc:
                raise MatrixFormatError(str(exc), path, lineno) from None
            is_complex = is_complex or any(v.imag != 0 for v in vals)
            rows.append(vals)
    if not rows:
        raise MatrixFormatError("no data rows", path, 1)
    A = np.array(rows, dtype=np.complex128)
    return A if is_complex else A.real.copy()


def write_csv(path, A) -> None:
    A = np.asarray(A)
    if A.ndim == 1:
        A = A[:, None]
    is_complex = np.iscomplexobj(A)
    with open(path, "w") as fh:
        for row in A:
            if is_complex:
                fh.write(",".join(format_complex(z) for z in row) + "\n")
            else:
                fh.write(",".join(f"{float(x):.17g}" for x in row) + "\n")


def read_matrix(path) -> np.ndarray:
    """Dispatch on extension: ``.mtx``/``.mm`` are MatrixMarket, anything else CSV."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".mtx", ".mm"):
        return read_mtx(path)
    return read_csv(path)


def write_matrix(path, A) -> None:
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".mtx", ".mm"):
        write_mtx(path, A)
    else:
        write_csv(path, A)
