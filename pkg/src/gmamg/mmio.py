"""
Matrix Market coordinate files.

Only ``matrix coordinate {real,integer,pattern} {general,symmetric}`` is
accepted.  Symmetric files are expanded to full storage on read.  Both LF
and CRLF line endings are understood.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, MatrixMarketError
from .sparse import SparseMatrix

_FIELDS = ("real", "integer", "pattern")
_SYMMETRIES = ("general", "symmetric")


@dataclass(frozen=True)
class MatrixMarketHeader:
    object: str = "matrix"
    format: str = "coordinate"
    field_type: str = "real"
    symmetry: str = "general"
    comments: tuple = ()


def _text_lines(stream):
    data = stream.read()
    if isinstance(data, bytes):
        data = data.decode("ascii", errors="replace")
    return data.splitlines()


def _parse_banner(line):
    parts = line.split()
    if len(parts) != 5 or parts[0].lower() != "%%matrixmarket":
        raise MatrixMarketError(1, "missing or malformed %%MatrixMarket banner")
    obj, fmt, fld, sym = (p.lower() for p in parts[1:])
    if obj != "matrix":
        raise MatrixMarketError(1, f"unsupported object {obj!r}")
    if fmt != "coordinate":
        raise MatrixMarketError(1, f"unsupported format {fmt!r} (only coordinate)")
    if fld not in _FIELDS:
        raise MatrixMarketError(1, f"unsupported field {fld!r}")
    if sym not in _SYMMETRIES:
        raise MatrixMarketError(1, f"unsupported symmetry {sym!r}")
    return obj, fmt, fld, sym


def read_matrix_market_full(stream):
    """Parse a coordinate file; return ``(header, matrix)``.

    ``header.comments`` holds the comment lines (without the leading ``%``).
    """
    lines = _text_lines(stream)
    if not lines:
        raise MatrixMarketError(1, "empty file")
    obj, fmt, fld, sym = _parse_banner(lines[0])
    comments = []
    k = 1
    while k < len(lines) and (not lines[k].strip() or lines[k].lstrip().startswith("%")):
        if lines[k].lstrip().startswith("%"):
            comments.append(lines[k].lstrip()[1:].strip())
        k += 1
    if k >= len(lines):
        raise MatrixMarketError(k, "missing size line")
    size = lines[k].split()
    try:
        nrows, ncols, nnz = (int(t) for t in size)
    except ValueError:
        raise MatrixMarketError(k + 1, "size line must hold three integers") from None
    if min(nrows, ncols, nnz) < 0:
        raise MatrixMarketError(k + 1, "negative size")
    if sym == "symmetric" and nrows != ncols:
        raise MatrixMarketError(k + 1, "symmetric matrix must be square")

    ntok = 2 if fld == "pattern" else 3
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.ones(nnz)
    count = 0
    for lineno in range(k + 2, len(lines) + 1):
        text = lines[lineno - 1]
        tok = text.split()
        if not tok or tok[0].startswith("%"):
            continue
        if count == nnz:
            raise MatrixMarketError(lineno, f"more than the declared {nnz} entries")
        if len(tok) != ntok:
            raise MatrixMarketError(lineno, f"expected {ntok} fields, got {len(tok)}")
        try:
            i, j = int(tok[0]), int(tok[1])
            if ntok == 3:
                vals[count] = float(int(tok[2])) if fld == "integer" else float(tok[2])
        except ValueError:
            raise MatrixMarketError(lineno, "malformed entry") from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(lineno, f"index ({i}, {j}) out of range")
        if sym == "symmetric" and j > i:
            raise MatrixMarketError(lineno, "symmetric file stores the lower triangle only")
        rows[count], cols[count] = i - 1, j - 1
        count += 1
    if count != nnz:
        raise MatrixMarketError(len(lines), f"declared {nnz} entries, found {count}")

    if sym == "symmetric":
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    header = MatrixMarketHeader(obj, fmt, fld, sym, tuple(comments))
    return header, SparseMatrix.from_triplets(nrows, ncols, rows, cols, vals)


def read_matrix_market(stream):
    """Read a coordinate Matrix Market file from a text or byte stream."""
    return read_matrix_market_full(stream)[1]


def write_matrix_market(A, symmetric_hint, stream, comments=()):
    """Write ``A`` as a coordinate real file.

    With ``symmetric_hint`` only the lower triangle is written; ``A`` must
    then be exactly symmetric.  Values carry 17 significant digits.
    """
    if symmetric_hint and not A.is_symmetric():
        raise ContractError("symmetric_hint given for a matrix that is not exactly symmetric")
    rows, cols, vals = A.row_indices, A.col_indices, A.values
    if symmetric_hint:
        keep = cols <= rows
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    out = io.StringIO()
    out.write(f"%%MatrixMarket matrix coordinate real {'symmetric' if symmetric_hint else 'general'}\n")
    for c in comments:
        out.write(f"% {c}\n")
    out.write(f"{A.nrows} {A.ncols} {vals.size}\n")
    for i, j, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
        out.write(f"{i + 1} {j + 1} {v:.17g}\n")
    text = out.getvalue()
    if isinstance(stream, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(stream, "mode", ""):
        stream.write(text.encode("ascii"))
    else:
        stream.write(text)


def read_vector(stream):
    """Read an ``n x 1`` coordinate file as a dense vector."""
    A = read_matrix_market(stream)
    if A.ncols != 1:
        raise ContractError(f"vector file must have one column, got {A.ncols}")
    x = np.zeros(A.nrows)
    x[A.row_indices] = A.values
    return x


def write_vector(x, stream, comments=()):
    """Write a dense vector as an ``n x 1`` coordinate file (every entry stored)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    A = SparseMatrix(n, 1, np.arange(n + 1), np.zeros(n, dtype=np.int64), x)
    write_matrix_market(A, False, stream, comments)
