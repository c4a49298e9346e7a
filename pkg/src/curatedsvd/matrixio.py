"""Plain-text matrix files.

Layout::

    k r model_kind [param]
    i j value
    ...

Indices are 0-based; only nonzero entries are written. The same layout is
used for model matrices and observations.
"""
from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np
import scipy.sparse as sp

from .types import SPARSE_ENTRY_LIMIT, ModelKind, ModelMatrix, Observation


class MatrixFormatError(ValueError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


def _fmt(value: float) -> str:
    if value == int(value) and abs(value) < 2**53:
        return str(int(value))
    return repr(float(value))


def write_matrix(path: Union[str, Path], obj: Union[ModelMatrix, Observation]) -> None:
    r = obj.r if obj.r is not None else 0
    coo = sp.coo_matrix(obj.entries)
    order = np.lexsort((coo.col, coo.row))
    header = " ".join([str(obj.k), str(r), *obj.model_kind.header_tokens()])
    lines = [header]
    lines.extend(
        f"{i} {j} {_fmt(v)}"
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order])
    )
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path: Union[str, Path]):
    """Parse a matrix file into ``(k, r, kind, entries)``."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) not in (3, 4):
            raise MatrixFormatError(path, 1, "header must be 'k r model_kind [param]'")
        try:
            k, r = int(header[0]), int(header[1])
            kind = ModelKind.parse(header[2], header[3] if len(header) == 4 else None)
        except ValueError as exc:
            raise MatrixFormatError(path, 1, str(exc)) from None
        if k < 1 or r < 0:
            raise MatrixFormatError(path, 1, "k must be positive and r nonnegative")
        rows, cols, vals = [], [], []
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise MatrixFormatError(path, lineno, "expected 'i j value'")
            try:
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise MatrixFormatError(path, lineno, f"cannot parse {line.strip()!r}") from None
            if not (0 <= i < k and 0 <= j < k):
                raise MatrixFormatError(path, lineno, f"index ({i}, {j}) out of range for k={k}")
            rows.append(i)
            cols.append(j)
            vals.append(v)
    entries = sp.coo_matrix((vals, (rows, cols)), shape=(k, k)).tocsr()
    if k * k <= SPARSE_ENTRY_LIMIT:
        entries = entries.toarray()
    return k, r, kind, entries


def read_model(path) -> ModelMatrix:
    k, r, kind, entries = read_matrix(path)
    return ModelMatrix(k=k, r=max(r, 1), entries=entries, model_kind=kind)


def read_observation(path) -> Observation:
    k, r, kind, entries = read_matrix(path)
    return Observation(k=k, entries=entries, model_kind=kind, r=r or None)
