"""Reader for the LIBSVM sparse text format (``label idx:val idx:val ...``)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import ParseError


@dataclass(frozen=True)
class LibSVMDataset:
    features: sparse.csr_matrix
    labels: np.ndarray
    name: str = "libsvm"

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.labels.size


def _label(tok: str, lineno: int) -> int:
    try:
        value = float(tok)
    except ValueError:
        raise ParseError(f"non-numeric label {tok!r}", lineno) from None
    if not value.is_integer():
        raise ParseError(f"non-integer label {tok!r}", lineno)
    return int(value)


def parse_libsvm(text: str, name: str = "libsvm") -> LibSVMDataset:
    """Parse LIBSVM text. Indices are 1-based and must strictly increase within a line.

    Blank lines and ``#`` comments are skipped. Column ``j`` of the returned
    matrix holds feature index ``j + 1``.
    """
    labels, rows, cols, vals = [], [], [], []
    dim = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        labels.append(_label(tokens[0], lineno))
        row = len(labels) - 1
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"expected idx:val, got {tok!r}", lineno)
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(f"non-numeric token {tok!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"feature index {idx} is not 1-based", lineno)
            if idx <= prev:
                raise ParseError("indices not increasing", lineno)
            prev = idx
            rows.append(row)
            cols.append(idx - 1)
            vals.append(val)
        dim = max(dim, prev)
    features = sparse.csr_matrix(
        (np.array(vals, dtype=np.float64), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
        shape=(len(labels), dim),
    )
    return LibSVMDataset(features, np.array(labels, dtype=np.int64), name)


def load_libsvm(path: str | Path) -> LibSVMDataset:
    path = Path(path)
    return parse_libsvm(path.read_text(), name=path.stem)
