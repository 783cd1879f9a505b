"""Text serialization of far-field matrices and atomic file writes.

Format::

    lsmlab-farfield N=<n> k=<k> provenance=<tag> n_full=<N> indices=<i0,i1,...>
    re im re im ...        (one line per matrix row, N pairs per line)

All numbers are written with 17 significant digits, which round-trips IEEE
doubles exactly.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .farfield import PROVENANCES, FarFieldMatrix
from .geometry import DirectionGrid

MAGIC = "lsmlab-farfield"


class MatrixFormatError(ValueError):
    def __init__(self, path, line, reason):
        super().__init__(f"{path}:{line}: {reason}")
        self.line = line
        self.reason = reason


def fmt(x):
    return format(float(x), ".17g")


def atomic_write_text(path, text):
    """Write ``text`` to a temporary file next to ``path`` and rename it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_matrix(F: FarFieldMatrix) -> str:
    header = (
        f"{MAGIC} N={F.n} k={fmt(F.k)} provenance={F.provenance} "
        f"n_full={F.grid.n_full} indices={','.join(map(str, F.grid.indices))}"
    )
    lines = [header]
    for row in F.entries:
        lines.append(" ".join(f"{fmt(v.real)} {fmt(v.imag)}" for v in row))
    return "\n".join(lines) + "\n"


def save_matrix(F: FarFieldMatrix, path):
    atomic_write_text(path, dumps_matrix(F))


def _parse_header(path, line):
    tokens = line.split()
    if not tokens or tokens[0] != MAGIC:
        raise MatrixFormatError(path, 1, f"expected header starting with {MAGIC!r}")
    fields = {}
    for tok in tokens[1:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise MatrixFormatError(path, 1, f"malformed header token {tok!r}")
        fields[key] = value
    for key in ("N", "k", "provenance"):
        if key not in fields:
            raise MatrixFormatError(path, 1, f"header is missing {key}")
    try:
        n = int(fields["N"])
        k = float(fields["k"])
        n_full = int(fields.get("n_full", n))
        indices = (
            tuple(int(i) for i in fields["indices"].split(","))
            if fields.get("indices")
            else tuple(range(n))
        )
    except ValueError as exc:
        raise MatrixFormatError(path, 1, f"bad header value: {exc}") from None
    if fields["provenance"] not in PROVENANCES:
        raise MatrixFormatError(path, 1, f"unknown provenance {fields['provenance']!r}")
    if len(indices) != n:
        raise MatrixFormatError(path, 1, f"indices list has {len(indices)} entries, N={n}")
    return n, k, fields["provenance"], DirectionGrid(n_full, indices)


def load_matrix(path) -> FarFieldMatrix:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise MatrixFormatError(path, 1, "empty file")
    n, k, provenance, grid = _parse_header(path, lines[0])
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != n:
        raise MatrixFormatError(
            path, len(lines) + 1, f"dimension mismatch: header N={n} but {len(body)} data rows"
        )
    F = np.empty((n, n), dtype=complex)
    for r, line in enumerate(body):
        lineno = r + 2
        parts = line.split()
        if len(parts) != 2 * n:
            raise MatrixFormatError(
                path, lineno, f"expected {2 * n} numbers ({n} re/im pairs), got {len(parts)}"
            )
        try:
            vals = np.array([float(p) for p in parts])
        except ValueError as exc:
            raise MatrixFormatError(path, lineno, str(exc)) from None
        F[r] = vals[0::2] + 1j * vals[1::2]
    return FarFieldMatrix(F, grid, k, provenance)
