"""Text formats: ``.mrf`` energies and ``.spm`` sparse triplets.

``.mrf``::

    MRF n l
    UNARY
    <n lines of l reals>
    V
    <l lines of l reals>
    EDGES m
    <m lines "i j w">

``.spm``::

    SPARSE rows cols nnz
    <nnz lines "r c v">

Blank lines and ``#`` comments are ignored. Indices are 0-based. Reals are
written with ``repr`` so a write/read round trip is exact.
"""
import os

import numpy as np
import scipy.sparse as sp

from .energy import EnergyInstance
from .exceptions import InvalidArgumentError, ParseError

__all__ = [
    "format_mrf", "parse_mrf", "write_mrf", "read_mrf",
    "format_spm", "parse_spm", "write_spm", "read_spm",
    "dump_pyramid",
]


def _fmt(x):
    return repr(float(x))


def format_mrf(e):
    out = [f"MRF {e.n} {e.l}", "UNARY"]
    out.extend(" ".join(_fmt(v) for v in row) for row in e.unary)
    out.append("V")
    out.extend(" ".join(_fmt(v) for v in row) for row in e.label_costs)
    out.append(f"EDGES {e.n_edges}")
    out.extend(f"{i} {j} {_fmt(w)}" for i, j, w in zip(e.rows, e.cols, e.weights))
    return "\n".join(out) + "\n"


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


class _Reader:
    def __init__(self, text, path):
        self.lines = list(_content_lines(text))
        self.pos = 0
        self.path = path

    def error(self, msg, lineno=None):
        if lineno is None:
            lineno = self.lines[self.pos - 1][0] if self.pos else None
        return ParseError(msg, lineno, self.path)

    def next(self, what):
        if self.pos >= len(self.lines):
            last = self.lines[-1][0] if self.lines else None
            raise ParseError(f"unexpected end of file, expected {what}", last, self.path)
        item = self.lines[self.pos]
        self.pos += 1
        return item

    def header(self, keyword, nargs):
        lineno, tok = self.next(keyword)
        if tok[0] != keyword or len(tok) != 1 + nargs:
            raise ParseError(f"expected '{keyword}' with {nargs} integer argument(s)", lineno, self.path)
        try:
            vals = [int(t) for t in tok[1:]]
        except ValueError:
            raise ParseError(f"non-integer argument in '{keyword}' line", lineno, self.path) from None
        return lineno, vals

    def reals(self, count, what):
        lineno, tok = self.next(what)
        if len(tok) != count:
            raise ParseError(f"{what}: expected {count} values, got {len(tok)}", lineno, self.path)
        try:
            vals = [float(t) for t in tok]
        except ValueError:
            raise ParseError(f"{what}: non-numeric value", lineno, self.path) from None
        if not all(np.isfinite(vals)):
            raise ParseError(f"{what}: non-finite value", lineno, self.path)
        return lineno, vals

    def end(self):
        if self.pos < len(self.lines):
            lineno, _ = self.lines[self.pos]
            raise ParseError("trailing content after end of data", lineno, self.path)


def parse_mrf(text, path=None):
    """Parse ``.mrf`` text into an :class:`EnergyInstance`.

    Raises :class:`ParseError` naming the offending line.
    """
    rd = _Reader(text, path)
    lineno, (n, l) = rd.header("MRF", 2)
    if n < 1 or l < 1:
        raise ParseError("n and l must be >= 1", lineno, path)
    rd.header("UNARY", 0)
    D = np.array([rd.reals(l, f"unary row {i}")[1] for i in range(n)])
    rd.header("V", 0)
    v_lines, V = [], []
    for a in range(l):
        ln, row = rd.reals(l, f"V row {a}")
        v_lines.append(ln)
        V.append(row)
    V = np.array(V)
    for a in range(l):
        for b in range(a):
            if V[a, b] != V[b, a]:
                raise ParseError(f"V is not symmetric at ({a}, {b})", v_lines[a], path)
    lineno, (m,) = rd.header("EDGES", 1)
    if m < 0:
        raise ParseError("edge count must be >= 0", lineno, path)
    rows = np.zeros(m, dtype=np.int64)
    cols = np.zeros(m, dtype=np.int64)
    w = np.zeros(m)
    seen = {}
    for k in range(m):
        ln, tok = rd.next(f"edge {k}")
        if len(tok) != 3:
            raise ParseError(f"edge line must be 'i j w', got {len(tok)} fields", ln, path)
        try:
            i, j = int(tok[0]), int(tok[1])
            wk = float(tok[2])
        except ValueError:
            raise ParseError("malformed edge line", ln, path) from None
        if not (0 <= i <= j < n):
            raise ParseError(f"edge ({i}, {j}) must satisfy 0 <= i <= j < {n}", ln, path)
        if not np.isfinite(wk):
            raise ParseError("non-finite edge weight", ln, path)
        if (i, j) in seen:
            raise ParseError(f"duplicate edge ({i}, {j}), first on line {seen[(i, j)]}", ln, path)
        seen[(i, j)] = ln
        rows[k], cols[k], w[k] = i, j, wk
    rd.end()
    try:
        return EnergyInstance(D, V, rows, cols, w)
    except InvalidArgumentError as exc:
        raise ParseError(str(exc), None, path) from exc


def write_mrf(e, path):
    with open(path, "w") as fh:
        fh.write(format_mrf(e))


def read_mrf(path):
    with open(path) as fh:
        return parse_mrf(fh.read(), path=str(path))


def format_spm(M):
    """Triplet text of a sparse or dense matrix (or an object with ``matrix``)."""
    if hasattr(M, "matrix"):
        M = M.matrix
    if hasattr(M, "to_matrix"):
        M = M.to_matrix()
    C = sp.coo_matrix(M)
    C.sum_duplicates()
    order = np.lexsort((C.col, C.row))
    out = [f"SPARSE {C.shape[0]} {C.shape[1]} {C.nnz}"]
    out.extend(
        f"{r} {c} {_fmt(v)}" for r, c, v in zip(C.row[order], C.col[order], C.data[order])
    )
    return "\n".join(out) + "\n"


def parse_spm(text, path=None):
    """Parse triplet text into a CSR matrix."""
    rd = _Reader(text, path)
    lineno, (nr, nc, nnz) = rd.header("SPARSE", 3)
    if nr < 0 or nc < 0 or nnz < 0:
        raise ParseError("dimensions must be >= 0", lineno, path)
    r = np.zeros(nnz, dtype=np.int64)
    c = np.zeros(nnz, dtype=np.int64)
    v = np.zeros(nnz)
    for k in range(nnz):
        ln, tok = rd.next(f"entry {k}")
        if len(tok) != 3:
            raise ParseError("entry line must be 'r c v'", ln, path)
        try:
            r[k], c[k], v[k] = int(tok[0]), int(tok[1]), float(tok[2])
        except ValueError:
            raise ParseError("malformed entry line", ln, path) from None
        if not (0 <= r[k] < nr and 0 <= c[k] < nc):
            raise ParseError(f"entry ({r[k]}, {c[k]}) out of range", ln, path)
    rd.end()
    return sp.csr_matrix((v, (r, c)), shape=(nr, nc))


def write_spm(M, path):
    with open(path, "w") as fh:
        fh.write(format_spm(M))


def read_spm(path):
    with open(path) as fh:
        return parse_spm(fh.read(), path=str(path))


def dump_pyramid(pyr, directory):
    """Write ``scale_<s>.mrf`` and ``interp_<s>.spm`` files; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for s, e in enumerate(pyr.scales):
        p = os.path.join(directory, f"scale_{s}.mrf")
        write_mrf(e, p)
        paths.append(p)
    for s, P in enumerate(pyr.interps):
        p = os.path.join(directory, f"interp_{s}.spm")
        write_spm(P, p)
        paths.append(p)
    return paths
