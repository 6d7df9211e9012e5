"""Matrix Market "array real general" reader/writer.

Only the dense array flavor is supported (one value per line, column-major),
which is all the experiment artifacts need.  Values are written with Python's
shortest round-trip repr, so save -> load reproduces every float bit for bit.
"""

import numpy as np

from .errors import IOFailure

HEADER = "%%MatrixMarket matrix array real general"


def write_matrix(path, a):
    """Write a 2-d float array to `path` in Matrix Market array format."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise IOFailure("write_matrix: expected a 1-d or 2-d array")
    m, n = a.shape
    try:
        with open(path, "w") as fh:
            fh.write(HEADER + "\n")
            fh.write("%d %d\n" % (m, n))
            for j in range(n):
                col = a[:, j]
                fh.write("\n".join(repr(float(v)) for v in col))
                fh.write("\n")
    except OSError as exc:
        raise IOFailure("write_matrix: %s" % exc) from exc


def read_matrix(path):
    """Read a Matrix Market array file back into an m x n float array."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IOFailure("read_matrix: %s" % exc) from exc
    if not lines:
        raise IOFailure("read_matrix: %s is empty" % path)
    head = lines[0].split()
    want = HEADER.split()
    if len(head) != len(want) or [w.lower() for w in head] != [
        w.lower() for w in want
    ]:
        raise IOFailure(
            "read_matrix: %s: unsupported header %r (need %r)" % (path, lines[0], HEADER)
        )
    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise IOFailure("read_matrix: %s has no size line" % path)
    dims = body[0].split()
    if len(dims) != 2:
        raise IOFailure("read_matrix: %s: bad size line %r" % (path, body[0]))
    try:
        m, n = int(dims[0]), int(dims[1])
    except ValueError as exc:
        raise IOFailure("read_matrix: %s: bad size line %r" % (path, body[0])) from exc
    if m < 1 or n < 1:
        raise IOFailure("read_matrix: %s: nonpositive dimensions" % path)
    entries = body[1:]
    if len(entries) != m * n:
        raise IOFailure(
            "read_matrix: %s: expected %d entries, found %d" % (path, m * n, len(entries))
        )
    try:
        values = np.array([float(v) for v in entries])
    except ValueError as exc:
        raise IOFailure("read_matrix: %s: non-numeric entry (%s)" % (path, exc)) from exc
    if not np.all(np.isfinite(values)):
        raise IOFailure("read_matrix: %s contains non-finite entries" % path)
    return values.reshape((n, m)).T.copy()
