"""Matrix Market I/O and problem bundles.

A bundle is either a directory holding ``A.mtx``, ``b.mtx`` and optionally
``B.mtx``, ``d.mtx``, or a JSON manifest ``{"A": path, "B": path, "b": path,
"d": path}`` with paths relative to the manifest.  Missing ``B``/``d`` mean
``s = 0``.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .core import LseProblem


def read_matrix(path) -> np.ndarray:
    M = scipy.io.mmread(str(path))
    if sp.issparse(M):
        M = M.toarray()
    return np.asarray(M, dtype=float)


def read_vector(path) -> np.ndarray:
    M = read_matrix(path)
    if M.ndim == 2 and M.shape[1] != 1 and M.shape[0] != 1 and M.size:
        raise ValueError(f"{path}: expected a vector, got shape {M.shape}")
    return M.reshape(-1)


def write_matrix(path, M, comment: str = "") -> None:
    """Write a dense array in Matrix Market array format, atomically."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        # a file object stops mmwrite from appending its own extension
        with os.fdopen(fd, "wb") as fh:
            scipy.io.mmwrite(fh, M, comment=comment, precision=17)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text_atomic(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _bundle_paths(path: Path) -> dict[str, Path | None]:
    if path.is_dir():
        return {k: (path / f"{k}.mtx") if (path / f"{k}.mtx").exists() or k in "Ab" else None
                for k in ("A", "B", "b", "d")}
    with open(path) as fh:
        manifest = json.load(fh)
    base = path.parent
    return {k: (base / manifest[k]) if manifest.get(k) else None for k in ("A", "B", "b", "d")}


def read_problem(path) -> LseProblem:
    paths = _bundle_paths(Path(path))
    A = read_matrix(paths["A"])
    b = read_vector(paths["b"])
    n = A.shape[1]
    B = read_matrix(paths["B"]) if paths["B"] is not None else np.zeros((0, n))
    if B.ndim == 2 and B.size == 0:
        B = B.reshape(0, n) if B.shape[0] == 0 or B.shape[1] == 0 else B
    d = read_vector(paths["d"]) if paths["d"] is not None else np.zeros(B.shape[0])
    return LseProblem(A, B, b, d)


def write_problem(directory, problem: LseProblem) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_matrix(directory / "A.mtx", problem.A)
    write_matrix(directory / "b.mtx", problem.b)
    if problem.s:
        write_matrix(directory / "B.mtx", problem.B)
        write_matrix(directory / "d.mtx", problem.d)
