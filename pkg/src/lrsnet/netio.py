"""Network ingestion and validation, preprocessing, report serialization.

File conventions: dense matrices are written as comma-separated rows (with
full-precision floats) for n <= 512 and as "i,j,value" coordinate triplets
above; edge lists are one "i j" pair per line. All writes go through a
write-temp-then-rename so partial files never appear."""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse import csr_matrix

from .model import AdjacencyMatrix

DENSE_LIMIT = 512


def atomic_write_text(path, text: str):
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_matrix(path, A: np.ndarray):
    """Dense CSV for small matrices, coordinate triplets for large ones."""
    A = np.asarray(A, dtype=float)
    lines = []
    if max(A.shape) <= DENSE_LIMIT:
        for row in A:
            lines.append(",".join(repr(float(v)) for v in row))
    else:
        lines.append(f"#coo,{A.shape[0]},{A.shape[1]}")
        ii, jj = np.nonzero(A)
        for i, j in zip(ii.tolist(), jj.tolist()):
            lines.append(f"{i},{j},{repr(float(A[i, j]))}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        first = fh.readline()
        if first.startswith("#coo"):
            _, r, c = first.strip().split(",")
            A = np.zeros((int(r), int(c)))
            for line in fh:
                if not line.strip():
                    continue
                i, j, v = line.strip().split(",")
                A[int(i), int(j)] = float(v)
            return A
        rows = [first] + fh.readlines()
    return np.array([[float(v) for v in line.replace(",", " ").split()]
                     for line in rows if line.strip()])


def load_network(path, fmt: str = "edge-list", n: int | None = None,
                 index_base: int = 1) -> AdjacencyMatrix:
    """Read an undirected network from disk.

    Edge lists hold one "i j" pair per line ('#' comments allowed); pairs
    are mirrored, duplicates collapse, and self-loops are dropped with a
    warning. Dense input is a whitespace- or comma-separated 0/1 matrix
    validated symmetric with zero diagonal.
    """
    if fmt == "dense":
        A = read_matrix(path)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"dense input must be square, got {A.shape}")
        if not np.all((A == 0) | (A == 1)):
            raise ValueError("dense input must contain only 0/1 entries")
        if not np.array_equal(A, A.T):
            raise ValueError("dense input must be symmetric")
        if np.any(np.diag(A) != 0):
            raise ValueError("dense input must have a zero diagonal")
        return AdjacencyMatrix(A)
    if fmt != "edge-list":
        raise ValueError(f"unknown format {fmt!r} (use 'edge-list' or 'dense')")

    edges = []
    loops = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(
                    f"{path}:{lineno}: expected 'i j', got {line!r}")
            try:
                i, j = int(parts[0]) - index_base, int(parts[1]) - index_base
            except ValueError as exc:
                raise ValueError(
                    f"{path}:{lineno}: vertex ids must be integers") from exc
            if i < 0 or j < 0:
                raise ValueError(f"{path}:{lineno}: index below base")
            if i == j:
                loops += 1
                continue
            edges.append((i, j))
    if n is None:
        n = max((max(i, j) for i, j in edges), default=-1) + 1
    A = np.zeros((n, n))
    for i, j in edges:
        if i >= n or j >= n:
            raise ValueError(
                f"edge ({i + index_base}, {j + index_base}) is out of range "
                f"for n = {n}")
        A[i, j] = 1.0
        A[j, i] = 1.0
    if loops:
        warnings.warn(f"dropped {loops} self-loop(s)")
    return AdjacencyMatrix(A)


def write_network(path, X: AdjacencyMatrix, fmt: str = "dense",
                  index_base: int = 1):
    """Inverse of load_network for both formats (bit-exact round trip)."""
    if fmt == "dense":
        lines = [",".join(str(int(v)) for v in row) for row in X.matrix]
        atomic_write_text(path, "\n".join(lines) + "\n")
    elif fmt == "edge-list":
        iu = np.triu_indices(X.n, k=1)
        mask = X.matrix[iu] > 0
        lines = [f"{i + index_base} {j + index_base}"
                 for i, j in zip(iu[0][mask], iu[1][mask])]
        lines.insert(0, f"# n={X.n}")
        atomic_write_text(path, "\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def preprocess(X: AdjacencyMatrix, min_degree: int):
    """Degree filter, then iterated isolated-node removal.

    Keeps nodes whose degree in the original network is >= min_degree, then
    drops nodes isolated in the induced subgraph until none remain. Returns
    the induced adjacency and the old-to-new index map.
    """
    if min_degree < 0:
        raise ValueError("min_degree must be >= 0")
    keep = np.where(X.degrees() >= min_degree)[0]
    while keep.size:
        deg = X.matrix[np.ix_(keep, keep)].sum(axis=1)
        alive = deg > 0
        if alive.all():
            break
        keep = keep[alive]
    if keep.size == 0:
        raise ValueError("preprocessing removed every node; lower --min-degree")
    sub = X.matrix[np.ix_(keep, keep)]
    mapping = {int(old): new for new, old in enumerate(keep.tolist())}
    return AdjacencyMatrix(sub), mapping


def giant_component(X: AdjacencyMatrix, node_subset):
    """Largest connected component of the induced subgraph.

    Ties go to the component containing the lowest original index. Returns
    the induced adjacency and the surviving original node ids.
    """
    nodes = np.asarray(sorted(node_subset), dtype=int)
    if nodes.size == 0:
        raise ValueError("node subset must be non-empty")
    sub = X.matrix[np.ix_(nodes, nodes)]
    ncomp, labels = connected_components(csr_matrix(sub), directed=False)
    sizes = np.bincount(labels, minlength=ncomp)
    # connected_components labels in order of first occurrence, so argmax
    # already resolves size ties toward the lowest-index component.
    best = int(np.argmax(sizes))
    members = nodes[labels == best]
    return AdjacencyMatrix(X.matrix[np.ix_(members, members)]), members


_REPORT_SECTIONS = {
    "preprocess": ("n_input", "n_kept", "dropped_low_degree",
                   "dropped_isolated", "kept_nodes"),
    "scree": ("values", "k_hat", "k_hat_overridden", "degenerate"),
    "selection": ("table_path", "heuristic", "aic", "bic"),
    "fit": ("alpha", "rank", "s_count", "objective", "iters", "converged",
            "residual", "gamma", "delta"),
    "membership": ("k", "labels_path", "coords_path", "inertia"),
    "metrics": ("m1", "m2", "m3", "m4", "rank_found"),
}


def _empty_section(name):
    return {key: None for key in _REPORT_SECTIONS[name]}


@dataclass
class Report:
    """Structured run summary; every key is present even when empty, and the
    JSON form round-trips losslessly."""

    command: str = ""
    config: dict = field(default_factory=dict)
    preprocess: dict = field(default_factory=lambda: _empty_section("preprocess"))
    scree: dict = field(default_factory=lambda: _empty_section("scree"))
    selection: dict = field(default_factory=lambda: _empty_section("selection"))
    fit: dict = field(default_factory=lambda: _empty_section("fit"))
    membership: dict = field(default_factory=lambda: _empty_section("membership"))
    metrics: dict = field(default_factory=lambda: _empty_section("metrics"))
    top_edges: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls(**json.loads(text))

    def write(self, path):
        atomic_write_text(path, self.to_json() + "\n")

    @classmethod
    def read(cls, path) -> "Report":
        with open(path) as fh:
            return cls.from_json(fh.read())


def top_edges(S: np.ndarray, count: int = 10, tol: float = 1e-8) -> list:
    """Largest off-diagonal entries of S-hat (i < j), value descending, ties
    broken lexicographically; mirrors the top-edge table of a fit report."""
    S = np.asarray(S, dtype=float)
    iu = np.triu_indices(S.shape[0], k=1)
    vals = S[iu]
    mask = np.abs(vals) > tol
    entries = sorted(
        ((float(v), int(i), int(j))
         for v, i, j in zip(vals[mask], iu[0][mask], iu[1][mask])),
        key=lambda t: (-t[0], t[1], t[2]))
    return [{"i": i, "j": j, "value": v} for v, i, j in entries[:count]]
