"""Graphs, graph signals, file loaders and node relabeling.

Two graph file formats are understood:

``edge-list-csv``
    One ``src,dst[,weight]`` row per directed edge, an optional header row,
    and ``#`` comment lines. A comment of the form ``# nodes=<N>`` declares
    the node count; node ids are then integer indices in ``[0, N)``.
    Without it, ids are arbitrary labels indexed by first appearance.
``matrix-market``
    Coordinate format, ``real``/``integer``/``pattern``/``complex`` field,
    ``general`` symmetry. Entry ``(i, j, w)`` is the edge ``i-1 -> j-1``.
"""

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import InputError, ParseError

FORMATS = ("edge-list-csv", "matrix-market")

_NODES_RE = re.compile(r"^#\s*nodes\s*[=:]\s*(\d+)\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class NodeMeta:
    id: str
    latitude: float = float("nan")
    longitude: float = float("nan")


@dataclass(frozen=True, eq=False)
class Graph:
    """Directed weighted graph with ``[A]_ij = w`` for every edge ``(i, j, w)``.

    Instances are immutable; :meth:`adjacency` rebuilds the same dense
    matrix on every call.
    """

    node_count: int
    edges: tuple
    node_meta: tuple = None

    def __post_init__(self):
        if not isinstance(self.node_count, (int, np.integer)) or self.node_count <= 0:
            raise InputError(f"node_count must be a positive integer, got {self.node_count!r}")
        edges = tuple((int(i), int(j), w) for i, j, w in self.edges)
        seen = set()
        for i, j, w in edges:
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise InputError(f"edge ({i}, {j}) out of range for {self.node_count} nodes")
            if (i, j) in seen:
                raise InputError(f"duplicate edge ({i}, {j})")
            if w == 0 or not np.isfinite(w):
                raise InputError(f"edge ({i}, {j}) has invalid weight {w!r}")
            seen.add((i, j))
        object.__setattr__(self, "edges", edges)
        if self.node_meta is not None:
            meta = tuple(self.node_meta)
            if len(meta) != self.node_count:
                raise InputError("node_meta length does not match node_count")
            object.__setattr__(self, "node_meta", meta)

    @property
    def edge_count(self):
        return len(self.edges)

    @property
    def is_complex(self):
        return any(isinstance(w, complex) for _, _, w in self.edges)

    def adjacency(self, sparse=False):
        dtype = complex if self.is_complex else float
        n = self.node_count
        if self.edges:
            rows, cols, vals = zip(*self.edges)
        else:
            rows, cols, vals = (), (), ()
        A = sp.coo_matrix((np.asarray(vals, dtype=dtype), (rows, cols)), shape=(n, n))
        return A.tocsr() if sparse else A.toarray()

    def node_ids(self):
        if self.node_meta is None:
            return [str(i) for i in range(self.node_count)]
        return [m.id for m in self.node_meta]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.node_count == other.node_count
            and sorted(self.edges) == sorted(other.edges)
            and self.node_meta == other.node_meta
        )

    __hash__ = None

    @classmethod
    def from_adjacency(cls, A, node_meta=None):
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InputError(f"adjacency must be square, got shape {A.shape}")
        rows, cols = np.nonzero(A)
        cast = complex if np.iscomplexobj(A) else float
        edges = [(int(i), int(j), cast(A[i, j])) for i, j in zip(rows, cols)]
        return cls(A.shape[0], tuple(edges), node_meta)


@dataclass(frozen=True, eq=False)
class GraphSignal:
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.size == 0:
            raise InputError("signal values must be a non-empty 1-D vector")
        if not np.issubdtype(v.dtype, np.number) or not np.all(np.isfinite(v)):
            raise InputError("signal values must be finite numbers")
        v = v.astype(complex if np.iscomplexobj(v) else float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]


def _parse_weight(token, path, lineno):
    token = token.strip()
    try:
        return float(token)
    except ValueError:
        pass
    try:
        return complex(token.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ParseError(f"non-numeric weight {token!r}", lineno, path) from None


def _read_node_table(path):
    meta = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if lineno == 1 and row[0].strip().lower() in ("id", "node", "node_id"):
                continue
            try:
                lat = float(row[1]) if len(row) > 1 else float("nan")
                lon = float(row[2]) if len(row) > 2 else float("nan")
            except ValueError:
                raise ParseError("non-numeric coordinate", lineno, path) from None
            meta.append(NodeMeta(row[0].strip(), lat, lon))
    if not meta:
        raise ParseError("node table is empty", None, path)
    ids = [m.id for m in meta]
    if len(set(ids)) != len(ids):
        raise ParseError("duplicate node id in node table", None, path)
    return meta


def _load_edge_csv(path, node_count, nodes):
    meta = _read_node_table(nodes) if nodes is not None else None
    index = {m.id: k for k, m in enumerate(meta)} if meta else {}
    indexed = meta is not None
    rows = []
    first_data = True
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _NODES_RE.match(line)
                if m and node_count is None:
                    node_count = int(m.group(1))
                continue
            parts = next(csv.reader([line]))
            if first_data:
                first_data = False
                if parts[0].strip().lower() in ("src", "source", "from"):
                    continue
            if len(parts) not in (2, 3):
                raise ParseError(f"expected src,dst[,weight], got {len(parts)} fields", lineno, path)
            w = _parse_weight(parts[2], path, lineno) if len(parts) == 3 else 1.0
            rows.append((lineno, parts[0].strip(), parts[1].strip(), w))

    if node_count is not None:
        node_count = int(node_count)
    edges = []
    seen = {}
    for lineno, a, b, w in rows:
        ends = []
        for tok in (a, b):
            if indexed:
                if tok not in index:
                    raise ParseError(f"unknown node id {tok!r}", lineno, path)
                ends.append(index[tok])
            elif node_count is not None:
                try:
                    k = int(tok)
                except ValueError:
                    raise ParseError(f"node index {tok!r} is not an integer", lineno, path) from None
                if not 0 <= k < node_count:
                    raise ParseError(f"node index {k} out of range [0, {node_count})", lineno, path)
                ends.append(k)
            else:
                ends.append(index.setdefault(tok, len(index)))
        key = tuple(ends)
        if key in seen:
            raise ParseError(f"duplicate edge {a}->{b} (first on line {seen[key]})", lineno, path)
        if w == 0:
            raise ParseError("zero edge weight", lineno, path)
        seen[key] = lineno
        edges.append((ends[0], ends[1], w))

    if indexed:
        n = len(meta)
    elif node_count is not None:
        n = node_count
        meta = None
    else:
        n = len(index)
        meta = [NodeMeta(tok) for tok in index] if index else None
    if n == 0:
        raise ParseError("graph has no nodes; declare '# nodes=<N>' for edgeless graphs", None, path)
    return Graph(n, tuple(edges), meta)


def _load_matrix_market(path):
    with open(path) as fh:
        lines = fh.readlines()
    if not lines or not lines[0].lower().startswith("%%matrixmarket"):
        raise ParseError("missing %%MatrixMarket banner", 1, path)
    banner = lines[0].split()
    if len(banner) != 5:
        raise ParseError("malformed banner", 1, path)
    _, obj, fmt, fld, sym = (t.lower() for t in banner)
    if obj != "matrix" or fmt != "coordinate":
        raise ParseError("only 'matrix coordinate' files are supported", 1, path)
    if fld not in ("real", "integer", "pattern", "complex"):
        raise ParseError(f"unsupported field {fld!r}", 1, path)
    if sym != "general":
        raise ParseError(f"unsupported symmetry {sym!r}; directed graphs need 'general'", 1, path)

    k = 1
    while k < len(lines) and (not lines[k].strip() or lines[k].startswith("%")):
        k += 1
    if k == len(lines):
        raise ParseError("missing size line", None, path)
    try:
        nr, nc, nnz = (int(t) for t in lines[k].split())
    except ValueError:
        raise ParseError("malformed size line", k + 1, path) from None
    if nr != nc:
        raise ParseError(f"adjacency must be square, got {nr}x{nc}", k + 1, path)
    ntok = {"pattern": 2, "complex": 4}.get(fld, 3)
    edges = []
    seen = {}
    for lineno in range(k + 2, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line or line.startswith("%"):
            continue
        tok = line.split()
        if len(tok) != ntok:
            raise ParseError(f"expected {ntok} fields, got {len(tok)}", lineno, path)
        try:
            i, j = int(tok[0]) - 1, int(tok[1]) - 1
            if fld == "pattern":
                w = 1.0
            elif fld == "complex":
                w = complex(float(tok[2]), float(tok[3]))
            else:
                w = float(tok[2])
        except ValueError:
            raise ParseError("non-numeric entry", lineno, path) from None
        if not (0 <= i < nr and 0 <= j < nc):
            raise ParseError(f"index ({i + 1}, {j + 1}) out of range", lineno, path)
        if (i, j) in seen:
            raise ParseError(f"duplicate entry ({i + 1}, {j + 1})", lineno, path)
        if w == 0:
            raise ParseError("explicit zero entry", lineno, path)
        seen[(i, j)] = lineno
        edges.append((i, j, w))
    if len(edges) != nnz:
        raise ParseError(f"size line declares {nnz} entries, found {len(edges)}", None, path)
    return Graph(nr, tuple(edges))


def _infer_format(path):
    suffix = Path(path).suffix.lower()
    return "matrix-market" if suffix in (".mtx", ".mm") else "edge-list-csv"


def load_graph(path, format=None, node_count=None, nodes=None):
    """Read a graph from ``path``.

    Parameters
    ----------
    path : str or Path
    format : {"edge-list-csv", "matrix-market"}, optional
        Inferred from the suffix (``.mtx``/``.mm`` means Matrix Market) when
        omitted.
    node_count : int, optional
        Declares integer node indices for edge-list files; overrides a
        ``# nodes=`` comment.
    nodes : str or Path, optional
        Node table CSV (``id,lat,lon``) fixing node order for edge lists.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    fmt = format or _infer_format(path)
    if fmt == "edge-list-csv":
        return _load_edge_csv(path, node_count, nodes)
    if fmt == "matrix-market":
        return _load_matrix_market(path)
    raise InputError(f"unknown graph format {fmt!r}; expected one of {FORMATS}")


def _fmt_weight(w):
    if isinstance(w, complex):
        return repr(w)
    return repr(float(w))


def save_graph(graph, path, format=None):
    """Write ``graph`` so that :func:`load_graph` reproduces it exactly.

    Node metadata is not part of either graph format and is dropped.
    """
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt == "edge-list-csv":
        with open(path, "w", newline="") as fh:
            fh.write(f"# nodes={graph.node_count}\n")
            fh.write("src,dst,weight\n")
            for i, j, w in graph.edges:
                fh.write(f"{i},{j},{_fmt_weight(w)}\n")
    elif fmt == "matrix-market":
        field_ = "complex" if graph.is_complex else "real"
        with open(path, "w") as fh:
            fh.write(f"%%MatrixMarket matrix coordinate {field_} general\n")
            fh.write(f"{graph.node_count} {graph.node_count} {graph.edge_count}\n")
            for i, j, w in graph.edges:
                if field_ == "complex":
                    w = complex(w)
                    fh.write(f"{i + 1} {j + 1} {w.real!r} {w.imag!r}\n")
                else:
                    fh.write(f"{i + 1} {j + 1} {float(w)!r}\n")
    else:
        raise InputError(f"unknown graph format {fmt!r}; expected one of {FORMATS}")


def load_signal(path, graph, label=None):
    """Read a ``node_id,value`` CSV aligned to ``graph``'s node order.

    Node ids are matched against ``graph.node_meta`` ids when metadata is
    present, otherwise they must be integer node indices. Nodes that are not
    listed get value 0.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    n = graph.node_count
    lookup = None
    if graph.node_meta is not None:
        lookup = {m.id: k for k, m in enumerate(graph.node_meta)}
    values = {}
    first = True
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if first:
                first = False
                if row[0].strip().lower() in ("node", "node_id", "id"):
                    continue
            if len(row) != 2:
                raise ParseError(f"expected node_id,value, got {len(row)} fields", lineno, path)
            tok = row[0].strip()
            if lookup is not None and tok in lookup:
                k = lookup[tok]
            else:
                try:
                    k = int(tok)
                except ValueError:
                    raise ParseError(f"unknown node id {tok!r}", lineno, path) from None
                if lookup is not None or not 0 <= k < n:
                    raise ParseError(f"unknown node id {tok!r}", lineno, path)
            try:
                values[k] = _parse_weight(row[1], path, lineno)
            except ParseError:
                raise ParseError(f"non-numeric value {row[1].strip()!r}", lineno, path) from None
    dtype = complex if any(isinstance(v, complex) for v in values.values()) else float
    s = np.zeros(n, dtype=dtype)
    for k, v in values.items():
        s[k] = v
    return GraphSignal(s, label if label is not None else path.stem)


def check_permutation(perm, n):
    perm = np.asarray(perm)
    if perm.shape != (n,) or not np.issubdtype(perm.dtype, np.integer):
        raise InputError(f"permutation must be {n} integers")
    if not np.array_equal(np.sort(perm), np.arange(n)):
        raise InputError("permutation is not a bijection on the node indices")
    return perm


def permutation_matrix(perm):
    """``P`` with ``P[perm[i], i] = 1``: node ``i`` moves to ``perm[i]``."""
    perm = check_permutation(perm, len(perm))
    n = perm.shape[0]
    P = np.zeros((n, n))
    P[perm, np.arange(n)] = 1.0
    return P


def permute_graph(graph, perm):
    """Relabel nodes so the new adjacency is ``P A P^T``."""
    perm = check_permutation(perm, graph.node_count)
    edges = tuple((int(perm[i]), int(perm[j]), w) for i, j, w in graph.edges)
    meta = None
    if graph.node_meta is not None:
        meta = [None] * graph.node_count
        for i, m in enumerate(graph.node_meta):
            meta[perm[i]] = m
    return Graph(graph.node_count, edges, meta)


def inverse_permutation(perm):
    perm = np.asarray(perm)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.shape[0])
    return inv
