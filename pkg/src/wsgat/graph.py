"""Signed weighted directed graphs: loading, normalization, splits, negative sampling."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGraphError, GraphParseError, SamplingExhaustedError


def _build_csr(num_nodes, src, dst, weight):
    """CSR over (src -> dst): returns (indptr, indices, data) sorted by src then dst."""
    order = np.lexsort((dst, src))
    indices = dst[order]
    data = weight[order]
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, indices, data


@dataclass(frozen=True)
class SignedWeightedGraph:
    """Immutable directed graph with signed, nonzero real edge weights.

    Node ids are contiguous ints in [0, num_nodes). ``src``, ``dst``, ``weight``
    are parallel arrays of the (deduplicated, loop-free) edge list. Both CSR
    directions describe the same edge multiset.
    """

    num_nodes: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    node_labels: tuple = ()
    csr_out: tuple = field(default=None, repr=False)
    csr_in: tuple = field(default=None, repr=False)

    @staticmethod
    def from_edges(num_nodes, src, dst, weight, node_labels=()):
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        weight = np.asarray(weight, dtype=np.float64)
        if len(src) == 0:
            raise EmptyGraphError("graph has no edges")
        if np.any(src == dst):
            raise ValueError("self-loops are not allowed in the stored edge list")
        if not np.all(np.isfinite(weight)) or np.any(weight == 0.0):
            raise ValueError("edge weights must be finite and nonzero")
        pairs = set(zip(src.tolist(), dst.tolist()))
        if len(pairs) != len(src):
            raise ValueError("duplicate (src, dst) pairs")
        csr_out = _build_csr(num_nodes, src, dst, weight)
        csr_in = _build_csr(num_nodes, dst, src, weight)
        g = SignedWeightedGraph(num_nodes, src, dst, weight, tuple(node_labels), csr_out, csr_in)
        for arr in (g.src, g.dst, g.weight):
            arr.setflags(write=False)
        return g

    @property
    def num_edges(self):
        return len(self.src)

    def edge_set(self):
        return set(zip(self.src.tolist(), self.dst.tolist()))

    def fraction_positive(self):
        return float(np.mean(self.weight > 0))

    def in_edges(self, i):
        """(sources, weights) of edges pointing at node i."""
        indptr, indices, data = self.csr_in
        return indices[indptr[i]:indptr[i + 1]], data[indptr[i]:indptr[i + 1]]

    def out_edges(self, i):
        indptr, indices, data = self.csr_out
        return indices[indptr[i]:indptr[i + 1]], data[indptr[i]:indptr[i + 1]]


def load_edge_list(path, fmt="tsv3", symmetrize=False):
    """Parse an edge list file into a SignedWeightedGraph.

    tsv3: "src<TAB>dst<TAB>weight" with '#' comment lines.
    csv4: "SOURCE,TARGET,RATING,TIME" (header optional, TIME ignored).

    Duplicate (src, dst) pairs keep the last occurrence; self-loops are dropped.
    With ``symmetrize`` both arcs are emitted for every input line (undirected
    inputs such as the advogato variant).
    """
    if fmt not in ("tsv3", "csv4"):
        raise ValueError(f"unknown format {fmt!r}")
    if not os.path.exists(path):
        raise FileNotFoundError(path)

    raw = []  # (src_label, dst_label, weight) in file order
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if fmt == "tsv3":
                parts = line.split("\t")
                if len(parts) == 1:
                    parts = line.split()
                if len(parts) != 3:
                    raise GraphParseError(path, lineno, f"expected 3 fields, got {len(parts)}")
                s, d, w = parts
            else:
                parts = line.split(",")
                if len(parts) < 3:
                    raise GraphParseError(path, lineno, f"expected >=3 comma fields, got {len(parts)}")
                s, d, w = parts[0], parts[1], parts[2]
                if lineno == 1 and not _is_number(w):
                    continue  # header row
            try:
                wv = float(w)
            except ValueError:
                raise GraphParseError(path, lineno, f"bad weight {w!r}") from None
            if not np.isfinite(wv):
                raise GraphParseError(path, lineno, f"non-finite weight {w!r}")
            if wv == 0.0:
                raise GraphParseError(path, lineno, "zero weight (0 is reserved for non-existent links)")
            s, d = s.strip(), d.strip()
            raw.append((s, d, wv))
            if symmetrize and s != d:
                raw.append((d, s, wv))

    if not raw:
        raise EmptyGraphError(f"{path}: no edges parsed")

    labels = sorted({s for s, _, _ in raw} | {d for _, d, _ in raw}, key=_label_key)
    index = {lab: i for i, lab in enumerate(labels)}
    dedup = {}  # (src, dst) -> weight, last occurrence wins
    for s, d, w in raw:
        si, di = index[s], index[d]
        if si == di:
            continue
        dedup[(si, di)] = w
    if not dedup:
        raise EmptyGraphError(f"{path}: only self-loops present")

    items = sorted(dedup.items())
    src = np.array([k[0] for k, _ in items], dtype=np.int64)
    dst = np.array([k[1] for k, _ in items], dtype=np.int64)
    weight = np.array([v for _, v in items], dtype=np.float64)
    return SignedWeightedGraph.from_edges(len(labels), src, dst, weight, labels)


def _label_key(lab):
    # numeric labels sort numerically so ingestion is stable across exports
    try:
        return (0, float(lab), lab)
    except ValueError:
        return (1, 0.0, lab)


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def save_edge_list(g, path):
    """Write tsv3; load_edge_list(save_edge_list(g)) reproduces the edge multiset."""
    with open(path, "w", encoding="utf-8") as f:
        labels = g.node_labels if g.node_labels else [str(i) for i in range(g.num_nodes)]
        for s, d, w in zip(g.src, g.dst, g.weight):
            f.write(f"{labels[s]}\t{labels[d]}\t{float(w)!r}\n")


def normalize_weights(g, mode="signed_unit"):
    """Rescale weights by the max absolute weight.

    unit_abs:    w -> |w| / max|w|   (range (0, 1])
    signed_unit: w -> w / max|w|     (range [-1, 1] minus 0)
    """
    if mode not in ("unit_abs", "signed_unit"):
        raise ValueError(f"unknown mode {mode!r}")
    scale = np.max(np.abs(g.weight))
    if scale <= 0:
        raise ValueError("max |weight| must be positive")
    w = np.abs(g.weight) / scale if mode == "unit_abs" else g.weight / scale
    return SignedWeightedGraph.from_edges(g.num_nodes, g.src.copy(), g.dst.copy(), w, g.node_labels)


@dataclass(frozen=True)
class EdgeSplit:
    """80/20-style split with sampled negatives.

    test_pos is disjoint from train_graph's edges; |train_neg| matches the
    train edge count and |test_neg| matches |test_pos|; no negative pair is an
    original edge or a self pair.
    """

    train_graph: SignedWeightedGraph
    test_pos: np.ndarray      # (k, 3) columns src, dst, weight
    train_neg: np.ndarray     # (m, 2)
    test_neg: np.ndarray      # (k, 2)
    seed: int


def split_edges(g, train_fraction=0.8, seed=0):
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(g.num_edges)
    n_train = int(np.floor(train_fraction * g.num_edges))
    train_idx, test_idx = perm[:n_train], perm[n_train:]

    train_graph = SignedWeightedGraph.from_edges(
        g.num_nodes, g.src[train_idx], g.dst[train_idx], g.weight[train_idx], g.node_labels
    )
    test_pos = np.column_stack([g.src[test_idx], g.dst[test_idx], g.weight[test_idx]])

    exclude = g.edge_set()
    negs = sample_negative_edges(g, n_train + len(test_idx), rng, exclude)
    train_neg, test_neg = negs[:n_train], negs[n_train:]
    return EdgeSplit(train_graph, test_pos, train_neg, test_neg, seed)


def sample_negative_edges(g, count, seed, exclude=None):
    """Sample ``count`` distinct ordered non-adjacent, non-self pairs uniformly.

    ``seed`` may be an int or a Generator (the latter for callers that chain
    several draws off one stream).
    """
    if count == 0:
        return np.zeros((0, 2), dtype=np.int64)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    forbidden = g.edge_set() if exclude is None else set(exclude)
    n = g.num_nodes
    capacity = n * n - n - len(forbidden - {(i, i) for i in range(n)})
    if count > capacity:
        raise SamplingExhaustedError(
            f"requested {count} negatives but only {capacity} non-edges exist"
        )

    out = []
    seen = set()
    max_rounds = 200
    for _ in range(max_rounds):
        need = count - len(out)
        if need == 0:
            break
        batch = rng.integers(0, n, size=(max(4 * need, 64), 2))
        for s, d in batch:
            if len(out) == count:
                break
            s, d = int(s), int(d)
            if s == d or (s, d) in forbidden or (s, d) in seen:
                continue
            seen.add((s, d))
            out.append((s, d))
    if len(out) < count:
        # dense graph: fall back to enumerating the remaining non-edges
        remaining = [
            (s, d)
            for s in range(n)
            for d in range(n)
            if s != d and (s, d) not in forbidden and (s, d) not in seen
        ]
        rng.shuffle(remaining)
        out.extend(remaining[: count - len(out)])
    if len(out) < count:
        raise SamplingExhaustedError(f"could not sample {count} negatives")
    return np.array(out, dtype=np.int64)
