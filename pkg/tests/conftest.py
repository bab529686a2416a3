import os

import numpy as np
import pytest

from wsgat.graph import SignedWeightedGraph

DATA_DIR = os.environ.get("WSGAT_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "data"))


def dataset_path(name):
    """Raw dataset file if present, else None (real datasets are not shipped)."""
    candidates = {
        "bitcoin-alpha": ["soc-sign-bitcoinalpha.csv", "bitcoin-alpha.csv", "bitcoin-alpha.tsv"],
        "bitcoin-otc": ["soc-sign-bitcoinotc.csv", "bitcoin-otc.csv", "bitcoin-otc.tsv"],
        "advogato": ["advogato.tsv", "advogato.edges"],
        "epinions": ["epinions.tsv", "soc-sign-epinions.txt"],
    }
    for fname in candidates[name]:
        p = os.path.join(DATA_DIR, fname)
        if os.path.exists(p):
            return p
    return None


def require_dataset(name):
    p = dataset_path(name)
    if p is None:
        pytest.skip(f"dataset {name} not present under {os.path.abspath(DATA_DIR)} "
                    "(no network in this environment; place the raw file there to run)")
    return p


def toy_signed_graph(n=10, seed=0, p=0.4):
    """Random signed weighted digraph used across tests."""
    rng = np.random.default_rng(seed)
    src, dst, w = [], [], []
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < p:
                src.append(i)
                dst.append(j)
                weight = rng.uniform(0.1, 1.0) * (1 if rng.random() < 0.6 else -1)
                w.append(weight)
    return SignedWeightedGraph.from_edges(n, src, dst, w)
